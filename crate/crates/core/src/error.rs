use thiserror::Error;

/// Errors raised anywhere in the estimation and evaluation pipeline.
#[derive(Debug, Error)]
pub enum HnnError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in layer {layer}: {detail}")]
    Numeric { layer: usize, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("out-of-bag coverage gap: {0}")]
    Coverage(String),

    #[error("optimizer did not converge: {0}")]
    Convergence(String),

    #[error("date alignment: {0}")]
    Alignment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("in period {period}: {source}")]
    Period {
        period: String,
        #[source]
        source: Box<HnnError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HnnError {
    /// Stable machine-readable class used by the CLI for its exit status.
    pub fn class(&self) -> &'static str {
        match self {
            HnnError::Shape(_) => "shape",
            HnnError::Numeric { .. } => "numeric",
            HnnError::Domain(_) => "domain",
            HnnError::State(_) => "state",
            HnnError::Config(_) => "config",
            HnnError::Coverage(_) => "coverage",
            HnnError::Convergence(_) => "convergence",
            HnnError::Alignment(_) => "alignment",
            HnnError::Parse(_) => "parse",
            HnnError::Period { source, .. } => source.class(),
            HnnError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "parse" | "io" => 3,
            "domain" | "shape" | "alignment" => 4,
            "numeric" | "convergence" => 5,
            "coverage" => 6,
            _ => 1,
        }
    }

    pub fn in_period(self, period: impl Into<String>) -> Self {
        HnnError::Period {
            period: period.into(),
            source: Box::new(self),
        }
    }
}

impl From<csv::Error> for HnnError {
    fn from(e: csv::Error) -> Self {
        HnnError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for HnnError {
    fn from(e: serde_json::Error) -> Self {
        HnnError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HnnError>;
