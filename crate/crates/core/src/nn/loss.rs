use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{HnnError, Result};

/// Lower bound applied to the variance inside the likelihood only.
pub const VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub d_mean: Array1<f64>,
    /// Empty for losses that do not involve a variance.
    pub d_var: Array1<f64>,
}

fn same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(HnnError::Shape(format!("{what}: lengths {a} and {b} differ")));
    }
    Ok(())
}

/// `Σ_t (y_t − μ_t)² / σ²_t + log σ²_t` and its partials in `μ` and `σ²`.
pub fn gaussian_nll(
    y: ArrayView1<'_, f64>,
    mean: ArrayView1<'_, f64>,
    variance: ArrayView1<'_, f64>,
) -> Result<LossOutput> {
    same_len(y.len(), mean.len(), "target/mean")?;
    same_len(y.len(), variance.len(), "target/variance")?;
    if let Some(v) = variance.iter().find(|v| !(**v > 0.0)) {
        return Err(HnnError::Domain(format!("nonpositive variance {v} in likelihood")));
    }
    let n = y.len();
    let mut d_mean = Array1::zeros(n);
    let mut d_var = Array1::zeros(n);
    let mut loss = 0.0;
    Zip::from(&mut d_mean)
        .and(&mut d_var)
        .and(y)
        .and(mean)
        .and(variance)
        .for_each(|dm, dv, &yt, &mt, &vt| {
            let floored = vt < VARIANCE_FLOOR;
            let v = vt.max(VARIANCE_FLOOR);
            let e = yt - mt;
            loss += e * e / v + v.ln();
            *dm = -2.0 * e / v;
            *dv = if floored { 0.0 } else { 1.0 / v - e * e / (v * v) };
        });
    Ok(LossOutput { loss, d_mean, d_var })
}

/// `Σ_t (y_t − μ_t)²`.
pub fn squared_error(y: ArrayView1<'_, f64>, mean: ArrayView1<'_, f64>) -> Result<LossOutput> {
    same_len(y.len(), mean.len(), "target/mean")?;
    let e = &y - &mean;
    Ok(LossOutput {
        loss: e.dot(&e),
        d_mean: e * -2.0,
        d_var: Array1::zeros(0),
    })
}
