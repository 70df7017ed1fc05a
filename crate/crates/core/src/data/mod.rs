//! From a raw dated panel to the standardized design the estimators consume.

mod design;
mod impute;
pub mod io;
mod panel;
mod split;
mod transform;

pub use design::{
    build_design, inverse_scale, ColumnGroup, DensityForecast, DesignMatrix, DesignSpec, FeatureLayout,
    Scaler, TREND_GROUP,
};
pub use impute::{impute_missing, ImputeConfig, ImputeReport};
pub use panel::{TimeSeriesPanel, TransformCode};
pub use split::{draw_block_split, oob_length, validation_block, BlockSplit};
pub use transform::apply_transforms;
