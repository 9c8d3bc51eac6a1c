//! Synthetic node- and graph-classification datasets, the TU text format,
//! and cross-validation splits.

mod property;
mod shapes;
mod split;
mod tu;

pub use property::{gen_property_dataset, gen_property_dataset_sized, PropertyDataset, PER_CLASS, PROPERTY_DEGREE, PROPERTY_NODES};
pub use shapes::{
    add_random_edges, gen_shape_cycle, ShapeConfig, ShapeKind, ShapeTemplate, SyntheticNodeDataset, CYCLE_LEN, INSTANCES,
    PERTURB_FRACTION,
};
pub use split::{derive_seed, kfold_split, stratified_holdout, Fold};
pub use tu::{tu_load, tu_write, Sidecar, TuDataset, SIDECAR_FILE};
