//! Graph construction from features, synthetic instances, sampling
//! protocols and file formats.

pub mod io;
mod knn;
pub mod rng;
mod sampling;
mod synth;

pub use knn::{
    build_knn_graph, pairwise_distances, FeatureTable, GraphBuildSpec, Metric, MissingPolicy,
    Normalization,
};
pub use sampling::{corrupt_labels, sample_mask, Corruption, LabelKind};
pub use synth::{synth_instance, OutlierScale, SmoothRecipe, SyntheticInstance, SyntheticSpec};
