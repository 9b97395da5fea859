//! Batch orchestration: manifests and configuration, per-mesh descriptors
//! with an on-disk cache, extraction, training, leave-one-out evaluation,
//! prediction and synthetic data.

mod config;
pub mod descriptor;
mod evaluate;
mod extract;
pub mod manifest;
mod model;
pub mod synth;

pub use config::PipelineConfig;
pub use descriptor::{describe_mesh, describe_mesh_file, DescriptorCache, MeshDescriptor, MeshScalars};
pub use evaluate::{evaluate, DictionaryMode};
pub use extract::{
    describe_manifest, encode, encode_all, extract, fit_dictionary, DescriptorSet, FeatureRow, FeatureTable, Sample,
    SkippedMesh, FEATURES_VERSION,
};
pub use manifest::{DatasetManifest, ManifestRow};
pub use model::{predict_mesh, train, ModelBundle, Prediction, BUNDLE_VERSION};
