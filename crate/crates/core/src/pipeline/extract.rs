use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descriptor::{describe_mesh_file, DescriptorCache, MeshDescriptor};
use super::manifest::{DatasetManifest, ManifestRow};
use super::PipelineConfig;
use crate::encoding::{
    assemble_features, concatenate, feature_names, learn_dictionary_with, pool, soft_assign, Dictionary, FeatureVector,
};
use crate::{Error, Result};

pub const FEATURES_VERSION: u32 = 1;

/// A mesh left out of a run because it failed validation or processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedMesh {
    pub id: String,
    pub reason: String,
}

/// One manifest row together with its processed mesh.
#[derive(Debug, Clone)]
pub struct Sample {
    pub row: ManifestRow,
    pub descriptor: MeshDescriptor,
}

impl Sample {
    pub fn id(&self) -> &str {
        &self.row.mesh_path
    }
}

/// Processed samples in canonical (id-sorted) order.
#[derive(Debug, Clone)]
pub struct DescriptorSet {
    pub samples: Vec<Sample>,
    pub skipped: Vec<SkippedMesh>,
}

impl DescriptorSet {
    pub fn cache_hits(&self) -> usize {
        self.samples.iter().filter(|s| s.descriptor.cache_hit).count()
    }

    pub fn target(&self, name: &str) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| {
                s.row
                    .targets
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::Argument(format!("unknown target column {name:?}")))
            })
            .collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id().to_string()).collect()
    }
}

/// Processes every mesh of the manifest in parallel. Failures either abort
/// the run with a summary naming each bad row, or with `skip_bad` are
/// recorded and left out.
pub fn describe_manifest(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    cache: &DescriptorCache,
    skip_bad: bool,
) -> Result<DescriptorSet> {
    config.check()?;
    let mut rows: Vec<&ManifestRow> = manifest.rows().iter().collect();
    rows.sort_by(|a, b| a.mesh_path.cmp(&b.mesh_path));
    let results: Vec<(ManifestRow, Result<MeshDescriptor>)> = rows
        .par_iter()
        .map(|row| {
            let path = manifest.resolve(row);
            ((*row).clone(), describe_mesh_file(&row.mesh_path, &path, config, cache))
        })
        .collect();

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (row, result) in results {
        match result {
            Ok(descriptor) => samples.push(Sample { row, descriptor }),
            Err(e) => failures.push((row.mesh_path, e)),
        }
    }
    if !failures.is_empty() && !skip_bad {
        let all_numerical = failures.iter().all(|(_, e)| matches!(e, Error::Numerical(_)));
        let summary = failures.iter().map(|(id, e)| format!("  {id}: {e}")).collect::<Vec<_>>().join("\n");
        let message = format!("{} of {} meshes failed:\n{summary}", failures.len(), rows.len());
        return Err(if all_numerical { Error::Numerical(message) } else { Error::Structural(message) });
    }
    let skipped = failures
        .into_iter()
        .map(|(id, e)| SkippedMesh { id, reason: e.to_string() })
        .collect();
    Ok(DescriptorSet { samples, skipped })
}

/// Learns the geometric-word dictionary from the signatures of `samples`.
pub fn fit_dictionary(samples: &[&Sample], config: &PipelineConfig) -> Result<Dictionary> {
    let signatures: Vec<_> = samples.iter().map(|s| &s.descriptor.signature).collect();
    let data = concatenate(&signatures)?;
    learn_dictionary_with(&data, config.dictionary_k, config.seed, &config.kmeans_options())
}

/// Histogram plus global scalars for one processed mesh.
pub fn encode(descriptor: &MeshDescriptor, carcass_weight: f64, dict: &Dictionary) -> Result<FeatureVector> {
    let codes = soft_assign(&descriptor.signature, dict)?;
    let s = &descriptor.scalars;
    assemble_features(pool(&codes), s.geodesic_diameter, s.volume, carcass_weight)
}

pub fn encode_all(samples: &[Sample], dict: &Dictionary) -> Result<Vec<FeatureVector>> {
    samples
        .iter()
        .map(|s| encode(&s.descriptor, s.row.carcass_weight, dict))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub id: String,
    pub features: Vec<f64>,
    pub targets: BTreeMap<String, f64>,
}

/// Output of `extract`: the `n × (k + 3)` feature matrix with column names,
/// the dictionary that produced it and the configuration snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub config: PipelineConfig,
    pub feature_names: Vec<String>,
    pub dictionary: Dictionary,
    pub rows: Vec<FeatureRow>,
    pub skipped: Vec<SkippedMesh>,
}

#[derive(Serialize, Deserialize)]
struct FeatureFile {
    version: u32,
    config: PipelineConfig,
    feature_names: Vec<String>,
    dictionary: serde_json::Value,
    samples: Vec<FeatureRow>,
    skipped: Vec<SkippedMesh>,
}

impl FeatureTable {
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.feature_names.len();
        DMatrix::from_fn(self.rows.len(), d, |i, j| self.rows[i].features[j])
    }

    pub fn target(&self, name: &str) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.targets.get(name).copied().ok_or_else(|| {
                    let known: Vec<&str> = r.targets.keys().map(String::as_str).collect();
                    Error::Argument(format!("unknown target column {name:?}; available: {}", known.join(", ")))
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = FeatureFile {
            version: FEATURES_VERSION,
            config: self.config.clone(),
            feature_names: self.feature_names.clone(),
            dictionary: self.dictionary.to_value(),
            samples: self.rows.clone(),
            skipped: self.skipped.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("feature file is not valid JSON: {e}")))?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(FEATURES_VERSION as u64) {
            return Err(Error::Format(format!("unsupported feature file version {version:?}")));
        }
        let file: FeatureFile = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        let d = file.feature_names.len();
        if d != file.config.feature_dim() || file.samples.iter().any(|r| r.features.len() != d) {
            return Err(Error::Format("feature rows do not match the column names".into()));
        }
        Ok(Self {
            config: file.config,
            feature_names: file.feature_names,
            dictionary: Dictionary::from_value(file.dictionary)?,
            rows: file.samples,
            skipped: file.skipped,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Full extraction: describe every mesh, learn the dictionary on all of
/// them and encode each into a feature row.
pub fn extract(set: &DescriptorSet, config: &PipelineConfig) -> Result<FeatureTable> {
    if set.samples.is_empty() {
        return Err(Error::Argument("no usable meshes to extract".into()));
    }
    let all: Vec<&Sample> = set.samples.iter().collect();
    let dictionary = fit_dictionary(&all, config)?;
    let features = encode_all(&set.samples, &dictionary)?;
    let rows = set
        .samples
        .iter()
        .zip(features)
        .map(|(s, f)| FeatureRow {
            id: s.id().to_string(),
            features: f.to_vec(),
            targets: s.row.targets.clone(),
        })
        .collect();
    Ok(FeatureTable {
        config: config.clone(),
        feature_names: feature_names(config.dictionary_k),
        dictionary,
        rows,
        skipped: set.skipped.clone(),
    })
}
