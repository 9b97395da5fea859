use std::path::Path;

use serde::{Deserialize, Serialize};

use super::descriptor::{describe_mesh_file, DescriptorCache, MeshDescriptor};
use super::extract::{encode, FeatureTable};
use super::PipelineConfig;
use crate::encoding::{Dictionary, FeatureVector};
use crate::regression::{fit_pls_with, predict, PlsModel};
use crate::{Error, Result};

pub const BUNDLE_VERSION: u32 = 1;

/// Everything needed to predict from a new mesh: the extraction settings,
/// the dictionary, the column order and the fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub target: String,
    pub config: PipelineConfig,
    pub feature_names: Vec<String>,
    pub dictionary: Dictionary,
    pub model: PlsModel,
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    version: u32,
    target: String,
    config: PipelineConfig,
    feature_names: Vec<String>,
    dictionary: serde_json::Value,
    model: serde_json::Value,
}

impl ModelBundle {
    /// Checks that dictionary, model and column names agree with the
    /// configuration snapshot.
    pub fn check(&self) -> Result<()> {
        let c = &self.config;
        let problems = [
            (self.dictionary.k() != c.dictionary_k, "dictionary size differs from dictionary_k"),
            (self.dictionary.p() != c.signature_dim(), "dictionary dimension differs from the resolution"),
            (self.feature_names.len() != c.feature_dim(), "feature names do not match dictionary_k"),
            (self.model.dim() != c.feature_dim(), "model dimension does not match the feature length"),
        ];
        match problems.iter().find(|(bad, _)| *bad) {
            Some((_, message)) => Err(Error::Format(format!("inconsistent bundle: {message}"))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = BundleFile {
            version: BUNDLE_VERSION,
            target: self.target.clone(),
            config: self.config.clone(),
            feature_names: self.feature_names.clone(),
            dictionary: self.dictionary.to_value(),
            model: self.model.to_value(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("bundle is not valid JSON: {e}")))?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(BUNDLE_VERSION as u64) {
            return Err(Error::Format(format!("unsupported bundle version {version:?}")));
        }
        let file: BundleFile = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        let bundle = Self {
            target: file.target,
            config: file.config,
            feature_names: file.feature_names,
            dictionary: Dictionary::from_value(file.dictionary)?,
            model: PlsModel::from_value(file.model)?,
        };
        bundle.check()?;
        Ok(bundle)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fails unless `config` describes the same extraction as the bundle.
    pub fn ensure_compatible(&self, config: &PipelineConfig) -> Result<()> {
        if *config != self.config {
            return Err(Error::Format(format!(
                "configuration differs from the one stored in the bundle (bundle: {})",
                serde_json::to_string(&self.config)?
            )));
        }
        Ok(())
    }
}

/// Fits PLS on the extracted features. Only `pls_components` and
/// `feature_scaling` are taken from `config`; every extraction setting must
/// match the feature table.
pub fn train(table: &FeatureTable, target: &str, config: &PipelineConfig) -> Result<ModelBundle> {
    let snapshot = PipelineConfig {
        pls_components: config.pls_components,
        feature_scaling: config.feature_scaling,
        ..table.config.clone()
    };
    if snapshot != *config {
        return Err(Error::Format("configuration differs from the one the features were extracted with".into()));
    }
    let y = table.target(target)?;
    let model = fit_pls_with(&table.matrix(), &y, config.pls_components, config.feature_scaling)?;
    let bundle = ModelBundle {
        target: target.to_string(),
        config: snapshot,
        feature_names: table.feature_names.clone(),
        dictionary: table.dictionary.clone(),
        model,
    };
    bundle.check()?;
    Ok(bundle)
}

#[derive(Debug, Clone)]
pub struct Prediction {
    /// Predicted weight in kg.
    pub value: f64,
    pub features: FeatureVector,
    pub descriptor: MeshDescriptor,
}

impl Prediction {
    /// Human-readable diagnostics for `--verbose`.
    pub fn diagnostics(&self, bundle: &ModelBundle) -> String {
        let s = &self.descriptor.scalars;
        let mut out = format!(
            "mesh {}: {} -> {} vertices, {} eigenpairs, lambda_max {:.6}{}\n",
            self.descriptor.id,
            s.input_vertex_count,
            s.vertex_count,
            s.eig_count,
            s.lambda_max,
            if self.descriptor.cache_hit { " (cached)" } else { "" }
        );
        for w in self.descriptor.warnings() {
            out.push_str(&format!("warning: {w}\n"));
        }
        for (name, v) in bundle.feature_names.iter().zip(self.features.to_vec()) {
            out.push_str(&format!("  {name:<18} {v:.6}\n"));
        }
        out
    }
}

/// Predicts `bundle.target` for one mesh file.
pub fn predict_mesh(bundle: &ModelBundle, mesh: &Path, carcass_weight: f64, cache: &DescriptorCache) -> Result<Prediction> {
    bundle.check()?;
    let id = mesh.display().to_string();
    let descriptor = describe_mesh_file(&id, mesh, &bundle.config, cache)?;
    let features = encode(&descriptor, carcass_weight, &bundle.dictionary)?;
    let value = predict(&bundle.model, &features.to_vec())?;
    Ok(Prediction {
        value,
        features,
        descriptor,
    })
}
