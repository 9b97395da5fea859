use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::{KMeansOptions, SigmaRule};
use crate::regression::{FeatureScaling, DEFAULT_COMPONENTS};
use crate::spectral::DEFAULT_EIGEN_COUNT;
use crate::{Error, Result};

/// Pipeline hyperparameters. Every field may be omitted from a JSON config
/// file and then takes its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub target_vertices: usize,
    pub eig_count: usize,
    pub resolution: usize,
    pub dictionary_k: usize,
    pub sigma_rule: SigmaRule,
    pub kmeans_max_iterations: usize,
    pub pls_components: usize,
    pub feature_scaling: FeatureScaling,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_vertices: 3000,
            eig_count: DEFAULT_EIGEN_COUNT,
            resolution: 2,
            dictionary_k: 32,
            sigma_rule: SigmaRule::MeanNearest,
            kmeans_max_iterations: KMeansOptions::default().max_iterations,
            pls_components: DEFAULT_COMPONENTS,
            // Raw counts and scalars, so the high-variance volume and weight
            // columns are not diluted by 32 equally weighted histogram bins.
            feature_scaling: FeatureScaling::Center,
            seed: 7,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn check(&self) -> Result<()> {
        let p = self.signature_dim();
        let problems = [
            (self.target_vertices < 4, "target_vertices must be at least 4".to_string()),
            (self.eig_count == 0, "eig_count must be positive".to_string()),
            (self.resolution == 0, "resolution must be at least 1".to_string()),
            (
                self.dictionary_k <= p,
                format!("dictionary_k = {} must exceed the signature dimension {p}", self.dictionary_k),
            ),
            (self.pls_components == 0, "pls_components must be positive".to_string()),
            (self.kmeans_max_iterations == 0, "kmeans_max_iterations must be positive".to_string()),
        ];
        match problems.into_iter().find(|(bad, _)| *bad) {
            Some((_, message)) => Err(Error::Argument(message)),
            None => Ok(()),
        }
    }

    /// Signature rows implied by `resolution`.
    pub fn signature_dim(&self) -> usize {
        (1..=self.resolution).map(|l| l + 1).sum()
    }

    /// Length of a feature vector: histogram plus three scalars.
    pub fn feature_dim(&self) -> usize {
        self.dictionary_k + 3
    }

    pub fn kmeans_options(&self) -> KMeansOptions {
        KMeansOptions {
            max_iterations: self.kmeans_max_iterations,
            sigma: self.sigma_rule,
            ..KMeansOptions::default()
        }
    }
}
