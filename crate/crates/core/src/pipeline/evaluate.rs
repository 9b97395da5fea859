use super::extract::{encode, encode_all, fit_dictionary, DescriptorSet, Sample};
use super::PipelineConfig;
use crate::encoding::feature_matrix;
use crate::regression::{cross_validate, fit_pls_with, predict, without_row, EvalReport};
use crate::Result;

/// How the dictionary is handled across leave-one-out folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DictionaryMode {
    /// Relearn the dictionary in every fold without the held-out mesh.
    #[default]
    PerFold,
    /// Learn one dictionary on all meshes. The held-out mesh then leaks into
    /// its own encoding.
    Shared,
}

/// Leave-one-out evaluation of `target` over already described meshes.
pub fn evaluate(set: &DescriptorSet, target: &str, config: &PipelineConfig, mode: DictionaryMode) -> Result<EvalReport> {
    config.check()?;
    let y = set.target(target)?;
    let ids = set.ids();
    match mode {
        DictionaryMode::Shared => {
            let all: Vec<&Sample> = set.samples.iter().collect();
            let dict = fit_dictionary(&all, config)?;
            let x = feature_matrix(&encode_all(&set.samples, &dict)?)?;
            cross_validate(target, ids, &y, |i| {
                let mut y_train = y.clone();
                y_train.remove(i);
                let model = fit_pls_with(&without_row(&x, i), &y_train, config.pls_components, config.feature_scaling)?;
                predict(&model, &x.row(i).iter().copied().collect::<Vec<_>>())
            })
        }
        DictionaryMode::PerFold => cross_validate(target, ids, &y, |i| {
            let train: Vec<&Sample> = set.samples.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s).collect();
            let dict = fit_dictionary(&train, config)?;
            let features = train
                .iter()
                .map(|s| encode(&s.descriptor, s.row.carcass_weight, &dict))
                .collect::<Result<Vec<_>>>()?;
            let y_train: Vec<f64> = train.iter().map(|s| s.row.targets[target]).collect();
            let model = fit_pls_with(
                &feature_matrix(&features)?,
                &y_train,
                config.pls_components,
                config.feature_scaling,
            )?;
            let held_out = &set.samples[i];
            let f = encode(&held_out.descriptor, held_out.row.carcass_weight, &dict)?;
            predict(&model, &f.to_vec())
        }),
    }
}
