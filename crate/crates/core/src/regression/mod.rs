//! Single-response partial least squares, leave-one-out evaluation and the
//! R² / RMSE / CVe metrics.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

/// Default number of latent components.
pub const DEFAULT_COMPONENTS: usize = 4;

/// Fitted PLS1 model on centered, optionally scaled, features and a
/// standardized target.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    n_components: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    /// `d × c` weights.
    weights: DMatrix<f64>,
    /// `d × c` X loadings.
    loadings: DMatrix<f64>,
    y_loadings: Vec<f64>,
    /// Regression vector on the standardized scale.
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    c: usize,
    d: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    weights: Vec<f64>,
    loadings: Vec<f64>,
    y_loadings: Vec<f64>,
    coefficients: Vec<f64>,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// How feature columns are prepared before PLS. Both center; `Standardize`
/// also divides by the sample standard deviation, giving every column the
/// same say, while `Center` lets high-variance columns dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScaling {
    Standardize,
    Center,
}

/// NIPALS PLS1 with `n_components` latent variables on standardized data.
///
/// Columns of `x` and `y` are centered and divided by their sample standard
/// deviation; constant columns keep a scale of 1.
pub fn fit_pls(x: &DMatrix<f64>, y: &[f64], n_components: usize) -> Result<PlsModel> {
    fit_pls_with(x, y, n_components, FeatureScaling::Standardize)
}

/// [`fit_pls`] with a choice of feature scaling. The target is always
/// standardized, which does not change predictions.
pub fn fit_pls_with(x: &DMatrix<f64>, y: &[f64], n_components: usize, scaling: FeatureScaling) -> Result<PlsModel> {
    let (n, d) = x.shape();
    if y.len() != n {
        return Err(Error::Argument(format!("{n} feature rows but {} targets", y.len())));
    }
    if n < 3 {
        return Err(Error::Argument(format!("PLS needs at least 3 samples, got {n}")));
    }
    if n_components == 0 || n_components > d.min(n - 1) {
        return Err(Error::Argument(format!(
            "component count must be in 1..={} for {n} samples and {d} features, got {n_components}",
            d.min(n - 1)
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("features and targets must be finite".into()));
    }
    let (y_mean, y_scale) = mean_sd(y.iter().copied());
    if y_scale == 0.0 {
        return Err(Error::Argument("target is constant".into()));
    }
    let mut x_mean = Vec::with_capacity(d);
    let mut x_scale = Vec::with_capacity(d);
    for col in x.column_iter() {
        let (m, s) = mean_sd(col.iter().copied());
        x_mean.push(m);
        x_scale.push(if s > 0.0 && scaling == FeatureScaling::Standardize { s } else { 1.0 });
    }
    let mut xr = DMatrix::from_fn(n, d, |i, j| (x[(i, j)] - x_mean[j]) / x_scale[j]);
    let mut yr = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_scale));

    let c = n_components;
    let mut weights = DMatrix::zeros(d, c);
    let mut loadings = DMatrix::zeros(d, c);
    let mut y_loadings = Vec::with_capacity(c);
    for a in 0..c {
        let mut w = xr.tr_mul(&yr);
        let wn = w.norm();
        if !(wn > 0.0 && wn.is_finite()) {
            return Err(Error::Numerical(format!(
                "component {} has no covariance left with the target",
                a + 1
            )));
        }
        w /= wn;
        let t = &xr * &w;
        let tt = t.norm_squared();
        if !(tt > 0.0) {
            return Err(Error::Numerical(format!("component {} has zero scores", a + 1)));
        }
        let p = xr.tr_mul(&t) / tt;
        let q = yr.dot(&t) / tt;
        xr -= &t * p.transpose();
        yr -= &t * q;
        weights.set_column(a, &w);
        loadings.set_column(a, &p);
        y_loadings.push(q);
    }
    let ptw = loadings.tr_mul(&weights);
    let q = DVector::from_vec(y_loadings.clone());
    let inner = ptw
        .lu()
        .solve(&q)
        .ok_or_else(|| Error::Numerical("singular PᵀW in PLS coefficient assembly".into()))?;
    let coefficients = (&weights * inner).iter().copied().collect();
    Ok(PlsModel {
        n_components,
        x_mean,
        x_scale,
        y_mean,
        y_scale,
        weights,
        loadings,
        y_loadings,
        coefficients,
    })
}

impl PlsModel {
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.x_mean.len()
    }

    pub fn x_mean(&self) -> &[f64] {
        &self.x_mean
    }

    pub fn x_scale(&self) -> &[f64] {
        &self.x_scale
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn y_loadings(&self) -> &[f64] {
        &self.y_loadings
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Argument(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.x_mean)
            .zip(&self.x_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    /// Latent scores of one sample, obtained by replaying the deflation.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.standardize(x)?;
        let mut t = Vec::with_capacity(self.n_components);
        for a in 0..self.n_components {
            let ta: f64 = z.iter().zip(self.weights.column(a).iter()).map(|(u, w)| u * w).sum();
            z.iter_mut()
                .zip(self.loadings.column(a).iter())
                .for_each(|(u, p)| *u -= ta * p);
            t.push(ta);
        }
        Ok(t)
    }

    /// Prediction through the latent scores rather than the collapsed
    /// coefficient vector.
    pub fn predict_via_scores(&self, x: &[f64]) -> Result<f64> {
        let t = self.scores(x)?;
        let z: f64 = t.iter().zip(&self.y_loadings).map(|(t, q)| t * q).sum();
        Ok(self.y_mean + self.y_scale * z)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub(crate) fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("model serializes")
    }

    pub(crate) fn from_value(value: serde_json::Value) -> Result<Self> {
        let f: ModelFile = serde_json::from_value(value)?;
        if f.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", f.version)));
        }
        let shapes_ok = f.x_mean.len() == f.d
            && f.x_scale.len() == f.d
            && f.weights.len() == f.d * f.c
            && f.loadings.len() == f.d * f.c
            && f.y_loadings.len() == f.c
            && f.coefficients.len() == f.d
            && f.c >= 1;
        if !shapes_ok {
            return Err(Error::Format("model arrays do not match its declared dimensions".into()));
        }
        Ok(Self {
            n_components: f.c,
            x_mean: f.x_mean,
            x_scale: f.x_scale,
            y_mean: f.y_mean,
            y_scale: f.y_scale,
            weights: DMatrix::from_row_slice(f.d, f.c, &f.weights),
            loadings: DMatrix::from_row_slice(f.d, f.c, &f.loadings),
            y_loadings: f.y_loadings,
            coefficients: f.coefficients,
        })
    }

    fn to_file(&self) -> ModelFile {
        let row_major = |m: &DMatrix<f64>| m.transpose().iter().copied().collect();
        ModelFile {
            version: MODEL_VERSION,
            c: self.n_components,
            d: self.dim(),
            x_mean: self.x_mean.clone(),
            x_scale: self.x_scale.clone(),
            y_mean: self.y_mean,
            y_scale: self.y_scale,
            weights: row_major(&self.weights),
            loadings: row_major(&self.loadings),
            y_loadings: self.y_loadings.clone(),
            coefficients: self.coefficients.clone(),
        }
    }
}

/// `ŷ = ȳ + s_y · ((x − x̄) / s_x) · B`.
pub fn predict(model: &PlsModel, x: &[f64]) -> Result<f64> {
    let z = model.standardize(x)?;
    let dotted: f64 = z.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum();
    Ok(model.y_mean + model.y_scale * dotted)
}

/// Row-wise [`predict`].
pub fn predict_batch(model: &PlsModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    x.row_iter()
        .map(|row| predict(model, &row.iter().copied().collect::<Vec<_>>()))
        .collect()
}

/// Summary statistics of a target plus the prediction error metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub r2: f64,
    pub rmse: f64,
    pub cve_percent: f64,
}

/// R² = 1 − SSE/SST, RMSE = √(SSE/n), CVe = 100·RMSE/ȳ.
pub fn metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics> {
    if y.len() != yhat.len() {
        return Err(Error::Argument(format!("{} targets but {} predictions", y.len(), yhat.len())));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::Argument(format!("metrics need at least 2 samples, got {n}")));
    }
    let (mean, sd) = mean_sd(y.iter().copied());
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::Argument("R² is undefined for a constant target".into()));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    let rmse = (sse / n as f64).sqrt();
    Ok(Metrics {
        n,
        mean,
        sd,
        min: y.iter().copied().fold(f64::INFINITY, f64::min),
        max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        r2: 1.0 - sse / sst,
        rmse,
        cve_percent: cve_percent(rmse, mean),
    })
}

/// `100 · rmse / mean`.
pub fn cve_percent(rmse: f64, mean: f64) -> f64 {
    100.0 * rmse / mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutPrediction {
    pub id: String,
    pub observed: f64,
    pub predicted: f64,
}

/// Cross-validated evaluation of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub target: String,
    pub metrics: Metrics,
    pub predictions: Vec<HeldOutPrediction>,
}

impl EvalReport {
    pub fn new(target: impl Into<String>, ids: Vec<String>, y: &[f64], yhat: &[f64]) -> Result<Self> {
        let metrics = metrics(y, yhat)?;
        if ids.len() != y.len() {
            return Err(Error::Argument("one id per prediction required".into()));
        }
        let predictions = ids
            .into_iter()
            .zip(y.iter().zip(yhat))
            .map(|(id, (&observed, &predicted))| HeldOutPrediction { id, observed, predicted })
            .collect();
        Ok(Self {
            target: target.into(),
            metrics,
            predictions,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Header and one aligned row per report.
    pub fn table(reports: &[EvalReport]) -> String {
        let width = reports.iter().map(|r| r.target.len()).max().unwrap_or(0).max("Target".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>9}  {:>8}  {:>9}  {:>9}  {:>6}  {:>8}  {:>7}",
            "Target", "n", "Mean", "S.D.", "Min", "Max", "R²", "RMSE", "CVe(%)"
        );
        for r in reports {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>9.3}  {:>8.3}  {:>9.3}  {:>9.3}  {:>6.2}  {:>8.3}  {:>7.2}",
                r.target, m.n, m.mean, m.sd, m.min, m.max, m.r2, m.rmse, m.cve_percent
            );
        }
        out
    }
}

/// Leave-one-out cross-validation with a caller-supplied fold.
///
/// `fold(i)` must fit on every sample except `i` and return the prediction
/// for sample `i`. Folds run in parallel; failures carry the fold index.
pub fn cross_validate<F>(target: &str, ids: Vec<String>, y: &[f64], fold: F) -> Result<EvalReport>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let n = y.len();
    if n < 4 {
        return Err(Error::Argument(format!("leave-one-out needs at least 4 samples, got {n}")));
    }
    let yhat = (0..n)
        .into_par_iter()
        .map(|i| fold(i).map_err(|e| Error::Fold { fold: i, source: Box::new(e) }))
        .collect::<Result<Vec<f64>>>()?;
    EvalReport::new(target, ids, y, &yhat)
}

/// Rows of `x` with row `skip` removed.
pub fn without_row(x: &DMatrix<f64>, skip: usize) -> DMatrix<f64> {
    x.clone().remove_row(skip)
}

/// Leave-one-out PLS on a fixed feature matrix.
pub fn loocv(x: &DMatrix<f64>, y: &[f64], n_components: usize) -> Result<EvalReport> {
    if x.nrows() != y.len() {
        return Err(Error::Argument(format!("{} feature rows but {} targets", x.nrows(), y.len())));
    }
    let ids = (0..y.len()).map(|i| i.to_string()).collect();
    cross_validate("target", ids, y, |i| {
        let mut y_train = y.to_vec();
        y_train.remove(i);
        let model = fit_pls(&without_row(x, i), &y_train, n_components)?;
        predict(&model, &x.row(i).iter().copied().collect::<Vec<_>>())
    })
}
