//! Bag-of-geometric-words encoding.
//!
//! Per-vertex signatures are clustered into `k` words, every vertex is
//! soft-assigned to the words with a Gaussian kernel, and the assignments are
//! sum-pooled into a `k`-bin histogram. Appending diameter, volume and
//! carcass weight gives the `k + 3` feature vector used for regression.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sgws::SignatureMatrix;
use crate::{Error, Result};

pub const DICTIONARY_VERSION: u32 = 1;

/// Names of the scalar features appended after the histogram, in order.
pub const SCALAR_FEATURES: [&str; 3] = ["geodesic_diameter", "volume", "carcass_weight"];

/// How the soft-assignment bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// Mean distance from each training descriptor to its nearest center.
    MeanNearest,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iterations: usize,
    /// Stop once no center moves more than this fraction of the largest
    /// absolute descriptor entry.
    pub tolerance: f64,
    pub sigma: SigmaRule,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            tolerance: 1e-6,
            sigma: SigmaRule::MeanNearest,
        }
    }
}

/// `k` cluster centers in descriptor space plus the soft-assignment bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    /// `k × p`.
    centers: DMatrix<f64>,
    sigma: f64,
    inertia: f64,
    iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    version: u32,
    k: usize,
    p: usize,
    sigma: f64,
    centers: Vec<f64>,
    // Training diagnostics; absent for hand-built dictionaries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inertia: Option<f64>,
    #[serde(default)]
    iterations: usize,
}

impl Dictionary {
    pub fn new(centers: DMatrix<f64>, sigma: f64) -> Result<Self> {
        if centers.nrows() <= centers.ncols() {
            return Err(Error::Argument(format!(
                "dictionary needs more words than descriptor dimensions, got k = {} and p = {}",
                centers.nrows(),
                centers.ncols()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument(format!("invalid dictionary: sigma {sigma} or non-finite center")));
        }
        Ok(Self {
            centers,
            sigma,
            inertia: f64::NAN,
            iterations: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn p(&self) -> usize {
        self.centers.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    /// Sum of squared distances to the nearest center over the training
    /// descriptors; NaN for a dictionary that was not learned here.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Lloyd iterations performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub(crate) fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("dictionary serializes")
    }

    pub(crate) fn from_value(value: serde_json::Value) -> Result<Self> {
        let file: DictionaryFile = serde_json::from_value(value)?;
        if file.version != DICTIONARY_VERSION {
            return Err(Error::Format(format!("unsupported dictionary version {}", file.version)));
        }
        if file.centers.len() != file.k * file.p {
            return Err(Error::Format(format!(
                "dictionary has {} center entries, expected {} × {}",
                file.centers.len(),
                file.k,
                file.p
            )));
        }
        let mut dict = Self::new(DMatrix::from_row_slice(file.k, file.p, &file.centers), file.sigma)
            .map_err(|e| Error::Format(e.to_string()))?;
        dict.inertia = file.inertia.unwrap_or(f64::NAN);
        dict.iterations = file.iterations;
        Ok(dict)
    }

    fn to_file(&self) -> DictionaryFile {
        DictionaryFile {
            version: DICTIONARY_VERSION,
            k: self.k(),
            p: self.p(),
            sigma: self.sigma,
            centers: self.centers.transpose().iter().copied().collect(),
            inertia: Some(self.inertia).filter(|v| v.is_finite()),
            iterations: self.iterations,
        }
    }

    fn sq_distance(&self, r: usize, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(c, v)| (v - self.centers[(r, c)]).powi(2)).sum()
    }

    /// Nearest center (lowest index on ties) and its squared distance.
    fn nearest(&self, x: &[f64]) -> (usize, f64) {
        (0..self.k())
            .map(|r| (r, self.sq_distance(r, x)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }
}

/// Stacks signature matrices side by side into one `p × Σm` matrix.
pub fn concatenate(signatures: &[&SignatureMatrix]) -> Result<DMatrix<f64>> {
    let p = signatures
        .first()
        .ok_or_else(|| Error::Argument("no signatures to concatenate".into()))?
        .dim();
    if let Some(bad) = signatures.iter().find(|s| s.dim() != p) {
        return Err(Error::Argument(format!("signature dimensions differ: {p} and {}", bad.dim())));
    }
    let total = signatures.iter().map(|s| s.vertex_count()).sum();
    let mut out = DMatrix::zeros(p, total);
    let mut offset = 0;
    for s in signatures {
        out.columns_mut(offset, s.vertex_count()).copy_from(s.data());
        offset += s.vertex_count();
    }
    Ok(out)
}

/// k-means dictionary with default options.
pub fn learn_dictionary(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<Dictionary> {
    learn_dictionary_with(data, k, seed, &KMeansOptions::default())
}

/// k-means++ seeding followed by Lloyd iterations over the columns of the
/// `p × N` matrix `data`.
pub fn learn_dictionary_with(data: &DMatrix<f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Result<Dictionary> {
    let (p, n) = data.shape();
    if k <= p {
        return Err(Error::Argument(format!(
            "dictionary size k = {k} must exceed the descriptor dimension p = {p}"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("descriptors must be finite".into()));
    }
    let points: Vec<&[f64]> = (0..n).map(|j| &data.as_slice()[j * p..(j + 1) * p]).collect();
    let distinct = count_distinct(&points);
    if distinct < k {
        return Err(Error::Argument(format!(
            "k-means needs at least k = {k} distinct descriptors, found {distinct}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_plus_plus(&points, k, &mut rng);
    let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    let mut state = assign(&points, &centers);
    while iterations < opts.max_iterations {
        iterations += 1;
        let labels: Vec<usize> = state.iter().map(|s| s.label).collect();
        let updated = update_centers(&points, &labels, &centers);
        let moved: Vec<f64> = centers.iter().zip(&updated).map(|(a, b)| sq_dist(a, b).sqrt()).collect();
        centers = updated;
        reassign(&points, &centers, &moved, &mut state);
        if moved.iter().copied().fold(0.0, f64::max) < opts.tolerance * scale {
            break;
        }
    }
    let labels: Vec<usize> = state.iter().map(|s| s.label).collect();

    let nearest: Vec<f64> = points
        .iter()
        .zip(&labels)
        .map(|(x, &l)| sq_dist(x, &centers[l]))
        .collect();
    let inertia = nearest.iter().sum();
    let sigma = match opts.sigma {
        SigmaRule::Fixed(s) => s,
        SigmaRule::MeanNearest => {
            let mean = nearest.iter().map(|d| d.sqrt()).sum::<f64>() / n as f64;
            if mean > 0.0 {
                mean
            } else {
                // Every descriptor sits on a center; fall back to half the
                // closest center spacing.
                let mut gap = f64::INFINITY;
                for a in 0..k {
                    for b in a + 1..k {
                        gap = gap.min(sq_dist(&centers[a], &centers[b]).sqrt());
                    }
                }
                0.5 * gap
            }
        }
    };
    let flat: Vec<f64> = centers.concat();
    let mut dict = Dictionary::new(DMatrix::from_row_slice(k, p, &flat), sigma)?;
    dict.inertia = inertia;
    dict.iterations = iterations;
    Ok(dict)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn count_distinct(points: &[&[f64]]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|x| x.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn seed_plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, d) in d2.iter().enumerate() {
            acc += d;
            if *d > 0.0 && acc >= target {
                pick = Some(i);
                break;
            }
        }
        // Rounding can leave the target beyond the final partial sum.
        let pick = pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).expect("distinct point remains"));
        let c = points[pick].to_vec();
        for (d, x) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    centers
}

/// A point's center with an upper bound on its distance to it and a lower
/// bound on its distance to every other center.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Assignment {
    label: usize,
    upper: f64,
    lower: f64,
}

/// Nearest center (lowest index on ties) with exact bounds.
fn nearest_center(x: &[f64], centers: &[Vec<f64>]) -> Assignment {
    let (mut best, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
    for (r, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < d1 {
            (best, d2, d1) = (r, d1, d);
        } else if d < d2 {
            d2 = d;
        }
    }
    Assignment {
        label: best,
        upper: d1.sqrt(),
        lower: d2.sqrt(),
    }
}

fn assign(points: &[&[f64]], centers: &[Vec<f64>]) -> Vec<Assignment> {
    points.par_iter().map(|x| nearest_center(x, centers)).collect()
}

/// Hamerly's bounded reassignment after the centers moved by `moved`. A point
/// is rescanned only when its bounds no longer prove its center nearest, so
/// the labels match a full reassignment.
fn reassign(points: &[&[f64]], centers: &[Vec<f64>], moved: &[f64], state: &mut [Assignment]) {
    let k = centers.len();
    let half_gap: Vec<f64> = (0..k)
        .map(|a| {
            let gap = (0..k).filter(|&b| b != a).map(|b| sq_dist(&centers[a], &centers[b])).fold(f64::INFINITY, f64::min);
            0.5 * gap.sqrt()
        })
        .collect();
    let first = (0..k).fold(0, |best, r| if moved[r] > moved[best] { r } else { best });
    let second = (0..k).filter(|&r| r != first).map(|r| moved[r]).fold(0.0, f64::max);
    state.par_iter_mut().zip(points.par_iter()).for_each(|(s, x)| {
        s.upper += moved[s.label];
        s.lower -= if s.label == first { second } else { moved[first] };
        // Strict comparisons leave exact ties to the full scan, which
        // resolves them to the lowest index.
        if s.upper < s.lower.max(half_gap[s.label]) {
            return;
        }
        s.upper = sq_dist(x, &centers[s.label]).sqrt();
        if s.upper < s.lower.max(half_gap[s.label]) {
            return;
        }
        *s = nearest_center(x, centers);
    });
}

/// Cluster means; an emptied cluster takes the point farthest from its
/// current center so every word stays in use.
fn update_centers(points: &[&[f64]], labels: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = old[0].len();
    let mut sums = vec![vec![0.0; p]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (x, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        sums[l].iter_mut().zip(x.iter()).for_each(|(s, v)| *s += v);
    }
    let mut taken: Vec<usize> = Vec::new();
    for r in 0..old.len() {
        if counts[r] > 0 {
            let c = counts[r] as f64;
            sums[r].iter_mut().for_each(|s| *s /= c);
        } else {
            let far = (0..points.len())
                .filter(|i| !taken.contains(i))
                .map(|i| (i, sq_dist(points[i], &old[labels[i]])))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            taken.push(far);
            sums[r] = points[far].to_vec();
        }
    }
    sums
}

/// Soft-assignment codes, one probability column per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix {
    /// `k × m`.
    codes: DMatrix<f64>,
}

impl CodeMatrix {
    pub fn codes(&self) -> &DMatrix<f64> {
        &self.codes
    }

    pub fn k(&self) -> usize {
        self.codes.nrows()
    }

    pub fn vertex_count(&self) -> usize {
        self.codes.ncols()
    }
}

/// `c_ri ∝ exp(−‖d_i − v_r‖² / 2σ²)`, normalized per column. A column whose
/// weights all underflow becomes one-hot at its nearest word.
pub fn soft_assign(signature: &SignatureMatrix, dict: &Dictionary) -> Result<CodeMatrix> {
    if signature.dim() != dict.p() {
        return Err(Error::Argument(format!(
            "signature has {} rows but the dictionary expects {}",
            signature.dim(),
            dict.p()
        )));
    }
    let k = dict.k();
    let denom = 2.0 * dict.sigma() * dict.sigma();
    let columns: Vec<Vec<f64>> = (0..signature.vertex_count())
        .into_par_iter()
        .map(|j| {
            let x = signature.column(j);
            let mut w: Vec<f64> = (0..k).map(|r| (-dict.sq_distance(r, &x) / denom).exp()).collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 && total.is_finite() {
                w.iter_mut().for_each(|v| *v /= total);
            } else {
                let (r, _) = dict.nearest(&x);
                w = vec![0.0; k];
                w[r] = 1.0;
            }
            w
        })
        .collect();
    Ok(CodeMatrix {
        codes: DMatrix::from_fn(k, columns.len(), |r, j| columns[j][r]),
    })
}

/// Sum pooling: `h_r = Σ_i c_ri`.
pub fn pool(codes: &CodeMatrix) -> Vec<f64> {
    codes.codes.row_iter().map(|row| row.iter().sum()).collect()
}

/// Pooled histogram followed by the three global scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub histogram: Vec<f64>,
    pub geodesic_diameter: f64,
    pub volume: f64,
    pub carcass_weight: f64,
}

pub fn assemble_features(histogram: Vec<f64>, diameter: f64, volume: f64, carcass_weight: f64) -> Result<FeatureVector> {
    for (name, v) in SCALAR_FEATURES.iter().zip([diameter, volume, carcass_weight]) {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Argument(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if histogram.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(Error::Argument("histogram entries must be finite and nonnegative".into()));
    }
    Ok(FeatureVector {
        histogram,
        geodesic_diameter: diameter,
        volume,
        carcass_weight,
    })
}

impl FeatureVector {
    /// `[h_1..h_k, diameter, volume, weight]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.histogram.clone();
        v.extend([self.geodesic_diameter, self.volume, self.carcass_weight]);
        v
    }

    pub fn len(&self) -> usize {
        self.histogram.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Column names matching [`FeatureVector::to_vec`] for a `k`-word histogram.
pub fn feature_names(k: usize) -> Vec<String> {
    (1..=k)
        .map(|r| format!("h{r}"))
        .chain(SCALAR_FEATURES.iter().map(|s| s.to_string()))
        .collect()
}

/// Stacks feature vectors into an `n × (k + 3)` matrix.
pub fn feature_matrix(features: &[FeatureVector]) -> Result<DMatrix<f64>> {
    let d = features.first().map_or(0, FeatureVector::len);
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::Argument("feature vectors differ in length".into()));
    }
    let rows: Vec<Vec<f64>> = features.iter().map(FeatureVector::to_vec).collect();
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}
