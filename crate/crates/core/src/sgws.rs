//! Spectral graph wavelet signatures.
//!
//! Each vertex `j` gets a `p`-dimensional descriptor built from the squared
//! eigenvector entries `ξ_ℓ(j)²`. At resolution level `L`, it takes `L`
//! band-pass wavelet coefficients plus one low-pass scaling coefficient:
//!
//! ```text
//! W(t, j) = Σ_ℓ g(t λ_ℓ) ξ_ℓ(j)²      g(x) = x e^{-x}
//! S(j)    = Σ_ℓ h(λ_ℓ)   ξ_ℓ(j)²      h(x) = γ exp(-(x / (0.6 λ_min))⁴)
//! ```
//!
//! Levels `1..=R` are concatenated, so `p = Σ_L (L + 1)`; `R = 2` gives 5.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cache::{self, CacheKey};
use crate::spectral::EigenSystem;
use crate::{Error, Result};

const SIGNATURE_MAGIC: &[u8; 6] = b"SWSIG1";

/// Ratio between the largest eigenvalue and the design floor `λ_min`.
pub const LAMBDA_RATIO: f64 = 20.0;

/// Band-pass generating kernel `g(x) = x e^{-x}`; peaks at `g(1) = e⁻¹`.
pub fn wavelet_kernel(x: f64) -> f64 {
    x * (-x).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilterBank {
    resolution: usize,
    lambda_max: f64,
    lambda_min: f64,
    /// `levels[L - 1]` holds the `L` scales of level `L`, decreasing.
    levels: Vec<Vec<f64>>,
    gamma: f64,
}

/// Builds the filter bank for a spectrum ending at `lambda_max`.
///
/// Level `L` gets `L` scales log-spaced from `2/λ_min` down to `2/λ_max`. A
/// single-scale level uses the finest scale `2/λ_max`.
pub fn design_filter_bank(lambda_max: f64, resolution: usize) -> Result<WaveletFilterBank> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::Argument(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if resolution == 0 {
        return Err(Error::Argument("resolution must be at least 1".into()));
    }
    let lambda_min = lambda_max / LAMBDA_RATIO;
    let (t_max, t_min) = (2.0 / lambda_min, 2.0 / lambda_max);
    let levels = (1..=resolution)
        .map(|l| {
            if l == 1 {
                return vec![t_min];
            }
            (0..l)
                .map(|k| {
                    let f = k as f64 / (l - 1) as f64;
                    (t_max.ln() + f * (t_min.ln() - t_max.ln())).exp()
                })
                .collect()
        })
        .collect();
    Ok(WaveletFilterBank {
        resolution,
        lambda_max,
        lambda_min,
        levels,
        gamma: (-1.0f64).exp(),
    })
}

impl WaveletFilterBank {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn scaling_width(&self) -> f64 {
        0.6 * self.lambda_min
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Scales of level `level` (1-based), decreasing.
    pub fn scales(&self, level: usize) -> &[f64] {
        &self.levels[level - 1]
    }

    /// Signature length `p = Σ_L (L + 1)`.
    pub fn signature_dim(&self) -> usize {
        self.levels.iter().map(|s| s.len() + 1).sum()
    }

    /// Low-pass kernel `h(x)`.
    pub fn scaling_kernel(&self, x: f64) -> f64 {
        self.gamma * (-(x / self.scaling_width()).powi(4)).exp()
    }

    /// Kernel rows in signature order, each evaluated on `eigenvalues`.
    fn kernel_rows(&self, eigenvalues: &[f64]) -> DMatrix<f64> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(self.signature_dim());
        for scales in &self.levels {
            for &t in scales {
                rows.push(eigenvalues.iter().map(|&l| wavelet_kernel(t * l)).collect());
            }
            rows.push(eigenvalues.iter().map(|&l| self.scaling_kernel(l)).collect());
        }
        DMatrix::from_fn(rows.len(), eigenvalues.len(), |r, c| rows[r][c])
    }
}

fn check_vertex(eigs: &EigenSystem, j: usize) -> Result<()> {
    if j >= eigs.vertex_count() {
        return Err(Error::Argument(format!(
            "vertex {j} out of range for {} vertices",
            eigs.vertex_count()
        )));
    }
    Ok(())
}

fn spectral_sum(eigs: &EigenSystem, j: usize, kernel: impl Fn(f64) -> f64) -> f64 {
    let xi = eigs.eigenvectors();
    eigs.eigenvalues()
        .iter()
        .enumerate()
        .map(|(l, &lambda)| kernel(lambda) * xi[(j, l)].powi(2))
        .sum()
}

/// `W(t, j) = Σ_ℓ g(t λ_ℓ) ξ_ℓ(j)²`.
pub fn wavelet_coefficient(eigs: &EigenSystem, t: f64, j: usize) -> Result<f64> {
    check_vertex(eigs, j)?;
    if !(t > 0.0) {
        return Err(Error::Argument(format!("scale must be positive, got {t}")));
    }
    Ok(spectral_sum(eigs, j, |l| wavelet_kernel(t * l)))
}

/// `S(j) = Σ_ℓ h(λ_ℓ) ξ_ℓ(j)²` with `h` from `bank`.
pub fn scaling_coefficient(eigs: &EigenSystem, bank: &WaveletFilterBank, j: usize) -> Result<f64> {
    check_vertex(eigs, j)?;
    Ok(spectral_sum(eigs, j, |l| bank.scaling_kernel(l)))
}

/// Per-vertex descriptors as the columns of a `p × m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix {
    data: DMatrix<f64>,
}

impl SignatureMatrix {
    /// Wraps a `p × m` matrix; entries must be finite and nonnegative.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Numerical("signature entries must be finite and nonnegative".into()));
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn vertex_count(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }

    /// Writes the `SWSIG1` container: dims `[p, m]`, then column-major data.
    pub fn write_cache<W: Write>(&self, w: &mut W, key: &CacheKey) -> std::io::Result<()> {
        cache::write_header(w, SIGNATURE_MAGIC, key, &[self.dim() as u64, self.vertex_count() as u64])?;
        cache::write_f64s(w, self.data.iter().copied())
    }

    pub fn read_cache<R: Read>(r: &mut R, key: Option<&CacheKey>) -> Result<Self> {
        let dims = cache::read_header(r, SIGNATURE_MAGIC, key, 2)?;
        let data = cache::read_f64s(r, dims[0] * dims[1])?;
        cache::expect_end(r)?;
        Self::new(DMatrix::from_vec(dims[0], dims[1], data)).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Signature matrix with rows `[level 1: W(t_1), S][level 2: W(t_1), W(t_2), S]…`.
pub fn compute_signature(eigs: &EigenSystem, bank: &WaveletFilterBank) -> Result<SignatureMatrix> {
    let lm = eigs.lambda_max();
    if ((bank.lambda_max() - lm) / lm).abs() > 1e-6 {
        return Err(Error::Argument(format!(
            "filter bank designed for lambda_max {} but spectrum ends at {lm}",
            bank.lambda_max()
        )));
    }
    let kernels = bank.kernel_rows(eigs.eigenvalues());
    let xi = eigs.eigenvectors();
    let (p, count, m) = (kernels.nrows(), eigs.count(), eigs.vertex_count());
    let columns: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let sq: Vec<f64> = (0..count).map(|l| xi[(j, l)].powi(2)).collect();
            (0..p)
                .map(|r| (0..count).map(|l| kernels[(r, l)] * sq[l]).sum::<f64>())
                .collect()
        })
        .collect();
    SignatureMatrix::new(DMatrix::from_fn(p, m, |r, j| columns[j][r]))
}
