//! Shift-invert block Lanczos for the low end of `C ξ = λ A ξ`.
//!
//! With `S = A^{1/2}` the generalized problem becomes the standard symmetric
//! problem for `S⁻¹ C S⁻¹`; its shift-inverted operator is
//! `S (C − σA)⁻¹ S`, whose largest eigenvalues `θ = 1/(λ − σ)` belong to the
//! smallest `λ`. The Krylov basis is kept fully reorthogonalized (classical
//! Gram–Schmidt, two passes), which makes the projected matrix the
//! Rayleigh quotient of the basis and lets a block of starting vectors pick
//! up repeated eigenvalues.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::cholesky::EnvelopeCholesky;
use super::laplacian::CotanLaplacian;
use super::sparse::CsrMatrix;
use crate::cache::{self, CacheKey};
use crate::error::{Error, Result};

const EIGEN_MAGIC: &[u8; 6] = b"SWEIG1";

/// Number of eigenpairs used when the caller does not say otherwise.
pub const DEFAULT_EIGEN_COUNT: usize = 301;

/// `min(301, m − 1)` for an `m`-vertex mesh.
pub fn default_eigen_count(vertex_count: usize) -> usize {
    DEFAULT_EIGEN_COUNT.min(vertex_count.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolverOptions {
    /// Spectral shift; slightly negative so `C − σA` is positive definite
    /// despite the zero eigenvalue. Its magnitude is raised where needed;
    /// see [`effective_shift`].
    pub shift: f64,
    pub block_size: usize,
    /// Cap on Krylov basis size; `None` means `50 × count` (and never more
    /// than the matrix dimension).
    pub max_iterations: Option<usize>,
    /// Accepted residual `‖Cξ − λAξ‖₂` relative to `‖C‖∞`.
    pub residual_tolerance: f64,
    pub seed: u64,
}

impl Default for EigenSolverOptions {
    fn default() -> Self {
        Self {
            shift: -1e-8,
            block_size: 8,
            max_iterations: None,
            residual_tolerance: 1e-8,
            seed: 0x5eed_1a9c,
        }
    }
}

/// Truncated spectrum: ascending eigenvalues and mass-orthonormal
/// eigenvectors as the columns of an `m × count` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    mass: Vec<f64>,
}

impl EigenSystem {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, mass: Vec<f64>) -> Result<Self> {
        if eigenvectors.nrows() != mass.len() || eigenvectors.ncols() != eigenvalues.len() {
            return Err(Error::Argument(format!(
                "eigensystem shape mismatch: {} values, {}×{} vectors, {} masses",
                eigenvalues.len(),
                eigenvectors.nrows(),
                eigenvectors.ncols(),
                mass.len()
            )));
        }
        if eigenvalues.is_empty() {
            return Err(Error::Argument("eigensystem needs at least one eigenpair".into()));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            mass,
        })
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Largest retained eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    /// Keeps the first `count` eigenpairs.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.count() {
            return Err(Error::Argument(format!(
                "cannot truncate {} eigenpairs to {count}",
                self.count()
            )));
        }
        Self::new(
            self.eigenvalues[..count].to_vec(),
            self.eigenvectors.columns(0, count).into_owned(),
            self.mass.clone(),
        )
    }

    /// `‖Cξ − λAξ‖₂` for every pair.
    pub fn residuals(&self, lap: &CotanLaplacian) -> Vec<f64> {
        let m = self.vertex_count();
        let mut cx = vec![0.0; m];
        (0..self.count())
            .map(|l| {
                let x = self.eigenvectors.column(l);
                lap.stiffness().mul_vec(x.as_slice(), &mut cx);
                cx.iter()
                    .zip(x.iter())
                    .zip(lap.mass())
                    .map(|((c, xi), a)| (c - self.eigenvalues[l] * a * xi).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Writes the `SWEIG1` cache container: dims `[m, count]`, then
    /// eigenvalues, column-major eigenvectors and masses.
    pub fn write_cache<W: Write>(&self, w: &mut W, key: &CacheKey) -> std::io::Result<()> {
        let (m, count) = (self.vertex_count(), self.count());
        cache::write_header(w, EIGEN_MAGIC, key, &[m as u64, count as u64])?;
        cache::write_f64s(w, self.eigenvalues.iter().copied())?;
        cache::write_f64s(w, self.eigenvectors.iter().copied())?;
        cache::write_f64s(w, self.mass.iter().copied())
    }

    /// Reads a container written by [`EigenSystem::write_cache`]. With
    /// `key` set, a container computed from other content is rejected.
    pub fn read_cache<R: Read>(r: &mut R, key: Option<&CacheKey>) -> Result<Self> {
        let dims = cache::read_header(r, EIGEN_MAGIC, key, 2)?;
        let (m, count) = (dims[0], dims[1]);
        let eigenvalues = cache::read_f64s(r, count)?;
        let vectors = cache::read_f64s(r, m * count)?;
        let mass = cache::read_f64s(r, m)?;
        cache::expect_end(r)?;
        Self::new(eigenvalues, DMatrix::from_vec(m, count, vectors), mass)
            .map_err(|e| Error::Format(e.to_string()))
    }
}

/// Smallest `count` eigenpairs with default solver options.
pub fn solve_eigs(lap: &CotanLaplacian, count: usize) -> Result<EigenSystem> {
    solve_eigs_with(lap, count, &EigenSolverOptions::default())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Eight independent partial sums let the compiler vectorize.
    let mut acc = [0.0; 8];
    let (ca, ra) = a.split_at(a.len() - a.len() % 8);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(8).zip(cb.chunks_exact(8)) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two-pass classical Gram–Schmidt against `basis`; returns the coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let pass: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, c) in basis.iter().zip(&pass) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
        for (total, c) in coeffs.iter_mut().zip(&pass) {
            *total += c;
        }
    }
    coeffs
}

/// Two-pass classical Gram–Schmidt of every vector in `ws` against `basis`,
/// reading each basis vector once per pass; returns per-vector coefficients.
fn orthogonalize_block(basis: &[Vec<f64>], ws: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let mut coeffs = vec![vec![0.0; basis.len()]; ws.len()];
    for _ in 0..2 {
        let pass: Vec<Vec<f64>> = basis.iter().map(|v| ws.iter().map(|w| dot(v, w)).collect()).collect();
        for (i, (v, cs)) in basis.iter().zip(&pass).enumerate() {
            for ((w, c), total) in ws.iter_mut().zip(cs).zip(coeffs.iter_mut()) {
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
                total[i] += c;
            }
        }
    }
    coeffs
}

struct Krylov<'a> {
    chol: EnvelopeCholesky,
    sqrt_mass: Vec<f64>,
    basis: Vec<Vec<f64>>,
    /// `columns[j][i] = v_iᵀ Op v_j`.
    columns: Vec<Vec<f64>>,
    /// Known eigenvectors (in the symmetric frame) kept out of the basis.
    deflation: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
    dim: usize,
    block: usize,
    lap: &'a CotanLaplacian,
}

impl Krylov<'_> {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut t: Vec<f64> = y.iter().zip(&self.sqrt_mass).map(|(a, s)| a * s).collect();
        self.chol.solve_in_place(&mut t);
        t.iter_mut().zip(&self.sqrt_mass).for_each(|(a, s)| *a *= s);
        t
    }

    /// Span of the complement of the deflated vectors.
    fn limit(&self) -> usize {
        self.dim - self.deflation.len()
    }

    fn orthogonalize(&self, w: &mut [f64]) -> Vec<f64> {
        orthogonalize(&self.deflation, w);
        orthogonalize(&self.basis, w)
    }

    /// Appends a random unit vector orthogonal to the basis. False once the
    /// basis spans the space.
    fn push_random(&mut self) -> bool {
        for _ in 0..4 {
            if self.basis.len() >= self.limit() {
                return false;
            }
            let mut w: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            let before = norm(&w);
            self.orthogonalize(&mut w);
            let after = norm(&w);
            if after > 1e-8 * before {
                w.iter_mut().for_each(|x| *x /= after);
                self.basis.push(w);
                return true;
            }
        }
        false
    }

    /// Extends the basis with `Op v_j` for the next block of unprocessed `j`.
    fn step(&mut self) -> bool {
        let start = self.columns.len();
        if start == self.basis.len() && !self.push_random() {
            return false;
        }
        let end = self.basis.len().min(start + self.block);
        let mut ws: Vec<Vec<f64>> = (start..end).map(|j| self.apply(&self.basis[j])).collect();
        let before: Vec<f64> = ws.iter().map(|w| norm(w)).collect();
        orthogonalize_block(&self.deflation, &mut ws);
        let coeffs = orthogonalize_block(&self.basis, &mut ws);
        let first_new = self.basis.len();
        for ((mut w, mut coeffs), before) in ws.into_iter().zip(coeffs).zip(before) {
            coeffs.extend(orthogonalize(&self.basis[first_new..], &mut w));
            if self.basis.len() < self.limit() {
                let after = norm(&w);
                if after > 1e-10 * before {
                    w.iter_mut().for_each(|x| *x /= after);
                    self.basis.push(w);
                    coeffs.push(after);
                } else if self.push_random() {
                    // Invariant subspace: continue from a fresh direction.
                    coeffs.push(0.0);
                }
            }
            self.columns.push(coeffs);
        }
        true
    }

    fn projected(&self) -> DMatrix<f64> {
        let k = self.columns.len();
        let entry = |i: usize, j: usize| self.columns[j].get(i).copied().unwrap_or(0.0);
        DMatrix::from_fn(k, k, |i, j| 0.5 * (entry(i, j) + entry(j, i)))
    }

    /// Residual-norm estimates `‖H[k.., ..k] s‖` for Ritz vectors `s`.
    fn residual_estimates(&self, ritz: &DMatrix<f64>, wanted: &[usize]) -> Vec<f64> {
        let k = self.columns.len();
        let rows = self.basis.len();
        wanted
            .iter()
            .map(|&c| {
                (k..rows)
                    .map(|i| {
                        (0..k)
                            .map(|j| self.columns[j].get(i).copied().unwrap_or(0.0) * ritz[(j, c)])
                            .sum::<f64>()
                            .powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Ritz vectors for columns `wanted` of `ritz`, built a chunk at a time
    /// so each basis vector is read once per chunk.
    fn ritz_vectors(&self, ritz: &DMatrix<f64>, wanted: &[usize]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(wanted.len());
        for chunk in wanted.chunks(16) {
            let mut ys = vec![vec![0.0; self.dim]; chunk.len()];
            for (j, v) in self.basis.iter().take(self.columns.len()).enumerate() {
                for (y, &c) in ys.iter_mut().zip(chunk) {
                    let s = ritz[(j, c)];
                    for (yi, vi) in y.iter_mut().zip(v) {
                        *yi += s * vi;
                    }
                }
            }
            out.extend(ys);
        }
        out
    }

    /// Mass-normalized eigenvectors with Rayleigh-quotient eigenvalues,
    /// ascending, sign-fixed.
    fn extract(&self, ritz: &DMatrix<f64>, wanted: &[usize]) -> Result<EigenSystem> {
        let m = self.dim;
        let stiffness = self.lap.stiffness();
        let mass = self.lap.mass();
        let mut pairs: Vec<(f64, Vec<f64>)> = self
            .deflation
            .iter()
            .cloned()
            .chain(self.ritz_vectors(ritz, wanted))
            .map(|y| {
                let mut x: Vec<f64> = y.iter().zip(&self.sqrt_mass).map(|(a, s)| a / s).collect();
                let xa: f64 = x.iter().zip(mass).map(|(v, a)| v * v * a).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v /= xa);
                let mut cx = vec![0.0; m];
                stiffness.mul_vec(&x, &mut cx);
                let lambda = dot(&x, &cx).max(0.0);
                fix_sign(&mut x);
                (lambda, x)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let eigenvalues = pairs.iter().map(|p| p.0).collect();
        let eigenvectors = DMatrix::from_fn(m, pairs.len(), |i, l| pairs[l].1[i]);
        EigenSystem::new(eigenvalues, eigenvectors, mass.to_vec())
    }
}

/// All pairs of `S⁻¹ C S⁻¹` by a dense symmetric solve, truncated to the
/// smallest `count`.
fn solve_dense(lap: &CotanLaplacian, count: usize) -> Result<EigenSystem> {
    let m = lap.dim();
    let inv_sqrt: Vec<f64> = lap.mass().iter().map(|a| 1.0 / a.sqrt()).collect();
    let mut dense = DMatrix::zeros(m, m);
    for i in 0..m {
        for (j, v) in lap.stiffness().row(i) {
            dense[(i, j)] = v * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = SymmetricEigen::new(dense);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("dense eigensolve produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(m, count);
    for (l, &c) in order[..count].iter().enumerate() {
        let mut x: Vec<f64> = (0..m).map(|i| eig.eigenvectors[(i, c)] * inv_sqrt[i]).collect();
        fix_sign(&mut x);
        vectors.set_column(l, &nalgebra::DVector::from_vec(x));
    }
    let values = order[..count].iter().map(|&c| eig.eigenvalues[c].max(0.0)).collect();
    EigenSystem::new(values, vectors, lap.mass().to_vec())
}

/// Flips `x` so its entry of largest magnitude (first on ties) is positive.
fn fix_sign(x: &mut [f64]) {
    let (idx, _) = x
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    if x[idx] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// The requested shift, pushed away from zero to at least `1e-6` of the
/// Gershgorin bound on the spectrum. Shifting leaves the eigenvectors
/// unchanged; a shift far below that scale makes `C − σA` so ill-conditioned
/// that solves lose about `1e-16 / |σ|` in the directions orthogonal to the
/// kernel.
pub fn effective_shift(lap: &CotanLaplacian, shift: f64) -> f64 {
    let max_mass = lap.mass().iter().copied().fold(0.0, f64::max);
    let scale = lap.stiffness().norm_inf() / max_mass;
    shift.min(-1e-6 * scale)
}

fn shifted(stiffness: &CsrMatrix, mass: &[f64], shift: f64) -> CsrMatrix {
    let rows = (0..stiffness.dim())
        .map(|i| {
            stiffness
                .row(i)
                .map(|(j, v)| (j, if i == j { v - shift * mass[i] } else { v }))
                .collect()
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// Smallest `count` generalized eigenpairs of the cotangent Laplacian.
///
/// Requires `1 ≤ count ≤ m − 1`. Every returned pair satisfies
/// `‖Cξ − λAξ‖₂ ≤ residual_tolerance · ‖C‖∞`; otherwise the solver keeps
/// extending the Krylov basis until its cap and then fails with the worst
/// residual seen.
///
/// When a third or more of the spectrum is wanted the Krylov basis would
/// have to span nearly the whole space, so a dense solve is used instead.
pub fn solve_eigs_with(lap: &CotanLaplacian, count: usize, opts: &EigenSolverOptions) -> Result<EigenSystem> {
    let m = lap.dim();
    if count == 0 || count + 1 > m {
        return Err(Error::Argument(format!(
            "eigenpair count must be in 1..={} for a {m}-vertex mesh, got {count}",
            m.saturating_sub(1)
        )));
    }
    if !(opts.shift <= 0.0) {
        return Err(Error::Argument(format!("shift must be nonpositive, got {}", opts.shift)));
    }
    if 3 * count >= m {
        return solve_dense(lap, count);
    }
    let kmat = shifted(lap.stiffness(), lap.mass(), effective_shift(lap, opts.shift));
    let chol = EnvelopeCholesky::factor(&kmat)?;
    let c_norm = lap.stiffness().norm_inf();
    let k_norm = kmat.norm_inf();
    let tolerance = opts.residual_tolerance * c_norm;
    let sqrt_mass: Vec<f64> = lap.mass().iter().map(|a| a.sqrt()).collect();
    let min_sqrt_mass = sqrt_mass.iter().copied().fold(f64::INFINITY, f64::min);
    let cap = opts.max_iterations.unwrap_or(50 * count).clamp(count, m);
    let block = opts.block_size.clamp(1, m);

    // Row sums of C vanish, so the constant vector spans the kernel of a
    // connected mesh. Its image under the factored operator carries the huge
    // 1/(0 − σ) Ritz value; deflating it keeps that value out of the
    // projected matrix, where its rounding would swamp the rest of the
    // spectrum. Two inverse-iteration steps align the deflated vector with
    // the factored operator rather than the exact kernel, since even a
    // 1e-14 misalignment is amplified by 1/|σ|.
    let kernel_norm = norm(&sqrt_mass);
    let mut kernel: Vec<f64> = sqrt_mass.iter().map(|s| s / kernel_norm).collect();
    let mut krylov = Krylov {
        chol,
        sqrt_mass,
        basis: Vec::new(),
        columns: Vec::new(),
        deflation: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        dim: m,
        block,
        lap,
    };
    for _ in 0..2 {
        kernel = krylov.apply(&kernel);
        let n = norm(&kernel);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Numerical("shift-invert operator is singular".into()));
        }
        kernel.iter_mut().for_each(|x| *x /= n);
    }
    krylov.deflation.push(kernel);
    let wanted_count = count - 1;
    if wanted_count == 0 {
        return krylov.extract(&DMatrix::zeros(0, 0), &[]);
    }
    let limit = krylov.limit();
    let cap = cap.min(limit);
    for _ in 0..block.min(limit) {
        krylov.push_random();
    }

    // Shift-invert on surface Laplacians typically needs well over twice as
    // many basis vectors as wanted pairs; earlier checks only cost time.
    let mut next_check = (2 * wanted_count).max(wanted_count + block).min(cap);
    let mut worst = f64::INFINITY;
    loop {
        let progressed = krylov.step();
        let k = krylov.columns.len();
        if k < next_check && progressed && k < cap {
            continue;
        }
        if k >= wanted_count {
            let eig = SymmetricEigen::new(krylov.projected());
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
            let wanted = &order[..wanted_count];
            let estimates = krylov.residual_estimates(&eig.eigenvectors, wanted);
            let exhausted = k == limit || !progressed;
            // The shift-inverted residual r maps to a generalized residual of
            // at most about ‖K‖ · r / (θ · min √a).
            let likely = exhausted
                || wanted.iter().zip(&estimates).all(|(&c, &r)| {
                    let theta = eig.eigenvalues[c];
                    theta > 0.0 && r * k_norm / (theta * min_sqrt_mass) <= 0.5 * tolerance
                });
            if likely {
                let system = krylov.extract(&eig.eigenvectors, wanted)?;
                worst = system.residuals(lap).into_iter().fold(0.0, f64::max);
                if worst <= tolerance {
                    return Ok(system);
                }
                if exhausted {
                    break;
                }
            }
        }
        if k >= cap || !progressed {
            break;
        }
        next_check = (k + block.max(k / 8)).min(cap);
    }
    Err(Error::Numerical(format!(
        "Lanczos did not converge within {cap} basis vectors; worst residual {worst:e} (tolerance {tolerance:e})"
    )))
}
