//! Discrete Laplace–Beltrami operator and its low-frequency spectrum.

mod cholesky;
mod lanczos;
mod laplacian;
mod sparse;

pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use lanczos::{
    default_eigen_count, effective_shift, solve_eigs, solve_eigs_with, EigenSolverOptions, EigenSystem,
    DEFAULT_EIGEN_COUNT,
};
pub use laplacian::{build_laplacian, CotanLaplacian};
pub use sparse::CsrMatrix;
