//! Shape descriptors and weight regression for scanned triangle meshes.
//!
//! The crate turns a set of triangle meshes into fixed-length feature
//! vectors and fits a latent-variable regression from those vectors to
//! scalar targets:
//!
//! 1. [`mesh`]: OBJ I/O, validation, quadric edge-collapse simplification,
//!    enclosed volume and graph-geodesic diameter.
//! 2. [`spectral`]: cotangent Laplace–Beltrami stiffness/mass assembly and a
//!    shift-invert block Lanczos solver for the low end of its spectrum.
//! 3. [`sgws`]: multi-resolution spectral graph wavelet signatures, one
//!    `p`-dimensional descriptor per vertex.
//! 4. [`encoding`]: k-means dictionary, soft-assignment coding and sum
//!    pooling into a bag-of-geometric-words histogram, augmented with
//!    diameter, volume and carcass weight.
//! 5. [`regression`]: single-response NIPALS partial least squares,
//!    leave-one-out cross-validation and R²/RMSE/CVe metrics.
//! 6. [`pipeline`]: manifests, configuration, caching and the
//!    `extract`/`train`/`evaluate`/`predict`/`synth` commands.
//!
//! [`shapes`] generates the procedural meshes used by the examples, the
//! tests and the synthetic dataset generator.

pub mod cache;
pub mod encoding;
pub mod error;
pub mod mesh;
pub mod pipeline;
pub mod regression;
pub mod sgws;
pub mod shapes;
pub mod spectral;

pub use error::{Error, Result};
pub use mesh::TriangleMesh;
