//! Low end of the cotangent Laplace-Beltrami spectrum of a sphere, compared
//! with the continuous values l(l + 1) / r².
//!
//!     cargo run --example laplacian_spectrum -- [count]

use spectralweight::shapes::icosphere;
use spectralweight::spectral::{build_laplacian, solve_eigs};

fn main() -> spectralweight::Result<()> {
    let count: usize = std::env::args().nth(1).map_or(36, |s| s.parse().expect("count must be an integer"));
    let mesh = icosphere(1.0, 4);
    let lap = build_laplacian(&mesh)?;
    let start = std::time::Instant::now();
    let eigs = solve_eigs(&lap, count)?;
    println!("{} eigenpairs of a {}-vertex sphere in {:.2?}", count, mesh.vertex_count(), start.elapsed());

    // Degree l has multiplicity 2l + 1.
    let mut l = 0;
    let mut seen = 0;
    let residuals = eigs.residuals(&lap);
    for (i, lambda) in eigs.eigenvalues().iter().enumerate() {
        if seen == 2 * l + 1 {
            l += 1;
            seen = 0;
        }
        seen += 1;
        let exact = (l * (l + 1)) as f64;
        println!("{i:>4}  {lambda:>10.5}  continuous {exact:>5}  residual {:.1e}", residuals[i]);
    }
    Ok(())
}
