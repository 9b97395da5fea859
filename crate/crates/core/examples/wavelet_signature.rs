//! Spectral graph wavelet signature of a bumpy ellipsoid: the filter bank and
//! the descriptor at the bump apex versus the opposite side.
//!
//!     cargo run --example wavelet_signature -- [resolution]

use spectralweight::mesh::Point;
use spectralweight::sgws::{compute_signature, design_filter_bank};
use spectralweight::shapes::{bumpy_ellipsoid, Bump};
use spectralweight::spectral::{build_laplacian, solve_eigs};

fn main() -> spectralweight::Result<()> {
    let resolution: usize = std::env::args().nth(1).map_or(2, |s| s.parse().expect("resolution must be an integer"));
    let apex = Point::new(0.0, 0.0, 1.0);
    let mesh = bumpy_ellipsoid(
        [2.0, 1.5, 1.0],
        &[Bump {
            direction: apex,
            amplitude: 0.4,
            width: 0.35,
        }],
        4,
    );
    let eigs = solve_eigs(&build_laplacian(&mesh)?, 120)?;
    let bank = design_filter_bank(eigs.lambda_max(), resolution)?;
    println!(
        "lambda_max {:.4}, lambda_min {:.4}, scaling width {:.4}",
        bank.lambda_max(),
        bank.lambda_min(),
        bank.scaling_width()
    );
    for level in 1..=resolution {
        println!("level {level} scales {:?}", bank.scales(level));
    }

    let sig = compute_signature(&eigs, &bank)?;
    let extreme = |sign: f64| {
        (0..mesh.vertex_count())
            .max_by(|&a, &b| (sign * mesh.vertices()[a].z).total_cmp(&(sign * mesh.vertices()[b].z)))
            .unwrap()
    };
    for (name, v) in [("bump apex", extreme(1.0)), ("opposite", extreme(-1.0))] {
        let row: Vec<String> = sig.column(v).iter().map(|x| format!("{x:.5}")).collect();
        println!("{name:>10}: [{}]", row.join(", "));
    }
    Ok(())
}
