//! Bag of geometric words: learn a dictionary from the signatures of a few
//! shapes, soft-assign each vertex and pool into a feature vector.
//!
//!     cargo run --example geometric_words -- [k]

use spectralweight::encoding::{assemble_features, concatenate, feature_names, learn_dictionary, pool, soft_assign};
use spectralweight::mesh::{geodesic_diameter, simplify, volume, TriangleMesh};
use spectralweight::sgws::{compute_signature, design_filter_bank, SignatureMatrix};
use spectralweight::shapes::{bumpy_ellipsoid, icosphere};
use spectralweight::spectral::{build_laplacian, solve_eigs};

fn signature(mesh: &TriangleMesh) -> spectralweight::Result<SignatureMatrix> {
    let eigs = solve_eigs(&build_laplacian(mesh)?, 100)?;
    compute_signature(&eigs, &design_filter_bank(eigs.lambda_max(), 2)?)
}

fn main() -> spectralweight::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(16, |s| s.parse().expect("k must be an integer"));
    let shapes = [
        ("sphere", icosphere(1.0, 3)),
        ("ellipsoid", bumpy_ellipsoid([2.0, 1.0, 0.8], &[], 3)),
        ("long ellipsoid", bumpy_ellipsoid([3.5, 1.0, 0.6], &[], 3)),
    ];
    let meshes: Vec<(&str, TriangleMesh)> = shapes
        .into_iter()
        .map(|(name, m)| Ok((name, simplify(&m, 400)?.mesh)))
        .collect::<spectralweight::Result<_>>()?;
    let signatures: Vec<SignatureMatrix> = meshes.iter().map(|(_, m)| signature(m)).collect::<Result<_, _>>()?;

    let dict = learn_dictionary(&concatenate(&signatures.iter().collect::<Vec<_>>())?, k, 7)?;
    println!("{} words, sigma {:.3e}, {} Lloyd iterations", dict.k(), dict.sigma(), dict.iterations());

    let names = feature_names(k);
    println!("{:<16}{}", "", names.join(" "));
    for ((name, mesh), sig) in meshes.iter().zip(&signatures) {
        let codes = soft_assign(sig, &dict)?;
        let hist = pool(&codes);
        let f = assemble_features(hist, geodesic_diameter(mesh)?.length, volume(mesh).value, 1.0)?;
        let cells: Vec<String> = f.to_vec().iter().map(|v| format!("{v:.1}")).collect();
        println!("{name:<16}{}", cells.join(" "));
    }
    Ok(())
}
