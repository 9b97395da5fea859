mod common;

use nalgebra::Rotation3;
use spectralweight::mesh::Point;
use spectralweight::shapes;
use spectralweight::spectral::{build_laplacian, solve_eigs, solve_eigs_with, EigenSolverOptions};

#[test]
fn laplacian_matches_dense_oracle() {
    let mesh = common::sphere_200();
    let lap = build_laplacian(&mesh).unwrap();
    let (c, mass) = common::dense_laplacian(&mesh);
    let assembled = lap.stiffness().to_dense();
    let diff = (&assembled - &c).abs().max();
    assert!(diff < 1e-12, "stiffness differs by {diff:e}");
    for (a, b) in lap.mass().iter().zip(&mass) {
        assert!((a - b).abs() < 1e-12);
    }
    let asym = (&assembled - assembled.transpose()).abs().max();
    assert!(asym <= 1e-12 * assembled.abs().max());
}

#[test]
fn lanczos_matches_dense_oracle() {
    let mesh = common::sphere_200();
    let lap = build_laplacian(&mesh).unwrap();
    let eigs = solve_eigs(&lap, 50).unwrap();
    let (c, mass) = common::dense_laplacian(&mesh);
    let (values, vectors) = common::dense_generalized_eigen(&c, &mass);
    let lmax = eigs.lambda_max();
    for (l, (a, b)) in eigs.eigenvalues().iter().zip(&values).enumerate() {
        let err = if l == 0 { (a - b).abs() / lmax } else { ((a - b) / b).abs() };
        assert!(err < 1e-8, "eigenvalue {l}: {a} vs {b}");
    }
    let verr = common::eigvec_subspace_error(eigs.eigenvalues(), eigs.eigenvectors(), &values, &vectors, &mass, 1e-9);
    assert!(verr < 1e-6, "eigenvector error {verr:e}");
}

#[test]
fn repeated_eigenvalues_are_all_found() {
    // Rotational symmetry about z makes most eigenvalues double.
    let mesh = shapes::uv_sphere(1.0, 18, 12);
    assert_eq!(mesh.vertex_count(), 200);
    let lap = build_laplacian(&mesh).unwrap();
    let eigs = solve_eigs(&lap, 40).unwrap();
    let (c, mass) = common::dense_laplacian(&mesh);
    let (values, vectors) = common::dense_generalized_eigen(&c, &mass);
    for (l, (a, b)) in eigs.eigenvalues().iter().zip(&values).enumerate().skip(1) {
        assert!(((a - b) / b).abs() < 1e-8, "eigenvalue {l}: {a} vs {b}");
    }
    let verr = common::eigvec_subspace_error(eigs.eigenvalues(), eigs.eigenvectors(), &values, &vectors, &mass, 1e-8);
    assert!(verr < 1e-6, "{verr:e}");
}

#[test]
fn kernel_and_orthonormality() {
    let mesh = shapes::bumpy_ellipsoid([2.0, 1.5, 1.0], &[], 3);
    let lap = build_laplacian(&mesh).unwrap();
    let eigs = solve_eigs(&lap, 60).unwrap();
    let lambdas = eigs.eigenvalues();
    assert!(lambdas[0] < 1e-8 * eigs.lambda_max());
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
    let first = eigs.eigenvectors().column(0);
    let mean = first.mean();
    assert!(first.iter().all(|v| ((v - mean) / mean).abs() < 1e-6));
    let total: f64 = lap.mass().iter().sum();
    assert!((mean - 1.0 / total.sqrt()).abs() < 1e-6 * mean);

    let x = eigs.eigenvectors();
    let a = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lap.mass()));
    let gram = x.transpose() * &a * x;
    let eye = nalgebra::DMatrix::<f64>::identity(60, 60);
    assert!((&gram - eye).abs().max() < 1e-8);
    let c = lap.stiffness().to_dense();
    let proj = x.transpose() * c * x;
    let diag = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lambdas));
    assert!((proj - diag).abs().max() < 1e-8 * eigs.lambda_max());

    let tol = 1e-8 * lap.stiffness().norm_inf();
    assert!(eigs.residuals(&lap).iter().all(|&r| r <= tol));
}

#[test]
fn spectrum_is_rigid_invariant_and_scales() {
    let mesh = shapes::bumpy_ellipsoid([2.0, 1.5, 1.0], &[], 3);
    let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let moved = mesh.map_vertices(|p| rot * p + Point::new(7.0, -3.0, 11.0));
    let scaled = mesh.map_vertices(|p| p * 2.5);
    let base = solve_eigs(&build_laplacian(&mesh).unwrap(), 30).unwrap();
    let rigid = solve_eigs(&build_laplacian(&moved).unwrap(), 30).unwrap();
    let big = solve_eigs(&build_laplacian(&scaled).unwrap(), 30).unwrap();
    for l in 1..30 {
        let b = base.eigenvalues()[l];
        assert!(((rigid.eigenvalues()[l] - b) / b).abs() < 1e-9);
        assert!(((big.eigenvalues()[l] * 2.5 * 2.5 - b) / b).abs() < 1e-9);
    }
}

#[test]
fn count_bounds() {
    let lap = build_laplacian(&shapes::icosphere(1.0, 1)).unwrap();
    let m = lap.dim();
    assert!(solve_eigs(&lap, 0).is_err());
    assert!(solve_eigs(&lap, m).is_err());
    let all = solve_eigs(&lap, m - 1).unwrap();
    assert_eq!(all.count(), m - 1);
}

#[test]
fn solver_is_deterministic() {
    let lap = build_laplacian(&shapes::icosphere(1.0, 2)).unwrap();
    let a = solve_eigs(&lap, 20).unwrap();
    let b = solve_eigs(&lap, 20).unwrap();
    assert_eq!(a, b);
}

#[test]
fn iteration_cap_reports_failure() {
    let lap = build_laplacian(&shapes::icosphere(1.0, 3)).unwrap();
    let opts = EigenSolverOptions {
        max_iterations: Some(30),
        block_size: 1,
        ..Default::default()
    };
    let err = solve_eigs_with(&lap, 30, &opts).unwrap_err();
    assert!(err.to_string().contains("residual"), "{err}");
}
