//! Independent reference implementations used as test oracles. Nothing here
//! calls into the code paths it checks.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use spectralweight::mesh::{simplify, TriangleMesh};
use spectralweight::shapes;

/// The 200-vertex sphere used by the eigensolver checks: a level-3
/// icosphere reduced to 200 vertices, which breaks the icosahedral
/// symmetry and leaves a simple low spectrum.
pub fn sphere_200() -> TriangleMesh {
    let out = simplify(&shapes::icosphere(1.0, 3), 200).unwrap();
    assert!(out.reached_target);
    out.mesh
}

fn angle_at(apex: usize, a: usize, b: usize, mesh: &TriangleMesh) -> f64 {
    let p = mesh.vertices();
    let u = (p[a] - p[apex]).normalize();
    let v = (p[b] - p[apex]).normalize();
    u.dot(&v).clamp(-1.0, 1.0).acos()
}

/// Dense cotangent stiffness and mixed Voronoi areas, accumulated one
/// triangle at a time from explicit angles.
pub fn dense_laplacian(mesh: &TriangleMesh) -> (DMatrix<f64>, Vec<f64>) {
    let n = mesh.vertex_count();
    let p = mesh.vertices();
    let mut c = DMatrix::zeros(n, n);
    let mut mass = vec![0.0; n];
    for f in mesh.faces() {
        let angles = [
            angle_at(f[0], f[1], f[2], mesh),
            angle_at(f[1], f[2], f[0], mesh),
            angle_at(f[2], f[0], f[1], mesh),
        ];
        for corner in 0..3 {
            let i = f[(corner + 1) % 3];
            let j = f[(corner + 2) % 3];
            let w = 0.5 / angles[corner].tan();
            c[(i, j)] -= w;
            c[(j, i)] -= w;
            c[(i, i)] += w;
            c[(j, j)] += w;
        }
        let area = 0.5 * (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]])).norm();
        let obtuse = angles.iter().position(|&a| a > std::f64::consts::FRAC_PI_2);
        for corner in 0..3 {
            let v = f[corner];
            mass[v] += match obtuse {
                Some(o) if o == corner => area / 2.0,
                Some(_) => area / 4.0,
                None => {
                    let a = (corner + 1) % 3;
                    let b = (corner + 2) % 3;
                    let to_b = (p[f[b]] - p[v]).norm_squared();
                    let to_a = (p[f[a]] - p[v]).norm_squared();
                    (to_b / angles[a].tan() + to_a / angles[b].tan()) / 8.0
                }
            };
        }
    }
    (c, mass)
}

/// All generalized eigenpairs via a dense symmetric solve of
/// `A^{-1/2} C A^{-1/2}`; ascending, vectors mass-normalized.
pub fn dense_generalized_eigen(c: &DMatrix<f64>, mass: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = mass.len();
    let inv_sqrt: Vec<f64> = mass.iter().map(|a| 1.0 / a.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| c[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let m = 0.5 * (&m + m.transpose());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, l| eig.eigenvectors[(i, order[l])] * inv_sqrt[i]);
    (values, vectors)
}

/// Largest distance (in the mass inner product) from any column of `x` to the
/// span of the oracle eigenvectors sharing its eigenvalue cluster. Equals
/// the sign-aligned vector difference for simple eigenvalues.
pub fn eigvec_subspace_error(
    values: &[f64],
    x: &DMatrix<f64>,
    oracle_values: &[f64],
    oracle: &DMatrix<f64>,
    mass: &[f64],
    cluster_rel: f64,
) -> f64 {
    let scale = *oracle_values.last().unwrap();
    let mut worst: f64 = 0.0;
    for l in 0..values.len() {
        let members: Vec<usize> = (0..oracle_values.len())
            .filter(|&k| (oracle_values[k] - values[l]).abs() <= cluster_rel * scale)
            .collect();
        assert!(!members.is_empty(), "eigenvalue {} has no oracle counterpart", values[l]);
        let xl = x.column(l).into_owned();
        let mut residual = xl.clone();
        for &k in &members {
            let q = oracle.column(k);
            let coef: f64 = (0..mass.len()).map(|i| q[i] * mass[i] * xl[i]).sum();
            residual -= coef * q;
        }
        let err: f64 = (0..mass.len()).map(|i| residual[i].powi(2) * mass[i]).sum::<f64>().sqrt();
        worst = worst.max(err);
    }
    worst
}

/// Least-squares solution with an intercept column via SVD.
pub fn ols_predictions(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let (n, d) = x.shape();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let svd = design.clone().svd(true, true);
    let beta = svd.solve(&DVector::from_column_slice(y), 1e-12).unwrap();
    (design * beta).iter().copied().collect()
}

/// Single-response SIMPLS (de Jong 1993) on centered data, with columns
/// also divided by their standard deviation when `scale` is set; returns
/// predictions for `x_new` rows.
pub fn simpls_predict(x: &DMatrix<f64>, y: &[f64], components: usize, x_new: &DMatrix<f64>, scale: bool) -> Vec<f64> {
    let (n, d) = x.shape();
    let mean = |col: usize| (0..n).map(|i| x[(i, col)]).sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..d).map(mean).collect();
    let sds: Vec<f64> = (0..d)
        .map(|j| {
            let s = ((0..n).map(|i| (x[(i, j)] - means[j]).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            if s > 0.0 && scale { s } else { 1.0 }
        })
        .collect();
    let ym = y.iter().sum::<f64>() / n as f64;
    let ysd = (y.iter().map(|v| (v - ym).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let xs = DMatrix::from_fn(n, d, |i, j| (x[(i, j)] - means[j]) / sds[j]);
    let ys = DVector::from_iterator(n, y.iter().map(|v| (v - ym) / ysd));

    let mut s = xs.transpose() * &ys;
    let mut r_mat = DMatrix::zeros(d, components);
    let mut v_mat: DMatrix<f64> = DMatrix::zeros(d, components);
    let mut q = DVector::zeros(components);
    for a in 0..components {
        let r = s.clone();
        let mut t = &xs * &r;
        let tn = t.norm();
        t /= tn;
        let r = r / tn;
        let p = xs.transpose() * &t;
        q[a] = ys.dot(&t);
        let mut v = p.clone();
        for b in 0..a {
            let vb = v_mat.column(b).into_owned();
            v -= vb.dot(&p) * &vb;
        }
        v /= v.norm();
        s -= v.dot(&s) * &v;
        r_mat.set_column(a, &r);
        v_mat.set_column(a, &v);
    }
    let beta = &r_mat * q;
    (0..x_new.nrows())
        .map(|i| {
            let z: f64 = (0..d).map(|j| (x_new[(i, j)] - means[j]) / sds[j] * beta[j]).sum();
            ym + ysd * z
        })
        .collect()
}

/// An arbitrary fixed rotation followed by a translation.
pub fn rigid_motion(mesh: &TriangleMesh) -> TriangleMesh {
    let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    mesh.map_vertices(|p| rot * p + nalgebra::Vector3::new(7.0, -3.0, 11.0))
}
