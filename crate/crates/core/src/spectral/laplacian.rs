use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

use super::sparse::CsrMatrix;

/// Cotangent stiffness `C = D − W` and lumped mixed-Voronoi mass.
///
/// `W` holds the plain cotangent weights; the area normalization lives in
/// the mass matrix of the generalized problem `C ξ = λ A ξ`.
#[derive(Debug, Clone)]
pub struct CotanLaplacian {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
}

impl CotanLaplacian {
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Diagonal of the mass matrix, one area per vertex.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }
}

/// Cotangent of the corner angle at `apex` between edges to `a` and `b`,
/// plus twice the triangle area.
fn corner_cot(apex: &crate::mesh::Point, a: &crate::mesh::Point, b: &crate::mesh::Point) -> (f64, f64) {
    let (u, v) = (a - apex, b - apex);
    let cross = u.cross(&v).norm();
    (u.dot(&v) / cross, cross)
}

/// Assembles the stiffness and mass matrices.
///
/// Edge weights are `(cot α + cot β) / 2` over the (one or two) faces
/// adjacent to the edge. Vertex areas follow the mixed Voronoi rule: the
/// circumcentric share for non-obtuse faces, otherwise half the face area at
/// the obtuse corner and a quarter at the other two.
pub fn build_laplacian(mesh: &TriangleMesh) -> Result<CotanLaplacian> {
    let n = mesh.vertex_count();
    let pts = mesh.vertices();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut mass = vec![0.0; n];

    for (fi, face) in mesh.faces().iter().enumerate() {
        let p = face.map(|v| pts[v]);
        let mut cots = [0.0; 3];
        let mut twice_area = 0.0;
        for k in 0..3 {
            let (cot, cross) = corner_cot(&p[k], &p[(k + 1) % 3], &p[(k + 2) % 3]);
            if !cot.is_finite() || cross == 0.0 {
                return Err(Error::Numerical(format!(
                    "face {fi} {face:?} is degenerate (cotangent overflow)"
                )));
            }
            cots[k] = cot;
            twice_area = cross;
        }
        let area = 0.5 * twice_area;

        for k in 0..3 {
            // The angle at corner k is opposite edge (k+1, k+2).
            let (i, j) = (face[(k + 1) % 3], face[(k + 2) % 3]);
            let w = 0.5 * cots[k];
            rows[i].push((j, -w));
            rows[j].push((i, -w));
            rows[i].push((i, w));
            rows[j].push((j, w));
        }

        let obtuse = (0..3).find(|&k| cots[k] < 0.0);
        for k in 0..3 {
            mass[face[k]] += match obtuse {
                None => {
                    let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                    // |p_k p_b|² cot(angle at a) + |p_k p_a|² cot(angle at b)
                    ((p[b] - p[k]).norm_squared() * cots[a] + (p[a] - p[k]).norm_squared() * cots[b]) / 8.0
                }
                Some(o) if o == k => area / 2.0,
                Some(_) => area / 4.0,
            };
        }
    }

    if let Some(i) = mass.iter().position(|&a| !(a > 0.0)) {
        return Err(Error::Numerical(format!(
            "vertex {i} has nonpositive mixed area {}",
            mass[i]
        )));
    }

    Ok(CotanLaplacian {
        stiffness: CsrMatrix::from_rows(rows),
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point;
    use crate::shapes;

    #[test]
    fn equilateral_triangle_weights() {
        let h = 3f64.sqrt() / 2.0;
        let mesh = TriangleMesh::new(
            vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.5, h, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let lap = build_laplacian(&mesh).unwrap();
        let expected = (1.0 / 3f64.sqrt()) / 2.0;
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert!((-lap.stiffness().get(i, j) - expected).abs() < 1e-15);
        }
        assert!((expected - 0.288675).abs() < 1e-6);
        // Equal thirds of the area.
        let area = h / 2.0;
        for a in lap.mass() {
            assert!((a - area / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_sum_to_zero() {
        for mesh in [shapes::icosphere(1.0, 3), shapes::strip(5.0, 1.0, 7), shapes::unit_cube()] {
            let lap = build_laplacian(&mesh).unwrap();
            let scale = lap.stiffness().max_abs();
            for s in lap.stiffness().row_sums() {
                assert!(s.abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn pattern_matches_edges() {
        let mesh = shapes::icosphere(1.0, 2);
        let lap = build_laplacian(&mesh).unwrap();
        assert_eq!(lap.stiffness().nnz(), mesh.vertex_count() + 2 * mesh.edges().len());
    }

    #[test]
    fn mass_sums_to_surface_area() {
        let mesh = shapes::bumpy_ellipsoid([3.0, 2.0, 1.0], &[], 3);
        let lap = build_laplacian(&mesh).unwrap();
        let total: f64 = lap.mass().iter().sum();
        assert!((total - mesh.surface_area()).abs() < 1e-10 * total);
    }

    #[test]
    fn degenerate_face_is_named() {
        let mesh = TriangleMesh::new(
            vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        match build_laplacian(&mesh) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("face 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unreferenced_vertex_has_no_area() {
        let t = shapes::tetrahedron();
        let mut v = t.vertices().to_vec();
        v.push(Point::new(9.0, 9.0, 9.0));
        let mesh = TriangleMesh::new(v, t.faces().to_vec()).unwrap();
        assert!(matches!(build_laplacian(&mesh), Err(Error::Numerical(_))));
    }
}
