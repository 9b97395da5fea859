//! Procedural meshes: primitives for tests and examples, and the bumpy
//! ellipsoids used by the synthetic dataset generator.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::mesh::{Point, TriangleMesh};

fn build(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, faces).expect("procedural mesh is well formed")
}

/// Tetrahedron on the origin and the three unit axis points, outward faces.
pub fn tetrahedron() -> TriangleMesh {
    build(
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    )
}

/// Axis-aligned `[0,1]³`, two triangles per side.
pub fn unit_cube() -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    build(vertices, faces)
}

/// Flat `length × width` strip in the z = 0 plane, `segments` quads long.
pub fn strip(length: f64, width: f64, segments: usize) -> TriangleMesh {
    let segments = segments.max(1);
    let mut vertices = Vec::with_capacity(2 * (segments + 1));
    for i in 0..=segments {
        let x = length * i as f64 / segments as f64;
        vertices.push(Point::new(x, 0.0, 0.0));
        vertices.push(Point::new(x, width, 0.0));
    }
    let mut faces = Vec::with_capacity(2 * segments);
    for i in 0..segments {
        let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
        faces.push([a, b, c]);
        faces.push([a, c, d]);
    }
    build(vertices, faces)
}

/// Subdivided icosahedron projected onto a sphere. Level `l` has
/// `10·4^l + 2` vertices.
pub fn icosphere(radius: f64, level: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    build(vertices, faces)
}

/// Latitude/longitude sphere: two poles plus `rings - 1` parallels of
/// `segments` vertices each.
pub fn uv_sphere(radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    assert!(segments >= 3 && rings >= 2, "uv_sphere needs segments >= 3 and rings >= 2");
    let mut vertices = vec![Point::new(0.0, 0.0, radius)];
    for r in 1..rings {
        let theta = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let phi = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(radius * Point::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
        }
    }
    let south = vertices.len();
    vertices.push(Point::new(0.0, 0.0, -radius));
    let ring = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring(1, s), ring(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (ring(r, s), ring(r + 1, s), ring(r + 1, s + 1), ring(r, s + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for s in 0..segments {
        faces.push([south, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    build(vertices, faces)
}

/// Smooth radial bump centered on a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub direction: Point,
    /// Relative radial gain at the apex.
    pub amplitude: f64,
    /// Angular width in radians.
    pub width: f64,
}

/// Icosphere of the given subdivision level stretched to semi-axes `axes`,
/// with each bump scaling the radius by `1 + amplitude·exp(-(angle/width)²)`.
pub fn bumpy_ellipsoid(axes: [f64; 3], bumps: &[Bump], level: u32) -> TriangleMesh {
    let sphere = icosphere(1.0, level);
    sphere.map_vertices(|p| {
        let gain: f64 = bumps
            .iter()
            .map(|b| {
                let angle = p.dot(&b.direction.normalize()).clamp(-1.0, 1.0).acos();
                b.amplitude * (-(angle / b.width).powi(2)).exp()
            })
            .sum();
        let r = 1.0 + gain;
        Point::new(axes[0] * p.x * r, axes[1] * p.y * r, axes[2] * p.z * r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{validate, volume};

    #[test]
    fn primitives_are_closed_and_outward() {
        for mesh in [
            tetrahedron(),
            unit_cube(),
            icosphere(1.0, 2),
            uv_sphere(1.0, 18, 12),
            bumpy_ellipsoid(
                [3.0, 2.0, 1.0],
                &[Bump {
                    direction: Point::new(1.0, 1.0, 0.0),
                    amplitude: 0.2,
                    width: 0.3,
                }],
                2,
            ),
        ] {
            let r = validate(&mesh);
            assert!(r.is_watertight && r.is_usable(), "{r:?}");
            // Outward orientation gives a positive signed volume.
            let signed: f64 = mesh
                .faces()
                .iter()
                .map(|f| {
                    let v = mesh.vertices();
                    v[f[0]].dot(&v[f[1]].cross(&v[f[2]]))
                })
                .sum();
            assert!(signed > 0.0);
            assert!(volume(&mesh).value > 0.0);
        }
    }

    #[test]
    fn vertex_counts() {
        assert_eq!(icosphere(1.0, 3).vertex_count(), 642);
        assert_eq!(uv_sphere(1.0, 18, 12).vertex_count(), 200);
        assert_eq!(strip(1.0, 1.0, 5).vertex_count(), 12);
    }
}
