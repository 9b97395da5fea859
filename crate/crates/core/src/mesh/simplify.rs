//! Quadric-error-metric edge collapse.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Matrix3;

use super::{Point, TriangleMesh};
use crate::error::{Error, Result};

/// Collapses whose moved faces rotate further than this (cosine between old
/// and new normal) are rejected; negative values would be outright flips.
const MIN_NORMAL_COSINE: f64 = 0.2;
const BOUNDARY_PENALTY: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct SimplifyOutcome {
    pub mesh: TriangleMesh,
    /// False when no further collapse was topologically admissible before the
    /// target was reached; `mesh` is then the smallest mesh achieved.
    pub reached_target: bool,
}

/// Symmetric 4×4 plane quadric, upper triangle.
#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn from_plane(n: Point, d: f64, weight: f64) -> Self {
        let (a, b, c) = (n.x, n.y, n.z);
        Quadric(
            [
                a * a,
                a * b,
                a * c,
                a * d,
                b * b,
                b * c,
                b * d,
                c * c,
                c * d,
                d * d,
            ]
            .map(|x| x * weight),
        )
    }

    fn add(&self, other: &Quadric) -> Quadric {
        let mut out = self.0;
        for (o, x) in out.iter_mut().zip(other.0.iter()) {
            *o += x;
        }
        Quadric(out)
    }

    fn error(&self, p: &Point) -> f64 {
        let q = &self.0;
        let (x, y, z) = (p.x, p.y, p.z);
        let e = q[0] * x * x
            + 2.0 * q[1] * x * y
            + 2.0 * q[2] * x * z
            + 2.0 * q[3] * x
            + q[4] * y * y
            + 2.0 * q[5] * y * z
            + 2.0 * q[6] * y
            + q[7] * z * z
            + 2.0 * q[8] * z
            + q[9];
        e.max(0.0)
    }

    fn minimizer(&self) -> Option<Point> {
        let q = &self.0;
        let m = Matrix3::new(q[0], q[1], q[2], q[1], q[4], q[5], q[2], q[5], q[7]);
        let scale = m.abs().max();
        if !(scale > 0.0) || m.determinant().abs() < 1e-12 * scale.powi(3) {
            return None;
        }
        let inv = m.try_inverse()?;
        let p = -(inv * Point::new(q[3], q[6], q[8]));
        p.iter().all(|c| c.is_finite()).then_some(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    version_a: u32,
    version_b: u32,
    target: Point,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Collapser {
    pos: Vec<Point>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    quadrics: Vec<Quadric>,
    alive: Vec<bool>,
    version: Vec<u32>,
    lo: Point,
    hi: Point,
    area_floor: f64,
}

impl Collapser {
    fn new(mesh: &TriangleMesh) -> Self {
        let n = mesh.vertex_count();
        let (lo, hi) = mesh.bounding_box().unwrap_or((Point::zeros(), Point::zeros()));
        let diag = (hi - lo).norm();
        let mut vertex_faces = vec![Vec::new(); n];
        let mut quadrics = vec![Quadric::default(); n];
        for (fi, f) in mesh.faces().iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
            let cross = mesh.face_cross(fi);
            let len = cross.norm();
            if len > 0.0 {
                let normal = cross / len;
                let d = -normal.dot(&mesh.vertices()[f[0]]);
                let q = Quadric::from_plane(normal, d, 0.5 * len);
                for &v in f {
                    quadrics[v] = quadrics[v].add(&q);
                }
            }
        }
        let mut this = Self {
            pos: mesh.vertices().to_vec(),
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.face_count()],
            vertex_faces,
            quadrics,
            alive: vec![true; n],
            version: vec![0; n],
            lo,
            hi,
            area_floor: 1e-12 * diag * diag,
        };
        this.add_boundary_constraints();
        this
    }

    /// Planes through each boundary edge, perpendicular to its face, keep
    /// open borders from shrinking.
    fn add_boundary_constraints(&mut self) {
        for (a, b, fi) in self.boundary_edges() {
            let cross = self.face_cross(fi);
            let edge = self.pos[b] - self.pos[a];
            let perp = edge.cross(&cross);
            let len = perp.norm();
            if len > 0.0 {
                let normal = perp / len;
                let d = -normal.dot(&self.pos[a]);
                let q = Quadric::from_plane(normal, d, BOUNDARY_PENALTY * edge.norm_squared());
                self.quadrics[a] = self.quadrics[a].add(&q);
                self.quadrics[b] = self.quadrics[b].add(&q);
            }
        }
    }

    fn boundary_edges(&self) -> Vec<(usize, usize, usize)> {
        let mut uses: std::collections::BTreeMap<(usize, usize), (u32, usize)> = Default::default();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let e = uses.entry((a.min(b), a.max(b))).or_insert((0, fi));
                e.0 += 1;
            }
        }
        uses.into_iter()
            .filter(|(_, (count, _))| *count == 1)
            .map(|((a, b), (_, fi))| (a, b, fi))
            .collect()
    }

    fn face_cross(&self, fi: usize) -> Point {
        let [a, b, c] = self.faces[fi];
        (self.pos[b] - self.pos[a]).cross(&(self.pos[c] - self.pos[a]))
    }

    fn live_faces(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertex_faces[v]
            .iter()
            .copied()
            .filter(move |&f| self.face_alive[f])
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .live_faces(v)
            .flat_map(|f| self.faces[f])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn is_boundary_vertex(&self, v: usize) -> bool {
        let mut counts: Vec<usize> = self
            .live_faces(v)
            .flat_map(|f| self.faces[f])
            .filter(|&w| w != v)
            .collect();
        counts.sort_unstable();
        // Interior one-ring vertices each appear in exactly two incident faces.
        counts.chunk_by(|x, y| x == y).any(|run| run.len() != 2)
    }

    fn candidate(&self, a: usize, b: usize) -> Candidate {
        let q = self.quadrics[a].add(&self.quadrics[b]);
        let mut options = vec![self.pos[a], self.pos[b], 0.5 * (self.pos[a] + self.pos[b])];
        if let Some(p) = q.minimizer() {
            options.insert(0, p.sup(&self.lo).inf(&self.hi));
        }
        let (target, cost) = options
            .into_iter()
            .map(|p| (p, q.error(&p)))
            .fold((Point::zeros(), f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        Candidate {
            cost,
            a,
            b,
            version_a: self.version[a],
            version_b: self.version[b],
            target,
        }
    }

    fn is_current(&self, c: &Candidate) -> bool {
        self.alive[c.a]
            && self.alive[c.b]
            && self.version[c.a] == c.version_a
            && self.version[c.b] == c.version_b
    }

    fn admissible(&self, a: usize, b: usize, target: &Point) -> bool {
        let shared: Vec<usize> = self
            .live_faces(a)
            .filter(|&f| self.faces[f].contains(&b))
            .collect();
        if shared.is_empty() || shared.len() > 2 {
            return false;
        }
        let mut opposite: Vec<usize> = shared
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&w| w != a && w != b)
            .collect();
        opposite.sort_unstable();

        // Link condition: the only common neighbors are the apexes of the
        // faces sharing the edge.
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<usize> = na.iter().copied().filter(|w| nb.binary_search(w).is_ok()).collect();
        if common != opposite {
            return false;
        }
        let is_boundary_edge = shared.len() == 1;
        if !is_boundary_edge && self.is_boundary_vertex(a) && self.is_boundary_vertex(b) {
            return false;
        }
        let union = na.len() + nb.len() - common.len() - 2;
        if union < 3 {
            return false;
        }

        let mut after: Vec<[usize; 3]> = Vec::new();
        for (moved, other) in [(a, b), (b, a)] {
            for f in self.live_faces(moved) {
                let face = self.faces[f];
                if face.contains(&other) {
                    continue;
                }
                let old = self.face_cross(f);
                let pts = face.map(|v| if v == moved { *target } else { self.pos[v] });
                let new = (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
                let new_len = new.norm();
                if !(0.5 * new_len > self.area_floor) {
                    return false;
                }
                let old_len = old.norm();
                if old_len > 0.0 && old.dot(&new) < MIN_NORMAL_COSINE * old_len * new_len {
                    return false;
                }
                let mut key = face.map(|v| if v == b { a } else { v });
                key.sort_unstable();
                after.push(key);
            }
        }
        after.sort_unstable();
        after.windows(2).all(|w| w[0] != w[1])
    }

    fn collapse(&mut self, a: usize, b: usize, target: Point) {
        self.pos[a] = target;
        self.quadrics[a] = self.quadrics[a].add(&self.quadrics[b]);
        let b_faces = std::mem::take(&mut self.vertex_faces[b]);
        for f in b_faces {
            if !self.face_alive[f] {
                continue;
            }
            if self.faces[f].contains(&a) {
                self.face_alive[f] = false;
            } else {
                for v in self.faces[f].iter_mut() {
                    if *v == b {
                        *v = a;
                    }
                }
                self.vertex_faces[a].push(f);
            }
        }
        let face_alive = &self.face_alive;
        self.vertex_faces[a].retain(|&f| face_alive[f]);
        self.vertex_faces[a].sort_unstable();
        self.vertex_faces[a].dedup();
        self.alive[b] = false;
        self.version[a] += 1;
    }

    fn push_edges_of(&self, v: usize, heap: &mut BinaryHeap<Candidate>) {
        for w in self.neighbors(v) {
            heap.push(self.candidate(v.min(w), v.max(w)));
        }
    }

    fn seed(&self) -> BinaryHeap<Candidate> {
        let mut heap = BinaryHeap::new();
        for v in 0..self.pos.len() {
            if !self.alive[v] {
                continue;
            }
            for w in self.neighbors(v) {
                if w > v {
                    heap.push(self.candidate(v, w));
                }
            }
        }
        heap
    }

    fn into_mesh(self) -> Result<TriangleMesh> {
        let mut remap = vec![usize::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        for (i, p) in self.pos.iter().enumerate() {
            if self.alive[i] {
                remap[i] = vertices.len();
                vertices.push(*p);
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &live)| live)
            .map(|(f, _)| f.map(|v| remap[v]))
            .collect();
        TriangleMesh::new(vertices, faces)
    }
}

/// Reduces `mesh` to exactly `target_vertices` vertices by repeatedly
/// collapsing the cheapest admissible edge.
///
/// An edge is admissible when the collapse keeps the surface manifold (link
/// condition, no duplicated faces, no pinched borders) and rotates none of
/// the surviving faces past the normal-deviation limit. Merged vertices are
/// placed at the quadric minimizer clamped to the input bounding box.
pub fn simplify(mesh: &TriangleMesh, target_vertices: usize) -> Result<SimplifyOutcome> {
    if target_vertices < 4 {
        return Err(Error::Argument(format!(
            "target vertex count must be at least 4, got {target_vertices}"
        )));
    }
    let n = mesh.vertex_count();
    if target_vertices > n {
        return Err(Error::Argument(format!(
            "target vertex count {target_vertices} exceeds the mesh's {n} vertices"
        )));
    }
    if target_vertices == n {
        return Ok(SimplifyOutcome {
            mesh: mesh.clone(),
            reached_target: true,
        });
    }

    let mut state = Collapser::new(mesh);
    let mut remaining = n;
    // Rejected edges are only re-tested when an endpoint changes; a fresh
    // pass over all edges picks up ones whose neighborhood has since changed.
    loop {
        let before = remaining;
        let mut heap = state.seed();
        while remaining > target_vertices {
            let Some(c) = heap.pop() else { break };
            if !state.is_current(&c) || !state.admissible(c.a, c.b, &c.target) {
                continue;
            }
            state.collapse(c.a, c.b, c.target);
            remaining -= 1;
            state.push_edges_of(c.a, &mut heap);
        }
        if remaining == target_vertices || remaining == before {
            break;
        }
    }

    Ok(SimplifyOutcome {
        reached_target: remaining == target_vertices,
        mesh: state.into_mesh()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{validate, volume};
    use crate::shapes;

    #[test]
    fn no_op_at_current_size() {
        let m = shapes::icosphere(1.0, 2);
        let out = simplify(&m, m.vertex_count()).unwrap();
        assert!(out.reached_target);
        assert_eq!(out.mesh, m);
    }

    #[test]
    fn target_below_four_is_rejected() {
        assert!(matches!(
            simplify(&shapes::tetrahedron(), 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn target_above_count_is_rejected() {
        assert!(matches!(
            simplify(&shapes::tetrahedron(), 5),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn icosphere_to_three_thousand() {
        let sphere = shapes::icosphere(1.0, 5);
        assert_eq!(sphere.vertex_count(), 10242);
        let out = simplify(&sphere, 3000).unwrap();
        assert!(out.reached_target);
        let m = &out.mesh;
        assert!(m.vertex_count() >= 3000 && m.vertex_count() <= 3060);
        let report = validate(m);
        assert_eq!(report.component_count, 1);
        assert!(report.is_watertight);
        assert_eq!(report.degenerate_face_count, 0);
        let v0 = volume(&sphere).value;
        let v1 = volume(m).value;
        assert!(((v1 - v0) / v0).abs() < 0.02, "{v0} -> {v1}");
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!(((v1 - exact) / exact).abs() < 0.02);
        assert!(m.bounding_box_diagonal() <= sphere.bounding_box_diagonal() * (1.0 + 1e-6));
    }

    #[test]
    fn components_are_preserved() {
        let a = shapes::icosphere(1.0, 2);
        let b = a.map_vertices(|p| p + Point::new(5.0, 0.0, 0.0));
        let both = TriangleMesh::disjoint_union(&[a, b]);
        let out = simplify(&both, 100).unwrap();
        assert!(out.reached_target);
        assert_eq!(validate(&out.mesh).component_count, 2);
        assert_eq!(out.mesh.vertex_count(), 100);
    }

    #[test]
    fn unreachable_target_is_flagged() {
        let t = shapes::tetrahedron();
        let two = TriangleMesh::disjoint_union(&[t.clone(), t.map_vertices(|p| p + Point::new(3.0, 0.0, 0.0))]);
        // Each tetrahedron is already minimal.
        let out = simplify(&two, 4).unwrap();
        assert!(!out.reached_target);
        assert_eq!(out.mesh.vertex_count(), 8);
    }

    #[test]
    fn open_strip_keeps_its_border() {
        let strip = shapes::strip(10.0, 2.0, 40);
        let out = simplify(&strip, 20).unwrap();
        assert!(out.reached_target);
        let (lo, hi) = out.mesh.bounding_box().unwrap();
        assert!((hi.x - lo.x - 10.0).abs() < 1e-9);
        assert!((hi.y - lo.y - 2.0).abs() < 1e-9);
    }
}
