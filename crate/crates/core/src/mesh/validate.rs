use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TriangleMesh;

/// Structural summary of a mesh. Serializes to JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshReport {
    pub vertex_count: usize,
    pub face_count: usize,
    /// Every edge is shared by exactly two faces.
    pub is_watertight: bool,
    /// Connected components of the vertex/edge graph; unreferenced vertices
    /// count as their own component.
    pub component_count: usize,
    pub degenerate_face_count: usize,
}

impl MeshReport {
    /// Connected, nonempty and free of degenerate faces: what the spectral
    /// stage needs.
    pub fn is_usable(&self) -> bool {
        self.face_count > 0 && self.component_count == 1 && self.degenerate_face_count == 0
    }
}

/// Degenerate means area below `1e-12 * diag²` for the bounding-box diagonal.
pub fn validate(mesh: &TriangleMesh) -> MeshReport {
    let n = mesh.vertex_count();
    let mut edge_use: HashMap<(usize, usize), u32> = HashMap::new();
    let mut parent: Vec<usize> = (0..n).collect();

    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            union(&mut parent, a, b);
        }
    }

    let component_count = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    let is_watertight = !edge_use.is_empty() && edge_use.values().all(|&c| c == 2);

    let diag = mesh.bounding_box_diagonal();
    let area_floor = 1e-12 * diag * diag;
    let degenerate_face_count = (0..mesh.face_count())
        .filter(|&f| !(mesh.face_area(f) >= area_floor) || mesh.face_area(f) == 0.0)
        .count();

    MeshReport {
        vertex_count: n,
        face_count: mesh.face_count(),
        is_watertight,
        component_count,
        degenerate_face_count,
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}
