use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{validate, TriangleMesh};
use crate::error::{Error, Result};

/// Enclosed volume plus whether the mesh was closed when it was measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    /// False means the value depends on the position of the origin and is
    /// only an approximation.
    pub watertight: bool,
}

/// Absolute signed volume: sum over faces of `a · (b × c) / 6`.
pub fn volume(mesh: &TriangleMesh) -> VolumeEstimate {
    let signed: f64 = mesh
        .faces()
        .iter()
        .map(|f| {
            let (a, b, c) = (
                mesh.vertices()[f[0]],
                mesh.vertices()[f[1]],
                mesh.vertices()[f[2]],
            );
            a.dot(&b.cross(&c))
        })
        .sum::<f64>()
        / 6.0;
    VolumeEstimate {
        value: signed.abs(),
        watertight: validate(mesh).is_watertight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicDiameter {
    pub length: f64,
    /// The two vertices realizing `length`.
    pub endpoints: (usize, usize),
    pub sweeps: usize,
}

#[derive(Copy, Clone, PartialEq)]
struct Candidate {
    dist: f64,
    vertex: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra over the edge graph with Euclidean edge lengths.
/// Unreachable vertices get `f64::INFINITY`.
pub fn graph_distances(mesh: &TriangleMesh, neighbors: &[Vec<usize>], source: usize) -> Vec<f64> {
    let pts = mesh.vertices();
    let mut dist = vec![f64::INFINITY; pts.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Candidate {
        dist: 0.0,
        vertex: source,
    });
    while let Some(Candidate { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &v in &neighbors[u] {
            let nd = d + (pts[u] - pts[v]).norm();
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Candidate { dist: nd, vertex: v });
            }
        }
    }
    dist
}

fn farthest(dist: &[f64]) -> (usize, f64) {
    dist.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &d)| {
            if d > bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
}

/// Graph-geodesic diameter by repeated farthest-point sweeps from vertex 0.
///
/// Each sweep restarts Dijkstra from the farthest vertex of the previous one;
/// iteration stops once a sweep fails to lengthen the estimate (at least two
/// sweeps always run).
pub fn geodesic_diameter(mesh: &TriangleMesh) -> Result<GeodesicDiameter> {
    if mesh.vertex_count() == 0 {
        return Err(Error::Structural("empty mesh has no diameter".into()));
    }
    let neighbors = mesh.vertex_neighbors();
    let mut source = 0;
    let mut best = GeodesicDiameter {
        length: 0.0,
        endpoints: (0, 0),
        sweeps: 0,
    };
    let max_sweeps = mesh.vertex_count().max(2);
    for sweep in 1..=max_sweeps {
        let dist = graph_distances(mesh, &neighbors, source);
        if dist.iter().any(|d| d.is_infinite()) {
            return Err(Error::Structural(
                "mesh edge graph is disconnected; geodesic diameter undefined".into(),
            ));
        }
        let (far, d) = farthest(&dist);
        let improved = d > best.length;
        if improved {
            best = GeodesicDiameter {
                length: d,
                endpoints: (source.min(far), source.max(far)),
                sweeps: sweep,
            };
        }
        best.sweeps = sweep;
        if sweep >= 2 && !improved {
            break;
        }
        source = far;
    }
    Ok(best)
}
