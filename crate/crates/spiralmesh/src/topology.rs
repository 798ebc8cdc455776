//! Connectivity queries: adjacency, face fans, d-rings, graph geodesics.
//!
//! [`Topology`] is built once per template and then shared read-only. The
//! per-vertex *fan* is the 1-ring ordered counter-clockwise with respect to
//! the outward normal (equivalently, following face winding); it is the
//! backbone of spiral ordering. Interior vertices have a closed fan stored
//! starting from their smallest neighbour; boundary vertices have an open
//! fan stored from its unique winding-order start.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::geom::distance;
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct Topology {
    neighbors: Vec<Vec<u32>>,
    vertex_faces: Vec<Vec<u32>>,
    boundary: Vec<bool>,
    fans: Vec<Vec<u32>>,
}

impl Topology {
    /// Builds adjacency, incident-face lists, boundary flags, and fans.
    ///
    /// Rejects non-manifold edges (more than two incident faces) and
    /// non-manifold vertices (one-ring that is not a single closed cycle or
    /// single open path).
    pub fn build(mesh: &Mesh) -> Result<Topology> {
        let m = mesh.vertex_count();
        let mut edge_faces: HashMap<(u32, u32), u32> = HashMap::new();
        let mut vertex_faces: Vec<Vec<u32>> = vec![Vec::new(); m];
        // successor[v]: neighbour a -> b where some face reads (v, a, b).
        let mut successor: Vec<HashMap<u32, u32>> = vec![HashMap::new(); m];

        for (fi, f) in mesh.faces().iter().enumerate() {
            for k in 0..3 {
                let v = f[k];
                let a = f[(k + 1) % 3];
                let b = f[(k + 2) % 3];
                vertex_faces[v as usize].push(fi as u32);
                successor[v as usize].insert(a, b);
                let key = (a.min(b), a.max(b));
                *edge_faces.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in edge_faces.iter() {
            if count > 2 {
                return Err(Error::NonManifoldEdge {
                    a,
                    b,
                    count: count as usize,
                });
            }
        }

        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); m];
        for &(a, b) in edge_faces.keys() {
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }

        let mut boundary = vec![false; m];
        for (&(a, b), &count) in edge_faces.iter() {
            if count == 1 {
                boundary[a as usize] = true;
                boundary[b as usize] = true;
            }
        }

        // One fan per vertex: walk the successor map. Interior vertices must
        // close a cycle covering every neighbour; boundary vertices walk an
        // open path from the unique start (a neighbour nothing points at).
        let mut fans: Vec<Vec<u32>> = Vec::with_capacity(m);
        for v in 0..m {
            let succ = &successor[v];
            let ring = &neighbors[v];
            if ring.is_empty() {
                return Err(Error::IsolatedVertex { vertex: v as u32 });
            }
            let mut has_pred: HashMap<u32, bool> = ring.iter().map(|&n| (n, false)).collect();
            for &b in succ.values() {
                if let Some(p) = has_pred.get_mut(&b) {
                    *p = true;
                }
            }
            let starts: Vec<u32> = ring
                .iter()
                .copied()
                .filter(|n| !has_pred.get(n).copied().unwrap_or(true))
                .collect();

            let start = if boundary[v] {
                match starts.len() {
                    1 => starts[0],
                    _ => return Err(Error::NonManifoldVertex { vertex: v as u32 }),
                }
            } else {
                if !starts.is_empty() {
                    return Err(Error::NonManifoldVertex { vertex: v as u32 });
                }
                ring[0] // closed cycle: store from the smallest neighbour
            };

            let mut fan = Vec::with_capacity(ring.len());
            let mut cur = start;
            loop {
                fan.push(cur);
                match succ.get(&cur) {
                    Some(&next) if next == start => break, // closed
                    Some(&next) => {
                        if fan.len() > ring.len() {
                            return Err(Error::NonManifoldVertex { vertex: v as u32 });
                        }
                        cur = next;
                    }
                    None => break, // open end
                }
            }
            if fan.len() != ring.len() {
                // A second disjoint fan exists (e.g. two triangles meeting
                // only at this vertex).
                return Err(Error::NonManifoldVertex { vertex: v as u32 });
            }
            fans.push(fan);
        }

        Ok(Topology {
            neighbors,
            vertex_faces,
            boundary,
            fans,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Sorted neighbour indices of `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[v as usize]
    }

    pub fn vertex_faces(&self, v: u32) -> &[u32] {
        &self.vertex_faces[v as usize]
    }

    pub fn is_boundary(&self, v: u32) -> bool {
        self.boundary[v as usize]
    }

    /// Counter-clockwise 1-ring of `v`. Closed fans start at the smallest
    /// neighbour; open fans run end-to-end in winding order.
    pub fn fan(&self, v: u32) -> &[u32] {
        &self.fans[v as usize]
    }

    /// Vertices at graph distance exactly `d` from `x` (breadth-first).
    pub fn d_ring(&self, x: u32, d: usize) -> Vec<u32> {
        let m = self.vertex_count();
        let mut dist = vec![usize::MAX; m];
        dist[x as usize] = 0;
        let mut frontier = vec![x];
        let mut depth = 0;
        while depth < d && !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                for &n in self.neighbors(v) {
                    if dist[n as usize] == usize::MAX {
                        dist[n as usize] = depth + 1;
                        next.push(n);
                    }
                }
            }
            frontier = next;
            depth += 1;
        }
        frontier.sort_unstable();
        frontier
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (distance, vertex index) via reversed comparison.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over the edge graph with Euclidean edge
/// lengths — the graph approximation of geodesic distance used to anchor
/// spiral starts.
pub fn geodesic_distances(mesh: &Mesh, topology: &Topology, x0: u32) -> Vec<f64> {
    let m = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; m];
    dist[x0 as usize] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, vertex: x0 });
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        let pv = mesh.position(v);
        for &n in topology.neighbors(v) {
            let cand = d + distance(pv, mesh.position(n));
            if cand < dist[n as usize] {
                dist[n as usize] = cand;
                heap.push(HeapItem { dist: cand, vertex: n });
            }
        }
    }
    dist
}
