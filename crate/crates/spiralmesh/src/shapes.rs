//! Deterministic generator meshes: tetrahedron, planar grid, icosphere.
//!
//! These are the fixed templates used by tests, examples, and the synthetic
//! dataset. All faces wind counter-clockwise seen from outside (for the grid:
//! seen from +z), so spiral orientation and decimation behave identically on
//! every platform.

use crate::geom::{normalize, scale, Vec3};
use crate::mesh::Mesh;
use std::collections::HashMap;

/// Regular tetrahedron spanning the unit cube corners.
pub fn tetrahedron() -> Mesh {
    let vertices = vec![
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
    Mesh::new("tetrahedron", vertices, faces).expect("tetrahedron is valid")
}

/// Planar triangulated grid in the z = 0 plane.
///
/// Vertex `r * cols + c` sits at `(c, r, 0)`. Each cell splits along the
/// down-right diagonal into `(a, b, d)` and `(a, d, c')` where `a` is the
/// cell's lower-left corner, `b` right, `c'` up, `d` up-right.
pub fn planar_grid(rows: usize, cols: usize) -> Mesh {
    assert!(rows >= 2 && cols >= 2, "grid needs at least 2x2 vertices");
    let mut vertices = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            vertices.push([c as f64, r as f64, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (rows - 1) * (cols - 1));
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let a = (r * cols + c) as u32;
            let b = a + 1;
            let up = a + cols as u32;
            let d = up + 1;
            faces.push([a, b, d]);
            faces.push([a, d, up]);
        }
    }
    Mesh::new(format!("grid{rows}x{cols}"), vertices, faces).expect("grid is valid")
}

/// Icosphere: regular icosahedron with `subdiv` rounds of 1-to-4 face
/// splitting, every vertex projected onto the sphere of the given radius.
///
/// Vertex and face counts per level: 12/20, 42/80, 162/320, 642/1280, ...
/// Midpoint vertices are appended in face order, so the numbering is
/// reproducible.
pub fn icosphere(subdiv: usize, radius: f64) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[u32; 3]> = vec![
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

    for _ in 0..subdiv {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mid = |a: u32, b: u32, vertices: &mut Vec<Vec3>, cache: &mut HashMap<(u32, u32), u32>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    let pa = vertices[a as usize];
                    let pb = vertices[b as usize];
                    vertices.push([
                        (pa[0] + pb[0]) / 2.0,
                        (pa[1] + pb[1]) / 2.0,
                        (pa[2] + pb[2]) / 2.0,
                    ]);
                    (vertices.len() - 1) as u32
                })
            };
            let ab = mid(f[0], f[1], &mut vertices, &mut midpoint);
            let bc = mid(f[1], f[2], &mut vertices, &mut midpoint);
            let ca = mid(f[2], f[0], &mut vertices, &mut midpoint);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    for v in &mut vertices {
        *v = scale(normalize(*v), radius);
    }
    Mesh::new(format!("icosphere{subdiv}"), vertices, faces).expect("icosphere is valid")
}
