//! Multi-scale mesh hierarchy: quadric-error decimation, row-selection
//! downsampling, and barycentric upsampling.
//!
//! Decimation collapses edges in ascending quadric-cost order, always onto
//! one of the two endpoints, so every coarse vertex is a vertex of the
//! original template and pooling is a pure row selection. Each removed
//! vertex is projected onto its nearest triangle of the coarse mesh and
//! stored as three vertex indices plus barycentric weights; upsampling is
//! the corresponding weighted sum.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::io::{BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::geom::{closest_point_on_triangle, cross, distance, normalize, sub, Vec3};
use crate::mesh::Mesh;

/// Penalty weight on boundary constraint planes (Garland-Heckbert style):
/// large enough that collapsing a boundary vertex inward always costs more
/// than any interior simplification.
const BOUNDARY_PENALTY: f64 = 1e3;

/// One decimation step from a parent mesh to its child.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshLevel {
    /// The decimated (child) mesh.
    pub mesh: Mesh,
    /// Ascending parent-vertex indices that survive; child vertex `i` is
    /// parent vertex `kept_vertices[i]`.
    pub kept_vertices: Vec<u32>,
    /// Per parent vertex: three child vertices and barycentric weights
    /// reconstructing it from the child mesh.
    pub up_map: Vec<UpEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpEntry {
    pub tri: [u32; 3],
    pub weights: [f64; 3],
}

/// Chain of decimation steps from the full-resolution template down.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshHierarchy {
    template: Mesh,
    factors: Vec<usize>,
    steps: Vec<MeshLevel>,
}

// ---------------------------------------------------------------------------
// Quadrics
// ---------------------------------------------------------------------------

/// Symmetric 4x4 quadric stored as its upper triangle
/// (xx, xy, xz, xw, yy, yz, yw, zz, zw, ww).
#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn from_plane(n: Vec3, d: f64, weight: f64) -> Quadric {
        let [a, b, c] = n;
        Quadric([
            weight * a * a,
            weight * a * b,
            weight * a * c,
            weight * a * d,
            weight * b * b,
            weight * b * c,
            weight * b * d,
            weight * c * c,
            weight * c * d,
            weight * d * d,
        ])
    }

    fn add(&mut self, other: &Quadric) {
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += o;
        }
    }

    fn eval(&self, p: Vec3) -> f64 {
        let [xx, xy, xz, xw, yy, yz, yw, zz, zw, ww] = self.0;
        let [x, y, z] = p;
        xx * x * x
            + yy * y * y
            + zz * z * z
            + 2.0 * (xy * x * y + xz * x * z + yz * y * z + xw * x + yw * y + zw * z)
            + ww
    }
}

// ---------------------------------------------------------------------------
// Collapse priority queue
// ---------------------------------------------------------------------------

#[derive(Copy, Clone, PartialEq)]
struct Candidate {
    cost: f64,
    a: u32,
    b: u32,
    version_a: u32,
    version_b: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap: lowest cost first, ties by edge (a, b) then versions so
        // the pop sequence is fully deterministic.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
            .then_with(|| other.version_a.cmp(&self.version_a))
            .then_with(|| other.version_b.cmp(&self.version_b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Decimator<'a> {
    mesh: &'a Mesh,
    faces: Vec<[u32; 3]>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<u32>>,
    neighbors: Vec<HashSet<u32>>,
    quadrics: Vec<Quadric>,
    alive: Vec<bool>,
    version: Vec<u32>,
    live: usize,
    heap: BinaryHeap<Candidate>,
}

impl<'a> Decimator<'a> {
    fn new(mesh: &'a Mesh) -> Decimator<'a> {
        let m = mesh.vertex_count();
        let faces: Vec<[u32; 3]> = mesh.faces().to_vec();
        let mut vertex_faces: Vec<Vec<u32>> = vec![Vec::new(); m];
        let mut neighbors: Vec<HashSet<u32>> = vec![HashSet::new(); m];
        let mut quadrics = vec![Quadric::default(); m];
        let mut edge_face_count: std::collections::HashMap<(u32, u32), u32> =
            std::collections::HashMap::new();

        for (fi, f) in faces.iter().enumerate() {
            let pa = mesh.position(f[0]);
            let pb = mesh.position(f[1]);
            let pc = mesh.position(f[2]);
            let n = normalize(cross(sub(pb, pa), sub(pc, pa)));
            let d = -(n[0] * pa[0] + n[1] * pa[1] + n[2] * pa[2]);
            let q = Quadric::from_plane(n, d, 1.0);
            for k in 0..3 {
                let v = f[k];
                let w = f[(k + 1) % 3];
                quadrics[v as usize].add(&q);
                vertex_faces[v as usize].push(fi as u32);
                neighbors[v as usize].insert(w);
                neighbors[w as usize].insert(v);
                *edge_face_count.entry((v.min(w), v.max(w))).or_insert(0) += 1;
            }
        }

        // Boundary constraint planes: for each boundary edge, a heavily
        // weighted plane through the edge perpendicular to its face, so the
        // outline resists erosion.
        for f in &faces {
            for k in 0..3 {
                let u = f[k];
                let v = f[(k + 1) % 3];
                if edge_face_count[&(u.min(v), u.max(v))] != 1 {
                    continue;
                }
                let pa = mesh.position(f[0]);
                let pb = mesh.position(f[1]);
                let pc = mesh.position(f[2]);
                let fnormal = normalize(cross(sub(pb, pa), sub(pc, pa)));
                let pu = mesh.position(u);
                let pv = mesh.position(v);
                let edge_dir = normalize(sub(pv, pu));
                let cn = normalize(cross(edge_dir, fnormal));
                let d = -(cn[0] * pu[0] + cn[1] * pu[1] + cn[2] * pu[2]);
                let q = Quadric::from_plane(cn, d, BOUNDARY_PENALTY);
                quadrics[u as usize].add(&q);
                quadrics[v as usize].add(&q);
            }
        }

        let mut dec = Decimator {
            mesh,
            faces,
            face_alive: vec![true; mesh.face_count()],
            vertex_faces,
            neighbors,
            quadrics,
            alive: vec![true; m],
            version: vec![0; m],
            live: m,
            heap: BinaryHeap::new(),
        };
        for a in 0..m as u32 {
            let mut ns: Vec<u32> = dec.neighbors[a as usize].iter().copied().collect();
            ns.sort_unstable();
            for b in ns {
                if a < b {
                    dec.push_edge(a, b);
                }
            }
        }
        dec
    }

    fn push_edge(&mut self, a: u32, b: u32) {
        let (a, b) = (a.min(b), a.max(b));
        let mut q = self.quadrics[a as usize];
        q.add(&self.quadrics[b as usize]);
        let cost_a = q.eval(self.mesh.position(a));
        let cost_b = q.eval(self.mesh.position(b));
        self.heap.push(Candidate {
            cost: cost_a.min(cost_b),
            a,
            b,
            version_a: self.version[a as usize],
            version_b: self.version[b as usize],
        });
    }

    fn alive_faces_with(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.vertex_faces[v as usize]
            .iter()
            .copied()
            .filter(move |&fi| self.face_alive[fi as usize] && self.faces[fi as usize].contains(&v))
    }

    fn is_boundary_now(&self, v: u32) -> bool {
        // On a manifold fan, interior vertices have as many incident faces
        // as neighbours; boundary vertices one fewer.
        let face_count = self.alive_faces_with(v).count();
        face_count < self.neighbors[v as usize].len()
    }

    /// Manifoldness guard: the collapse of (a, b) is legal iff their common
    /// neighbours are exactly the opposite vertices of the shared faces, and
    /// it does not pinch two boundary vertices through the interior.
    fn collapse_legal(&self, a: u32, b: u32) -> bool {
        let shared: Vec<u32> = self
            .alive_faces_with(a)
            .filter(|&fi| self.faces[fi as usize].contains(&b))
            .collect();
        if shared.is_empty() {
            return false;
        }
        let mut opposite = HashSet::new();
        for &fi in &shared {
            for &v in &self.faces[fi as usize] {
                if v != a && v != b {
                    opposite.insert(v);
                }
            }
        }
        let common: HashSet<u32> = self.neighbors[a as usize]
            .intersection(&self.neighbors[b as usize])
            .copied()
            .collect();
        if common != opposite {
            return false;
        }
        if shared.len() == 2 && self.is_boundary_now(a) && self.is_boundary_now(b) {
            // Interior edge between two boundary vertices: collapsing would
            // pinch the surface.
            return false;
        }
        // Never let a triangle count hit zero or a vertex lose all faces.
        self.live > 3
    }

    /// Collapses edge (a, b) onto the endpoint with lower quadric cost,
    /// smaller index on ties. Returns the kept vertex.
    fn collapse(&mut self, a: u32, b: u32) -> u32 {
        let mut q = self.quadrics[a as usize];
        q.add(&self.quadrics[b as usize]);
        let cost_a = q.eval(self.mesh.position(a));
        let cost_b = q.eval(self.mesh.position(b));
        let (kept, dead) = if cost_a <= cost_b { (a, b) } else { (b, a) };

        let shared: Vec<u32> = self
            .alive_faces_with(kept)
            .filter(|&fi| self.faces[fi as usize].contains(&dead))
            .collect();
        for fi in shared {
            self.face_alive[fi as usize] = false;
        }
        let dead_faces: Vec<u32> = self.alive_faces_with(dead).collect();
        for fi in dead_faces {
            for slot in self.faces[fi as usize].iter_mut() {
                if *slot == dead {
                    *slot = kept;
                }
            }
            self.vertex_faces[kept as usize].push(fi);
        }

        let dead_neighbors: Vec<u32> = self.neighbors[dead as usize].iter().copied().collect();
        for n in dead_neighbors {
            self.neighbors[n as usize].remove(&dead);
            if n != kept {
                self.neighbors[n as usize].insert(kept);
                self.neighbors[kept as usize].insert(n);
            }
        }
        self.neighbors[kept as usize].remove(&dead);
        self.neighbors[kept as usize].remove(&kept);
        self.neighbors[dead as usize].clear();

        self.quadrics[kept as usize] = q;
        self.alive[dead as usize] = false;
        self.version[kept as usize] += 1;
        self.live -= 1;

        // Refresh candidates whose cost or legality may have changed: every
        // edge inside the kept vertex's new neighbourhood.
        let mut hood: Vec<u32> = self.neighbors[kept as usize].iter().copied().collect();
        hood.sort_unstable();
        for &x in &hood {
            self.push_edge(kept, x);
            for &y in &hood {
                if y > x && self.neighbors[x as usize].contains(&y) {
                    self.push_edge(x, y);
                }
            }
        }
        kept
    }

    fn run(&mut self, target: usize) -> Result<()> {
        while self.live > target {
            let cand = match self.heap.pop() {
                Some(c) => c,
                None => {
                    return Err(Error::DecimationStalled {
                        achieved: self.live,
                        target,
                    })
                }
            };
            let (a, b) = (cand.a, cand.b);
            if !self.alive[a as usize]
                || !self.alive[b as usize]
                || cand.version_a != self.version[a as usize]
                || cand.version_b != self.version[b as usize]
                || !self.neighbors[a as usize].contains(&b)
            {
                continue;
            }
            if !self.collapse_legal(a, b) {
                continue;
            }
            self.collapse(a, b);
        }
        Ok(())
    }
}

/// Decimates `mesh` down to `ceil(m / factor)` vertices and builds the
/// selection/upsampling maps.
pub fn decimate(mesh: &Mesh, factor: usize) -> Result<MeshLevel> {
    if factor < 1 {
        return Err(Error::Config("decimation factor must be >= 1".into()));
    }
    let m = mesh.vertex_count();
    let target = m.div_ceil(factor);
    if target < 4 {
        return Err(Error::Config(format!(
            "decimation target {target} too small (needs >= 4 vertices)"
        )));
    }

    let (kept_vertices, child_faces) = if factor == 1 {
        (
            (0..m as u32).collect::<Vec<u32>>(),
            mesh.faces().to_vec(),
        )
    } else {
        let mut dec = Decimator::new(mesh);
        dec.run(target)?;
        let kept: Vec<u32> = (0..m as u32).filter(|&v| dec.alive[v as usize]).collect();
        let mut remap = vec![u32::MAX; m];
        for (ci, &v) in kept.iter().enumerate() {
            remap[v as usize] = ci as u32;
        }
        let faces: Vec<[u32; 3]> = dec
            .faces
            .iter()
            .zip(&dec.face_alive)
            .filter(|&(_, &alive)| alive)
            .map(|(f, _)| [remap[f[0] as usize], remap[f[1] as usize], remap[f[2] as usize]])
            .collect();
        (kept, faces)
    };

    let child_positions: Vec<Vec3> = kept_vertices
        .iter()
        .map(|&v| mesh.position(v))
        .collect();
    let child = Mesh::new(
        format!("{}-div{}", mesh.name(), factor),
        child_positions,
        child_faces,
    )?;

    let up_map = build_up_map(mesh, &child, &kept_vertices);
    Ok(MeshLevel {
        mesh: child,
        kept_vertices,
        up_map,
    })
}

/// For kept vertices: weight 1 on themselves inside some containing child
/// triangle. For removed vertices: exact nearest-triangle projection with
/// clamped, renormalized barycentric weights.
fn build_up_map(parent: &Mesh, child: &Mesh, kept: &[u32]) -> Vec<UpEntry> {
    let m = parent.vertex_count();
    let mut child_index = vec![u32::MAX; m];
    for (ci, &v) in kept.iter().enumerate() {
        child_index[v as usize] = ci as u32;
    }

    let mut entries = Vec::with_capacity(m);
    for v in 0..m as u32 {
        let ci = child_index[v as usize];
        if ci != u32::MAX {
            // First child face containing the vertex, rotated so the vertex
            // sits in the weight-1 slot.
            let face = child
                .faces()
                .iter()
                .find(|f| f.contains(&ci))
                .expect("every kept vertex has an incident face");
            let k = face.iter().position(|&x| x == ci).unwrap();
            let tri = [face[k], face[(k + 1) % 3], face[(k + 2) % 3]];
            entries.push(UpEntry {
                tri,
                weights: [1.0, 0.0, 0.0],
            });
        } else {
            let p = parent.position(v);
            let mut best: Option<(f64, [u32; 3], [f64; 3])> = None;
            for f in child.faces() {
                let (point, bary) = closest_point_on_triangle(
                    p,
                    child.position(f[0]),
                    child.position(f[1]),
                    child.position(f[2]),
                );
                let d = distance(p, point);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, *f, bary));
                }
            }
            let (_, tri, mut w) = best.expect("child mesh has faces");
            for x in w.iter_mut() {
                *x = x.clamp(0.0, 1.0);
            }
            let s = w[0] + w[1] + w[2];
            for x in w.iter_mut() {
                *x /= s;
            }
            // Pin the affine identity exactly so interpolation is evaluated
            // as f0 + w1*(f1-f0) + w2*(f2-f0), which reproduces constants
            // bit-for-bit.
            w[0] = 1.0 - w[1] - w[2];
            entries.push(UpEntry { tri, weights: w });
        }
    }
    entries
}

fn seg(features: &[f64], index: u32, width: usize) -> &[f64] {
    &features[index as usize * width..(index as usize + 1) * width]
}

impl MeshLevel {
    pub fn parent_count(&self) -> usize {
        self.up_map.len()
    }

    pub fn child_count(&self) -> usize {
        self.mesh.vertex_count()
    }

    /// Row selection: surviving vertices keep their feature rows.
    pub fn downsample_features(&self, features: &[f64], width: usize) -> Result<Vec<f64>> {
        let n_parent = self.parent_count();
        if features.len() != n_parent * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_parent} x {width}"),
                got: format!("{} values", features.len()),
            });
        }
        let mut out = Vec::with_capacity(self.child_count() * width);
        for &v in &self.kept_vertices {
            let row = &features[v as usize * width..(v as usize + 1) * width];
            out.extend_from_slice(row);
        }
        Ok(out)
    }

    /// Barycentric interpolation: each parent row is the weighted sum of its
    /// three mapped child rows.
    pub fn upsample_features(&self, features: &[f64], width: usize) -> Result<Vec<f64>> {
        let n_child = self.child_count();
        if features.len() != n_child * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_child} x {width}"),
                got: format!("{} values", features.len()),
            });
        }
        let mut out = vec![0.0; self.parent_count() * width];
        for (v, entry) in self.up_map.iter().enumerate() {
            let row = &mut out[v * width..(v + 1) * width];
            // Affine form: constants (and kept vertices, where w1 = w2 = 0)
            // reproduce exactly whatever the rounding of the weights.
            let f0 = seg(features, entry.tri[0], width);
            let f1 = seg(features, entry.tri[1], width);
            let f2 = seg(features, entry.tri[2], width);
            let [_, w1, w2] = entry.weights;
            for k in 0..width {
                row[k] = f0[k] + w1 * (f1[k] - f0[k]) + w2 * (f2[k] - f0[k]);
            }
        }
        Ok(out)
    }
}

impl MeshHierarchy {
    /// Decimates the template by each factor in turn. `factors[i]` produces
    /// level `i+1` from level `i`; level 0 is the template itself.
    pub fn build(template: &Mesh, factors: &[usize]) -> Result<MeshHierarchy> {
        let mut steps = Vec::with_capacity(factors.len());
        let mut current = template.clone();
        for &p in factors {
            let level = decimate(&current, p)?;
            current = level.mesh.clone();
            steps.push(level);
        }
        Ok(MeshHierarchy {
            template: template.clone(),
            factors: factors.to_vec(),
            steps,
        })
    }

    pub fn template(&self) -> &Mesh {
        &self.template
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Number of meshes in the chain (steps + 1).
    pub fn level_count(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn level_mesh(&self, level: usize) -> &Mesh {
        if level == 0 {
            &self.template
        } else {
            &self.steps[level - 1].mesh
        }
    }

    /// The step taking level `i` (parent) to level `i+1` (child).
    pub fn step(&self, i: usize) -> &MeshLevel {
        &self.steps[i]
    }

    pub fn steps(&self) -> &[MeshLevel] {
        &self.steps
    }
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"HRCH";
const VERSION: u32 = 1;

impl MeshHierarchy {
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.template.topology_hash())?;
        w.write_u32::<LittleEndian>(self.steps.len() as u32)?;
        for &p in &self.factors {
            w.write_u32::<LittleEndian>(p as u32)?;
        }
        for step in &self.steps {
            w.write_u32::<LittleEndian>(step.parent_count() as u32)?;
            w.write_u32::<LittleEndian>(step.child_count() as u32)?;
            for &v in &step.kept_vertices {
                w.write_i32::<LittleEndian>(v as i32)?;
            }
            for e in &step.up_map {
                for &t in &e.tri {
                    w.write_i32::<LittleEndian>(t as i32)?;
                }
                for &x in &e.weights {
                    w.write_f64::<LittleEndian>(x)?;
                }
            }
            w.write_u32::<LittleEndian>(step.mesh.face_count() as u32)?;
            for f in step.mesh.faces() {
                for &i in f {
                    w.write_i32::<LittleEndian>(i as i32)?;
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Rebuilds the hierarchy from cached connectivity plus the template's
    /// positions (coarse positions are a subset of the template's).
    pub fn read(bytes: &[u8], template: &Mesh) -> Result<MeshHierarchy> {
        let corrupt = |message: &str| Error::CorruptFile {
            path: "<hierarchy blob>".into(),
            message: message.into(),
        };
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic (not a hierarchy cache)"));
        }
        let version = r
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))?;
        if version != VERSION {
            return Err(corrupt("unsupported version"));
        }
        let hash = r
            .read_u64::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))?;
        if hash != template.topology_hash() {
            return Err(Error::TemplateMismatch {
                expected: template.topology_hash(),
                got: hash,
            });
        }
        let n_steps = r
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))? as usize;
        let mut factors = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            factors.push(
                r.read_u32::<LittleEndian>()
                    .map_err(|_| corrupt("truncated factors"))? as usize,
            );
        }

        let mut steps = Vec::with_capacity(n_steps);
        let mut parent = template.clone();
        for &p in &factors {
            let n_parent = r
                .read_u32::<LittleEndian>()
                .map_err(|_| corrupt("truncated step"))? as usize;
            if n_parent != parent.vertex_count() {
                return Err(corrupt("level vertex count mismatch"));
            }
            let n_child = r
                .read_u32::<LittleEndian>()
                .map_err(|_| corrupt("truncated step"))? as usize;
            let mut kept = Vec::with_capacity(n_child);
            for _ in 0..n_child {
                let v = r
                    .read_i32::<LittleEndian>()
                    .map_err(|_| corrupt("truncated kept list"))?;
                if v < 0 || v as usize >= n_parent {
                    return Err(corrupt("kept index out of range"));
                }
                kept.push(v as u32);
            }
            let mut up_map = Vec::with_capacity(n_parent);
            for _ in 0..n_parent {
                let mut tri = [0u32; 3];
                for t in tri.iter_mut() {
                    let v = r
                        .read_i32::<LittleEndian>()
                        .map_err(|_| corrupt("truncated up map"))?;
                    if v < 0 || v as usize >= n_child {
                        return Err(corrupt("up map index out of range"));
                    }
                    *t = v as u32;
                }
                let mut weights = [0.0; 3];
                for x in weights.iter_mut() {
                    *x = r
                        .read_f64::<LittleEndian>()
                        .map_err(|_| corrupt("truncated up map"))?;
                }
                up_map.push(UpEntry { tri, weights });
            }
            let n_faces = r
                .read_u32::<LittleEndian>()
                .map_err(|_| corrupt("truncated step"))? as usize;
            let mut faces = Vec::with_capacity(n_faces);
            for _ in 0..n_faces {
                let mut f = [0u32; 3];
                for i in f.iter_mut() {
                    let v = r
                        .read_i32::<LittleEndian>()
                        .map_err(|_| corrupt("truncated faces"))?;
                    if v < 0 || v as usize >= n_child {
                        return Err(corrupt("face index out of range"));
                    }
                    *i = v as u32;
                }
                faces.push(f);
            }
            let positions: Vec<Vec3> = kept.iter().map(|&v| parent.position(v)).collect();
            let child = Mesh::new(format!("{}-div{}", parent.name(), p), positions, faces)?;
            parent = child.clone();
            steps.push(MeshLevel {
                mesh: child,
                kept_vertices: kept,
                up_map,
            });
        }
        if r.position() != bytes.len() as u64 {
            return Err(corrupt("trailing bytes"));
        }
        Ok(MeshHierarchy {
            template: template.clone(),
            factors,
            steps,
        })
    }

    pub fn load(path: impl AsRef<Path>, template: &Mesh) -> Result<MeshHierarchy> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read(&bytes, template).map_err(|e| match e {
            Error::CorruptFile { message, .. } => Error::CorruptFile {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::topology::Topology;

    #[test]
    fn factor_one_is_identity() {
        let mesh = shapes::icosphere(1, 1.0);
        let level = decimate(&mesh, 1).unwrap();
        assert_eq!(level.kept_vertices.len(), mesh.vertex_count());
        assert_eq!(level.mesh.faces(), mesh.faces());
        for e in &level.up_map {
            assert_eq!(e.weights, [1.0, 0.0, 0.0]);
        }
        let features: Vec<f64> = (0..mesh.vertex_count() * 2).map(|x| x as f64).collect();
        assert_eq!(level.downsample_features(&features, 2).unwrap(), features);
    }

    #[test]
    fn icosphere_factor_4_hits_target_and_stays_manifold() {
        let mesh = shapes::icosphere(3, 100.0);
        assert_eq!(mesh.vertex_count(), 642);
        let level = decimate(&mesh, 4).unwrap();
        assert_eq!(level.mesh.vertex_count(), 161); // ceil(642 / 4)
        // Mesh::new inside decimate already enforces orientation and
        // connectivity; Topology::build adds the manifold fan checks.
        Topology::build(&level.mesh).unwrap();
    }

    #[test]
    fn kept_vertices_project_to_themselves() {
        let mesh = shapes::icosphere(2, 100.0);
        let level = decimate(&mesh, 4).unwrap();
        for (ci, &v) in level.kept_vertices.iter().enumerate() {
            let e = &level.up_map[v as usize];
            assert_eq!(e.weights, [1.0, 0.0, 0.0]);
            assert_eq!(e.tri[0], ci as u32);
        }
    }

    #[test]
    fn downsample_is_row_selection() {
        let mesh = shapes::icosphere(2, 100.0);
        let level = decimate(&mesh, 4).unwrap();
        let features = mesh.positions_flat();
        let down = level.downsample_features(&features, 3).unwrap();
        let expect: Vec<f64> = level
            .kept_vertices
            .iter()
            .flat_map(|&v| mesh.position(v))
            .collect();
        assert_eq!(down, expect);

        // One-hot on a removed vertex selects nothing.
        let removed = (0..mesh.vertex_count() as u32)
            .find(|v| !level.kept_vertices.contains(v))
            .unwrap();
        let mut onehot = vec![0.0; mesh.vertex_count()];
        onehot[removed as usize] = 1.0;
        let down = level.downsample_features(&onehot, 1).unwrap();
        assert!(down.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn upsample_preserves_constants_and_kept_rows() {
        let mesh = shapes::icosphere(2, 100.0);
        let level = decimate(&mesh, 4).unwrap();
        let nc = level.child_count();

        let constant = vec![3.25; nc * 2];
        let up = level.upsample_features(&constant, 2).unwrap();
        for &x in &up {
            assert_eq!(x, 3.25, "constants must reproduce exactly");
        }

        // Down-then-up restricted to kept vertices is the identity.
        let features = mesh.positions_flat();
        let down = level.downsample_features(&features, 3).unwrap();
        let up = level.upsample_features(&down, 3).unwrap();
        for &v in &level.kept_vertices {
            let a = &features[v as usize * 3..v as usize * 3 + 3];
            let b = &up[v as usize * 3..v as usize * 3 + 3];
            assert_eq!(a, b, "kept vertex {v} must round-trip exactly");
        }
    }

    #[test]
    fn upsample_is_linear() {
        let mesh = shapes::icosphere(1, 1.0);
        let level = decimate(&mesh, 3).unwrap();
        let nc = level.child_count();
        let a: Vec<f64> = (0..nc).map(|x| (x as f64).sin()).collect();
        let b: Vec<f64> = (0..nc).map(|x| (x as f64 * 0.7).cos()).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| 2.0 * x - 0.5 * y).collect();
        let ua = level.upsample_features(&a, 1).unwrap();
        let ub = level.upsample_features(&b, 1).unwrap();
        let uc = level.upsample_features(&combo, 1).unwrap();
        for i in 0..uc.len() {
            assert!((uc[i] - (2.0 * ua[i] - 0.5 * ub[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_linear_field_interpolates_exactly() {
        // On a planar mesh, barycentric interpolation reproduces affine
        // functions at each parent vertex's projection onto the child mesh.
        let mesh = shapes::planar_grid(6, 6);
        let level = decimate(&mesh, 2).unwrap();
        let child = &level.mesh;
        let field: Vec<f64> = child.vertices().iter().map(|p| p[0]).collect();
        let up = level.upsample_features(&field, 1).unwrap();
        for v in 0..mesh.vertex_count() as u32 {
            // Independent recompute of the projection target.
            let p = mesh.position(v);
            let mut best = f64::INFINITY;
            let mut best_x = f64::NAN;
            for f in child.faces() {
                let (point, _) = closest_point_on_triangle(
                    p,
                    child.position(f[0]),
                    child.position(f[1]),
                    child.position(f[2]),
                );
                let d = distance(p, point);
                if d < best {
                    best = d;
                    best_x = point[0];
                }
            }
            assert!(
                (up[v as usize] - best_x).abs() < 1e-9,
                "vertex {v}: interpolated {} vs projected x {best_x}",
                up[v as usize]
            );
        }
    }

    #[test]
    fn hierarchy_chain_counts() {
        let mesh = shapes::icosphere(3, 100.0);
        let h = MeshHierarchy::build(&mesh, &[4, 4, 4]).unwrap();
        let counts: Vec<usize> = (0..h.level_count()).map(|i| h.level_mesh(i).vertex_count()).collect();
        assert_eq!(counts, vec![642, 161, 41, 11]);
        for i in 0..h.level_count() {
            Topology::build(h.level_mesh(i)).unwrap();
        }
    }

    #[test]
    fn hierarchy_is_deterministic() {
        let mesh = shapes::icosphere(2, 100.0);
        let a = MeshHierarchy::build(&mesh, &[4, 4]).unwrap();
        let b = MeshHierarchy::build(&mesh, &[4, 4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cache_roundtrip() {
        let mesh = shapes::icosphere(2, 100.0);
        let h = MeshHierarchy::build(&mesh, &[4, 4]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hier.bin");
        h.save(&path).unwrap();
        let back = MeshHierarchy::load(&path, &mesh).unwrap();
        assert_eq!(h, back);

        // Template mismatch is detected via the topology hash.
        let other = shapes::icosphere(1, 100.0);
        let err = MeshHierarchy::load(&path, &other).unwrap_err();
        assert!(matches!(err, Error::TemplateMismatch { .. }));
    }

    #[test]
    fn too_small_target_is_config_error() {
        let mesh = shapes::tetrahedron();
        let err = decimate(&mesh, 2).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
