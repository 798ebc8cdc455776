//! Spiral orderings: per-vertex fixed-length index sequences that enumerate
//! a vertex and its rings in a deterministic spiral.
//!
//! A spiral for vertex `x` is `[x, ring-1 in fan order, ring-2, ...]`,
//! truncated or padded with [`PAD`] to a fixed length `L`. Ring 1 starts at
//! the 1-ring vertex closest (by graph geodesic) to a template reference
//! vertex `x0`; ring `d >= 2` is ordered by first contact while traversing
//! ring `d-1`. Because the ordering depends only on connectivity, every mesh
//! sharing a template gets the identical table — which is what makes the
//! learned filters transferable across a dataset in dense correspondence.

use std::collections::HashSet;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::mesh::{fnv1a_bytes, fnv1a_new, Mesh};
use crate::topology::{geodesic_distances, Topology};

/// Sentinel index marking padding entries; reads as a zero feature row.
pub const PAD: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingMode {
    /// One ordering per template, reused everywhere. The default.
    Fixed,
    /// Each mesh rotates every 1-ring start independently.
    RandMesh,
    /// Rotations are redrawn every epoch but shared across meshes.
    RandEpoch,
    /// Both of the above: fresh rotations per mesh per epoch.
    RandMeshAndEpoch,
}

impl OrderingMode {
    pub fn tag(self) -> u8 {
        match self {
            OrderingMode::Fixed => 0,
            OrderingMode::RandMesh => 1,
            OrderingMode::RandEpoch => 2,
            OrderingMode::RandMeshAndEpoch => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => OrderingMode::Fixed,
            1 => OrderingMode::RandMesh,
            2 => OrderingMode::RandEpoch,
            3 => OrderingMode::RandMeshAndEpoch,
            _ => return None,
        })
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fixed" => OrderingMode::Fixed,
            "rand_mesh" => OrderingMode::RandMesh,
            "rand_epoch" => OrderingMode::RandEpoch,
            "rand_mesh_and_epoch" => OrderingMode::RandMeshAndEpoch,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrderingMode::Fixed => "fixed",
            OrderingMode::RandMesh => "rand_mesh",
            OrderingMode::RandEpoch => "rand_epoch",
            OrderingMode::RandMeshAndEpoch => "rand_mesh_and_epoch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralConfig {
    /// Patch radius in hops (`h >= 1`).
    pub hops: usize,
    /// Fixed spiral length `L >= 1` (truncate/pad target).
    pub length: usize,
    /// Dilation stride `r >= 1`: subsample every r-th entry of a spiral
    /// built at pre-dilation length `r * L`.
    pub dilation: usize,
    /// Template vertex anchoring every ring-1 start.
    pub reference_vertex: u32,
    pub orientation: Orientation,
    pub ordering_mode: OrderingMode,
    pub seed: u64,
}

impl SpiralConfig {
    pub fn fixed(hops: usize, length: usize) -> SpiralConfig {
        SpiralConfig {
            hops,
            length,
            dilation: 1,
            reference_vertex: 0,
            orientation: Orientation::CounterClockwise,
            ordering_mode: OrderingMode::Fixed,
            seed: 0,
        }
    }
}

/// One spiral per vertex, stored row-major as `m x L` signed indices with
/// [`PAD`] = -1 marking the padded suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralTable {
    spirals: Vec<i32>,
    m: usize,
    length: usize,
    pub config: SpiralConfig,
    pub template_hash: u64,
}

impl SpiralTable {
    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn row(&self, x: u32) -> &[i32] {
        let l = self.length;
        &self.spirals[x as usize * l..(x as usize + 1) * l]
    }

    pub fn entries(&self) -> &[i32] {
        &self.spirals
    }

    /// FNV-1a checksum over the entries; used by determinism tests.
    pub fn checksum(&self) -> u64 {
        let mut h = fnv1a_new();
        for &e in &self.spirals {
            h = fnv1a_bytes(h, &e.to_le_bytes());
        }
        h
    }
}

/// Data-driven default spiral length: one more than the largest total ring
/// membership within `hops` of any vertex, so no vertex gets truncated.
pub fn default_length(topology: &Topology, hops: usize) -> usize {
    let mut best = 0;
    for x in 0..topology.vertex_count() as u32 {
        let mut total = 1;
        for d in 1..=hops {
            total += topology.d_ring(x, d).len();
        }
        best = best.max(total);
    }
    best
}

/// The 1-ring vertex of `x` nearest to the reference vertex by graph
/// geodesic; ties fall to the smallest vertex index.
pub fn reference_start(topology: &Topology, geodesic_from_x0: &[f64], x: u32) -> Result<u32> {
    let ring = topology.neighbors(x);
    if ring.is_empty() {
        return Err(Error::IsolatedVertex { vertex: x });
    }
    // Neighbours are sorted ascending, so strict improvement keeps the
    // smallest index among equals.
    let mut best = ring[0];
    for &n in &ring[1..] {
        if geodesic_from_x0[n as usize] < geodesic_from_x0[best as usize] {
            best = n;
        }
    }
    Ok(best)
}

/// Fan of `u` in traversal direction: stored counter-clockwise order, or its
/// reverse for clockwise configs.
fn oriented_fan(topology: &Topology, orientation: Orientation, u: u32) -> Vec<u32> {
    let mut fan = topology.fan(u).to_vec();
    if orientation == Orientation::Clockwise {
        fan.reverse();
    }
    fan
}

/// Ring-1 sequence for `x`: the oriented fan rotated so `start` comes first
/// (closed fans), or run end-to-end from the endpoint nearest x0 (open fans,
/// where a cyclic rotation would break fan adjacency).
fn ring1_sequence(
    topology: &Topology,
    geodesic_from_x0: &[f64],
    orientation: Orientation,
    x: u32,
    start: u32,
) -> Vec<u32> {
    let fan = oriented_fan(topology, orientation, x);
    if topology.is_boundary(x) {
        let first = *fan.first().expect("fan nonempty");
        let last = *fan.last().expect("fan nonempty");
        let df = geodesic_from_x0[first as usize];
        let dl = geodesic_from_x0[last as usize];
        let reverse = dl < df || (dl == df && last < first);
        let mut seq = fan;
        if reverse {
            seq.reverse();
        }
        seq
    } else {
        let pos = fan.iter().position(|&n| n == start).expect("start in ring");
        let mut seq = Vec::with_capacity(fan.len());
        seq.extend_from_slice(&fan[pos..]);
        seq.extend_from_slice(&fan[..pos]);
        seq
    }
}

/// Builds one spiral of exactly `length` entries for vertex `x`, using a
/// caller-chosen ring-1 start (the fixed rule passes the reference start).
fn build_spiral_from(
    topology: &Topology,
    geodesic_from_x0: &[f64],
    hops: usize,
    length: usize,
    orientation: Orientation,
    x: u32,
    start: u32,
) -> Vec<i32> {
    let mut seq: Vec<u32> = Vec::with_capacity(length);
    seq.push(x);
    let ring1 = ring1_sequence(topology, geodesic_from_x0, orientation, x, start);
    let mut visited: HashSet<u32> = HashSet::new();
    visited.insert(x);
    visited.extend(ring1.iter().copied());
    seq.extend_from_slice(&ring1);

    // Rings d >= 2 by first contact: walk ring d-1 in its final order and
    // append each vertex's unvisited neighbours in that vertex's fan order.
    let mut prev = ring1;
    for _ in 2..=hops {
        let mut ring = Vec::new();
        for &u in &prev {
            for n in oriented_fan(topology, orientation, u) {
                if visited.insert(n) {
                    ring.push(n);
                }
            }
        }
        if ring.is_empty() {
            break;
        }
        seq.extend_from_slice(&ring);
        prev = ring;
    }

    let mut out: Vec<i32> = seq.iter().take(length).map(|&v| v as i32).collect();
    out.resize(length, PAD);
    out
}

/// Subsamples every `r`-th entry of a pre-dilation spiral. The input must be
/// at least `r * target_len` long (build it at the enlarged length first).
pub fn dilate(spiral: &[i32], r: usize, target_len: usize) -> Vec<i32> {
    assert!(r >= 1, "stride must be at least 1");
    assert!(spiral.len() >= r * target_len, "pre-dilation spiral too short");
    (0..target_len).map(|i| spiral[i * r]).collect()
}

/// Builds the full table in fixed mode or with per-vertex random 1-ring
/// rotations, depending on `config.ordering_mode`.
///
/// `mesh_salt` and `epoch_salt` feed the rotation stream for the `rand_*`
/// modes (which of the two participates depends on the mode); fixed mode
/// ignores both. Identical inputs give bit-identical tables.
pub fn build_spiral_table_salted(
    mesh: &Mesh,
    topology: &Topology,
    config: &SpiralConfig,
    mesh_salt: u64,
    epoch_salt: u64,
) -> Result<SpiralTable> {
    assert!(config.hops >= 1, "hops must be at least 1");
    assert!(config.length >= 1, "length must be at least 1");
    assert!(config.dilation >= 1, "dilation must be at least 1");
    let m = mesh.vertex_count();
    if config.reference_vertex as usize >= m {
        return Err(Error::VertexOutOfRange {
            index: config.reference_vertex,
            vertex_count: m,
        });
    }
    let geodesic = geodesic_distances(mesh, topology, config.reference_vertex);
    let pre_len = config.dilation * config.length;

    let mut rng = rotation_rng(config, mesh_salt, epoch_salt);

    let mut spirals = Vec::with_capacity(m * config.length);
    for x in 0..m as u32 {
        let ring = topology.neighbors(x);
        if ring.is_empty() {
            return Err(Error::IsolatedVertex { vertex: x });
        }
        let fixed_start = reference_start(topology, &geodesic, x)?;
        let start = match (&mut rng, topology.is_boundary(x)) {
            // Open fans cannot rotate; draw anyway so the stream position
            // stays a function of the vertex index alone.
            (Some(r), true) => {
                let _ = r.gen_range(0..ring.len());
                fixed_start
            }
            (Some(r), false) => {
                let fan = oriented_fan(topology, config.orientation, x);
                fan[r.gen_range(0..fan.len())]
            }
            (None, _) => fixed_start,
        };
        let pre = build_spiral_from(
            topology,
            &geodesic,
            config.hops,
            pre_len,
            config.orientation,
            x,
            start,
        );
        if config.dilation == 1 {
            spirals.extend_from_slice(&pre);
        } else {
            spirals.extend_from_slice(&dilate(&pre, config.dilation, config.length));
        }
    }

    Ok(SpiralTable {
        spirals,
        m,
        length: config.length,
        config: *config,
        template_hash: mesh.topology_hash(),
    })
}

/// Fixed-mode entry point (and the rand modes at salt 0).
pub fn build_spiral_table(mesh: &Mesh, topology: &Topology, config: &SpiralConfig) -> Result<SpiralTable> {
    build_spiral_table_salted(mesh, topology, config, 0, 0)
}

/// Builds the single spiral for one vertex under the fixed rule.
pub fn build_spiral(mesh: &Mesh, topology: &Topology, config: &SpiralConfig, x: u32) -> Result<Vec<i32>> {
    let table = build_spiral_table(mesh, topology, config)?;
    Ok(table.row(x).to_vec())
}

fn rotation_rng(config: &SpiralConfig, mesh_salt: u64, epoch_salt: u64) -> Option<ChaCha20Rng> {
    let (use_mesh, use_epoch) = match config.ordering_mode {
        OrderingMode::Fixed => return None,
        OrderingMode::RandMesh => (true, false),
        OrderingMode::RandEpoch => (false, true),
        OrderingMode::RandMeshAndEpoch => (true, true),
    };
    let mut h = fnv1a_new();
    h = fnv1a_bytes(h, &config.seed.to_le_bytes());
    h = fnv1a_bytes(h, &[config.ordering_mode.tag()]);
    if use_mesh {
        h = fnv1a_bytes(h, &mesh_salt.to_le_bytes());
    }
    if use_epoch {
        h = fnv1a_bytes(h, &epoch_salt.to_le_bytes());
    }
    Some(ChaCha20Rng::seed_from_u64(h))
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"SPRL";
const VERSION: u32 = 1;

impl SpiralTable {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.template_hash)?;
        w.write_u32::<LittleEndian>(self.m as u32)?;
        w.write_u32::<LittleEndian>(self.length as u32)?;
        w.write_u32::<LittleEndian>(self.config.hops as u32)?;
        w.write_u32::<LittleEndian>(self.config.dilation as u32)?;
        w.write_u8(match self.config.orientation {
            Orientation::CounterClockwise => 0,
            Orientation::Clockwise => 1,
        })?;
        w.write_u8(self.config.ordering_mode.tag())?;
        w.write_u32::<LittleEndian>(self.config.reference_vertex)?;
        w.write_u64::<LittleEndian>(self.config.seed)?;
        for &e in &self.spirals {
            w.write_i32::<LittleEndian>(e)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SpiralTable> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read(&bytes).map_err(|message| Error::CorruptFile {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn read(bytes: &[u8]) -> std::result::Result<SpiralTable, String> {
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        std::io::Read::read_exact(&mut r, &mut magic).map_err(|_| "truncated header".to_string())?;
        if &magic != MAGIC {
            return Err("bad magic (not a spiral table)".to_string());
        }
        let version = r.read_u32::<LittleEndian>().map_err(|_| "truncated header")?;
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let template_hash = r.read_u64::<LittleEndian>().map_err(|_| "truncated header")?;
        let m = r.read_u32::<LittleEndian>().map_err(|_| "truncated header")? as usize;
        let length = r.read_u32::<LittleEndian>().map_err(|_| "truncated header")? as usize;
        let hops = r.read_u32::<LittleEndian>().map_err(|_| "truncated header")? as usize;
        let dilation = r.read_u32::<LittleEndian>().map_err(|_| "truncated header")? as usize;
        let orientation = match r.read_u8().map_err(|_| "truncated header")? {
            0 => Orientation::CounterClockwise,
            1 => Orientation::Clockwise,
            t => return Err(format!("bad orientation tag {t}")),
        };
        let mode_tag = r.read_u8().map_err(|_| "truncated header")?;
        let ordering_mode =
            OrderingMode::from_tag(mode_tag).ok_or_else(|| format!("bad mode tag {mode_tag}"))?;
        let reference_vertex = r.read_u32::<LittleEndian>().map_err(|_| "truncated header")?;
        let seed = r.read_u64::<LittleEndian>().map_err(|_| "truncated header")?;
        let mut spirals = vec![0i32; m * length];
        for e in &mut spirals {
            *e = r
                .read_i32::<LittleEndian>()
                .map_err(|_| "truncated entries".to_string())?;
        }
        if r.position() != bytes.len() as u64 {
            return Err("trailing bytes after entries".to_string());
        }
        for (i, &e) in spirals.iter().enumerate() {
            if e != PAD && (e < 0 || e as usize >= m) {
                return Err(format!("entry {i} out of range: {e}"));
            }
        }
        Ok(SpiralTable {
            spirals,
            m,
            length,
            config: SpiralConfig {
                hops,
                length,
                dilation,
                reference_vertex,
                orientation,
                ordering_mode,
                seed,
            },
            template_hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::topology::Topology;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn grid() -> (Mesh, Topology) {
        let mesh = shapes::planar_grid(3, 3);
        let topo = Topology::build(&mesh).unwrap();
        (mesh, topo)
    }

    fn tetra() -> (Mesh, Topology) {
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        (mesh, topo)
    }

    #[test]
    fn reference_start_cases() {
        let (mesh, topo) = grid();
        let dist = geodesic_distances(&mesh, &topo, 0);
        assert_eq!(reference_start(&topo, &dist, 4).unwrap(), 0);

        let (mesh, topo) = tetra();
        let dist = geodesic_distances(&mesh, &topo, 0);
        assert_eq!(reference_start(&topo, &dist, 1).unwrap(), 0);
        // All of 0's neighbours are equidistant from 0: smallest index wins.
        assert_eq!(reference_start(&topo, &dist, 0).unwrap(), 1);
    }

    #[test]
    fn grid_center_spiral_matches_angular_oracle() {
        let (mesh, topo) = grid();
        let config = SpiralConfig::fixed(1, 7);
        let row = build_spiral(&mesh, &topo, &config, 4).unwrap();
        assert_eq!(row, vec![4, 0, 1, 5, 8, 7, 3]);

        // Independent oracle: angular sort of the 1-ring around +z, rotated
        // so the reference start (vertex 0) comes first.
        let center = mesh.position(4);
        let mut by_angle: Vec<(f64, u32)> = topo
            .neighbors(4)
            .iter()
            .map(|&n| {
                let p = mesh.position(n);
                ((p[1] - center[1]).atan2(p[0] - center[0]), n)
            })
            .collect();
        by_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ring: Vec<u32> = by_angle.iter().map(|&(_, n)| n).collect();
        let zero = ring.iter().position(|&n| n == 0).unwrap();
        let expected: Vec<i32> = std::iter::once(4)
            .chain((0..ring.len()).map(|i| ring[(zero + i) % ring.len()] as i32))
            .collect();
        assert_eq!(row, expected);
    }

    #[test]
    fn truncation_and_padding() {
        let (mesh, topo) = grid();
        let long = build_spiral(&mesh, &topo, &SpiralConfig::fixed(1, 9), 4).unwrap();
        assert_eq!(long, vec![4, 0, 1, 5, 8, 7, 3, PAD, PAD]);
        let short = build_spiral(&mesh, &topo, &SpiralConfig::fixed(1, 4), 4).unwrap();
        assert_eq!(short, vec![4, 0, 1, 5]);
    }

    #[test]
    fn grid_center_two_hop_ring_order() {
        let (mesh, topo) = grid();
        let row = build_spiral(&mesh, &topo, &SpiralConfig::fixed(2, 9), 4).unwrap();
        // Ring 2 = {2, 6}: vertex 2 first-contacted via ring-1 vertex 1,
        // vertex 6 via vertex 7.
        assert_eq!(row, vec![4, 0, 1, 5, 8, 7, 3, 2, 6]);
    }

    #[test]
    fn tetrahedron_table() {
        let (mesh, topo) = tetra();
        let table = build_spiral_table(&mesh, &topo, &SpiralConfig::fixed(1, 4)).unwrap();
        for x in 0..4u32 {
            let row = table.row(x);
            assert_eq!(row[0], x as i32);
            let rest: HashSet<i32> = row[1..].iter().copied().collect();
            let expect: HashSet<i32> = (0..4).filter(|&v| v != x as i32).collect();
            assert_eq!(rest, expect);
        }
        assert_eq!(table.row(0), &[0, 1, 2, 3]);
    }

    #[test]
    fn fixed_mode_is_deterministic_and_template_bound() {
        let (mesh, topo) = grid();
        let config = SpiralConfig::fixed(2, 9);
        let a = build_spiral_table(&mesh, &topo, &config).unwrap();
        let b = build_spiral_table(&mesh, &topo, &config).unwrap();
        assert_eq!(a.checksum(), b.checksum());

        // A deformed mesh with identical faces yields the identical table
        // only when the connectivity-derived ordering dominates; here the
        // reference geodesics change with positions, so we only require the
        // template hash to match and the row membership to agree.
        let moved: Vec<[f64; 3]> = mesh
            .vertices()
            .iter()
            .map(|v| [v[0] * 1.5, v[1] * 1.5, v[2]])
            .collect();
        let mesh2 = mesh.with_positions("scaled", moved).unwrap();
        let topo2 = Topology::build(&mesh2).unwrap();
        let c = build_spiral_table(&mesh2, &topo2, &config).unwrap();
        assert_eq!(a.template_hash, c.template_hash);
        assert_eq!(a.checksum(), c.checksum(), "uniform scaling preserves the ordering");
    }

    #[test]
    fn dilation_strides_the_pre_dilation_spiral() {
        let seq: Vec<i32> = (0..10).collect();
        assert_eq!(dilate(&seq, 2, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(dilate(&seq, 1, 10), seq);

        // On the grid: pre-dilation spiral of length 8 at h=2 is
        // [4,0,1,5,8,7,3,2]; stride 2 keeps [4,1,8,3].
        let (mesh, topo) = grid();
        let mut config = SpiralConfig::fixed(2, 4);
        config.dilation = 2;
        let row = build_spiral(&mesh, &topo, &config, 4).unwrap();
        assert_eq!(row, vec![4, 1, 8, 3]);
    }

    #[test]
    fn dilation_preserves_pad_tail() {
        let (mesh, topo) = grid();
        let mut config = SpiralConfig::fixed(1, 5);
        config.dilation = 2;
        // Pre-dilation length 10 of the h=1 spiral pads after entry 6:
        // [4,0,1,5,8,7,3,PAD,PAD,PAD] -> stride 2 -> [4,1,8,3,PAD].
        let row = build_spiral(&mesh, &topo, &config, 4).unwrap();
        assert_eq!(row, vec![4, 1, 8, 3, PAD]);
    }

    #[test]
    fn default_length_covers_every_vertex() {
        let (_, topo) = grid();
        assert_eq!(default_length(&topo, 1), 7); // centre vertex: 1 + 6
        assert_eq!(default_length(&topo, 2), 9); // 1 + 6 + 2

        let sphere = shapes::icosphere(2, 1.0);
        let topo = Topology::build(&sphere).unwrap();
        assert_eq!(default_length(&topo, 1), 7); // all valences 5 or 6
    }

    #[test]
    fn rows_respect_ring_order_and_hop_bound() {
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let hops = 2;
        let config = SpiralConfig::fixed(hops, default_length(&topo, hops));
        let table = build_spiral_table(&mesh, &topo, &config).unwrap();
        for x in 0..mesh.vertex_count() as u32 {
            let row = table.row(x);
            assert_eq!(row[0], x as i32);
            // Hop distance must be non-decreasing along the row and <= hops.
            let mut hop_of = std::collections::HashMap::new();
            for d in 0..=hops {
                for v in topo.d_ring(x, d) {
                    hop_of.insert(v as i32, d);
                }
            }
            let mut prev = 0usize;
            let mut seen_pad = false;
            let mut seen = HashSet::new();
            for &e in row {
                if e == PAD {
                    seen_pad = true;
                    continue;
                }
                assert!(!seen_pad, "PAD entries must form a contiguous suffix");
                assert!(seen.insert(e), "duplicate entry {e}");
                let d = *hop_of.get(&e).expect("entry within hop distance");
                assert!(d >= prev, "ring order violated");
                prev = d;
            }
        }
    }

    #[test]
    fn interior_ring1_is_fan_rotation() {
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let config = SpiralConfig::fixed(1, 7);
        let table = build_spiral_table(&mesh, &topo, &config).unwrap();
        for x in 0..mesh.vertex_count() as u32 {
            let fan = topo.fan(x);
            let k = fan.len();
            let row: Vec<u32> = table.row(x)[1..=k].iter().map(|&e| e as u32).collect();
            let start = fan.iter().position(|&n| n == row[0]).unwrap();
            let rotated: Vec<u32> = (0..k).map(|i| fan[(start + i) % k]).collect();
            assert_eq!(row, rotated, "vertex {x}");
        }
    }

    #[test]
    fn clockwise_reverses_ring_direction() {
        let (mesh, topo) = grid();
        let mut config = SpiralConfig::fixed(1, 7);
        config.orientation = Orientation::Clockwise;
        let row = build_spiral(&mesh, &topo, &config, 4).unwrap();
        assert_eq!(row, vec![4, 0, 3, 7, 8, 5, 1]);
    }

    #[test]
    fn random_modes_rotate_but_preserve_membership() {
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        // Untruncated length: under truncation a rotated start would change
        // which ring-2 entries survive the cut, so membership equality is
        // only promised when every ring fits.
        let mut config = SpiralConfig::fixed(2, default_length(&topo, 2));
        let fixed = build_spiral_table(&mesh, &topo, &config).unwrap();

        config.ordering_mode = OrderingMode::RandMeshAndEpoch;
        config.seed = 7;
        let a = build_spiral_table_salted(&mesh, &topo, &config, 1, 1).unwrap();
        let b = build_spiral_table_salted(&mesh, &topo, &config, 2, 1).unwrap();
        let a2 = build_spiral_table_salted(&mesh, &topo, &config, 1, 1).unwrap();
        assert_eq!(a.checksum(), a2.checksum(), "same salts reproduce");
        assert_ne!(a.checksum(), b.checksum(), "different mesh salt rotates differently");

        for x in 0..mesh.vertex_count() as u32 {
            let mut fa: Vec<i32> = a.row(x).iter().copied().filter(|&e| e != PAD).collect();
            let mut ff: Vec<i32> = fixed.row(x).iter().copied().filter(|&e| e != PAD).collect();
            fa.sort_unstable();
            ff.sort_unstable();
            assert_eq!(fa, ff, "membership differs at vertex {x}");
        }
    }

    #[test]
    fn rand_epoch_ignores_mesh_salt() {
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let mut config = SpiralConfig::fixed(1, 7);
        config.ordering_mode = OrderingMode::RandEpoch;
        config.seed = 11;
        let a = build_spiral_table_salted(&mesh, &topo, &config, 1, 5).unwrap();
        let b = build_spiral_table_salted(&mesh, &topo, &config, 2, 5).unwrap();
        let c = build_spiral_table_salted(&mesh, &topo, &config, 1, 6).unwrap();
        assert_eq!(a.checksum(), b.checksum(), "mesh salt must not matter");
        assert_ne!(a.checksum(), c.checksum(), "epoch salt must matter");
    }

    #[test]
    fn cache_roundtrip_bit_exact() {
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let config = SpiralConfig::fixed(2, 13);
        let table = build_spiral_table(&mesh, &topo, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spirals.bin");
        table.save(&path).unwrap();
        let back = SpiralTable::load(&path).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn cache_rejects_corruption() {
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        let table = build_spiral_table(&mesh, &topo, &SpiralConfig::fixed(1, 4)).unwrap();
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(SpiralTable::read(&buf).is_err());
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(SpiralTable::read(&bad_magic).is_err());
    }

    proptest! {
        #[test]
        fn membership_matches_rings(x in 0u32..42, hops in 1usize..4) {
            let mesh = shapes::icosphere(1, 1.0);
            let topo = Topology::build(&mesh).unwrap();
            let len = default_length(&topo, hops);
            let config = SpiralConfig::fixed(hops, len);
            let row = build_spiral(&mesh, &topo, &config, x).unwrap();
            let got: HashSet<i32> = row.iter().copied().filter(|&e| e != PAD).collect();
            let mut expect = HashSet::new();
            for d in 0..=hops {
                for v in topo.d_ring(x, d) {
                    expect.insert(v as i32);
                }
            }
            prop_assert_eq!(got, expect);
        }
    }
}
