//! Fixed-topology triangle meshes and OBJ/PLY file I/O.
//!
//! A [`Mesh`] is validated on construction: faces must be triangles with
//! in-range, distinct indices, interior edges must appear in exactly two
//! faces with opposite direction (consistent orientation), and the edge
//! graph must be connected. Vertex order is preserved exactly as given,
//! since every downstream structure (spiral tables, hierarchies, dense
//! correspondence) indexes into it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Triangle mesh with positions in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    name: String,
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

/// Encoding selector for PLY export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

impl Mesh {
    /// Builds a mesh and checks all structural invariants.
    pub fn new(name: impl Into<String>, vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        validate(&vertices, &faces)?;
        Ok(Mesh {
            name: name.into(),
            vertices,
            faces,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn position(&self, v: u32) -> Vec3 {
        self.vertices[v as usize]
    }

    /// Positions flattened row-major to a `m x 3` buffer.
    pub fn positions_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.vertices.len() * 3);
        for v in &self.vertices {
            out.extend_from_slice(v);
        }
        out
    }

    /// Same faces, new positions. The vertex count must match.
    pub fn with_positions(&self, name: impl Into<String>, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} vertices", self.vertices.len()),
                got: format!("{} vertices", vertices.len()),
            });
        }
        Ok(Mesh {
            name: name.into(),
            vertices,
            faces: self.faces.clone(),
        })
    }

    /// FNV-1a checksum of the connectivity (vertex count plus face indices).
    ///
    /// Identifies a template: two meshes in dense correspondence hash equal.
    pub fn topology_hash(&self) -> u64 {
        let mut h = fnv1a_new();
        h = fnv1a_u64(h, self.vertices.len() as u64);
        for f in &self.faces {
            for &i in f {
                h = fnv1a_u32(h, i);
            }
        }
        h
    }

    /// Loads a mesh, dispatching on the file extension (`.obj` or `.ply`).
    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()) {
            Some("obj") => Self::load_obj(path),
            Some("ply") => Self::load_ply(path),
            _ => Err(Error::Config(format!(
                "unsupported mesh extension on {}",
                path.display()
            ))),
        }
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let name = stem_name(path);
        parse_obj(BufReader::new(file), &path.display().to_string(), name)
    }

    pub fn load_ply(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let name = stem_name(path);
        parse_ply(&bytes, &path.display().to_string(), name)
    }

    pub fn save_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        let mut buf = String::new();
        for v in &self.vertices {
            buf.clear();
            let _ = writeln!(buf, "v {} {} {}", v[0], v[1], v[2]);
            w.write_all(buf.as_bytes())
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        for f in &self.faces {
            buf.clear();
            let _ = writeln!(buf, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            w.write_all(buf.as_bytes())
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        Ok(())
    }

    /// Writes a PLY file, optionally with per-vertex uchar colours.
    pub fn save_ply(
        &self,
        path: impl AsRef<Path>,
        encoding: PlyEncoding,
        colors: Option<&[[u8; 3]]>,
    ) -> Result<()> {
        let path = path.as_ref();
        if let Some(c) = colors {
            if c.len() != self.vertices.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} colours", self.vertices.len()),
                    got: format!("{}", c.len()),
                });
            }
        }
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        write_ply(&mut w, self, encoding, colors).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

fn stem_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string()
}

fn validate(vertices: &[Vec3], faces: &[[u32; 3]]) -> Result<()> {
    let m = vertices.len();
    for (fi, f) in faces.iter().enumerate() {
        for &i in f {
            if i as usize >= m {
                return Err(Error::IndexOutOfRange {
                    face: fi,
                    index: i,
                    vertex_count: m,
                });
            }
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            let dup = if f[0] == f[1] || f[0] == f[2] { f[0] } else { f[1] };
            return Err(Error::DegenerateFace { face: fi, index: dup });
        }
    }

    // Consistent orientation: each directed edge at most once. With triangles
    // this also bounds undirected edges to two incident faces.
    let mut directed: HashMap<(u32, u32), ()> = HashMap::with_capacity(faces.len() * 3);
    for f in faces {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            if directed.insert((a, b), ()).is_some() {
                return Err(Error::InconsistentOrientation { from: a, to: b });
            }
        }
    }

    // Edge-graph connectivity.
    if m > 1 {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); m];
        for (&(a, b), _) in directed.iter() {
            adj[a as usize].push(b);
        }
        let mut seen = vec![false; m];
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &n in &adj[v as usize] {
                if !seen[n as usize] {
                    seen[n as usize] = true;
                    stack.push(n);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected { vertex: v as u32 });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// OBJ
// ---------------------------------------------------------------------------

fn parse_obj(reader: impl BufRead, path: &str, name: String) -> Result<Mesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = ln + 1;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut pos = [0.0; 3];
                for p in pos.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| Error::parse(path, line_no, "vertex needs 3 coordinates"))?;
                    *p = tok
                        .parse::<f64>()
                        .map_err(|_| Error::parse(path, line_no, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(pos);
            }
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        face: faces.len(),
                        arity: idx.len(),
                    });
                }
                let mut face = [0u32; 3];
                for (slot, tok) in face.iter_mut().zip(&idx) {
                    let head = tok.split('/').next().unwrap_or(tok);
                    let one_based: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(path, line_no, format!("bad face index {tok:?}")))?;
                    if one_based < 1 {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("face index must be positive, got {one_based}"),
                        ));
                    }
                    *slot = (one_based - 1) as u32;
                }
                faces.push(face);
            }
            // Any other directive (vn, vt, o, g, usemtl, comments, ...) is ignored.
            _ => {}
        }
    }
    Mesh::new(name, vertices, faces)
}

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn from_name(s: &str) -> Option<PlyType> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar { name: String, ty: PlyType },
    List { name: String, count: PlyType, item: PlyType },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

fn read_scalar_binary(cur: &mut &[u8], ty: PlyType, path: &str) -> Result<f64> {
    let need = ty.size();
    if cur.len() < need {
        return Err(Error::CorruptFile {
            path: path.to_string(),
            message: "unexpected end of binary payload".into(),
        });
    }
    let mut r: &[u8] = &cur[..need];
    let v = match ty {
        PlyType::I8 => r.read_i8().unwrap() as f64,
        PlyType::U8 => r.read_u8().unwrap() as f64,
        PlyType::I16 => r.read_i16::<LittleEndian>().unwrap() as f64,
        PlyType::U16 => r.read_u16::<LittleEndian>().unwrap() as f64,
        PlyType::I32 => r.read_i32::<LittleEndian>().unwrap() as f64,
        PlyType::U32 => r.read_u32::<LittleEndian>().unwrap() as f64,
        PlyType::F32 => r.read_f32::<LittleEndian>().unwrap() as f64,
        PlyType::F64 => r.read_f64::<LittleEndian>().unwrap(),
    };
    *cur = &cur[need..];
    Ok(v)
}

fn parse_ply(bytes: &[u8], path: &str, name: String) -> Result<Mesh> {
    // Header is ASCII lines up to and including "end_header".
    let mut header_end = None;
    let mut pos = 0;
    let mut lines: Vec<(usize, String)> = Vec::new();
    let mut line_no = 0;
    while pos < bytes.len() {
        let nl = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(bytes.len());
        let raw = &bytes[pos..nl];
        let text = String::from_utf8_lossy(raw).trim_end_matches('\r').trim().to_string();
        line_no += 1;
        let is_end = text == "end_header";
        lines.push((line_no, text));
        pos = nl + 1;
        if is_end {
            header_end = Some(pos);
            break;
        }
    }
    let header_end = header_end
        .ok_or_else(|| Error::parse(path, line_no, "missing end_header"))?;

    let mut iter = lines.iter();
    match iter.next() {
        Some((_, l)) if l == "ply" => {}
        _ => return Err(Error::parse(path, 1, "not a PLY file (missing 'ply' magic)")),
    }

    let mut ascii = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for (ln, line) in iter {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => match parts.next() {
                Some("ascii") => ascii = Some(true),
                Some("binary_little_endian") => ascii = Some(false),
                other => {
                    return Err(Error::parse(
                        path,
                        *ln,
                        format!("unsupported format {other:?} (ascii or binary_little_endian)"),
                    ))
                }
            },
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let ename = parts
                    .next()
                    .ok_or_else(|| Error::parse(path, *ln, "element needs a name"))?;
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::parse(path, *ln, "element needs a count"))?;
                elements.push(PlyElement {
                    name: ename.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, *ln, "property before any element"))?;
                let first = parts
                    .next()
                    .ok_or_else(|| Error::parse(path, *ln, "property needs a type"))?;
                if first == "list" {
                    let count = parts
                        .next()
                        .and_then(PlyType::from_name)
                        .ok_or_else(|| Error::parse(path, *ln, "bad list count type"))?;
                    let item = parts
                        .next()
                        .and_then(PlyType::from_name)
                        .ok_or_else(|| Error::parse(path, *ln, "bad list item type"))?;
                    let pname = parts
                        .next()
                        .ok_or_else(|| Error::parse(path, *ln, "list property needs a name"))?;
                    elem.properties.push(PlyProperty::List {
                        name: pname.to_string(),
                        count,
                        item,
                    });
                } else {
                    let ty = PlyType::from_name(first)
                        .ok_or_else(|| Error::parse(path, *ln, format!("bad property type {first:?}")))?;
                    let pname = parts
                        .next()
                        .ok_or_else(|| Error::parse(path, *ln, "property needs a name"))?;
                    elem.properties.push(PlyProperty::Scalar {
                        name: pname.to_string(),
                        ty,
                    });
                }
            }
            Some("end_header") => break,
            other => {
                return Err(Error::parse(path, *ln, format!("unknown header line {other:?}")));
            }
        }
    }
    let ascii = ascii.ok_or_else(|| Error::parse(path, 1, "missing format line"))?;

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    if ascii {
        let body = String::from_utf8_lossy(&bytes[header_end..]);
        let mut tokens = body.split_whitespace();
        let mut next_f64 = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| Error::CorruptFile {
                    path: path.to_string(),
                    message: format!("unexpected end of data reading {what}"),
                })?
                .parse::<f64>()
                .map_err(|_| Error::CorruptFile {
                    path: path.to_string(),
                    message: format!("bad number while reading {what}"),
                })
        };
        for elem in &elements {
            for _ in 0..elem.count {
                let mut xyz = [f64::NAN; 3];
                let mut list: Vec<f64> = Vec::new();
                for prop in &elem.properties {
                    match prop {
                        PlyProperty::Scalar { name, .. } => {
                            let v = next_f64(name)?;
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                        PlyProperty::List { name, .. } => {
                            let n = next_f64(name)? as usize;
                            list.clear();
                            for _ in 0..n {
                                list.push(next_f64(name)?);
                            }
                        }
                    }
                }
                collect_element(elem, xyz, &list, &mut vertices, &mut faces, path)?;
            }
        }
    } else {
        let mut cur = &bytes[header_end..];
        for elem in &elements {
            for _ in 0..elem.count {
                let mut xyz = [f64::NAN; 3];
                let mut list: Vec<f64> = Vec::new();
                for prop in &elem.properties {
                    match prop {
                        PlyProperty::Scalar { name, ty } => {
                            let v = read_scalar_binary(&mut cur, *ty, path)?;
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                        PlyProperty::List { count, item, .. } => {
                            let n = read_scalar_binary(&mut cur, *count, path)? as usize;
                            list.clear();
                            for _ in 0..n {
                                list.push(read_scalar_binary(&mut cur, *item, path)?);
                            }
                        }
                    }
                }
                collect_element(elem, xyz, &list, &mut vertices, &mut faces, path)?;
            }
        }
    }

    Mesh::new(name, vertices, faces)
}

fn collect_element(
    elem: &PlyElement,
    xyz: [f64; 3],
    list: &[f64],
    vertices: &mut Vec<Vec3>,
    faces: &mut Vec<[u32; 3]>,
    path: &str,
) -> Result<()> {
    match elem.name.as_str() {
        "vertex" => {
            if xyz.iter().any(|v| v.is_nan()) {
                return Err(Error::CorruptFile {
                    path: path.to_string(),
                    message: "vertex element lacks x/y/z properties".into(),
                });
            }
            vertices.push(xyz);
        }
        "face" => {
            if list.len() != 3 {
                return Err(Error::NonTriangleFace {
                    face: faces.len(),
                    arity: list.len(),
                });
            }
            let mut f = [0u32; 3];
            for (slot, &v) in f.iter_mut().zip(list) {
                if v < 0.0 {
                    return Err(Error::CorruptFile {
                        path: path.to_string(),
                        message: "negative face index".into(),
                    });
                }
                *slot = v as u32;
            }
            faces.push(f);
        }
        _ => {}
    }
    Ok(())
}

fn write_ply(
    w: &mut impl Write,
    mesh: &Mesh,
    encoding: PlyEncoding,
    colors: Option<&[[u8; 3]]>,
) -> std::io::Result<()> {
    writeln!(w, "ply")?;
    match encoding {
        PlyEncoding::Ascii => writeln!(w, "format ascii 1.0")?,
        PlyEncoding::BinaryLittleEndian => writeln!(w, "format binary_little_endian 1.0")?,
    }
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    if colors.is_some() {
        writeln!(w, "property uchar red")?;
        writeln!(w, "property uchar green")?;
        writeln!(w, "property uchar blue")?;
    }
    writeln!(w, "element face {}", mesh.face_count())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;

    match encoding {
        PlyEncoding::Ascii => {
            for (i, v) in mesh.vertices().iter().enumerate() {
                write!(w, "{} {} {}", v[0], v[1], v[2])?;
                if let Some(c) = colors {
                    write!(w, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
                }
                writeln!(w)?;
            }
            for f in mesh.faces() {
                writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for (i, v) in mesh.vertices().iter().enumerate() {
                w.write_f64::<LittleEndian>(v[0])?;
                w.write_f64::<LittleEndian>(v[1])?;
                w.write_f64::<LittleEndian>(v[2])?;
                if let Some(c) = colors {
                    w.write_all(&c[i])?;
                }
            }
            for f in mesh.faces() {
                w.write_u8(3)?;
                w.write_i32::<LittleEndian>(f[0] as i32)?;
                w.write_i32::<LittleEndian>(f[1] as i32)?;
                w.write_i32::<LittleEndian>(f[2] as i32)?;
            }
        }
    }
    Ok(())
}

// FNV-1a, 64-bit. Hand-rolled so hashes are stable across platforms and runs.
const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

pub(crate) fn fnv1a_new() -> u64 {
    FNV_OFFSET
}

pub(crate) fn fnv1a_bytes(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub(crate) fn fnv1a_u32(h: u64, v: u32) -> u64 {
    fnv1a_bytes(h, &v.to_le_bytes())
}

pub(crate) fn fnv1a_u64(h: u64, v: u64) -> u64 {
    fnv1a_bytes(h, &v.to_le_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use std::io::Cursor;

    const TETRA_OBJ: &str = "\
# regular tetrahedron
v 1 1 1
v 1 -1 -1
v -1 1 -1
v -1 -1 1
f 1 2 3
f 1 3 4
f 1 4 2
f 2 4 3
";

    fn grid_obj() -> String {
        let mut s = String::new();
        for r in 0..3 {
            for c in 0..3 {
                let _ = writeln!(s, "v {} {} 0", c, r);
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                let a = 3 * r + c + 1; // 1-based
                let b = a + 1;
                let c2 = a + 3;
                let d = a + 4;
                let _ = writeln!(s, "f {a} {b} {d}");
                let _ = writeln!(s, "f {a} {d} {c2}");
            }
        }
        s
    }

    #[test]
    fn obj_tetrahedron_counts() {
        let mesh = parse_obj(Cursor::new(TETRA_OBJ), "tetra.obj", "tetra".into()).unwrap();
        assert_eq!(mesh.vertex_count(), 4);
        assert_eq!(mesh.face_count(), 4);
    }

    #[test]
    fn obj_grid_counts() {
        let mesh = parse_obj(Cursor::new(grid_obj()), "grid.obj", "grid".into()).unwrap();
        assert_eq!(mesh.vertex_count(), 9);
        assert_eq!(mesh.face_count(), 8);
        // Matches the generator used everywhere else.
        assert_eq!(mesh.faces(), shapes::planar_grid(3, 3).faces());
    }

    #[test]
    fn obj_quad_face_rejected() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = parse_obj(Cursor::new(src), "quad.obj", "quad".into()).unwrap_err();
        assert!(matches!(err, Error::NonTriangleFace { arity: 4, .. }));
    }

    #[test]
    fn inconsistent_orientation_reports_edge() {
        // Two faces traverse edge (1,2) in the same direction.
        let verts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
        ];
        let err = Mesh::new("bad", verts, vec![[0, 1, 2], [1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { from: 1, to: 2 }));
    }

    #[test]
    fn degenerate_face_rejected() {
        let verts = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let err = Mesh::new("bad", verts, vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { .. }));
    }

    #[test]
    fn disconnected_mesh_rejected() {
        let verts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [5.0, 5.0, 0.0],
            [6.0, 5.0, 0.0],
            [5.0, 6.0, 0.0],
        ];
        let err = Mesh::new("two islands", verts, vec![[0, 1, 2], [3, 4, 5]]).unwrap_err();
        assert!(matches!(err, Error::Disconnected { .. }));
    }

    #[test]
    fn ply_binary_roundtrip_bit_exact() {
        let mesh = shapes::tetrahedron();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ply");
        mesh.save_ply(&path, PlyEncoding::BinaryLittleEndian, None).unwrap();
        let back = Mesh::load_ply(&path).unwrap();
        assert_eq!(mesh.vertices(), back.vertices());
        assert_eq!(mesh.faces(), back.faces());
    }

    #[test]
    fn ply_ascii_roundtrip_exact() {
        // Rust prints f64 with a shortest round-trip representation, so even
        // the ASCII encoding reproduces positions bit-exactly.
        let mesh = shapes::planar_grid(3, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ply");
        mesh.save_ply(&path, PlyEncoding::Ascii, None).unwrap();
        let back = Mesh::load_ply(&path).unwrap();
        assert_eq!(mesh.vertices(), back.vertices());
        assert_eq!(mesh.faces(), back.faces());
    }

    #[test]
    fn ply_float32_vertices_accepted() {
        let src = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let mesh = parse_ply(src.as_bytes(), "f32.ply", "f32".into()).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
    }

    #[test]
    fn ply_with_colors_roundtrip() {
        let mesh = shapes::tetrahedron();
        let colors = vec![[255u8, 0, 0], [0, 255, 0], [0, 0, 255], [7, 8, 9]];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        mesh.save_ply(&path, PlyEncoding::BinaryLittleEndian, Some(&colors)).unwrap();
        let back = Mesh::load_ply(&path).unwrap();
        assert_eq!(mesh.vertices(), back.vertices());
    }

    #[test]
    fn obj_save_load_roundtrip() {
        let mesh = shapes::icosphere(1, 100.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.obj");
        mesh.save_obj(&path).unwrap();
        let back = Mesh::load_obj(&path).unwrap();
        assert_eq!(mesh.vertices(), back.vertices());
        assert_eq!(mesh.faces(), back.faces());
    }

    #[test]
    fn topology_hash_ignores_positions() {
        let a = shapes::planar_grid(3, 3);
        let moved: Vec<Vec3> = a.vertices().iter().map(|v| [v[0] + 1.0, v[1], v[2]]).collect();
        let b = a.with_positions("moved", moved).unwrap();
        assert_eq!(a.topology_hash(), b.topology_hash());
        assert_ne!(a.topology_hash(), shapes::tetrahedron().topology_hash());
    }
}
