//! Binary model checkpoints.
//!
//! Layout (little endian), checksummed with FNV-1a over everything before
//! the trailing hash:
//!
//! ```text
//! magic "SMCK" | version u32 | template_hash u64
//! operator u8 | final_identity_conv u8 | signal_dim u32 | latent u32
//! steps u32 | encoder_widths u32* | decoder_widths u32* | pooling u32*
//! hops u32* | dilation u32* | spiral lengths u32*
//! stats dim u32 | mean f64* | std f64*
//! param count u32 | per param: name (u32 len + utf8), rows u32, cols u32,
//!                   values f64[rows*cols]   (weights stored (K*w_in, w_out))
//! checksum u64
//! ```

use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::hierarchy::MeshHierarchy;
use crate::mesh::{fnv1a_bytes, fnv1a_new};
use crate::models::autoencoder::{Model, ModelSpec, Operator, Param};
use crate::models::normalize::NormStats;
use crate::spiral::SpiralTable;

const MAGIC: &[u8; 4] = b"SMCK";
const VERSION: u32 = 1;

/// Everything needed to restore a trained model next to its dataset.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub lengths: Vec<usize>,
    pub stats: NormStats,
    pub template_hash: u64,
    pub params: Vec<Param>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, stats: &NormStats) -> Checkpoint {
        Checkpoint {
            spec: model.spec().clone(),
            lengths: model.lengths().to_vec(),
            stats: stats.clone(),
            template_hash: model.template_hash(),
            params: model.params().to_vec(),
        }
    }

    /// Rebuilds the model over a freshly constructed hierarchy and spiral
    /// tables, verifying the template and kernel sizes, then restores the
    /// parameters.
    pub fn into_model(self, hierarchy: &MeshHierarchy, tables: &[SpiralTable]) -> Result<(Model, NormStats)> {
        if hierarchy.template().topology_hash() != self.template_hash {
            return Err(Error::TemplateMismatch {
                expected: self.template_hash,
                got: hierarchy.template().topology_hash(),
            });
        }
        let mut model = Model::build(self.spec, hierarchy, tables)?;
        if model.lengths() != self.lengths.as_slice() {
            return Err(Error::Config(format!(
                "spiral lengths {:?} do not match checkpoint {:?}",
                model.lengths(),
                self.lengths
            )));
        }
        model.load_params(&self.params)?;
        Ok((model, self.stats))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(VERSION).unwrap();
        out.write_u64::<LittleEndian>(self.template_hash).unwrap();
        out.push(match self.spec.operator {
            Operator::Spiral => 0,
            Operator::Cheb => 1,
        });
        out.push(self.spec.final_identity_conv as u8);
        out.write_u32::<LittleEndian>(self.spec.signal_dim as u32).unwrap();
        out.write_u32::<LittleEndian>(self.spec.latent as u32).unwrap();
        out.write_u32::<LittleEndian>(self.spec.steps() as u32).unwrap();
        let write_list = |xs: &[usize], out: &mut Vec<u8>| {
            for &x in xs {
                out.write_u32::<LittleEndian>(x as u32).unwrap();
            }
        };
        write_list(&self.spec.encoder_widths, &mut out);
        write_list(&self.spec.decoder_widths, &mut out);
        write_list(&self.spec.pooling, &mut out);
        write_list(&self.spec.hops, &mut out);
        write_list(&self.spec.dilation, &mut out);
        write_list(&self.lengths, &mut out);
        out.write_u32::<LittleEndian>(self.stats.dim() as u32).unwrap();
        for &x in self.stats.mean() {
            out.write_f64::<LittleEndian>(x).unwrap();
        }
        for &x in self.stats.std() {
            out.write_f64::<LittleEndian>(x).unwrap();
        }
        out.write_u32::<LittleEndian>(self.params.len() as u32).unwrap();
        for p in &self.params {
            out.write_u32::<LittleEndian>(p.name.len() as u32).unwrap();
            out.extend_from_slice(p.name.as_bytes());
            out.write_u32::<LittleEndian>(p.rows as u32).unwrap();
            out.write_u32::<LittleEndian>(p.cols as u32).unwrap();
            for &v in &p.values {
                out.write_f64::<LittleEndian>(v).unwrap();
            }
        }
        let checksum = fnv1a_bytes(fnv1a_new(), &out);
        out.write_u64::<LittleEndian>(checksum).unwrap();
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        file.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
        let corrupt = |message: &str| Error::CorruptFile {
            path: path.display().to_string(),
            message: message.to_string(),
        };
        if bytes.len() < 8 {
            return Err(corrupt("truncated"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = (&tail[..]).read_u64::<LittleEndian>().unwrap();
        if stored != fnv1a_bytes(fnv1a_new(), body) {
            return Err(corrupt("checksum mismatch"));
        }
        let mut r = body;
        let mut magic = [0u8; 4];
        std::io::Read::read_exact(&mut r, &mut magic).map_err(|_| corrupt("truncated"))?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic"));
        }
        if r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? != VERSION {
            return Err(corrupt("unsupported version"));
        }
        let template_hash = r.read_u64::<LittleEndian>().map_err(|_| corrupt("truncated"))?;
        let operator = match r.read_u8().map_err(|_| corrupt("truncated"))? {
            0 => Operator::Spiral,
            1 => Operator::Cheb,
            _ => return Err(corrupt("unknown operator tag")),
        };
        let final_identity_conv = r.read_u8().map_err(|_| corrupt("truncated"))? != 0;
        let signal_dim = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
        let latent = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
        let steps = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
        if steps == 0 || steps > 64 {
            return Err(corrupt("implausible step count"));
        }
        let read_list = |r: &mut &[u8], n: usize| -> Result<Vec<usize>> {
            (0..n)
                .map(|_| {
                    r.read_u32::<LittleEndian>()
                        .map(|x| x as usize)
                        .map_err(|_| corrupt("truncated"))
                })
                .collect()
        };
        let encoder_widths = read_list(&mut r, steps)?;
        let decoder_widths = read_list(&mut r, steps - 1)?;
        let pooling = read_list(&mut r, steps)?;
        let hops = read_list(&mut r, steps)?;
        let dilation = read_list(&mut r, steps)?;
        let lengths = read_list(&mut r, steps)?;
        let dim = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
        let mut mean = vec![0.0; dim];
        let mut std = vec![0.0; dim];
        for slot in mean.iter_mut().chain(std.iter_mut()) {
            *slot = r.read_f64::<LittleEndian>().map_err(|_| corrupt("truncated"))?;
        }
        let count = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let nlen = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
            if nlen > 256 || r.len() < nlen {
                return Err(corrupt("bad parameter name"));
            }
            let (name_bytes, rest) = r.split_at(nlen);
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| corrupt("non-utf8 parameter name"))?
                .to_string();
            r = rest;
            let rows = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
            let cols = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
            if rows.checked_mul(cols).is_none() || r.len() < rows * cols * 8 {
                return Err(corrupt("bad parameter shape"));
            }
            let mut values = vec![0.0; rows * cols];
            for v in &mut values {
                *v = r.read_f64::<LittleEndian>().map_err(|_| corrupt("truncated"))?;
            }
            params.push(Param {
                name,
                rows,
                cols,
                values,
            });
        }
        if !r.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        let spec = ModelSpec {
            operator,
            encoder_widths,
            decoder_widths,
            pooling,
            hops,
            dilation,
            latent,
            signal_dim,
            final_identity_conv,
        };
        spec.validate()?;
        Ok(Checkpoint {
            spec,
            lengths,
            stats: NormStats::from_parts(mean, std),
            template_hash,
            params,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Checkpoint::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::spiral::{build_spiral_table, default_length, SpiralConfig};
    use crate::topology::Topology;

    fn build_fixture() -> (MeshHierarchy, Vec<SpiralTable>, Model, NormStats) {
        let mesh = shapes::planar_grid(4, 4);
        let hierarchy = MeshHierarchy::build(&mesh, &[2, 2]).unwrap();
        let tables: Vec<SpiralTable> = (0..2)
            .map(|i| {
                let level = hierarchy.level_mesh(i);
                let topo = Topology::build(level).unwrap();
                let length = default_length(&topo, 1);
                build_spiral_table(level, &topo, &SpiralConfig::fixed(1, length)).unwrap()
            })
            .collect();
        let spec = ModelSpec {
            operator: Operator::Spiral,
            encoder_widths: vec![2, 3],
            decoder_widths: vec![3],
            pooling: vec![2, 2],
            hops: vec![1, 1],
            dilation: vec![1, 1],
            latent: 2,
            signal_dim: 3,
            final_identity_conv: false,
        };
        let mut model = Model::build(spec, &hierarchy, &tables).unwrap();
        model.init_params(31);
        let m = mesh.vertex_count();
        let a: Vec<f64> = (0..m * 3).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..m * 3).map(|i| (i as f64 * 0.9).sin()).collect();
        let stats = NormStats::fit(&[&a, &b]).unwrap();
        (hierarchy, tables, model, stats)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (hierarchy, tables, model, stats) = build_fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ckpt = Checkpoint::from_model(&model, &stats);
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.params, model.params());
        assert_eq!(loaded.stats, stats);
        assert_eq!(loaded.lengths, model.lengths());
        let (restored, _) = loaded.into_model(&hierarchy, &tables).unwrap();
        assert_eq!(restored.param_values(), model.param_values());
        // Functional equality on a probe input.
        let m = model.vertex_count();
        let x: Vec<f64> = (0..m * 3).map(|i| (i as f64 * 0.21).cos()).collect();
        assert_eq!(restored.reconstruct(&x, 1), model.reconstruct(&x, 1));
    }

    #[test]
    fn corruption_is_detected() {
        let (_, _, model, stats) = build_fixture();
        let mut bytes = Checkpoint::from_model(&model, &stats).to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        let err = Checkpoint::from_bytes(&bytes, Path::new("x.ckpt")).unwrap_err();
        assert!(matches!(err, Error::CorruptFile { .. }));
    }

    #[test]
    fn wrong_template_is_rejected() {
        let (_, _, model, stats) = build_fixture();
        let ckpt = Checkpoint::from_model(&model, &stats);
        let other = shapes::planar_grid(5, 5);
        let hierarchy = MeshHierarchy::build(&other, &[2, 2]).unwrap();
        let tables: Vec<SpiralTable> = (0..2)
            .map(|i| {
                let level = hierarchy.level_mesh(i);
                let topo = Topology::build(level).unwrap();
                let length = default_length(&topo, 1);
                build_spiral_table(level, &topo, &SpiralConfig::fixed(1, length)).unwrap()
            })
            .collect();
        let err = ckpt.into_model(&hierarchy, &tables).unwrap_err();
        assert!(matches!(err, Error::TemplateMismatch { .. }));
    }
}
