//! Cache preprocessing: the mesh hierarchy and one fixed-ordering spiral
//! table per level, persisted under a cache directory and reused when the
//! stored template hash and configuration still match.

use std::path::Path;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::hierarchy::MeshHierarchy;
use crate::mesh::{fnv1a_bytes, fnv1a_new, fnv1a_u64, Mesh};
use crate::models::autoencoder::Model;
use crate::nn::GatherPlan;
use crate::spiral::{build_spiral_table, default_length, SpiralConfig, SpiralTable};
use crate::topology::Topology;

/// Hierarchy plus per-level spiral tables, with a combined checksum that is
/// stable across reruns of [`ensure_caches`].
pub struct CacheBundle {
    pub hierarchy: MeshHierarchy,
    pub tables: Vec<SpiralTable>,
    pub checksum: u64,
    /// How many artifacts were (re)built rather than reused.
    pub rebuilt: usize,
}

impl CacheBundle {
    pub fn table_refs(&self) -> Vec<&SpiralTable> {
        self.tables.iter().collect()
    }

    /// Default per-level gather plans for single-sample inference.
    pub fn gather_plans(&self) -> Vec<Rc<GatherPlan>> {
        self.tables.iter().map(GatherPlan::from_table).collect()
    }

    pub fn build_model(&self, cfg: &RunConfig) -> Result<Model> {
        Model::build(cfg.model_spec(), &self.hierarchy, &self.tables)
    }
}

/// The spiral configuration used at `level`, with the data-driven default
/// length when the config leaves it at 0.
pub fn level_spiral_config(cfg: &RunConfig, level: usize, topology: &Topology) -> SpiralConfig {
    let length = if cfg.spiral_length[level] == 0 {
        default_length(topology, cfg.hops[level])
    } else {
        cfg.spiral_length[level]
    };
    SpiralConfig {
        hops: cfg.hops[level],
        length,
        dilation: cfg.dilation[level],
        ..SpiralConfig::fixed(cfg.hops[level], length)
    }
}

/// Ensures `cache_dir` holds a hierarchy and spiral table valid for
/// (`template`, `cfg`), rebuilding whatever is stale, and returns the loaded
/// bundle. Reruns with unchanged inputs rebuild nothing and return the same
/// checksum.
pub fn ensure_caches(template: &Mesh, cache_dir: &Path, cfg: &RunConfig) -> Result<CacheBundle> {
    std::fs::create_dir_all(cache_dir)
        .map_err(|e| Error::io(cache_dir.display().to_string(), e))?;
    let mut rebuilt = 0;

    let hpath = cache_dir.join("hierarchy.bin");
    let cached = if hpath.exists() {
        MeshHierarchy::load(&hpath, template)
            .ok()
            .filter(|h| h.factors() == cfg.pooling.as_slice())
    } else {
        None
    };
    let hierarchy = match cached {
        Some(h) => h,
        None => {
            let h = MeshHierarchy::build(template, &cfg.pooling)?;
            h.save(&hpath)?;
            rebuilt += 1;
            h
        }
    };

    let mut tables = Vec::with_capacity(cfg.pooling.len());
    for level in 0..cfg.pooling.len() {
        let mesh = hierarchy.level_mesh(level);
        let topology = Topology::build(mesh)?;
        let want = level_spiral_config(cfg, level, &topology);
        let tpath = cache_dir.join(format!("spiral_level{level}.bin"));
        let cached = if tpath.exists() {
            SpiralTable::load(&tpath)
                .ok()
                .filter(|t| t.config == want && t.template_hash == mesh.topology_hash())
        } else {
            None
        };
        let table = match cached {
            Some(t) => t,
            None => {
                let t = build_spiral_table(mesh, &topology, &want)?;
                t.save(&tpath)?;
                rebuilt += 1;
                t
            }
        };
        tables.push(table);
    }

    let mut sum = fnv1a_new();
    let mut hbytes = Vec::new();
    hierarchy
        .write(&mut hbytes)
        .map_err(|e| Error::io(hpath.display().to_string(), e))?;
    sum = fnv1a_bytes(sum, &hbytes);
    for t in &tables {
        sum = fnv1a_u64(sum, t.checksum());
    }

    Ok(CacheBundle {
        hierarchy,
        tables,
        checksum: sum,
        rebuilt,
    })
}
