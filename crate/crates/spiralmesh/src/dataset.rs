//! Datasets of meshes in dense correspondence, plus a synthetic generator.
//!
//! On disk a dataset is a directory:
//!
//! ```text
//! template.ply (or template.obj)
//! samples/<name>.ply          shared topology with the template
//! splits/{train,val,test}.txt one sample filename per line
//! ```
//!
//! Every sample must match the template's face list exactly; positions are
//! in millimetres, flattened vertex-major (`x0 y0 z0 x1 y1 z1 ...`).

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::geom::{cross, dot, normalize, Vec3};
use crate::mesh::{fnv1a_bytes, fnv1a_new, fnv1a_u64, Mesh, PlyEncoding};
use crate::shapes;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub template: Mesh,
    pub names: Vec<String>,
    pub samples: Vec<Vec<f64>>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Ranges for the synthetic bump-sphere generator. Each sample displaces an
/// icosphere radially by `bumps` anisotropic Gaussian bumps, twists the
/// surface around each bump's axis, and applies a mild per-axis stretch.
#[derive(Debug, Clone)]
pub struct BumpParams {
    pub bumps_min: usize,
    pub bumps_max: usize,
    /// Bump amplitude magnitude range (mm); the sign is drawn separately.
    pub amp_min_mm: f64,
    pub amp_max_mm: f64,
    /// Angular bump width range (radians).
    pub width_min_rad: f64,
    pub width_max_rad: f64,
    /// Tangential elongation drawn from [1, max].
    pub elongation_max: f64,
    /// Half-range (radians) of the bump orientation jitter around the
    /// template's east tangent flow. Small values anchor each bump's long
    /// axis to a fixed direction field on the template — the way anatomical
    /// features keep consistent orientations across subjects — while PI
    /// recovers fully random orientations.
    pub orientation_jitter_rad: f64,
    /// Tangential swirl amplitude as a fraction of the radial amplitude
    /// range: each bump also rotates the surface around its own axis,
    /// giving the displacement field a local handedness.
    pub swirl: f64,
    /// Per-axis stretch drawn from 1 +- this value.
    pub stretch: f64,
}

impl Default for BumpParams {
    fn default() -> BumpParams {
        BumpParams {
            bumps_min: 4,
            bumps_max: 9,
            amp_min_mm: 3.0,
            amp_max_mm: 10.0,
            width_min_rad: 0.18,
            width_max_rad: 0.42,
            elongation_max: 4.0,
            orientation_jitter_rad: 0.35,
            swirl: 0.4,
            stretch: 0.06,
        }
    }
}

/// Template radius in millimetres.
pub const SPHERE_RADIUS_MM: f64 = 100.0;
/// Subdivision level of the template icosphere (642 vertices).
pub const SPHERE_SUBDIV: usize = 3;

impl Dataset {
    pub fn vertex_count(&self) -> usize {
        self.template.vertex_count()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    /// Assigns the first `train` samples to train, the next `val` to val,
    /// and the next `test` to test.
    pub fn with_splits(mut self, train: usize, val: usize, test: usize) -> Result<Dataset> {
        if train + val + test > self.samples.len() {
            return Err(Error::Config(format!(
                "splits {}+{}+{} exceed {} samples",
                train,
                val,
                test,
                self.samples.len()
            )));
        }
        self.train = (0..train).collect();
        self.val = (train..train + val).collect();
        self.test = (train + val..train + val + test).collect();
        Ok(self)
    }

    pub fn split(&self, name: &str) -> Result<&[usize]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("no sample named '{name}'")))
    }

    /// Mean shape over the given sample indices.
    pub fn mean_shape(&self, indices: &[usize]) -> Result<Vec<f64>> {
        if indices.is_empty() {
            return Err(Error::EmptySplit("mean shape needs at least one sample".into()));
        }
        let dim = self.samples[indices[0]].len();
        let mut mean = vec![0.0; dim];
        for &i in indices {
            for (m, &x) in mean.iter_mut().zip(&self.samples[i]) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= indices.len() as f64;
        }
        Ok(mean)
    }

    pub fn save(&self, dir: impl AsRef<Path>, encoding: PlyEncoding) -> Result<()> {
        let dir = dir.as_ref();
        let samples_dir = dir.join("samples");
        let splits_dir = dir.join("splits");
        for d in [dir, &samples_dir, &splits_dir] {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d.display().to_string(), e))?;
        }
        self.template.save_ply(dir.join("template.ply"), encoding, None)?;
        for (name, positions) in self.names.iter().zip(&self.samples) {
            let mesh = self.template.with_positions(name.clone(), unflatten(positions))?;
            mesh.save_ply(samples_dir.join(format!("{name}.ply")), encoding, None)?;
        }
        for (split, indices) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            let path = splits_dir.join(format!("{split}.txt"));
            let body: String = indices
                .iter()
                .map(|&i| format!("{}.ply\n", self.names[i]))
                .collect();
            std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Dataset> {
        let dir = dir.as_ref();
        let template = {
            let ply = dir.join("template.ply");
            let obj = dir.join("template.obj");
            if ply.exists() {
                Mesh::load(&ply)?
            } else if obj.exists() {
                Mesh::load(&obj)?
            } else {
                return Err(Error::Config(format!(
                    "no template.ply or template.obj in {}",
                    dir.display()
                )));
            }
        };
        let read_split = |name: &str| -> Result<Vec<String>> {
            let path = dir.join("splits").join(format!("{name}.txt"));
            if !path.exists() {
                return Ok(Vec::new());
            }
            let body =
                std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
            Ok(body
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect())
        };
        let train_files = read_split("train")?;
        let val_files = read_split("val")?;
        let test_files = read_split("test")?;

        let mut names = Vec::new();
        let mut samples = Vec::new();
        let mut load_all = |files: &[String]| -> Result<Vec<usize>> {
            let mut indices = Vec::with_capacity(files.len());
            for file in files {
                let name = file.strip_suffix(".ply").unwrap_or(file).to_string();
                if let Some(at) = names.iter().position(|n| n == &name) {
                    indices.push(at);
                    continue;
                }
                let path = dir.join("samples").join(file);
                let mesh = Mesh::load(&path)?;
                if mesh.vertex_count() != template.vertex_count() || mesh.faces() != template.faces() {
                    return Err(Error::TopologyDrift { name });
                }
                names.push(name);
                samples.push(mesh.positions_flat());
                indices.push(names.len() - 1);
            }
            Ok(indices)
        };
        let train = load_all(&train_files)?;
        let val = load_all(&val_files)?;
        let test = load_all(&test_files)?;
        Ok(Dataset {
            template,
            names,
            samples,
            train,
            val,
            test,
        })
    }
}

/// Generates the bump-sphere dataset: `n` deformed icospheres, reproducible
/// bit-for-bit from the seed. Splits start empty; see
/// [`Dataset::with_splits`].
pub fn bump_sphere(n: usize, seed: u64, params: &BumpParams) -> Dataset {
    let template = shapes::icosphere(SPHERE_SUBDIV, SPHERE_RADIUS_MM);
    let m = template.vertex_count();
    let directions: Vec<Vec3> = (0..m as u32).map(|v| normalize(template.position(v))).collect();

    let mut names = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    for idx in 0..n {
        let mut h = fnv1a_new();
        h = fnv1a_bytes(h, b"bump_sphere");
        h = fnv1a_u64(h, seed);
        h = fnv1a_u64(h, idx as u64);
        let mut rng = ChaCha20Rng::seed_from_u64(h);

        let bumps = rng.gen_range(params.bumps_min..=params.bumps_max);
        let mut fields = Vec::with_capacity(bumps);
        for _ in 0..bumps {
            let center = random_unit(&mut rng);
            let amp_mag = sample_range(&mut rng, params.amp_min_mm, params.amp_max_mm);
            let amp = if rng.gen_bool(0.5) { amp_mag } else { -amp_mag };
            let width = sample_range(&mut rng, params.width_min_rad, params.width_max_rad);
            let elongation = sample_range(&mut rng, 1.0, params.elongation_max);
            let j = params.orientation_jitter_rad;
            let orientation = rng.gen_range(-j..=j);
            let swirl_mag = sample_range(&mut rng, params.amp_min_mm, params.amp_max_mm) * params.swirl;
            let swirl = if rng.gen_bool(0.5) { swirl_mag } else { -swirl_mag };
            fields.push((center, amp, width, elongation, orientation, swirl));
        }
        let stretch = [
            1.0 + rng.gen_range(-params.stretch..=params.stretch),
            1.0 + rng.gen_range(-params.stretch..=params.stretch),
            1.0 + rng.gen_range(-params.stretch..=params.stretch),
        ];

        let mut positions = Vec::with_capacity(m * 3);
        for dir in &directions {
            let mut radius = SPHERE_RADIUS_MM;
            let mut twist = [0.0; 3];
            for &(center, amp, width, elongation, orientation, swirl) in &fields {
                let profile = bump_profile(*dir, center, width, elongation, orientation);
                radius += amp * profile;
                // Rotation around the bump axis: cross(center, dir) tapers
                // with sin(angle), so the twist vanishes smoothly at the
                // bump centre and at its antipode.
                let t = cross(center, *dir);
                for a in 0..3 {
                    twist[a] += swirl * profile * t[a];
                }
            }
            for a in 0..3 {
                positions.push((dir[a] * radius + twist[a]) * stretch[a]);
            }
        }
        names.push(format!("sample_{idx:04}"));
        samples.push(positions);
    }

    Dataset {
        template,
        names,
        samples,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    }
}

/// Flattened `m x 3` buffer back to per-vertex positions.
pub fn unflatten(positions: &[f64]) -> Vec<Vec3> {
    positions.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

fn sample_range(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        // Keep the draw so degenerate ranges do not shift the stream.
        let _ = rng.gen::<f64>();
        lo
    }
}

fn random_unit(rng: &mut ChaCha20Rng) -> Vec3 {
    // Two Box-Muller pairs give four normals; three are used. A fixed draw
    // count keeps the stream layout independent of the values.
    loop {
        let (a, b) = box_muller(rng);
        let (c, _) = box_muller(rng);
        let v = [a, b, c];
        let n = dot(v, v).sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn box_muller(rng: &mut ChaCha20Rng) -> (f64, f64) {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * PI * u2;
    (r * t.cos(), r * t.sin())
}

/// Anisotropic Gaussian over geodesic offset from the bump centre: the
/// angular distance is split into tangent components, scaled by the
/// elongation along a rotated axis, and fed through exp(-q / 2 width^2).
fn bump_profile(dir: Vec3, center: Vec3, width: f64, elongation: f64, orientation: f64) -> f64 {
    let c = dot(dir, center).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta < 1e-12 {
        return 1.0;
    }
    // Tangent frame at the centre.
    let up = if center[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let t1 = normalize(cross(up, center));
    let t2 = cross(center, t1);
    let p = [
        dir[0] - c * center[0],
        dir[1] - c * center[1],
        dir[2] - c * center[2],
    ];
    let psi = dot(p, t2).atan2(dot(p, t1)) - orientation;
    let alpha = theta * psi.cos();
    let beta = theta * psi.sin();
    let q = (alpha * alpha * elongation + beta * beta / elongation) / (width * width);
    (-0.5 * q).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        let params = BumpParams::default();
        let a = bump_sphere(3, 42, &params);
        let b = bump_sphere(3, 42, &params);
        assert_eq!(a.samples, b.samples);
        let c = bump_sphere(3, 43, &params);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn empty_dataset_has_template_only() {
        let d = bump_sphere(0, 1, &BumpParams::default());
        assert_eq!(d.samples.len(), 0);
        assert_eq!(d.template.vertex_count(), 642);
    }

    #[test]
    fn zero_amplitude_and_stretch_reproduce_the_template() {
        let params = BumpParams {
            amp_min_mm: 0.0,
            amp_max_mm: 0.0,
            stretch: 0.0,
            ..BumpParams::default()
        };
        let d = bump_sphere(2, 9, &params);
        let base = d.template.positions_flat();
        for s in &d.samples {
            for (x, y) in s.iter().zip(&base) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deformations_stay_in_plausible_range() {
        let d = bump_sphere(5, 7, &BumpParams::default());
        let base = d.template.positions_flat();
        for s in &d.samples {
            let mut max_dev = 0.0f64;
            for v in 0..d.vertex_count() {
                let dx = s[3 * v] - base[3 * v];
                let dy = s[3 * v + 1] - base[3 * v + 1];
                let dz = s[3 * v + 2] - base[3 * v + 2];
                max_dev = max_dev.max((dx * dx + dy * dy + dz * dz).sqrt());
            }
            // Bounded by max bumps * max amplitude * (1 + swirl ratio),
            // inflated by the stretch of the radius.
            let p = BumpParams::default();
            let bump_term = p.bumps_max as f64 * p.amp_max_mm * (1.0 + p.swirl);
            let stretch_term = p.stretch * 3.0 * (SPHERE_RADIUS_MM + bump_term);
            assert!(max_dev > 0.1, "sample barely deformed");
            assert!(max_dev < bump_term + stretch_term);
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = bump_sphere(4, 5, &BumpParams::default()).with_splits(2, 1, 1).unwrap();
        d.save(dir.path(), PlyEncoding::BinaryLittleEndian).unwrap();
        let loaded = Dataset::load(dir.path()).unwrap();
        assert_eq!(loaded.names, d.names);
        assert_eq!(loaded.samples, d.samples);
        assert_eq!(loaded.train, d.train);
        assert_eq!(loaded.val, d.val);
        assert_eq!(loaded.test, d.test);
        assert_eq!(loaded.template.topology_hash(), d.template.topology_hash());
    }

    #[test]
    fn topology_drift_names_the_sample() {
        let dir = tempfile::tempdir().unwrap();
        let d = bump_sphere(2, 5, &BumpParams::default()).with_splits(2, 0, 0).unwrap();
        d.save(dir.path(), PlyEncoding::BinaryLittleEndian).unwrap();
        // Overwrite one sample with a mesh of different topology.
        let stray = shapes::icosphere(2, SPHERE_RADIUS_MM);
        stray
            .save_ply(
                dir.path().join("samples").join("sample_0001.ply"),
                PlyEncoding::BinaryLittleEndian,
                None,
            )
            .unwrap();
        let err = Dataset::load(dir.path()).unwrap_err();
        match err {
            Error::TopologyDrift { name } => assert_eq!(name, "sample_0001"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn splits_are_disjoint_and_ordered() {
        let d = bump_sphere(10, 3, &BumpParams::default()).with_splits(6, 2, 2).unwrap();
        assert_eq!(d.train, (0..6).collect::<Vec<_>>());
        assert_eq!(d.val, vec![6, 7]);
        assert_eq!(d.test, vec![8, 9]);
        let err = bump_sphere(3, 3, &BumpParams::default()).with_splits(2, 1, 1);
        assert!(err.is_err());
    }
}
