//! Generalisation evaluation: normalize → encode → decode → denormalize,
//! then the mean per-vertex Euclidean distance in dataset units (mm for the
//! synthetic spheres), plus per-vertex error fields and colour heatmaps.

use std::path::Path;

use crate::dataset::{unflatten, Dataset};
use crate::error::{Error, Result};
use crate::mesh::PlyEncoding;
use crate::models::autoencoder::Model;
use crate::models::normalize::NormStats;

/// Mean over vertices of the Euclidean distance between two flattened
/// (x, y, z) position arrays.
pub fn mean_vertex_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len() % 3, 0);
    let m = a.len() / 3;
    let mut sum = 0.0;
    for v in 0..m {
        let dx = a[3 * v] - b[3 * v];
        let dy = a[3 * v + 1] - b[3 * v + 1];
        let dz = a[3 * v + 2] - b[3 * v + 2];
        sum += (dx * dx + dy * dy + dz * dz).sqrt();
    }
    sum / m as f64
}

pub struct Evaluation {
    /// Mean over vertices, then over samples.
    pub mean_mm: f64,
    pub per_sample_mm: Vec<f64>,
    /// Mean error at each vertex across the split, for heatmaps.
    pub per_vertex_mm: Vec<f64>,
    /// Denormalized reconstructions, one per split sample.
    pub reconstructions: Vec<Vec<f64>>,
}

/// Reconstructs every sample of `split` through the model and reports the
/// distance statistics.
pub fn evaluate(
    model: &Model,
    stats: &NormStats,
    dataset: &Dataset,
    split: &str,
    batch: usize,
) -> Result<Evaluation> {
    let indices = dataset.split(split)?;
    if indices.is_empty() {
        return Err(Error::EmptySplit(format!("split '{split}' is empty")));
    }
    let m = model.vertex_count();
    let mut per_sample_mm = Vec::with_capacity(indices.len());
    let mut per_vertex_mm = vec![0.0; m];
    let mut reconstructions = Vec::with_capacity(indices.len());

    for chunk in indices.chunks(batch.max(1)) {
        let b = chunk.len();
        let mut x = Vec::with_capacity(b * m * 3);
        for &i in chunk {
            x.extend_from_slice(&stats.normalize(dataset.sample(i)));
        }
        let out = model.reconstruct(&x, b);
        for (k, &i) in chunk.iter().enumerate() {
            let rec = stats.denormalize(&out[k * m * 3..(k + 1) * m * 3]);
            let target = dataset.sample(i);
            per_sample_mm.push(mean_vertex_distance(&rec, target));
            for v in 0..m {
                let dx = rec[3 * v] - target[3 * v];
                let dy = rec[3 * v + 1] - target[3 * v + 1];
                let dz = rec[3 * v + 2] - target[3 * v + 2];
                per_vertex_mm[v] += (dx * dx + dy * dy + dz * dz).sqrt();
            }
            reconstructions.push(rec);
        }
    }
    for e in &mut per_vertex_mm {
        *e /= indices.len() as f64;
    }
    let mean_mm = per_sample_mm.iter().sum::<f64>() / per_sample_mm.len() as f64;
    Ok(Evaluation {
        mean_mm,
        per_sample_mm,
        per_vertex_mm,
        reconstructions,
    })
}

/// Nearest-rank percentile (q in [0, 1]) of an unsorted slice.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Linear blue→red ramp over [0, 99th percentile of the field].
pub fn heatmap_colors(errors: &[f64]) -> Vec<[u8; 3]> {
    let p99 = percentile(errors, 0.99);
    let scale = if p99 > 0.0 { p99 } else { 1.0 };
    errors
        .iter()
        .map(|&e| {
            let t = (e / scale).clamp(0.0, 1.0);
            [(t * 255.0).round() as u8, 0, ((1.0 - t) * 255.0).round() as u8]
        })
        .collect()
}

/// Writes the template mesh with per-vertex heatmap colours.
pub fn write_heatmap(dataset: &Dataset, errors: &[f64], path: &Path) -> Result<()> {
    let colors = heatmap_colors(errors);
    dataset
        .template
        .save_ply(path, PlyEncoding::BinaryLittleEndian, Some(&colors))
}

/// Per-vertex error field as CSV (`vertex,error`).
pub fn error_field_csv(per_vertex: &[f64]) -> String {
    let mut out = String::from("vertex,error_mm\n");
    for (v, e) in per_vertex.iter().enumerate() {
        out.push_str(&format!("{v},{e}\n"));
    }
    out
}

/// Exports each reconstruction as a binary PLY named after its sample, so the
/// reported metric can be recomputed from the files alone.
pub fn export_reconstructions(
    dataset: &Dataset,
    split: &str,
    recs: &[Vec<f64>],
    dir: &Path,
) -> Result<()> {
    let indices = dataset.split(split)?;
    assert_eq!(indices.len(), recs.len());
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for (&i, rec) in indices.iter().zip(recs) {
        let mesh = dataset
            .template
            .with_positions(&dataset.names[i], unflatten(rec))?;
        mesh.save_ply(
            dir.join(format!("{}.ply", dataset.names[i])),
            PlyEncoding::BinaryLittleEndian,
            None,
        )?;
    }
    Ok(())
}
