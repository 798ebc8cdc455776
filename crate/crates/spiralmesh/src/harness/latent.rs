//! Latent-space arithmetic: interpolation along the line between two codes,
//! extrapolation beyond it, and analogies by vector offset.

use crate::models::autoencoder::Model;
use crate::models::normalize::NormStats;

/// Normalizes and encodes one flattened shape.
pub fn encode_one(model: &Model, stats: &NormStats, x: &[f64]) -> Vec<f64> {
    model.encode(&stats.normalize(x), 1)
}

/// Decodes one latent code and denormalizes the result.
pub fn decode_one(model: &Model, stats: &NormStats, z: &[f64]) -> Vec<f64> {
    stats.denormalize(&model.decode(z, 1))
}

fn blend(z1: &[f64], z2: &[f64], a: f64) -> Vec<f64> {
    z1.iter().zip(z2).map(|(p, q)| a * p + (1.0 - a) * q).collect()
}

/// Decodes `a*e(x1) + (1-a)*e(x2)` for `steps` uniform values of `a` from 1
/// down to 0, so the endpoints are the reconstructions of `x1` and `x2`.
pub fn interpolate(
    model: &Model,
    stats: &NormStats,
    x1: &[f64],
    x2: &[f64],
    steps: usize,
) -> Vec<Vec<f64>> {
    let weights: Vec<f64> = if steps <= 1 {
        vec![1.0]
    } else {
        (0..steps).map(|k| 1.0 - k as f64 / (steps - 1) as f64).collect()
    };
    extrapolate(model, stats, x1, x2, &weights)
}

/// Decodes `a*e(x1) + (1-a)*e(x2)` at arbitrary `a` values (outside [0, 1]
/// included).
pub fn extrapolate(
    model: &Model,
    stats: &NormStats,
    x1: &[f64],
    x2: &[f64],
    a_values: &[f64],
) -> Vec<Vec<f64>> {
    let z1 = encode_one(model, stats, x1);
    let z2 = encode_one(model, stats, x2);
    a_values
        .iter()
        .map(|&a| decode_one(model, stats, &blend(&z1, &z2, a)))
        .collect()
}

/// Completes the analogy A:B :: C:D by decoding `e(B) - e(A) + e(C)`.
pub fn analogy(model: &Model, stats: &NormStats, a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    let za = encode_one(model, stats, a);
    let zb = encode_one(model, stats, b);
    let zc = encode_one(model, stats, c);
    let zd: Vec<f64> = zb
        .iter()
        .zip(&za)
        .zip(&zc)
        .map(|((b, a), c)| b - a + c)
        .collect();
    decode_one(model, stats, &zd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bump_sphere, BumpParams, Dataset};
    use crate::harness::config::RunConfig;
    use crate::harness::preprocess::ensure_caches;

    fn setup() -> (Dataset, Model, NormStats) {
        let dataset = bump_sphere(6, 11, &BumpParams::default())
            .with_splits(6, 0, 0)
            .unwrap();
        let mut cfg = RunConfig::default();
        cfg.set("dataset", "mem").unwrap();
        cfg.set("output", "mem").unwrap();
        cfg.set("encoder_widths", "4,8").unwrap();
        cfg.set("pooling", "4,4").unwrap();
        cfg.set("latent", "4").unwrap();
        cfg.finalize().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let bundle = ensure_caches(&dataset.template, dir.path(), &cfg).unwrap();
        let mut model = bundle.build_model(&cfg).unwrap();
        model.init_params(5);
        let refs: Vec<&[f64]> = dataset.train.iter().map(|&i| dataset.sample(i)).collect();
        let stats = crate::models::normalize::NormStats::fit(&refs).unwrap();
        (dataset, model, stats)
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn interpolation_endpoints_are_reconstructions() {
        let (dataset, model, stats) = setup();
        let x1 = dataset.sample(0);
        let x2 = dataset.sample(1);
        let seq = interpolate(&model, &stats, x1, x2, 5);
        assert_eq!(seq.len(), 5);
        let r1 = decode_one(&model, &stats, &encode_one(&model, &stats, x1));
        let r2 = decode_one(&model, &stats, &encode_one(&model, &stats, x2));
        assert!(close(&seq[0], &r1));
        assert!(close(&seq[4], &r2));
    }

    #[test]
    fn identical_inputs_give_constant_sequence() {
        let (dataset, model, stats) = setup();
        let x = dataset.sample(2);
        let seq = interpolate(&model, &stats, x, x, 4);
        for s in &seq[1..] {
            assert!(close(s, &seq[0]));
        }
    }

    #[test]
    fn extrapolation_matches_arithmetic_identity() {
        // a = -1 decodes 2*z2 - z1.
        let (dataset, model, stats) = setup();
        let x1 = dataset.sample(0);
        let x2 = dataset.sample(3);
        let out = extrapolate(&model, &stats, x1, x2, &[-1.0]);
        let z1 = encode_one(&model, &stats, x1);
        let z2 = encode_one(&model, &stats, x2);
        let direct: Vec<f64> = z2.iter().zip(&z1).map(|(b, a)| 2.0 * b - a).collect();
        assert!(close(&out[0], &decode_one(&model, &stats, &direct)));
    }

    #[test]
    fn analogy_cancellations() {
        let (dataset, model, stats) = setup();
        let a = dataset.sample(0);
        let b = dataset.sample(1);
        let rec_b = decode_one(&model, &stats, &encode_one(&model, &stats, b));
        // A = C collapses to the reconstruction of B.
        assert!(close(&analogy(&model, &stats, a, b, a), &rec_b));
        // A = B collapses to the reconstruction of C.
        let rec_a = decode_one(&model, &stats, &encode_one(&model, &stats, a));
        assert!(close(&analogy(&model, &stats, b, b, a), &rec_a));
    }
}
