//! Per-vertex, per-coordinate feature normalization.

use crate::error::{Error, Result};

/// Mean and standard deviation per vertex coordinate, estimated on the
/// training split only. The std is floored at `EPS` so constant coordinates
/// stay finite under division.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

pub const EPS: f64 = 1e-8;

impl NormStats {
    /// Estimates statistics from flattened `3m`-vectors (population std).
    pub fn fit(shapes: &[&[f64]]) -> Result<NormStats> {
        let n = shapes.len();
        if n == 0 {
            return Err(Error::Config("normalization needs at least one shape".into()));
        }
        let dim = shapes[0].len();
        let mut mean = vec![0.0; dim];
        for s in shapes {
            if s.len() != dim {
                return Err(Error::ShapeMismatch {
                    expected: format!("{dim} values"),
                    got: format!("{} values", s.len()),
                });
            }
            for (m, &x) in mean.iter_mut().zip(*s) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for s in shapes {
            for ((v, &x), &m) in var.iter_mut().zip(*s).zip(&mean) {
                let d = x - m;
                *v += d * d;
            }
        }
        let std = var
            .iter()
            .map(|&v| (v / n as f64).sqrt().max(EPS))
            .collect();
        Ok(NormStats { mean, std })
    }

    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> NormStats {
        assert_eq!(mean.len(), std.len());
        NormStats { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn normalize(&self, shape: &[f64]) -> Vec<f64> {
        assert_eq!(shape.len(), self.mean.len());
        shape
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }

    pub fn denormalize(&self, normalized: &[f64]) -> Vec<f64> {
        assert_eq!(normalized.len(), self.mean.len());
        normalized
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&x, &m), &s)| x * s + m)
            .collect()
    }
}
