//! Central finite-difference verification of reverse-mode gradients.

use super::tensor::{Tape, TensorId};

/// Step used for central differences. At double precision this balances
/// truncation error (O(h^2)) against round-off.
pub const STEP: f64 = 1e-5;

/// A leaf to perturb: initial values plus shape.
#[derive(Clone)]
pub struct CheckInput {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl CheckInput {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> CheckInput {
        assert_eq!(data.len(), rows * cols);
        CheckInput { data, rows, cols }
    }
}

/// Compares the reverse-mode gradient of `build` against central finite
/// differences for every entry of every input, returning the maximum
/// relative error `|a - n| / max(|a|, |n|, 1)`.
///
/// `build` receives a fresh tape and one leaf per input and must return a
/// scalar loss.
pub fn max_relative_error<F>(inputs: &[CheckInput], build: F) -> f64
where
    F: Fn(&mut Tape, &[TensorId]) -> TensorId,
{
    let eval = |values: &[Vec<f64>]| -> f64 {
        let mut tape = Tape::new();
        let ids: Vec<TensorId> = values
            .iter()
            .zip(inputs)
            .map(|(v, spec)| tape.leaf(v.clone(), spec.rows, spec.cols))
            .collect();
        let loss = build(&mut tape, &ids);
        tape.scalar(loss)
    };

    // Analytic gradients from one reverse pass.
    let mut tape = Tape::new();
    let ids: Vec<TensorId> = inputs
        .iter()
        .map(|spec| tape.leaf(spec.data.clone(), spec.rows, spec.cols))
        .collect();
    let loss = build(&mut tape, &ids);
    let grads = tape.backward(loss);
    let analytic: Vec<Vec<f64>> = ids.iter().map(|&id| grads.get(&tape, id)).collect();

    let mut values: Vec<Vec<f64>> = inputs.iter().map(|spec| spec.data.clone()).collect();
    let mut worst = 0.0f64;
    for (pi, input) in inputs.iter().enumerate() {
        for ei in 0..input.data.len() {
            let orig = values[pi][ei];
            values[pi][ei] = orig + STEP;
            let up = eval(&values);
            values[pi][ei] = orig - STEP;
            let down = eval(&values);
            values[pi][ei] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let a = analytic[pi][ei];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if rel > worst {
                worst = rel;
            }
        }
    }
    worst
}
