//! Impulse-response probes: feed a per-vertex delta through a single conv
//! layer and measure where the output moves. The support of the response is
//! the layer's receptive field, which is what separates spiral kernels
//! (anisotropic, one weight per spiral slot) from Chebyshev kernels
//! (isotropic in each ring).

use crate::error::{Error, Result};
use crate::models::autoencoder::Model;
use crate::nn::Tape;

/// Per-vertex response magnitude of the encoder conv at `level` to a unit
/// impulse on channel 0 of `vertex`. The bias is cancelled by subtracting
/// the zero-input output, so a vertex responds only if the impulse reaches
/// it through the kernel.
pub fn impulse_response(model: &Model, level: usize, vertex: u32) -> Result<Vec<f64>> {
    let s = model.spec().steps();
    if level >= s {
        return Err(Error::Config(format!(
            "level {level} out of range; the model has {s} conv levels"
        )));
    }
    let m = model.level_size(level);
    if vertex as usize >= m {
        return Err(Error::VertexOutOfRange {
            index: vertex,
            vertex_count: m,
        });
    }
    let w_in = if level == 0 {
        model.spec().signal_dim
    } else {
        model.spec().encoder_widths[level - 1]
    };
    let (wi, bi) = model.encoder_conv_param_indices(level);

    let run = |input: Vec<f64>| -> Vec<f64> {
        let mut tape = Tape::new();
        let ids = model.push_params(&mut tape, false);
        let x = tape.constant(input, m, w_in);
        let out = model.conv_at(&mut tape, x, level, ids[wi], ids[bi]);
        tape.value(out).to_vec()
    };

    let zeros = run(vec![0.0; m * w_in]);
    let mut onehot = vec![0.0; m * w_in];
    onehot[vertex as usize * w_in] = 1.0;
    let hit = run(onehot);

    let w_out = hit.len() / m;
    let response = (0..m)
        .map(|v| {
            (0..w_out)
                .map(|c| {
                    let d = hit[v * w_out + c] - zeros[v * w_out + c];
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(response)
}

/// Vertices with a response above `tol` relative to the peak.
pub fn support(response: &[f64], tol: f64) -> Vec<usize> {
    let peak = response.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    response
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > tol * peak)
        .map(|(v, _)| v)
        .collect()
}
