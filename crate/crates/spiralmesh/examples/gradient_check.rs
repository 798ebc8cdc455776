//! Gradient checking: compare reverse-mode gradients of a spiral-conv chain
//! and a Chebyshev-conv chain against central finite differences.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --example gradient_check
//! ```

use spiralmesh::error::Result;
use spiralmesh::nn::{max_relative_error, rescaled_laplacian, CheckInput, Tape};
use spiralmesh::shapes::icosphere;
use spiralmesh::spiral::{build_spiral_table, default_length, SpiralConfig};
use spiralmesh::topology::Topology;

fn main() -> Result<()> {
    let mesh = icosphere(1, 1.0);
    let topo = Topology::build(&mesh)?;
    let m = mesh.vertex_count();
    let length = default_length(&topo, 1);
    let table = build_spiral_table(&mesh, &topo, &SpiralConfig::fixed(1, length))?;
    let lap = rescaled_laplacian(&topo);

    let w_in = 2;
    let w_out = 3;
    let seed_data = |n: usize, s: f64| (0..n).map(|i| ((i as f64) * s).sin()).collect::<Vec<_>>();

    // Spiral conv -> ELU -> L1 against a fixed target.
    let inputs = vec![
        CheckInput::new(seed_data(m * w_in, 0.7), m, w_in),
        CheckInput::new(seed_data(length * w_in * w_out, 0.3), length * w_in, w_out),
        CheckInput::new(seed_data(w_out, 1.1), 1, w_out),
    ];
    let plan = spiralmesh::nn::GatherPlan::from_table(&table);
    let target = seed_data(m * w_out, 0.9);
    let err = max_relative_error(&inputs, |tape: &mut Tape, ids| {
        let gathered = tape.gather_spiral(ids[0], &plan);
        let mapped = tape.matmul(gathered, ids[1]);
        let biased = tape.add_row_bias(mapped, ids[2]);
        let act = tape.elu(biased);
        let t = tape.constant(target.clone(), m, w_out);
        tape.mean_abs_diff(act, t)
    });
    println!("spiral conv chain: max relative gradient error {err:.3e}");
    assert!(err < 1e-4);

    // Chebyshev conv (degree 2) -> ELU -> L1.
    let order = 2;
    let inputs = vec![
        CheckInput::new(seed_data(m * w_in, 0.5), m, w_in),
        CheckInput::new(seed_data((order + 1) * w_in * w_out, 0.4), (order + 1) * w_in, w_out),
        CheckInput::new(seed_data(w_out, 0.8), 1, w_out),
    ];
    let err = max_relative_error(&inputs, |tape: &mut Tape, ids| {
        let t0 = ids[0];
        let t1 = tape.laplacian_apply(t0, &lap);
        let lt1 = tape.laplacian_apply(t1, &lap);
        let two_lt1 = tape.scale(lt1, 2.0);
        let t2 = tape.sub(two_lt1, t0);
        let stacked = tape.concat_cols(&[t0, t1, t2]);
        let mapped = tape.matmul(stacked, ids[1]);
        let biased = tape.add_row_bias(mapped, ids[2]);
        let act = tape.elu(biased);
        let t = tape.constant(target.clone(), m, w_out);
        tape.mean_abs_diff(act, t)
    });
    println!("chebyshev conv chain: max relative gradient error {err:.3e}");
    assert!(err < 1e-4);

    println!("both chains agree with central finite differences");
    Ok(())
}
