//! Convolution and dense layers expressed over the tape.
//!
//! Layers are stateless plans: they hold the mesh-derived structure (spiral
//! table, Laplacian) and the feature widths, and `forward` wires the ops onto
//! a tape given tensor ids for the input and parameters. Parameter values
//! live outside the tape so optimizers can update them between passes.

use std::rc::Rc;

use super::tensor::{Csr, GatherPlan, Tape, TensorId};
use crate::spiral::SpiralTable;

/// Convolution that concatenates each vertex's spiral neighbourhood and
/// applies a shared dense map.
///
/// Weight shape `(L * w_in, w_out)` (spiral slot-major rows), bias `(1, w_out)`.
/// PAD slots contribute zero.
pub struct SpiralConv {
    plan: Rc<GatherPlan>,
    pub w_in: usize,
    pub w_out: usize,
}

impl SpiralConv {
    pub fn new(table: &SpiralTable, w_in: usize, w_out: usize) -> SpiralConv {
        SpiralConv {
            plan: GatherPlan::from_table(table),
            w_in,
            w_out,
        }
    }

    pub fn from_plan(plan: Rc<GatherPlan>, w_in: usize, w_out: usize) -> SpiralConv {
        SpiralConv { plan, w_in, w_out }
    }

    pub fn weight_shape(&self) -> (usize, usize) {
        (self.plan.l * self.w_in, self.w_out)
    }

    pub fn bias_shape(&self) -> (usize, usize) {
        (1, self.w_out)
    }

    pub fn forward(&self, tape: &mut Tape, x: TensorId, weight: TensorId, bias: TensorId) -> TensorId {
        debug_assert_eq!(tape.shape(x).1, self.w_in);
        debug_assert_eq!(tape.shape(weight), self.weight_shape());
        let gathered = tape.gather_spiral(x, &self.plan);
        let mapped = tape.matmul(gathered, weight);
        tape.add_row_bias(mapped, bias)
    }
}

/// Spectral convolution: a degree-`order` Chebyshev polynomial in the
/// rescaled Laplacian, one coefficient block per power.
///
/// Weight shape `((order + 1) * w_in, w_out)` (power-major rows), bias
/// `(1, w_out)`.
pub struct ChebConv {
    lap: Rc<Csr>,
    pub order: usize,
    pub w_in: usize,
    pub w_out: usize,
}

impl ChebConv {
    pub fn new(lap: Rc<Csr>, order: usize, w_in: usize, w_out: usize) -> ChebConv {
        ChebConv {
            lap,
            order,
            w_in,
            w_out,
        }
    }

    pub fn weight_shape(&self) -> (usize, usize) {
        ((self.order + 1) * self.w_in, self.w_out)
    }

    pub fn bias_shape(&self) -> (usize, usize) {
        (1, self.w_out)
    }

    pub fn forward(&self, tape: &mut Tape, x: TensorId, weight: TensorId, bias: TensorId) -> TensorId {
        debug_assert_eq!(tape.shape(x).1, self.w_in);
        debug_assert_eq!(tape.shape(weight), self.weight_shape());
        // T_0 = x, T_1 = L x, T_k = 2 L T_{k-1} - T_{k-2}.
        let mut terms = Vec::with_capacity(self.order + 1);
        terms.push(x);
        if self.order >= 1 {
            terms.push(tape.laplacian_apply(x, &self.lap));
        }
        for k in 2..=self.order {
            let lt = tape.laplacian_apply(terms[k - 1], &self.lap);
            let two_lt = tape.scale(lt, 2.0);
            terms.push(tape.sub(two_lt, terms[k - 2]));
        }
        let stacked = tape.concat_cols(&terms);
        let mapped = tape.matmul(stacked, weight);
        tape.add_row_bias(mapped, bias)
    }
}

/// Fully connected layer. Weight shape `(in_dim, out_dim)`, bias `(1, out_dim)`.
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize) -> Linear {
        Linear { in_dim, out_dim }
    }

    pub fn weight_shape(&self) -> (usize, usize) {
        (self.in_dim, self.out_dim)
    }

    pub fn bias_shape(&self) -> (usize, usize) {
        (1, self.out_dim)
    }

    pub fn forward(&self, tape: &mut Tape, x: TensorId, weight: TensorId, bias: TensorId) -> TensorId {
        debug_assert_eq!(tape.shape(x).1, self.in_dim);
        let mapped = tape.matmul(x, weight);
        tape.add_row_bias(mapped, bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{max_relative_error, CheckInput};
    use crate::nn::laplacian::rescaled_laplacian;
    use crate::nn::tensor::matmul_nn;
    use crate::shapes;
    use crate::spiral::{build_spiral_table, SpiralConfig};
    use crate::topology::Topology;

    fn tetra_table(length: usize) -> SpiralTable {
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        build_spiral_table(&mesh, &topo, &SpiralConfig::fixed(1, length)).unwrap()
    }

    #[test]
    fn center_tap_weight_is_identity() {
        // Weight that copies slot 0 (the vertex itself) reproduces the input.
        let table = tetra_table(4);
        let conv = SpiralConv::new(&table, 2, 2);
        let (wr, wc) = conv.weight_shape();
        let mut w = vec![0.0; wr * wc];
        w[0] = 1.0; // slot 0, channel 0 -> out 0
        w[wc + 1] = 1.0; // slot 0, channel 1 -> out 1
        let mut tape = Tape::new();
        let x = tape.leaf(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 4, 2);
        let wid = tape.constant(w, wr, wc);
        let bid = tape.constant(vec![0.0; 2], 1, 2);
        let y = conv.forward(&mut tape, x, wid, bid);
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn all_ones_weight_sums_the_spiral() {
        // On the tetrahedron every length-4 spiral visits all four vertices,
        // so with features v+1 and an all-ones weight every output is 10.
        let table = tetra_table(4);
        let conv = SpiralConv::new(&table, 1, 1);
        let mut tape = Tape::new();
        let x = tape.leaf(vec![1.0, 2.0, 3.0, 4.0], 4, 1);
        let w = tape.constant(vec![1.0; 4], 4, 1);
        let b = tape.constant(vec![0.0], 1, 1);
        let y = conv.forward(&mut tape, x, w, b);
        assert_eq!(tape.value(y), &[10.0, 10.0, 10.0, 10.0]);
    }

    #[test]
    fn pad_slots_contribute_zero() {
        // Length 6 on the tetrahedron pads two slots; a weight reading only
        // those slots yields zero everywhere.
        let table = tetra_table(6);
        let conv = SpiralConv::new(&table, 1, 1);
        let mut tape = Tape::new();
        let x = tape.leaf(vec![5.0, -3.0, 2.0, 9.0], 4, 1);
        let mut w = vec![0.0; 6];
        w[4] = 7.0;
        w[5] = -2.0;
        let wid = tape.constant(w, 6, 1);
        let b = tape.constant(vec![0.0], 1, 1);
        let y = conv.forward(&mut tape, x, wid, b);
        assert_eq!(tape.value(y), &[0.0; 4]);
    }

    #[test]
    fn conv_is_linear_in_the_input() {
        let table = tetra_table(4);
        let conv = SpiralConv::new(&table, 2, 3);
        let (wr, wc) = conv.weight_shape();
        let w: Vec<f64> = (0..wr * wc).map(|i| (i as f64 * 0.37).sin()).collect();
        let xa: Vec<f64> = (0..8).map(|i| (i as f64 * 0.71).cos()).collect();
        let xb: Vec<f64> = (0..8).map(|i| (i as f64 * 1.13).sin()).collect();
        let run = |input: Vec<f64>| -> Vec<f64> {
            let mut tape = Tape::new();
            let x = tape.leaf(input, 4, 2);
            let wid = tape.constant(w.clone(), wr, wc);
            let b = tape.constant(vec![0.0; 3], 1, 3);
            let y = conv.forward(&mut tape, x, wid, b);
            tape.value(y).to_vec()
        };
        let combined: Vec<f64> = xa.iter().zip(&xb).map(|(&a, &b)| 2.0 * a - 0.5 * b).collect();
        let ya = run(xa);
        let yb = run(xb);
        let yc = run(combined);
        for i in 0..ya.len() {
            assert!((yc[i] - (2.0 * ya[i] - 0.5 * yb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn cheb_order_zero_identity_weight_is_identity() {
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let conv = ChebConv::new(lap, 0, 2, 2);
        let mut tape = Tape::new();
        let x = tape.leaf(vec![1.0, -2.0, 3.0, 0.5, 4.0, 1.5, -1.0, 2.5], 4, 2);
        let w = tape.constant(vec![1.0, 0.0, 0.0, 1.0], 2, 2);
        let b = tape.constant(vec![0.0; 2], 1, 2);
        let y = conv.forward(&mut tape, x, w, b);
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn cheb_first_order_matches_dense_oracle() {
        // Order 1 with theta_0 = 0, theta_1 = I reduces to L x; compare
        // against a dense multiply.
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let dense = lap.to_dense();
        let conv = ChebConv::new(Rc::clone(&lap), 1, 1, 1);
        let xs = vec![1.0, 2.0, -3.0, 0.25];
        let mut tape = Tape::new();
        let x = tape.leaf(xs.clone(), 4, 1);
        let w = tape.constant(vec![0.0, 1.0], 2, 1);
        let b = tape.constant(vec![0.0], 1, 1);
        let y = conv.forward(&mut tape, x, w, b);
        let mut expected = vec![0.0; 4];
        matmul_nn(&dense, &xs, 4, 4, 1, &mut expected);
        for (got, want) in tape.value(y).iter().zip(&expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn cheb_scalar_coefficients_commute_with_feature_maps() {
        // With theta_k = c_k I the layer is a polynomial in L acting on rows,
        // so it commutes with any right multiplication of the feature axis:
        // cheb(X) M == cheb(X M).
        let mesh = shapes::icosphere(0, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let n = topo.vertex_count();
        let wdim = 3;
        let order = 3;
        let coeffs = [0.3, -1.1, 0.7, 0.25];
        let mut weight = vec![0.0; (order + 1) * wdim * wdim];
        for (k, &c) in coeffs.iter().enumerate() {
            for d in 0..wdim {
                weight[(k * wdim + d) * wdim + d] = c;
            }
        }
        let conv = ChebConv::new(Rc::clone(&lap), order, wdim, wdim);
        let xs: Vec<f64> = (0..n * wdim).map(|i| (i as f64 * 0.29).sin()).collect();
        let mmat: Vec<f64> = (0..wdim * wdim).map(|i| (i as f64 * 0.83).cos()).collect();
        let cheb = |input: Vec<f64>| -> Vec<f64> {
            let mut tape = Tape::new();
            let x = tape.leaf(input, n, wdim);
            let w = tape.constant(weight.clone(), (order + 1) * wdim, wdim);
            let b = tape.constant(vec![0.0; wdim], 1, wdim);
            let y = conv.forward(&mut tape, x, w, b);
            tape.value(y).to_vec()
        };
        let mut xm = vec![0.0; n * wdim];
        matmul_nn(&xs, &mmat, n, wdim, wdim, &mut xm);
        let lhs_pre = cheb(xs);
        let mut lhs = vec![0.0; n * wdim];
        matmul_nn(&lhs_pre, &mmat, n, wdim, wdim, &mut lhs);
        let rhs = cheb(xm);
        for i in 0..lhs.len() {
            assert!((lhs[i] - rhs[i]).abs() < 1e-12, "entry {i}");
        }
    }

    #[test]
    fn spiral_chain_gradients_match_finite_differences() {
        let table = tetra_table(4);
        let conv = SpiralConv::new(&table, 2, 3);
        let (wr, wc) = conv.weight_shape();
        let inputs = vec![
            CheckInput::new((0..8).map(|i| (i as f64 * 0.7).sin()).collect(), 4, 2),
            CheckInput::new((0..wr * wc).map(|i| (i as f64 * 0.3).cos() * 0.5).collect(), wr, wc),
            CheckInput::new(vec![0.1, -0.2, 0.3], 1, 3),
            CheckInput::new((0..12).map(|i| (i as f64 * 1.7).sin() * 2.0).collect(), 4, 3),
        ];
        let err = max_relative_error(&inputs, |tape, ids| {
            let y = conv.forward(tape, ids[0], ids[1], ids[2]);
            let a = tape.elu(y);
            tape.mean_abs_diff(a, ids[3])
        });
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn cheb_chain_gradients_match_finite_differences() {
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let conv = ChebConv::new(lap, 2, 2, 2);
        let (wr, wc) = conv.weight_shape();
        let inputs = vec![
            CheckInput::new((0..8).map(|i| (i as f64 * 0.9).cos()).collect(), 4, 2),
            CheckInput::new((0..wr * wc).map(|i| (i as f64 * 0.41).sin() * 0.6).collect(), wr, wc),
            CheckInput::new(vec![-0.3, 0.2], 1, 2),
            CheckInput::new((0..8).map(|i| (i as f64 * 2.3).cos()).collect(), 4, 2),
        ];
        let err = max_relative_error(&inputs, |tape, ids| {
            let y = conv.forward(tape, ids[0], ids[1], ids[2]);
            let a = tape.elu(y);
            tape.mean_abs_diff(a, ids[3])
        });
        assert!(err < 1e-4, "relative error {err}");
    }
}
