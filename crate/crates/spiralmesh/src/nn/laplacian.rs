//! Rescaled graph Laplacian for spectral convolutions.

use std::rc::Rc;

use super::tensor::Csr;
use crate::topology::Topology;

/// Builds the rescaled symmetric Laplacian used by the Chebyshev recursion.
///
/// With `L_sym = I - D^{-1/2} A D^{-1/2}` (spectrum in [0, 2]) and the
/// spectral bound fixed at 2, the rescaled operator is
/// `L_sym - I = -D^{-1/2} A D^{-1/2}`: zero diagonal and
/// `-1 / sqrt(deg(x) deg(y))` on edges, with spectrum in [-1, 1].
pub fn rescaled_laplacian(topo: &Topology) -> Rc<Csr> {
    let n = topo.vertex_count();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for v in 0..n as u32 {
        let dv = topo.neighbors(v).len() as f64;
        for &u in topo.neighbors(v) {
            let du = topo.neighbors(u).len() as f64;
            col_idx.push(u);
            values.push(-1.0 / (dv * du).sqrt());
        }
        row_ptr.push(col_idx.len());
    }
    Rc::new(Csr {
        n,
        row_ptr,
        col_idx,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::topology::Topology;

    #[test]
    fn regular_graph_rows_sum_to_minus_one() {
        // Tetrahedron: every vertex has degree 3, so each row holds three
        // entries of -1/3.
        let mesh = shapes::tetrahedron();
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let dense = lap.to_dense();
        for i in 0..4 {
            assert_eq!(dense[i * 4 + i], 0.0);
            let sum: f64 = dense[i * 4..(i + 1) * 4].iter().sum();
            assert!((sum + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn entries_match_degree_formula() {
        let mesh = shapes::planar_grid(3, 3);
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let dense = lap.to_dense();
        let n = topo.vertex_count();
        for x in 0..n as u32 {
            for y in 0..n as u32 {
                let expected = if topo.neighbors(x).contains(&y) {
                    let dx = topo.neighbors(x).len() as f64;
                    let dy = topo.neighbors(y).len() as f64;
                    -1.0 / (dx * dy).sqrt()
                } else {
                    0.0
                };
                let got = dense[x as usize * n + y as usize];
                assert!(
                    (got - expected).abs() < 1e-15,
                    "entry ({x},{y}): {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let dense = lap.to_dense();
        let n = lap.n;
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dense[i * n + j], dense[j * n + i]);
            }
        }
    }

    #[test]
    fn spectrum_bounded_by_one() {
        // Power iteration estimates the largest |eigenvalue|; the rescaled
        // operator must stay within [-1, 1].
        let mesh = shapes::icosphere(1, 1.0);
        let topo = Topology::build(&mesh).unwrap();
        let lap = rescaled_laplacian(&topo);
        let n = lap.n;
        let dense = lap.to_dense();
        let mut v: Vec<f64> = (0..n).map(|i| ((i * 2654435761) % 97) as f64 / 97.0 - 0.5).collect();
        for _ in 0..200 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += dense[i * n + j] * v[j];
                }
            }
            let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut next {
                *x /= norm;
            }
            v = next;
        }
        let mut lv = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                lv[i] += dense[i * n + j] * v[j];
            }
        }
        let rayleigh: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        assert!(rayleigh.abs() <= 1.0 + 1e-9, "spectral radius {rayleigh}");
    }
}
