//! Linear morphable-model baseline: PCA over flattened vertex positions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// PCA shape model: mean, orthonormal principal directions (rows), and the
/// covariance eigenvalues (descending). Coefficients are expressed against
/// `sqrt(d_i) v_i` so they are unit-variance over the training distribution.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<f64>, // k x dim, row-major, orthonormal rows
    eigenvalues: Vec<f64>,
    dim: usize,
}

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// (rank-deficient directions get a zero coefficient scale).
const RANK_TOL: f64 = 1e-12;

impl PcaModel {
    /// Fits on `n` row-major `dim`-vectors. Uses the Gram matrix when the
    /// sample count is the smaller side, the covariance otherwise.
    pub fn fit(data: &[f64], n: usize, dim: usize, k: usize) -> Result<PcaModel> {
        assert_eq!(data.len(), n * dim);
        let max = n.min(dim);
        if k > max {
            return Err(Error::RankTooLarge { k, max });
        }
        if n == 0 {
            return Err(Error::Config("PCA needs at least one sample".into()));
        }
        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered: Vec<f64> = data
            .chunks_exact(dim)
            .flat_map(|row| row.iter().zip(&mean).map(|(&x, &m)| x - m))
            .collect();
        let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };

        let (mut eigenvalues, mut components) = if n <= dim {
            // Gram route: eigen-decompose C C^T (n x n) and lift the
            // eigenvectors back through C^T.
            let c = DMatrix::from_row_slice(n, dim, &centered);
            let gram = &c * c.transpose();
            let eig = SymmetricEigen::new(gram);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let lam0 = eig.eigenvalues[order[0]].max(0.0);
            let mut vals = Vec::with_capacity(k);
            let mut comps = vec![0.0; k * dim];
            for (i, &oi) in order.iter().take(k).enumerate() {
                let lam = eig.eigenvalues[oi].max(0.0);
                let degenerate = lam <= RANK_TOL * lam0.max(1.0);
                vals.push(if degenerate { 0.0 } else { lam / denom });
                if !degenerate {
                    let u = eig.eigenvectors.column(oi);
                    let dir = c.transpose() * u;
                    let norm = dir.norm();
                    for (j, x) in dir.iter().enumerate() {
                        comps[i * dim + j] = x / norm;
                    }
                }
            }
            (vals, comps)
        } else {
            // Covariance route: dim x dim eigendecomposition gives an
            // orthonormal basis directly, including null directions.
            let c = DMatrix::from_row_slice(n, dim, &centered);
            let cov = c.transpose() * &c / denom;
            let eig = SymmetricEigen::new(cov);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let lam0 = eig.eigenvalues[order[0]].max(0.0);
            let mut vals = Vec::with_capacity(k);
            let mut comps = vec![0.0; k * dim];
            for (i, &oi) in order.iter().take(k).enumerate() {
                let lam = eig.eigenvalues[oi].max(0.0);
                let degenerate = lam <= RANK_TOL * lam0.max(1.0);
                vals.push(if degenerate { 0.0 } else { lam });
                for (j, x) in eig.eigenvectors.column(oi).iter().enumerate() {
                    comps[i * dim + j] = *x;
                }
            }
            (vals, comps)
        };

        // Rank-deficient rows from the Gram route are still zero; complete
        // them to an orthonormal set from canonical basis vectors so the
        // row-orthonormality invariant holds for any requested k.
        for i in 0..k {
            if components[i * dim..(i + 1) * dim].iter().all(|&x| x == 0.0) {
                eigenvalues[i] = 0.0;
                let mut filled = false;
                for e in 0..dim {
                    let mut cand = vec![0.0; dim];
                    cand[e] = 1.0;
                    for r in 0..k {
                        if r == i {
                            continue;
                        }
                        let row = &components[r * dim..(r + 1) * dim];
                        let dot: f64 = row.iter().zip(&cand).map(|(&a, &b)| a * b).sum();
                        for (cx, &rx) in cand.iter_mut().zip(row) {
                            *cx -= dot * rx;
                        }
                    }
                    let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        for (slot, x) in components[i * dim..(i + 1) * dim].iter_mut().zip(&cand) {
                            *slot = x / norm;
                        }
                        filled = true;
                        break;
                    }
                }
                if !filled {
                    return Err(Error::Numeric("orthonormal completion failed".into()));
                }
            }
        }

        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.dim..(i + 1) * self.dim]
    }

    /// Coefficients of the shape against the scaled directions
    /// `sqrt(d_i) v_i`; zero where the model has no variance.
    pub fn coefficients(&self, shape: &[f64]) -> Vec<f64> {
        assert_eq!(shape.len(), self.dim);
        (0..self.rank())
            .map(|i| {
                let d = self.eigenvalues[i];
                if d == 0.0 {
                    return 0.0;
                }
                let proj: f64 = self
                    .component(i)
                    .iter()
                    .zip(shape.iter().zip(&self.mean))
                    .map(|(&v, (&x, &m))| v * (x - m))
                    .sum();
                proj / d.sqrt()
            })
            .collect()
    }

    /// Synthesizes `mean + sum_i alpha_i sqrt(d_i) v_i`.
    pub fn synthesize(&self, alphas: &[f64]) -> Vec<f64> {
        assert_eq!(alphas.len(), self.rank());
        let mut out = self.mean.clone();
        for (i, &a) in alphas.iter().enumerate() {
            let scale = a * self.eigenvalues[i].sqrt();
            if scale == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(self.component(i)) {
                *o += scale * v;
            }
        }
        out
    }

    pub fn reconstruct(&self, shape: &[f64]) -> Vec<f64> {
        self.synthesize(&self.coefficients(shape))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rms(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(&x, &y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    /// One-sided Jacobi singular values: orthogonalize the columns of the
    /// transposed matrix by plane rotations; column norms converge to the
    /// singular values. Independent of the eigendecomposition under test.
    fn jacobi_singular_values(data: &[f64], n: usize, dim: usize) -> Vec<f64> {
        // Work on the dim x n layout so we rotate the smaller column count.
        let mut m = vec![0.0; dim * n];
        for i in 0..n {
            for j in 0..dim {
                m[j * n + i] = data[i * dim + j];
            }
        }
        let col = |m: &Vec<f64>, c: usize| -> Vec<f64> { (0..dim).map(|r| m[r * n + c]).collect() };
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let cp = col(&m, p);
                    let cq = col(&m, q);
                    let app: f64 = cp.iter().map(|x| x * x).sum();
                    let aqq: f64 = cq.iter().map(|x| x * x).sum();
                    let apq: f64 = cp.iter().zip(&cq).map(|(a, b)| a * b).sum();
                    off = off.max(apq.abs());
                    if apq.abs() <= 1e-15 * (app * aqq).sqrt().max(1e-300) {
                        continue;
                    }
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for r in 0..dim {
                        let vp = m[r * n + p];
                        let vq = m[r * n + q];
                        m[r * n + p] = c * vp - s * vq;
                        m[r * n + q] = s * vp + c * vq;
                    }
                }
            }
            if off < 1e-14 {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n)
            .map(|c| col(&m, c).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    fn random_data(rng: &mut ChaCha20Rng, n: usize, dim: usize) -> Vec<f64> {
        (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn planar_data_is_exact_at_rank_two() {
        // Samples on an affine 2-plane in 6-space.
        let base = [0.5, -1.0, 2.0, 0.0, 1.0, 3.0];
        let u = [1.0, 0.0, 1.0, 0.0, -1.0, 0.5];
        let v = [0.0, 2.0, -1.0, 1.0, 0.0, 0.25];
        let mut data = Vec::new();
        for i in 0..7 {
            let (a, b) = ((i as f64 * 0.9).sin() * 2.0, (i as f64 * 1.3).cos() * 3.0);
            for j in 0..6 {
                data.push(base[j] + a * u[j] + b * v[j]);
            }
        }
        let model = PcaModel::fit(&data, 7, 6, 2).unwrap();
        for row in data.chunks_exact(6) {
            let rec = model.reconstruct(row);
            assert!(rms(row, &rec) < 1e-10, "residual {}", rms(row, &rec));
        }
    }

    #[test]
    fn full_rank_reconstruction_is_exact() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (n, dim) = (6, 9);
        let data = random_data(&mut rng, n, dim);
        let model = PcaModel::fit(&data, n, dim, n - 1).unwrap();
        for row in data.chunks_exact(dim) {
            assert!(rms(row, &model.reconstruct(row)) < 1e-8);
        }
    }

    #[test]
    fn eigenvalues_match_jacobi_svd_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (n, dim) = (5, 9);
        let data = random_data(&mut rng, n, dim);
        let model = PcaModel::fit(&data, n, dim, n).unwrap();
        // Oracle works on the centered matrix.
        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered: Vec<f64> = data
            .chunks_exact(dim)
            .flat_map(|row| row.iter().zip(&mean).map(|(&x, &m)| x - m))
            .collect();
        let sv = jacobi_singular_values(&centered, n, dim);
        for i in 0..n {
            let expected = sv[i] * sv[i] / (n - 1) as f64;
            let got = model.eigenvalues()[i];
            let rel = (got - expected).abs() / expected.abs().max(1e-12);
            // The smallest value is numerically zero on centered data.
            if expected > 1e-10 {
                assert!(rel < 1e-9, "eigenvalue {i}: {got} vs {expected}");
            } else {
                assert!(got.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn covariance_route_matches_oracle_too() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let (n, dim) = (12, 4);
        let data = random_data(&mut rng, n, dim);
        let model = PcaModel::fit(&data, n, dim, 4).unwrap();
        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered: Vec<f64> = data
            .chunks_exact(dim)
            .flat_map(|row| row.iter().zip(&mean).map(|(&x, &m)| x - m))
            .collect();
        let sv = jacobi_singular_values(&centered, n, dim);
        for i in 0..4.min(n) {
            let expected = sv[i] * sv[i] / (n - 1) as f64;
            let got = model.eigenvalues()[i];
            assert!((got - expected).abs() / expected.max(1e-12) < 1e-9);
        }
    }

    #[test]
    fn reconstruction_error_non_increasing_in_k() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let (n, dim) = (8, 12);
        let data = random_data(&mut rng, n, dim);
        let mut prev = f64::INFINITY;
        for k in 1..n {
            let model = PcaModel::fit(&data, n, dim, k).unwrap();
            let err: f64 = data
                .chunks_exact(dim)
                .map(|row| rms(row, &model.reconstruct(row)))
                .sum::<f64>()
                / n as f64;
            assert!(
                err <= prev + 1e-12,
                "error rose from {prev} to {err} at k={k}"
            );
            prev = err;
        }
    }

    #[test]
    fn mean_reconstructs_to_itself_and_projection_is_idempotent() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (n, dim) = (6, 5);
        let data = random_data(&mut rng, n, dim);
        let model = PcaModel::fit(&data, n, dim, 3).unwrap();
        let mean_rec = model.reconstruct(model.mean());
        assert!(rms(model.mean(), &mean_rec) < 1e-12);
        let probe: Vec<f64> = (0..dim).map(|i| (i as f64 * 1.7).sin() * 4.0).collect();
        let once = model.reconstruct(&probe);
        let twice = model.reconstruct(&once);
        assert!(rms(&once, &twice) < 1e-12);
    }

    #[test]
    fn component_rows_are_orthonormal() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let (n, dim) = (5, 8);
        let data = random_data(&mut rng, n, dim);
        // k = n exceeds the centered rank by one, exercising completion.
        let model = PcaModel::fit(&data, n, dim, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = model
                    .component(i)
                    .iter()
                    .zip(model.component(j))
                    .map(|(&a, &b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9, "rows {i},{j}: {dot}");
            }
        }
    }

    #[test]
    fn oversized_rank_is_rejected() {
        let data = vec![0.0; 4 * 3];
        let err = PcaModel::fit(&data, 4, 3, 5).unwrap_err();
        match err {
            crate::error::Error::RankTooLarge { k, max } => {
                assert_eq!((k, max), (5, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
