//! PCA baseline: fit principal directions to bump-sphere shapes, watch the
//! reconstruction error fall as components are added, and reach numerical
//! zero at full rank.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --example pca_baseline
//! ```

use spiralmesh::dataset::{bump_sphere, BumpParams};
use spiralmesh::error::Result;
use spiralmesh::harness::evaluate::mean_vertex_distance;
use spiralmesh::models::pca::PcaModel;

fn main() -> Result<()> {
    let dataset = bump_sphere(24, 8, &BumpParams::default());
    let dim = dataset.vertex_count() * 3;
    let n = dataset.samples.len();
    let flat: Vec<f64> = dataset.samples.iter().flatten().copied().collect();

    let full = PcaModel::fit(&flat, n, dim, n - 1)?;
    println!(
        "fitted PCA on {n} samples of dimension {dim}; rank {}",
        full.rank()
    );

    let lead: Vec<f64> = full.eigenvalues().iter().take(5).copied().collect();
    println!("leading eigenvalues: {lead:.3?}");

    let probe = dataset.sample(0);
    println!("components  mean reconstruction error (mm)");
    for k in [1, 2, 4, 8, 16, full.rank()] {
        let coeffs = full.coefficients(probe);
        let truncated: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i < k { c } else { 0.0 })
            .collect();
        let rec = full.synthesize(&truncated);
        println!("{k:>10}  {:.6}", mean_vertex_distance(&rec, probe));
    }

    let rec = full.reconstruct(probe);
    let err = mean_vertex_distance(&rec, probe);
    assert!(err < 1e-8, "full-rank reconstruction should be exact");
    println!("full-rank reconstruction error {err:.2e} mm (numerically exact)");
    Ok(())
}
