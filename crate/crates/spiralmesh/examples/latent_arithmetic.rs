//! Latent-space arithmetic: interpolate between two shapes, extrapolate past
//! them, and complete an analogy. The vector identities hold for any model
//! weights, so a briefly trained model is enough to demonstrate them.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --release --example latent_arithmetic
//! ```

use spiralmesh::dataset::{bump_sphere, BumpParams};
use spiralmesh::error::Result;
use spiralmesh::harness::config::RunConfig;
use spiralmesh::harness::evaluate::mean_vertex_distance;
use spiralmesh::harness::latent::{analogy, decode_one, encode_one, extrapolate, interpolate};
use spiralmesh::harness::preprocess::ensure_caches;
use spiralmesh::harness::train::train;

fn main() -> Result<()> {
    let dataset = bump_sphere(40, 5, &BumpParams::default()).with_splits(36, 4, 0)?;
    let mut cfg = RunConfig::default();
    cfg.set("dataset", "in-memory")?;
    cfg.set("output", "in-memory")?;
    cfg.set("encoder_widths", "8,12,16")?;
    cfg.set("pooling", "4,4,4")?;
    cfg.set("latent", "8")?;
    cfg.set("batch", "8")?;
    cfg.set("epochs", "6")?;
    cfg.finalize()?;

    let dir = tempfile::tempdir().expect("tempdir");
    let bundle = ensure_caches(&dataset.template, dir.path(), &cfg)?;
    let outcome = train(&dataset, &bundle, &cfg)?;
    let (model, stats) = outcome
        .checkpoint
        .into_model(&bundle.hierarchy, &bundle.tables)?;

    let x1 = dataset.sample(0);
    let x2 = dataset.sample(1);

    // Walking the latent line: endpoints are the two reconstructions.
    let seq = interpolate(&model, &stats, x1, x2, 5);
    let r1 = decode_one(&model, &stats, &encode_one(&model, &stats, x1));
    let r2 = decode_one(&model, &stats, &encode_one(&model, &stats, x2));
    println!("interpolation with 5 steps:");
    for (k, shape) in seq.iter().enumerate() {
        println!(
            "  step {k}: {:.3} mm from rec(x1), {:.3} mm from rec(x2)",
            mean_vertex_distance(shape, &r1),
            mean_vertex_distance(shape, &r2)
        );
    }
    assert!(mean_vertex_distance(&seq[0], &r1) < 1e-9);
    assert!(mean_vertex_distance(&seq[4], &r2) < 1e-9);

    // Extrapolation continues the same line beyond the endpoints.
    let beyond = extrapolate(&model, &stats, x1, x2, &[1.5, -0.5]);
    println!(
        "extrapolation at a=1.5 and a=-0.5 moves {:.3} / {:.3} mm past the endpoints",
        mean_vertex_distance(&beyond[0], &r1),
        mean_vertex_distance(&beyond[1], &r2)
    );

    // Analogy with A = C collapses to the reconstruction of B.
    let d = analogy(&model, &stats, x1, x2, x1);
    println!(
        "analogy x1:x2 :: x1:? lands {:.1e} mm from rec(x2) (exact cancellation)",
        mean_vertex_distance(&d, &r2)
    );
    Ok(())
}
