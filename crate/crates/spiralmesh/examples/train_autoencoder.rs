//! End-to-end training on a small synthetic dataset: preprocess caches,
//! train a spiral autoencoder for a few epochs, checkpoint it, and evaluate
//! generalisation on the held-out split.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --release --example train_autoencoder
//! ```

use spiralmesh::dataset::{bump_sphere, BumpParams};
use spiralmesh::error::Result;
use spiralmesh::harness::config::RunConfig;
use spiralmesh::harness::evaluate::evaluate;
use spiralmesh::harness::preprocess::ensure_caches;
use spiralmesh::harness::train::train_with;
use spiralmesh::models::checkpoint::Checkpoint;

fn main() -> Result<()> {
    let dataset = bump_sphere(60, 3, &BumpParams::default()).with_splits(48, 6, 6)?;

    let mut cfg = RunConfig::default();
    cfg.set("dataset", "in-memory")?;
    cfg.set("output", "in-memory")?;
    cfg.set("encoder_widths", "8,12,16")?;
    cfg.set("pooling", "4,4,4")?;
    cfg.set("latent", "16")?;
    cfg.set("batch", "8")?;
    cfg.set("epochs", "12")?;
    cfg.finalize()?;

    let dir = tempfile::tempdir().expect("tempdir");
    let bundle = ensure_caches(&dataset.template, dir.path(), &cfg)?;
    println!(
        "caches ready (checksum {:016x}); hierarchy {:?}",
        bundle.checksum,
        (0..=cfg.pooling.len())
            .map(|i| bundle.hierarchy.level_mesh(i).vertex_count())
            .collect::<Vec<_>>()
    );

    let outcome = train_with(&dataset, &bundle, &cfg, |row| {
        println!(
            "epoch {:>2}  lr {:.5}  train {:.4} ({:.2} mm)  val {:.4} ({:.2} mm)",
            row.epoch, row.lr, row.train_loss, row.train_mm, row.val_loss, row.val_mm
        );
    })?;
    println!(
        "best validation error {:.3} mm at epoch {}",
        outcome.best_val_mm, outcome.best_epoch
    );

    // The checkpoint restores to an identical model.
    let path = dir.path().join("checkpoint.bin");
    outcome.checkpoint.save(&path)?;
    let (model, stats) = Checkpoint::load(&path)?.into_model(&bundle.hierarchy, &bundle.tables)?;
    let eval = evaluate(&model, &stats, &dataset, "test", cfg.batch)?;
    println!("test error from the reloaded checkpoint: {:.3} mm", eval.mean_mm);
    Ok(())
}
