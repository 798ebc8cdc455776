//! Training loop: Adam on the L1 reconstruction loss in normalized
//! coordinates, per-epoch learning-rate decay, best-on-validation
//! checkpointing. Fully seeded: identical inputs give identical logs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::evaluate::mean_vertex_distance;
use crate::harness::preprocess::CacheBundle;
use crate::mesh::{fnv1a_bytes, fnv1a_new};
use crate::models::autoencoder::{stack_gather_plans, Model};
use crate::models::checkpoint::Checkpoint;
use crate::models::normalize::NormStats;
use crate::nn::{Adam, GatherPlan, Tape};
use crate::spiral::{build_spiral_table_salted, OrderingMode, SpiralConfig, SpiralTable};
use crate::topology::Topology;

use std::rc::Rc;

#[derive(Debug, Clone, Copy)]
pub struct EpochRow {
    pub epoch: usize,
    /// Learning rate used during this epoch.
    pub lr: f64,
    /// Mean L1 loss over training samples, in normalized coordinates.
    pub train_loss: f64,
    pub val_loss: f64,
    /// Denormalized mean per-vertex error (dataset units) on train batches,
    /// measured on the forward pass before each update.
    pub train_mm: f64,
    pub val_mm: f64,
}

pub struct TrainOutcome {
    pub rows: Vec<EpochRow>,
    pub best_epoch: usize,
    pub best_val_mm: f64,
    /// Best-on-validation parameters plus normalization stats.
    pub checkpoint: Checkpoint,
}

impl TrainOutcome {
    /// Per-epoch metrics as CSV; floats printed in shortest round-trip form
    /// so identical runs produce identical bytes.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,val_loss,train_mm,val_mm\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.epoch, r.lr, r.train_loss, r.val_loss, r.train_mm, r.val_mm
            ));
        }
        out
    }
}

fn shuffle_seed(seed: u64, epoch: usize) -> u64 {
    let mut h = fnv1a_new();
    h = fnv1a_bytes(h, b"epoch_shuffle");
    h = fnv1a_bytes(h, &seed.to_le_bytes());
    fnv1a_bytes(h, &(epoch as u64).to_le_bytes())
}

/// Per-level meshes/topologies needed to rebuild spiral tables under the
/// random ordering modes.
struct OrderingContext<'a> {
    bundle: &'a CacheBundle,
    topologies: Vec<Topology>,
    mode: OrderingMode,
    seed: u64,
}

impl<'a> OrderingContext<'a> {
    fn new(bundle: &'a CacheBundle, cfg: &RunConfig) -> Result<Option<OrderingContext<'a>>> {
        if cfg.ordering == OrderingMode::Fixed {
            return Ok(None);
        }
        let mut topologies = Vec::with_capacity(bundle.tables.len());
        for level in 0..bundle.tables.len() {
            topologies.push(Topology::build(bundle.hierarchy.level_mesh(level))?);
        }
        Ok(Some(OrderingContext {
            bundle,
            topologies,
            mode: cfg.ordering,
            seed: cfg.seed,
        }))
    }

    fn level_config(&self, level: usize) -> SpiralConfig {
        SpiralConfig {
            ordering_mode: self.mode,
            seed: self.seed,
            ..self.bundle.tables[level].config
        }
    }

    /// Gather plans for one batch: per-sample rotated tables stacked into a
    /// single plan per level. `chunk` holds global sample indices.
    fn batch_plans(&self, chunk: &[usize], epoch: usize) -> Result<Vec<Rc<GatherPlan>>> {
        let mut plans = Vec::with_capacity(self.topologies.len());
        for level in 0..self.topologies.len() {
            let mesh = self.bundle.hierarchy.level_mesh(level);
            let config = self.level_config(level);
            let tables: Vec<SpiralTable> = match self.mode {
                OrderingMode::Fixed => unreachable!("fixed mode uses the cached plans"),
                OrderingMode::RandEpoch => {
                    // Shared across the batch: one table, repeated.
                    let t = build_spiral_table_salted(
                        mesh,
                        &self.topologies[level],
                        &config,
                        0,
                        epoch as u64,
                    )?;
                    vec![t; chunk.len()]
                }
                OrderingMode::RandMesh | OrderingMode::RandMeshAndEpoch => chunk
                    .iter()
                    .map(|&i| {
                        build_spiral_table_salted(
                            mesh,
                            &self.topologies[level],
                            &config,
                            i as u64,
                            epoch as u64,
                        )
                    })
                    .collect::<Result<_>>()?,
            };
            let refs: Vec<&SpiralTable> = tables.iter().collect();
            plans.push(stack_gather_plans(&refs));
        }
        Ok(plans)
    }
}

/// Validation pass with the fixed (cached) orderings: mean L1 loss in
/// normalized coordinates and denormalized mean per-vertex error.
pub fn split_metrics(
    model: &Model,
    stats: &NormStats,
    dataset: &Dataset,
    indices: &[usize],
    batch: usize,
) -> (f64, f64) {
    let m = model.vertex_count();
    let mut loss_sum = 0.0;
    let mut mm_sum = 0.0;
    for chunk in indices.chunks(batch) {
        let b = chunk.len();
        let mut x = Vec::with_capacity(b * m * 3);
        for &i in chunk {
            x.extend_from_slice(&stats.normalize(dataset.sample(i)));
        }
        let out = model.reconstruct(&x, b);
        for (k, &i) in chunk.iter().enumerate() {
            let norm = &out[k * m * 3..(k + 1) * m * 3];
            let target = &x[k * m * 3..(k + 1) * m * 3];
            loss_sum += norm
                .iter()
                .zip(target)
                .map(|(a, t)| (a - t).abs())
                .sum::<f64>()
                / (m * 3) as f64;
            let rec = stats.denormalize(norm);
            mm_sum += mean_vertex_distance(&rec, dataset.sample(i));
        }
    }
    let n = indices.len() as f64;
    (loss_sum / n, mm_sum / n)
}

/// Runs the full training loop. The validation split falls back to the
/// training split when empty so best-checkpoint selection always has data.
pub fn train(dataset: &Dataset, bundle: &CacheBundle, cfg: &RunConfig) -> Result<TrainOutcome> {
    train_with(dataset, bundle, cfg, |_| {})
}

/// [`train`] with a per-epoch observer (progress reporting).
pub fn train_with(
    dataset: &Dataset,
    bundle: &CacheBundle,
    cfg: &RunConfig,
    mut on_epoch: impl FnMut(&EpochRow),
) -> Result<TrainOutcome> {
    if dataset.train.is_empty() {
        return Err(Error::EmptySplit("training split is empty".into()));
    }
    let val: &[usize] = if dataset.val.is_empty() {
        &dataset.train
    } else {
        &dataset.val
    };

    let train_refs: Vec<&[f64]> = dataset.train.iter().map(|&i| dataset.sample(i)).collect();
    let stats = NormStats::fit(&train_refs)?;
    let normalized: Vec<Vec<f64>> = dataset
        .samples
        .iter()
        .map(|s| stats.normalize(s))
        .collect();

    let mut model = bundle.build_model(cfg)?;
    model.init_params(cfg.seed);
    let sizes: Vec<usize> = model.params().iter().map(|p| p.values.len()).collect();
    let mut adam = Adam::new(cfg.lr, cfg.weight_decay, &sizes);
    let ordering = OrderingContext::new(bundle, cfg)?;

    let m = model.vertex_count();
    let mut order = dataset.train.clone();
    let mut rows = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Vec<Vec<f64>>)> = None;

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha20Rng::seed_from_u64(shuffle_seed(cfg.seed, epoch));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut mm_sum = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let b = chunk.len();
            let mut x = Vec::with_capacity(b * m * 3);
            for &i in chunk {
                x.extend_from_slice(&normalized[i]);
            }

            let mut tape = Tape::new();
            let ids = model.push_params(&mut tape, true);
            let xid = tape.constant(x, b * m, 3);
            let plans = match &ordering {
                Some(ctx) => Some(ctx.batch_plans(chunk, epoch)?),
                None => None,
            };
            let z = model.encode_on(&mut tape, xid, &ids, plans.as_deref());
            let out = model.decode_on(&mut tape, z, &ids, plans.as_deref());
            let loss_id = tape.mean_abs_diff(out, xid);
            let loss = tape.scalar(loss_id);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss became non-finite at epoch {epoch} (lr {:e})",
                    adam.lr
                )));
            }
            loss_sum += loss * b as f64;

            let outv = tape.value(out);
            for (k, &i) in chunk.iter().enumerate() {
                let rec = stats.denormalize(&outv[k * m * 3..(k + 1) * m * 3]);
                mm_sum += mean_vertex_distance(&rec, dataset.sample(i));
            }

            let grads = tape.backward(loss_id);
            let gvals: Vec<Vec<f64>> = ids.iter().map(|&id| grads.get(&tape, id)).collect();
            let mut pvals = model.param_values();
            adam.step(&mut pvals, &gvals);
            model.set_param_values(&pvals);
        }

        let n_train = dataset.train.len() as f64;
        let (val_loss, val_mm) = split_metrics(&model, &stats, dataset, val, cfg.batch);
        let row = EpochRow {
            epoch,
            lr: adam.lr,
            train_loss: loss_sum / n_train,
            val_loss,
            train_mm: mm_sum / n_train,
            val_mm,
        };
        on_epoch(&row);
        rows.push(row);
        if best.as_ref().is_none_or(|(_, b, _)| val_mm < *b) {
            best = Some((epoch, val_mm, model.param_values()));
        }
        adam.scale_lr(cfg.lr_decay);
    }

    let (best_epoch, best_val_mm, best_params) = best.expect("at least one epoch ran");
    model.set_param_values(&best_params);
    Ok(TrainOutcome {
        rows,
        best_epoch,
        best_val_mm,
        checkpoint: Checkpoint::from_model(&model, &stats),
    })
}

/// Writes the run artifacts: resolved config, metrics CSV, best checkpoint.
pub fn write_artifacts(
    outcome: &TrainOutcome,
    cfg: &RunConfig,
    out_dir: &std::path::Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let write = |name: &str, body: &str| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("config.txt", &cfg.render())?;
    write("metrics.csv", &outcome.metrics_csv())?;
    outcome.checkpoint.save(out_dir.join("checkpoint.bin"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bump_sphere, BumpParams};
    use crate::harness::preprocess::ensure_caches;

    fn tiny_run(ordering: &str, epochs: usize, seed: u64) -> (Dataset, RunConfig, TrainOutcome) {
        let dataset = bump_sphere(12, 7, &BumpParams::default())
            .with_splits(8, 2, 2)
            .unwrap();
        let mut cfg = RunConfig::default();
        cfg.set("dataset", "mem").unwrap();
        cfg.set("output", "mem").unwrap();
        cfg.set("encoder_widths", "4,8").unwrap();
        cfg.set("pooling", "4,4").unwrap();
        cfg.set("latent", "4").unwrap();
        cfg.set("batch", "4").unwrap();
        cfg.set("ordering", ordering).unwrap();
        cfg.set("epochs", &epochs.to_string()).unwrap();
        cfg.set("seed", &seed.to_string()).unwrap();
        cfg.finalize().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let bundle = ensure_caches(&dataset.template, dir.path(), &cfg).unwrap();
        let outcome = train(&dataset, &bundle, &cfg).unwrap();
        (dataset, cfg, outcome)
    }

    #[test]
    fn loss_decreases_and_logs_are_complete() {
        let (_, _, outcome) = tiny_run("fixed", 8, 0);
        assert_eq!(outcome.rows.len(), 8);
        let first = outcome.rows.first().unwrap().train_loss;
        let last = outcome.rows.last().unwrap().train_loss;
        assert!(last < first, "training loss should drop: {first} -> {last}");
        assert!(outcome.best_val_mm.is_finite());
    }

    #[test]
    fn same_seed_gives_identical_metrics() {
        let (_, _, a) = tiny_run("fixed", 3, 9);
        let (_, _, b) = tiny_run("fixed", 3, 9);
        assert_eq!(a.metrics_csv(), b.metrics_csv());
    }

    #[test]
    fn lr_follows_decay_schedule() {
        let (_, cfg, outcome) = tiny_run("fixed", 4, 0);
        for (e, row) in outcome.rows.iter().enumerate() {
            let expect = cfg.lr * cfg.lr_decay.powi(e as i32);
            assert!((row.lr - expect).abs() < 1e-15, "epoch {e}");
        }
    }

    #[test]
    fn random_ordering_trains_and_differs_from_fixed() {
        let (_, _, fixed) = tiny_run("fixed", 3, 0);
        let (_, _, rand) = tiny_run("rand_mesh_and_epoch", 3, 0);
        assert!(rand.rows.iter().all(|r| r.train_loss.is_finite()));
        assert_ne!(
            fixed.rows.last().unwrap().train_loss,
            rand.rows.last().unwrap().train_loss
        );
    }

    #[test]
    fn checkpoint_restores_best_val_error() {
        let (dataset, cfg, outcome) = tiny_run("fixed", 6, 3);
        let dir = tempfile::tempdir().unwrap();
        let bundle = ensure_caches(&dataset.template, dir.path(), &cfg).unwrap();
        let (model, stats) = outcome
            .checkpoint
            .clone()
            .into_model(&bundle.hierarchy, &bundle.tables)
            .unwrap();
        let (_, val_mm) = split_metrics(&model, &stats, &dataset, &dataset.val, cfg.batch);
        assert!((val_mm - outcome.best_val_mm).abs() < 1e-12);
    }
}
