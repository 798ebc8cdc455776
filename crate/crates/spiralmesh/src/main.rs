//! Command-line front end. Every subcommand is a thin wrapper over the
//! library: synthesis, cache preprocessing, training, evaluation,
//! latent-space tools, impulse probes, and ablation grids.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
//! failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use spiralmesh::dataset::{bump_sphere, unflatten, BumpParams, Dataset};
use spiralmesh::error::{Error, Result};
use spiralmesh::harness::ablate::{run_ablation, write_ablation_artifacts, AblationAxis};
use spiralmesh::harness::config::RunConfig;
use spiralmesh::harness::evaluate::{
    error_field_csv, evaluate, export_reconstructions, heatmap_colors, write_heatmap,
};
use spiralmesh::harness::impulse::impulse_response;
use spiralmesh::harness::latent::{analogy, extrapolate, interpolate};
use spiralmesh::harness::preprocess::{ensure_caches, CacheBundle};
use spiralmesh::harness::train::{train_with, write_artifacts};
use spiralmesh::mesh::PlyEncoding;
use spiralmesh::models::autoencoder::Model;
use spiralmesh::models::checkpoint::Checkpoint;
use spiralmesh::models::normalize::NormStats;

#[derive(Parser)]
#[command(
    name = "spiralmesh",
    about = "Spiral convolutional autoencoders on fixed-topology triangle meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Model/training knobs shared by the subcommands that build models. Every
/// flag mirrors a key of the `key = value` config file; flags override the
/// file.
#[derive(Args)]
struct ModelFlags {
    /// Config file with `key = value` lines (# comments allowed)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Convolution operator: spiral | cheb
    #[arg(long)]
    operator: Option<String>,
    /// Comma-separated encoder conv widths, one per pooling step
    #[arg(long)]
    encoder_widths: Option<String>,
    /// Comma-separated decoder conv widths (default: mirrored encoder)
    #[arg(long)]
    decoder_widths: Option<String>,
    /// Comma-separated pooling factors per step
    #[arg(long)]
    pooling: Option<String>,
    /// Comma-separated spiral hop counts per level
    #[arg(long)]
    hops: Option<String>,
    /// Comma-separated spiral dilation strides per level
    #[arg(long)]
    dilation: Option<String>,
    /// Comma-separated spiral lengths per level (0 = data-driven default)
    #[arg(long)]
    spiral_length: Option<String>,
    /// Latent code size
    #[arg(long)]
    latent: Option<usize>,
    /// Append an extra signal-width conv after the decoder
    #[arg(long)]
    final_identity_conv: Option<bool>,
    /// Spiral ordering: fixed | rand_mesh | rand_epoch | rand_mesh_and_epoch
    #[arg(long)]
    ordering: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ModelFlags {
    fn build(&self, dataset: &Path, output: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(file) = &self.config {
            cfg.apply_file(file)?;
        }
        let mut put = |key: &str, value: Option<String>| -> Result<()> {
            match value {
                Some(v) => cfg.set(key, &v),
                None => Ok(()),
            }
        };
        put("operator", self.operator.clone())?;
        put("encoder_widths", self.encoder_widths.clone())?;
        put("decoder_widths", self.decoder_widths.clone())?;
        put("pooling", self.pooling.clone())?;
        put("hops", self.hops.clone())?;
        put("dilation", self.dilation.clone())?;
        put("spiral_length", self.spiral_length.clone())?;
        put("latent", self.latent.map(|v| v.to_string()))?;
        put(
            "final_identity_conv",
            self.final_identity_conv.map(|v| v.to_string()),
        )?;
        put("ordering", self.ordering.clone())?;
        put("epochs", self.epochs.map(|v| v.to_string()))?;
        put("batch", self.batch.map(|v| v.to_string()))?;
        put("lr", self.lr.map(|v| v.to_string()))?;
        put("lr_decay", self.lr_decay.map(|v| v.to_string()))?;
        put("weight_decay", self.weight_decay.map(|v| v.to_string()))?;
        put("seed", self.seed.map(|v| v.to_string()))?;
        cfg.dataset = dataset.to_path_buf();
        cfg.output = output.to_path_buf();
        cfg.finalize()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset directory
    Synth {
        /// Generator kind (only bump_sphere)
        #[arg(long, default_value = "bump_sphere")]
        kind: String,
        /// Number of samples
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sizes of the train/val/test splits (prefixes of the sample list)
        #[arg(long, default_value_t = 0)]
        train: usize,
        #[arg(long, default_value_t = 0)]
        val: usize,
        #[arg(long, default_value_t = 0)]
        test: usize,
        /// Output dataset directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Build (or validate) the hierarchy and spiral-table caches
    Preprocess {
        #[arg(long)]
        dataset: PathBuf,
        /// Cache directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Train an autoencoder and write checkpoint + metrics
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Run output directory (checkpoint.bin, metrics.csv, config.txt)
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Evaluate a checkpoint on a dataset split
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Output directory (error_field.csv, heatmap.ply, reconstructions/)
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        batch: usize,
    },
    /// Reconstruct one sample through a checkpoint
    Reconstruct {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Sample name (file stem under samples/)
        #[arg(long)]
        sample: String,
        /// Output PLY path
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode the line between two samples' latent codes
    Interp {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        /// Output directory for the decoded sequence
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode latent blends at arbitrary weights (outside [0,1] included)
    Extrap {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Comma-separated blend weights a (decodes a*e(from) + (1-a)*e(to))
        #[arg(long, allow_hyphen_values = true)]
        weights: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete the analogy a : b :: c : ? in latent space
    Analogy {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        /// Output PLY path for the decoded d
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a conv layer's response to a one-vertex impulse as a heatmap
    Impulse {
        /// Probe this checkpoint's weights; omit to probe a fresh model
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        /// Hierarchy level of the conv to probe
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Impulse vertex (index at that level)
        #[arg(long)]
        vertex: u32,
        /// Output PLY path (level mesh with response colours)
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Train a grid of variants and emit a comparison table
    Ablate {
        #[arg(long)]
        dataset: PathBuf,
        /// Axis: operator | ordering | latent
        #[arg(long)]
        axis: String,
        /// Output directory (table.csv, curve_<variant>.csv)
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ModelFlags,
    },
}

/// Loads a checkpoint and rebuilds its model against a dataset's template,
/// caching under `<out>/cache`.
fn restore(
    checkpoint: &Path,
    dataset_dir: &Path,
    cache_root: &Path,
) -> Result<(Dataset, Model, NormStats, CacheBundle)> {
    let dataset = Dataset::load(dataset_dir)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    let cfg = RunConfig::for_checkpoint(&ckpt);
    let bundle = ensure_caches(&dataset.template, &cache_root.join("cache"), &cfg)?;
    let (model, stats) = ckpt.into_model(&bundle.hierarchy, &bundle.tables)?;
    Ok((dataset, model, stats, bundle))
}

fn save_shape(dataset: &Dataset, name: &str, positions: &[f64], path: &Path) -> Result<()> {
    let mesh = dataset.template.with_positions(name, unflatten(positions))?;
    mesh.save_ply(path, PlyEncoding::BinaryLittleEndian, None)
}

fn parent_dir(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Synth {
            kind,
            n,
            seed,
            train,
            val,
            test,
            out,
        } => {
            if kind != "bump_sphere" {
                return Err(Error::Config(format!("unknown generator '{kind}'")));
            }
            let dataset = bump_sphere(n, seed, &BumpParams::default()).with_splits(
                train.min(n),
                val,
                test,
            )?;
            dataset.save(&out, PlyEncoding::BinaryLittleEndian)?;
            println!(
                "wrote {n} samples to {} (splits {}/{}/{})",
                out.display(),
                dataset.train.len(),
                dataset.val.len(),
                dataset.test.len()
            );
        }
        Cmd::Preprocess { dataset, out, flags } => {
            let cfg = flags.build(&dataset, &out)?;
            let data = Dataset::load(&dataset)?;
            let bundle = ensure_caches(&data.template, &out, &cfg)?;
            println!(
                "cache bundle checksum {:016x} ({} artifacts rebuilt)",
                bundle.checksum, bundle.rebuilt
            );
        }
        Cmd::Train { dataset, out, flags } => {
            let cfg = flags.build(&dataset, &out)?;
            let data = Dataset::load(&dataset)?;
            let bundle = ensure_caches(&data.template, &out.join("cache"), &cfg)?;
            let outcome = train_with(&data, &bundle, &cfg, |row| {
                eprintln!(
                    "epoch {:>4}  lr {:.6}  train {:.6} ({:.3} mm)  val {:.6} ({:.3} mm)",
                    row.epoch, row.lr, row.train_loss, row.train_mm, row.val_loss, row.val_mm
                );
            })?;
            write_artifacts(&outcome, &cfg, &out)?;
            println!(
                "best val {:.6} mm at epoch {}; artifacts in {}",
                outcome.best_val_mm,
                outcome.best_epoch,
                out.display()
            );
        }
        Cmd::Eval {
            checkpoint,
            dataset,
            split,
            out,
            batch,
        } => {
            let (data, model, stats, _) = restore(&checkpoint, &dataset, &out)?;
            let eval = evaluate(&model, &stats, &data, &split, batch)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            std::fs::write(
                out.join("error_field.csv"),
                error_field_csv(&eval.per_vertex_mm),
            )
            .map_err(|e| Error::io(out.display().to_string(), e))?;
            write_heatmap(&data, &eval.per_vertex_mm, &out.join("heatmap.ply"))?;
            export_reconstructions(&data, &split, &eval.reconstructions, &out.join("reconstructions"))?;
            println!("mean error on {split}: {} mm", eval.mean_mm);
        }
        Cmd::Reconstruct {
            checkpoint,
            dataset,
            sample,
            out,
        } => {
            let (data, model, stats, _) = restore(&checkpoint, &dataset, out.parent().unwrap_or(Path::new(".")))?;
            let i = data.index_of(&sample)?;
            let x = stats.normalize(data.sample(i));
            let rec = stats.denormalize(&model.reconstruct(&x, 1));
            parent_dir(&out)?;
            save_shape(&data, &sample, &rec, &out)?;
            println!("wrote {}", out.display());
        }
        Cmd::Interp {
            checkpoint,
            dataset,
            from,
            to,
            steps,
            out,
        } => {
            let (data, model, stats, _) = restore(&checkpoint, &dataset, &out)?;
            let x1 = data.sample(data.index_of(&from)?);
            let x2 = data.sample(data.index_of(&to)?);
            let seq = interpolate(&model, &stats, x1, x2, steps);
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            for (k, shape) in seq.iter().enumerate() {
                let name = format!("interp_{k:03}");
                save_shape(&data, &name, shape, &out.join(format!("{name}.ply")))?;
            }
            println!("wrote {} steps to {}", seq.len(), out.display());
        }
        Cmd::Extrap {
            checkpoint,
            dataset,
            from,
            to,
            weights,
            out,
        } => {
            let a_values: Vec<f64> = weights
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("bad weights list '{weights}'")))?;
            let (data, model, stats, _) = restore(&checkpoint, &dataset, &out)?;
            let x1 = data.sample(data.index_of(&from)?);
            let x2 = data.sample(data.index_of(&to)?);
            let seq = extrapolate(&model, &stats, x1, x2, &a_values);
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            for (k, shape) in seq.iter().enumerate() {
                let name = format!("extrap_{k:03}");
                save_shape(&data, &name, shape, &out.join(format!("{name}.ply")))?;
            }
            println!("wrote {} shapes to {}", seq.len(), out.display());
        }
        Cmd::Analogy {
            checkpoint,
            dataset,
            a,
            b,
            c,
            out,
        } => {
            let (data, model, stats, _) = restore(&checkpoint, &dataset, out.parent().unwrap_or(Path::new(".")))?;
            let xa = data.sample(data.index_of(&a)?);
            let xb = data.sample(data.index_of(&b)?);
            let xc = data.sample(data.index_of(&c)?);
            let d = analogy(&model, &stats, xa, xb, xc);
            parent_dir(&out)?;
            save_shape(&data, "analogy_d", &d, &out)?;
            println!("wrote {}", out.display());
        }
        Cmd::Impulse {
            checkpoint,
            dataset,
            level,
            vertex,
            out,
            flags,
        } => {
            let cache_root = out.parent().unwrap_or(Path::new(".")).to_path_buf();
            let (model, bundle) = match checkpoint {
                Some(ckpt) => {
                    let (_, model, _, bundle) = restore(&ckpt, &dataset, &cache_root)?;
                    (model, bundle)
                }
                None => {
                    let cfg = flags.build(&dataset, &cache_root)?;
                    let data = Dataset::load(&dataset)?;
                    let bundle = ensure_caches(&data.template, &cache_root.join("cache"), &cfg)?;
                    let mut model = bundle.build_model(&cfg)?;
                    model.init_params(cfg.seed);
                    (model, bundle)
                }
            };
            let response = impulse_response(&model, level, vertex)?;
            let colors = heatmap_colors(&response);
            parent_dir(&out)?;
            bundle.hierarchy.level_mesh(level).save_ply(
                &out,
                PlyEncoding::BinaryLittleEndian,
                Some(&colors),
            )?;
            let active = response.iter().filter(|&&r| r > 0.0).count();
            println!(
                "impulse at vertex {vertex}, level {level}: {active} vertices respond; wrote {}",
                out.display()
            );
        }
        Cmd::Ablate {
            dataset,
            axis,
            out,
            flags,
        } => {
            let axis = AblationAxis::parse(&axis)?;
            let cfg = flags.build(&dataset, &out)?;
            let data = Dataset::load(&dataset)?;
            let bundle = ensure_caches(&data.template, &out.join("cache"), &cfg)?;
            let report = run_ablation(&data, &bundle, &cfg, axis)?;
            write_ablation_artifacts(&report, &out)?;
            println!("{}", report.table_csv().trim_end());
        }
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
