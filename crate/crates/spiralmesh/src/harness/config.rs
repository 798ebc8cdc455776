//! Run configuration: every knob that, together with the dataset bytes,
//! determines a training run. Loadable from a `key = value` file; unknown
//! keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::models::autoencoder::{ModelSpec, Operator};
use crate::spiral::OrderingMode;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub output: PathBuf,
    pub operator: Operator,
    pub encoder_widths: Vec<usize>,
    /// Empty means the mirror rule (reverse the encoder widths, drop one).
    pub decoder_widths: Vec<usize>,
    pub pooling: Vec<usize>,
    pub hops: Vec<usize>,
    pub dilation: Vec<usize>,
    /// Per-level spiral length; 0 means the data-driven default.
    pub spiral_length: Vec<usize>,
    pub latent: usize,
    pub final_identity_conv: bool,
    pub ordering: OrderingMode,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            dataset: PathBuf::new(),
            output: PathBuf::new(),
            operator: Operator::Spiral,
            encoder_widths: vec![16, 16, 32],
            decoder_widths: Vec::new(),
            pooling: vec![4, 4, 4],
            hops: Vec::new(),
            dilation: Vec::new(),
            spiral_length: Vec::new(),
            latent: 16,
            final_identity_conv: true,
            ordering: OrderingMode::Fixed,
            epochs: 300,
            batch: 16,
            lr: 1e-3,
            lr_decay: 0.99,
            weight_decay: 5e-5,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad value '{value}' for {what}"));
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "output" => self.output = PathBuf::from(value),
            "operator" => self.operator = Operator::parse(value)?,
            "encoder_widths" => self.encoder_widths = parse_list(value).ok_or_else(|| bad(key))?,
            "decoder_widths" => self.decoder_widths = parse_list(value).ok_or_else(|| bad(key))?,
            "pooling" => self.pooling = parse_list(value).ok_or_else(|| bad(key))?,
            "hops" => self.hops = parse_list(value).ok_or_else(|| bad(key))?,
            "dilation" => self.dilation = parse_list(value).ok_or_else(|| bad(key))?,
            "spiral_length" => self.spiral_length = parse_list(value).ok_or_else(|| bad(key))?,
            "latent" => self.latent = value.parse().map_err(|_| bad(key))?,
            "final_identity_conv" => {
                self.final_identity_conv = value.parse().map_err(|_| bad(key))?
            }
            "ordering" => {
                self.ordering = OrderingMode::parse(value)
                    .ok_or_else(|| Error::Config(format!("unknown ordering '{value}'")))?
            }
            "epochs" => self.epochs = value.parse().map_err(|_| bad(key))?,
            "batch" => self.batch = value.parse().map_err(|_| bad(key))?,
            "lr" => self.lr = value.parse().map_err(|_| bad(key))?,
            "lr_decay" => self.lr_decay = value.parse().map_err(|_| bad(key))?,
            "weight_decay" => self.weight_decay = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a config file: `key = value` lines, `#` comments, blank lines.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(path.display().to_string(), lineno + 1, "expected key = value")
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Fills dependent defaults and checks list lengths.
    pub fn finalize(&mut self) -> Result<()> {
        let s = self.pooling.len();
        if s == 0 {
            return Err(Error::Config("pooling must list at least one factor".into()));
        }
        if self.hops.is_empty() {
            self.hops = vec![1; s];
        }
        if self.dilation.is_empty() {
            self.dilation = vec![1; s];
        }
        if self.spiral_length.is_empty() {
            self.spiral_length = vec![0; s];
        }
        if self.decoder_widths.is_empty() {
            self.decoder_widths = ModelSpec::mirrored_decoder(&self.encoder_widths);
        }
        if self.encoder_widths.len() != s
            || self.decoder_widths.len() + 1 != s
            || self.hops.len() != s
            || self.dilation.len() != s
            || self.spiral_length.len() != s
        {
            return Err(Error::Config(format!(
                "pooling has {s} steps; widths/hops/dilation/spiral_length must agree"
            )));
        }
        if self.batch == 0 || self.epochs == 0 {
            return Err(Error::Config("batch and epochs must be positive".into()));
        }
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("dataset path is required".into()));
        }
        if self.output.as_os_str().is_empty() {
            return Err(Error::Config("output path is required".into()));
        }
        Ok(())
    }

    /// Configuration that reproduces a checkpoint's caches and model exactly
    /// (spiral lengths pinned to the stored values). Dataset/output paths and
    /// training knobs keep their defaults.
    pub fn for_checkpoint(ckpt: &crate::models::checkpoint::Checkpoint) -> RunConfig {
        RunConfig {
            operator: ckpt.spec.operator,
            encoder_widths: ckpt.spec.encoder_widths.clone(),
            decoder_widths: ckpt.spec.decoder_widths.clone(),
            pooling: ckpt.spec.pooling.clone(),
            hops: ckpt.spec.hops.clone(),
            dilation: ckpt.spec.dilation.clone(),
            spiral_length: ckpt.lengths.clone(),
            latent: ckpt.spec.latent,
            final_identity_conv: ckpt.spec.final_identity_conv,
            ..RunConfig::default()
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            operator: self.operator,
            encoder_widths: self.encoder_widths.clone(),
            decoder_widths: self.decoder_widths.clone(),
            pooling: self.pooling.clone(),
            hops: self.hops.clone(),
            dilation: self.dilation.clone(),
            latent: self.latent,
            signal_dim: 3,
            final_identity_conv: self.final_identity_conv,
        }
    }

    /// Canonical `key = value` rendering (written next to run outputs so a
    /// run is reproducible from its artifacts).
    pub fn render(&self) -> String {
        let list = |xs: &[usize]| {
            xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        };
        format!(
            "dataset = {}\noutput = {}\noperator = {}\nencoder_widths = {}\ndecoder_widths = {}\npooling = {}\nhops = {}\ndilation = {}\nspiral_length = {}\nlatent = {}\nfinal_identity_conv = {}\nordering = {}\nepochs = {}\nbatch = {}\nlr = {}\nlr_decay = {}\nweight_decay = {}\nseed = {}\n",
            self.dataset.display(),
            self.output.display(),
            self.operator.as_str(),
            list(&self.encoder_widths),
            list(&self.decoder_widths),
            list(&self.pooling),
            list(&self.hops),
            list(&self.dilation),
            list(&self.spiral_length),
            self.latent,
            self.final_identity_conv,
            self.ordering.as_str(),
            self.epochs,
            self.batch,
            self.lr,
            self.lr_decay,
            self.weight_decay,
            self.seed,
        )
    }
}

fn parse_list(value: &str) -> Option<Vec<usize>> {
    if value.trim().is_empty() {
        return Some(Vec::new());
    }
    value.split(',').map(|p| p.trim().parse().ok()).collect()
}
