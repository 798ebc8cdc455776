//! Hierarchical mesh autoencoder: convolutions interleaved with pooling on
//! the way down, a latent bottleneck, and unpooling with convolutions on the
//! way up.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::hierarchy::MeshHierarchy;
use crate::nn::laplacian::rescaled_laplacian;
use crate::nn::tensor::{Csr, GatherPlan, SelectPlan, Tape, TensorId, UpsamplePlan};
use crate::spiral::{SpiralTable, PAD};
use crate::topology::Topology;

/// Which convolution the model uses at every level. Both variants share
/// kernel sizes derived from the spiral tables, so their parameter counts
/// match exactly — the basis for like-for-like comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Spiral,
    Cheb,
}

impl Operator {
    pub fn parse(s: &str) -> Result<Operator> {
        match s {
            "spiral" => Ok(Operator::Spiral),
            "cheb" => Ok(Operator::Cheb),
            other => Err(Error::Config(format!("unknown operator '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Operator::Spiral => "spiral",
            Operator::Cheb => "cheb",
        }
    }
}

/// Architecture description. With `s` pooling steps the encoder runs one
/// conv per level 0..s (each followed by ELU and pooling) into a dense map
/// to the latent; the decoder mirrors it: dense from the latent, then per
/// level unpooling plus conv, the last conv emitting `signal_dim` channels.
/// `decoder_widths` therefore lists only the s-1 intermediate widths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub operator: Operator,
    pub encoder_widths: Vec<usize>,
    pub decoder_widths: Vec<usize>,
    pub pooling: Vec<usize>,
    pub hops: Vec<usize>,
    pub dilation: Vec<usize>,
    pub latent: usize,
    pub signal_dim: usize,
    pub final_identity_conv: bool,
}

impl ModelSpec {
    /// The default mirror rule: reverse the encoder widths and drop the last
    /// entry (the final decoder conv always emits `signal_dim`).
    pub fn mirrored_decoder(encoder_widths: &[usize]) -> Vec<usize> {
        let mut rev: Vec<usize> = encoder_widths.iter().rev().copied().collect();
        rev.pop();
        rev
    }

    /// Convenience constructor for the common shape: mirrored decoder,
    /// 1-hop undilated convs, geometry signal.
    pub fn simple(operator: Operator, encoder_widths: &[usize], pooling: &[usize], latent: usize) -> ModelSpec {
        ModelSpec {
            operator,
            encoder_widths: encoder_widths.to_vec(),
            decoder_widths: ModelSpec::mirrored_decoder(encoder_widths),
            pooling: pooling.to_vec(),
            hops: vec![1; pooling.len()],
            dilation: vec![1; pooling.len()],
            latent,
            signal_dim: 3,
            final_identity_conv: true,
        }
    }

    pub fn steps(&self) -> usize {
        self.pooling.len()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.steps();
        if s == 0 {
            return Err(Error::Config("at least one pooling step required".into()));
        }
        if self.encoder_widths.len() != s {
            return Err(Error::Config(format!(
                "encoder widths ({}) must match pooling steps ({s})",
                self.encoder_widths.len()
            )));
        }
        if self.decoder_widths.len() + 1 != s {
            return Err(Error::Config(format!(
                "decoder widths ({}) must be one fewer than pooling steps ({s})",
                self.decoder_widths.len()
            )));
        }
        if self.hops.len() != s || self.dilation.len() != s {
            return Err(Error::Config("hops/dilation must list one entry per level".into()));
        }
        if self.latent == 0 || self.signal_dim == 0 {
            return Err(Error::Config("latent and signal dimensions must be positive".into()));
        }
        if self.encoder_widths.iter().chain(&self.decoder_widths).any(|&w| w == 0) {
            return Err(Error::Config("zero-width layer".into()));
        }
        Ok(())
    }

    fn enc_in(&self, i: usize) -> usize {
        if i == 0 {
            self.signal_dim
        } else {
            self.encoder_widths[i - 1]
        }
    }

    fn dec_in(&self, i: usize) -> usize {
        if i == 0 {
            *self.encoder_widths.last().unwrap()
        } else {
            self.decoder_widths[i - 1]
        }
    }

    fn dec_out(&self, i: usize) -> usize {
        if i + 1 == self.steps() {
            self.signal_dim
        } else {
            self.decoder_widths[i]
        }
    }
}

/// One named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

enum LevelOp {
    Spiral(Rc<GatherPlan>),
    Cheb { lap: Rc<Csr>, order: usize },
}

/// A built autoencoder: structure plans plus parameter values.
pub struct Model {
    spec: ModelSpec,
    lengths: Vec<usize>,
    level_sizes: Vec<usize>,
    level_ops: Vec<LevelOp>,
    selects: Vec<Rc<SelectPlan>>,
    upsamples: Vec<Rc<UpsamplePlan>>,
    params: Vec<Param>,
    template_hash: u64,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("spec", &self.spec)
            .field("lengths", &self.lengths)
            .field("level_sizes", &self.level_sizes)
            .field("param_count", &self.param_count())
            .finish()
    }
}

impl Model {
    /// Assembles the model over a hierarchy with one spiral table per level
    /// 0..s. The Chebyshev variant reads kernel sizes from the same tables
    /// (degree `L - 1`) and builds Laplacians from the level meshes.
    pub fn build(spec: ModelSpec, hierarchy: &MeshHierarchy, tables: &[SpiralTable]) -> Result<Model> {
        spec.validate()?;
        let s = spec.steps();
        if hierarchy.factors() != spec.pooling.as_slice() {
            return Err(Error::Config(format!(
                "hierarchy factors {:?} do not match spec pooling {:?}",
                hierarchy.factors(),
                spec.pooling
            )));
        }
        if tables.len() != s {
            return Err(Error::Config(format!(
                "need one spiral table per level: got {}, expected {s}",
                tables.len()
            )));
        }
        let level_sizes: Vec<usize> = (0..=s).map(|i| hierarchy.level_mesh(i).vertex_count()).collect();
        for (i, table) in tables.iter().enumerate() {
            let expected = hierarchy.level_mesh(i).topology_hash();
            if table.template_hash != expected {
                return Err(Error::TemplateMismatch {
                    expected,
                    got: table.template_hash,
                });
            }
        }
        let lengths: Vec<usize> = tables.iter().map(|t| t.length()).collect();

        let level_ops: Vec<LevelOp> = match spec.operator {
            Operator::Spiral => tables.iter().map(|t| LevelOp::Spiral(GatherPlan::from_table(t))).collect(),
            Operator::Cheb => {
                let mut ops = Vec::with_capacity(s);
                for (i, table) in tables.iter().enumerate() {
                    let topo = Topology::build(hierarchy.level_mesh(i))?;
                    ops.push(LevelOp::Cheb {
                        lap: rescaled_laplacian(&topo),
                        order: table.length() - 1,
                    });
                }
                ops
            }
        };

        let selects: Vec<Rc<SelectPlan>> = (0..s)
            .map(|i| {
                Rc::new(SelectPlan {
                    kept: hierarchy.step(i).kept_vertices.clone(),
                    parent_m: level_sizes[i],
                })
            })
            .collect();
        let upsamples: Vec<Rc<UpsamplePlan>> = (0..s)
            .map(|i| {
                Rc::new(UpsamplePlan {
                    entries: hierarchy.step(i).up_map.clone(),
                    child_m: level_sizes[i + 1],
                })
            })
            .collect();

        let l = level_sizes[s];
        let w_last = *spec.encoder_widths.last().unwrap();
        let mut params = Vec::new();
        let mut push = |name: String, rows: usize, cols: usize| {
            params.push(Param {
                name,
                rows,
                cols,
                values: vec![0.0; rows * cols],
            });
        };
        for i in 0..s {
            push(format!("enc.conv{i}.weight"), lengths[i] * spec.enc_in(i), spec.encoder_widths[i]);
            push(format!("enc.conv{i}.bias"), 1, spec.encoder_widths[i]);
        }
        push("enc.fc.weight".into(), l * w_last, spec.latent);
        push("enc.fc.bias".into(), 1, spec.latent);
        push("dec.fc.weight".into(), spec.latent, l * w_last);
        push("dec.fc.bias".into(), 1, l * w_last);
        for i in 0..s {
            let level = s - 1 - i;
            push(format!("dec.conv{i}.weight"), lengths[level] * spec.dec_in(i), spec.dec_out(i));
            push(format!("dec.conv{i}.bias"), 1, spec.dec_out(i));
        }
        if spec.final_identity_conv {
            push("dec.extra.weight".into(), lengths[0] * spec.signal_dim, spec.signal_dim);
            push("dec.extra.bias".into(), 1, spec.signal_dim);
        }

        Ok(Model {
            spec,
            lengths,
            level_sizes,
            level_ops,
            selects,
            upsamples,
            params,
            template_hash: hierarchy.template().topology_hash(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn template_hash(&self) -> u64 {
        self.template_hash
    }

    pub fn vertex_count(&self) -> usize {
        self.level_sizes[0]
    }

    /// Vertex count after the last pooling step.
    pub fn coarsest_size(&self) -> usize {
        *self.level_sizes.last().unwrap()
    }

    /// Vertex count at hierarchy level `i` (0 = template).
    pub fn level_size(&self, level: usize) -> usize {
        self.level_sizes[level]
    }

    /// Indices into [`Model::params`] (and the ids from
    /// [`Model::push_params`]) of the encoder conv at `level`: (weight, bias).
    pub fn encoder_conv_param_indices(&self, level: usize) -> (usize, usize) {
        assert!(level < self.spec.steps());
        (2 * level, 2 * level + 1)
    }

    /// Applies just the level-`level` convolution (no activation) to `x` on
    /// an open tape, using the default fixed ordering. For probing single
    /// layers in isolation.
    pub fn conv_at(
        &self,
        tape: &mut Tape,
        x: TensorId,
        level: usize,
        weight: TensorId,
        bias: TensorId,
    ) -> TensorId {
        self.conv(tape, x, level, weight, bias, None)
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn param_values(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| p.values.clone()).collect()
    }

    pub fn set_param_values(&mut self, values: &[Vec<f64>]) {
        assert_eq!(values.len(), self.params.len());
        for (p, v) in self.params.iter_mut().zip(values) {
            assert_eq!(p.values.len(), v.len());
            p.values.copy_from_slice(v);
        }
    }

    /// Replaces parameters by name, enforcing shape agreement (checkpoint
    /// restore path).
    pub fn load_params(&mut self, loaded: &[Param]) -> Result<()> {
        if loaded.len() != self.params.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", self.params.len()),
                got: format!("{} parameters", loaded.len()),
            });
        }
        for (own, new) in self.params.iter_mut().zip(loaded) {
            if own.name != new.name || own.rows != new.rows || own.cols != new.cols {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} ({}x{})", own.name, own.rows, own.cols),
                    got: format!("{} ({}x{})", new.name, new.rows, new.cols),
                });
            }
            own.values.copy_from_slice(&new.values);
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.rows * p.cols).sum()
    }

    /// Uniform initialization in +-sqrt(6 / (fan_in + fan_out)) for weights,
    /// zeros for biases; draw order is the parameter order, so a seed fully
    /// determines the state.
    pub fn init_params(&mut self, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for p in &mut self.params {
            if p.name.ends_with(".bias") {
                p.values.iter_mut().for_each(|v| *v = 0.0);
            } else {
                let bound = (6.0 / (p.rows + p.cols) as f64).sqrt();
                for v in &mut p.values {
                    *v = rng.gen_range(-bound..bound);
                }
            }
        }
    }

    /// Pushes every parameter onto the tape, as differentiable leaves when
    /// `trainable`, in parameter order.
    pub fn push_params(&self, tape: &mut Tape, trainable: bool) -> Vec<TensorId> {
        self.params
            .iter()
            .map(|p| {
                if trainable {
                    tape.leaf(p.values.clone(), p.rows, p.cols)
                } else {
                    tape.constant(p.values.clone(), p.rows, p.cols)
                }
            })
            .collect()
    }

    fn conv(
        &self,
        tape: &mut Tape,
        x: TensorId,
        level: usize,
        weight: TensorId,
        bias: TensorId,
        plans: Option<&[Rc<GatherPlan>]>,
    ) -> TensorId {
        match (&self.level_ops[level], plans) {
            (LevelOp::Spiral(default_plan), _) => {
                let plan = plans.map_or(default_plan, |ps| &ps[level]);
                let gathered = tape.gather_spiral(x, plan);
                let mapped = tape.matmul(gathered, weight);
                tape.add_row_bias(mapped, bias)
            }
            (LevelOp::Cheb { lap, order }, _) => {
                let mut terms = Vec::with_capacity(order + 1);
                terms.push(x);
                if *order >= 1 {
                    terms.push(tape.laplacian_apply(x, lap));
                }
                for k in 2..=*order {
                    let lt = tape.laplacian_apply(terms[k - 1], lap);
                    let two_lt = tape.scale(lt, 2.0);
                    terms.push(tape.sub(two_lt, terms[k - 2]));
                }
                let stacked = tape.concat_cols(&terms);
                let mapped = tape.matmul(stacked, weight);
                tape.add_row_bias(mapped, bias)
            }
        }
    }

    /// Encoder forward on an open tape. `x` is `(batch * m, signal_dim)`;
    /// `ids` comes from [`Model::push_params`]; `plans`, when given, swaps in
    /// per-batch spiral gathers (random orderings), one per level.
    pub fn encode_on(
        &self,
        tape: &mut Tape,
        x: TensorId,
        ids: &[TensorId],
        plans: Option<&[Rc<GatherPlan>]>,
    ) -> TensorId {
        let s = self.spec.steps();
        let (rows, cols) = tape.shape(x);
        assert_eq!(cols, self.spec.signal_dim, "input feature width");
        assert_eq!(rows % self.level_sizes[0], 0, "input rows must tile the template");
        let batch = rows / self.level_sizes[0];
        let mut h = x;
        for i in 0..s {
            h = self.conv(tape, h, i, ids[2 * i], ids[2 * i + 1], plans);
            h = tape.elu(h);
            h = tape.select_rows(h, &self.selects[i]);
        }
        let l = self.coarsest_size();
        let w = *self.spec.encoder_widths.last().unwrap();
        h = tape.reshape(h, batch, l * w);
        h = tape.matmul(h, ids[2 * s]);
        tape.add_row_bias(h, ids[2 * s + 1])
    }

    /// Decoder forward on an open tape; `z` is `(batch, latent)`.
    pub fn decode_on(
        &self,
        tape: &mut Tape,
        z: TensorId,
        ids: &[TensorId],
        plans: Option<&[Rc<GatherPlan>]>,
    ) -> TensorId {
        let s = self.spec.steps();
        let (batch, latent) = tape.shape(z);
        assert_eq!(latent, self.spec.latent, "latent width");
        let l = self.coarsest_size();
        let w0 = *self.spec.encoder_widths.last().unwrap();
        let mut h = tape.matmul(z, ids[2 * s + 2]);
        h = tape.add_row_bias(h, ids[2 * s + 3]);
        h = tape.reshape(h, batch * l, w0);
        for i in 0..s {
            let level = s - 1 - i;
            h = tape.upsample_rows(h, &self.upsamples[level]);
            h = self.conv(tape, h, level, ids[2 * s + 4 + 2 * i], ids[2 * s + 5 + 2 * i], plans);
            let is_output = i + 1 == s && !self.spec.final_identity_conv;
            if !is_output {
                h = tape.elu(h);
            }
        }
        if self.spec.final_identity_conv {
            let base = 4 * s + 4;
            h = self.conv(tape, h, 0, ids[base], ids[base + 1], plans);
        }
        h
    }

    /// Inference encode without gradients: `x` is `batch * m * signal_dim`
    /// flattened; returns `batch * latent`.
    pub fn encode(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let m = self.level_sizes[0];
        assert_eq!(x.len(), batch * m * self.spec.signal_dim);
        let mut tape = Tape::new();
        let ids = self.push_params(&mut tape, false);
        let xid = tape.constant(x.to_vec(), batch * m, self.spec.signal_dim);
        let z = self.encode_on(&mut tape, xid, &ids, None);
        tape.value(z).to_vec()
    }

    /// Inference decode without gradients: `z` is `batch * latent` flattened.
    pub fn decode(&self, z: &[f64], batch: usize) -> Vec<f64> {
        assert_eq!(z.len(), batch * self.spec.latent);
        let mut tape = Tape::new();
        let ids = self.push_params(&mut tape, false);
        let zid = tape.constant(z.to_vec(), batch, self.spec.latent);
        let out = self.decode_on(&mut tape, zid, &ids, None);
        tape.value(out).to_vec()
    }

    pub fn reconstruct(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let z = self.encode(x, batch);
        self.decode(&z, batch)
    }
}

/// Stacks per-sample spiral tables into one gather plan covering the whole
/// batch (entries become absolute row indices). All tables must share the
/// vertex count and length.
pub fn stack_gather_plans(tables: &[&SpiralTable]) -> Rc<GatherPlan> {
    assert!(!tables.is_empty());
    let m = tables[0].vertex_count();
    let l = tables[0].length();
    let mut entries = Vec::with_capacity(tables.len() * m * l);
    for (b, t) in tables.iter().enumerate() {
        assert_eq!(t.vertex_count(), m);
        assert_eq!(t.length(), l);
        let offset = (b * m) as i32;
        entries.extend(t.entries().iter().map(|&e| if e == PAD { PAD } else { e + offset }));
    }
    Rc::new(GatherPlan {
        entries,
        m: tables.len() * m,
        l,
    })
}
