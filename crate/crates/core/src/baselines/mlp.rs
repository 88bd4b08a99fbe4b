//! Reference neural scorer.
//!
//! Node encoder: `z = W_e [own feature || mean neighbor feature || time encoding] + b_e`,
//! where the neighbor mean runs over the full budget of `S` slots with
//! null-embedding (zero) pads and the time encoding is a sinusoidal encoding
//! of the elapsed years since the latest and the mean sampled interaction.
//!
//! Scoring head: `p = sigmoid(w_2 . relu(W_1 [z_u || z_v] + b_1) + b_2)`.

use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LinkScorer;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalConfig};
use crate::features::sinusoidal_encoding;
use crate::graph::{EdgeEvent, SplitManifest, TemporalGraph};
use crate::numeric::dot;
use crate::sampling::{
    derive_rng, sample_neighbors, InteractionHistory, NegativePools, NegativeRegime, NeighborSample, NeighborStrategy,
    SamplerConfig,
};
use crate::types::{NodeId, Year};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerShape {
    pub feature_dim: usize,
    /// Width of the elapsed-time encoding; a positive multiple of 4.
    pub time_dim: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Identity instead of ReLU in the head (used for exact gradient checks).
    #[serde(default)]
    pub linear_head: bool,
}

struct Layout {
    we: Range<usize>,
    be: Range<usize>,
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: usize,
}

impl ScorerShape {
    pub fn input_dim(&self) -> usize {
        2 * self.feature_dim + self.time_dim
    }

    fn layout(&self) -> Layout {
        let (din, dz, h) = (self.input_dim(), self.embed_dim, self.hidden_dim);
        let we = 0..dz * din;
        let be = we.end..we.end + dz;
        let w1 = be.end..be.end + h * 2 * dz;
        let b1 = w1.end..w1.end + h;
        let w2 = b1.end..b1.end + h;
        let b2 = w2.end;
        Layout { we, be, w1, b1, w2, b2 }
    }

    pub fn param_count(&self) -> usize {
        self.layout().b2 + 1
    }

    fn validate(&self) -> Result<()> {
        if self.time_dim == 0 || self.time_dim % 4 != 0 {
            return Err(Error::invalid(format!(
                "time_dim must be a positive multiple of 4, got {}",
                self.time_dim
            )));
        }
        if self.feature_dim == 0 || self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::invalid("scorer dimensions must be positive"));
        }
        Ok(())
    }
}

/// Flat parameter vector with its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams {
    pub shape: ScorerShape,
    pub values: Vec<f64>,
}

/// One labelled pair, given as the two encoder inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x_src: Vec<f64>,
    pub x_dst: Vec<f64>,
    pub label: f64,
}

struct Forward {
    h: Vec<f64>,
    a: Vec<f64>,
    r: Vec<f64>,
    o: f64,
}

fn matvec(w: &[f64], rows: usize, x: &[f64], bias: &[f64]) -> Vec<f64> {
    let cols = x.len();
    (0..rows)
        .map(|i| dot(&w[i * cols..(i + 1) * cols], x) + bias[i])
        .collect()
}

fn sigmoid(o: f64) -> f64 {
    let p = if o >= 0.0 {
        1.0 / (1.0 + (-o).exp())
    } else {
        let e = o.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `-y ln p - (1 - y) ln(1 - p)` with `p = sigmoid(o)`, computed from the logit.
fn bce_with_logit(o: f64, y: f64) -> f64 {
    o.max(0.0) - o * y + (-o.abs()).exp().ln_1p()
}

impl ScorerParams {
    pub fn zeros(shape: ScorerShape) -> Result<Self> {
        shape.validate()?;
        Ok(ScorerParams {
            values: vec![0.0; shape.param_count()],
            shape,
        })
    }

    /// Xavier-uniform encoder and hidden weights; zero biases and output layer,
    /// so an untrained scorer returns exactly 0.5.
    pub fn init(shape: ScorerShape, seed: u64) -> Result<Self> {
        let mut p = ScorerParams::zeros(shape)?;
        let l = shape.layout();
        let mut rng = derive_rng(seed, u64::MAX);
        let mut fill = |range: Range<usize>, fan_in: usize, fan_out: usize, values: &mut [f64]| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for x in &mut values[range] {
                *x = rng.gen_range(-bound..bound);
            }
        };
        fill(l.we, shape.input_dim(), shape.embed_dim, &mut p.values);
        fill(l.w1, 2 * shape.embed_dim, shape.hidden_dim, &mut p.values);
        Ok(p)
    }

    /// Every parameter uniform in `[-scale, scale)`.
    pub fn random<R: Rng + ?Sized>(shape: ScorerShape, rng: &mut R, scale: f64) -> Result<Self> {
        let mut p = ScorerParams::zeros(shape)?;
        for x in &mut p.values {
            *x = rng.gen_range(-scale..scale);
        }
        Ok(p)
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::NonFinite(format!("parameter {i}"))),
            None => Ok(()),
        }
    }

    /// Node projection `W_e x + b_e`.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.shape.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.input_dim(),
                got: x.len(),
            });
        }
        let l = self.shape.layout();
        Ok(matvec(&self.values[l.we], self.shape.embed_dim, x, &self.values[l.be]))
    }

    fn head(&self, z_src: &[f64], z_dst: &[f64], mask: Option<&[f64]>) -> Forward {
        let l = self.shape.layout();
        let h: Vec<f64> = z_src.iter().chain(z_dst).copied().collect();
        let a = matvec(&self.values[l.w1], self.shape.hidden_dim, &h, &self.values[l.b1]);
        let mut r: Vec<f64> = if self.shape.linear_head {
            a.clone()
        } else {
            a.iter().map(|x| x.max(0.0)).collect()
        };
        if let Some(mask) = mask {
            r.iter_mut().zip(mask).for_each(|(x, m)| *x *= m);
        }
        let o = dot(&self.values[l.w2], &r) + self.values[l.b2];
        Forward { h, a, r, o }
    }

    /// Mean binary cross-entropy over `batch` (no dropout).
    pub fn loss(&self, batch: &[Example]) -> Result<f64> {
        let mut total = 0.0;
        for ex in batch {
            let zs = self.encode(&ex.x_src)?;
            let zd = self.encode(&ex.x_dst)?;
            total += bce_with_logit(self.head(&zs, &zd, None).o, ex.label);
        }
        let loss = total / batch.len() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok(loss)
    }

    /// Mean loss and its analytic gradient. With `dropout = Some((rate, rng))`
    /// an inverted-dropout mask is drawn per example on the hidden layer.
    pub fn loss_and_grad(
        &self,
        batch: &[Example],
        mut dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Empty("minibatch".into()));
        }
        let shape = self.shape;
        let l = shape.layout();
        let (din, dz, hdim) = (shape.input_dim(), shape.embed_dim, shape.hidden_dim);
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.values.len()];
        let mut total = 0.0;

        for ex in batch {
            let zs = self.encode(&ex.x_src)?;
            let zd = self.encode(&ex.x_dst)?;
            let mask: Option<Vec<f64>> = match dropout.as_mut() {
                Some((rate, rng)) if *rate > 0.0 => Some(
                    (0..hdim)
                        .map(|_| {
                            if rng.gen::<f64>() < *rate {
                                0.0
                            } else {
                                1.0 / (1.0 - *rate)
                            }
                        })
                        .collect(),
                ),
                _ => None,
            };
            let f = self.head(&zs, &zd, mask.as_deref());
            total += bce_with_logit(f.o, ex.label);

            let g_o = (sigmoid_unclamped(f.o) - ex.label) * scale;
            for (g, r) in grad[l.w2.clone()].iter_mut().zip(&f.r) {
                *g += g_o * r;
            }
            grad[l.b2] += g_o;

            let w2 = &self.values[l.w2.clone()];
            let g_a: Vec<f64> = (0..hdim)
                .map(|i| {
                    let m = mask.as_ref().map_or(1.0, |m| m[i]);
                    let d_act = if shape.linear_head || f.a[i] > 0.0 { 1.0 } else { 0.0 };
                    g_o * w2[i] * m * d_act
                })
                .collect();

            let w1 = &self.values[l.w1.clone()];
            let mut g_h = vec![0.0; 2 * dz];
            for (i, &ga) in g_a.iter().enumerate() {
                if ga == 0.0 {
                    continue;
                }
                let row = i * 2 * dz;
                for j in 0..2 * dz {
                    grad[l.w1.start + row + j] += ga * f.h[j];
                    g_h[j] += ga * w1[row + j];
                }
                grad[l.b1.start + i] += ga;
            }

            for (g_z, x) in [(&g_h[..dz], &ex.x_src), (&g_h[dz..], &ex.x_dst)] {
                for (i, &gz) in g_z.iter().enumerate() {
                    if gz == 0.0 {
                        continue;
                    }
                    let row = l.we.start + i * din;
                    for (j, xj) in x.iter().enumerate() {
                        grad[row + j] += gz * xj;
                    }
                    grad[l.be.start + i] += gz;
                }
            }
        }
        let loss = total * scale;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("loss or gradient diverged".into()));
        }
        Ok((loss, grad))
    }
}

fn sigmoid_unclamped(o: f64) -> f64 {
    if o >= 0.0 {
        1.0 / (1.0 + (-o).exp())
    } else {
        let e = o.exp();
        e / (1.0 + e)
    }
}

/// Link probability from two node embeddings; strictly inside `(0, 1)`.
pub fn score_pair(params: &ScorerParams, z_src: &[f64], z_dst: &[f64]) -> Result<f64> {
    let dz = params.shape.embed_dim;
    if z_src.len() != dz || z_dst.len() != dz {
        return Err(Error::DimensionMismatch {
            expected: dz,
            got: if z_src.len() != dz { z_src.len() } else { z_dst.len() },
        });
    }
    params.check_finite()?;
    let o = params.head(z_src, z_dst, None).o;
    if !o.is_finite() {
        return Err(Error::NonFinite("head logit".into()));
    }
    Ok(sigmoid(o))
}

/// Encoder input `[own || neighbor mean over S slots || elapsed-time encoding]`.
pub fn encoder_input(
    node: NodeId,
    t: Year,
    features: &[Vec<f64>],
    sample: &NeighborSample,
    time_dim: usize,
) -> Result<Vec<f64>> {
    let own = features
        .get(node.index())
        .ok_or_else(|| Error::invalid(format!("no features for node {node}")))?;
    let k = own.len();
    let slots = sample.neighbors.len() + sample.pad;
    let mut out = Vec::with_capacity(2 * k + time_dim);
    out.extend_from_slice(own);

    let mut mean = vec![0.0; k];
    for &(n, _) in &sample.neighbors {
        let f = &features[n.index()];
        if f.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: f.len(),
            });
        }
        mean.iter_mut().zip(f).for_each(|(m, x)| *m += x);
    }
    if slots > 0 {
        mean.iter_mut().for_each(|m| *m /= slots as f64);
    }
    out.extend(mean);

    if sample.neighbors.is_empty() {
        out.extend(std::iter::repeat(0.0).take(time_dim));
    } else {
        let latest = sample.neighbors.iter().map(|&(_, y)| y).max().expect("non-empty");
        let mean_gap =
            sample.neighbors.iter().map(|&(_, y)| (t - y) as f64).sum::<f64>() / sample.neighbors.len() as f64;
        out.extend(sinusoidal_encoding((t - latest) as f64, time_dim / 2)?);
        out.extend(sinusoidal_encoding(mean_gap, time_dim / 2)?);
    }
    Ok(out)
}

/// Node embedding `z` for `node` at `t` given its sampled neighbors.
pub fn encode_node(
    params: &ScorerParams,
    node: NodeId,
    t: Year,
    features: &[Vec<f64>],
    sample: &NeighborSample,
) -> Result<Vec<f64>> {
    if features.first().is_some_and(|f| f.len() != params.shape.feature_dim) {
        return Err(Error::DimensionMismatch {
            expected: params.shape.feature_dim,
            got: features[0].len(),
        });
    }
    params.encode(&encoder_input(node, t, features, sample, params.shape.time_dim)?)
}

/// Values recorded for encoder plugins (attention and walk based models);
/// the reference scorer does not read them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluginHyperparams {
    pub gnn_layers: usize,
    pub attention_heads: usize,
    pub walk_length: usize,
    pub walk_heads: usize,
    pub time_feature_dim: usize,
    pub position_feature_dim: usize,
    pub channel_embedding_dim: usize,
    pub patch_size: usize,
    pub max_input_sequence_length: usize,
}

impl Default for PluginHyperparams {
    fn default() -> Self {
        PluginHyperparams {
            gnn_layers: 2,
            attention_heads: 2,
            walk_length: 1,
            walk_heads: 8,
            time_feature_dim: 100,
            position_feature_dim: 172,
            channel_embedding_dim: 50,
            patch_size: 1,
            max_input_sequence_length: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub time_dim: usize,
    pub plugin: PluginHyperparams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            dropout: 0.1,
            max_epochs: 30,
            patience: 20,
            batch_size: 300,
            seed: 0,
            embed_dim: 64,
            hidden_dim: 64,
            time_dim: 8,
            plugin: PluginHyperparams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must be in [0, 1)"));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("max_epochs and batch_size must be positive"));
        }
        Ok(())
    }
}

/// Adaptive-moment optimizer with the usual decay constants.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// The reference scorer with its own interaction history.
#[derive(Debug, Clone)]
pub struct MlpScorer {
    params: ScorerParams,
    features: Arc<Vec<Vec<f64>>>,
    history: InteractionHistory,
    strategy: NeighborStrategy,
    budget: usize,
    alpha: f64,
    observed: Option<Year>,
}

impl MlpScorer {
    pub fn new(params: ScorerParams, features: Arc<Vec<Vec<f64>>>, sampler: &SamplerConfig) -> Result<Self> {
        sampler.validate()?;
        if let Some(bad) = features.iter().find(|f| f.len() != params.shape.feature_dim) {
            return Err(Error::DimensionMismatch {
                expected: params.shape.feature_dim,
                got: bad.len(),
            });
        }
        Ok(MlpScorer {
            history: InteractionHistory::new(features.len()),
            params,
            features,
            strategy: sampler.neighbor_strategy,
            budget: sampler.neighbor_budget,
            alpha: sampler.alpha,
            observed: None,
        })
    }

    pub fn params(&self) -> &ScorerParams {
        &self.params
    }

    fn input(&self, node: NodeId, t: Year, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let sample = sample_neighbors(
            t,
            self.history.before(node, t),
            self.strategy,
            self.budget,
            self.alpha,
            rng,
        )?;
        encoder_input(node, t, &self.features, &sample, self.params.shape.time_dim)
    }
}

impl LinkScorer for MlpScorer {
    fn name(&self) -> String {
        "mlp".into()
    }

    fn observe(&mut self, year: Year, events: &[EdgeEvent]) -> Result<()> {
        if self.observed.is_some_and(|y| year <= y) {
            return Err(Error::invalid(format!("year {year} observed out of order")));
        }
        self.history.observe(events)?;
        self.observed = Some(year);
        Ok(())
    }

    fn observed_through(&self) -> Option<Year> {
        self.observed
    }

    fn score(&self, t: Year, pairs: &[(NodeId, NodeId)], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if let Some(y) = self.observed.filter(|&y| y >= t) {
            return Err(Error::TemporalLeakage { found: y, query: t });
        }
        pairs
            .iter()
            .map(|&(u, v)| {
                let zu = self.params.encode(&self.input(u, t, rng)?)?;
                let zv = self.params.encode(&self.input(v, t, rng)?)?;
                score_pair(&self.params, &zu, &zv)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub val_ap: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the best validation AP.
    pub params: ScorerParams,
    pub best_epoch: usize,
    pub best_val_ap: f64,
    pub log: Vec<EpochLog>,
}

impl TrainOutcome {
    pub fn write_log_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,loss,val_ap")?;
        for e in &self.log {
            writeln!(w, "{},{},{}", e.epoch, e.loss, e.val_ap)?;
        }
        Ok(())
    }
}

/// Trains the reference scorer on chronological batches of the train split
/// with random-destination negatives, selecting the epoch with the best
/// validation AP. Training stops once `patience` epochs pass without a
/// validation improvement (so `patience = 0` trains exactly one epoch).
pub fn train(
    graph: &TemporalGraph,
    manifest: &SplitManifest,
    features: Arc<Vec<Vec<f64>>>,
    cfg: &TrainConfig,
    sampler: &SamplerConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    sampler.validate()?;
    let streams = graph.split(manifest)?;
    let val_range = manifest
        .val
        .ok_or_else(|| Error::InvalidManifest("training needs a validation range".into()))?;
    if streams.train.is_empty() {
        return Err(Error::Empty("train stream".into()));
    }
    if streams.val.is_empty() {
        return Err(Error::Empty("validation stream".into()));
    }
    if features.len() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            got: features.len(),
        });
    }
    let feature_dim = features.first().map_or(0, Vec::len);
    let shape = ScorerShape {
        feature_dim,
        time_dim: cfg.time_dim,
        embed_dim: cfg.embed_dim,
        hidden_dim: cfg.hidden_dim,
        linear_head: false,
    };
    let mut params = ScorerParams::init(shape, cfg.seed)?;
    let mut adam = Adam::new(cfg.learning_rate, params.values.len());
    let pools = NegativePools::new(graph.vertex_count(), streams.train, streams.val, &[]);
    let val_cfg = EvalConfig {
        regimes: vec![NegativeRegime::Random],
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        negatives_per_positive: sampler.negatives_per_positive,
    };

    let mut log = Vec::new();
    let mut best: Option<(usize, f64, ScorerParams)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        let mut scorer = MlpScorer::new(params.clone(), features.clone(), sampler)?;
        for y in graph.horizon().start..manifest.train.start {
            scorer.observe(y, graph.events_in(y))?;
        }
        let mut batch_index = 0u64;
        let mut losses = Vec::new();
        for y in manifest.train.years() {
            let events = graph.events_in(y);
            for chunk in events.chunks(cfg.batch_size) {
                let mut rng = derive_rng(cfg.seed, ((epoch as u64) << 32) | batch_index);
                batch_index += 1;
                let mut batch = Vec::with_capacity(chunk.len() * (1 + sampler.negatives_per_positive));
                for e in chunk {
                    let x_src = scorer.input(e.u, y, &mut rng)?;
                    let x_dst = scorer.input(e.v, y, &mut rng)?;
                    let negatives = pools.sample_negatives(
                        e.u,
                        e.v,
                        y,
                        NegativeRegime::Random,
                        sampler.negatives_per_positive,
                        &mut rng,
                    )?;
                    for neg in negatives {
                        batch.push(Example {
                            x_src: x_src.clone(),
                            x_dst: scorer.input(neg.dst, y, &mut rng)?,
                            label: 0.0,
                        });
                    }
                    batch.push(Example {
                        x_src,
                        x_dst,
                        label: 1.0,
                    });
                }
                let (loss, grad) = scorer.params.loss_and_grad(&batch, Some((cfg.dropout, &mut rng)))?;
                adam.step(&mut scorer.params.values, &grad);
                losses.push(loss);
            }
            scorer.observe(y, events)?;
        }
        params = scorer.params.clone();

        let report = evaluate(&mut scorer, graph, graph.events_between(val_range), &pools, &val_cfg)?;
        let val_ap = report.regimes[0].mean_ap;
        let loss = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
        log::info!("epoch {epoch}: loss {loss:.6} val AP {val_ap:.4}");
        log.push(EpochLog { epoch, loss, val_ap });

        if best.as_ref().map_or(true, |(_, ap, _)| val_ap > *ap) {
            best = Some((epoch, val_ap, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= cfg.patience {
            break;
        }
    }
    let (best_epoch, best_val_ap, params) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_ap,
        log,
    })
}

/// Serialized trained scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: ScorerParams,
    pub train: TrainConfig,
    pub sampler: SamplerConfig,
    pub best_epoch: usize,
    pub best_val_ap: f64,
}

impl Checkpoint {
    pub fn into_scorer(self, features: Arc<Vec<Vec<f64>>>) -> Result<MlpScorer> {
        MlpScorer::new(self.params, features, &self.sampler)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub worst_index: usize,
}

/// Compares analytic gradients to central differences (step `1e-5`) on up to
/// `coords` randomly chosen parameters. Coordinates whose analytic and
/// numeric values differ by less than `1e-8` absolute count as exact.
pub fn gradient_check(params: &ScorerParams, batch: &[Example], coords: usize, seed: u64) -> Result<GradCheckReport> {
    const STEP: f64 = 1e-5;
    const ABS_FLOOR: f64 = 1e-8;
    let (_, analytic) = params.loss_and_grad(batch, None)?;
    let n = params.values.len();
    let mut rng = derive_rng(seed, 0);
    let chosen: Vec<usize> = if coords >= n {
        (0..n).collect()
    } else {
        rand::seq::index::sample(&mut rng, n, coords).into_vec()
    };
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst_index: 0,
    };
    for i in chosen {
        let orig = probe.values[i];
        probe.values[i] = orig + STEP;
        let plus = probe.loss(batch)?;
        probe.values[i] = orig - STEP;
        let minus = probe.loss(batch)?;
        probe.values[i] = orig;
        let numeric = (plus - minus) / (2.0 * STEP);
        let diff = (analytic[i] - numeric).abs();
        let rel = if diff < ABS_FLOOR {
            0.0
        } else {
            diff / analytic[i].abs().max(numeric.abs())
        };
        report.checked += 1;
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    Ok(report)
}
