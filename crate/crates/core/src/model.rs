//! Two-layer evidence heads and their softmax twins, trained by minibatch
//! gradient descent.
//!
//! Both heads share the same body: `hidden = tanh(x W1 + b1)`,
//! `logits = hidden W2 + b2`. An evidence head squashes the logits with a
//! non-negative activation; the softmax twin normalizes them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, PairedSample, Split};
use crate::error::{check_len, Error, Result};
use crate::fusion::{fuse_evidence, fuse_evidence_backward, ProbVector};
use crate::loss::{reciprocal_grad, reciprocal_terms};
use crate::opinion::{argmax, Evidence};
use crate::rng::Stream;

pub const MODEL_FORMAT_VERSION: &str = "evifuse-model-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Relu,
    #[default]
    Softplus,
}

impl OutputActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Relu => z.max(0.0),
            OutputActivation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            OutputActivation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            OutputActivation::Softplus => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

/// Which view a single-view model reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    A,
    B,
}

impl View {
    pub fn features(self, s: &PairedSample) -> &[f64] {
        match self {
            View::A => &s.x_a,
            View::B => &s.x_b,
        }
    }
}

/// Parameters of the shared two-layer body. Matrices are row-major:
/// `w1` is D×H, `w2` is H×K.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients with the same layout as [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: vec![0.0; net.b2.len()],
        }
    }

    fn parts_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// All gradients flattened in w1, b1, w2, b2 order.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2].into_iter().flatten().copied().collect()
    }
}

struct Activations {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Mlp {
            input_dim,
            hidden_dim,
            num_classes,
            w1: vec![0.0; input_dim * hidden_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; hidden_dim * num_classes],
            b2: vec![0.0; num_classes],
        }
    }

    /// Uniform in [−1/√fan_in, 1/√fan_in] for weights and biases alike,
    /// filled in w1, b1, w2, b2 order.
    pub fn init(input_dim: usize, hidden_dim: usize, num_classes: usize, rng: &mut Stream) -> Self {
        let mut net = Mlp::zeros(input_dim, hidden_dim, num_classes);
        let s1 = 1.0 / (input_dim as f64).sqrt();
        let s2 = 1.0 / (hidden_dim as f64).sqrt();
        for v in net.w1.iter_mut().chain(net.b1.iter_mut()) {
            *v = rng.uniform_range(-s1, s1);
        }
        for v in net.w2.iter_mut().chain(net.b2.iter_mut()) {
            *v = rng.uniform_range(-s2, s2);
        }
        net
    }

    fn validate(&self) -> Result<()> {
        let (d, h, k) = (self.input_dim, self.hidden_dim, self.num_classes);
        if d == 0 || h == 0 || k < 2 {
            return Err(Error::config("model dimensions must be positive with at least 2 classes"));
        }
        check_len(d * h, self.w1.len())?;
        check_len(h, self.b1.len())?;
        check_len(h * k, self.w2.len())?;
        check_len(k, self.b2.len())?;
        if self.parameters().any(|v| !v.is_finite()) {
            return Err(Error::domain("model parameters must be finite"));
        }
        Ok(())
    }

    fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    fn parts_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn activations(&self, x: &[f64]) -> Activations {
        let h = self.hidden_dim;
        let mut hidden = self.b1.clone();
        for (i, xi) in x.iter().enumerate() {
            let row = &self.w1[i * h..(i + 1) * h];
            for (acc, w) in hidden.iter_mut().zip(row) {
                *acc += xi * w;
            }
        }
        for v in hidden.iter_mut() {
            *v = v.tanh();
        }
        let k = self.num_classes;
        let mut logits = self.b2.clone();
        for (j, hj) in hidden.iter().enumerate() {
            let row = &self.w2[j * k..(j + 1) * k];
            for (acc, w) in logits.iter_mut().zip(row) {
                *acc += hj * w;
            }
        }
        Activations { hidden, logits }
    }

    /// Accumulates parameter gradients given ∂L/∂logits.
    fn accumulate(&self, x: &[f64], act: &Activations, grad_logits: &[f64], out: &mut Gradients) {
        let (h, k) = (self.hidden_dim, self.num_classes);
        let mut grad_hidden = vec![0.0; h];
        for j in 0..h {
            let row = &self.w2[j * k..(j + 1) * k];
            let grow = &mut out.w2[j * k..(j + 1) * k];
            for c in 0..k {
                grow[c] += act.hidden[j] * grad_logits[c];
                grad_hidden[j] += row[c] * grad_logits[c];
            }
        }
        for (b, g) in out.b2.iter_mut().zip(grad_logits) {
            *b += g;
        }
        for (g, a) in grad_hidden.iter_mut().zip(&act.hidden) {
            *g *= 1.0 - a * a;
        }
        for (i, xi) in x.iter().enumerate() {
            let grow = &mut out.w1[i * h..(i + 1) * h];
            for (acc, g) in grow.iter_mut().zip(&grad_hidden) {
                *acc += xi * g;
            }
        }
        for (b, g) in out.b1.iter_mut().zip(&grad_hidden) {
            *b += g;
        }
    }

    fn step(&mut self, grads: &Gradients, rate: f64) {
        let mut grads = grads.clone();
        for (p, g) in self.parts_mut().into_iter().zip(grads.parts_mut()) {
            for (v, d) in p.iter_mut().zip(g.iter()) {
                *v -= rate * d;
            }
        }
    }
}

/// A view head whose output is non-negative per-class evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceHead {
    pub net: Mlp,
    pub activation: OutputActivation,
}

impl EvidenceHead {
    pub fn new(net: Mlp, activation: OutputActivation) -> Result<Self> {
        net.validate()?;
        Ok(EvidenceHead { net, activation })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Evidence> {
        check_len(self.net.input_dim, x.len())?;
        Evidence::new(self.forward_raw(x))
    }

    fn forward_raw(&self, x: &[f64]) -> Vec<f64> {
        let act = self.net.activations(x);
        act.logits.iter().map(|z| self.activation.apply(*z)).collect()
    }

    /// Parameter gradients for upstream gradient ∂L/∂evidence at input `x`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Gradients> {
        check_len(self.net.input_dim, x.len())?;
        check_len(self.net.num_classes, upstream.len())?;
        let mut out = Gradients::zeros_like(&self.net);
        let act = self.net.activations(x);
        self.accumulate(x, &act, upstream, &mut out);
        Ok(out)
    }

    fn accumulate(&self, x: &[f64], act: &Activations, upstream: &[f64], out: &mut Gradients) {
        let grad_logits: Vec<f64> =
            act.logits.iter().zip(upstream).map(|(z, g)| g * self.activation.derivative(*z)).collect();
        self.net.accumulate(x, act, &grad_logits, out);
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Single-view classifier with a softmax output, trained with cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    pub net: Mlp,
    pub view: View,
}

impl SoftmaxClassifier {
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbVector> {
        check_len(self.net.input_dim, x.len())?;
        ProbVector::new(softmax(&self.net.activations(x).logits))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(self.predict_proba(x)?.probs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Constant,
    #[default]
    Cosine,
}

fn default_hidden_dim() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub step_size: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default)]
    pub activation: OutputActivation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            step_size: 0.01,
            epochs: 200,
            batch_size: 128,
            seed: 0,
            schedule: Schedule::Cosine,
            hidden_dim: default_hidden_dim(),
            activation: OutputActivation::Softplus,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::config("step_size must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::config("hidden_dim must be positive"));
        }
        Ok(())
    }

    /// Step size for a zero-based epoch.
    pub fn rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.step_size,
            Schedule::Cosine => {
                let t = epoch as f64 / self.epochs as f64;
                0.5 * self.step_size * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample global loss over the epoch's minibatches.
    pub global_loss: f64,
    pub loss_a: f64,
    pub loss_b: f64,
    pub loss_fused: f64,
    /// Accuracy of the fused prediction on the validation split.
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPair {
    pub head_a: EvidenceHead,
    pub head_b: EvidenceHead,
    pub history: Vec<EpochRecord>,
}

impl TrainedPair {
    /// Fused evidence for one sample.
    pub fn fused_evidence(&self, s: &PairedSample) -> Vec<f64> {
        fuse_evidence(&self.head_a.forward_raw(&s.x_a), &self.head_b.forward_raw(&s.x_b))
    }
}

/// Per-sample losses and gradients of the global objective.
pub struct GlobalStep {
    pub loss_a: f64,
    pub loss_b: f64,
    pub loss_fused: f64,
    pub grad_a: Gradients,
    pub grad_b: Gradients,
}

/// Forward and reverse pass of `L_a + L_b + L_fused` for a single sample:
/// heads → evidence → opinions → fusion → fused evidence → Dirichlet → loss.
pub fn global_step(head_a: &EvidenceHead, head_b: &EvidenceHead, sample: &PairedSample) -> Result<GlobalStep> {
    let k = head_a.net.num_classes;
    check_len(k, head_b.net.num_classes)?;
    check_len(head_a.net.input_dim, sample.x_a.len())?;
    check_len(head_b.net.input_dim, sample.x_b.len())?;
    if sample.label >= k {
        return Err(Error::Label(format!("label {} out of range for {k} classes", sample.label)));
    }
    let mut grad_a = Gradients::zeros_like(&head_a.net);
    let mut grad_b = Gradients::zeros_like(&head_b.net);
    let (la, lb, lf) = accumulate_global(head_a, head_b, sample, &mut grad_a, &mut grad_b);
    Ok(GlobalStep { loss_a: la, loss_b: lb, loss_fused: lf, grad_a, grad_b })
}

fn alpha_of(e: &[f64]) -> Vec<f64> {
    e.iter().map(|v| v + 1.0).collect()
}

fn accumulate_global(
    head_a: &EvidenceHead,
    head_b: &EvidenceHead,
    sample: &PairedSample,
    grad_a: &mut Gradients,
    grad_b: &mut Gradients,
) -> (f64, f64, f64) {
    let y = sample.label;
    let act_a = head_a.net.activations(&sample.x_a);
    let act_b = head_b.net.activations(&sample.x_b);
    let e_a: Vec<f64> = act_a.logits.iter().map(|z| head_a.activation.apply(*z)).collect();
    let e_b: Vec<f64> = act_b.logits.iter().map(|z| head_b.activation.apply(*z)).collect();
    let e_f = fuse_evidence(&e_a, &e_b);

    let (alpha_a, alpha_b, alpha_f) = (alpha_of(&e_a), alpha_of(&e_b), alpha_of(&e_f));
    let la = reciprocal_terms(&alpha_a, y).total;
    let lb = reciprocal_terms(&alpha_b, y).total;
    let lf = reciprocal_terms(&alpha_f, y).total;

    // ∂α/∂e = 1, so loss gradients over α are gradients over evidence
    let g_f = reciprocal_grad(&alpha_f, y);
    let (via_a, via_b) = fuse_evidence_backward(&e_a, &e_b, &g_f);
    let up_a: Vec<f64> = reciprocal_grad(&alpha_a, y).iter().zip(&via_a).map(|(x, z)| x + z).collect();
    let up_b: Vec<f64> = reciprocal_grad(&alpha_b, y).iter().zip(&via_b).map(|(x, z)| x + z).collect();
    head_a.accumulate(&sample.x_a, &act_a, &up_a, grad_a);
    head_b.accumulate(&sample.x_b, &act_b, &up_b, grad_b);
    (la, lb, lf)
}

fn check_dataset(data: &Dataset) -> Result<Vec<&PairedSample>> {
    if data.num_classes() < 2 {
        return Err(Error::config("dataset needs at least 2 classes"));
    }
    let train = data.subset(Split::Train);
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(train)
}

const STREAM_INIT_A: u64 = 0;
const STREAM_INIT_B: u64 = 1;
const STREAM_SHUFFLE_PAIR: u64 = 2;
const STREAM_INIT_SOFTMAX: u64 = 16;
const STREAM_SHUFFLE_SOFTMAX: u64 = 32;

/// Trains both evidence heads end to end on the global loss.
pub fn train_pair(data: &Dataset, cfg: &TrainConfig) -> Result<TrainedPair> {
    cfg.validate()?;
    let train = check_dataset(data)?;
    let val = data.subset(Split::Val);
    let (d, h, k) = (data.dim(), cfg.hidden_dim, data.num_classes());
    let root = Stream::new(cfg.seed);
    let mut head_a = EvidenceHead::new(Mlp::init(d, h, k, &mut root.split(STREAM_INIT_A)), cfg.activation)?;
    let mut head_b = EvidenceHead::new(Mlp::init(d, h, k, &mut root.split(STREAM_INIT_B)), cfg.activation)?;
    let mut shuffler = root.split(STREAM_SHUFFLE_PAIR);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let rate = cfg.rate_at(epoch);
        shuffler.shuffle(&mut order);
        let (mut sum_a, mut sum_b, mut sum_f) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad_a = Gradients::zeros_like(&head_a.net);
            let mut grad_b = Gradients::zeros_like(&head_b.net);
            for &i in batch {
                let (la, lb, lf) = accumulate_global(&head_a, &head_b, train[i], &mut grad_a, &mut grad_b);
                sum_a += la;
                sum_b += lb;
                sum_f += lf;
            }
            let scaled = rate / batch.len() as f64;
            head_a.net.step(&grad_a, scaled);
            head_b.net.step(&grad_b, scaled);
        }
        let n = train.len() as f64;
        let pair = TrainedPair { head_a, head_b, history: Vec::new() };
        let val_accuracy = if val.is_empty() {
            f64::NAN
        } else {
            val.iter().filter(|s| argmax(&pair.fused_evidence(s)) == s.label).count() as f64 / val.len() as f64
        };
        (head_a, head_b) = (pair.head_a, pair.head_b);
        if head_a.net.parameters().chain(head_b.net.parameters()).any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("training diverged at epoch {epoch}")));
        }
        history.push(EpochRecord {
            epoch,
            global_loss: (sum_a + sum_b + sum_f) / n,
            loss_a: sum_a / n,
            loss_b: sum_b / n,
            loss_fused: sum_f / n,
            val_accuracy,
        });
    }
    Ok(TrainedPair { head_a, head_b, history })
}

/// Trains a softmax/cross-entropy classifier on one view.
pub fn train_softmax_baseline(data: &Dataset, cfg: &TrainConfig, view: View) -> Result<SoftmaxClassifier> {
    cfg.validate()?;
    let train = check_dataset(data)?;
    let (d, h, k) = (data.dim(), cfg.hidden_dim, data.num_classes());
    let offset = match view {
        View::A => 0,
        View::B => 1,
    };
    let root = Stream::new(cfg.seed);
    let mut net = Mlp::init(d, h, k, &mut root.split(STREAM_INIT_SOFTMAX + offset));
    net.validate()?;
    let mut shuffler = root.split(STREAM_SHUFFLE_SOFTMAX + offset);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        let rate = cfg.rate_at(epoch);
        shuffler.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&net);
            for &i in batch {
                let s = train[i];
                let x = view.features(s);
                let act = net.activations(x);
                let mut g = softmax(&act.logits);
                g[s.label] -= 1.0;
                net.accumulate(x, &act, &g, &mut grads);
            }
            net.step(&grads, rate / batch.len() as f64);
        }
        if net.parameters().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("training diverged at epoch {epoch}")));
        }
    }
    Ok(SoftmaxClassifier { net, view })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Evidence,
    Softmax,
}

/// On-disk model: explicit shapes with row-major data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    version: String,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<OutputActivation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<View>,
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
}

impl ModelFile {
    fn from_net(net: &Mlp, kind: ModelKind, activation: Option<OutputActivation>, view: Option<View>) -> Self {
        let (d, h, k) = (net.input_dim, net.hidden_dim, net.num_classes);
        ModelFile {
            version: MODEL_FORMAT_VERSION.to_string(),
            kind,
            activation,
            view,
            w1: Tensor { shape: vec![d, h], data: net.w1.clone() },
            b1: Tensor { shape: vec![h], data: net.b1.clone() },
            w2: Tensor { shape: vec![h, k], data: net.w2.clone() },
            b2: Tensor { shape: vec![k], data: net.b2.clone() },
        }
    }

    fn to_net(&self) -> Result<Mlp> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::config(format!("unsupported model version {:?}", self.version)));
        }
        let [d, h] = self.w1.shape[..] else {
            return Err(Error::config("w1 must be two-dimensional"));
        };
        let [h2, k] = self.w2.shape[..] else {
            return Err(Error::config("w2 must be two-dimensional"));
        };
        check_len(h, h2)?;
        check_len(h, *self.b1.shape.first().unwrap_or(&0))?;
        check_len(k, *self.b2.shape.first().unwrap_or(&0))?;
        let net = Mlp {
            input_dim: d,
            hidden_dim: h,
            num_classes: k,
            w1: self.w1.data.clone(),
            b1: self.b1.data.clone(),
            w2: self.w2.data.clone(),
            b2: self.b2.data.clone(),
        };
        net.validate()?;
        Ok(net)
    }

    pub fn from_evidence_head(head: &EvidenceHead) -> Self {
        ModelFile::from_net(&head.net, ModelKind::Evidence, Some(head.activation), None)
    }

    pub fn from_softmax(model: &SoftmaxClassifier) -> Self {
        ModelFile::from_net(&model.net, ModelKind::Softmax, None, Some(model.view))
    }

    pub fn to_evidence_head(&self) -> Result<EvidenceHead> {
        if self.kind != ModelKind::Evidence {
            return Err(Error::config("model file does not hold an evidence head"));
        }
        EvidenceHead::new(self.to_net()?, self.activation.unwrap_or_default())
    }

    pub fn to_softmax(&self) -> Result<SoftmaxClassifier> {
        if self.kind != ModelKind::Softmax {
            return Err(Error::config("model file does not hold a softmax classifier"));
        }
        Ok(SoftmaxClassifier { net: self.to_net()?, view: self.view.unwrap_or(View::A) })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GenConfig};

    #[test]
    fn zero_parameters() {
        let head = EvidenceHead::new(Mlp::zeros(4, 3, 3), OutputActivation::Softplus).unwrap();
        let e = head.forward(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(e.values().iter().all(|v| (v - 2f64.ln()).abs() < 1e-15));
        let head = EvidenceHead::new(Mlp::zeros(4, 3, 3), OutputActivation::Relu).unwrap();
        let e = head.forward(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(e.values().iter().all(|v| *v == 0.0));
        assert_eq!(e.to_opinion().uncertainty(), 1.0);
    }

    #[test]
    fn seeded_forward_is_reproducible() {
        let make = || EvidenceHead::new(Mlp::init(4, 8, 3, &mut Stream::new(9)), OutputActivation::Softplus).unwrap();
        let x = [0.3, -0.7, 1.1, 0.0];
        let a = make().forward(&x).unwrap();
        let b = make().forward(&x).unwrap();
        let bits = |e: &Evidence| e.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn dimension_mismatch() {
        let head = EvidenceHead::new(Mlp::zeros(4, 3, 3), OutputActivation::Softplus).unwrap();
        assert!(head.forward(&[1.0; 3]).is_err());
        assert!(head.backward(&[1.0; 4], &[1.0; 2]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let head = EvidenceHead::new(Mlp::init(4, 8, 3, &mut Stream::new(1)), OutputActivation::Softplus).unwrap();
        let g = head.backward(&[0.1, 0.2, 0.3, 0.4], &[0.0; 3]).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn relu_dead_unit_has_no_output_weight_gradient() {
        let mut net = Mlp::init(4, 8, 3, &mut Stream::new(2));
        net.b2[1] = -100.0;
        let head = EvidenceHead::new(net, OutputActivation::Relu).unwrap();
        let g = head.backward(&[0.1, 0.2, 0.3, 0.4], &[1.0, 1.0, 1.0]).unwrap();
        for j in 0..8 {
            assert_eq!(g.w2[j * 3 + 1], 0.0);
        }
        assert_eq!(g.b2[1], 0.0);
    }

    #[test]
    fn config_validation() {
        let ds = generate(&GenConfig { num_classes: 3, dim: 4, num_samples: 50, ..GenConfig::default() }).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train_pair(&ds, &cfg).unwrap_err().is_config());
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(train_softmax_baseline(&ds, &cfg, View::A).unwrap_err().is_config());
        let cfg = TrainConfig { step_size: -1.0, ..TrainConfig::default() };
        assert!(train_pair(&ds, &cfg).is_err());
    }

    #[test]
    fn cosine_schedule() {
        let cfg = TrainConfig { step_size: 0.2, epochs: 4, ..TrainConfig::default() };
        assert_eq!(cfg.rate_at(0), 0.2);
        assert!((cfg.rate_at(2) - 0.1).abs() < 1e-15);
        let cfg = TrainConfig { schedule: Schedule::Constant, ..cfg };
        assert_eq!(cfg.rate_at(3), 0.2);
    }

    #[test]
    fn model_file_round_trip() {
        let head = EvidenceHead::new(Mlp::init(4, 8, 3, &mut Stream::new(5)), OutputActivation::Relu).unwrap();
        let file = ModelFile::from_evidence_head(&head);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"version\":\"evifuse-model-v1\""));
        assert!(json.contains("\"shape\":[4,8]"));
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_evidence_head().unwrap(), head);
        assert!(back.to_softmax().is_err());
        let bad = json.replace("evifuse-model-v1", "evifuse-model-v0");
        assert!(serde_json::from_str::<ModelFile>(&bad).unwrap().to_evidence_head().is_err());
    }
}
