//! Trainability probe: a small weight-shared classifier.
//!
//! ```text
//! image ─ M×M blocks ─▶ shared affine (d1) ─ ReLU ─▶ 3×3 conv on the block grid (d2) ─ ReLU
//!       ─▶ flatten ─▶ affine (C) ─▶ softmax
//! ```
//!
//! The first layer sees each block through the same weights, exactly like a
//! convolution with an M×M kernel and stride M. Everything is `f64` and runs
//! in a fixed order, so training is bit-reproducible for a given seed.
//!
//! Parameters live in one flat vector; [`ParamLayout`] names the ranges:
//!
//! * `w1`: `d1 × 3M²`, inputs ordered `channel·M² + row·M + col`
//! * `w2`: `d2 × 9 × d1`, tap index `ky·3 + kx`
//! * `w3`: `C × (cells·d2)`, features ordered `cell·d2 + channel`

use std::fmt::Write as _;
use std::ops::Range;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::image::ImageU8;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub block: usize,
    pub embed_width: usize,
    pub mix_width: usize,
    pub classes: usize,
    pub learning_rate: f64,
    /// Multiplier applied at each epoch listed in `decay_epochs`.
    pub lr_decay: f64,
    pub decay_epochs: Vec<usize>,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            block: 4,
            embed_width: 64,
            mix_width: 32,
            classes: 10,
            learning_rate: 0.05,
            lr_decay: 0.1,
            decay_epochs: vec![20],
            momentum: 0.9,
            batch_size: 128,
            epochs: 30,
            seed: 0,
            train_size: 5000,
            test_size: 1000,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("block", self.block),
            ("embed width", self.embed_width),
            ("mix width", self.mix_width),
            ("classes", self.classes),
            ("batch size", self.batch_size),
            ("epochs", self.epochs),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(
                "learning rate must be finite and >= 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return Err(Error::Config("lr decay must be positive".into()));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let decays = self.decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.learning_rate * self.lr_decay.powi(decays as i32)
    }
}

/// Offsets of each tensor in the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
    pub w3: Range<usize>,
    pub b3: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Shape {
    block: usize,
    rows: usize,
    cols: usize,
    d1: usize,
    d2: usize,
    classes: usize,
}

impl Shape {
    fn block_inputs(&self) -> usize {
        3 * self.block * self.block
    }

    fn cells(&self) -> usize {
        self.rows * self.cols
    }

    fn layout(&self) -> ParamLayout {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        ParamLayout {
            w1: take(self.d1 * self.block_inputs()),
            b1: take(self.d1),
            w2: take(self.d2 * 9 * self.d1),
            b2: take(self.d2),
            w3: take(self.classes * self.cells() * self.d2),
            b3: take(self.classes),
        }
    }
}

/// An image rearranged block by block and scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeInput(Vec<f64>);

/// Prepared inputs with their labels.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    inputs: Vec<ProbeInput>,
    labels: Vec<u8>,
}

impl ProbeSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeModel {
    shape: Shape,
    layout: ParamLayout,
    params: Vec<f64>,
}

struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
    probs: Vec<f64>,
}

impl ProbeModel {
    /// Uniform `±sqrt(6 / fan_in)` for the first two layers; head and biases zero.
    pub fn init(cfg: &ProbeConfig, width: usize, height: usize) -> Result<Self> {
        cfg.validate()?;
        if !width.is_multiple_of(cfg.block)
            || !height.is_multiple_of(cfg.block)
            || width == 0
            || height == 0
        {
            return Err(Error::Dimension {
                width,
                height,
                block: cfg.block,
            });
        }
        let shape = Shape {
            block: cfg.block,
            rows: height / cfg.block,
            cols: width / cfg.block,
            d1: cfg.embed_width,
            d2: cfg.mix_width,
            classes: cfg.classes,
        };
        let layout = shape.layout();
        let mut params = vec![0.0; layout.b3.end];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for (range, fan_in) in [
            (layout.w1.clone(), shape.block_inputs()),
            (layout.w2.clone(), 9 * shape.d1),
        ] {
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self {
            shape,
            layout,
            params,
        })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn classes(&self) -> usize {
        self.shape.classes
    }

    pub fn prepare(&self, img: &ImageU8) -> Result<ProbeInput> {
        let s = &self.shape;
        let m = s.block;
        if img.width() != s.cols * m || img.height() != s.rows * m {
            return Err(Error::Dimension {
                width: img.width(),
                height: img.height(),
                block: m,
            });
        }
        let per = s.block_inputs();
        let mut v = vec![0.0; s.cells() * per];
        for gi in 0..s.rows {
            for gj in 0..s.cols {
                let cell = &mut v[(gi * s.cols + gj) * per..][..per];
                for r in 0..m {
                    for c in 0..m {
                        let px = img.pixel(gj * m + c, gi * m + r);
                        for k in 0..3 {
                            cell[k * m * m + r * m + c] = px[k] as f64 / 255.0;
                        }
                    }
                }
            }
        }
        Ok(ProbeInput(v))
    }

    pub fn prepare_set(&self, ds: &LabeledDataset) -> Result<ProbeSet> {
        if let Some(&bad) = ds
            .labels
            .iter()
            .find(|&&l| l as usize >= self.shape.classes)
        {
            return Err(Error::BadLabel {
                index: ds.labels.iter().position(|&l| l == bad).unwrap_or(0),
                label: bad,
                classes: self.shape.classes,
            });
        }
        let inputs = ds
            .images
            .iter()
            .map(|img| self.prepare(img))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProbeSet {
            inputs,
            labels: ds.labels.clone(),
        })
    }

    fn forward_cached(&self, input: &ProbeInput) -> Activations {
        let s = &self.shape;
        let l = &self.layout;
        let p = &self.params;
        let (w1, b1) = (&p[l.w1.clone()], &p[l.b1.clone()]);
        let (w2, b2) = (&p[l.w2.clone()], &p[l.b2.clone()]);
        let (w3, b3) = (&p[l.w3.clone()], &p[l.b3.clone()]);
        let per = s.block_inputs();

        let mut h1 = vec![0.0; s.cells() * s.d1];
        for (cell, out) in h1.chunks_exact_mut(s.d1).enumerate() {
            let x = &input.0[cell * per..(cell + 1) * per];
            for (o, h) in out.iter_mut().enumerate() {
                *h = relu(b1[o] + dot(&w1[o * per..(o + 1) * per], x));
            }
        }

        let mut h2 = vec![0.0; s.cells() * s.d2];
        for gi in 0..s.rows {
            for gj in 0..s.cols {
                let cell = gi * s.cols + gj;
                let out = &mut h2[cell * s.d2..(cell + 1) * s.d2];
                out.copy_from_slice(b2);
                for (tap, ncell) in neighbours(s, gi, gj) {
                    let hn = &h1[ncell * s.d1..(ncell + 1) * s.d1];
                    for (o, z) in out.iter_mut().enumerate() {
                        *z += dot(&w2[(o * 9 + tap) * s.d1..][..s.d1], hn);
                    }
                }
                out.iter_mut().for_each(|z| *z = relu(*z));
            }
        }

        let feat = h2.len();
        let mut logits: Vec<f64> = (0..s.classes)
            .map(|k| b3[k] + dot(&w3[k * feat..(k + 1) * feat], &h2))
            .collect();
        softmax_in_place(&mut logits);
        Activations {
            h1,
            h2,
            probs: logits,
        }
    }

    /// Class probabilities for one prepared input.
    pub fn forward(&self, input: &ProbeInput) -> Vec<f64> {
        self.forward_cached(input).probs
    }

    pub fn predict(&self, img: &ImageU8) -> Result<Vec<f64>> {
        Ok(self.forward(&self.prepare(img)?))
    }

    /// Mean cross-entropy over `indices` of `set`.
    pub fn loss(&self, set: &ProbeSet, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let total: f64 = indices
            .iter()
            .map(|&i| cross_entropy(&self.forward(&set.inputs[i]), set.labels[i]))
            .sum();
        Ok(total / indices.len() as f64)
    }

    /// Mean cross-entropy and its gradient (same layout as [`Self::params`]).
    pub fn loss_and_grad(&self, set: &ProbeSet, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
        if indices.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        for &i in indices {
            total += self.accumulate_grad(&set.inputs[i], set.labels[i], &mut grad);
        }
        let scale = 1.0 / indices.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((total * scale, grad))
    }

    /// Adds this sample's gradient into `grad` and returns its loss.
    fn accumulate_grad(&self, input: &ProbeInput, label: u8, grad: &mut [f64]) -> f64 {
        let s = &self.shape;
        let l = &self.layout;
        let p = &self.params;
        let act = self.forward_cached(input);
        let loss = cross_entropy(&act.probs, label);
        let per = s.block_inputs();
        let feat = act.h2.len();

        let mut dlogits = act.probs;
        dlogits[label as usize] -= 1.0;

        let (g_w1, rest) = grad.split_at_mut(l.b1.start);
        let (g_b1, rest) = rest.split_at_mut(l.w2.start - l.b1.start);
        let (g_w2, rest) = rest.split_at_mut(l.b2.start - l.w2.start);
        let (g_b2, rest) = rest.split_at_mut(l.w3.start - l.b2.start);
        let (g_w3, g_b3) = rest.split_at_mut(l.b3.start - l.w3.start);

        let w3 = &p[l.w3.clone()];
        let mut dh2 = vec![0.0; feat];
        for (k, &d) in dlogits.iter().enumerate() {
            g_b3[k] += d;
            axpy(d, &act.h2, &mut g_w3[k * feat..(k + 1) * feat]);
            axpy(d, &w3[k * feat..(k + 1) * feat], &mut dh2);
        }
        // ReLU: gradient passes where the activation is positive
        for (d, &h) in dh2.iter_mut().zip(&act.h2) {
            if h <= 0.0 {
                *d = 0.0;
            }
        }

        let w2 = &p[l.w2.clone()];
        let mut dh1 = vec![0.0; act.h1.len()];
        for gi in 0..s.rows {
            for gj in 0..s.cols {
                let cell = gi * s.cols + gj;
                let dz = &dh2[cell * s.d2..(cell + 1) * s.d2];
                for (o, &d) in dz.iter().enumerate() {
                    g_b2[o] += d;
                }
                for (tap, ncell) in neighbours(s, gi, gj) {
                    let hn = &act.h1[ncell * s.d1..(ncell + 1) * s.d1];
                    let dn = &mut dh1[ncell * s.d1..(ncell + 1) * s.d1];
                    for (o, &d) in dz.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let at = (o * 9 + tap) * s.d1;
                        axpy(d, hn, &mut g_w2[at..at + s.d1]);
                        axpy(d, &w2[at..at + s.d1], dn);
                    }
                }
            }
        }

        for (cell, dz) in dh1.chunks_exact(s.d1).enumerate() {
            let x = &input.0[cell * per..(cell + 1) * per];
            let h = &act.h1[cell * s.d1..(cell + 1) * s.d1];
            for (o, (&d, &hv)) in dz.iter().zip(h).enumerate() {
                if hv > 0.0 && d != 0.0 {
                    g_b1[o] += d;
                    axpy(d, x, &mut g_w1[o * per..(o + 1) * per]);
                }
            }
        }
        loss
    }

    /// Fraction of argmax-correct predictions; ties go to the lowest class index.
    pub fn evaluate(&self, set: &ProbeSet) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let correct = set
            .inputs
            .iter()
            .zip(&set.labels)
            .filter(|(x, &y)| argmax(&self.forward(x)) == y as usize)
            .count();
        Ok(correct as f64 / set.len() as f64)
    }
}

/// Valid 3×3 neighbours of a grid cell as `(tap, cell)`, zero padding implied.
fn neighbours(s: &Shape, gi: usize, gj: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..9).filter_map(move |tap| {
        let ni = (gi + tap / 3).checked_sub(1)?;
        let nj = (gj + tap % 3).checked_sub(1)?;
        (ni < s.rows && nj < s.cols).then_some((tap, ni * s.cols + nj))
    })
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Four fixed accumulators so the loop vectorizes without reordering between runs.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

fn cross_entropy(probs: &[f64], label: u8) -> f64 {
    -probs[label as usize].max(f64::MIN_POSITIVE).ln()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub final_train_loss: f64,
    pub test_accuracy: f64,
    pub curve: Vec<EpochStats>,
    pub elapsed: Duration,
}

/// Equality ignores `elapsed`, which is the only non-deterministic field.
impl PartialEq for ProbeResult {
    fn eq(&self, other: &Self) -> bool {
        self.final_train_loss == other.final_train_loss
            && self.test_accuracy == other.test_accuracy
            && self.curve == other.curve
    }
}

impl ProbeResult {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "final_train_loss={:.6}", self.final_train_loss);
        let _ = writeln!(s, "test_accuracy={:.4}", self.test_accuracy);
        let _ = writeln!(s, "epochs={}", self.curve.len());
        let _ = writeln!(s, "elapsed_seconds={:.3}", self.elapsed.as_secs_f64());
        s
    }

    pub fn curve_csv(&self) -> String {
        let mut s = String::from("epoch,loss,test_acc\n");
        for e in &self.curve {
            let _ = writeln!(s, "{},{:.6},{:.4}", e.epoch, e.loss, e.test_accuracy);
        }
        s
    }
}

/// Momentum SGD (`v ← μv − ηg`, `θ ← θ + v`) over shuffled mini-batches.
///
/// The per-epoch shuffle comes from a ChaCha stream derived from `cfg.seed`,
/// independent of the stream used at initialization.
pub fn sgd_train(
    model: &mut ProbeModel,
    train: &ProbeSet,
    test: &ProbeSet,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut velocity = vec![0.0; model.params.len()];
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = model.loss_and_grad(train, batch)?;
            epoch_loss += loss * batch.len() as f64;
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - lr * g;
                *p += *v;
            }
        }
        curve.push(EpochStats {
            epoch: epoch + 1,
            loss: epoch_loss / train.len() as f64,
            test_accuracy: model.evaluate(test)?,
        });
    }

    let last = curve.last().copied().expect("at least one epoch");
    Ok(ProbeResult {
        final_train_loss: last.loss,
        test_accuracy: last.test_accuracy,
        curve,
        elapsed: start.elapsed(),
    })
}

/// Initializes a model for the datasets' image size and trains it.
pub fn run_probe(
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    let first = train.images.first().ok_or(Error::EmptyDataset)?;
    let mut model = ProbeModel::init(cfg, first.width(), first.height())?;
    let train = model.prepare_set(train)?;
    let test = model.prepare_set(test)?;
    sgd_train(&mut model, &train, &test, cfg)
}
