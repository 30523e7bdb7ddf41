//! One-hidden-layer ReLU approximator `NN(x) = Σ mᵢ·relu(nᵢx + bᵢ)`:
//! initialization, training with Adam, finalization and calibration.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::targets::{InitPolicy, TargetSpec};

/// Lower bound on |nᵢ| and bᵢ for sign-constrained initialization.
pub const INIT_DELTA: f64 = 1e-3;

/// Neurons with |nᵢ| below this are folded away by [`finalize_net`].
pub const DEGENERATE_WEIGHT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNet1H {
    pub n: Vec<f64>,
    pub b: Vec<f64>,
    pub m: Vec<f64>,
}

impl ReluNet1H {
    pub fn new(n: Vec<f64>, b: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if n.len() != b.len() || n.len() != m.len() {
            return Err(Error::Precondition(format!(
                "parameter lengths differ: n={}, b={}, m={}",
                n.len(),
                b.len(),
                m.len()
            )));
        }
        if n.iter().chain(&b).chain(&m).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite network parameter".into()));
        }
        Ok(Self { n, b, m })
    }

    pub fn hidden(&self) -> usize {
        self.n.len()
    }

    pub fn forward(&self, x: f64) -> f64 {
        forward(self, x)
    }

    /// Breakpoints `-bᵢ/nᵢ`, in neuron order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.n.iter().zip(&self.b).map(|(n, b)| -b / n).collect()
    }
}

/// A network with no degenerate neurons plus the constant its removed
/// neurons contributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizedNet {
    pub net: ReluNet1H,
    pub folded_constant: f64,
}

impl FinalizedNet {
    pub fn forward(&self, x: f64) -> f64 {
        forward(&self.net, x) + self.folded_constant
    }

    /// An equivalent net for further training. A non-zero folded constant
    /// comes back as a neuron with `n = 0, b = 1`.
    pub fn to_trainable(&self) -> ReluNet1H {
        let mut net = self.net.clone();
        if self.folded_constant != 0.0 || net.hidden() == 0 {
            net.n.push(0.0);
            net.b.push(1.0);
            net.m.push(self.folded_constant);
        }
        net
    }
}

pub fn forward(net: &ReluNet1H, x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..net.n.len() {
        let pre = net.n[i] * x + net.b[i];
        if pre > 0.0 {
            acc += net.m[i] * pre;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub dataset_size: usize,
    pub lr: f64,
    /// `(fraction of total epochs, multiplier)`; the multiplier applies from
    /// that epoch on and compounds with earlier milestones.
    pub lr_milestones: Vec<(f64, f64)>,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
    /// `None` trains full-batch; `Some(k)` runs shuffled mini-batches of `k`
    /// samples, one pass over the data per epoch.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 15,
            dataset_size: 100_000,
            lr: 1e-3,
            lr_milestones: vec![(0.6, 0.1), (0.85, 0.1)],
            epochs: 1000,
            loss: LossKind::L1,
            seed: 0,
            batch_size: Some(256),
        }
    }
}

impl TrainConfig {
    /// Settings for re-fitting a trained net on recorded inputs.
    pub fn calibration() -> Self {
        Self {
            epochs: 5,
            batch_size: Some(32),
            lr_milestones: Vec::new(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Precondition(msg.to_string()));
        if self.hidden < 1 {
            return bad("hidden must be ≥ 1");
        }
        if self.dataset_size < 2 {
            return bad("dataset_size must be ≥ 2");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self
            .lr_milestones
            .iter()
            .any(|&(f, m)| !(m > 0.0 && m <= 1.0) || !(0.0..=1.0).contains(&f))
        {
            return bad("milestone multipliers must lie in (0, 1] at fractions in [0, 1]");
        }
        if self.batch_size == Some(0) {
            return bad("batch_size must be ≥ 1");
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        let frac = epoch as f64 / self.epochs.max(1) as f64;
        self.lr_milestones
            .iter()
            .filter(|(f, _)| frac >= *f)
            .fold(self.lr, |lr, (_, m)| lr * m)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const INIT_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;
const SHUFFLE_STREAM: u64 = 3;


fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v = rng.gen_range(-1.0..1.0);
        if v != -1.0 {
            return v;
        }
    }
}

pub fn init_net(spec: &TargetSpec, cfg: &TrainConfig) -> ReluNet1H {
    let mut rng = rng_for(cfg.seed, INIT_STREAM);
    let h = cfg.hidden;
    let (mut n, mut b, mut m) = (Vec::with_capacity(h), Vec::with_capacity(h), Vec::with_capacity(h));
    let r = spec.input_range;
    for _ in 0..h {
        // a neuron inactive on the whole range never receives a gradient;
        // redraw it (bounded, so odd ranges still terminate)
        let draw = |rng: &mut ChaCha8Rng| match spec.init_policy {
            InitPolicy::RandomSigned => (open_unit(rng), open_unit(rng)),
            InitPolicy::PositiveWPositiveB => (
                rng.gen_range(INIT_DELTA..1.0),
                rng.gen_range(INIT_DELTA..1.0),
            ),
            InitPolicy::NegativeWPositiveB => (
                -rng.gen_range(INIT_DELTA..1.0),
                rng.gen_range(INIT_DELTA..1.0),
            ),
        };
        let mut pair = draw(&mut rng);
        for _ in 0..1000 {
            let (ni, bi) = pair;
            if (ni * r.lo + bi).max(ni * r.hi + bi) > 0.0 {
                break;
            }
            pair = draw(&mut rng);
        }
        let (ni, bi) = pair;
        n.push(ni);
        b.push(bi);
        m.push(open_unit(&mut rng));
    }
    ReluNet1H { n, b, m }
}

/// Uniform inputs over the target's range labelled with the reference function.
pub fn sample_dataset(spec: &TargetSpec, size: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if size < 2 {
        return domain("dataset size must be ≥ 2");
    }
    spec.kind.check_range(spec.input_range)?;
    let mut rng = rng_for(seed, DATA_STREAM);
    let r = spec.input_range;
    (0..size)
        .map(|_| {
            let x = rng.gen_range(r.lo..=r.hi);
            spec.eval(x).map(|y| (x, y))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean loss over the full dataset before training and after each epoch.
    pub losses: Vec<f64>,
    /// Index into `losses` of the returned iterate.
    pub best_index: usize,
}

impl TrainTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        self.losses[self.best_index]
    }
}

#[derive(Clone)]
struct Grads {
    n: Vec<f64>,
    b: Vec<f64>,
    m: Vec<f64>,
}

impl Grads {
    fn zeros(h: usize) -> Self {
        Self {
            n: vec![0.0; h],
            b: vec![0.0; h],
            m: vec![0.0; h],
        }
    }

    fn clear(&mut self) {
        self.n.fill(0.0);
        self.b.fill(0.0);
        self.m.fill(0.0);
    }
}

fn mean_loss(net: &ReluNet1H, data: &[(f64, f64)], loss: LossKind) -> f64 {
    let sum: f64 = data
        .iter()
        .map(|&(x, y)| {
            let e = forward(net, x) - y;
            match loss {
                LossKind::L1 => e.abs(),
                LossKind::L2 => e * e,
            }
        })
        .sum();
    sum / data.len() as f64
}

/// Accumulates the gradient of the mean loss over `batch` into `g`.
fn accumulate_grads(
    net: &ReluNet1H,
    data: &[(f64, f64)],
    batch: impl Iterator<Item = usize>,
    count: usize,
    loss: LossKind,
    g: &mut Grads,
) {
    let h = net.hidden();
    let inv = 1.0 / count as f64;
    let mut pre = vec![0.0; h];
    for idx in batch {
        let (x, y) = data[idx];
        let mut out = 0.0;
        for i in 0..h {
            pre[i] = net.n[i] * x + net.b[i];
            if pre[i] > 0.0 {
                out += net.m[i] * pre[i];
            }
        }
        let e = out - y;
        // relu'(0) = 0; sign(0) = 0 for L1
        let d = match loss {
            LossKind::L1 => {
                if e > 0.0 {
                    inv
                } else if e < 0.0 {
                    -inv
                } else {
                    0.0
                }
            }
            LossKind::L2 => 2.0 * e * inv,
        };
        if d == 0.0 {
            continue;
        }
        for i in 0..h {
            if pre[i] > 0.0 {
                g.m[i] += d * pre[i];
                let dm = d * net.m[i];
                g.n[i] += dm * x;
                g.b[i] += dm;
            }
        }
    }
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m1: Grads,
    m2: Grads,
}

impl Adam {
    fn new(h: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m1: Grads::zeros(h),
            m2: Grads::zeros(h),
        }
    }

    fn step(&mut self, net: &mut ReluNet1H, g: &Grads, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let groups = [
            (&mut net.n, &g.n, &mut self.m1.n, &mut self.m2.n),
            (&mut net.b, &g.b, &mut self.m1.b, &mut self.m2.b),
            (&mut net.m, &g.m, &mut self.m1.m, &mut self.m2.m),
        ];
        for (p, g, m1, m2) in groups {
            for i in 0..p.len() {
                m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
                m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m1[i] / c1;
                let vh = m2[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Full-batch gradient engine over data sorted by x. Because the network is
/// piecewise linear, each epoch costs one sweep plus a binary search per neuron.
struct SortedBatch {
    x: Vec<f64>,
    y: Vec<f64>,
    // cumulative Σd and Σd·x over the first k samples
    cum_d: Vec<f64>,
    cum_dx: Vec<f64>,
}

impl SortedBatch {
    fn new(data: &[(f64, f64)]) -> Self {
        let mut sorted = data.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        Self {
            x: sorted.iter().map(|p| p.0).collect(),
            y: sorted.iter().map(|p| p.1).collect(),
            cum_d: vec![0.0; n + 1],
            cum_dx: vec![0.0; n + 1],
        }
    }

    /// Returns the mean loss at `net` and writes its gradient into `g`.
    fn loss_and_grads(&mut self, net: &ReluNet1H, loss: LossKind, g: &mut Grads) -> f64 {
        let h = net.hidden();
        // neurons with n = 0 contribute a constant (or nothing)
        let mut order: Vec<usize> = (0..h).filter(|&i| net.n[i] != 0.0).collect();
        let bp: Vec<f64> = (0..h).map(|i| -net.b[i] / net.n[i]).collect();
        order.sort_by(|&a, &b| bp[a].total_cmp(&bp[b]));

        let (mut slope, mut icpt) = (0.0, 0.0);
        for i in 0..h {
            if net.n[i] < 0.0 || (net.n[i] == 0.0 && net.b[i] > 0.0) {
                slope += net.m[i] * net.n[i];
                icpt += net.m[i] * net.b[i];
            }
        }

        let inv = 1.0 / self.x.len() as f64;
        let mut next = 0;
        let mut total = 0.0;
        for k in 0..self.x.len() {
            let x = self.x[k];
            // a neuron switches state once x passes its breakpoint
            while next < order.len() && bp[order[next]] < x {
                let j = order[next];
                let (dn, db) = (net.m[j] * net.n[j], net.m[j] * net.b[j]);
                if net.n[j] > 0.0 {
                    slope += dn;
                    icpt += db;
                } else {
                    slope -= dn;
                    icpt -= db;
                }
                next += 1;
            }
            let e = slope * x + icpt - self.y[k];
            let d = match loss {
                LossKind::L1 => {
                    total += e.abs();
                    if e > 0.0 {
                        inv
                    } else if e < 0.0 {
                        -inv
                    } else {
                        0.0
                    }
                }
                LossKind::L2 => {
                    total += e * e;
                    2.0 * e * inv
                }
            };
            self.cum_d[k + 1] = self.cum_d[k] + d;
            self.cum_dx[k + 1] = self.cum_dx[k] + d * x;
        }

        let last = self.x.len();
        for i in 0..h {
            let (sd, sdx) = if net.n[i] > 0.0 {
                let k = self.x.partition_point(|&x| x <= bp[i]);
                (self.cum_d[last] - self.cum_d[k], self.cum_dx[last] - self.cum_dx[k])
            } else if net.n[i] < 0.0 {
                let k = self.x.partition_point(|&x| x < bp[i]);
                (self.cum_d[k], self.cum_dx[k])
            } else if net.b[i] > 0.0 {
                (self.cum_d[last], self.cum_dx[last])
            } else {
                (0.0, 0.0)
            };
            g.m[i] = net.n[i] * sdx + net.b[i] * sd;
            g.n[i] = net.m[i] * sdx;
            g.b[i] = net.m[i] * sd;
        }
        total * inv
    }
}

/// Fits `net` to `data` with Adam. Returns the lowest-loss iterate seen,
/// which is never worse than the input net.
pub fn train(
    net: &ReluNet1H,
    data: &[(f64, f64)],
    cfg: &TrainConfig,
) -> Result<(ReluNet1H, TrainTrace)> {
    if data.is_empty() {
        return domain("training data is empty");
    }
    cfg.validate()?;
    let h = net.hidden();
    let first = mean_loss(net, data, cfg.loss);
    if !first.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            last_loss: f64::NAN,
            last_state: Box::new(net.clone()),
        });
    }
    let mut trace = TrainTrace {
        losses: vec![first],
        best_index: 0,
    };
    if cfg.epochs == 0 {
        return Ok((net.clone(), trace));
    }
    let mut cur = net.clone();
    let mut best = net.clone();
    let mut best_loss = first;
    let mut adam = Adam::new(h);
    let mut g = Grads::zeros(h);
    let mut last_finite = (cur.clone(), first);
    let mut record = |epoch: usize, cur: &ReluNet1H, loss: f64, trace: &mut TrainTrace| {
        if !loss.is_finite() {
            return Err(epoch);
        }
        trace.losses.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best.clone_from(cur);
            trace.best_index = trace.losses.len() - 1;
        }
        Ok(())
    };
    let diverged = |epoch: usize, last: (ReluNet1H, f64)| Error::Divergence {
        epoch,
        last_loss: last.1,
        last_state: Box::new(last.0),
    };

    match cfg.batch_size {
        None => {
            let mut batch = SortedBatch::new(data);
            for epoch in 0..cfg.epochs {
                let loss = batch.loss_and_grads(&cur, cfg.loss, &mut g);
                if epoch > 0 {
                    // loss of the iterate produced by the previous step
                    if record(epoch, &cur, loss, &mut trace).is_err() {
                        return Err(diverged(epoch, last_finite));
                    }
                    last_finite = (cur.clone(), loss);
                }
                if g.n.iter().chain(&g.b).chain(&g.m).any(|v| !v.is_finite()) {
                    return Err(diverged(epoch, last_finite));
                }
                adam.step(&mut cur, &g, cfg.lr_at(epoch));
            }
            let loss = mean_loss(&cur, data, cfg.loss);
            if record(cfg.epochs, &cur, loss, &mut trace).is_err() {
                return Err(diverged(cfg.epochs, last_finite));
            }
        }
        Some(bs) => {
            let mut order: Vec<usize> = (0..data.len()).collect();
            let mut shuffle_rng = rng_for(cfg.seed, SHUFFLE_STREAM);
            for epoch in 0..cfg.epochs {
                let lr = cfg.lr_at(epoch);
                order.shuffle(&mut shuffle_rng);
                for chunk in order.chunks(bs) {
                    g.clear();
                    accumulate_grads(&cur, data, chunk.iter().copied(), chunk.len(), cfg.loss, &mut g);
                    adam.step(&mut cur, &g, lr);
                }
                let loss = mean_loss(&cur, data, cfg.loss);
                if record(epoch + 1, &cur, loss, &mut trace).is_err() {
                    return Err(diverged(epoch + 1, last_finite));
                }
                last_finite = (cur.clone(), loss);
            }
        }
    }
    Ok((best, trace))
}

/// Samples the training set for `spec`, initializes a net and trains it.
pub fn fit_target(spec: &TargetSpec, cfg: &TrainConfig) -> Result<(ReluNet1H, TrainTrace)> {
    cfg.validate()?;
    let data = sample_dataset(spec, cfg.dataset_size, cfg.seed)?;
    train(&init_net(spec, cfg), &data, cfg)
}

/// Removes neurons with |nᵢ| < 1e-9, folding live ones into a constant.
pub fn finalize_net(net: &ReluNet1H) -> FinalizedNet {
    let mut out = ReluNet1H {
        n: Vec::new(),
        b: Vec::new(),
        m: Vec::new(),
    };
    let mut folded_constant = 0.0;
    for i in 0..net.hidden() {
        if net.n[i].abs() < DEGENERATE_WEIGHT {
            if net.b[i] > 0.0 {
                folded_constant += net.m[i] * net.b[i];
            }
        } else {
            out.n.push(net.n[i]);
            out.b.push(net.b[i]);
            out.m.push(net.m[i]);
        }
    }
    FinalizedNet {
        net: out,
        folded_constant,
    }
}

/// Re-fits `net` against `reference` on recorded inputs instead of a uniform
/// range.
pub fn calibrate(
    net: &ReluNet1H,
    samples: &[f64],
    reference: impl Fn(f64) -> Result<f64>,
    cfg: &TrainConfig,
) -> Result<(ReluNet1H, TrainTrace)> {
    if samples.is_empty() {
        return domain("calibration samples are empty");
    }
    let data = samples
        .iter()
        .map(|&x| reference(x).map(|y| (x, y)))
        .collect::<Result<Vec<_>>>()?;
    train(net, &data, cfg)
}
