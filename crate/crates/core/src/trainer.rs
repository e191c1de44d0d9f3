//! Output-layer training: `P(tₙ) = softmax(W_o C(φ) x(tₙ))` fitted by
//! regularized multinomial cross-entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kerr::{integrate, quadratures, KerrNetwork};
use crate::qsim::MeasurementDataset;

/// RC quadrature responses `x^(q)(tₙ)`, stored as `Q × N × 2K` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Responses {
    pub k_nodes: usize,
    pub n_times: usize,
    pub x: Vec<f64>,
}

impl Responses {
    pub fn new(k_nodes: usize, n_times: usize, x: Vec<f64>) -> Result<Self> {
        let row = 2 * k_nodes * n_times;
        if k_nodes == 0 || row == 0 || x.len() % row != 0 {
            return Err(Error::Dimension(format!(
                "response array of length {} does not split into {n_times} × {} rows",
                x.len(),
                2 * k_nodes
            )));
        }
        Ok(Self { k_nodes, n_times, x })
    }

    /// Drives `net` with every record of `ds`.
    pub fn from_network(net: &KerrNetwork, ds: &MeasurementDataset, substeps: usize) -> Result<Self> {
        let k = net.k_nodes();
        let n = ds.n_samples();
        let parts: Vec<Result<Vec<f64>>> = ds
            .trajectories
            .par_iter()
            .map(|t| Ok(quadratures(&integrate(net, &t.j_record, ds.dt_record, substeps)?)))
            .collect();
        let mut x = Vec::with_capacity(ds.len() * n * 2 * k);
        for p in parts {
            x.extend(p?);
        }
        Self::new(k, n, x)
    }

    pub fn n_trajectories(&self) -> usize {
        self.x.len() / (2 * self.k_nodes * self.n_times)
    }

    pub fn trajectory(&self, q: usize) -> &[f64] {
        let row = 2 * self.k_nodes * self.n_times;
        &self.x[q * row..(q + 1) * row]
    }

    pub fn sample(&self, q: usize, n: usize) -> &[f64] {
        let w = 2 * self.k_nodes;
        &self.trajectory(q)[n * w..(n + 1) * w]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub reg_l2: f64,
    pub step_size: f64,
    pub momentum: f64,
    pub max_iters: usize,
    pub tol_rel: f64,
    /// Earliest time index included in the loss.
    pub time_mask: Option<usize>,
    /// Use every `time_stride`-th time sample in the loss.
    pub time_stride: usize,
    pub restarts: usize,
    /// Optimize `W_o` in units of the per-node response scale.
    pub precondition: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            reg_l2: 1e-4,
            step_size: 0.5,
            momentum: 0.9,
            max_iters: 5000,
            tol_rel: 1e-9,
            time_mask: None,
            time_stride: 1,
            restarts: 3,
            precondition: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_l2 >= 0.0) {
            return Err(Error::Config(format!("reg_l2 must be >= 0, got {}", self.reg_l2)));
        }
        if self.max_iters == 0 || self.restarts == 0 || self.time_stride == 0 {
            return Err(Error::Config("max_iters, restarts and time_stride must be >= 1".into()));
        }
        if !(self.step_size > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("step_size must be > 0 and momentum in [0, 1)".into()));
        }
        Ok(())
    }

    fn times(&self, n: usize) -> Vec<usize> {
        (self.time_mask.unwrap_or(0)..n).step_by(self.time_stride).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub q: usize,
    pub n_times_used: usize,
    pub reg_l2: f64,
    pub iterations: usize,
    pub restart: usize,
    pub init_seed: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutHead {
    pub n_classes: usize,
    /// Row-major `C × K`.
    pub w_out: Vec<f64>,
    pub phi: Vec<f64>,
    pub train_meta: Option<TrainMeta>,
}

impl ReadoutHead {
    pub fn zeros(n_classes: usize, phi: Vec<f64>) -> Self {
        Self {
            n_classes,
            w_out: vec![0.0; n_classes * phi.len()],
            phi,
            train_meta: None,
        }
    }

    pub fn k_nodes(&self) -> usize {
        self.phi.len()
    }

    /// `y = W_o C(φ) x` for one `2K` sample.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k_nodes();
        let xm: Vec<f64> = (0..k)
            .map(|j| self.phi[j].cos() * x[2 * j] + self.phi[j].sin() * x[2 * j + 1])
            .collect();
        (0..self.n_classes)
            .map(|c| self.w_out[c * k..(c + 1) * k].iter().zip(&xm).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// Argmax of the logits; ties go to the smaller class index.
    pub fn classify(&self, x: &[f64]) -> u8 {
        argmax(&self.logits(x)) as u8
    }
}

pub fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(y: &[f64]) -> Vec<f64> {
    let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn check(w_out: &[f64], phi: &[f64], r: &Responses, labels: &[u8], n_classes: usize) -> Result<()> {
    if phi.len() != r.k_nodes || w_out.len() != n_classes * r.k_nodes {
        return Err(Error::Dimension(format!(
            "head is {} × {} but responses have K = {}",
            w_out.len() / phi.len().max(1),
            phi.len(),
            r.k_nodes
        )));
    }
    if labels.len() != r.n_trajectories() {
        return Err(Error::Dimension(format!(
            "{} labels for {} trajectories",
            labels.len(),
            r.n_trajectories()
        )));
    }
    if let Some(l) = labels.iter().find(|l| **l as usize >= n_classes) {
        return Err(Error::Domain(format!("label {l} outside {n_classes} classes")));
    }
    Ok(())
}

/// Loss and gradients in one pass. `scale[j]` multiplies `W_o[:, j]`.
struct Objective<'a> {
    r: &'a Responses,
    labels: &'a [u8],
    n_classes: usize,
    times: Vec<usize>,
    reg: f64,
}

struct Eval {
    loss: f64,
    d_w: Vec<f64>,
    d_phi: Vec<f64>,
}

impl Objective<'_> {
    fn eval(&self, w: &[f64], phi: &[f64], want_grad: bool) -> Eval {
        let k = self.r.k_nodes;
        let c = self.n_classes;
        let cs: Vec<(f64, f64)> = phi.iter().map(|p| (p.cos(), p.sin())).collect();
        let count = (self.labels.len() * self.times.len()) as f64;

        // Per-trajectory partial sums, reduced in index order.
        let parts: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..self.labels.len())
            .into_par_iter()
            .map(|q| {
                let mut loss = 0.0;
                let mut dw = vec![0.0; if want_grad { c * k } else { 0 }];
                let mut dp = vec![0.0; if want_grad { k } else { 0 }];
                let mut xm = vec![0.0; k];
                let mut xd = vec![0.0; k];
                let mut y = vec![0.0; c];
                let label = self.labels[q] as usize;
                for &n in &self.times {
                    let x = self.r.sample(q, n);
                    for j in 0..k {
                        let (co, si) = cs[j];
                        xm[j] = co * x[2 * j] + si * x[2 * j + 1];
                        xd[j] = -si * x[2 * j] + co * x[2 * j + 1];
                    }
                    let mut m = f64::NEG_INFINITY;
                    for (ci, yc) in y.iter_mut().enumerate() {
                        *yc = w[ci * k..(ci + 1) * k].iter().zip(&xm).map(|(a, b)| a * b).sum();
                        m = m.max(*yc);
                    }
                    let mut s = 0.0;
                    for yc in y.iter_mut() {
                        *yc = (*yc - m).exp();
                        s += *yc;
                    }
                    loss -= (y[label] / s).ln();
                    if want_grad {
                        for ci in 0..c {
                            let g = y[ci] / s - if ci == label { 1.0 } else { 0.0 };
                            let row = &w[ci * k..(ci + 1) * k];
                            for j in 0..k {
                                dw[ci * k + j] += g * xm[j];
                                dp[j] += g * row[j] * xd[j];
                            }
                        }
                    }
                }
                (loss, dw, dp)
            })
            .collect();

        let mut loss = 0.0;
        let mut d_w = vec![0.0; c * k];
        let mut d_phi = vec![0.0; k];
        for (l, dw, dp) in parts {
            loss += l;
            for (a, b) in d_w.iter_mut().zip(&dw) {
                *a += b;
            }
            for (a, b) in d_phi.iter_mut().zip(&dp) {
                *a += b;
            }
        }
        loss /= count;
        for v in d_w.iter_mut().chain(d_phi.iter_mut()) {
            *v /= count;
        }
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        loss += 0.5 * self.reg * norm2;
        for (g, v) in d_w.iter_mut().zip(w) {
            *g += self.reg * v;
        }
        Eval { loss, d_w, d_phi }
    }
}

fn objective<'a>(
    w_out: &[f64],
    phi: &[f64],
    r: &'a Responses,
    labels: &'a [u8],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<Objective<'a>> {
    check(w_out, phi, r, labels, n_classes)?;
    let times = cfg.times(r.n_times);
    if times.is_empty() || labels.is_empty() {
        return Err(Error::Dimension("no samples selected for the loss".into()));
    }
    Ok(Objective {
        r,
        labels,
        n_classes,
        times,
        reg: cfg.reg_l2,
    })
}

/// `ℒ_x + (reg/2)‖W_o‖²` with `ℒ_x` the mean cross-entropy over the selected samples.
pub fn loss(w_out: &[f64], phi: &[f64], r: &Responses, labels: &[u8], n_classes: usize, cfg: &TrainConfig) -> Result<f64> {
    Ok(objective(w_out, phi, r, labels, n_classes, cfg)?.eval(w_out, phi, false).loss)
}

/// `(∂ℒ/∂W_o, ∂ℒ/∂φ)`.
pub fn gradients(
    w_out: &[f64],
    phi: &[f64],
    r: &Responses,
    labels: &[u8],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let e = objective(w_out, phi, r, labels, n_classes, cfg)?.eval(w_out, phi, true);
    Ok((e.d_w, e.d_phi))
}

/// RMS of `|β_j|·√2` over the selected samples; 1 for silent nodes.
fn node_scales(r: &Responses, times: &[usize]) -> Vec<f64> {
    let k = r.k_nodes;
    let mut acc = vec![0.0; k];
    for q in 0..r.n_trajectories() {
        for &n in times {
            let x = r.sample(q, n);
            for j in 0..k {
                acc[j] += x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1];
            }
        }
    }
    let count = (r.n_trajectories() * times.len()) as f64;
    acc.into_iter()
        .map(|a| {
            let s = (a / count).sqrt();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        })
        .collect()
}

/// Best of `cfg.restarts` momentum descents from `W_o = 0` and random `φ`.
pub fn train(r: &Responses, labels: &[u8], n_classes: usize, cfg: &TrainConfig, init_seed: u64) -> Result<ReadoutHead> {
    cfg.validate()?;
    let k = r.k_nodes;
    let mut present = vec![false; n_classes];
    for l in labels {
        if let Some(p) = present.get_mut(*l as usize) {
            *p = true;
        }
    }
    if let Some(z) = present.iter().position(|p| !p) {
        log::warn!("training set has no samples of class {z}");
    }
    let mut best: Option<ReadoutHead> = None;
    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        rng.set_stream(restart as u64);
        let phi0: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let head = descend(r, labels, n_classes, cfg, phi0, restart, init_seed)?;
        let better = match &best {
            None => true,
            Some(b) => head.train_meta.as_ref().unwrap().final_loss < b.train_meta.as_ref().unwrap().final_loss,
        };
        if better {
            best = Some(head);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn descend(
    r: &Responses,
    labels: &[u8],
    n_classes: usize,
    cfg: &TrainConfig,
    phi0: Vec<f64>,
    restart: usize,
    init_seed: u64,
) -> Result<ReadoutHead> {
    let k = r.k_nodes;
    let c = n_classes;
    let w0 = vec![0.0; c * k];
    let obj = objective(&w0, &phi0, r, labels, n_classes, cfg)?;
    let scale = if cfg.precondition {
        node_scales(r, &obj.times)
    } else {
        vec![1.0; k]
    };

    // Descent runs on v with W_o[:, j] = v[:, j] / scale[j].
    let to_w = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, x)| x / scale[i % k]).collect() };
    let mut v = w0.clone();
    let mut phi = phi0;
    let mut vel_v = vec![0.0; c * k];
    let mut vel_p = vec![0.0; k];
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, v.clone(), phi.clone());
    let mut prev = f64::NAN;
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        let w = to_w(&v);
        let e = obj.eval(&w, &phi, true);
        if !e.loss.is_finite() {
            return Err(Error::Training {
                iteration: it,
                reason: format!("loss became {}", e.loss),
            });
        }
        trace.push(e.loss);
        iterations = it + 1;
        if e.loss < best.0 {
            best = (e.loss, v.clone(), phi.clone());
        }
        if it > 0 && (prev - e.loss).abs() <= cfg.tol_rel * e.loss.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        prev = e.loss;
        for i in 0..c * k {
            let g = e.d_w[i] / scale[i % k];
            vel_v[i] = cfg.momentum * vel_v[i] - cfg.step_size * g;
            v[i] += vel_v[i];
        }
        for j in 0..k {
            vel_p[j] = cfg.momentum * vel_p[j] - cfg.step_size * e.d_phi[j];
            phi[j] += vel_p[j];
        }
    }
    let (final_loss, v, phi) = best;
    Ok(ReadoutHead {
        n_classes,
        w_out: to_w(&v),
        phi: phi.iter().map(|p| p.rem_euclid(std::f64::consts::TAU)).collect(),
        train_meta: Some(TrainMeta {
            q: labels.len(),
            n_times_used: obj.times.len(),
            reg_l2: cfg.reg_l2,
            iterations,
            restart,
            init_seed,
            initial_loss: trace[0],
            final_loss,
            loss_trace: trace,
        }),
    })
}
