//! Classical Kerr-oscillator network driven by a measurement record.
//!
//! `dβ/dt = γ(−β + iΛ⊙|β|²⊙β − i W_R β + W_I u)`, integrated with RK4 and a
//! zero-order hold on `u` between record samples.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude beyond which a node is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub const DEFAULT_SUBSTEPS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcHyperParams {
    pub k_nodes: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda_bar: f64,
    pub mu: f64,
}

impl RcHyperParams {
    /// `K = 5, γ = 0.35, α = 1.9, Λ̄ = 0.05, μ = 5`.
    pub fn five_node() -> Self {
        Self {
            k_nodes: 5,
            gamma: 0.35,
            alpha: 1.9,
            lambda_bar: 5e-2,
            mu: 5.0,
        }
    }

    /// `K = 2, γ = 0.2`, otherwise as [`Self::five_node`].
    pub fn two_node() -> Self {
        Self {
            k_nodes: 2,
            gamma: 0.2,
            ..Self::five_node()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_nodes == 0 {
            return Err(Error::Domain("k_nodes must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Domain(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.lambda_bar >= 0.0 && self.lambda_bar.is_finite()) {
            return Err(Error::Domain(format!("lambda_bar must be >= 0, got {}", self.lambda_bar)));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain("mu must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrNetwork {
    pub hp: RcHyperParams,
    pub n_inputs: usize,
    /// Row-major `K × L`.
    pub w_in: Vec<f64>,
    /// Row-major `K × K`, symmetric.
    pub w_res: Vec<f64>,
    pub lambda: Vec<f64>,
    pub seed: u64,
}

/// Node amplitudes at the record times, row-major `N × K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcTrajectory {
    pub k_nodes: usize,
    pub dt_record: f64,
    pub beta: Vec<C64>,
}

impl RcTrajectory {
    pub fn n_times(&self) -> usize {
        self.beta.len() / self.k_nodes.max(1)
    }

    pub fn at(&self, n: usize) -> &[C64] {
        &self.beta[n * self.k_nodes..(n + 1) * self.k_nodes]
    }
}

fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Draws a network for one input channel.
pub fn sample_network(hp: &RcHyperParams, seed: u64) -> Result<KerrNetwork> {
    sample_network_with_inputs(hp, 1, seed)
}

pub fn sample_network_with_inputs(hp: &RcHyperParams, n_inputs: usize, seed: u64) -> Result<KerrNetwork> {
    hp.validate()?;
    if n_inputs == 0 {
        return Err(Error::Domain("at least one input channel is required".into()));
    }
    let k = hp.k_nodes;
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..=1.0));
        let sym = (&a + a.transpose()) * 0.5;
        let s = largest_singular_value(&sym);
        if s == 0.0 || !s.is_finite() {
            log::warn!("degenerate coupling draw for seed {seed} (attempt {attempt}); resampling");
            attempt += 1;
            continue;
        }
        let scaled = sym * (hp.alpha / s);
        let mu = hp.mu.abs();
        let w_in = (0..k * n_inputs).map(|_| rng.random_range(-mu..=mu)).collect();
        let lambda = (0..k).map(|_| rng.random_range(-2.0 * hp.lambda_bar..=0.0)).collect();
        let mut w_res = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                // (A+Aᵀ)/2 is symmetric up to rounding of the sum order; copy the upper triangle.
                w_res[i * k + j] = if j >= i { scaled[(i, j)] } else { scaled[(j, i)] };
            }
        }
        return Ok(KerrNetwork {
            hp: hp.clone(),
            n_inputs,
            w_in,
            w_res,
            lambda,
            seed,
        });
    }
}

impl KerrNetwork {
    pub fn k_nodes(&self) -> usize {
        self.hp.k_nodes
    }

    /// Copy with every `Λ_j` set to `value`.
    pub fn with_uniform_lambda(&self, value: f64) -> Self {
        Self {
            lambda: vec![value; self.k_nodes()],
            ..self.clone()
        }
    }

    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let k = self.k_nodes();
        DMatrix::from_row_slice(k, k, &self.w_res)
    }

    pub fn largest_singular_value(&self) -> f64 {
        largest_singular_value(&self.coupling_matrix())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k_nodes();
        if self.w_res.len() != k * k || self.w_in.len() != k * self.n_inputs || self.lambda.len() != k {
            return Err(Error::Dimension(format!(
                "network arrays do not match K = {k}, L = {}",
                self.n_inputs
            )));
        }
        for i in 0..k {
            for j in 0..i {
                if self.w_res[i * k + j] != self.w_res[j * k + i] {
                    return Err(Error::Domain("w_res must be symmetric".into()));
                }
            }
        }
        Ok(())
    }

    fn check_input(&self, u: &[f64]) -> Result<usize> {
        if u.len() % self.n_inputs != 0 {
            return Err(Error::Dimension(format!(
                "input of length {} is not a multiple of {} channels",
                u.len(),
                self.n_inputs
            )));
        }
        Ok(u.len() / self.n_inputs)
    }

    /// `W_I u` for one time sample.
    fn drive(&self, u: &[f64], out: &mut [f64]) {
        let l = self.n_inputs;
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.w_in[j * l..(j + 1) * l].iter().zip(u).map(|(w, v)| w * v).sum();
        }
    }

    fn rhs(&self, beta: &[C64], f: &[f64], out: &mut [C64]) {
        let k = self.k_nodes();
        let g = self.hp.gamma;
        for j in 0..k {
            let b = beta[j];
            let mut coup = C64::new(0.0, 0.0);
            for (w, bk) in self.w_res[j * k..(j + 1) * k].iter().zip(beta) {
                coup += bk * *w;
            }
            // −β + iΛ|β|²β − i W_R β + W_I u
            let kerr = b * (self.lambda[j] * b.norm_sqr());
            let inner = C64::new(-b.re - kerr.im + coup.im + f[j], -b.im + kerr.re - coup.re);
            out[j] = inner * g;
        }
    }
}

/// Integrates from rest. `u` is row-major `N × L`, one row per record sample.
pub fn integrate(net: &KerrNetwork, u: &[f64], dt_record: f64, substeps: usize) -> Result<RcTrajectory> {
    integrate_from(net, &vec![C64::new(0.0, 0.0); net.k_nodes()], u, dt_record, substeps)
}

pub fn integrate_from(
    net: &KerrNetwork,
    beta0: &[C64],
    u: &[f64],
    dt_record: f64,
    substeps: usize,
) -> Result<RcTrajectory> {
    let k = net.k_nodes();
    if beta0.len() != k {
        return Err(Error::Dimension(format!("initial state has {} nodes, network has {k}", beta0.len())));
    }
    if substeps == 0 || !(dt_record > 0.0) {
        return Err(Error::Domain("substeps must be >= 1 and dt_record > 0".into()));
    }
    let n = net.check_input(u)?;
    let l = net.n_inputs;
    let h = dt_record / substeps as f64;
    let zero = C64::new(0.0, 0.0);
    let mut beta = beta0.to_vec();
    let mut f = vec![0.0; k];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![zero; k], vec![zero; k], vec![zero; k], vec![zero; k], vec![zero; k]);
    let mut out = Vec::with_capacity(n * k);
    for step in 0..n {
        net.drive(&u[step * l..(step + 1) * l], &mut f);
        for _ in 0..substeps {
            net.rhs(&beta, &f, &mut k1);
            for j in 0..k {
                tmp[j] = beta[j] + k1[j] * (0.5 * h);
            }
            net.rhs(&tmp, &f, &mut k2);
            for j in 0..k {
                tmp[j] = beta[j] + k2[j] * (0.5 * h);
            }
            net.rhs(&tmp, &f, &mut k3);
            for j in 0..k {
                tmp[j] = beta[j] + k3[j] * h;
            }
            net.rhs(&tmp, &f, &mut k4);
            for j in 0..k {
                beta[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0);
            }
        }
        for (j, b) in beta.iter().enumerate() {
            let m = b.norm();
            if !(m <= DIVERGENCE_LIMIT) {
                return Err(Error::Divergence {
                    time: (step + 1) as f64 * dt_record,
                    node: j,
                    magnitude: m,
                });
            }
        }
        out.extend_from_slice(&beta);
    }
    Ok(RcTrajectory {
        k_nodes: k,
        dt_record,
        beta: out,
    })
}

/// Exact zero-order-hold solution of the `Λ = 0` network in the eigenbasis
/// of `W_R`.
pub fn linear_response_analytic(net: &KerrNetwork, u: &[f64], dt_record: f64) -> Result<RcTrajectory> {
    if net.lambda.iter().any(|l| *l != 0.0) {
        return Err(Error::Domain("analytic response requires Λ = 0".into()));
    }
    let n = net.check_input(u)?;
    let k = net.k_nodes();
    let l = net.n_inputs;
    let eig = SymmetricEigen::new(net.coupling_matrix());
    let v = &eig.eigenvectors;
    let g = net.hp.gamma;
    // c ← e^{−λh} c + (1 − e^{−λh}) f/(1 + iδ), λ = γ(1 + iδ)
    let decay: Vec<C64> = eig.eigenvalues.iter().map(|d| (-C64::new(g, g * d) * dt_record).exp()).collect();
    let gain: Vec<C64> = eig
        .eigenvalues
        .iter()
        .zip(&decay)
        .map(|(d, e)| (C64::new(1.0, 0.0) - e) / C64::new(1.0, *d))
        .collect();
    let mut c = vec![C64::new(0.0, 0.0); k];
    let mut f = vec![0.0; k];
    let mut out = Vec::with_capacity(n * k);
    for step in 0..n {
        net.drive(&u[step * l..(step + 1) * l], &mut f);
        for m in 0..k {
            let fm: f64 = (0..k).map(|j| v[(j, m)] * f[j]).sum();
            c[m] = decay[m] * c[m] + gain[m] * fm;
        }
        for j in 0..k {
            out.push((0..k).map(|m| c[m] * v[(j, m)]).sum());
        }
    }
    Ok(RcTrajectory {
        k_nodes: k,
        dt_record,
        beta: out,
    })
}

/// `x = √2 (Re β₁, Im β₁, …, Re β_K, Im β_K)` per time, row-major `N × 2K`.
pub fn quadratures(traj: &RcTrajectory) -> Vec<f64> {
    let s = std::f64::consts::SQRT_2;
    traj.beta.iter().flat_map(|b| [s * b.re, s * b.im]).collect()
}

/// `x^φ_j = cos φ_j x_{2j} + sin φ_j x_{2j+1}` (0-based), row-major `N × K`.
pub fn measure(x: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    let k = phi.len();
    if k == 0 || x.len() % (2 * k) != 0 {
        return Err(Error::Dimension(format!(
            "quadrature array of length {} does not match K = {k}",
            x.len()
        )));
    }
    let cs: Vec<(f64, f64)> = phi.iter().map(|p| (p.cos(), p.sin())).collect();
    Ok(x.chunks_exact(2 * k)
        .flat_map(|row| cs.iter().enumerate().map(move |(j, (c, s))| c * row[2 * j] + s * row[2 * j + 1]))
        .collect())
}
