//! Homodyne stochastic master equation.
//!
//! Each step applies the same RK4 map of `ℒ` used by the unconditional
//! solver, then the measurement back-action `√κ ℋ[d̂]ρ ΔW` with its Milstein
//! correction. Because the stochastic terms have zero mean, the trajectory
//! average reproduces the unconditional RK4 solution at equal `dt`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::liouville::{Layout, Liouvillian, Pattern, RowOp, Rk4Workspace};
use super::master::populations;
use super::ops::{build_operators, OperatorSet, C64};
use super::spec::QuantumSystemSpec;
use super::state::DensityMatrix;
use super::timing::Timing;
use crate::error::{Error, Result};

/// Population allowed in the top Fock level before a trajectory is invalid.
pub const LEAK_LIMIT: f64 = 1e-5;

/// The kernel keeps states Hermitian up to rounding; this bounds the drift.
const HERMITIZE_EVERY: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneTrajectory {
    pub label: u8,
    pub dt_record: f64,
    pub j_record: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_conditional: Option<Vec<f64>>,
    pub seed: u64,
    pub truncation_leak: f64,
}

impl HomodyneTrajectory {
    pub fn is_valid(&self) -> bool {
        self.truncation_leak < LEAK_LIMIT
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrajectoryOptions {
    /// Keep `√κ⟨d̂+d̂†⟩_c` at every record time.
    pub conditional: bool,
    /// Keep the conditional qubit populations at every record time.
    pub populations: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRun {
    pub trajectory: HomodyneTrajectory,
    pub populations: Option<Vec<Vec<f64>>>,
}

/// Everything that can be shared between trajectories of one system.
#[derive(Clone, Debug)]
pub struct SmeIntegrator {
    spec: QuantumSystemSpec,
    ops: OperatorSet,
    lv: Liouvillian,
    d: RowOp,
    timing: Timing,
}

struct Scratch {
    rho: Vec<C64>,
    a: Vec<C64>,
    bb: Vec<C64>,
    rk4: Rk4Workspace,
}

impl SmeIntegrator {
    pub fn new(spec: &QuantumSystemSpec, timing: Timing) -> Result<Self> {
        timing.validate()?;
        let ops = build_operators(spec)?;
        let lv = Liouvillian::new(&ops);
        let d = RowOp::new(&ops.annihilation);
        Ok(Self {
            spec: spec.clone(),
            ops,
            lv,
            d,
            timing,
        })
    }

    pub fn spec(&self) -> &QuantumSystemSpec {
        &self.spec
    }

    pub fn timing(&self) -> Timing {
        self.timing
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    fn pattern_for(&self, z: usize) -> Pattern {
        let mut p = Pattern::empty(self.ops.n_qubit_states());
        p.insert(z, z);
        self.lv.closure(&p)
    }

    pub fn simulate(&self, z: usize, seed: u64) -> Result<HomodyneTrajectory> {
        Ok(self.run(z, seed, TrajectoryOptions::default())?.trajectory)
    }

    /// One trajectory from `|0, z⟩⟨0, z|`.
    pub fn run(&self, z: usize, seed: u64, opts: TrajectoryOptions) -> Result<TrajectoryRun> {
        let layout = self.lv.layout();
        let n_fock = layout.n_fock;
        let nqs = layout.n_qubit_states;
        let rho0 = DensityMatrix::qubit_basis_vacuum(z, nqs, n_fock)?;
        let pattern = self.pattern_for(z);
        let dim = layout.dim();
        let mut s = Scratch {
            rho: rho0.elements,
            a: vec![C64::new(0.0, 0.0); dim * dim],
            bb: vec![C64::new(0.0, 0.0); dim * dim],
            rk4: Rk4Workspace::new(dim),
        };

        let sk = self.spec.kappa.sqrt();
        let dt = self.timing.dt_int;
        let sqrt_dt = dt.sqrt();
        let dt_rec = self.timing.dt_record;
        let per = self.timing.steps_per_record();
        let n_rec = self.timing.n_records();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut j_record = Vec::with_capacity(n_rec);
        let mut x_cond = opts.conditional.then(|| Vec::with_capacity(n_rec));
        let mut pops = opts.populations.then(|| Vec::with_capacity(n_rec));
        let mut leak = top_level_population(&s.rho, layout);

        for n in 0..n_rec {
            let mut acc = 0.0;
            for k in 0..per {
                let dw: f64 = sqrt_dt * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                let step_index = n * per + k;
                let x = self.step(&pattern, &mut s, dw, sk, dt, step_index % HERMITIZE_EVERY == 0).map_err(|reason| Error::Integration {
                    time: (step_index + 1) as f64 * dt,
                    reason,
                })?;
                acc += sk * x * dt + dw;
                leak = leak.max(top_level_population(&s.rho, layout));
            }
            j_record.push(acc / dt_rec);
            if let Some(xc) = x_cond.as_mut() {
                xc.push(sk * 2.0 * layout.trace_product(&self.d, &s.rho, &pattern).re);
            }
            if let Some(p) = pops.as_mut() {
                p.push(populations(&s.rho, nqs, n_fock));
            }
        }

        Ok(TrajectoryRun {
            trajectory: HomodyneTrajectory {
                label: z as u8,
                dt_record: dt_rec,
                j_record,
                x_conditional: x_cond,
                seed,
                truncation_leak: leak,
            },
            populations: pops,
        })
    }

    /// Advances `s.rho` by one step and returns `⟨d̂+d̂†⟩` at the start of it.
    fn step(
        &self,
        pattern: &Pattern,
        s: &mut Scratch,
        dw: f64,
        sk: f64,
        dt: f64,
        hermitize: bool,
    ) -> std::result::Result<f64, String> {
        let layout = self.lv.layout();
        let rho = &mut s.rho;
        let x = 2.0 * layout.trace_product(&self.d, rho, pattern).re;

        // a = ℋ[d̂]ρ = d̂ρ + ρd̂† − xρ
        layout.fused_backaction(&self.d, pattern, rho, x, rho, 0.0, &mut s.a);
        // bb = d̂a + ad̂† − x a − x_a ρ, the Milstein derivative term over κ
        let x_a = 2.0 * layout.trace_product(&self.d, &s.a, pattern).re;
        layout.fused_backaction(&self.d, pattern, &s.a, x, rho, x_a, &mut s.bb);

        self.lv.rk4_step(pattern, rho, dt, &mut s.rk4);
        layout.axpy2(pattern, rho, sk * dw, &s.a, 0.5 * sk * sk * (dw * dw - dt), &s.bb);

        let tr = layout.trace(rho).re;
        if !tr.is_finite() || (tr - 1.0).abs() > 0.1 {
            return Err(format!("trace renormalization factor {tr:.4} left the 10% band; reduce dt_int"));
        }
        layout.scale(pattern, rho, 1.0 / tr);
        if hermitize {
            layout.hermitize(pattern, rho);
        }
        Ok(x)
    }
}

fn top_level_population(rho: &[C64], layout: Layout) -> f64 {
    let n = layout.n_fock;
    let dim = layout.dim();
    (0..layout.n_qubit_states)
        .map(|z| {
            let i = z * n + n - 1;
            rho[i * dim + i].re
        })
        .sum()
}

/// Convenience wrapper building a one-off integrator.
pub fn simulate_homodyne_trajectory(
    spec: &QuantumSystemSpec,
    z: usize,
    seed: u64,
    timing: Timing,
) -> Result<HomodyneTrajectory> {
    SmeIntegrator::new(spec, timing)?.simulate(z, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::spec::Model;

    fn spec(n_fock: usize) -> QuantumSystemSpec {
        QuantumSystemSpec {
            n_fock,
            ..QuantumSystemSpec::two_qubit_readout(Model::Dispersive)
        }
    }

    #[test]
    fn record_has_requested_length_and_is_seeded() {
        let timing = Timing::new(1e-3, 1e-2, 0.5).unwrap();
        let integ = SmeIntegrator::new(&spec(8), timing).unwrap();
        let a = integ.simulate(3, 11).unwrap();
        let b = integ.simulate(3, 11).unwrap();
        let c = integ.simulate(3, 12).unwrap();
        assert_eq!(a.j_record.len(), 50);
        assert_eq!(a, b);
        assert_ne!(a.j_record, c.j_record);
    }

    #[test]
    fn undriven_cavity_gives_white_noise() {
        let s = QuantumSystemSpec {
            epsilon0: 0.0,
            ..spec(4)
        };
        let timing = Timing::new(1e-3, 1e-2, 20.0).unwrap();
        let integ = SmeIntegrator::new(&s, timing).unwrap();
        let run = integ
            .run(
                0,
                5,
                TrajectoryOptions {
                    conditional: true,
                    populations: false,
                },
            )
            .unwrap();
        let j = &run.trajectory.j_record;
        assert!(run.trajectory.x_conditional.unwrap().iter().all(|x| x.abs() < 1e-12));
        let n = j.len() as f64;
        let mean = j.iter().sum::<f64>() / n;
        let var = j.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * (100.0 / n).sqrt(), "mean {mean}");
        assert!((var / 100.0 - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn diffusion_term_matches_dense_formula() {
        // First-step back-action from the kernel against a dense evaluation.
        let s = spec(5);
        let timing = Timing::new(1e-3, 1e-3, 1e-3).unwrap();
        let integ = SmeIntegrator::new(&s, timing).unwrap();
        let layout = integ.lv.layout();
        let dim = layout.dim();
        let pattern = Pattern::full(4);
        let mut st = Scratch {
            rho: DensityMatrix::qubit_basis_vacuum(1, 4, 5).unwrap().elements,
            a: vec![C64::new(0.0, 0.0); dim * dim],
            bb: vec![C64::new(0.0, 0.0); dim * dim],
            rk4: Rk4Workspace::new(dim),
        };
        // Put something non-trivial in the cavity first.
        for _ in 0..200 {
            integ.lv.rk4_step(&pattern, &mut st.rho, 1e-2, &mut st.rk4);
        }
        let rho = nalgebra::DMatrix::from_row_slice(dim, dim, &st.rho);
        let d = integ.ops.annihilation.to_dense();
        let h = |m: &nalgebra::DMatrix<C64>| {
            let v = &d * m + m * d.adjoint();
            let x = v.trace();
            v - m * x
        };
        let a = h(&rho);
        let x = (&d * &rho + &rho * d.adjoint()).trace();
        let xa = (&d * &a + &a * d.adjoint()).trace();
        let bb = &d * &a + &a * d.adjoint() - &rho * xa - &a * x;
        let before = st.rho.clone();
        integ.step(&pattern, &mut st, 0.0, 1.0, 1e-3, true).unwrap();
        let got_a = nalgebra::DMatrix::from_row_slice(dim, dim, &st.a);
        let got_bb = nalgebra::DMatrix::from_row_slice(dim, dim, &st.bb);
        assert!((got_a - a).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-12);
        assert!((got_bb - bb).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-12);
        assert_ne!(before, st.rho);
    }
}
