use serde::{Deserialize, Serialize};

use super::liouville::{Liouvillian, Pattern, RowOp, Rk4Workspace};
use super::ops::{build_operators, C64};
use super::spec::QuantumSystemSpec;
use super::state::DensityMatrix;
use crate::error::{Error, Result};

/// Recording choices for [`unconditional_evolve`].
#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Interval between recorded samples; must be a multiple of `dt`.
    pub record_interval: f64,
    /// Keep a copy of `ρ` every this many recorded samples.
    pub checkpoint_every: Option<usize>,
}

/// Time series from the unconditional master equation. Sample 0 is `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub times: Vec<f64>,
    /// `⟨d̂ + d̂†⟩(t)`.
    pub quadrature: Vec<f64>,
    /// `P_z(t) = tr(ρ(t) |z⟩⟨z| ⊗ I)`, one row per sample.
    pub populations: Vec<Vec<f64>>,
    pub checkpoints: Vec<(f64, DensityMatrix)>,
}

/// Integrates `ρ̇ = ℒρ` with classical RK4 at fixed step `dt`.
pub fn unconditional_evolve(
    spec: &QuantumSystemSpec,
    rho0: &DensityMatrix,
    tau_m: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    let ops = build_operators(spec)?;
    if rho0.dim != ops.dim() {
        return Err(Error::Dimension(format!(
            "initial state has dim {} but the system has dim {}",
            rho0.dim,
            ops.dim()
        )));
    }
    rho0.validate()?;
    let timing = super::timing::Timing::new(dt, opts.record_interval, tau_m)?;
    let lv = Liouvillian::new(&ops);
    let layout = lv.layout();
    let pattern = lv.closure(&Pattern::of_state(&rho0.elements, layout.n_qubit_states, layout.n_fock));
    let d = RowOp::new(&ops.annihilation);

    let mut rho = rho0.elements.clone();
    let mut ws = Rk4Workspace::new(layout.dim());
    let mut out = Evolution {
        times: Vec::new(),
        quadrature: Vec::new(),
        populations: Vec::new(),
        checkpoints: Vec::new(),
    };
    let record = |rho: &[C64], t: f64, out: &mut Evolution, k: usize| {
        out.times.push(t);
        out.quadrature.push(2.0 * layout.trace_product(&d, rho, &pattern).re);
        out.populations.push(populations(rho, layout.n_qubit_states, layout.n_fock));
        if let Some(every) = opts.checkpoint_every {
            if every > 0 && k % every == 0 {
                out.checkpoints.push((
                    t,
                    DensityMatrix {
                        dim: layout.dim(),
                        elements: rho.to_vec(),
                    },
                ));
            }
        }
    };
    record(&rho, 0.0, &mut out, 0);
    let per = timing.steps_per_record();
    for k in 0..timing.n_records() {
        for _ in 0..per {
            lv.rk4_step(&pattern, &mut rho, dt, &mut ws);
        }
        let t = timing.record_time(k);
        let drift = (layout.trace(&rho) - C64::new(1.0, 0.0)).norm();
        if drift > 1e-6 || !drift.is_finite() {
            return Err(Error::Integration {
                time: t,
                reason: format!("trace drifted by {drift:.3e}; reduce dt"),
            });
        }
        record(&rho, t, &mut out, k + 1);
    }
    Ok(out)
}

/// Qubit-state populations of a flat `dim × dim` state.
pub(crate) fn populations(rho: &[C64], n_qubit_states: usize, n_fock: usize) -> Vec<f64> {
    let dim = n_qubit_states * n_fock;
    (0..n_qubit_states)
        .map(|z| (0..n_fock).map(|m| rho[(z * n_fock + m) * (dim + 1)].re).sum())
        .collect()
}
