use super::spec::{derive_dispersive_params, Model, QuantumSystemSpec};
use super::C64;
use crate::error::{Error, Result};

/// Coherent amplitude `α_z(t)` of the cavity for qubit state `z` in the
/// dispersive model, starting from vacuum when the drive switches on at t=0.
///
/// Solves `α̇ = −iε₀ − (i(Δ_c + ⟨χ̂⟩_z) + κ/2) α` in closed form.
pub fn analytic_cavity_amplitude(spec: &QuantumSystemSpec, z: usize, t: f64) -> Result<C64> {
    if spec.model != Model::Dispersive {
        return Err(Error::UnsupportedModel(
            "analytic pointer amplitudes exist only for the dispersive model".into(),
        ));
    }
    if z >= spec.n_qubit_states() {
        return Err(Error::Domain(format!("qubit state {z} out of range")));
    }
    let p = derive_dispersive_params(spec)?;
    let rate = C64::new(spec.kappa / 2.0, spec.delta_c + p.chi_expectation(z));
    let ss = C64::new(0.0, -spec.epsilon0) / rate;
    if t.is_infinite() {
        return Ok(ss);
    }
    Ok(ss * (C64::new(1.0, 0.0) - (-rate * t).exp()))
}

/// Steady-state amplitude `α_{z,ss}`.
pub fn steady_state_amplitude(spec: &QuantumSystemSpec, z: usize) -> Result<C64> {
    analytic_cavity_amplitude(spec, z, f64::INFINITY)
}
