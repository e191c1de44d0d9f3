use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Hamiltonian governs the measured system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Second-order dispersive approximation of the Jaynes-Cummings model.
    Dispersive,
    /// Multi-qubit Jaynes-Cummings Hamiltonian in the rotating-wave approximation.
    JaynesCummings,
}

/// Physical parameters of the qubits + readout cavity. All rates and
/// frequencies are in units of `kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSystemSpec {
    pub model: Model,
    pub kappa: f64,
    pub delta_c: f64,
    pub epsilon0: f64,
    pub delta_q: Vec<f64>,
    pub g: Vec<f64>,
    pub gamma_h: f64,
    pub n_fock: usize,
    #[serde(default)]
    pub include_correlated_decay: bool,
    /// Keep the cavity-mediated qubit-qubit exchange `J_jk` of the dispersive
    /// model. Turning it off gives the exactly QND limit.
    #[serde(default = "default_true")]
    pub include_exchange: bool,
}

fn default_true() -> bool {
    true
}

impl QuantumSystemSpec {
    /// Two qubits coupled to one cavity with the readout parameters used
    /// throughout: `Δc = 0`, `ε₀ = 2`, `Δq = (180, 130)`, `g/δ = 0.1`,
    /// `γ_h = 0.01`.
    pub fn two_qubit_readout(model: Model) -> Self {
        Self {
            model,
            kappa: 1.0,
            delta_c: 0.0,
            epsilon0: 2.0,
            delta_q: vec![180.0, 130.0],
            g: vec![18.0, 13.0],
            gamma_h: 1e-2,
            n_fock: 30,
            include_correlated_decay: false,
            include_exchange: true,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.delta_q.len()
    }

    /// Number of joint qubit basis states, `2^N_q`.
    pub fn n_qubit_states(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn dim(&self) -> usize {
        self.n_qubit_states() * self.n_fock
    }

    /// Qubit-cavity detunings `δ_j = Δ_{q,j} − Δ_c`.
    pub fn qubit_cavity_detunings(&self) -> Vec<f64> {
        self.delta_q.iter().map(|dq| dq - self.delta_c).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::Domain(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.n_fock < 2 {
            return Err(Error::Domain(format!("n_fock must be >= 2, got {}", self.n_fock)));
        }
        if !(self.gamma_h >= 0.0) {
            return Err(Error::Domain(format!("gamma_h must be >= 0, got {}", self.gamma_h)));
        }
        if self.delta_q.is_empty() {
            return Err(Error::Domain("at least one qubit is required".into()));
        }
        if self.delta_q.len() != self.g.len() {
            return Err(Error::Dimension(format!(
                "delta_q has {} entries but g has {}",
                self.delta_q.len(),
                self.g.len()
            )));
        }
        if self.n_qubits() > 4 {
            return Err(Error::Domain(format!(
                "at most 4 qubits are supported, got {}",
                self.n_qubits()
            )));
        }
        let finite = [self.kappa, self.delta_c, self.epsilon0, self.gamma_h]
            .iter()
            .chain(&self.delta_q)
            .chain(&self.g)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("all parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Effective couplings of the dispersive model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveParams {
    pub chi: Vec<f64>,
    /// Row-major `N_q × N_q`, symmetric. The diagonal is unused and set to zero.
    pub j_coupling: Vec<f64>,
    pub delta_q_tilde: Vec<f64>,
}

impl DispersiveParams {
    pub fn j(&self, a: usize, b: usize) -> f64 {
        let n = self.chi.len();
        self.j_coupling[a * n + b]
    }

    /// `⟨χ̂⟩_z = Σ_j χ_j s_j(z)` with `s_j = +1` when qubit `j` is in `|1⟩`.
    pub fn chi_expectation(&self, z: usize) -> f64 {
        let nq = self.chi.len();
        self.chi
            .iter()
            .enumerate()
            .map(|(j, chi)| chi * qubit_sign(z, j, nq))
            .sum()
    }
}

/// `σ_z` eigenvalue of qubit `j` in joint basis state `z`; qubit 0 is the
/// most significant bit.
pub fn qubit_sign(z: usize, j: usize, n_qubits: usize) -> f64 {
    if qubit_bit(z, j, n_qubits) {
        1.0
    } else {
        -1.0
    }
}

pub fn qubit_bit(z: usize, j: usize, n_qubits: usize) -> bool {
    (z >> (n_qubits - 1 - j)) & 1 == 1
}

pub fn derive_dispersive_params(spec: &QuantumSystemSpec) -> Result<DispersiveParams> {
    spec.validate()?;
    let delta = spec.qubit_cavity_detunings();
    if let Some(j) = delta.iter().position(|d| *d == 0.0) {
        return Err(Error::Domain(format!(
            "qubit {} is resonant with the cavity (delta_q - delta_c = 0)",
            j + 1
        )));
    }
    let n = delta.len();
    let chi: Vec<f64> = spec.g.iter().zip(&delta).map(|(g, d)| g * g / d).collect();
    let mut j_coupling = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                j_coupling[a * n + b] =
                    spec.g[a] * spec.g[b] * (delta[a] + delta[b]) / (2.0 * delta[a] * delta[b]);
            }
        }
    }
    let delta_q_tilde = spec.delta_q.iter().zip(&chi).map(|(dq, c)| dq + c).collect();
    Ok(DispersiveParams {
        chi,
        j_coupling,
        delta_q_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn readout_parameters_give_expected_shifts() {
        let spec = QuantumSystemSpec::two_qubit_readout(Model::Dispersive);
        let p = derive_dispersive_params(&spec).unwrap();
        assert_relative_eq!(p.chi[0], 1.8, epsilon = 1e-12);
        assert_relative_eq!(p.chi[1], 1.3, epsilon = 1e-12);
        assert_relative_eq!(p.j(0, 1), 18.0 * 13.0 * 310.0 / (2.0 * 180.0 * 130.0), epsilon = 1e-12);
        assert_relative_eq!(p.j(0, 1), 1.55, epsilon = 1e-12);
        assert_eq!(p.j(0, 1), p.j(1, 0));
        assert_relative_eq!(p.delta_q_tilde[0], 181.8, epsilon = 1e-12);
    }

    #[test]
    fn chi_expectation_uses_excited_positive_convention() {
        let spec = QuantumSystemSpec::two_qubit_readout(Model::Dispersive);
        let p = derive_dispersive_params(&spec).unwrap();
        assert_relative_eq!(p.chi_expectation(0b11), 3.1, epsilon = 1e-12);
        assert_relative_eq!(p.chi_expectation(0b10), 0.5, epsilon = 1e-12);
        assert_relative_eq!(p.chi_expectation(0b01), -0.5, epsilon = 1e-12);
        assert_relative_eq!(p.chi_expectation(0b00), -3.1, epsilon = 1e-12);
    }

    #[test]
    fn resonant_qubit_is_rejected_by_name() {
        let mut spec = QuantumSystemSpec::two_qubit_readout(Model::Dispersive);
        spec.delta_q[1] = spec.delta_c;
        let err = derive_dispersive_params(&spec).unwrap_err();
        assert!(err.to_string().contains("qubit 2"), "{err}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = QuantumSystemSpec::two_qubit_readout(Model::Dispersive);
        spec.n_fock = 1;
        assert!(spec.validate().is_err());
        let mut spec = QuantumSystemSpec::two_qubit_readout(Model::Dispersive);
        spec.kappa = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = QuantumSystemSpec::two_qubit_readout(Model::Dispersive);
        spec.g.pop();
        assert!(spec.validate().is_err());
    }
}
