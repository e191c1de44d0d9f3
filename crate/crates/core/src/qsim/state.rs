use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::ops::{basis_index, BlockOp, C64};
use crate::error::{Error, Result};

/// Dense density matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub dim: usize,
    pub elements: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            elements: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    /// `|z, 0⟩⟨z, 0|`: qubits in basis state `z`, cavity in vacuum.
    pub fn qubit_basis_vacuum(z: usize, n_qubit_states: usize, n_fock: usize) -> Result<Self> {
        if z >= n_qubit_states {
            return Err(Error::Domain(format!(
                "qubit state {z} out of range for {n_qubit_states} basis states"
            )));
        }
        let mut rho = Self::zeros(n_qubit_states * n_fock);
        let i = basis_index(z, 0, n_fock);
        rho.elements[i * rho.dim + i] = C64::new(1.0, 0.0);
        Ok(rho)
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let mut elements = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                elements.push(m[(r, c)]);
            }
        }
        Self { dim, elements }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.elements)
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.elements[r * self.dim + c]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `max |ρ − ρ†|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dense();
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// `tr(O ρ)`.
    pub fn expect(&self, op: &BlockOp) -> C64 {
        let n = op.n_fock();
        let mut acc = C64::new(0.0, 0.0);
        for e in op.entries() {
            for band in e.op.bands() {
                for (m, v) in band.values.iter().enumerate() {
                    let k = m as isize + band.offset;
                    if k < 0 || k as usize >= n {
                        continue;
                    }
                    // O[(row,m),(col,k)] ρ[(col,k),(row,m)]
                    let i = basis_index(e.row, m, n);
                    let j = basis_index(e.col, k as usize, n);
                    acc += v * self.get(j, i);
                }
            }
        }
        acc
    }

    /// Population of each joint qubit basis state, `tr(ρ (|z⟩⟨z| ⊗ I))`.
    pub fn qubit_populations(&self, n_fock: usize) -> Vec<f64> {
        let nz = self.dim / n_fock;
        (0..nz)
            .map(|z| {
                (0..n_fock)
                    .map(|m| {
                        let i = basis_index(z, m, n_fock);
                        self.get(i, i).re
                    })
                    .sum()
            })
            .collect()
    }

    /// Checks the trace, Hermiticity and positivity tolerances.
    pub fn validate(&self) -> Result<()> {
        if self.elements.len() != self.dim * self.dim {
            return Err(Error::Dimension(format!(
                "density matrix of dim {} has {} elements",
                self.dim,
                self.elements.len()
            )));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::Domain(format!("trace is {tr}, expected 1")));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::Domain(format!("not Hermitian: max |rho - rho^+| = {herm:e}")));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -1e-8 {
            return Err(Error::Domain(format!("not positive: min eigenvalue {min_ev:e}")));
        }
        Ok(())
    }
}
