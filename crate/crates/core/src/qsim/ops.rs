//! Operators on the `(qubit 1 ⊗ … ⊗ qubit N) ⊗ cavity` Hilbert space.
//!
//! Every operator needed here is banded in the cavity Fock index (at most
//! one ladder operator per term), so an operator is stored as a sparse grid
//! of qubit-basis blocks, each holding a banded `n_fock × n_fock` matrix.
//! Basis index is `z · n_fock + m` for joint qubit state `z` and photon
//! number `m`.

use nalgebra::DMatrix;
use num_complex::Complex;

use super::spec::{derive_dispersive_params, Model, QuantumSystemSpec};
use crate::error::Result;

pub type C64 = Complex<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One diagonal band: `values[m] = O[m][m + offset]` (zero where out of range).
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub offset: isize,
    pub values: Vec<C64>,
}

/// Banded operator on the cavity factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityOp {
    n: usize,
    bands: Vec<Band>,
}

impl CavityOp {
    pub fn zero(n: usize) -> Self {
        Self { n, bands: Vec::new() }
    }

    fn from_band(n: usize, offset: isize, f: impl Fn(usize) -> C64) -> Self {
        let values = (0..n)
            .map(|m| {
                let k = m as isize + offset;
                if k >= 0 && (k as usize) < n {
                    f(m)
                } else {
                    ZERO
                }
            })
            .collect();
        let mut op = Self {
            n,
            bands: vec![Band { offset, values }],
        };
        op.prune();
        op
    }

    pub fn identity(n: usize) -> Self {
        Self::from_band(n, 0, |_| ONE)
    }

    /// Truncated annihilation operator: `d|m⟩ = √m |m−1⟩`.
    pub fn annihilation(n: usize) -> Self {
        Self::from_band(n, 1, |m| C64::new(((m + 1) as f64).sqrt(), 0.0))
    }

    pub fn creation(n: usize) -> Self {
        Self::annihilation(n).adjoint()
    }

    pub fn number(n: usize) -> Self {
        Self::from_band(n, 0, |m| C64::new(m as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn is_zero(&self) -> bool {
        self.bands.is_empty()
    }

    fn prune(&mut self) {
        self.bands.retain(|b| b.values.iter().any(|v| *v != ZERO));
        self.bands.sort_by_key(|b| b.offset);
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for b in &mut out.bands {
            for v in &mut b.values {
                *v *= c;
            }
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for ob in &other.bands {
            match out.bands.iter_mut().find(|b| b.offset == ob.offset) {
                Some(b) => {
                    for (v, w) in b.values.iter_mut().zip(&ob.values) {
                        *v += w;
                    }
                }
                None => out.bands.push(ob.clone()),
            }
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n as isize;
        let mut out = Self::zero(self.n);
        for a in &self.bands {
            for b in &other.bands {
                let offset = a.offset + b.offset;
                let mut values = vec![ZERO; self.n];
                for m in 0..n {
                    let l = m + a.offset;
                    let k = l + b.offset;
                    if (0..n).contains(&l) && (0..n).contains(&k) {
                        values[m as usize] = a.values[m as usize] * b.values[l as usize];
                    }
                }
                out = out.add(&Self {
                    n: self.n,
                    bands: vec![Band { offset, values }],
                });
            }
        }
        out.prune();
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n as isize;
        let bands = self
            .bands
            .iter()
            .map(|b| {
                let mut values = vec![ZERO; self.n];
                for m in 0..n {
                    let k = m - b.offset;
                    if (0..n).contains(&k) {
                        values[m as usize] = b.values[k as usize].conj();
                    }
                }
                Band {
                    offset: -b.offset,
                    values,
                }
            })
            .collect();
        let mut out = Self { n: self.n, bands };
        out.prune();
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for b in &self.bands {
            for (row, v) in b.values.iter().enumerate() {
                let col = row as isize + b.offset;
                if col >= 0 && (col as usize) < self.n {
                    m[(row, col as usize)] = *v;
                }
            }
        }
        m
    }
}

/// Non-zero qubit block `(row, col)` of a [`BlockOp`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub op: CavityOp,
}

/// Operator on the full space as a sparse grid of banded cavity blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOp {
    n_qubit_states: usize,
    n_fock: usize,
    entries: Vec<BlockEntry>,
}

impl BlockOp {
    pub fn zero(n_qubit_states: usize, n_fock: usize) -> Self {
        Self {
            n_qubit_states,
            n_fock,
            entries: Vec::new(),
        }
    }

    /// `Q ⊗ C` for a dense row-major qubit matrix `Q`.
    pub fn kron(qubit: &[C64], n_qubit_states: usize, cavity: &CavityOp) -> Self {
        assert_eq!(qubit.len(), n_qubit_states * n_qubit_states);
        let mut entries = Vec::new();
        for row in 0..n_qubit_states {
            for col in 0..n_qubit_states {
                let q = qubit[row * n_qubit_states + col];
                if q != ZERO {
                    let op = cavity.scale(q);
                    if !op.is_zero() {
                        entries.push(BlockEntry { row, col, op });
                    }
                }
            }
        }
        Self {
            n_qubit_states,
            n_fock: cavity.dim(),
            entries,
        }
    }

    pub fn n_qubit_states(&self) -> usize {
        self.n_qubit_states
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        self.n_qubit_states * self.n_fock
    }

    pub fn entries(&self) -> &[BlockEntry] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&CavityOp> {
        self.entries
            .iter()
            .find(|e| e.row == row && e.col == col)
            .map(|e| &e.op)
    }

    fn insert_add(&mut self, row: usize, col: usize, op: CavityOp) {
        match self.entries.iter_mut().find(|e| e.row == row && e.col == col) {
            Some(e) => e.op = e.op.add(&op),
            None => self.entries.push(BlockEntry { row, col, op }),
        }
    }

    fn prune(&mut self) {
        self.entries.retain(|e| !e.op.is_zero());
        self.entries.sort_by_key(|e| (e.row, e.col));
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for e in &other.entries {
            out.insert_add(e.row, e.col, e.op.clone());
        }
        out.prune();
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.op = e.op.scale(c);
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n_qubit_states, self.n_fock);
        for a in &self.entries {
            for b in other.entries.iter().filter(|b| b.row == a.col) {
                out.insert_add(a.row, b.col, a.op.mul(&b.op));
            }
        }
        out.prune();
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n_qubit_states, self.n_fock);
        for e in &self.entries {
            out.insert_add(e.col, e.row, e.op.adjoint());
        }
        out.prune();
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self).scale(-ONE))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.n_fock;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for e in &self.entries {
            let block = e.op.to_dense();
            m.view_mut((e.row * n, e.col * n), (n, n)).copy_from(&block);
        }
        m
    }

    /// Largest entry magnitude; zero for the zero operator.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.op.bands().iter().flat_map(|b| b.values.iter()))
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Dense qubit-register matrices (row-major, `2^N × 2^N`).
pub mod qubit {
    use super::{C64, ONE, ZERO};
    use crate::qsim::spec::qubit_bit;

    pub fn identity(n_qubits: usize) -> Vec<C64> {
        let d = 1 << n_qubits;
        let mut m = vec![ZERO; d * d];
        for z in 0..d {
            m[z * d + z] = ONE;
        }
        m
    }

    pub fn sigma_z(j: usize, n_qubits: usize) -> Vec<C64> {
        let d = 1 << n_qubits;
        let mut m = vec![ZERO; d * d];
        for z in 0..d {
            let s = if qubit_bit(z, j, n_qubits) { 1.0 } else { -1.0 };
            m[z * d + z] = C64::new(s, 0.0);
        }
        m
    }

    /// `σ₋` of qubit `j`: `|1⟩ → |0⟩`.
    pub fn sigma_minus(j: usize, n_qubits: usize) -> Vec<C64> {
        let d = 1 << n_qubits;
        let flip = 1 << (n_qubits - 1 - j);
        let mut m = vec![ZERO; d * d];
        for z in 0..d {
            if qubit_bit(z, j, n_qubits) {
                m[(z ^ flip) * d + z] = ONE;
            }
        }
        m
    }

    pub fn sigma_plus(j: usize, n_qubits: usize) -> Vec<C64> {
        let d = 1 << n_qubits;
        let m = sigma_minus(j, n_qubits);
        let mut t = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                t[c * d + r] = m[r * d + c].conj();
            }
        }
        t
    }

    pub fn projector(z: usize, n_qubits: usize) -> Vec<C64> {
        let d = 1 << n_qubits;
        let mut m = vec![ZERO; d * d];
        m[z * d + z] = ONE;
        m
    }

    pub fn matmul(a: &[C64], b: &[C64], d: usize) -> Vec<C64> {
        let mut out = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let v = a[r * d + k];
                if v != ZERO {
                    for c in 0..d {
                        out[r * d + c] += v * b[k * d + c];
                    }
                }
            }
        }
        out
    }
}

/// Operators of the measured system for a given spec.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub n_qubits: usize,
    pub n_fock: usize,
    /// Cavity annihilation `d̂`, identity on the qubits.
    pub annihilation: BlockOp,
    pub sigma_z: Vec<BlockOp>,
    pub sigma_minus: Vec<BlockOp>,
    pub hamiltonian: BlockOp,
    /// Collapse operators with rates folded in: `√κ d̂`, `√γ_h σ̂₋ⱼ`, and
    /// optionally `√κ Σⱼ (gⱼ/δⱼ) σ̂₋ⱼ`.
    pub collapse: Vec<BlockOp>,
}

impl OperatorSet {
    pub fn n_qubit_states(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.n_qubit_states() * self.n_fock
    }
}

pub fn build_operators(spec: &QuantumSystemSpec) -> Result<OperatorSet> {
    spec.validate()?;
    let nq = spec.n_qubits();
    let dq = 1 << nq;
    let n = spec.n_fock;
    let re = |x: f64| C64::new(x, 0.0);

    let id_q = qubit::identity(nq);
    let d_cav = CavityOp::annihilation(n);
    let id_c = CavityOp::identity(n);
    let num_c = CavityOp::number(n);

    let annihilation = BlockOp::kron(&id_q, dq, &d_cav);
    let creation = annihilation.adjoint();
    let sigma_z: Vec<BlockOp> = (0..nq)
        .map(|j| BlockOp::kron(&qubit::sigma_z(j, nq), dq, &id_c))
        .collect();
    let sigma_minus: Vec<BlockOp> = (0..nq)
        .map(|j| BlockOp::kron(&qubit::sigma_minus(j, nq), dq, &id_c))
        .collect();

    let mut h = BlockOp::kron(&id_q, dq, &num_c.scale(re(spec.delta_c)));
    h = h.add(&annihilation.add(&creation).scale(re(spec.epsilon0)));

    match spec.model {
        Model::Dispersive => {
            let p = derive_dispersive_params(spec)?;
            for j in 0..nq {
                h = h.add(&sigma_z[j].scale(re(p.delta_q_tilde[j] / 2.0)));
                h = h.add(&BlockOp::kron(
                    &qubit::sigma_z(j, nq),
                    dq,
                    &num_c.scale(re(p.chi[j])),
                ));
            }
            if spec.include_exchange {
                for j in 0..nq {
                    for k in 0..nq {
                        if j == k {
                            continue;
                        }
                        let hop = qubit::matmul(
                            &qubit::sigma_minus(j, nq),
                            &qubit::sigma_plus(k, nq),
                            dq,
                        );
                        h = h.add(&BlockOp::kron(&hop, dq, &id_c.scale(re(p.j(j, k)))));
                    }
                }
            }
        }
        Model::JaynesCummings => {
            let d_dag = d_cav.adjoint();
            for j in 0..nq {
                h = h.add(&sigma_z[j].scale(re(spec.delta_q[j] / 2.0)));
                let up = BlockOp::kron(&qubit::sigma_plus(j, nq), dq, &d_cav);
                let down = BlockOp::kron(&qubit::sigma_minus(j, nq), dq, &d_dag);
                h = h.add(&up.add(&down).scale(re(spec.g[j])));
            }
        }
    }

    let mut collapse = vec![annihilation.scale(re(spec.kappa.sqrt()))];
    if spec.gamma_h > 0.0 {
        for s in &sigma_minus {
            collapse.push(s.scale(re(spec.gamma_h.sqrt())));
        }
    }
    if spec.include_correlated_decay && spec.model == Model::Dispersive {
        let delta = spec.qubit_cavity_detunings();
        let mut c = BlockOp::zero(dq, n);
        for j in 0..nq {
            c = c.add(&sigma_minus[j].scale(re(spec.g[j] / delta[j])));
        }
        collapse.push(c.scale(re(spec.kappa.sqrt())));
    }

    Ok(OperatorSet {
        n_qubits: nq,
        n_fock: n,
        annihilation,
        sigma_z,
        sigma_minus,
        hamiltonian: h,
        collapse,
    })
}

/// Dense-matrix index of `|z, m⟩`.
pub fn basis_index(z: usize, m: usize, n_fock: usize) -> usize {
    z * n_fock + m
}
