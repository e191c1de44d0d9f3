//! Block-sparse Lindblad superoperator kernel.
//!
//! States are dense `dim × dim` row-major buffers, but only the qubit blocks
//! in a [`Pattern`] are ever touched. The pattern is the closure of the
//! initial state's blocks under the Liouvillian, so every block outside it
//! stays exactly zero for the whole evolution.

use super::ops::{BlockOp, OperatorSet, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Set of qubit blocks `(row, col)` that may be non-zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    n_qubit_states: usize,
    active: Vec<bool>,
    blocks: Vec<(usize, usize)>,
}

impl Pattern {
    pub fn empty(n_qubit_states: usize) -> Self {
        Self {
            n_qubit_states,
            active: vec![false; n_qubit_states * n_qubit_states],
            blocks: Vec::new(),
        }
    }

    pub fn full(n_qubit_states: usize) -> Self {
        let mut p = Self::empty(n_qubit_states);
        for a in 0..n_qubit_states {
            for b in 0..n_qubit_states {
                p.insert(a, b);
            }
        }
        p
    }

    /// Blocks of `rho` holding any non-zero entry.
    pub fn of_state(rho: &[C64], n_qubit_states: usize, n_fock: usize) -> Self {
        let dim = n_qubit_states * n_fock;
        let mut p = Self::empty(n_qubit_states);
        for a in 0..n_qubit_states {
            for b in 0..n_qubit_states {
                let nonzero = (0..n_fock).any(|m| {
                    let start = (a * n_fock + m) * dim + b * n_fock;
                    rho[start..start + n_fock].iter().any(|v| *v != ZERO)
                });
                if nonzero {
                    p.insert(a, b);
                }
            }
        }
        p
    }

    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let idx = a * self.n_qubit_states + b;
        if self.active[idx] {
            return false;
        }
        self.active[idx] = true;
        self.blocks.push((a, b));
        self.blocks.sort_unstable();
        true
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.active[a * self.n_qubit_states + b]
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Clone, Debug)]
struct BandTerm {
    offset: isize,
    values: Vec<C64>,
    conj: Vec<C64>,
}

#[derive(Clone, Debug)]
struct RowTerm {
    col: usize,
    bands: Vec<BandTerm>,
}

/// A [`BlockOp`] re-indexed by qubit row for the hot loops.
#[derive(Clone, Debug)]
pub struct RowOp {
    rows: Vec<Vec<RowTerm>>,
}

impl RowOp {
    pub fn new(op: &BlockOp) -> Self {
        let mut rows = vec![Vec::new(); op.n_qubit_states()];
        for e in op.entries() {
            let bands = e
                .op
                .bands()
                .iter()
                .map(|b| BandTerm {
                    offset: b.offset,
                    values: b.values.clone(),
                    conj: b.values.iter().map(|v| v.conj()).collect(),
                })
                .collect();
            rows[e.row].push(RowTerm { col: e.col, bands });
        }
        Self { rows }
    }
}

/// Block geometry of a state buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n_qubit_states: usize,
    pub n_fock: usize,
}

impl Layout {
    #[inline]
    pub fn dim(&self) -> usize {
        self.n_qubit_states * self.n_fock
    }

    #[inline]
    pub fn row_start(&self, a: usize, m: usize, b: usize) -> usize {
        (a * self.n_fock + m) * self.dim() + b * self.n_fock
    }

    pub fn zero_blocks(&self, pattern: &Pattern, buf: &mut [C64]) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks() {
            for m in 0..n {
                let s = self.row_start(a, m, b);
                buf[s..s + n].fill(ZERO);
            }
        }
    }

    /// `y ← y + c·x` on the active blocks.
    pub fn axpy(&self, pattern: &Pattern, y: &mut [C64], c: f64, x: &[C64]) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks() {
            for m in 0..n {
                let s = self.row_start(a, m, b);
                for (yv, xv) in y[s..s + n].iter_mut().zip(&x[s..s + n]) {
                    *yv += xv * c;
                }
            }
        }
    }

    /// `out ← x + c·k` on the active blocks.
    pub fn add_scaled(&self, pattern: &Pattern, out: &mut [C64], x: &[C64], c: f64, k: &[C64]) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks() {
            for m in 0..n {
                let s = self.row_start(a, m, b);
                for ((o, xv), kv) in out[s..s + n].iter_mut().zip(&x[s..s + n]).zip(&k[s..s + n]) {
                    *o = xv + kv * c;
                }
            }
        }
    }

    pub fn scale(&self, pattern: &Pattern, buf: &mut [C64], c: f64) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks() {
            for m in 0..n {
                let s = self.row_start(a, m, b);
                for v in &mut buf[s..s + n] {
                    *v *= c;
                }
            }
        }
    }

    pub fn trace(&self, buf: &[C64]) -> C64 {
        let d = self.dim();
        (0..d).map(|i| buf[i * d + i]).sum()
    }

    /// Replaces the active blocks by `(X + X†)/2`.
    pub fn hermitize(&self, pattern: &Pattern, buf: &mut [C64]) {
        self.hermitian_part(pattern, buf, 0.5);
    }

    /// `X ← c·(X + X†)` on the active blocks (pattern must be symmetric).
    pub fn hermitian_part(&self, pattern: &Pattern, buf: &mut [C64], c: f64) {
        let n = self.n_fock;
        let d = self.dim();
        for &(a, b) in pattern.blocks() {
            if a > b {
                continue;
            }
            for i in 0..n {
                let j0 = if a == b { i } else { 0 };
                for j in j0..n {
                    let p = (a * n + i) * d + b * n + j;
                    let q = (b * n + j) * d + a * n + i;
                    let v = (buf[p] + buf[q].conj()) * c;
                    buf[p] = v;
                    buf[q] = v.conj();
                }
            }
        }
    }

    /// `out ← O·x` restricted to the blocks of `out_pattern`.
    pub fn left_apply(&self, op: &RowOp, x: &[C64], x_pattern: &Pattern, out: &mut [C64], out_pattern: &Pattern) {
        self.zero_blocks(out_pattern, out);
        for &(a, b) in out_pattern.blocks() {
            for term in &op.rows[a] {
                if x_pattern.contains(term.col, b) {
                    for band in &term.bands {
                        self.left_band(out, a, b, x, term.col, band);
                    }
                }
            }
        }
    }

    /// `out(a,b) += B · x(c,b)` for one band `B` of a cavity block.
    #[inline]
    fn left_band(&self, out: &mut [C64], a: usize, b: usize, x: &[C64], c: usize, band: &BandTerm) {
        let n = self.n_fock as isize;
        for m in 0..n {
            let src = m + band.offset;
            if src < 0 || src >= n {
                continue;
            }
            let v = band.values[m as usize];
            if v == ZERO {
                continue;
            }
            let o = self.row_start(a, m as usize, b);
            let s = self.row_start(c, src as usize, b);
            let nn = self.n_fock;
            for (ov, xv) in out[o..o + nn].iter_mut().zip(&x[s..s + nn]) {
                *ov += v * xv;
            }
        }
    }

    /// Makes every diagonal block exactly Hermitian. Without this, rounding
    /// leaves an anti-Hermitian residue that the Hermitian-input shortcut in
    /// [`Liouvillian::apply`] does not damp.
    pub fn symmetrize_diagonal_blocks(&self, pattern: &Pattern, buf: &mut [C64]) {
        let n = self.n_fock;
        for &(a, _) in pattern.blocks().iter().filter(|(a, b)| a == b) {
            for i in 0..n {
                for j in i..n {
                    let p = self.row_start(a, i, a) + j;
                    let q = self.row_start(a, j, a) + i;
                    let v = (buf[p] + buf[q].conj()) * 0.5;
                    buf[p] = v;
                    buf[q] = v.conj();
                }
            }
        }
    }

    /// Fills blocks `a > b` with the adjoint of their mirror image.
    pub fn mirror_lower(&self, pattern: &Pattern, buf: &mut [C64]) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks().iter().filter(|(a, b)| a > b) {
            for i in 0..n {
                for j in 0..n {
                    buf[self.row_start(a, i, b) + j] = buf[self.row_start(b, j, a) + i].conj();
                }
            }
        }
    }

    /// `out(a,b) += B₁ · x(c₁,c₂) · B₂†`.
    #[inline]
    fn sandwich_band(
        &self,
        out: &mut [C64],
        (a, b): (usize, usize),
        x: &[C64],
        (c1, c2): (usize, usize),
        left: &BandTerm,
        right: &BandTerm,
    ) {
        let n = self.n_fock as isize;
        let s2 = right.offset;
        let k_lo = (-s2).max(0) as usize;
        let k_hi = (n - s2).min(n) as usize;
        if k_lo >= k_hi {
            return;
        }
        let len = k_hi - k_lo;
        let cv = &right.conj[k_lo..k_hi];
        for m in 0..n {
            let src = m + left.offset;
            if src < 0 || src >= n {
                continue;
            }
            let v = left.values[m as usize];
            if v == ZERO {
                continue;
            }
            let o = self.row_start(a, m as usize, b) + k_lo;
            let s = (self.row_start(c1, src as usize, c2) as isize + k_lo as isize + s2) as usize;
            for ((ov, xv), w) in out[o..o + len].iter_mut().zip(&x[s..s + len]).zip(cv) {
                *ov += v * (xv * w);
            }
        }
    }

    /// `out ← O·s + s·O† − c_s·s − c_ρ·ρ` for an operator `O` that acts
    /// within each qubit block (no qubit-changing entries).
    pub fn fused_backaction(
        &self,
        op: &RowOp,
        pattern: &Pattern,
        s: &[C64],
        c_s: f64,
        rho: &[C64],
        c_rho: f64,
        out: &mut [C64],
    ) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks() {
            for m in 0..n {
                let o = self.row_start(a, m, b);
                for ((ov, sv), rv) in out[o..o + n].iter_mut().zip(&s[o..o + n]).zip(&rho[o..o + n]) {
                    *ov = -(sv * c_s) - rv * c_rho;
                }
            }
            for term in op.rows[a].iter().filter(|t| t.col == a) {
                for band in &term.bands {
                    self.left_band(out, a, b, s, a, band);
                }
            }
            for term in op.rows[b].iter().filter(|t| t.col == b) {
                for band in &term.bands {
                    let s2 = band.offset;
                    let k_lo = (-s2).max(0) as usize;
                    let k_hi = (n as isize - s2).min(n as isize) as usize;
                    if k_lo >= k_hi {
                        continue;
                    }
                    let cv = &band.conj[k_lo..k_hi];
                    for m in 0..n {
                        let o = self.row_start(a, m, b) + k_lo;
                        let src = (o as isize + s2) as usize;
                        let len = k_hi - k_lo;
                        let (dst, from) = (&mut out[o..o + len], &s[src..src + len]);
                        for ((ov, xv), w) in dst.iter_mut().zip(from).zip(cv) {
                            *ov += xv * w;
                        }
                    }
                }
            }
        }
    }

    /// `y ← y + c₁·x₁ + c₂·x₂` on the active blocks.
    pub fn axpy2(&self, pattern: &Pattern, y: &mut [C64], c1: f64, x1: &[C64], c2: f64, x2: &[C64]) {
        let n = self.n_fock;
        for &(a, b) in pattern.blocks() {
            for m in 0..n {
                let st = self.row_start(a, m, b);
                for ((yv, u), v) in y[st..st + n].iter_mut().zip(&x1[st..st + n]).zip(&x2[st..st + n]) {
                    *yv += u * c1 + v * c2;
                }
            }
        }
    }

    /// Real part of `tr(O x)` for an operator diagonal in the qubit blocks.
    pub fn trace_product(&self, op: &RowOp, x: &[C64], pattern: &Pattern) -> C64 {
        let n = self.n_fock as isize;
        let d = self.dim();
        let mut acc = ZERO;
        for a in 0..self.n_qubit_states {
            for term in &op.rows[a] {
                // tr(O x) = Σ O[(a,m),(c,k)] x[(c,k),(a,m)]
                if !pattern.contains(term.col, a) {
                    continue;
                }
                for band in &term.bands {
                    for m in 0..n {
                        let k = m + band.offset;
                        if k < 0 || k >= n {
                            continue;
                        }
                        let row = term.col * self.n_fock + k as usize;
                        let col = a * self.n_fock + m as usize;
                        acc += band.values[m as usize] * x[row * d + col];
                    }
                }
            }
        }
        acc
    }
}

/// `ℒρ = Kρ + ρK† + Σ_c cρc†` with `K = −iH − ½Σ c†c`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    layout: Layout,
    k_eff: RowOp,
    k_eff_op: BlockOp,
    jumps: Vec<RowOp>,
    jump_ops: Vec<BlockOp>,
}

/// Scratch buffers for one RK4 step.
#[derive(Clone, Debug)]
pub struct Rk4Workspace {
    k: Vec<C64>,
    stage: Vec<C64>,
    acc: Vec<C64>,
}

impl Rk4Workspace {
    pub fn new(dim: usize) -> Self {
        Self {
            k: vec![ZERO; dim * dim],
            stage: vec![ZERO; dim * dim],
            acc: vec![ZERO; dim * dim],
        }
    }
}

impl Liouvillian {
    pub fn new(ops: &OperatorSet) -> Self {
        let layout = Layout {
            n_qubit_states: ops.n_qubit_states(),
            n_fock: ops.n_fock,
        };
        let mut k_eff = ops.hamiltonian.scale(C64::new(0.0, -1.0));
        for c in &ops.collapse {
            k_eff = k_eff.add(&c.adjoint().mul(c).scale(C64::new(-0.5, 0.0)));
        }
        Self {
            layout,
            k_eff: RowOp::new(&k_eff),
            k_eff_op: k_eff,
            jumps: ops.collapse.iter().map(RowOp::new).collect(),
            jump_ops: ops.collapse.clone(),
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Smallest pattern containing `initial` and invariant under `ℒ`.
    pub fn closure(&self, initial: &Pattern) -> Pattern {
        let nq = self.layout.n_qubit_states;
        let mut p = initial.clone();
        for &(a, b) in initial.blocks() {
            p.insert(b, a);
        }
        loop {
            let mut grew = false;
            let current: Vec<(usize, usize)> = p.blocks().to_vec();
            for &(c, b) in &current {
                for e in self.k_eff_op.entries().iter().filter(|e| e.col == c) {
                    grew |= p.insert(e.row, b);
                    grew |= p.insert(b, e.row);
                }
                for j in &self.jump_ops {
                    for e1 in j.entries().iter().filter(|e| e.col == c) {
                        for e2 in j.entries().iter().filter(|e| e.col == b) {
                            grew |= p.insert(e1.row, e2.row);
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        debug_assert!(p.blocks().iter().all(|&(a, b)| a < nq && b < nq));
        p
    }

    /// `out ← ℒ(rho)` on the blocks of a closed pattern. `rho` must be
    /// Hermitian: the jump terms are computed on blocks `a ≤ b` and mirrored.
    pub fn apply(&self, pattern: &Pattern, rho: &[C64], out: &mut [C64]) {
        let l = &self.layout;
        l.left_apply(&self.k_eff, rho, pattern, out, pattern);
        l.hermitian_part(pattern, out, 1.0);
        for &(a, b) in pattern.blocks().iter().filter(|(a, b)| a <= b) {
            for jump in &self.jumps {
                for t1 in &jump.rows[a] {
                    for t2 in &jump.rows[b] {
                        if !pattern.contains(t1.col, t2.col) {
                            continue;
                        }
                        for b1 in &t1.bands {
                            for b2 in &t2.bands {
                                l.sandwich_band(out, (a, b), rho, (t1.col, t2.col), b1, b2);
                            }
                        }
                    }
                }
            }
        }
        l.symmetrize_diagonal_blocks(pattern, out);
        l.mirror_lower(pattern, out);
    }

    /// One classical RK4 step of `ρ̇ = ℒρ`, in place.
    pub fn rk4_step(&self, pattern: &Pattern, rho: &mut [C64], h: f64, ws: &mut Rk4Workspace) {
        let l = &self.layout;
        let Rk4Workspace { k, stage, acc } = ws;

        self.apply(pattern, rho, k);
        l.add_scaled(pattern, acc, rho, h / 6.0, k);
        l.add_scaled(pattern, stage, rho, h / 2.0, k);

        self.apply(pattern, stage, k);
        l.axpy(pattern, acc, h / 3.0, k);
        l.add_scaled(pattern, stage, rho, h / 2.0, k);

        self.apply(pattern, stage, k);
        l.axpy(pattern, acc, h / 3.0, k);
        l.add_scaled(pattern, stage, rho, h, k);

        self.apply(pattern, stage, k);
        l.axpy(pattern, acc, h / 6.0, k);

        for &(a, b) in pattern.blocks() {
            for m in 0..l.n_fock {
                let s = l.row_start(a, m, b);
                rho[s..s + l.n_fock].copy_from_slice(&acc[s..s + l.n_fock]);
            }
        }
    }
}
