//! Master-equation generators whose qubit parts are diagonal in the `σ_z` basis.
//!
//! Every Hamiltonian and jump operator used here has the form
//! `Σ_q |q⟩⟨q| ⊗ (c_q X)`, so the joint density matrix splits into four `d×d`
//! blocks `ρ_jk = ⟨j|ρ|k⟩` that evolve independently. Only `ρ_00`, `ρ_11` and
//! `ρ_01` are integrated; `ρ_10 = ρ_01†`.
//!
//! The integration runs in the interaction frame of a diagonal oscillator
//! Hamiltonian `diag(ε)`: `ρ̃ = e^{iεt} ρ e^{−iεt}`, which turns every stored
//! operator entry `X_mn` into `X_mn e^{i(ε_m − ε_n)t}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::integrator::OdeSystem;
use crate::algebra::{DensityOperator, FockOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse oscillator operator with entries tagged by their frame frequency.
#[derive(Debug, Clone)]
pub(crate) struct FramedOp {
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
    freqs: Vec<f64>,
    rotated: Vec<Complex64>,
    rotated_at: f64,
}

impl FramedOp {
    pub fn from_matrix(m: &DMatrix<Complex64>, frame: &[f64]) -> Self {
        let mut op = Self {
            rows: Vec::new(),
            cols: Vec::new(),
            values: Vec::new(),
            freqs: Vec::new(),
            rotated: Vec::new(),
            rotated_at: f64::NAN,
        };
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != ZERO {
                    op.rows.push(r);
                    op.cols.push(c);
                    op.values.push(v);
                    op.freqs.push(frame[r] - frame[c]);
                }
            }
        }
        op.rotated = op.values.clone();
        op
    }

    fn rotate(&mut self, t: f64) {
        if self.rotated_at == t {
            return;
        }
        for i in 0..self.values.len() {
            let f = self.freqs[i];
            self.rotated[i] = if f == 0.0 {
                self.values[i]
            } else {
                self.values[i] * Complex64::from_polar(1.0, f * t)
            };
        }
        self.rotated_at = t;
    }

    /// `y += coef · A x`
    fn left_acc(&self, d: usize, coef: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.rows.len() {
            let w = coef * self.rotated[i];
            let (r, c) = (self.rows[i], self.cols[i]);
            let src = &x[c * d..(c + 1) * d];
            let dst = &mut y[r * d..(r + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }

    /// `y += coef · x A`
    fn right_acc(&self, d: usize, coef: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.rows.len() {
            let w = coef * self.rotated[i];
            let (r, c) = (self.rows[i], self.cols[i]);
            for m in 0..d {
                y[m * d + c] += w * x[m * d + r];
            }
        }
    }

    /// `y += coef · x A†`
    fn right_adj_acc(&self, d: usize, coef: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.rows.len() {
            let w = coef * self.rotated[i].conj();
            let (r, c) = (self.rows[i], self.cols[i]);
            for m in 0..d {
                y[m * d + r] += w * x[m * d + c];
            }
        }
    }
}

/// Jump operator `(c_0 |0⟩⟨0| + c_1 |1⟩⟨1|) ⊗ L`, with the rate folded into `c`.
/// `op = None` means `L = 1`.
#[derive(Debug, Clone)]
pub(crate) struct Jump {
    coef: [Complex64; 2],
    op: Option<(FramedOp, FramedOp)>,
    sign: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct QubitDiagonalModel {
    dim: usize,
    frame: Vec<f64>,
    qubit_energy: [f64; 2],
    hamiltonian: [FramedOp; 2],
    jumps: Vec<Jump>,
    scratch: Vec<Complex64>,
}

/// Block order in the flat state vector.
pub(crate) const BLOCKS: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

impl QubitDiagonalModel {
    /// `frame` holds the diagonal oscillator energies removed into the rotating
    /// frame; `hamiltonian[q]` is the remaining oscillator Hamiltonian in qubit
    /// sector `q` and `qubit_energy[q]` a scalar offset.
    pub fn new(
        frame: Vec<f64>,
        qubit_energy: [f64; 2],
        hamiltonian: [&DMatrix<Complex64>; 2],
    ) -> Self {
        let dim = frame.len();
        let h0 = FramedOp::from_matrix(hamiltonian[0], &frame);
        let h1 = FramedOp::from_matrix(hamiltonian[1], &frame);
        Self {
            dim,
            frame,
            qubit_energy,
            hamiltonian: [h0, h1],
            jumps: Vec::new(),
            scratch: vec![ZERO; dim * dim],
        }
    }

    /// Adds the dissipator `D[L](ρ) = LρL† − ½{L†L, ρ}` for
    /// `L = √rate · diag(coef) ⊗ op`.
    pub fn add_jump(&mut self, rate: f64, coef: [f64; 2], op: Option<&DMatrix<Complex64>>) {
        if rate == 0.0 {
            return;
        }
        let s = rate.sqrt();
        let coef = [Complex64::new(s * coef[0], 0.0), Complex64::new(s * coef[1], 0.0)];
        let op = op.map(|m| {
            let ldl = m.adjoint() * m;
            (
                FramedOp::from_matrix(m, &self.frame),
                FramedOp::from_matrix(&ldl, &self.frame),
            )
        });
        self.jumps.push(Jump { coef, op, sign: 1.0 });
    }

    fn block_rhs(&mut self, j: usize, k: usize, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.dim;
        let i = Complex64::i();
        let mut diag = -i * (self.qubit_energy[j] - self.qubit_energy[k]);
        for jump in &self.jumps {
            if jump.op.is_none() {
                let (cj, ck) = (jump.coef[j], jump.coef[k]);
                diag += jump.sign * (cj * ck.conj() - 0.5 * (cj.norm_sqr() + ck.norm_sqr()));
            }
        }
        for (o, s) in y.iter_mut().zip(x) {
            *o = diag * s;
        }
        self.hamiltonian[j].left_acc(d, -i, x, y);
        self.hamiltonian[k].right_acc(d, i, x, y);
        for jump in &self.jumps {
            let Some((l, ldl)) = &jump.op else { continue };
            let (cj, ck) = (jump.coef[j], jump.coef[k]);
            let sandwich = jump.sign * cj * ck.conj();
            if sandwich != ZERO {
                self.scratch.iter_mut().for_each(|s| *s = ZERO);
                l.left_acc(d, Complex64::new(1.0, 0.0), x, &mut self.scratch);
                l.right_adj_acc(d, sandwich, &self.scratch, y);
            }
            ldl.left_acc(d, Complex64::new(-0.5 * jump.sign * cj.norm_sqr(), 0.0), x, y);
            ldl.right_acc(d, Complex64::new(-0.5 * jump.sign * ck.norm_sqr(), 0.0), x, y);
        }
    }

    /// Flips the sign of every dissipator, which no physical channel does.
    #[cfg(feature = "fault-injection")]
    pub fn negate_dissipators(&mut self) {
        for jump in &mut self.jumps {
            jump.sign = -jump.sign;
        }
    }

    fn rotate_all(&mut self, t: f64) {
        for h in &mut self.hamiltonian {
            h.rotate(t);
        }
        for jump in &mut self.jumps {
            if let Some((l, ldl)) = &mut jump.op {
                l.rotate(t);
                ldl.rotate(t);
            }
        }
    }
}

impl OdeSystem for QubitDiagonalModel {
    fn len(&self) -> usize {
        3 * self.dim * self.dim
    }

    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self.rotate_all(t);
        let n = self.dim * self.dim;
        for (b, &(j, k)) in BLOCKS.iter().enumerate() {
            let (x, out) = (&y[b * n..(b + 1) * n], &mut dy[b * n..(b + 1) * n]);
            self.block_rhs(j, k, x, out);
        }
    }

    fn post_step(&mut self, y: &mut [Complex64]) {
        let d = self.dim;
        let n = d * d;
        for b in 0..2 {
            let block = &mut y[b * n..(b + 1) * n];
            for r in 0..d {
                block[r * d + r].im = 0.0;
                for c in r + 1..d {
                    let avg = 0.5 * (block[r * d + c] + block[c * d + r].conj());
                    block[r * d + c] = avg;
                    block[c * d + r] = avg.conj();
                }
            }
        }
    }
}

/// Qubit-block state in the rotating frame.
#[derive(Debug, Clone)]
pub struct JointState {
    dim: usize,
    frame: Vec<f64>,
    pub(crate) data: Vec<Complex64>,
    pub(crate) time: f64,
}

impl JointState {
    /// Splits a joint density operator (qubit as the slow index) into blocks.
    /// Off-diagonal qubit blocks other than `ρ_01 = ρ_10†` are assumed absent
    /// by the block-diagonal generators.
    pub(crate) fn from_density(rho: &DensityOperator, frame: Vec<f64>, time: f64) -> Self {
        let dim = frame.len();
        let m = rho.matrix();
        let mut data = vec![ZERO; 3 * dim * dim];
        let n = dim * dim;
        for (b, &(j, k)) in BLOCKS.iter().enumerate() {
            for r in 0..dim {
                for c in 0..dim {
                    let phase = Complex64::from_polar(1.0, (frame[r] - frame[c]) * time);
                    data[b * n + r * dim + c] = m[(j * dim + r, k * dim + c)] * phase;
                }
            }
        }
        Self {
            dim,
            frame,
            data,
            time,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn block(&self, b: usize) -> &[Complex64] {
        let n = self.dim * self.dim;
        &self.data[b * n..(b + 1) * n]
    }

    fn block_trace(&self, b: usize) -> Complex64 {
        let blk = self.block(b);
        (0..self.dim).map(|r| blk[r * self.dim + r]).sum()
    }

    /// `⟨σ_−⟩ = Tr(ρ |1⟩⟨0|) = Tr ρ_01` (frame-invariant).
    pub fn sigma_minus(&self) -> Complex64 {
        self.block_trace(2)
    }

    /// Normalized visibility `2|⟨σ_−⟩|`.
    pub fn visibility(&self) -> f64 {
        2.0 * self.sigma_minus().norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.block_trace(0) + self.block_trace(1)
    }

    /// `⟨σ_z⟩`
    pub fn population_difference(&self) -> f64 {
        (self.block_trace(0) - self.block_trace(1)).re
    }

    /// Oscillator population in the top `band` Fock levels.
    pub fn tail_mass(&self, band: usize) -> f64 {
        let d = self.dim;
        let mut mass = 0.0;
        for b in 0..2 {
            let blk = self.block(b);
            for r in d.saturating_sub(band)..d {
                mass += blk[r * d + r].re;
            }
        }
        mass
    }

    /// Applies `σ_x ⊗ 1`: swaps `ρ_00 ↔ ρ_11` and `ρ_01 → ρ_10 = ρ_01†`.
    pub(crate) fn apply_sigma_x(&mut self) {
        let d = self.dim;
        let n = d * d;
        let (diag, off) = self.data.split_at_mut(2 * n);
        let (b0, b1) = diag.split_at_mut(n);
        b0.swap_with_slice(b1);
        let mut adj = vec![ZERO; n];
        for r in 0..d {
            for c in 0..d {
                adj[r * d + c] = off[c * d + r].conj();
            }
        }
        off.copy_from_slice(&adj);
    }

    /// Full joint density matrix in the laboratory frame.
    pub fn to_density(&self) -> DensityOperator {
        let d = self.dim;
        let n = d * d;
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        for (b, &(j, k)) in BLOCKS.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    let phase = Complex64::from_polar(1.0, -(self.frame[r] - self.frame[c]) * self.time);
                    let v = self.data[b * n + r * d + c] * phase;
                    m[(j * d + r, k * d + c)] = v;
                    if j != k {
                        m[(k * d + c, j * d + r)] = v.conj();
                    }
                }
            }
        }
        DensityOperator::from_matrix_unchecked(m)
    }
}

/// Oscillator operator with the qubit as the slow tensor index.
pub(crate) fn qubit_diag_kron(diag: [f64; 2], osc: &FockOperator) -> DMatrix<Complex64> {
    let d = osc.dim();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for (q, s) in diag.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                m[(q * d + r, q * d + c)] = osc.matrix()[(r, c)] * *s;
            }
        }
    }
    m
}
