//! Coherent-state and displacement-operator algebra on a truncated Fock space.
//!
//! Conventions: `|n⟩` is the number basis, `a|n⟩ = √n |n−1⟩`, the displacement
//! operator is `D(α) = exp(α a† − α* a)` and the coherent state is `|α⟩ = D(α)|0⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::units::{BOLTZMANN, HBAR};

/// Complex label of a coherent state, overlap, or phase.
pub type ComplexAmp = Complex64;

/// Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density operator.
pub const POSITIVITY_TOL: f64 = -1e-9;
/// Default bound on the thermal probability mass discarded by truncation.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-8;

/// Square complex matrix acting on a truncated oscillator (or joint) space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(domain(format!(
                "operator must be square with dim >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Annihilation operator `a` with `⟨n−1|a|n⟩ = √n`.
    pub fn annihilation(dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        Self { matrix: m }
    }

    pub fn creation(dim: usize) -> Self {
        Self::annihilation(dim).adjoint()
    }

    pub fn number(dim: usize) -> Self {
        Self {
            matrix: DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    Complex64::new(i as f64, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Position quadrature `x = (a + a†)/√2`.
    pub fn position(dim: usize) -> Self {
        let a = Self::annihilation(dim).matrix;
        Self {
            matrix: (&a + a.adjoint()).unscale(std::f64::consts::SQRT_2),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }
}

pub(crate) fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Validated density operator: Hermitian, unit trace, positive semidefinite
/// within the module tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(domain("density operator must be square with dim >= 2"));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(domain(format!("density operator not Hermitian (defect {defect:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(domain(format!("density operator trace {tr} != 1")));
        }
        let rho = Self { matrix };
        let min = rho.min_eigenvalue();
        if min < POSITIVITY_TOL {
            return Err(domain(format!("density operator has eigenvalue {min:.3e} < 0")));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation; callers guarantee the invariants
    /// hold to integration accuracy.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    /// `ρ_A ⊗ ρ_B` with the qubit (first factor) as the slow index.
    pub fn product(qubit: &DensityOperator, oscillator: &DensityOperator) -> Self {
        Self {
            matrix: qubit.matrix.kronecker(&oscillator.matrix),
        }
    }

    /// Pure state `|ψ⟩⟨ψ|` from an (unnormalized) vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(domain("cannot build a pure state from a zero vector"));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|c| c / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean of `n` when the operator lives on a single oscillator.
    pub fn mean_occupation(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.matrix[(n, n)].re).sum()
    }
}

/// Mean thermal phonon occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub nbar: f64,
}

impl ThermalParams {
    pub fn new(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(domain(format!("nbar must be finite and >= 0, got {nbar}")));
        }
        Ok(Self { nbar })
    }
}

/// `D(a) D(b) = phase · D(a + b)` with `phase = exp((a b* − a* b)/2)`.
pub fn displacement_compose(a: ComplexAmp, b: ComplexAmp) -> (ComplexAmp, ComplexAmp) {
    let exponent = (a * b.conj() - a.conj() * b) * 0.5;
    // The exponent is purely imaginary; drop the rounding residue in the real part.
    (a + b, Complex64::from_polar(1.0, exponent.im))
}

/// Coherent-state inner product `⟨a|b⟩ = e^{−|a−b|²/2} e^{(b a* − b* a)/2}`.
pub fn coherent_overlap(a: ComplexAmp, b: ComplexAmp) -> ComplexAmp {
    let phase = ((b * a.conj() - b.conj() * a) * 0.5).im;
    Complex64::from_polar((-(a - b).norm_sqr() / 2.0).exp(), phase)
}

/// Bose–Einstein occupation for an angular frequency in s⁻¹ and a temperature in K.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<ThermalParams> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(domain(format!("omega must be positive, got {omega}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(domain(format!("temperature must be >= 0, got {temperature}")));
    }
    Ok(bose_einstein(HBAR * omega, BOLTZMANN * temperature))
}

/// Bose–Einstein occupation in natural units (`ℏ = k_B = 1`).
pub fn thermal_occupation_natural(omega: f64, temperature: f64) -> Result<ThermalParams> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(domain(format!("omega must be positive, got {omega}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(domain(format!("temperature must be >= 0, got {temperature}")));
    }
    Ok(bose_einstein(omega, temperature))
}

fn bose_einstein(quantum: f64, thermal: f64) -> ThermalParams {
    if thermal == 0.0 {
        return ThermalParams { nbar: 0.0 };
    }
    ThermalParams {
        nbar: 1.0 / (quantum / thermal).exp_m1(),
    }
}

/// Truncated displacement operator `exp(α a† − α* a)` (Padé scaling-and-squaring).
pub fn displacement_matrix(label: ComplexAmp, dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(domain(format!("dim must be >= 2, got {dim}")));
    }
    if label == Complex64::new(0.0, 0.0) {
        return Ok(FockOperator::identity(dim));
    }
    let a = FockOperator::annihilation(dim).matrix;
    let generator = a.adjoint() * label - a * label.conj();
    Ok(FockOperator {
        matrix: generator.exp(),
    })
}

/// Truncated thermal state together with truncation diagnostics.
#[derive(Debug, Clone)]
pub struct ThermalDensity {
    pub rho: DensityOperator,
    /// Mean occupation of the renormalized, truncated distribution.
    pub mean_occupation: f64,
    /// Probability mass of the untruncated distribution beyond `dim − 1`.
    pub tail_mass: f64,
}

/// Thermal state truncated to `dim` levels with the default tail bound.
pub fn thermal_density(params: ThermalParams, dim: usize) -> Result<DensityOperator> {
    Ok(thermal_density_with_bound(params, dim, DEFAULT_TAIL_BOUND)?.rho)
}

pub fn thermal_density_with_bound(
    params: ThermalParams,
    dim: usize,
    tail_bound: f64,
) -> Result<ThermalDensity> {
    if dim < 2 {
        return Err(domain(format!("dim must be >= 2, got {dim}")));
    }
    let params = ThermalParams::new(params.nbar)?;
    let ratio = params.nbar / (params.nbar + 1.0);
    let tail_mass = ratio.powi(dim as i32);
    if tail_mass > tail_bound {
        return Err(Error::Truncation {
            tail_mass,
            bound: tail_bound,
            context: format!("thermal state nbar = {} at dim = {dim}", params.nbar),
        });
    }
    let weights: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = DMatrix::zeros(dim, dim);
    let mut mean = 0.0;
    for (n, w) in weights.iter().enumerate() {
        let p = w / total;
        m[(n, n)] = Complex64::new(p, 0.0);
        mean += n as f64 * p;
    }
    Ok(ThermalDensity {
        rho: DensityOperator { matrix: m },
        mean_occupation: mean,
        tail_mass,
    })
}

/// Smallest truncation whose discarded thermal mass is below `tail_bound`.
pub fn thermal_tail_dim(nbar: f64, tail_bound: f64) -> usize {
    if nbar <= 0.0 {
        return 2;
    }
    let ratio = nbar / (nbar + 1.0);
    ((tail_bound.ln() / ratio.ln()).ceil() as usize).max(2)
}

/// Automatic Fock truncation for a thermal state of occupation `nbar` that is
/// displaced by at most `max_displacement`.
///
/// Takes the larger of `n̄ + 10√(n̄+1) + 16|α|² + 20` and the thermal tail
/// dimension plus the same displacement margin.
pub fn auto_dim(nbar: f64, max_displacement: f64, tail_bound: f64) -> usize {
    let support = 16.0 * max_displacement * max_displacement;
    let heuristic = (nbar + 10.0 * (nbar + 1.0).sqrt() + support + 20.0).ceil() as usize;
    let tail = thermal_tail_dim(nbar, tail_bound) + support.ceil() as usize + 10;
    heuristic.max(tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coherent_vector(alpha: Complex64, dim: usize) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(dim);
        let mut term = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            v.push(term);
        }
        v
    }

    #[test]
    fn compose_identity_and_inverse() {
        let beta = c(0.3, -1.2);
        let (label, phase) = displacement_compose(c(0.0, 0.0), beta);
        assert_eq!(label, beta);
        assert!((phase - c(1.0, 0.0)).norm() < 1e-15);

        let alpha = c(0.7, 0.4);
        let (label, phase) = displacement_compose(alpha, -alpha);
        assert!(label.norm() < 1e-15);
        assert!((phase - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn compose_one_and_i_matches_truncated_matrices() {
        let (label, phase) = displacement_compose(c(1.0, 0.0), c(0.0, 1.0));
        assert_eq!(label, c(1.0, 1.0));
        // exponent (1·(−i) − 1·i)/2 = −i
        assert!((phase - Complex64::from_polar(1.0, -1.0)).norm() < 1e-14);

        let dim = 30;
        let da = displacement_matrix(c(1.0, 0.0), dim).unwrap().into_matrix();
        let db = displacement_matrix(c(0.0, 1.0), dim).unwrap().into_matrix();
        let dab = displacement_matrix(label, dim).unwrap().into_matrix() * phase;
        let lhs = da * db;
        // compare the well-converged low-number corner
        for i in 0..10 {
            for j in 0..10 {
                assert!((lhs[(i, j)] - dab[(i, j)]).norm() < 1e-8, "({i},{j})");
            }
        }
    }

    #[test]
    fn overlap_cases() {
        let a = c(0.4, -0.3);
        assert!((coherent_overlap(a, a) - c(1.0, 0.0)).norm() < 1e-15);

        let delta = 0.8;
        let o = coherent_overlap(c(delta, 0.0), c(-delta, 0.0));
        assert!((o.re - (-2.0 * delta * delta).exp()).abs() < 1e-15);
        assert!(o.im.abs() < 1e-15);

        // ⟨δ|−δ⟩ with |δ|² = 4λ² sin²(ωt/2) reproduces e^{−8λ² sin²(ωt/2)}
        let (lambda, wt) = (0.3_f64, 1.1_f64);
        let d = Complex64::new(lambda, 0.0) * (Complex64::from_polar(1.0, -wt) - 1.0);
        let o = coherent_overlap(d, -d);
        let expected = (-8.0 * lambda * lambda * (wt / 2.0).sin().powi(2)).exp();
        assert!((o.re - expected).abs() < 1e-14);
    }

    #[test]
    fn overlap_matches_fock_inner_product() {
        let (a, b) = (c(0.3, 0.0), c(0.0, 0.7));
        let va = coherent_vector(a, 40);
        let vb = coherent_vector(b, 40);
        let fock: Complex64 = va.iter().zip(&vb).map(|(x, y)| x.conj() * y).sum();
        let closed = coherent_overlap(a, b);
        assert!((fock - closed).norm() < 1e-10);
        // independent evaluation (numpy/mpmath, 60 levels)
        assert!((closed - c(0.7318249014536188, 0.15598294835591286)).norm() < 1e-12);
    }

    #[test]
    fn occupation_limits() {
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap().nbar, 0.0);
        // ℏω/k_BT = ln 2 → n̄ = 1
        let t = HBAR * 3.0 / (BOLTZMANN * std::f64::consts::LN_2);
        assert!((thermal_occupation(3.0, t).unwrap().nbar - 1.0).abs() < 1e-12);
        // k_BT/ℏω = 6.250985740828370e14 at ω = 2π/100 s⁻¹, T = 300 K (CODATA 2018, independent evaluation)
        let nbar = thermal_occupation(2.0 * std::f64::consts::PI / 100.0, 300.0).unwrap().nbar;
        assert!((nbar / 6.250985740828366e14 - 1.0).abs() < 1e-9);
        // high temperature approaches k_BT/ℏω within 1%
        let x = 60.0;
        let nbar = thermal_occupation_natural(1.0, x).unwrap().nbar;
        assert!((nbar / x - 1.0).abs() < 0.01);
        assert!(thermal_occupation(0.0, 1.0).is_err());
        assert!(thermal_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn displacement_of_vacuum_is_coherent_state() {
        assert_eq!(
            displacement_matrix(c(0.0, 0.0), 5).unwrap(),
            FockOperator::identity(5)
        );
        let alpha = c(0.5, 0.0);
        let d = displacement_matrix(alpha, 40).unwrap();
        let expected = coherent_vector(alpha, 40);
        for n in 0..40 {
            assert!((d.matrix()[(n, 0)] - expected[n]).norm() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn vacuum_matrix_element_matches_overlap() {
        let (a, b) = (c(0.2, 0.0), c(0.0, 0.4));
        let da = displacement_matrix(a, 50).unwrap().into_matrix();
        let db = displacement_matrix(b, 50).unwrap().into_matrix();
        let m = da.adjoint() * db;
        assert!((m[(0, 0)] - coherent_overlap(a, b)).norm() < 1e-9);
    }

    #[test]
    fn displacement_inverse_tail_shrinks_with_dim() {
        let alpha = c(1.0, 0.5);
        let defect = |dim: usize| {
            let d = displacement_matrix(alpha, dim).unwrap().into_matrix();
            let dm = displacement_matrix(-alpha, dim).unwrap().into_matrix();
            let prod = d * dm;
            // probe the low-number block, away from the truncation edge
            let mut worst = 0.0f64;
            for i in 0..5 {
                for j in 0..5 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((prod[(i, j)] - target).norm());
                }
            }
            worst
        };
        assert!(defect(20) > defect(40));
        assert!(defect(40) < 1e-10);
    }

    #[test]
    fn thermal_density_cases() {
        let rho = thermal_density(ThermalParams::new(0.0).unwrap(), 6).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho.trace(), c(1.0, 0.0));

        let rho = thermal_density(ThermalParams::new(1.0).unwrap(), 60).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((rho.matrix()[(1, 1)].re - 0.25).abs() < 1e-12);

        let t = thermal_density_with_bound(ThermalParams::new(2.0).unwrap(), 60, 1e-8).unwrap();
        // geometric series summed independently in Python: 1.9999999983681664
        assert!((t.mean_occupation - 2.0).abs() < 1e-6);
        assert!((t.rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_truncation_error_carries_tail_mass() {
        let err = thermal_density(ThermalParams::new(5.0).unwrap(), 20).unwrap_err();
        match err {
            Error::Truncation { tail_mass, .. } => {
                assert!((tail_mass - (5.0f64 / 6.0).powi(20)).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(ThermalParams::new(-0.1).is_err());
    }

    #[test]
    fn annihilation_operator_entries() {
        let a = FockOperator::annihilation(6);
        for n in 1..6 {
            assert_eq!(a.matrix()[(n - 1, n)], c((n as f64).sqrt(), 0.0));
        }
        assert_eq!(a.matrix()[(0, 0)], c(0.0, 0.0));
        assert_eq!(a.matrix()[(5, 4)], c(0.0, 0.0));
    }

    #[test]
    fn density_operator_validation() {
        let bad = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.2, 0.0), c(-0.2, 0.0)]));
        assert!(DensityOperator::new(bad).is_err());
        let unnormalized = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.6, 0.0), c(0.6, 0.0)]));
        assert!(DensityOperator::new(unnormalized).is_err());
        let plus = DensityOperator::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((plus.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn auto_dim_covers_thermal_tail() {
        for nbar in [0.0, 1.54, 5.0, 12.0] {
            let d = auto_dim(nbar, 0.5, DEFAULT_TAIL_BOUND);
            assert!(thermal_density(ThermalParams::new(nbar).unwrap(), d).is_ok());
        }
    }
}
