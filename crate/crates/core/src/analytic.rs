//! Closed-form visibilities for the qubit–oscillator protocol.
//!
//! Every visibility is normalized so that `V(0) = 1`. Phases are dimensionless
//! (`ωt`), couplings are in units of the oscillator frequency.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Dimensionless parameters shared by every closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// `g/ω`; the sign is irrelevant to every visibility.
    pub lambda: f64,
    /// `g′/ω` of the auxiliary boost coupling.
    pub lambda_prime: f64,
    pub nbar: f64,
    /// `Q = ω/γ_m`.
    pub q_factor: f64,
    pub gamma_a_over_omega: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            lambda_prime: 0.0,
            nbar: 0.0,
            q_factor: f64::INFINITY,
            gamma_a_over_omega: 0.0,
        }
    }
}

impl CouplingParams {
    pub fn new(lambda: f64, nbar: f64) -> Self {
        Self {
            lambda,
            nbar,
            ..Self::default()
        }
    }

    pub fn with_lambda_prime(mut self, lambda_prime: f64) -> Self {
        self.lambda_prime = lambda_prime;
        self
    }

    pub fn with_damping(mut self, q_factor: f64, gamma_a_over_omega: f64) -> Self {
        self.q_factor = q_factor;
        self.gamma_a_over_omega = gamma_a_over_omega;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lambda, self.lambda_prime, self.nbar, self.gamma_a_over_omega]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(domain("coupling parameters must be finite"));
        }
        if self.nbar < 0.0 || self.lambda_prime < 0.0 || self.gamma_a_over_omega < 0.0 {
            return Err(domain("nbar, lambda_prime and gamma_a must be >= 0"));
        }
        if !(self.q_factor > 0.0) {
            return Err(domain(format!("q_factor must be > 0, got {}", self.q_factor)));
        }
        Ok(())
    }

    fn thermal_weight(&self) -> f64 {
        2.0 * self.nbar + 1.0
    }
}

/// Dimensionless phase `ωt`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PhaseTime(f64);

impl PhaseTime {
    pub fn new(omega_t: f64) -> Result<Self> {
        if !(omega_t >= 0.0) || !omega_t.is_finite() {
            return Err(domain(format!("omega_t must be finite and >= 0, got {omega_t}")));
        }
        Ok(Self(omega_t))
    }

    pub fn half_period() -> Self {
        Self(std::f64::consts::PI)
    }

    pub fn full_period() -> Self {
        Self(2.0 * std::f64::consts::PI)
    }

    pub fn omega_t(self) -> f64 {
        self.0
    }
}

fn half_sin_sq(t: PhaseTime) -> f64 {
    (t.0 / 2.0).sin().powi(2)
}

/// Ground-state contrast `exp[−8λ² sin²(ωt/2)]`; `nbar` is ignored.
pub fn visibility_ground(p: &CouplingParams, t: PhaseTime) -> f64 {
    (-8.0 * p.lambda * p.lambda * half_sin_sq(t)).exp()
}

/// Thermal contrast `exp[−8λ²(2n̄+1) sin²(ωt/2)]`.
pub fn visibility_thermal(p: &CouplingParams, t: PhaseTime) -> f64 {
    (-8.0 * p.lambda * p.lambda * p.thermal_weight() * half_sin_sq(t)).exp()
}

/// The damping function `f(t)` of the input-operator solution, including its
/// `O(1/Q²)` truncation.
pub fn damping_profile(q_factor: f64, t: PhaseTime) -> f64 {
    let wt = t.0;
    let inv_q = 1.0 / q_factor;
    let envelope = (-wt * inv_q / 2.0).exp();
    let prefactor = 0.25 / (1.0 + inv_q * inv_q / 4.0);
    prefactor
        * (2.0 - 2.0 * wt.cos() * envelope + wt * inv_q - 8.0 * inv_q * wt.sin() * envelope)
}

/// Damped thermal contrast `e^{−γ_a t} exp[−8λ²(2n̄+1) f(t)]`.
///
/// Logs a warning when `Q < 10`, where the closed form is outside its regime.
pub fn visibility_damped(p: &CouplingParams, t: PhaseTime) -> Result<f64> {
    p.validate()?;
    if p.q_factor < 10.0 {
        log::warn!("visibility_damped: Q = {} is below 10; the O(1/Q²) truncation is not small", p.q_factor);
    }
    let f = if p.q_factor.is_infinite() {
        half_sin_sq(t)
    } else {
        damping_profile(p.q_factor, t)
    };
    let atomic = (-p.gamma_a_over_omega * t.0).exp();
    Ok(atomic * (-8.0 * p.lambda * p.lambda * p.thermal_weight() * f).exp())
}

/// True when `γ_m t > 1`, past the time where the Markovian noise model is
/// trustworthy.
pub fn damped_beyond_damping_time(p: &CouplingParams, t: PhaseTime) -> bool {
    t.0 / p.q_factor > 1.0
}

/// Boosted protocol: coupling `λ + λ′` for `ωt ≤ π`, then `λ` alone.
pub fn visibility_boosted(p: &CouplingParams, t: PhaseTime) -> f64 {
    let w = p.thermal_weight();
    let s = half_sin_sq(t);
    if t.0 <= std::f64::consts::PI {
        let total = p.lambda + p.lambda_prime;
        (-8.0 * w * total * total * s).exp()
    } else {
        let (l, lp) = (p.lambda, p.lambda_prime);
        (-8.0 * w * (lp * lp + 2.0 * l * lp * s + l * l * s)).exp()
    }
}

/// `V_b(2π/ω) − V_b(π/ω)` evaluated exactly.
pub fn delta_v_boosted(p: &CouplingParams) -> f64 {
    visibility_boosted(p, PhaseTime::full_period()) - visibility_boosted(p, PhaseTime::half_period())
}

/// `λ′_opt = 1/√(8(2n̄+1))`, the maximizer of `λ′ e^{−8(2n̄+1)λ′²}`.
pub fn optimal_lambda_prime(nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(domain(format!("nbar must be finite and >= 0, got {nbar}")));
    }
    Ok(1.0 / (8.0 * (2.0 * nbar + 1.0)).sqrt())
}

/// How the many-atom ponderomotive phase factor is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseNoiseForm {
    /// `cos^{N−1}(2β)`.
    #[default]
    Exact,
    /// `exp(−2Nβ²)`.
    Exponential,
}

/// Ponderomotive phase-noise factor for `n_atoms` sharing one oscillator,
/// with `β = λ² ωt`.
pub fn many_atom_phase_factor(
    n_atoms: u64,
    lambda: f64,
    t: PhaseTime,
    form: PhaseNoiseForm,
) -> Result<f64> {
    if n_atoms == 0 {
        return Err(domain("n_atoms must be >= 1"));
    }
    let beta = lambda * lambda * t.0;
    if (2.0 * beta).abs() >= std::f64::consts::FRAC_PI_4 {
        return Err(domain(format!(
            "many-atom phase beta = {beta:.6e} violates |2 beta| < pi/4"
        )));
    }
    let n = n_atoms as f64;
    Ok(match form {
        PhaseNoiseForm::Exact => ((n - 1.0) * (2.0 * beta).cos().ln()).exp(),
        PhaseNoiseForm::Exponential => (-2.0 * n * beta * beta).exp(),
    })
}

/// Per-atom normalized collective visibility `⟨J_−⟩/N` relative to its initial value.
pub fn visibility_many_atom(
    n_atoms: u64,
    p: &CouplingParams,
    t: PhaseTime,
    form: PhaseNoiseForm,
) -> Result<f64> {
    Ok(many_atom_phase_factor(n_atoms, p.lambda, t, form)? * visibility_thermal(p, t))
}

/// Spin-echo half-way overlap `exp[−32 N_π² λ²]` (vacuum reference).
pub fn spin_echo_overlap(n_pi: u32, lambda: f64) -> Result<f64> {
    if n_pi == 0 {
        return Err(domain("n_pi must be >= 1"));
    }
    let n = n_pi as f64;
    Ok((-32.0 * n * n * lambda * lambda).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{coherent_overlap, ComplexAmp};
    use std::f64::consts::PI;

    fn t(wt: f64) -> PhaseTime {
        PhaseTime::new(wt).unwrap()
    }

    #[test]
    fn ground_cases() {
        let p = CouplingParams::new(0.37, 3.0);
        assert!((visibility_ground(&p, t(2.0 * PI)) - 1.0).abs() < 1e-15);
        assert_eq!(visibility_ground(&CouplingParams::new(0.0, 0.0), t(1.3)), 1.0);
        let v = visibility_ground(&CouplingParams::new(0.5, 0.0), t(PI));
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn thermal_cases() {
        for wt in [0.1, 1.0, 2.5, PI] {
            let g = visibility_ground(&CouplingParams::new(0.2, 0.0), t(wt));
            let th = visibility_thermal(&CouplingParams::new(0.2, 0.0), t(wt));
            assert_eq!(g, th);
        }
        let p = CouplingParams::new(0.1, 12.0);
        assert!((visibility_thermal(&p, t(PI)) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((visibility_thermal(&p, t(2.0 * PI)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn damped_cases() {
        let p = CouplingParams::new(0.01, 1.5).with_damping(1e6, 0.0);
        let v = visibility_damped(&p, t(2.0 * PI)).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        let zero = CouplingParams::new(0.0, 3.0).with_damping(50.0, 0.0);
        assert_eq!(visibility_damped(&zero, t(1.7)).unwrap(), 1.0);
        let bad = CouplingParams::new(0.1, 0.0).with_damping(0.0, 0.0);
        assert!(visibility_damped(&bad, t(1.0)).is_err());
        let bad = CouplingParams::new(0.1, 0.0).with_damping(-3.0, 0.0);
        assert!(visibility_damped(&bad, t(1.0)).is_err());
    }

    #[test]
    fn damped_half_and_full_period() {
        let (lambda, nbar, q, ga) = (0.05, 2.0, 1e4, 0.003);
        let p = CouplingParams::new(lambda, nbar).with_damping(q, ga);
        let w = 8.0 * lambda * lambda * (2.0 * nbar + 1.0);
        let half = visibility_damped(&p, t(PI)).unwrap();
        assert!((half - (-PI * ga).exp() * (-w).exp()).abs() < 1e-7);
        // f(2π) as printed evaluates to π/Q + O(1/Q²)
        let f_full = damping_profile(q, t(2.0 * PI));
        assert!((f_full - PI / q).abs() < 10.0 / (q * q));
        let full = visibility_damped(&p, t(2.0 * PI)).unwrap();
        assert!((full - (-2.0 * PI * ga).exp() * (-w * f_full).exp()).abs() < 1e-15);
    }

    #[test]
    fn damped_converges_to_thermal() {
        let p = CouplingParams::new(0.2, 3.0).with_damping(1e12, 0.0);
        let th = CouplingParams::new(0.2, 3.0);
        for k in 0..40 {
            let wt = k as f64 * 0.31;
            let diff = visibility_damped(&p, t(wt)).unwrap() - visibility_thermal(&th, t(wt));
            assert!(diff.abs() < 1e-9, "wt = {wt}: {diff}");
        }
        assert!(damped_beyond_damping_time(&CouplingParams::new(0.1, 0.0).with_damping(10.0, 0.0), t(11.0)));
    }

    #[test]
    fn boosted_cases() {
        let base = CouplingParams::new(0.03, 2.0);
        for k in 0..30 {
            let wt = k as f64 * 0.4;
            assert!((visibility_boosted(&base, t(wt)) - visibility_thermal(&base, t(wt))).abs() < 1e-15);
        }
        let p = CouplingParams::new(0.02, 1.0).with_lambda_prime(0.15);
        let full = visibility_boosted(&p, t(2.0 * PI));
        assert!((full - (-8.0 * 3.0 * 0.15f64 * 0.15).exp()).abs() < 1e-15);
        // closed form evaluated independently (Python): 0.9153946456237393
        let p = CouplingParams::new(0.01, 0.0).with_lambda_prime(0.1);
        assert!((visibility_boosted(&p, t(1.5 * PI)) - 0.9153946456237393).abs() < 1e-14);
    }

    #[test]
    fn boosted_branch_continuity() {
        let p = CouplingParams::new(0.04, 1.3).with_lambda_prime(0.2);
        let left = visibility_boosted(&p, t(PI));
        let right = visibility_boosted(&p, t(PI + 1e-12));
        let closed = (-8.0 * 3.6 * 0.24f64 * 0.24).exp();
        assert!((left - closed).abs() < 1e-14);
        assert!((left - right).abs() < 1e-11);
        let printed_at_pi = {
            let (l, lp, w) = (0.04f64, 0.2f64, 3.6f64);
            (-8.0 * w * (lp * lp + 2.0 * l * lp + l * l)).exp()
        };
        assert!((left - printed_at_pi).abs() < 1e-14);
    }

    #[test]
    fn delta_v_boosted_cases() {
        assert!(delta_v_boosted(&CouplingParams::new(0.0, 2.0).with_lambda_prime(0.1)).abs() < 1e-15);
        let (lp, nbar) = (0.1, 1.0);
        let mut prev = f64::INFINITY;
        for lambda in [1e-3, 1e-4, 1e-5, 1e-6] {
            let p = CouplingParams::new(lambda, nbar).with_lambda_prime(lp);
            let w = 2.0 * nbar + 1.0;
            let first = 16.0 * w * lp * lambda * (-8.0 * w * lp * lp).exp();
            let ratio = delta_v_boosted(&p) / first;
            assert!((ratio - 1.0).abs() < prev, "ratio {ratio}");
            prev = (ratio - 1.0).abs();
        }
        assert!(prev < 1e-3);
        // λ′ = λ′_opt, n̄ = 0, λ = 1e-6: mpmath gives ΔV_b/λ = 2.0810374
        let p = CouplingParams::new(1e-6, 0.0).with_lambda_prime(optimal_lambda_prime(0.0).unwrap());
        assert!((delta_v_boosted(&p) / 1e-6 - 2.0810374).abs() < 1e-4);
    }

    #[test]
    fn optimal_lambda_prime_cases() {
        assert!((optimal_lambda_prime(0.0).unwrap() - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!((optimal_lambda_prime(12.0).unwrap() - 1.0 / 200f64.sqrt()).abs() < 1e-15);
        for nbar in [0.0, 1.0, 100.0] {
            let w = 2.0 * nbar + 1.0;
            let prefactor = |lp: f64| lp * (-8.0 * w * lp * lp).exp();
            let opt = optimal_lambda_prime(nbar).unwrap();
            assert!(prefactor(opt * 1.01) < prefactor(opt));
            // the prefactor itself peaks at opt/√2
            let peak = opt / 2f64.sqrt();
            assert!(prefactor(peak * 1.01) < prefactor(peak));
            assert!(prefactor(peak * 0.99) < prefactor(peak));
        }
        assert!(optimal_lambda_prime(-1.0).is_err());
    }

    #[test]
    fn many_atom_cases() {
        let p = CouplingParams::new(1e-3, 2.0);
        for k in 0..=20 {
            let wt = t(k as f64 * 0.1 * PI);
            let v = visibility_many_atom(1, &p, wt, PhaseNoiseForm::Exact).unwrap();
            assert!((v / visibility_thermal(&p, wt) - 1.0).abs() < 1e-12);
        }
        let f = many_atom_phase_factor(10_000_000_000, 1e-13, t(2.0 * PI), PhaseNoiseForm::Exponential).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
        let exact = many_atom_phase_factor(10_000, 1e-2, t(PI), PhaseNoiseForm::Exact).unwrap();
        let approx = many_atom_phase_factor(10_000, 1e-2, t(PI), PhaseNoiseForm::Exponential).unwrap();
        // independent product of cosines
        let beta: f64 = 1e-4 * PI;
        let mut product = 1.0;
        for _ in 0..9_999 {
            product *= (2.0 * beta).cos();
        }
        assert!((exact / product - 1.0).abs() < 1e-10);
        assert!((approx / product - 1.0).abs() < 1e-3);
    }

    #[test]
    fn many_atom_reproduces_half_and_full_period() {
        let (n, lambda) = (1000u64, 0.05);
        let p = CouplingParams::new(lambda, 0.0);
        let l4 = lambda.powi(4);
        let half = visibility_many_atom(n, &p, t(PI), PhaseNoiseForm::Exponential).unwrap();
        let expected = (-2.0 * PI * PI * n as f64 * l4).exp() * (-8.0 * lambda * lambda).exp();
        assert!((half - expected).abs() < 1e-14);
        let full = visibility_many_atom(n, &p, t(2.0 * PI), PhaseNoiseForm::Exponential).unwrap();
        assert!((full - (-8.0 * PI * PI * n as f64 * l4).exp()).abs() < 1e-14);
    }

    #[test]
    fn many_atom_validity_error_names_beta() {
        let err = visibility_many_atom(10, &CouplingParams::new(0.5, 0.0), t(2.0 * PI), PhaseNoiseForm::Exact)
            .unwrap_err();
        assert!(err.to_string().contains("beta"));
        assert!(visibility_many_atom(0, &CouplingParams::new(0.01, 0.0), t(1.0), PhaseNoiseForm::Exact).is_err());
    }

    #[test]
    fn spin_echo_cases() {
        assert_eq!(spin_echo_overlap(1, 0.0).unwrap(), 1.0);
        assert!((spin_echo_overlap(3, 0.05).unwrap() - 0.486_752_255_959_971_7).abs() < 1e-15);
        // n_pi = 1: overlap of the branch states D(±4λ)|0⟩
        let lambda = 0.07;
        let o = coherent_overlap(ComplexAmp::new(4.0 * lambda, 0.0), ComplexAmp::new(-4.0 * lambda, 0.0));
        assert!((o.norm() - spin_echo_overlap(1, lambda).unwrap()).abs() < 1e-15);
        assert!(spin_echo_overlap(2, 0.1).unwrap() < spin_echo_overlap(1, 0.1).unwrap());
        assert!(spin_echo_overlap(2, 0.2).unwrap() < spin_echo_overlap(2, 0.1).unwrap());
        assert!(spin_echo_overlap(0, 0.1).is_err());
    }

    #[test]
    fn phase_time_rejects_negative() {
        assert!(PhaseTime::new(-0.1).is_err());
        assert!(PhaseTime::new(f64::NAN).is_err());
    }
}
