//! Numerical master-equation engine for the qubit–oscillator protocols.
//!
//! The master equation is
//! `dρ/dt = −i[H, ρ] + Σ_i (L_i ρ L_i† − ½{L_i†L_i, ρ})` with
//! `H = ω a†a + g (a + a†) σ_z` and jump operators `√(n̄γ_m) a†`,
//! `√((n̄+1)γ_m) a`, `√γ_a σ_z`. With this convention the atomic term damps
//! `⟨σ_−⟩` at rate `2γ_a`.
//!
//! Determinism: every run is single-threaded and bitwise reproducible for a
//! fixed configuration; parallel sweeps only distribute whole runs.

pub(crate) mod integrator;
pub(crate) mod model;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use integrator::StepStats;
pub use model::JointState;

use crate::algebra::{
    auto_dim, thermal_density_with_bound, DensityOperator, FockOperator, ThermalParams,
    DEFAULT_TAIL_BOUND,
};
use crate::error::{domain, Error, Result};
use integrator::{DormandPrince, StepControl};
use model::{qubit_diag_kron, QubitDiagonalModel};

/// Protocol variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Protocol {
    /// One stage with coupling `g` over `[0, t_max]`.
    Basic,
    /// Coupling `g + g′` for a half period, then `g` until `t_max`.
    Boosted,
    /// `n_pi` echo iterations, a closing flip, and `n_pi` more iterations.
    SpinEcho { n_pi: u32 },
}

/// Dynamics parameters in natural units of the oscillator (`ℏ = k_B = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub omega: f64,
    pub g: f64,
    pub g_prime: f64,
    pub gamma_m: f64,
    pub gamma_a: f64,
    pub nbar: f64,
    /// Fock truncation; `None` selects it from `nbar` and the displacement scale.
    pub dim: Option<usize>,
    pub t_max: f64,
    pub dt_initial: f64,
    pub protocol: Protocol,
    /// Number of uniformly spaced output samples; default 200 per period.
    pub samples: Option<usize>,
    /// Relative per-step tolerance of the integrator; the absolute floor is
    /// a hundredth of it since most density-matrix entries are small.
    pub tolerance: f64,
    /// Bound on the top-band Fock population during evolution.
    pub tail_bound: f64,
    /// Override for the boosted first-stage duration (default `π/ω`).
    pub boost_duration: Option<f64>,
    /// Record negativity and the smallest eigenvalue of ρ at every sample.
    pub state_diagnostics: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            g: 0.0,
            g_prime: 0.0,
            gamma_m: 0.0,
            gamma_a: 0.0,
            nbar: 0.0,
            dim: None,
            t_max: 2.0 * PI,
            dt_initial: 1e-3,
            protocol: Protocol::Basic,
            samples: None,
            tolerance: 1e-10,
            tail_bound: 1e-6,
            boost_duration: None,
            state_diagnostics: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega,
            self.g,
            self.g_prime,
            self.gamma_m,
            self.gamma_a,
            self.nbar,
            self.t_max,
            self.dt_initial,
            self.tolerance,
            self.tail_bound,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(domain("protocol parameters must be finite"));
        }
        if self.omega <= 0.0 {
            return Err(domain("omega must be > 0"));
        }
        if self.g_prime < 0.0 || self.gamma_m < 0.0 || self.gamma_a < 0.0 || self.nbar < 0.0 {
            return Err(domain("g_prime, gamma_m, gamma_a and nbar must be >= 0"));
        }
        if self.t_max <= 0.0 || self.dt_initial <= 0.0 || self.tolerance <= 0.0 {
            return Err(domain("t_max, dt_initial and tolerance must be > 0"));
        }
        if let Some(d) = self.dim {
            if d < 2 {
                return Err(domain("dim must be >= 2"));
            }
        }
        if let Protocol::SpinEcho { n_pi } = self.protocol {
            if n_pi == 0 {
                return Err(domain("spin echo needs n_pi >= 1"));
            }
        }
        if let Some(b) = self.boost_duration {
            if !(b > 0.0) {
                return Err(domain("boost_duration must be > 0"));
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.g / self.omega
    }

    pub fn lambda_prime(&self) -> f64 {
        self.g_prime / self.omega
    }

    fn half_period(&self) -> f64 {
        PI / self.omega
    }

    /// Largest conditional displacement the protocol produces.
    pub fn max_displacement(&self) -> f64 {
        let (l, lp) = (self.lambda().abs(), self.lambda_prime());
        match self.protocol {
            Protocol::Basic => 2.0 * l,
            Protocol::Boosted => 2.0 * (l + lp) + 2.0 * l,
            Protocol::SpinEcho { n_pi } => (4.0 * n_pi as f64 + 2.0) * l,
        }
    }

    pub fn resolved_dim(&self) -> usize {
        self.dim
            .unwrap_or_else(|| auto_dim(self.nbar, self.max_displacement(), DEFAULT_TAIL_BOUND))
    }

    /// Total simulated time; the spin echo fixes its own duration.
    pub fn duration(&self) -> f64 {
        match self.protocol {
            Protocol::SpinEcho { n_pi } => 4.0 * n_pi as f64 * self.half_period(),
            _ => self.t_max,
        }
    }

    fn segments(&self) -> Vec<Segment> {
        match self.protocol {
            Protocol::Basic => vec![Segment {
                coupling: self.g,
                end: self.t_max,
                flip_after: false,
            }],
            Protocol::Boosted => {
                let stage1 = self.boost_duration.unwrap_or_else(|| self.half_period());
                let mut segs = vec![Segment {
                    coupling: self.g + self.g_prime.copysign(self.g),
                    end: stage1.min(self.t_max),
                    flip_after: false,
                }];
                if self.t_max > stage1 {
                    segs.push(Segment {
                        coupling: self.g,
                        end: self.t_max,
                        flip_after: false,
                    });
                }
                segs
            }
            Protocol::SpinEcho { n_pi } => {
                // Each iteration is two half periods, each followed by σ_x.
                // The closing σ_x after iteration n_pi cancels that iteration's
                // last flip, and the final flip cancels the last iteration's.
                let total = 4 * n_pi as usize;
                (1..=total)
                    .map(|k| Segment {
                        coupling: self.g,
                        end: k as f64 * self.half_period(),
                        flip_after: k != 2 * n_pi as usize && k != total,
                    })
                    .collect()
            }
        }
    }

    fn sample_times(&self, segments: &[Segment]) -> Vec<f64> {
        let duration = self.duration();
        let n = self.samples.unwrap_or_else(|| {
            ((200.0 * duration * self.omega / (2.0 * PI)).ceil() as usize).max(1) + 1
        });
        let n = n.max(2);
        let mut times: Vec<f64> = (0..n)
            .map(|k| duration * k as f64 / (n - 1) as f64)
            .collect();
        times.extend(segments.iter().map(|s| s.end));
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * duration.max(1.0));
        times
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    coupling: f64,
    end: f64,
    flip_after: bool,
}

/// Sampled visibility with integration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityTrace {
    pub times: Vec<f64>,
    pub visibility: Vec<f64>,
    pub sigma_minus: Vec<Complex64>,
    pub trace_error: Vec<f64>,
    pub tail_mass: Vec<f64>,
    /// `Tr[ρ (σ_z ⊗ 1)]`.
    pub population_difference: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negativity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<Vec<f64>>,
}

impl VisibilityTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Visibility at the sample nearest to `t`.
    pub fn visibility_at(&self, t: f64) -> Option<f64> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some(self.visibility[idx])
    }

    pub(crate) fn with_capacity(n: usize, diagnostics: bool) -> Self {
        Self {
            times: Vec::with_capacity(n),
            visibility: Vec::with_capacity(n),
            sigma_minus: Vec::with_capacity(n),
            trace_error: Vec::with_capacity(n),
            tail_mass: Vec::with_capacity(n),
            population_difference: Vec::with_capacity(n),
            negativity: diagnostics.then(|| Vec::with_capacity(n)),
            min_eigenvalue: diagnostics.then(|| Vec::with_capacity(n)),
        }
    }

    pub(crate) fn record(&mut self, state: &JointState, tail_band: usize) -> f64 {
        let tail = state.tail_mass(tail_band);
        self.times.push(state.time());
        self.visibility.push(state.visibility());
        self.sigma_minus.push(state.sigma_minus());
        self.trace_error.push((state.trace() - 1.0).norm());
        self.tail_mass.push(tail);
        self.population_difference.push(state.population_difference());
        if let (Some(neg), Some(mins)) = (&mut self.negativity, &mut self.min_eigenvalue) {
            let rho = state.to_density();
            neg.push(negativity(&rho));
            mins.push(rho.min_eigenvalue());
        }
        tail
    }
}

/// Number of top Fock levels whose population is reported as `tail_mass`.
pub fn tail_band(dim: usize) -> usize {
    dim.div_ceil(10).max(1)
}

/// Joint Hamiltonian `1 ⊗ ω a†a + coupling · σ_z ⊗ (a + a†)` on `2·dim` levels.
pub fn build_hamiltonian(cfg: &ProtocolConfig, coupling: f64) -> Result<FockOperator> {
    if !coupling.is_finite() {
        return Err(domain("coupling must be finite"));
    }
    let d = cfg.resolved_dim();
    let a = FockOperator::annihilation(d);
    let xpa = FockOperator::from_matrix(a.matrix() + a.matrix().adjoint())?;
    let number = FockOperator::number(d);
    let h = qubit_diag_kron([cfg.omega, cfg.omega], &number) + qubit_diag_kron([coupling, -coupling], &xpa);
    FockOperator::from_matrix(h)
}

/// `|+⟩⟨+| ⊗ ρ_th(n̄)` on the configured truncation.
pub fn initial_state(cfg: &ProtocolConfig) -> Result<DensityOperator> {
    let d = cfg.resolved_dim();
    let thermal = thermal_density_with_bound(ThermalParams::new(cfg.nbar)?, d, DEFAULT_TAIL_BOUND)?;
    let half = Complex64::new(0.5, 0.0);
    let plus = DensityOperator::new(DMatrix::from_element(2, 2, half))?;
    Ok(DensityOperator::product(&plus, &thermal.rho))
}

fn protocol_model(cfg: &ProtocolConfig, coupling: f64, dim: usize) -> QubitDiagonalModel {
    let frame: Vec<f64> = (0..dim).map(|n| cfg.omega * n as f64).collect();
    let a = FockOperator::annihilation(dim);
    let xpa = a.matrix() + a.matrix().adjoint();
    let up = &xpa * Complex64::new(coupling, 0.0);
    let down = &xpa * Complex64::new(-coupling, 0.0);
    let mut model = QubitDiagonalModel::new(frame, [0.0, 0.0], [&up, &down]);
    model.add_jump((cfg.nbar + 1.0) * cfg.gamma_m, [1.0, 1.0], Some(a.matrix()));
    model.add_jump(cfg.nbar * cfg.gamma_m, [1.0, 1.0], Some(&a.matrix().adjoint()));
    model.add_jump(cfg.gamma_a, [1.0, -1.0], None);
    model
}

pub(crate) fn step_control(cfg_tol: f64, duration: f64) -> StepControl {
    StepControl {
        rtol: cfg_tol,
        atol: cfg_tol * 1e-2,
        min_step: 1e-12 * duration.max(1.0),
        max_steps: 50_000_000,
    }
}

/// Evolve an arbitrary joint state through the configured protocol schedule,
/// calling `observer` at every output sample.
pub fn evolve_master_observed<F>(
    cfg: &ProtocolConfig,
    rho0: &DensityOperator,
    mut observer: F,
) -> Result<(VisibilityTrace, StepStats)>
where
    F: FnMut(&JointState),
{
    cfg.validate()?;
    let dim = cfg.resolved_dim();
    if rho0.dim() != 2 * dim {
        return Err(domain(format!(
            "initial state has dimension {}, expected {}",
            rho0.dim(),
            2 * dim
        )));
    }
    let segments = cfg.segments();
    let times = cfg.sample_times(&segments);
    let band = tail_band(dim);
    let frame: Vec<f64> = (0..dim).map(|n| cfg.omega * n as f64).collect();
    let mut state = JointState::from_density(rho0, frame, 0.0);
    let mut trace = VisibilityTrace::with_capacity(times.len(), cfg.state_diagnostics);
    let mut dp = DormandPrince::new(state.data.len(), cfg.dt_initial, step_control(cfg.tolerance, cfg.duration()));

    let check_tail = |tail: f64, t: f64| -> Result<()> {
        if tail > cfg.tail_bound {
            return Err(Error::Truncation {
                tail_mass: tail,
                bound: cfg.tail_bound,
                context: format!("top {band} of {dim} Fock levels at t = {t:.6}"),
            });
        }
        Ok(())
    };

    let tail = trace.record(&state, band);
    check_tail(tail, 0.0)?;
    observer(&state);
    let mut next_sample = 1;
    let mut start = 0.0;
    for seg in &segments {
        let mut model = protocol_model(cfg, seg.coupling, dim);
        dp.invalidate();
        let mut t = start;
        while next_sample < times.len() && times[next_sample] <= seg.end + 1e-12 * seg.end.max(1.0) {
            // samples within round-off of the boundary snap onto it
            let is_boundary = (times[next_sample] - seg.end).abs() <= 1e-12 * seg.end.max(1.0);
            let target = if is_boundary { seg.end } else { times[next_sample] };
            dp.advance(&mut model, &mut t, &mut state.data, target)?;
            state.time = t;
            if is_boundary && seg.flip_after {
                state.apply_sigma_x();
                dp.invalidate();
            }
            let tail = trace.record(&state, band);
            check_tail(tail, t)?;
            observer(&state);
            next_sample += 1;
        }
        if t < seg.end {
            dp.advance(&mut model, &mut t, &mut state.data, seg.end)?;
            state.time = t;
            if seg.flip_after {
                state.apply_sigma_x();
            }
        }
        start = seg.end;
    }
    Ok((trace, dp.stats))
}

/// Evolve `rho0` (dimension `2·dim`) through the configured protocol.
pub fn evolve_master(cfg: &ProtocolConfig, rho0: &DensityOperator) -> Result<VisibilityTrace> {
    evolve_master_observed(cfg, rho0, |_| {}).map(|(trace, _)| trace)
}

/// Run the protocol from `|+⟩ ⊗ thermal`.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<VisibilityTrace> {
    cfg.validate()?;
    let rho0 = initial_state(cfg)?;
    evolve_master(cfg, &rho0)
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose
/// over the qubit factor.
pub fn negativity(rho: &DensityOperator) -> f64 {
    let m = rho.matrix();
    let d = m.nrows() / 2;
    let mut pt = m.clone();
    for r in 0..d {
        for c in 0..d {
            pt[(r, d + c)] = m[(d + r, c)];
            pt[(d + r, c)] = m[(r, d + c)];
        }
    }
    pt.symmetric_eigenvalues()
        .iter()
        .filter(|&&e| e < 0.0)
        .map(|e| -e)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{displacement_matrix, thermal_occupation_natural, ComplexAmp};
    use crate::analytic::{visibility_thermal, CouplingParams, PhaseTime};

    fn cfg(g: f64, nbar: f64) -> ProtocolConfig {
        ProtocolConfig {
            g,
            nbar,
            ..ProtocolConfig::default()
        }
    }

    #[test]
    fn hamiltonian_structure() {
        let c = ProtocolConfig {
            dim: Some(8),
            ..cfg(0.0, 0.0)
        };
        let h = build_hamiltonian(&c, 0.0).unwrap();
        for q in 0..2 {
            for n in 0..8 {
                assert_eq!(h.matrix()[(q * 8 + n, q * 8 + n)].re, n as f64);
            }
        }
        let h = build_hamiltonian(&c, 0.37).unwrap();
        assert!(h.hermiticity_defect() < 1e-15);
        let sz = qubit_diag_kron([1.0, -1.0], &FockOperator::identity(8));
        let comm = h.matrix() * &sz - &sz * h.matrix();
        assert!(comm.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn displaced_oscillator_ground_energy() {
        let c = ProtocolConfig {
            dim: Some(80),
            ..cfg(0.1, 0.0)
        };
        let h = build_hamiltonian(&c, 0.1).unwrap();
        let eig = h.into_matrix().symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((min + 0.01).abs() < 1e-8);
    }

    #[test]
    fn free_evolution_keeps_full_visibility() {
        let c = ProtocolConfig {
            nbar: 0.5,
            t_max: 7.0,
            ..ProtocolConfig::default()
        };
        let trace = run_protocol(&c).unwrap();
        assert!(trace.visibility.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn ground_state_half_period_dip() {
        let c = ProtocolConfig {
            t_max: PI,
            ..cfg(0.25, 0.0)
        };
        let trace = run_protocol(&c).unwrap();
        let v = *trace.visibility.last().unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn full_period_revival() {
        for (g, nbar) in [(0.5, 0.0), (0.2, 5.0), (0.4, 2.0)] {
            let trace = run_protocol(&cfg(g, nbar)).unwrap();
            let v = *trace.visibility.last().unwrap();
            assert!((v - 1.0).abs() < 1e-8, "g = {g}, nbar = {nbar}: {v}");
        }
    }

    #[test]
    fn atomic_dephasing_rate_is_two_gamma() {
        let c = ProtocolConfig {
            gamma_a: 0.03,
            t_max: 5.0,
            ..ProtocolConfig::default()
        };
        let trace = run_protocol(&c).unwrap();
        for (t, v) in trace.times.iter().zip(&trace.visibility) {
            assert!((v - (-2.0 * 0.03 * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn negativity_of_product_and_cat_states() {
        let d = 40;
        let plus = DensityOperator::pure(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        let osc = crate::algebra::thermal_density(ThermalParams::new(0.8).unwrap(), d).unwrap();
        assert!(negativity(&DensityOperator::product(&plus, &osc)) < 1e-10);

        let delta = 2.0;
        let d = 60;
        let up = displacement_matrix(ComplexAmp::new(delta, 0.0), d).unwrap();
        let dn = displacement_matrix(ComplexAmp::new(-delta, 0.0), d).unwrap();
        let mut psi = Vec::with_capacity(2 * d);
        psi.extend(up.matrix().column(0).iter().copied());
        psi.extend(dn.matrix().column(0).iter().copied());
        let rho = DensityOperator::pure(&psi).unwrap();
        let overlap = (-2.0 * delta * delta).exp();
        let expected = 0.5 * (1.0 - overlap * overlap).sqrt();
        assert!((negativity(&rho) - expected).abs() < 1e-9);
    }

    #[test]
    fn half_period_state_is_entangled() {
        let c = ProtocolConfig {
            t_max: PI,
            state_diagnostics: true,
            ..cfg(0.3, 0.0)
        };
        let trace = run_protocol(&c).unwrap();
        let neg = trace.negativity.as_ref().unwrap();
        assert!(*neg.last().unwrap() > 0.01);
        assert!(neg[0] < 1e-10);
    }

    #[test]
    fn fig6_thermal_nbar() {
        let nbar = thermal_occupation_natural(1.0, 2.0).unwrap().nbar;
        assert!((nbar - 1.5414940825367982).abs() < 1e-14);
        // closed form sanity for the dim heuristic inputs
        let p = CouplingParams::new(0.01, nbar);
        assert!(visibility_thermal(&p, PhaseTime::half_period()) < 1.0);
    }

    #[test]
    fn spin_echo_schedule() {
        let c = ProtocolConfig {
            protocol: Protocol::SpinEcho { n_pi: 2 },
            ..cfg(0.05, 0.0)
        };
        let flips: Vec<usize> = c
            .segments()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.flip_after)
            .map(|(k, _)| k + 1)
            .collect();
        assert_eq!(flips, vec![1, 2, 3, 5, 6, 7]);
        assert!((c.duration() - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn spin_echo_closes_with_off_grid_boundaries() {
        // 1601 samples over 8π put some grid points a few ulps from a segment end
        for n_pi in [2, 3] {
            let c = ProtocolConfig {
                protocol: Protocol::SpinEcho { n_pi },
                ..cfg(0.05, 0.0)
            };
            let tr = run_protocol(&c).unwrap();
            assert!((tr.visibility.last().unwrap() - 1.0).abs() < 1e-6, "n_pi = {n_pi}");
        }
    }

    #[test]
    fn truncation_error_when_dim_too_small() {
        let c = ProtocolConfig {
            dim: Some(6),
            ..cfg(1.5, 0.0)
        };
        let err = run_protocol(&c).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }), "{err:?}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(run_protocol(&ProtocolConfig { omega: 0.0, ..cfg(0.1, 0.0) }).is_err());
        assert!(run_protocol(&ProtocolConfig { dim: Some(1), ..cfg(0.1, 0.0) }).is_err());
        assert!(run_protocol(&ProtocolConfig {
            protocol: Protocol::SpinEcho { n_pi: 0 },
            ..cfg(0.1, 0.0)
        })
        .is_err());
    }
}
