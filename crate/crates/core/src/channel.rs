//! Monotonicity witness for separable qubit–oscillator channels.
//!
//! A separable channel here is the generator
//! `−i[ω₀σ_z + H_B, ρ] + γ D[σ_z⊗B](ρ) + κ D[σ_z](ρ) + Σ_j r_j D[L_j](ρ)`
//! with `D[L](ρ) = LρL† − ½{L†L, ρ}`. With this convention
//! `dV/dt = −2γV` whenever `B†B = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{DensityOperator, FockOperator, HERMITIAN_TOL};
use crate::error::{domain, Result};
use crate::lindblad::integrator::DormandPrince;
use crate::lindblad::model::QubitDiagonalModel;
use crate::lindblad::{step_control, tail_band, JointState, VisibilityTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableChannelSpec {
    /// Coefficient of `σ_z` in the qubit Hamiltonian.
    pub qubit_hamiltonian_z: f64,
    pub oscillator_hamiltonian: FockOperator,
    pub b_operator: FockOperator,
    pub gamma: f64,
    pub local_qubit_dephasing: f64,
    pub local_oscillator_lindblads: Vec<(FockOperator, f64)>,
}

impl SeparableChannelSpec {
    pub fn dim(&self) -> usize {
        self.oscillator_hamiltonian.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.b_operator.dim() != d
            || self.local_oscillator_lindblads.iter().any(|(l, _)| l.dim() != d)
        {
            return Err(domain("channel operators must share the oscillator dimension"));
        }
        let defect = self.oscillator_hamiltonian.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(domain(format!("oscillator Hamiltonian not Hermitian (defect {defect:.3e})")));
        }
        let rates_ok = [self.gamma, self.local_qubit_dephasing]
            .into_iter()
            .chain(self.local_oscillator_lindblads.iter().map(|(_, r)| *r))
            .all(|r| r.is_finite() && r >= 0.0);
        if !rates_ok || !self.qubit_hamiltonian_z.is_finite() {
            return Err(domain("channel rates must be finite and >= 0"));
        }
        Ok(())
    }

    fn model(&self) -> QubitDiagonalModel {
        let d = self.dim();
        let h = self.oscillator_hamiltonian.matrix();
        let w0 = self.qubit_hamiltonian_z;
        let mut model = QubitDiagonalModel::new(vec![0.0; d], [w0, -w0], [h, h]);
        model.add_jump(self.gamma, [1.0, -1.0], Some(self.b_operator.matrix()));
        model.add_jump(self.local_qubit_dephasing, [1.0, -1.0], None);
        for (l, rate) in &self.local_oscillator_lindblads {
            model.add_jump(*rate, [1.0, 1.0], Some(l.matrix()));
        }
        #[cfg(feature = "fault-injection")]
        model.negate_dissipators();
        model
    }
}

/// Sampling and accuracy of a separable-channel run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub samples: usize,
    pub tolerance: f64,
    pub dt_initial: f64,
}

impl SimulationOptions {
    /// 200 samples per `2π` of evolution time, at least 201.
    pub fn for_duration(t_max: f64) -> Self {
        let per_period = 200.0 * t_max / (2.0 * std::f64::consts::PI);
        Self {
            samples: (per_period.ceil() as usize).max(200) + 1,
            tolerance: 1e-10,
            dt_initial: 1e-3,
        }
    }
}

/// Evolves `rho0` under the separable generator, recording negativity at
/// every sample.
pub fn simulate_separable(
    spec: &SeparableChannelSpec,
    rho0: &DensityOperator,
    t_max: f64,
) -> Result<VisibilityTrace> {
    simulate_separable_with(spec, rho0, t_max, SimulationOptions::for_duration(t_max))
}

pub fn simulate_separable_with(
    spec: &SeparableChannelSpec,
    rho0: &DensityOperator,
    t_max: f64,
    opts: SimulationOptions,
) -> Result<VisibilityTrace> {
    spec.validate()?;
    let d = spec.dim();
    if rho0.dim() != 2 * d {
        return Err(domain(format!(
            "initial state has dimension {}, expected {}",
            rho0.dim(),
            2 * d
        )));
    }
    if !(t_max > 0.0) || !t_max.is_finite() || opts.samples < 2 {
        return Err(domain("t_max must be > 0 and samples >= 2"));
    }
    let mut model = spec.model();
    let mut state = JointState::from_density(rho0, vec![0.0; d], 0.0);
    let mut dp = DormandPrince::new(state.data.len(), opts.dt_initial, step_control(opts.tolerance, t_max));
    let band = tail_band(d);
    let mut trace = VisibilityTrace::with_capacity(opts.samples, true);
    trace.record(&state, band);
    let mut t = 0.0;
    for k in 1..opts.samples {
        let target = t_max * k as f64 / (opts.samples - 1) as f64;
        dp.advance(&mut model, &mut t, &mut state.data, target)?;
        state.time = t;
        trace.record(&state, band);
    }
    Ok(trace)
}

/// Outcome of the monotonicity witness on one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub monotonic: bool,
    /// Largest rise of `V` above its running minimum.
    pub max_violation: f64,
    /// Least-squares rate `r` in `V ≈ V(0) e^{−r t}`.
    pub decay_rate_fit: f64,
    pub negativity_peak: Option<f64>,
}

pub fn check_monotonic(trace: &VisibilityTrace, tol: f64) -> Result<WitnessReport> {
    let v = &trace.visibility;
    if v.is_empty() {
        return Err(domain("cannot check an empty trace"));
    }
    let monotonic = v.windows(2).all(|w| w[1] <= w[0] + tol);
    let mut running_min = v[0];
    let mut max_violation = 0.0f64;
    for &x in &v[1..] {
        max_violation = max_violation.max(x - running_min);
        running_min = running_min.min(x);
    }
    let negativity_peak = trace
        .negativity
        .as_ref()
        .map(|n| n.iter().copied().fold(0.0, f64::max));
    Ok(WitnessReport {
        monotonic,
        max_violation,
        decay_rate_fit: fit_decay_rate(&trace.times, v),
        negativity_peak,
    })
}

fn fit_decay_rate(times: &[f64], v: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(v)
        .filter(|(_, &x)| x > 1e-12)
        .map(|(&t, &x)| (t, x.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        -sxy / sxx
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

fn spectral_normalized(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let norm = m.singular_values().max();
    if norm > 0.0 {
        m.unscale(norm)
    } else {
        m
    }
}

/// Random separable channel: `B` and local jumps are complex Gaussian
/// matrices scaled to unit spectral norm, `H_B` is a unit-norm GUE draw,
/// `γ ~ U[0, 0.2]`, qubit dephasing `~ U[0, 0.05]`, and up to two local
/// jumps with rates `~ U[0, 0.1]`.
pub fn random_separable_spec(seed: u64, dim: usize) -> Result<SeparableChannelSpec> {
    if dim < 2 {
        return Err(domain("dim must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = spectral_normalized(gaussian_matrix(&mut rng, dim));
    let g = gaussian_matrix(&mut rng, dim);
    let h = spectral_normalized((&g + g.adjoint()).unscale(2.0));
    // exact Hermiticity after the floating-point scaling
    let h = (&h + h.adjoint()).unscale(2.0);
    let gamma = rng.gen_range(0.0..0.2);
    let local_qubit_dephasing = rng.gen_range(0.0..0.05);
    let qubit_hamiltonian_z = rng.gen_range(-1.0..1.0);
    let n_local = rng.gen_range(0..=2);
    let mut local = Vec::with_capacity(n_local);
    for _ in 0..n_local {
        let l = spectral_normalized(gaussian_matrix(&mut rng, dim));
        local.push((FockOperator::from_matrix(l)?, rng.gen_range(0.0..0.1)));
    }
    Ok(SeparableChannelSpec {
        qubit_hamiltonian_z,
        oscillator_hamiltonian: FockOperator::from_matrix(h)?,
        b_operator: FockOperator::from_matrix(b)?,
        gamma,
        local_qubit_dephasing,
        local_oscillator_lindblads: local,
    })
}

/// Random product state: a pure qubit state with both populations at least
/// 0.1 and a full-rank random mixed oscillator state.
pub fn random_product_state(seed: u64, dim: usize) -> Result<DensityOperator> {
    if dim < 2 {
        return Err(domain("dim must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ee_d0f5_747e);
    let p0: f64 = rng.gen_range(0.1..0.9);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let qubit = DensityOperator::pure(&[
        Complex64::new(p0.sqrt(), 0.0),
        Complex64::from_polar((1.0 - p0).sqrt(), phase),
    ])?;
    let g = gaussian_matrix(&mut rng, dim);
    let w = &g * g.adjoint();
    let w = w.unscale(w.trace().re);
    let w = (&w + w.adjoint()).unscale(2.0);
    let osc = DensityOperator::new(w)?;
    Ok(DensityOperator::product(&qubit, &osc))
}

/// One row of the property-suite summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub seed: u64,
    pub monotonic: bool,
    pub max_violation: f64,
    pub negativity_peak: f64,
    pub population_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub rows: Vec<SuiteRow>,
}

impl SuiteSummary {
    pub fn all_monotonic(&self) -> bool {
        self.rows.iter().all(|r| r.monotonic)
    }

    pub fn max_negativity(&self) -> f64 {
        self.rows.iter().map(|r| r.negativity_peak).fold(0.0, f64::max)
    }

    pub fn max_violation(&self) -> f64 {
        self.rows.iter().map(|r| r.max_violation).fold(0.0, f64::max)
    }

    pub fn max_population_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.population_drift).fold(0.0, f64::max)
    }
}

/// Runs the witness on `seeds` random separable channels in parallel; rows
/// come back in seed order regardless of scheduling.
pub fn run_property_suite(
    seeds: std::ops::Range<u64>,
    dim: usize,
    t_max: f64,
    tol: f64,
) -> Result<SuiteSummary> {
    let rows: Result<Vec<SuiteRow>> = seeds
        .into_par_iter()
        .map(|seed| {
            let spec = random_separable_spec(seed, dim)?;
            let rho0 = random_product_state(seed, dim)?;
            let trace = simulate_separable(&spec, &rho0, t_max)?;
            let report = check_monotonic(&trace, tol)?;
            let p0 = trace.population_difference[0];
            let drift = trace
                .population_difference
                .iter()
                .map(|p| (p - p0).abs())
                .fold(0.0, f64::max);
            Ok(SuiteRow {
                seed,
                monotonic: report.monotonic,
                max_violation: report.max_violation,
                negativity_peak: report.negativity_peak.unwrap_or(0.0),
                population_drift: drift,
            })
        })
        .collect();
    Ok(SuiteSummary { rows: rows? })
}
