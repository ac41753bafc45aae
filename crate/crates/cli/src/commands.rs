use std::f64::consts::PI;
use std::path::PathBuf;

use chrono::Utc;
use serde::Serialize;
use serde_json::json;

use revival::analytic::{
    spin_echo_overlap, visibility_boosted, visibility_damped, visibility_ground, visibility_many_atom,
    visibility_thermal, CouplingParams, PhaseNoiseForm, PhaseTime,
};
use revival::channel::{check_monotonic, run_property_suite, WitnessReport};
use revival::config::{physical_config, protocol_config, KeyValues};
use revival::design::{atoms_required, derive, run_time_days, sweep_grid, DerivedParams, LogRange};
use revival::export;
use revival::lindblad::{run_protocol, Protocol, ProtocolConfig};
use revival::Error;

use crate::manifest;
use crate::{AnalyticArgs, DesignArgs, Format, Formula, ProtocolArg, SimulateArgs, VerifyArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_ENGINE: u8 = 4;
pub const EXIT_WITNESS: u8 = 5;

/// Largest negativity accepted for a separable run.
const SEPARABLE_NEGATIVITY_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_USAGE,
            Error::Domain(_) | Error::Geometry(_) => EXIT_DOMAIN,
            Error::Truncation { .. } | Error::Integration { .. } => EXIT_ENGINE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn emit(out: Option<&PathBuf>, content: String, command: &str, echo: serde_json::Value, started: chrono::DateTime<Utc>) -> CmdResult {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => manifest::write_all(&[(path.clone(), content)], command, echo, started)
            .map(|_| ())
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
    }
}

fn check_analytic_flags(a: &AnalyticArgs) -> CmdResult {
    let name = a.formula.to_possible_value_name();
    let allowed = |flag: &str| -> bool {
        match flag {
            "--lambda-prime" => a.formula == Formula::Boosted,
            "--q" | "--gamma-a" => a.formula == Formula::Damped,
            "--n-atoms" => a.formula == Formula::ManyAtom,
            "--n-pi" => a.formula == Formula::SpinEcho,
            "--nbar" => !matches!(a.formula, Formula::Ground | Formula::SpinEcho),
            _ => true,
        }
    };
    let given = [
        ("--lambda-prime", a.lambda_prime.is_some()),
        ("--q", a.q.is_some()),
        ("--gamma-a", a.gamma_a.is_some()),
        ("--n-atoms", a.n_atoms.is_some()),
        ("--n-pi", a.n_pi.is_some()),
        ("--nbar", a.nbar.is_some()),
    ];
    for (flag, present) in given {
        if present && !allowed(flag) {
            return Err(Failure::usage(format!("{flag} conflicts with --formula {name}")));
        }
    }
    if a.formula == Formula::Boosted && a.lambda_prime.is_none() {
        return Err(Failure::usage("--formula boosted requires --lambda-prime"));
    }
    if a.formula == Formula::ManyAtom && a.n_atoms.is_none() {
        return Err(Failure::usage("--formula many-atom requires --n-atoms"));
    }
    if a.samples == 0 || !(a.t_max > 0.0) || !a.t_max.is_finite() {
        return Err(Failure::usage("--samples must be >= 1 and --t-max > 0"));
    }
    Ok(())
}

trait ValueName {
    fn to_possible_value_name(&self) -> String;
}

impl<T: clap::ValueEnum> ValueName for T {
    fn to_possible_value_name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

pub fn analytic(a: &AnalyticArgs) -> CmdResult {
    let started = Utc::now();
    check_analytic_flags(a)?;
    let mut p = CouplingParams::new(a.lambda, a.nbar.unwrap_or(0.0));
    if let Some(lp) = a.lambda_prime {
        p = p.with_lambda_prime(lp);
    }
    if a.formula == Formula::Damped {
        p = p.with_damping(a.q.unwrap_or(f64::INFINITY), a.gamma_a.unwrap_or(0.0));
    }
    p.validate()?;

    let (omega_t, v): (Vec<f64>, Vec<f64>) = if a.formula == Formula::SpinEcho {
        // start, pre-closing midpoint, end of the sequence
        let n = a.n_pi.unwrap_or(1);
        let overlap = spin_echo_overlap(n, a.lambda)?;
        let half = 2.0 * n as f64 * PI;
        (vec![0.0, half, 2.0 * half], vec![1.0, overlap, 1.0])
    } else {
        let span = 2.0 * PI * a.t_max;
        let mut ts = Vec::with_capacity(a.samples);
        let mut vs = Vec::with_capacity(a.samples);
        for k in 0..a.samples {
            let wt = span * k as f64 / a.samples as f64;
            let t = PhaseTime::new(wt)?;
            let v = match a.formula {
                Formula::Ground => visibility_ground(&p, t),
                Formula::Thermal => visibility_thermal(&p, t),
                Formula::Damped => visibility_damped(&p, t)?,
                Formula::Boosted => visibility_boosted(&p, t),
                Formula::ManyAtom => {
                    visibility_many_atom(a.n_atoms.unwrap_or(1), &p, t, PhaseNoiseForm::Exact)?
                }
                Formula::SpinEcho => unreachable!(),
            };
            ts.push(wt);
            vs.push(v);
        }
        (ts, vs)
    };
    let echo = json!({
        "formula": a.formula.to_possible_value_name(),
        "lambda": a.lambda,
        "lambda_prime": a.lambda_prime,
        "nbar": a.nbar,
        "q": a.q,
        "gamma_a": a.gamma_a,
        "n_atoms": a.n_atoms,
        "n_pi": a.n_pi,
        "t_max_periods": a.t_max,
        "samples": a.samples,
    });
    emit(a.out.as_ref(), export::curve_csv(&omega_t, &v), "analytic", echo, started)
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    let started = Utc::now();
    let kv = KeyValues::read(&a.config)?;
    let mut cfg = protocol_config(&kv)?;
    if let Some(p) = a.protocol {
        cfg.protocol = match p {
            ProtocolArg::Basic => Protocol::Basic,
            ProtocolArg::Boosted => Protocol::Boosted,
            ProtocolArg::SpinEcho => Protocol::SpinEcho {
                n_pi: kv.get::<u32>("n_pi")?.unwrap_or(1),
            },
        };
        cfg.validate()?;
    }
    let trace = run_protocol(&cfg)?;
    let content = match a.format {
        Format::Csv => export::trace_csv(&trace),
        Format::Json => export::trace_json(&cfg, &trace)?,
    };
    let echo = json!({
        "config_file": a.config.display().to_string(),
        "resolved": serde_json::to_value(&cfg).map_err(|e| Failure::usage(e.to_string()))?,
        "resolved_dim": cfg.resolved_dim(),
    });
    emit(Some(&a.out), content, "simulate", echo, started)
}

#[derive(Serialize)]
struct VerifyReport {
    seeds: u64,
    dim: usize,
    tol: f64,
    all_monotonic: bool,
    max_violation: f64,
    max_negativity: f64,
    max_population_drift: f64,
    contrast: WitnessReport,
}

/// The coupled Hamiltonian at λ = 0.25 over one period from the ground state.
pub fn contrast_case(tol: f64) -> Result<WitnessReport, Error> {
    let cfg = ProtocolConfig {
        g: 0.25,
        t_max: 2.0 * PI,
        state_diagnostics: true,
        ..ProtocolConfig::default()
    };
    check_monotonic(&run_protocol(&cfg)?, tol)
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    let started = Utc::now();
    if a.seeds == 0 {
        return Err(Failure::usage("--seeds must be >= 1 (empty suite)"));
    }
    if a.dim < 2 || !(a.tol >= 0.0) || !(a.periods > 0.0) {
        return Err(Failure::usage("--dim must be >= 2, --tol >= 0 and --periods > 0"));
    }
    let summary = run_property_suite(0..a.seeds, a.dim, 2.0 * PI * a.periods, a.tol)?;
    if let Some(bad) = summary
        .rows
        .iter()
        .find(|r| !r.monotonic || r.negativity_peak > SEPARABLE_NEGATIVITY_TOL)
    {
        return Err(Failure {
            code: EXIT_WITNESS,
            message: format!(
                "separable channel seed {} failed: monotonic = {}, max_violation = {:.3e}, negativity_peak = {:.3e}",
                bad.seed, bad.monotonic, bad.max_violation, bad.negativity_peak
            ),
        });
    }
    let contrast = contrast_case(a.tol)?;
    let fired = !contrast.monotonic && contrast.negativity_peak.unwrap_or(0.0) > 0.0;
    if !fired {
        return Err(Failure {
            code: EXIT_WITNESS,
            message: format!("contrast case did not trigger the witness: {contrast:?}"),
        });
    }
    let report = VerifyReport {
        seeds: a.seeds,
        dim: a.dim,
        tol: a.tol,
        all_monotonic: summary.all_monotonic(),
        max_violation: summary.max_violation(),
        max_negativity: summary.max_negativity(),
        max_population_drift: summary.max_population_drift(),
        contrast,
    };
    let report_json = export::to_json(&report)?;
    if let Some(out) = &a.out {
        let echo = json!({ "seeds": a.seeds, "dim": a.dim, "tol": a.tol, "periods": a.periods });
        emit(Some(out), export::suite_csv(&summary), "verify", echo, started)?;
    }
    print!("{report_json}");
    Ok(())
}

#[derive(Serialize)]
struct PointReport {
    #[serde(flatten)]
    derived: DerivedParams,
    atoms_required_5sigma: f64,
    run_time_days: f64,
}

/// Shot budget behind the run-time estimate.
const ATOMS_PER_RUN: f64 = 1e7;
const MINUTES_PER_RUN: f64 = 2.0;

fn parse_range(flag: &str, s: &str) -> Result<LogRange, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Failure::usage(format!("{flag} expects lo,hi,n (got '{s}')"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    LogRange::new(lo, hi, n).map_err(|e| Failure::usage(format!("{flag}: {e}")))
}

pub fn design(a: &DesignArgs) -> CmdResult {
    let started = Utc::now();
    let kv = match &a.config {
        Some(path) => KeyValues::read(path)?,
        None => KeyValues::default(),
    };
    let cfg = physical_config(&kv)?;
    let echo_cfg = serde_json::to_value(&cfg).map_err(|e| Failure::usage(e.to_string()))?;
    if a.sweep {
        let tau = parse_range("--tau-range", &a.tau_range)?;
        let temp = parse_range("--temp-range", &a.temp_range)?;
        let grid = sweep_grid(tau, temp, &cfg)?;
        let echo = json!({ "config": echo_cfg, "tau_range": tau, "temp_range": temp });
        emit(a.out.as_ref(), export::grid_csv(&grid), "design --sweep", echo, started)
    } else {
        let derived = derive(&cfg)?;
        for w in &derived.warnings {
            log::warn!("{w}");
        }
        let atoms = atoms_required(derived.delta_v_boosted, 5.0)?;
        let report = PointReport {
            run_time_days: run_time_days(atoms, ATOMS_PER_RUN, MINUTES_PER_RUN)?,
            atoms_required_5sigma: atoms,
            derived,
        };
        let text = export::to_json(&report)?;
        if a.out.is_some() {
            emit(a.out.as_ref(), text.clone(), "design --point", json!({ "config": echo_cfg }), started)?;
        }
        print!("{text}");
        Ok(())
    }
}
