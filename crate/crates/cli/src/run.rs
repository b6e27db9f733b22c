use serde::Serialize;

use renewal_core::chain::ChainName;
use renewal_core::conditions::{
    check_stochastic_domination, delta_estimate, gamma_nonnegative, theorem2_bound, theorem2_epsilon,
    uniform_visit_bound, verify_bound, BoundMechanism, BoundReport, DeltaEstimate, DominationCertificate,
    DominationKind, EpsilonReport, ParamSource, Theorem2Params, VerificationTable, VisitBound,
};
use renewal_core::exact::{
    green_function, p0_exact, renewal_measure, P0Bracket, RenewalMeasure, RenewalSettings, ReturnFactors,
    StateWindow,
};
use renewal_core::limit::{counterexample_growth, density_rows, limit_report, CounterexampleReport, LimitReport, MeasureSource};
use renewal_core::monte_carlo::{estimate_p0, estimate_renewal, McSettings, P0Estimate, Target};
use renewal_core::{build_chain, Error, JumpLaw, LatticePmf, MarkovKernel};

use crate::config::{Command, Format, RunConfig};

/// States added on each side of the probed range by default.
pub const DEFAULT_MARGIN: i64 = 60;
/// Generic counterexample masses must stay inside this band.
pub const GENERIC_BAND: (f64, f64) = (1.5, 2.5);

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Verification(String),
    Accuracy(String),
    Config(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verification(_) => 2,
            Failure::Accuracy(_) => 3,
            Failure::Config(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Verification(_) => "verification_failed",
            Failure::Accuracy(_) => "accuracy_not_achieved",
            Failure::Config(_) => "config_error",
            Failure::Io(_) => "io_error",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Accuracy(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InsufficientAccuracy { .. } => Failure::Accuracy(msg),
            Error::HorizonCheck(_) | Error::Unstable(_) | Error::LadderBoundViolated { .. } => {
                Failure::Verification(msg)
            }
            _ => Failure::Config(msg),
        }
    }
}

/// Result of a command: the rendered artifact and, when a check failed,
/// the failure to report after writing it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifact: String,
    pub failure: Option<Failure>,
    pub warnings: Vec<String>,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Failure::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Io(e.to_string()))
}

fn render<T: Serialize, R: Serialize>(format: Format, report: &T, rows: impl IntoIterator<Item = R>) -> Result<String, Failure> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(report),
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome, Failure> {
    config.validate().map_err(Failure::Config)?;
    match config.command {
        Command::RenewalExact => renewal_exact(config, false),
        Command::Green => renewal_exact(config, true),
        Command::RenewalMc => renewal_mc(config),
        Command::CheckConditions => check_conditions(config),
        Command::VerifyLimit => verify_limit(config),
        Command::Counterexample => counterexample(config),
    }
}

fn chain(config: &RunConfig) -> Result<(MarkovKernel, LatticePmf), Failure> {
    let spec = config
        .chain
        .as_ref()
        .ok_or_else(|| Failure::Config(format!("`{}` needs a chain", config.command.as_str())))?;
    Ok((build_chain(spec)?, spec.initial.clone()))
}

fn h_int(config: &RunConfig) -> Result<i64, Failure> {
    let h = config.analysis.h;
    if h.fract() != 0.0 {
        return Err(Failure::Config(format!("lattice windows need an integer h, got {h}")));
    }
    Ok(h as i64)
}

/// States whose masses are reported and certified.
fn probe(config: &RunConfig) -> Result<(i64, i64), Failure> {
    Ok((config.analysis.x_lo + 1, config.analysis.x_hi + h_int(config)?))
}

/// Explicit window, or the probed range and `mu0` padded by the default margin.
fn window(config: &RunConfig, kernel: &MarkovKernel, mu0: &LatticePmf, probe: (i64, i64)) -> Result<StateWindow, Failure> {
    let lo = config.engine.window_lo.unwrap_or_else(|| {
        let lo = probe.0.min(mu0.atoms()[0].0) - DEFAULT_MARGIN;
        kernel.domain_lower().map_or(lo, |d| lo.max(d))
    });
    let hi = config
        .engine
        .window_hi
        .unwrap_or_else(|| probe.1.max(mu0.atoms().last().expect("nonempty").0) + DEFAULT_MARGIN);
    Ok(StateWindow::new(lo, hi)?)
}

fn q_sup(config: &RunConfig, kernel: &MarkovKernel) -> Result<f64, Failure> {
    match config.engine.q_sup {
        Some(q) => Ok(q),
        None => Ok(uniform_visit_bound(kernel, 1.0)?.value),
    }
}

fn settings(config: &RunConfig, kernel: &MarkovKernel, probe: (i64, i64)) -> Result<RenewalSettings, Failure> {
    let mut s = RenewalSettings::new(q_sup(config, kernel)?)
        .n_max(config.engine.n_max)
        .stop_tol(config.engine.tol)
        .probe(probe.0, probe.1);
    if let Some(acc) = config.engine.accuracy {
        s = s.accuracy(acc);
    }
    Ok(s)
}

fn exact_measure(config: &RunConfig, kernel: &MarkovKernel, mu0: &LatticePmf) -> Result<(RenewalMeasure, StateWindow, RenewalSettings), Failure> {
    let probe = probe(config)?;
    let window = window(config, kernel, mu0, probe)?;
    let settings = settings(config, kernel, probe)?;
    Ok((renewal_measure(kernel, mu0, window, &settings)?, window, settings))
}

#[derive(Serialize)]
struct MeasureReport<'a> {
    command: &'a str,
    chain: ChainName,
    start: Option<i64>,
    window: (i64, i64),
    probe: (i64, i64),
    bracket_width: f64,
    iterations_used: usize,
    q_sup_bound: f64,
    residual_mass: f64,
    absorbed_left: f64,
    absorbed_right: f64,
    return_factors: ReturnFactors,
    rows: Vec<renewal_core::exact::RenewalRow>,
}

fn renewal_exact(config: &RunConfig, green: bool) -> Result<Outcome, Failure> {
    let (kernel, mut mu0) = chain(config)?;
    let start = green.then_some(config.analysis.start);
    if let Some(s) = start {
        mu0 = LatticePmf::point(s);
    }
    let probe = probe(config)?;
    let window = window(config, &kernel, &mu0, probe)?;
    let settings = settings(config, &kernel, probe)?;
    let m = match start {
        Some(s) => green_function(&kernel, s, window, &settings)?.measure,
        None => renewal_measure(&kernel, &mu0, window, &settings)?,
    };
    let rows: Vec<_> = m.rows().filter(|r| m.is_probed(r.state)).collect();
    let report = MeasureReport {
        command: config.command.as_str(),
        chain: kernel.name(),
        start,
        window: (m.window.lo, m.window.hi),
        probe: m.probe,
        bracket_width: m.bracket_width,
        iterations_used: m.iterations_used,
        q_sup_bound: m.q_sup_bound,
        residual_mass: m.residual_mass,
        absorbed_left: m.window.absorbed_left,
        absorbed_right: m.window.absorbed_right,
        return_factors: m.return_factors,
        rows: rows.clone(),
    };
    Ok(Outcome {
        artifact: render(config.output.format, &report, rows)?,
        failure: None,
        warnings: Vec::new(),
    })
}

#[derive(Serialize)]
struct McRow {
    x: f64,
    h: f64,
    estimate: f64,
    stderr: f64,
    n_traj: usize,
    horizon: usize,
    seed: u64,
}

#[derive(Serialize)]
struct McReport<'a> {
    chain: ChainName,
    passed_fraction: f64,
    warning: Option<&'a str>,
    rows: &'a [McRow],
}

fn mc_settings(config: &RunConfig) -> McSettings {
    let e = &config.engine;
    McSettings::new(e.horizon, e.n_traj, e.seed).strict(e.strict)
}

fn mc_targets(config: &RunConfig) -> Vec<Target> {
    let a = &config.analysis;
    (a.x_lo..=a.x_hi).map(|x| Target::new(x as f64, a.h)).collect()
}

fn renewal_mc(config: &RunConfig) -> Result<Outcome, Failure> {
    let (kernel, mu0) = chain(config)?;
    let run = estimate_renewal(&kernel, &mu0, &mc_targets(config), &mc_settings(config))?;
    let rows: Vec<McRow> = run
        .estimates
        .iter()
        .map(|t| McRow {
            x: t.x,
            h: t.h,
            estimate: t.estimate.value,
            stderr: t.estimate.stderr,
            n_traj: t.estimate.n_traj,
            horizon: t.estimate.horizon,
            seed: t.estimate.master_seed,
        })
        .collect();
    let report = McReport {
        chain: kernel.name(),
        passed_fraction: run.passed_fraction,
        warning: run.warning.as_deref(),
        rows: &rows,
    };
    Ok(Outcome {
        artifact: render(config.output.format, &report, &rows)?,
        failure: None,
        warnings: run.warning.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum DeltaSource {
    Ladder,
    MonteCarlo,
}

#[derive(Serialize)]
struct DeltaReport {
    value: f64,
    source: DeltaSource,
    estimate: Option<DeltaEstimate>,
}

#[derive(Serialize)]
struct ConditionsReport {
    chain: ChainName,
    limit_mean: f64,
    majorant: Option<DominationCertificate>,
    minorant: Option<DominationCertificate>,
    epsilon: EpsilonReport,
    delta: Option<DeltaReport>,
    gamma: Option<f64>,
    bounds: Vec<BoundReport>,
    visit_bound: Option<VisitBound>,
    verification: Option<VerificationTable>,
    notes: Vec<String>,
    pass: bool,
}

fn condition_grid(kernel: &MarkovKernel) -> Vec<f64> {
    let lo = kernel.domain_lower().unwrap_or(-20) as f64;
    (0..=40).map(|i| lo + i as f64).collect()
}

fn check_conditions(config: &RunConfig) -> Result<Outcome, Failure> {
    let (kernel, mu0) = chain(config)?;
    let a = config.analysis.a;
    let h = config.analysis.h;
    let grid = condition_grid(&kernel);
    let mut notes = Vec::new();

    let majorant_law: Option<JumpLaw> = match config.analysis.majorant_const {
        Some(c) if c.fract() == 0.0 => Some(LatticePmf::point(c as i64).into()),
        Some(c) => return Err(Failure::Config(format!("majorant constant must be an integer, got {c}"))),
        None => kernel.declared_majorant().cloned(),
    };
    let majorant = majorant_law
        .map(|eta| check_stochastic_domination(&kernel, &eta, DominationKind::Majorant, &grid))
        .transpose()?;
    let minorant = kernel
        .declared_minorant()
        .map(|zeta| check_stochastic_domination(&kernel, zeta, DominationKind::Minorant, &grid))
        .transpose()?;
    let epsilon = theorem2_epsilon(&kernel, a, &grid)?;

    let ladder = minorant.as_ref().is_some_and(|m| m.valid && m.mean > 0.0) && epsilon.epsilon > 0.0;
    let delta = if ladder {
        Some(DeltaReport {
            value: epsilon.epsilon / a,
            source: DeltaSource::Ladder,
            estimate: None,
        })
    } else if epsilon.epsilon > 0.0 {
        let est = delta_estimate(&kernel, &kernel.representative_states(), &mc_settings(config))?;
        Some(DeltaReport {
            value: est.lower,
            source: DeltaSource::MonteCarlo,
            estimate: Some(est),
        })
    } else {
        notes.push(format!("epsilon = {} is not positive at A = {a}", epsilon.epsilon));
        None
    };
    let gamma = gamma_nonnegative(&kernel, a, &grid).ok().filter(|&g| g > 0.0);

    let mut bounds = Vec::new();
    if let Some(d) = &delta {
        let mut params = Theorem2Params::new(a, epsilon.epsilon, Some(d.value));
        if matches!(d.source, DeltaSource::MonteCarlo) {
            params.source = ParamSource::GridMonteCarlo;
        }
        if d.value > 0.0 {
            bounds.push(theorem2_bound(&params, h, BoundMechanism::Theorem2)?);
        }
        if ladder {
            bounds.push(theorem2_bound(&params, h, BoundMechanism::Corollary)?);
        }
    }
    if let Some(g) = gamma {
        bounds.push(theorem2_bound(&Theorem2Params::nonnegative(a, g), h, BoundMechanism::NonNegative)?);
    }

    let visit_bound = uniform_visit_bound(&kernel, 1.0).ok();
    let bound = config
        .analysis
        .bound
        .or_else(|| bounds.iter().map(|b| b.bound).reduce(f64::min));
    let verification = match bound {
        Some(bound) if kernel.is_lattice() && (config.engine.q_sup.is_some() || visit_bound.is_some()) => {
            let (measure, _, _) = exact_measure(config, &kernel, &mu0)?;
            let report = BoundReport {
                bound,
                ..bounds.first().copied().unwrap_or(BoundReport {
                    h,
                    bound,
                    mechanism: BoundMechanism::Theorem2,
                    inputs: Theorem2Params::new(a, epsilon.epsilon, None),
                    delta_used: None,
                })
            };
            let windows: Vec<i64> = (config.analysis.x_lo..=config.analysis.x_hi).collect();
            Some(verify_bound(&report, &measure, &windows)?)
        }
        Some(_) => {
            notes.push("bound not verified: needs a lattice chain with a visit bound".into());
            None
        }
        None => None,
    };

    let mut failures = Vec::new();
    if let Some(c) = &majorant {
        if !c.valid {
            failures.push(format!(
                "majorant certificate invalid: violation {} at state {:?}",
                c.worst_violation, c.worst_state
            ));
        }
    }
    if let Some(c) = &minorant {
        if !c.valid {
            failures.push(format!("minorant certificate invalid: violation {}", c.worst_violation));
        }
    }
    if let Some(t) = &verification {
        if let Some(r) = t.failures().next() {
            failures.push(format!("bound {} exceeded on window ({}, {}]", r.bound, r.x, r.x + r.h));
        }
    }
    let pass = failures.is_empty();
    notes.extend(failures.iter().cloned());
    let report = ConditionsReport {
        chain: kernel.name(),
        limit_mean: kernel.limit_mean(),
        majorant,
        minorant,
        epsilon,
        delta,
        gamma,
        bounds,
        visit_bound,
        verification,
        notes,
        pass,
    };
    let rows = report.verification.as_ref().map(|t| t.rows.clone()).unwrap_or_default();
    // The certificate verdict has no tabular form, so CSV falls back to the verification rows.
    Ok(Outcome {
        artifact: render(config.output.format, &report, rows)?,
        failure: (!pass).then(|| Failure::Verification(failures.join("; "))),
        warnings: Vec::new(),
    })
}

#[derive(Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
enum P0Evidence {
    Exact { bracket: P0Bracket },
    MonteCarlo { estimate: P0Estimate },
}

#[derive(Serialize)]
struct LimitOutput {
    chain: ChainName,
    report: LimitReport,
    p0: P0Evidence,
    tolerance: f64,
    pass: bool,
}

fn verify_limit(config: &RunConfig) -> Result<Outcome, Failure> {
    let (kernel, mu0) = chain(config)?;
    let a = &config.analysis;
    let range = (a.x_lo, a.x_hi);
    let mean = kernel.limit_mean();
    let mut warnings = Vec::new();
    let (report, p0, rows) = if kernel.is_lattice() {
        let (measure, window, settings) = exact_measure(config, &kernel, &mu0)?;
        let n_at = (4 * window.len()).min(config.engine.n_max);
        let bracket = p0_exact(&kernel, &mu0, window, n_at, &settings)?;
        let p0 = 0.5 * (bracket.lower + bracket.upper);
        let source = MeasureSource::Exact(&measure);
        let report = limit_report(source, a.h, p0, mean, range)?;
        let rows = density_rows(source, a.h, range, report.target)?;
        (report, P0Evidence::Exact { bracket }, rows)
    } else {
        let settings = mc_settings(config);
        let run = estimate_renewal(&kernel, &mu0, &mc_targets(config), &settings)?;
        warnings.extend(run.warning.clone());
        let est = estimate_p0(&kernel, &mu0, 0.0, config.engine.horizon, &settings)?;
        if est.unstable {
            warnings.push("p0 estimate moved between half and full horizon".into());
        }
        let source = MeasureSource::MonteCarlo(&run.estimates);
        let report = limit_report(source, a.h, est.value, mean, range)?;
        let rows = density_rows(source, a.h, range, report.target)?;
        (report, P0Evidence::MonteCarlo { estimate: est }, rows)
    };
    let pass = report.passes(a.limit_tol);
    let out = LimitOutput {
        chain: kernel.name(),
        report,
        p0,
        tolerance: a.limit_tol,
        pass,
    };
    Ok(Outcome {
        artifact: render(config.output.format, &out, rows)?,
        failure: (!pass).then(|| {
            Failure::Verification(format!(
                "relative error {} exceeds {} (alpha {}, target {})",
                report.relative_error, a.limit_tol, report.alpha_estimate, report.target
            ))
        }),
        warnings,
    })
}

#[derive(Serialize)]
struct SpikeRow {
    n: u32,
    spike: f64,
    reference: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct CounterexampleOutput<'a> {
    report: &'a CounterexampleReport,
    generic_band: (f64, f64),
    pass: bool,
}

fn counterexample(config: &RunConfig) -> Result<Outcome, Failure> {
    let a = &config.analysis;
    let report = counterexample_growth(a.n_lo, a.n_hi)?;
    let generic_ok = report
        .generic_masses
        .iter()
        .all(|&(_, m)| (GENERIC_BAND.0..=GENERIC_BAND.1).contains(&m));
    let pass = generic_ok && report.spikes_exceed_generic;
    let rows = report.rows.iter().map(|r| SpikeRow {
        n: r.n,
        spike: r.spike,
        reference: r.reference,
        ratio: r.ratio,
    });
    let out = CounterexampleOutput {
        report: &report,
        generic_band: GENERIC_BAND,
        pass,
    };
    Ok(Outcome {
        artifact: render(config.output.format, &out, rows)?,
        failure: (!pass).then(|| Failure::Verification("boundary masses do not separate from generic masses".into())),
        warnings: Vec::new(),
    })
}
