//! Hypothesis checks and uniform bounds on the renewal measure.
//!
//! Stochastic domination certificates compare tail functions state by state.
//! The bounds are
//!
//! ```text
//! theorem2:    U(x, x+h] <= (A + h) / (eps * delta)
//! corollary:   U(x, x+h] <= (A + h) * A / eps^2        (delta >= eps / A)
//! nonnegative: U(x, x+h] <= (A + h) / (gamma^2 * A)
//! ```
//!
//! with `eps = inf_x E min(xi(x), A)`, `delta = inf_x P{X_n > x for all n >= 1 | X_0 = x}`
//! and `gamma = inf_x P{xi(x) > A}`.

use serde::Serialize;

use crate::chain::{ChainName, MarkovKernel};
use crate::error::{Error, Result};
use crate::exact::RenewalMeasure;
use crate::law::JumpLaw;
use crate::monte_carlo::{estimate_stay_above, McSettings};

/// A certificate is valid when no tail comparison is violated by more than this.
pub const DOMINATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DominationKind {
    /// `|xi(x)| <=_st eta`.
    Majorant,
    /// `xi(x) >=_st zeta`.
    Minorant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationCertificate {
    pub kind: DominationKind,
    pub candidate: JumpLaw,
    pub checked_states: Vec<f64>,
    pub worst_violation: f64,
    pub worst_state: Option<f64>,
    pub worst_threshold: Option<f64>,
    pub mean: f64,
    pub valid: bool,
}

fn violation(subject: &JumpLaw, candidate: &JumpLaw, kind: DominationKind) -> (f64, Option<f64>) {
    let mut thresholds = subject.thresholds();
    thresholds.extend(candidate.thresholds());
    let mut worst = (0.0, None);
    for t in thresholds {
        let v = match kind {
            DominationKind::Majorant => subject.prob_gt(t) - candidate.prob_gt(t),
            DominationKind::Minorant => candidate.prob_gt(t) - subject.prob_gt(t),
        };
        if v > worst.0 {
            worst = (v, Some(t));
        }
    }
    worst
}

fn subject_law(law: JumpLaw, kind: DominationKind) -> JumpLaw {
    match kind {
        DominationKind::Majorant => law.abs(),
        DominationKind::Minorant => law,
    }
}

/// Checks the domination on `grid` plus the kernel's representative states.
pub fn check_stochastic_domination(
    kernel: &MarkovKernel,
    candidate: &JumpLaw,
    kind: DominationKind,
    grid: &[f64],
) -> Result<DominationCertificate> {
    let mean = candidate.mean()?;
    let mut states: Vec<f64> = grid.to_vec();
    states.extend(kernel.representative_states());
    states.sort_by(f64::total_cmp);
    states.dedup();
    let mut cert = DominationCertificate {
        kind,
        candidate: candidate.clone(),
        checked_states: Vec::with_capacity(states.len()),
        worst_violation: 0.0,
        worst_state: None,
        worst_threshold: None,
        mean,
        valid: true,
    };
    for x in states {
        let subject = subject_law(kernel.jump_at(x)?, kind);
        let (v, t) = violation(&subject, candidate, kind);
        if v > cert.worst_violation {
            cert.worst_violation = v;
            cert.worst_state = Some(x);
            cert.worst_threshold = t;
        }
        cert.checked_states.push(x);
    }
    cert.valid = cert.worst_violation <= DOMINATION_TOL;
    Ok(cert)
}

/// Domination violation of the limit law itself.
pub fn limit_violation(kernel: &MarkovKernel, candidate: &JumpLaw, kind: DominationKind) -> f64 {
    violation(&subject_law(kernel.limit_law().clone(), kind), candidate, kind).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub a: f64,
    pub epsilon: f64,
    /// State attaining the infimum; `None` when it is approached at infinity.
    pub argmin: Option<f64>,
}

/// `inf_x E min(xi(x), A)` over the grid, the representative states and the
/// limit law (the value approached as `x -> inf`). May be nonpositive.
pub fn theorem2_epsilon(kernel: &MarkovKernel, a: f64, grid: &[f64]) -> Result<EpsilonReport> {
    if a.is_nan() || a <= 0.0 {
        return Err(Error::param("A", a, "must be positive"));
    }
    let mut best = EpsilonReport {
        a,
        epsilon: kernel.limit_law().truncated_mean(a)?,
        argmin: None,
    };
    for &x in grid.iter().chain(&kernel.representative_states()) {
        let e = kernel.jump_at(x)?.truncated_mean(a)?;
        if e < best.epsilon {
            best.epsilon = e;
            best.argmin = Some(x);
        }
    }
    Ok(best)
}

/// `inf_x P{xi(x) > A}` for chains whose jumps are nonnegative.
pub fn gamma_nonnegative(kernel: &MarkovKernel, a: f64, grid: &[f64]) -> Result<f64> {
    if a.is_nan() || a <= 0.0 {
        return Err(Error::param("A", a, "must be positive"));
    }
    let mut gamma = kernel.limit_law().prob_gt(a);
    for &x in grid.iter().chain(&kernel.representative_states()) {
        let law = kernel.jump_at(x)?;
        if law.support().0 < 0.0 {
            return Err(Error::param("state", x, "jump law has negative support"));
        }
        gamma = gamma.min(law.prob_gt(a));
    }
    Ok(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    Analytic,
    GridMonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem2Params {
    pub a: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub source: ParamSource,
}

impl Theorem2Params {
    pub fn new(a: f64, epsilon: f64, delta: Option<f64>) -> Self {
        Theorem2Params {
            a,
            epsilon,
            delta,
            gamma: None,
            source: ParamSource::Analytic,
        }
    }

    pub fn nonnegative(a: f64, gamma: f64) -> Self {
        Theorem2Params {
            a,
            epsilon: gamma * a,
            delta: None,
            gamma: Some(gamma),
            source: ParamSource::Analytic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMechanism {
    Theorem2,
    Corollary,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub h: f64,
    pub bound: f64,
    pub mechanism: BoundMechanism,
    pub inputs: Theorem2Params,
    /// `delta` entering the bound; the ladder value `eps / A` for the corollary.
    pub delta_used: Option<f64>,
}

fn positive(name: &str, v: Option<f64>) -> Result<f64> {
    match v {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::param(name, v, "must be positive")),
        None => Err(Error::MissingParameter(name.to_string())),
    }
}

pub fn theorem2_bound(params: &Theorem2Params, h: f64, mechanism: BoundMechanism) -> Result<BoundReport> {
    let a = positive("A", Some(params.a))?;
    let h = positive("h", Some(h))?;
    let (bound, delta_used) = match mechanism {
        BoundMechanism::Theorem2 => {
            let eps = positive("epsilon", Some(params.epsilon))?;
            let delta = positive("delta", params.delta)?;
            if delta > 1.0 {
                return Err(Error::param("delta", delta, "must not exceed 1"));
            }
            ((a + h) / (eps * delta), Some(delta))
        }
        BoundMechanism::Corollary => {
            let eps = positive("epsilon", Some(params.epsilon))?;
            let ladder = eps / a;
            if let Some(delta) = params.delta {
                if delta < ladder - DOMINATION_TOL {
                    return Err(Error::LadderBoundViolated { delta, ladder });
                }
            }
            ((a + h) * a / (eps * eps), Some(ladder))
        }
        BoundMechanism::NonNegative => {
            let gamma = positive("gamma", params.gamma)?;
            if gamma > 1.0 {
                return Err(Error::param("gamma", gamma, "must not exceed 1"));
            }
            ((a + h) / (gamma * gamma * a), None)
        }
    };
    Ok(BoundReport {
        h,
        bound,
        mechanism,
        inputs: *params,
        delta_used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationRow {
    pub x: i64,
    pub h: i64,
    pub mass: f64,
    pub bracket: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationTable {
    pub rows: Vec<VerificationRow>,
    pub all_pass: bool,
}

impl VerificationTable {
    pub fn failures(&self) -> impl Iterator<Item = &VerificationRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Checks `U(x, x+h] + h * bracket <= bound` for each window `(x, x+h]`.
pub fn verify_bound(report: &BoundReport, measure: &RenewalMeasure, windows: &[i64]) -> Result<VerificationTable> {
    if report.h.fract() != 0.0 || report.h < 1.0 {
        return Err(Error::param("h", report.h, "lattice windows need a positive integer h"));
    }
    let h = report.h as i64;
    let rows = windows
        .iter()
        .map(|&x| {
            if !(measure.is_probed(x + 1) && measure.is_probed(x + h)) {
                return Err(Error::WindowOutsideRegion {
                    lo: x + 1,
                    hi: x + h,
                    region_lo: measure.probe.0,
                    region_hi: measure.probe.1,
                });
            }
            let mass = measure.window_mass(x, h).expect("probed states are in the window");
            let bracket = h as f64 * measure.bracket_width;
            Ok(VerificationRow {
                x,
                h,
                mass,
                bracket,
                bound: report.bound,
                pass: mass + bracket <= report.bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(VerificationTable { rows, all_pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitBoundSource {
    Corollary,
    Analytic,
}

/// Certified `sup_y Q(y, B)` over windows `B` of `h` lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisitBound {
    pub value: f64,
    pub source: VisitBoundSource,
    pub a: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Best corollary bound over `A`, when the kernel declares a minorant with
/// positive mean; otherwise a per-chain analytic bound where one is known.
pub fn uniform_visit_bound(kernel: &MarkovKernel, h: f64) -> Result<VisitBound> {
    if let Some(zeta) = kernel.declared_minorant() {
        if zeta.mean()? > 0.0 {
            let (_, hi) = zeta.support();
            let top = if hi.is_finite() { hi.max(1.0) } else { 1e3 };
            let mut candidates: Vec<f64> = (1..=400).map(|i| top * i as f64 / 400.0).collect();
            candidates.extend(zeta.thresholds().into_iter().filter(|&t| t > 0.0));
            let mut best: Option<VisitBound> = None;
            for a in candidates {
                let eps = zeta.truncated_mean(a)?;
                if eps <= 0.0 {
                    continue;
                }
                let value = (a + h) * a / (eps * eps);
                if best.is_none_or(|b| value < b.value) {
                    best = Some(VisitBound {
                        value,
                        source: VisitBoundSource::Corollary,
                        a: Some(a),
                        epsilon: Some(eps),
                    });
                }
            }
            if let Some(b) = best {
                return Ok(b);
            }
        }
    }
    match kernel.name() {
        // Away from the origin each state is left for good with probability
        // at least (3/4)(2/3) = 1/2, at the origin with probability 2/3, so a
        // single state collects at most 2 expected visits.
        ChainName::ThreeBranch => Ok(VisitBound {
            value: 2.0 * h.ceil(),
            source: VisitBoundSource::Analytic,
            a: None,
            epsilon: None,
        }),
        _ => Err(Error::Spec(format!(
            "no certified visit bound for `{}`; supply q_sup explicitly",
            kernel.name()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaEstimate {
    /// Lower 95% confidence value of the smallest stay-above estimate.
    pub lower: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub argmin: f64,
}

/// Monte Carlo `delta` over a state grid at finite horizon.
pub fn delta_estimate(kernel: &MarkovKernel, grid: &[f64], settings: &McSettings) -> Result<DeltaEstimate> {
    let mut best: Option<DeltaEstimate> = None;
    for &x in grid {
        let e = estimate_stay_above(kernel, x, settings)?;
        if best.is_none_or(|b| e.value < b.estimate) {
            best = Some(DeltaEstimate {
                lower: (e.value - 1.96 * e.stderr).max(0.0),
                estimate: e.value,
                stderr: e.stderr,
                argmin: x,
            });
        }
    }
    best.ok_or_else(|| Error::Spec("empty state grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::LatticePmf;
    use approx::assert_abs_diff_eq;

    fn grid() -> Vec<f64> {
        (-20..=20).map(f64::from).collect()
    }

    #[test]
    fn three_branch_unit_majorant() {
        let k = MarkovKernel::three_branch(0.4).unwrap();
        let c = check_stochastic_domination(&k, &LatticePmf::point(1).into(), DominationKind::Majorant, &grid()).unwrap();
        assert!(c.valid);
        assert_eq!(c.worst_violation, 0.0);
        assert_eq!(c.mean, 1.0);
    }

    #[test]
    fn counterexample_constant_majorant_fails() {
        let k = MarkovKernel::counterexample();
        let grid: Vec<f64> = (0..64).map(f64::from).collect();
        let c = check_stochastic_domination(&k, &LatticePmf::point(1).into(), DominationKind::Majorant, &grid).unwrap();
        assert!(!c.valid);
        assert!(c.worst_violation > 0.1);
    }

    #[test]
    fn infinite_mean_candidate_rejected() {
        let k = MarkovKernel::three_branch(0.4).unwrap();
        let eta = crate::law::ContinuousLaw::pareto(1.0, 0.8).unwrap();
        assert_eq!(
            check_stochastic_domination(&k, &eta.into(), DominationKind::Majorant, &grid()).unwrap_err(),
            Error::InfiniteMean
        );
    }

    #[test]
    fn epsilon_values() {
        let walk = MarkovKernel::random_walk(LatticePmf::up_down(0.75).unwrap()).unwrap();
        assert_abs_diff_eq!(theorem2_epsilon(&walk, 1.0, &grid()).unwrap().epsilon, 0.5, epsilon = 1e-15);
        let tb = MarkovKernel::three_branch(0.5).unwrap();
        let e = theorem2_epsilon(&tb, 1.0, &grid()).unwrap();
        assert_abs_diff_eq!(e.epsilon, -0.5, epsilon = 1e-15);
        assert!(e.argmin.unwrap() < 0.0);
        assert!(theorem2_epsilon(&tb, 0.0, &grid()).is_err());
    }

    #[test]
    fn bound_formulas() {
        let t2 = theorem2_bound(&Theorem2Params::new(1.0, 0.5, Some(0.5)), 1.0, BoundMechanism::Theorem2).unwrap();
        assert_eq!(t2.bound, 8.0);
        let cor = theorem2_bound(&Theorem2Params::new(1.0, 0.5, None), 1.0, BoundMechanism::Corollary).unwrap();
        assert_eq!(cor.bound, 8.0);
        assert_eq!(cor.delta_used, Some(0.5));
        let nn = theorem2_bound(&Theorem2Params::nonnegative(1.0, 0.5), 1.0, BoundMechanism::NonNegative).unwrap();
        assert_eq!(nn.bound, 8.0);
    }

    #[test]
    fn bound_input_errors() {
        let bad = Theorem2Params::new(1.0, -0.5, Some(0.5));
        assert!(theorem2_bound(&bad, 1.0, BoundMechanism::Theorem2).is_err());
        let no_delta = Theorem2Params::new(1.0, 0.5, None);
        assert!(matches!(
            theorem2_bound(&no_delta, 1.0, BoundMechanism::Theorem2),
            Err(Error::MissingParameter(_))
        ));
        let inconsistent = Theorem2Params::new(1.0, 0.5, Some(0.2));
        assert!(matches!(
            theorem2_bound(&inconsistent, 1.0, BoundMechanism::Corollary),
            Err(Error::LadderBoundViolated { .. })
        ));
        assert!(theorem2_bound(&Theorem2Params::new(1.0, 0.5, None), 1.0, BoundMechanism::NonNegative).is_err());
    }

    #[test]
    fn counterexample_gamma() {
        let k = MarkovKernel::counterexample();
        // P{xi(k) > A} for A just below 1 is exactly 1/2 at every state.
        let g = gamma_nonnegative(&k, 0.5, &[]).unwrap();
        assert_abs_diff_eq!(g, 0.5, epsilon = 1e-15);
        let tb = MarkovKernel::three_branch(0.5).unwrap();
        assert!(gamma_nonnegative(&tb, 0.5, &[]).is_err());
    }

    #[test]
    fn visit_bounds() {
        let walk = MarkovKernel::random_walk(LatticePmf::up_down(0.75).unwrap()).unwrap();
        let b = uniform_visit_bound(&walk, 1.0).unwrap();
        assert_abs_diff_eq!(b.value, 8.0, epsilon = 1e-12);
        assert_eq!(b.source, VisitBoundSource::Corollary);
        let tb = uniform_visit_bound(&MarkovKernel::three_branch(0.5).unwrap(), 1.0).unwrap();
        assert_eq!((tb.value, tb.source), (2.0, VisitBoundSource::Analytic));
        let custom = MarkovKernel::custom([], LatticePmf::up_down(0.75).unwrap()).unwrap();
        assert!(uniform_visit_bound(&custom, 1.0).is_err());
    }
}
