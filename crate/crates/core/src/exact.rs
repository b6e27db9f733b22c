//! Exact renewal measures for lattice chains by dense iteration of
//! `mu_n = mu_{n-1} P` on a truncated window `[lo, hi]`.
//!
//! Mass leaving the window is absorbed on the side it left and never revived.
//! The visits it (and the interior mass left at the stopping time) could
//! still pay to the probed states are bounded by
//!
//! ```text
//! bracket = (absorbed_left * r_left + absorbed_right * r_right + interior) * q_sup
//! ```
//!
//! where `q_sup >= sup_y Q(y, {k})` over probed `k` and `r_left`, `r_right`
//! bound the probability that absorbed mass ever re-enters the probed range.
//! With [`ReturnPolicy::Conservative`] both factors are 1; with
//! [`ReturnPolicy::Certified`] they come from exponential supermartingales
//! `exp(-theta X_n)` built from the jump laws beyond the window edges.

use serde::Serialize;

use crate::chain::MarkovKernel;
use crate::error::{Error, Result};
use crate::law::LatticePmf;

/// Conservation tolerance checked by the test-suite.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateWindow {
    pub lo: i64,
    pub hi: i64,
    pub absorbed_left: f64,
    pub absorbed_right: f64,
}

impl StateWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(StateWindow {
            lo,
            hi,
            absorbed_left: 0.0,
            absorbed_right: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        (self.lo..=self.hi).contains(&k)
    }

    pub fn absorbed(&self) -> f64 {
        self.absorbed_left + self.absorbed_right
    }
}

/// Distribution `mu_n` restricted to the window.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector {
    pub lo: i64,
    pub masses: Vec<f64>,
    pub step: usize,
}

impl MeasureVector {
    pub fn mass_at(&self, k: i64) -> f64 {
        usize::try_from(k - self.lo)
            .ok()
            .and_then(|i| self.masses.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn interior_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass on states `k` with `k > level`.
    pub fn mass_above(&self, level: i64) -> f64 {
        self.iter().filter(|&(k, _)| k > level).map(|(_, m)| m).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.lo + i as i64, m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ReturnPolicy {
    /// Absorbed mass is assumed to return with probability one.
    Conservative,
    /// Return probabilities bounded by exponential supermartingales.
    #[default]
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnFactors {
    pub left: f64,
    pub right: f64,
}

impl ReturnFactors {
    pub const ONE: ReturnFactors = ReturnFactors {
        left: 1.0,
        right: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalSettings {
    pub n_max: usize,
    /// Stop once `interior mass * q_sup_bound < stop_tol`.
    pub stop_tol: f64,
    /// Uniform bound on `Q(y, {k})` for probed `k`.
    pub q_sup_bound: f64,
    /// Fail if the final bracket is wider than this.
    pub accuracy: Option<f64>,
    /// States the bracket is certified for; defaults to the whole window.
    pub probe: Option<(i64, i64)>,
    pub returns: ReturnPolicy,
}

impl RenewalSettings {
    pub fn new(q_sup_bound: f64) -> Self {
        RenewalSettings {
            n_max: 1_000_000,
            stop_tol: 1e-8,
            q_sup_bound,
            accuracy: None,
            probe: None,
            returns: ReturnPolicy::Certified,
        }
    }

    pub fn n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn accuracy(mut self, accuracy: f64) -> Self {
        self.accuracy = Some(accuracy);
        self
    }

    pub fn probe(mut self, lo: i64, hi: i64) -> Self {
        self.probe = Some((lo, hi));
        self
    }

    pub fn returns(mut self, policy: ReturnPolicy) -> Self {
        self.returns = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.q_sup_bound > 0.0 && self.q_sup_bound.is_finite()) {
            return Err(Error::param("q_sup_bound", self.q_sup_bound, "must be positive and finite"));
        }
        if self.stop_tol.is_nan() || self.stop_tol <= 0.0 {
            return Err(Error::param("stop_tol", self.stop_tol, "must be positive"));
        }
        Ok(())
    }
}

/// Transition matrix restricted to the window, rows in compressed form.
#[derive(Debug)]
struct Transitions {
    starts: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
    to_left: Vec<f64>,
    to_right: Vec<f64>,
    row_min: Vec<usize>,
    row_max: Vec<usize>,
}

impl Transitions {
    fn build(kernel: &MarkovKernel, window: &StateWindow) -> Result<Self> {
        if !kernel.is_lattice() {
            return Err(Error::NotLattice);
        }
        let n = window.len();
        let mut t = Transitions {
            starts: Vec::with_capacity(n + 1),
            targets: Vec::new(),
            probs: Vec::new(),
            to_left: vec![0.0; n],
            to_right: vec![0.0; n],
            row_min: vec![usize::MAX; n],
            row_max: vec![0; n],
        };
        for i in 0..n {
            t.starts.push(t.targets.len());
            let k = window.lo + i as i64;
            let law = kernel.lattice_jump(k)?;
            for &(d, p) in law.atoms() {
                let j = k + d;
                if j < window.lo {
                    t.to_left[i] += p;
                } else if j > window.hi {
                    t.to_right[i] += p;
                } else {
                    let idx = (j - window.lo) as usize;
                    t.targets.push(idx as u32);
                    t.probs.push(p);
                    t.row_min[i] = t.row_min[i].min(idx);
                    t.row_max[i] = t.row_max[i].max(idx);
                }
            }
        }
        t.starts.push(t.targets.len());
        Ok(t)
    }
}

/// Applies the kernel step by step, tracking absorbed mass.
struct Propagator {
    trans: Transitions,
    window: StateWindow,
    current: MeasureVector,
    scratch: Vec<f64>,
    /// Inclusive index range that may carry mass; empty when `0 > 1`.
    active: (usize, usize),
}

impl Propagator {
    fn new(kernel: &MarkovKernel, mu0: &LatticePmf, window: StateWindow) -> Result<Self> {
        let trans = Transitions::build(kernel, &window)?;
        let mut masses = vec![0.0; window.len()];
        let mut active = (usize::MAX, 0);
        for &(k, p) in mu0.atoms() {
            if !window.contains(k) {
                return Err(Error::MassOutsideWindow(k));
            }
            let i = (k - window.lo) as usize;
            masses[i] += p;
            active = (active.0.min(i), active.1.max(i));
        }
        Ok(Propagator {
            scratch: vec![0.0; window.len()],
            current: MeasureVector {
                lo: window.lo,
                masses,
                step: 0,
            },
            trans,
            window,
            active,
        })
    }

    fn interior_mass(&self) -> f64 {
        let (a, b) = self.active;
        if a > b {
            return 0.0;
        }
        self.current.masses[a..=b].iter().sum()
    }

    fn step(&mut self) {
        let (a, b) = self.active;
        let mut next_active = (usize::MAX, 0);
        if a <= b {
            let t = &self.trans;
            let cur = &mut self.current.masses;
            let next = &mut self.scratch;
            #[allow(clippy::needless_range_loop)]
            for i in a..=b {
                let m = cur[i];
                if m == 0.0 {
                    continue;
                }
                cur[i] = 0.0;
                self.window.absorbed_left += m * t.to_left[i];
                self.window.absorbed_right += m * t.to_right[i];
                let (s, e) = (t.starts[i], t.starts[i + 1]);
                if s == e {
                    continue;
                }
                for (&j, &p) in t.targets[s..e].iter().zip(&t.probs[s..e]) {
                    next[j as usize] += m * p;
                }
                next_active = (next_active.0.min(t.row_min[i]), next_active.1.max(t.row_max[i]));
            }
        }
        std::mem::swap(&mut self.current.masses, &mut self.scratch);
        self.current.step += 1;
        self.active = next_active;
    }
}

/// Stream of `mu_0, mu_1, ...` restricted to the window.
///
/// Ends after the first `mu_n` whose interior mass times `q_sup_bound` drops
/// below `stop_tol`, or at `n_max`. [`Self::window`] reports absorbed mass.
pub struct DistributionIter {
    prop: Propagator,
    settings: RenewalSettings,
    done: bool,
    started: bool,
}

impl DistributionIter {
    pub fn window(&self) -> &StateWindow {
        &self.prop.window
    }

    fn stop_reached(&self) -> bool {
        self.prop.interior_mass() * self.settings.q_sup_bound < self.settings.stop_tol
            || self.prop.current.step >= self.settings.n_max
    }
}

impl Iterator for DistributionIter {
    type Item = MeasureVector;

    fn next(&mut self) -> Option<MeasureVector> {
        if self.done {
            return None;
        }
        if self.started {
            self.prop.step();
        }
        self.started = true;
        if self.stop_reached() {
            self.done = true;
        }
        Some(self.prop.current.clone())
    }
}

pub fn iterate_distribution(
    kernel: &MarkovKernel,
    mu0: &LatticePmf,
    window: StateWindow,
    settings: &RenewalSettings,
) -> Result<DistributionIter> {
    settings.validate()?;
    Ok(DistributionIter {
        prop: Propagator::new(kernel, mu0, window)?,
        settings: settings.clone(),
        done: false,
        started: false,
    })
}

/// Accumulated `U{k} = sum_{n <= N} mu_n{k}` with a one-sided error bracket:
/// the true value lies in `[mass, mass + bracket_width]` for probed `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalMeasure {
    pub lo: i64,
    pub masses: Vec<f64>,
    pub bracket_width: f64,
    pub iterations_used: usize,
    pub q_sup_bound: f64,
    pub probe: (i64, i64),
    pub window: StateWindow,
    pub residual_mass: f64,
    pub return_factors: ReturnFactors,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalRow {
    pub state: i64,
    pub mass: f64,
    pub bracket_width: f64,
    pub iterations: usize,
}

impl RenewalMeasure {
    pub fn hi(&self) -> i64 {
        self.lo + self.masses.len() as i64 - 1
    }

    pub fn mass_at(&self, k: i64) -> Option<f64> {
        usize::try_from(k - self.lo)
            .ok()
            .and_then(|i| self.masses.get(i).copied())
    }

    /// `U(x, x+h]` for integer `x` and `h`.
    pub fn window_mass(&self, x: i64, h: i64) -> Option<f64> {
        (x + 1..=x + h).map(|k| self.mass_at(k)).sum()
    }

    pub fn is_probed(&self, k: i64) -> bool {
        (self.probe.0..=self.probe.1).contains(&k)
    }

    pub fn rows(&self) -> impl Iterator<Item = RenewalRow> + '_ {
        self.masses.iter().enumerate().map(|(i, &mass)| RenewalRow {
            state: self.lo + i as i64,
            mass,
            bracket_width: self.bracket_width,
            iterations: self.iterations_used,
        })
    }
}

/// `Q(start, .)`: the renewal measure started from a point mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenFunction {
    pub start: i64,
    pub measure: RenewalMeasure,
}

impl std::ops::Deref for GreenFunction {
    type Target = RenewalMeasure;

    fn deref(&self) -> &RenewalMeasure {
        &self.measure
    }
}

pub fn renewal_measure(
    kernel: &MarkovKernel,
    mu0: &LatticePmf,
    window: StateWindow,
    settings: &RenewalSettings,
) -> Result<RenewalMeasure> {
    settings.validate()?;
    let probe = settings.probe.unwrap_or((window.lo, window.hi));
    if probe.0 < window.lo || probe.1 > window.hi || probe.0 > probe.1 {
        return Err(Error::WindowOutsideRegion {
            lo: probe.0,
            hi: probe.1,
            region_lo: window.lo,
            region_hi: window.hi,
        });
    }
    let mut prop = Propagator::new(kernel, mu0, window)?;
    let mut acc = vec![0.0; window.len()];
    loop {
        let (a, b) = prop.active;
        if a <= b {
            for (u, &m) in acc[a..=b].iter_mut().zip(&prop.current.masses[a..=b]) {
                *u += m;
            }
        }
        let interior = prop.interior_mass();
        if interior * settings.q_sup_bound < settings.stop_tol || prop.current.step >= settings.n_max {
            break;
        }
        prop.step();
    }
    let residual = prop.interior_mass();
    let factors = match settings.returns {
        ReturnPolicy::Conservative => ReturnFactors::ONE,
        ReturnPolicy::Certified => ReturnFactors {
            left: ascent_bound(kernel, window.lo, probe.0),
            right: descent_bound(kernel, window.hi, probe.1),
        },
    };
    let w = prop.window;
    let bracket = (w.absorbed_left * factors.left + w.absorbed_right * factors.right + residual)
        * settings.q_sup_bound;
    if let Some(requested) = settings.accuracy {
        if bracket > requested {
            return Err(Error::InsufficientAccuracy {
                achieved: bracket,
                requested,
            });
        }
    }
    Ok(RenewalMeasure {
        lo: window.lo,
        masses: acc,
        bracket_width: bracket,
        iterations_used: prop.current.step,
        q_sup_bound: settings.q_sup_bound,
        probe,
        window: w,
        residual_mass: residual,
        return_factors: factors,
    })
}

pub fn green_function(
    kernel: &MarkovKernel,
    start: i64,
    window: StateWindow,
    settings: &RenewalSettings,
) -> Result<GreenFunction> {
    let measure = renewal_measure(kernel, &LatticePmf::point(start), window, settings)?;
    Ok(GreenFunction { start, measure })
}

/// Bracket on `p0 = lim P{X_n > 0}` read off `mu_{n_at}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Bracket {
    pub lower: f64,
    pub upper: f64,
    pub step: usize,
}

/// `lower` counts interior mass above 0 plus right-absorbed mass that is
/// certified never to come back to `(-inf, 0]`; `upper` adds every mass that
/// could still end up above 0.
pub fn p0_exact(
    kernel: &MarkovKernel,
    mu0: &LatticePmf,
    window: StateWindow,
    n_at: usize,
    settings: &RenewalSettings,
) -> Result<P0Bracket> {
    settings.validate()?;
    if n_at > settings.n_max {
        return Err(Error::NotEnoughIterations {
            requested: n_at,
            available: settings.n_max,
        });
    }
    let mut prop = Propagator::new(kernel, mu0, window)?;
    for _ in 0..n_at {
        prop.step();
    }
    let (r_left, r_right) = match settings.returns {
        ReturnPolicy::Conservative => (1.0, 1.0),
        ReturnPolicy::Certified => (
            if window.lo > 0 { 1.0 } else { ascent_bound(kernel, window.lo, 1) },
            if window.hi < 0 { 1.0 } else { descent_bound(kernel, window.hi, 0) },
        ),
    };
    let w = prop.window;
    let above = prop.current.mass_above(0);
    let at_or_below = prop.current.interior_mass() - above;
    let lower = above + w.absorbed_right * (1.0 - r_right);
    let upper = lower + w.absorbed_right * r_right + at_or_below + w.absorbed_left * r_left;
    Ok(P0Bracket {
        lower,
        upper: upper.min(1.0),
        step: n_at,
    })
}

/// Largest `theta` with `E exp(theta * xi) <= 1` for every law, or infinity
/// when no law can move up. Zero when some law has nonnegative mean.
fn supermartingale_rate(laws: &[LatticePmf], sign: f64) -> f64 {
    laws.iter()
        .map(|law| {
            let mgf = |theta: f64| law.mgf(sign * theta);
            let drift = sign * law.mean();
            let can_move = if sign > 0.0 {
                law.max_offset() > 0
            } else {
                law.min_offset() < 0
            };
            if !can_move {
                return f64::INFINITY;
            }
            if drift >= 0.0 {
                return 0.0;
            }
            let mut hi = 1.0;
            while mgf(hi) <= 1.0 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mgf(mid) <= 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        })
        .fold(f64::INFINITY, f64::min)
}

/// Bound on the probability that the chain, started anywhere above `hi`,
/// ever visits `(-inf, level]`.
pub fn descent_bound(kernel: &MarkovKernel, hi: i64, level: i64) -> f64 {
    if kernel.is_nondecreasing() {
        return 0.0;
    }
    let mut best: f64 = 1.0;
    for barrier in level..=hi {
        // Reaching `level` first requires reaching `barrier`; the
        // supermartingale only needs to hold strictly above it.
        let Some(laws) = kernel.laws_on(Some(barrier + 1), None) else {
            continue;
        };
        let theta = supermartingale_rate(&laws, -1.0);
        let bound = (-theta * (hi + 1 - barrier) as f64).exp();
        best = best.min(bound);
    }
    best
}

/// Bound on the probability that the chain, started anywhere below `lo`,
/// ever visits `[level, inf)`.
pub fn ascent_bound(kernel: &MarkovKernel, lo: i64, level: i64) -> f64 {
    let mut best: f64 = 1.0;
    for barrier in lo..=level {
        if let Some(dom) = kernel.domain_lower() {
            if barrier - 1 < dom {
                continue;
            }
        }
        let Some(laws) = kernel.laws_on(None, Some(barrier - 1)) else {
            continue;
        };
        let theta = supermartingale_rate(&laws, 1.0);
        let bound = (-theta * (barrier - (lo - 1)) as f64).exp();
        best = best.min(bound);
    }
    best
}
