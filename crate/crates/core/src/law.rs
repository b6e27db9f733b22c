//! Jump distributions: finite lattice pmfs and a few continuous families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a lattice pmf.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Finite-support probability mass function on the integers.
///
/// Atoms are kept sorted by offset with duplicates merged and zero masses
/// dropped, so two pmfs describing the same law compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct LatticePmf {
    atoms: Vec<(i64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    atoms: Vec<(i64, f64)>,
}

impl TryFrom<RawPmf> for LatticePmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        LatticePmf::new(raw.atoms)
    }
}

impl From<LatticePmf> for RawPmf {
    fn from(pmf: LatticePmf) -> Self {
        RawPmf { atoms: pmf.atoms }
    }
}

impl LatticePmf {
    pub fn new(atoms: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut merged: Vec<(i64, f64)> = Vec::new();
        let mut raw: Vec<(i64, f64)> = atoms.into_iter().collect();
        for &(_, p) in &raw {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeMass(p));
            }
        }
        raw.sort_by_key(|&(d, _)| d);
        for (d, p) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == d => last.1 += p,
                _ => merged.push((d, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(LatticePmf { atoms: merged })
    }

    pub fn point(offset: i64) -> Self {
        LatticePmf {
            atoms: vec![(offset, 1.0)],
        }
    }

    /// Nearest-neighbour law `{+1: up, -1: 1 - up}`.
    pub fn up_down(up: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&up) {
            return Err(Error::param("q", up, "must lie in [0, 1]"));
        }
        LatticePmf::new([(1, up), (-1, 1.0 - up)])
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    pub fn prob(&self, offset: i64) -> f64 {
        self.atoms
            .binary_search_by_key(&offset, |&(d, _)| d)
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, p)| p).sum()
    }

    pub fn min_offset(&self) -> i64 {
        self.atoms.first().map(|a| a.0).unwrap_or(0)
    }

    pub fn max_offset(&self) -> i64 {
        self.atoms.last().map(|a| a.0).unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(d, p)| d as f64 * p).sum()
    }

    /// `P{xi > t}`.
    pub fn prob_gt(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(d, _)| d as f64 > t)
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(d, _)| d as f64 <= t)
            .map(|&(_, p)| p)
            .sum()
    }

    /// `E min(xi, a)`.
    pub fn truncated_mean(&self, a: f64) -> f64 {
        self.atoms.iter().map(|&(d, p)| p * (d as f64).min(a)).sum()
    }

    /// `E exp(s * xi)`.
    pub fn mgf(&self, s: f64) -> f64 {
        self.atoms.iter().map(|&(d, p)| p * (s * d as f64).exp()).sum()
    }

    pub fn abs(&self) -> LatticePmf {
        LatticePmf::new(self.atoms.iter().map(|&(d, p)| (d.abs(), p)))
            .expect("folding preserves normalization")
    }

    /// Law of `(x + xi)^+ - x` for an integer state `x`.
    pub fn reflected_at(&self, x: i64) -> LatticePmf {
        LatticePmf::new(self.atoms.iter().map(|&(d, p)| ((x + d).max(0) - x, p)))
            .expect("reflection preserves normalization")
    }

    /// Minimal span `a` such that the support lies on `{k a}`; `None` for a
    /// law degenerate at zero.
    pub fn span(&self) -> Option<i64> {
        let g = self.atoms.iter().fold(0i64, |g, &(d, _)| gcd(g, d.abs()));
        (g > 0).then_some(g)
    }

    /// Largest pointwise difference between two pmfs.
    pub fn sup_distance(&self, other: &LatticePmf) -> f64 {
        let mut offsets: Vec<i64> = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| a.0)
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        offsets
            .into_iter()
            .map(|d| (self.prob(d) - other.prob(d)).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse-cdf draw from a uniform `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> i64 {
        let mut acc = 0.0;
        for &(d, p) in &self.atoms {
            acc += p;
            if u < acc {
                return d;
            }
        }
        self.max_offset()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.quantile(rng.random::<f64>())
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Continuous jump laws with closed-form cdf and moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContinuousLaw {
    Uniform { lo: f64, hi: f64 },
    /// Pareto law on `[scale, inf)` with tail `(scale / t)^shape`.
    Pareto { scale: f64, shape: f64 },
    /// Law of `|Y| + shift` for `Y` distributed as `inner`.
    AbsShifted { inner: Box<ContinuousLaw>, shift: f64 },
}

impl ContinuousLaw {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("hi", hi, "uniform law needs lo < hi"));
        }
        Ok(ContinuousLaw::Uniform { lo, hi })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && shape > 0.0) {
            return Err(Error::param("shape", shape, "pareto needs scale, shape > 0"));
        }
        Ok(ContinuousLaw::Pareto { scale, shape })
    }

    pub fn abs_shifted(self, shift: f64) -> Self {
        ContinuousLaw::AbsShifted {
            inner: Box::new(self),
            shift,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            ContinuousLaw::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            ContinuousLaw::Pareto { scale, shape } => {
                if t <= scale {
                    0.0
                } else {
                    1.0 - (scale / t).powf(shape)
                }
            }
            ContinuousLaw::AbsShifted { ref inner, shift } => {
                let r = t - shift;
                if r < 0.0 {
                    0.0
                } else {
                    (inner.cdf(r) - inner.cdf(-r)).clamp(0.0, 1.0)
                }
            }
        }
    }

    pub fn prob_gt(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// Closed interval containing the support (possibly unbounded above).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ContinuousLaw::Uniform { lo, hi } => (lo, hi),
            ContinuousLaw::Pareto { scale, .. } => (scale, f64::INFINITY),
            ContinuousLaw::AbsShifted { ref inner, shift } => {
                let (lo, hi) = inner.support();
                let abs_lo = if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    lo.abs().min(hi.abs())
                };
                (abs_lo + shift, lo.abs().max(hi.abs()) + shift)
            }
        }
    }

    /// `None` when the mean is infinite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            ContinuousLaw::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            ContinuousLaw::Pareto { scale, shape } => {
                (shape > 1.0).then(|| shape * scale / (shape - 1.0))
            }
            ContinuousLaw::AbsShifted { ref inner, shift } => {
                inner.abs_mean().map(|m| m + shift)
            }
        }
    }

    fn abs_mean(&self) -> Option<f64> {
        match *self {
            ContinuousLaw::Uniform { lo, hi } => Some(if lo >= 0.0 {
                0.5 * (lo + hi)
            } else if hi <= 0.0 {
                -0.5 * (lo + hi)
            } else {
                (lo * lo + hi * hi) / (2.0 * (hi - lo))
            }),
            ContinuousLaw::Pareto { .. } => self.mean(),
            ContinuousLaw::AbsShifted { ref inner, shift } => {
                if shift >= 0.0 {
                    inner.abs_mean().map(|m| m + shift)
                } else {
                    // |(|Y| + s)| with s < 0 is not affine in |Y|; integrate the tail.
                    let (_, hi) = self.support();
                    hi.is_finite()
                        .then(|| integrate_tail(&|t| self.prob_gt(t) + self.cdf(-t), hi, &self.breakpoints()))
                }
            }
        }
    }

    /// `E min(xi, a)`; `None` when the law has an infinite mean and `a` is infinite.
    pub fn truncated_mean(&self, a: f64) -> Option<f64> {
        if a.is_infinite() {
            return self.mean();
        }
        match *self {
            ContinuousLaw::Uniform { lo, hi } => Some(if a >= hi {
                0.5 * (lo + hi)
            } else if a <= lo {
                a
            } else {
                (0.5 * (a * a - lo * lo) + a * (hi - a)) / (hi - lo)
            }),
            ContinuousLaw::Pareto { scale, shape } => Some(if a <= scale {
                a
            } else if (shape - 1.0).abs() < 1e-15 {
                scale + scale * (a / scale).ln()
            } else {
                scale + scale.powf(shape) * (a.powf(1.0 - shape) - scale.powf(1.0 - shape)) / (1.0 - shape)
            }),
            ContinuousLaw::AbsShifted { .. } => {
                let (lo, _) = self.support();
                if a <= lo {
                    return Some(a);
                }
                // E min(X, a) = lo + int_lo^a P{X > t} dt for X >= lo.
                let tail = |t: f64| self.prob_gt(t);
                let shifted_breaks: Vec<f64> = self.breakpoints();
                Some(lo + integrate_tail_from(&tail, lo, a, &shifted_breaks))
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ContinuousLaw::Uniform { lo, hi } => vec![lo, hi],
            ContinuousLaw::Pareto { scale, .. } => vec![scale],
            ContinuousLaw::AbsShifted { ref inner, shift } => {
                let mut b: Vec<f64> = inner
                    .breakpoints()
                    .into_iter()
                    .flat_map(|x| [x.abs() + shift, shift])
                    .collect();
                b.push(shift);
                b
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ContinuousLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ContinuousLaw::Pareto { scale, shape } => {
                scale * (1.0 - rng.random::<f64>()).powf(-1.0 / shape)
            }
            ContinuousLaw::AbsShifted { ref inner, shift } => inner.sample(rng).abs() + shift,
        }
    }

    /// Thresholds at which tail comparisons are evaluated: support endpoints,
    /// breakpoints and an even grid over the (capped) support.
    pub fn threshold_grid(&self, points: usize) -> Vec<f64> {
        let (lo, hi) = self.support();
        let hi = if hi.is_finite() { hi } else { lo + 1e3 * lo.abs().max(1.0) };
        let mut grid: Vec<f64> = (0..=points)
            .map(|i| lo + (hi - lo) * i as f64 / points as f64)
            .collect();
        grid.extend(self.breakpoints());
        grid
    }
}

/// `int_0^b tail(t) dt` by trapezoids on a fine grid refined at `breaks`.
fn integrate_tail(tail: &dyn Fn(f64) -> f64, b: f64, breaks: &[f64]) -> f64 {
    integrate_tail_from(tail, 0.0, b, breaks)
}

fn integrate_tail_from(tail: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut knots: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .chain([a, b])
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    // Tails of the built-in families are piecewise linear or smooth between
    // knots; 512 panels per piece keeps the error far below 1e-9.
    const PANELS: usize = 512;
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let step = (x1 - x0) / PANELS as f64;
        let mut acc = 0.5 * (tail(x0) + tail(x1));
        for i in 1..PANELS {
            acc += tail(x0 + step * i as f64);
        }
        total += acc * step;
    }
    total
}

/// Distribution of a single jump `xi(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    Lattice(LatticePmf),
    Continuous(ContinuousLaw),
}

impl JumpLaw {
    pub fn is_lattice(&self) -> bool {
        matches!(self, JumpLaw::Lattice(_))
    }

    pub fn as_lattice(&self) -> Option<&LatticePmf> {
        match self {
            JumpLaw::Lattice(p) => Some(p),
            JumpLaw::Continuous(_) => None,
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            JumpLaw::Lattice(p) => Ok(p.mean()),
            JumpLaw::Continuous(c) => c.mean().ok_or(Error::InfiniteMean),
        }
    }

    pub fn prob_gt(&self, t: f64) -> f64 {
        match self {
            JumpLaw::Lattice(p) => p.prob_gt(t),
            JumpLaw::Continuous(c) => c.prob_gt(t),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            JumpLaw::Lattice(p) => p.cdf(t),
            JumpLaw::Continuous(c) => c.cdf(t),
        }
    }

    pub fn truncated_mean(&self, a: f64) -> Result<f64> {
        match self {
            JumpLaw::Lattice(p) => Ok(p.truncated_mean(a)),
            JumpLaw::Continuous(c) => c.truncated_mean(a).ok_or(Error::InfiniteMean),
        }
    }

    /// Law of `|xi|`.
    pub fn abs(&self) -> JumpLaw {
        match self {
            JumpLaw::Lattice(p) => JumpLaw::Lattice(p.abs()),
            JumpLaw::Continuous(c) => JumpLaw::Continuous(c.clone().abs_shifted(0.0)),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            JumpLaw::Lattice(p) => (p.min_offset() as f64, p.max_offset() as f64),
            JumpLaw::Continuous(c) => c.support(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Lattice(p) => p.sample(rng) as f64,
            JumpLaw::Continuous(c) => c.sample(rng),
        }
    }

    /// Thresholds where the tail function of this law can change its slope
    /// or jump; exact for lattice laws.
    pub fn thresholds(&self) -> Vec<f64> {
        match self {
            JumpLaw::Lattice(p) => p.atoms().iter().map(|a| a.0 as f64).collect(),
            JumpLaw::Continuous(c) => c.threshold_grid(2000),
        }
    }

    /// Distance used for the asymptotic-homogeneity check: sup of pointwise
    /// pmf differences for lattice laws, Kolmogorov distance otherwise.
    pub fn distance(&self, other: &JumpLaw) -> f64 {
        match (self, other) {
            (JumpLaw::Lattice(a), JumpLaw::Lattice(b)) => a.sup_distance(b),
            _ => {
                let mut grid = self.thresholds();
                grid.extend(other.thresholds());
                grid.into_iter()
                    .map(|t| (self.cdf(t) - other.cdf(t)).abs())
                    .fold(0.0, f64::max)
            }
        }
    }
}

impl From<LatticePmf> for JumpLaw {
    fn from(p: LatticePmf) -> Self {
        JumpLaw::Lattice(p)
    }
}

impl From<ContinuousLaw> for JumpLaw {
    fn from(c: ContinuousLaw) -> Self {
        JumpLaw::Continuous(c)
    }
}
