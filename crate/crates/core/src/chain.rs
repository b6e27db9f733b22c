//! Transition kernels on the line, described by the law of the jump at each state.
//!
//! A [`MarkovKernel`] maps a state `x` to the law of `xi(x)`, the increment of
//! the chain when it sits at `x`, and carries the weak limit `F` of `xi(x)` as
//! `x -> inf`. Five built-in chains are provided alongside user tables; see
//! [`ChainName`].

use std::collections::BTreeMap;
use std::f64::consts::E;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{ContinuousLaw, JumpLaw, LatticePmf};

/// Tolerance between the declared limit mean and the mean of the limit law.
pub const LIMIT_MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainName {
    RandomWalk,
    ReflectedWalk,
    ThreeBranch,
    Counterexample,
    PerturbedWalk,
    Custom,
}

impl ChainName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChainName::RandomWalk => "random_walk",
            ChainName::ReflectedWalk => "reflected_walk",
            ChainName::ThreeBranch => "three_branch",
            ChainName::Counterexample => "counterexample",
            ChainName::PerturbedWalk => "perturbed_walk",
            ChainName::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ChainName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "random_walk" => ChainName::RandomWalk,
            "reflected_walk" => ChainName::ReflectedWalk,
            "three_branch" => ChainName::ThreeBranch,
            "counterexample" => ChainName::Counterexample,
            "perturbed_walk" => ChainName::PerturbedWalk,
            "custom" => ChainName::Custom,
            other => return Err(Error::Spec(format!("unknown chain `{other}`"))),
        })
    }
}

impl std::fmt::Display for ChainName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a custom transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub state: i64,
    pub jumps: LatticePmf,
}

/// Serializable description of a chain and its initial law.
///
/// Parameters by chain:
/// - `random_walk`, `reflected_walk`: either `q` (the law `{+1: q, -1: 1-q}`)
///   or an explicit `step` pmf;
/// - `three_branch`: `p`, the up-probability at the origin;
/// - `counterexample`: none;
/// - `perturbed_walk`: optional `lo`, `hi`, `amplitude` (defaults -1, 1.5, 0.5);
/// - `custom`: `states` rows plus a `limit` pmf used everywhere off the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub name: ChainName,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "origin")]
    pub initial: LatticePmf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<LatticePmf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LatticePmf>,
}

fn origin() -> LatticePmf {
    LatticePmf::point(0)
}

impl ChainSpec {
    pub fn new(name: ChainName) -> Self {
        ChainSpec {
            name,
            params: BTreeMap::new(),
            initial: origin(),
            step: None,
            states: Vec::new(),
            limit: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_initial(mut self, initial: LatticePmf) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_step(mut self, step: LatticePmf) -> Self {
        self.step = Some(step);
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingParameter(key.to_string()))
    }

    fn param_or(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn walk_step(&self) -> Result<LatticePmf> {
        match (&self.step, self.params.get("q")) {
            (Some(step), _) => Ok(step.clone()),
            (None, Some(&q)) => LatticePmf::up_down(q),
            (None, None) => Err(Error::MissingParameter("q".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Walk(LatticePmf),
    Reflected(LatticePmf),
    ThreeBranch {
        p: f64,
        up: LatticePmf,
        down: LatticePmf,
        origin: LatticePmf,
    },
    Counterexample,
    Perturbed {
        lo: f64,
        hi: f64,
        amplitude: f64,
    },
    Custom {
        table: BTreeMap<i64, LatticePmf>,
    },
}

/// Mean and lattice structure of the limit law `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitStatistics {
    pub mean: f64,
    pub span: Option<i64>,
    law: JumpLaw,
}

impl LimitStatistics {
    /// `E min(xi, a)` under the limit law.
    pub fn truncated_expectation(&self, a: f64) -> Result<f64> {
        self.law.truncated_mean(a)
    }
}

/// Immutable transition kernel; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    name: ChainName,
    model: Model,
    limit_law: JumpLaw,
    limit_mean: f64,
    majorant: Option<JumpLaw>,
    minorant: Option<JumpLaw>,
}

/// Builds the kernel described by `spec`.
pub fn build_chain(spec: &ChainSpec) -> Result<MarkovKernel> {
    let kernel = match spec.name {
        ChainName::RandomWalk => MarkovKernel::random_walk(spec.walk_step()?)?,
        ChainName::ReflectedWalk => MarkovKernel::reflected_walk(spec.walk_step()?)?,
        ChainName::ThreeBranch => MarkovKernel::three_branch(spec.param("p")?)?,
        ChainName::Counterexample => MarkovKernel::counterexample(),
        ChainName::PerturbedWalk => MarkovKernel::perturbed_walk(
            spec.param_or("lo", -1.0),
            spec.param_or("hi", 1.5),
            spec.param_or("amplitude", 0.5),
        )?,
        ChainName::Custom => {
            let limit = spec
                .limit
                .clone()
                .ok_or_else(|| Error::Spec("custom chain needs a `limit` law".into()))?;
            MarkovKernel::custom(spec.states.iter().map(|r| (r.state, r.jumps.clone())), limit)?
        }
    };
    for &(state, _) in spec.initial.atoms() {
        kernel.check_state(state as f64)?;
    }
    Ok(kernel)
}

impl MarkovKernel {
    /// Homogeneous walk `S_n` with step law `step`.
    pub fn random_walk(step: LatticePmf) -> Result<Self> {
        let mean = positive_mean(&step)?;
        Ok(MarkovKernel {
            name: ChainName::RandomWalk,
            majorant: Some(step.abs().into()),
            minorant: Some(step.clone().into()),
            limit_law: step.clone().into(),
            limit_mean: mean,
            model: Model::Walk(step),
        })
    }

    /// Walk reflected at zero, `W_{n+1} = (W_n + xi)^+`.
    pub fn reflected_walk(step: LatticePmf) -> Result<Self> {
        let mean = positive_mean(&step)?;
        Ok(MarkovKernel {
            name: ChainName::ReflectedWalk,
            majorant: Some(step.abs().into()),
            // (x + xi)^+ - x >= xi pathwise
            minorant: Some(step.clone().into()),
            limit_law: step.clone().into(),
            limit_mean: mean,
            model: Model::Reflected(step),
        })
    }

    /// Nearest-neighbour chain with drift `+1/2` above the origin, `-1/2`
    /// below it, and up-probability `p` at the origin.
    pub fn three_branch(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", p, "must lie in [0, 1]"));
        }
        let up = LatticePmf::up_down(0.75)?;
        Ok(MarkovKernel {
            name: ChainName::ThreeBranch,
            majorant: Some(LatticePmf::point(1).into()),
            minorant: None,
            limit_mean: up.mean(),
            limit_law: up.clone().into(),
            model: Model::ThreeBranch {
                p,
                up,
                down: LatticePmf::up_down(0.25)?,
                origin: LatticePmf::up_down(p)?,
            },
        })
    }

    /// Nondecreasing chain on `Z+` whose jumps are uniformly integrable but
    /// admit no integrable majorant.
    pub fn counterexample() -> Self {
        let bernoulli = LatticePmf::new([(0, 0.5), (1, 0.5)]).expect("valid pmf");
        MarkovKernel {
            name: ChainName::Counterexample,
            model: Model::Counterexample,
            limit_mean: 0.5,
            majorant: None,
            minorant: Some(bernoulli.clone().into()),
            limit_law: bernoulli.into(),
        }
    }

    /// Continuous walk with jump `U(lo, hi) + amplitude * exp(-|x|)`.
    pub fn perturbed_walk(lo: f64, hi: f64, amplitude: f64) -> Result<Self> {
        let base = ContinuousLaw::uniform(lo, hi)?;
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::param("amplitude", amplitude, "must be finite and >= 0"));
        }
        let mean = base.mean().expect("uniform has a mean");
        if mean <= 0.0 {
            return Err(Error::NonPositiveDrift(mean));
        }
        Ok(MarkovKernel {
            name: ChainName::PerturbedWalk,
            // |xi + d(x)| <= |xi| + amplitude pathwise
            majorant: Some(base.clone().abs_shifted(amplitude).into()),
            // d(x) >= 0, so xi(x) >= xi pathwise
            minorant: Some(base.clone().into()),
            limit_law: base.into(),
            limit_mean: mean,
            model: Model::Perturbed { lo, hi, amplitude },
        })
    }

    /// Lattice chain given by explicit rows; states off the table jump with `limit`.
    pub fn custom(rows: impl IntoIterator<Item = (i64, LatticePmf)>, limit: LatticePmf) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (state, law) in rows {
            if table.insert(state, law).is_some() {
                return Err(Error::Spec(format!("duplicate row for state {state}")));
            }
        }
        Ok(MarkovKernel {
            name: ChainName::Custom,
            majorant: None,
            minorant: None,
            limit_mean: limit.mean(),
            limit_law: limit.into(),
            model: Model::Custom { table },
        })
    }

    pub fn with_majorant(mut self, eta: JumpLaw) -> Self {
        self.majorant = Some(eta);
        self
    }

    pub fn with_minorant(mut self, zeta: JumpLaw) -> Self {
        self.minorant = Some(zeta);
        self
    }

    pub fn name(&self) -> ChainName {
        self.name
    }

    pub fn is_lattice(&self) -> bool {
        !matches!(self.model, Model::Perturbed { .. })
    }

    pub fn limit_law(&self) -> &JumpLaw {
        &self.limit_law
    }

    pub fn limit_mean(&self) -> f64 {
        self.limit_mean
    }

    pub fn declared_majorant(&self) -> Option<&JumpLaw> {
        self.majorant.as_ref()
    }

    pub fn declared_minorant(&self) -> Option<&JumpLaw> {
        self.minorant.as_ref()
    }

    /// Up-probability at the origin for `three_branch`.
    pub fn origin_probability(&self) -> Option<f64> {
        match self.model {
            Model::ThreeBranch { p, .. } => Some(p),
            _ => None,
        }
    }

    /// Smallest admissible state, if the state space is bounded below.
    pub fn domain_lower(&self) -> Option<i64> {
        match self.model {
            Model::Counterexample | Model::Reflected(_) => Some(0),
            _ => None,
        }
    }

    pub fn check_state(&self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::StateOutsideDomain(x));
        }
        if self.is_lattice() && x.fract() != 0.0 {
            return Err(Error::NonIntegerState(x));
        }
        if let Some(lo) = self.domain_lower() {
            if x < lo as f64 {
                return Err(Error::StateOutsideDomain(x));
            }
        }
        Ok(())
    }

    /// Jump law at an integer state of a lattice chain.
    pub fn lattice_jump(&self, k: i64) -> Result<LatticePmf> {
        match &self.model {
            Model::Walk(step) => Ok(step.clone()),
            Model::Reflected(step) => {
                if k < 0 {
                    return Err(Error::StateOutsideDomain(k as f64));
                }
                Ok(step.reflected_at(k))
            }
            Model::ThreeBranch { up, down, origin, .. } => Ok(match k.signum() {
                1 => up.clone(),
                -1 => down.clone(),
                _ => origin.clone(),
            }),
            Model::Counterexample => {
                if k < 0 {
                    return Err(Error::StateOutsideDomain(k as f64));
                }
                let (target, p_jump) = counterexample_jump(k);
                LatticePmf::new([(0, 0.5), (1, 0.5 - p_jump), (target - k, p_jump)])
            }
            Model::Custom { table } => Ok(table
                .get(&k)
                .cloned()
                .unwrap_or_else(|| self.limit_law.as_lattice().expect("custom limit is lattice").clone())),
            Model::Perturbed { .. } => Err(Error::NotLattice),
        }
    }

    pub fn jump_at(&self, x: f64) -> Result<JumpLaw> {
        self.check_state(x)?;
        match self.model {
            Model::Perturbed { lo, hi, amplitude } => {
                let d = amplitude * (-x.abs()).exp();
                Ok(ContinuousLaw::Uniform { lo: lo + d, hi: hi + d }.into())
            }
            _ => Ok(self.lattice_jump(x as i64)?.into()),
        }
    }

    /// `E xi(x)`.
    pub fn mean_jump(&self, x: f64) -> Result<f64> {
        self.jump_at(x)?.mean()
    }

    /// Draws `X_{n+1}` given `X_n = x`. The caller owns the generator.
    ///
    /// Fast paths avoid building the jump law; they draw exactly one uniform
    /// per step and agree with inverse-cdf sampling from [`Self::jump_at`].
    pub fn sample_step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        match &self.model {
            Model::Walk(step) => x + step.sample(rng) as f64,
            Model::Reflected(step) => (x + step.sample(rng) as f64).max(0.0),
            Model::ThreeBranch { up, down, origin, .. } => {
                let law = if x > 0.0 {
                    up
                } else if x < 0.0 {
                    down
                } else {
                    origin
                };
                x + law.sample(rng) as f64
            }
            Model::Counterexample => {
                let k = x as i64;
                let (target, p_jump) = counterexample_jump(k);
                let u: f64 = rng.random();
                if u < 0.5 {
                    x
                } else if u < 1.0 - p_jump {
                    x + 1.0
                } else {
                    target as f64
                }
            }
            Model::Perturbed { lo, hi, amplitude } => {
                let d = amplitude * (-x.abs()).exp();
                x + lo + d + (hi - lo) * rng.random::<f64>()
            }
            Model::Custom { table } => {
                let k = x as i64;
                let law = table
                    .get(&k)
                    .unwrap_or_else(|| self.limit_law.as_lattice().expect("custom limit is lattice"));
                x + law.sample(rng) as f64
            }
        }
    }

    pub fn limit_statistics(&self) -> LimitStatistics {
        LimitStatistics {
            mean: self.limit_mean,
            span: self.limit_law.as_lattice().and_then(LatticePmf::span),
            law: self.limit_law.clone(),
        }
    }

    /// Distance between the jump law at `x` and the limit law.
    pub fn homogeneity_gap(&self, x: f64) -> Result<f64> {
        Ok(self.jump_at(x)?.distance(&self.limit_law))
    }

    /// True when no state can ever move down.
    pub fn is_nondecreasing(&self) -> bool {
        match &self.model {
            Model::Counterexample => true,
            Model::Walk(step) => step.min_offset() >= 0,
            Model::Reflected(step) => step.min_offset() >= 0,
            Model::Custom { table } => {
                self.limit_law.as_lattice().is_some_and(|l| l.min_offset() >= 0)
                    && table.values().all(|l| l.min_offset() >= 0)
            }
            Model::ThreeBranch { .. } | Model::Perturbed { .. } => false,
        }
    }

    /// Every distinct jump law at integer states in `[lo, hi]` (either end
    /// unbounded), when that set is finite and known.
    pub fn laws_on(&self, lo: Option<i64>, hi: Option<i64>) -> Option<Vec<LatticePmf>> {
        let contains = |k: i64| lo.is_none_or(|l| k >= l) && hi.is_none_or(|h| k <= h);
        let mut laws: Vec<LatticePmf> = Vec::new();
        let mut push = |law: LatticePmf| {
            if !laws.contains(&law) {
                laws.push(law);
            }
        };
        match &self.model {
            Model::Walk(step) => push(step.clone()),
            Model::Reflected(step) => {
                // States at or above the largest downward step see the plain law.
                let free = (-step.min_offset()).max(0);
                let lo = lo?;
                if lo < 0 {
                    return None;
                }
                let last = hi.map_or(free, |h| h.min(free));
                for k in lo..=last {
                    push(step.reflected_at(k));
                }
                if lo > last {
                    push(step.clone());
                }
            }
            Model::ThreeBranch { up, down, origin, .. } => {
                if lo.is_none_or(|l| l <= -1) {
                    push(down.clone());
                }
                if contains(0) {
                    push(origin.clone());
                }
                if hi.is_none_or(|h| h >= 1) {
                    push(up.clone());
                }
            }
            Model::Custom { table } => {
                for (&k, law) in table {
                    if contains(k) {
                        push(law.clone());
                    }
                }
                let (first, last) = (table.keys().next().copied(), table.keys().last().copied());
                let off_table = match (first, last) {
                    (Some(f), Some(l)) => {
                        lo.is_none_or(|lo| lo < f) || hi.is_none_or(|hi| hi > l) || {
                            let (a, b) = (lo.unwrap(), hi.unwrap());
                            (a..=b).any(|k| !table.contains_key(&k))
                        }
                    }
                    _ => true,
                };
                if off_table {
                    push(self.limit_law.as_lattice()?.clone());
                }
            }
            Model::Counterexample | Model::Perturbed { .. } => return None,
        }
        Some(laws)
    }

    /// States covering every distinct jump regime, for infima over the line.
    pub fn representative_states(&self) -> Vec<f64> {
        match &self.model {
            Model::Walk(_) => vec![0.0],
            Model::Reflected(step) => (0..=(-step.min_offset()).max(0)).map(|k| k as f64).collect(),
            Model::ThreeBranch { .. } => vec![-1.0, 0.0, 1.0],
            Model::Counterexample => {
                // Every block start, end and midpoint up to 2^20.
                let mut states = Vec::new();
                for n in 0..20u32 {
                    let start = (1i64 << n) - 1;
                    let end = (1i64 << (n + 1)) - 2;
                    states.extend([start, (start + end) / 2, end]);
                }
                states.dedup();
                states.into_iter().map(|k| k as f64).collect()
            }
            Model::Perturbed { .. } => (-200..=200).map(|i| i as f64 * 0.05).collect(),
            Model::Custom { table } => {
                let mut states: Vec<f64> = table.keys().map(|&k| k as f64).collect();
                let beyond = table.keys().last().map_or(0, |&k| k + 1);
                states.push(beyond as f64);
                states
            }
        }
    }
}

fn positive_mean(step: &LatticePmf) -> Result<f64> {
    let mean = step.mean();
    if mean <= 0.0 {
        return Err(Error::NonPositiveDrift(mean));
    }
    Ok(mean)
}

/// Block index `n` with `2^n - 1 <= k <= 2^(n+1) - 2`.
pub fn counterexample_block(k: i64) -> u32 {
    debug_assert!(k >= 0);
    63 - ((k + 1) as u64).leading_zeros()
}

/// Target `2^(n+1)` of the long jump from state `k` and its probability
/// `1 / ((2^(n+1) - k) ln(n + e^2))`.
pub fn counterexample_jump(k: i64) -> (i64, f64) {
    let n = counterexample_block(k);
    let target = 1i64 << (n + 1);
    let p = 1.0 / ((target - k) as f64 * (n as f64 + E * E).ln());
    (target, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_branch_jumps() {
        let k = MarkovKernel::three_branch(0.5).unwrap();
        let up = LatticePmf::new([(1, 0.75), (-1, 0.25)]).unwrap();
        let down = LatticePmf::new([(1, 0.25), (-1, 0.75)]).unwrap();
        assert_eq!(k.lattice_jump(5).unwrap(), up);
        assert_eq!(k.lattice_jump(-3).unwrap(), down);
        assert_eq!(k.lattice_jump(0).unwrap(), LatticePmf::up_down(0.5).unwrap());
        assert!(MarkovKernel::three_branch(1.5).is_err());
    }

    #[test]
    fn counterexample_block_structure() {
        assert_eq!(counterexample_block(0), 0);
        assert_eq!(counterexample_block(1), 1);
        assert_eq!(counterexample_block(2), 1);
        assert_eq!(counterexample_block(3), 2);
        assert_eq!(counterexample_block(6), 2);
        assert_eq!(counterexample_block(7), 3);
        let k = MarkovKernel::counterexample();
        let law = k.lattice_jump(6).unwrap();
        let p68 = 1.0 / (2.0 * (2.0 + E * E).ln());
        assert_eq!(law.prob(0), 0.5);
        assert_abs_diff_eq!(law.prob(2), p68, epsilon = 1e-15);
        assert_abs_diff_eq!(law.prob(1), 0.5 - p68, epsilon = 1e-15);
        // k = 0 sits in block 0 and jumps to 2 with probability 1/(2 ln e^2) = 1/4.
        let zero = k.lattice_jump(0).unwrap();
        assert_abs_diff_eq!(zero.prob(2), 0.25, epsilon = 1e-15);
        assert!(k.lattice_jump(-1).is_err());
    }

    #[test]
    fn counterexample_mean_by_hand() {
        let k = MarkovKernel::counterexample();
        let p68 = 1.0 / (2.0 * (2.0 + E * E).ln());
        let by_hand = 0.5 * 0.0 + (0.5 - p68) * 1.0 + p68 * 2.0;
        assert_abs_diff_eq!(k.mean_jump(6.0).unwrap(), by_hand, epsilon = 1e-15);
        assert_abs_diff_eq!(by_hand, 0.5 + p68, epsilon = 1e-15);
    }

    #[test]
    fn reflected_walk_at_origin() {
        let k = MarkovKernel::reflected_walk(LatticePmf::up_down(0.75).unwrap()).unwrap();
        assert_eq!(k.lattice_jump(0).unwrap().atoms(), &[(0, 0.25), (1, 0.75)]);
        for x in 1..10 {
            assert_eq!(k.lattice_jump(x).unwrap(), LatticePmf::up_down(0.75).unwrap());
        }
    }

    #[test]
    fn drift_rejected() {
        assert!(matches!(
            MarkovKernel::random_walk(LatticePmf::up_down(0.5).unwrap()),
            Err(Error::NonPositiveDrift(_))
        ));
        assert!(matches!(
            MarkovKernel::perturbed_walk(-2.0, 1.0, 0.5),
            Err(Error::NonPositiveDrift(_))
        ));
    }

    #[test]
    fn mean_jump_signs() {
        let k = MarkovKernel::three_branch(0.3).unwrap();
        assert_eq!(k.mean_jump(5.0).unwrap(), 0.5);
        assert_eq!(k.mean_jump(-5.0).unwrap(), -0.5);
        assert!(matches!(k.mean_jump(0.5), Err(Error::NonIntegerState(_))));
    }

    #[test]
    fn deterministic_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let walk = MarkovKernel::random_walk(LatticePmf::point(1)).unwrap();
        assert_eq!(walk.sample_step(0.0, &mut rng), 1.0);
        let tb = MarkovKernel::three_branch(1.0).unwrap();
        for _ in 0..100 {
            assert_eq!(tb.sample_step(0.0, &mut rng), 1.0);
        }
        let refl = MarkovKernel::reflected_walk(LatticePmf::up_down(0.75).unwrap()).unwrap();
        for _ in 0..100 {
            assert!(refl.sample_step(0.0, &mut rng) >= 0.0);
        }
    }

    #[test]
    fn limit_statistics() {
        let s = MarkovKernel::three_branch(0.5).unwrap().limit_statistics();
        assert_eq!((s.mean, s.span), (0.5, Some(1)));
        let s = MarkovKernel::counterexample().limit_statistics();
        assert_eq!((s.mean, s.span), (0.5, Some(1)));
        let s = MarkovKernel::perturbed_walk(-1.0, 1.5, 0.5).unwrap().limit_statistics();
        assert_abs_diff_eq!(s.mean, 0.25, epsilon = 1e-15);
        assert_eq!(s.span, None);
        assert_abs_diff_eq!(s.truncated_expectation(1.0).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn laws_on_ranges() {
        let tb = MarkovKernel::three_branch(0.5).unwrap();
        assert_eq!(tb.laws_on(Some(1), None).unwrap().len(), 1);
        assert_eq!(tb.laws_on(None, Some(-1)).unwrap(), vec![LatticePmf::up_down(0.25).unwrap()]);
        assert_eq!(tb.laws_on(None, None).unwrap().len(), 3);
        let refl = MarkovKernel::reflected_walk(LatticePmf::new([(2, 0.5), (-3, 0.2), (1, 0.3)]).unwrap()).unwrap();
        assert_eq!(refl.laws_on(Some(3), None).unwrap().len(), 1);
        assert_eq!(refl.laws_on(Some(0), None).unwrap().len(), 4);
        assert!(MarkovKernel::counterexample().laws_on(Some(0), None).is_none());
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = ChainSpec::new(ChainName::ThreeBranch)
            .with_param("p", 0.3)
            .with_initial(LatticePmf::new([(0, 0.5), (2, 0.5)]).unwrap());
        let text = spec.to_toml().unwrap();
        assert_eq!(ChainSpec::from_toml(&text).unwrap(), spec);
        let custom = "name = \"custom\"\n\
                      [limit]\natoms = [[1, 0.75], [-1, 0.25]]\n\
                      [[states]]\nstate = 0\njumps = { atoms = [[1, 1.0]] }\n";
        let spec = ChainSpec::from_toml(custom).unwrap();
        let k = build_chain(&spec).unwrap();
        assert_eq!(k.lattice_jump(0).unwrap(), LatticePmf::point(1));
        assert_eq!(k.lattice_jump(7).unwrap(), LatticePmf::up_down(0.75).unwrap());
        assert_eq!(ChainSpec::from_toml(&spec.to_toml().unwrap()).unwrap(), spec);
    }

    #[test]
    fn spec_errors() {
        assert!(matches!(
            build_chain(&ChainSpec::new(ChainName::ThreeBranch)),
            Err(Error::MissingParameter(_))
        ));
        assert!(ChainSpec::from_toml("name = \"nope\"").is_err());
        let bad_initial = ChainSpec::new(ChainName::Counterexample).with_initial(LatticePmf::point(-2));
        assert!(matches!(build_chain(&bad_initial), Err(Error::StateOutsideDomain(_))));
    }
}
