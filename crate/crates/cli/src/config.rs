use std::path::PathBuf;

use clap::ValueEnum;
use renewal_core::{ChainName, ChainSpec, LatticePmf};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RenewalExact,
    RenewalMc,
    Green,
    CheckConditions,
    VerifyLimit,
    Counterexample,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::RenewalExact => "renewal-exact",
            Command::RenewalMc => "renewal-mc",
            Command::Green => "green",
            Command::CheckConditions => "check-conditions",
            Command::VerifyLimit => "verify-limit",
            Command::Counterexample => "counterexample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_lo: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_hi: Option<i64>,
    pub n_max: usize,
    pub tol: f64,
    /// Largest acceptable bracket width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// Uniform visit bound; derived from the chain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_sup: Option<f64>,
    pub horizon: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub strict: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            window_lo: None,
            window_hi: None,
            n_max: 1_000_000,
            tol: 1e-8,
            accuracy: None,
            q_sup: None,
            horizon: 1000,
            n_traj: 20_000,
            seed: 1,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisParams {
    /// Windows `(x, x+h]` for `x` in `[x_lo, x_hi]`.
    pub x_lo: i64,
    pub x_hi: i64,
    pub h: f64,
    /// Start state for `green`.
    pub start: i64,
    /// Truncation level `A`.
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majorant_const: Option<f64>,
    /// Bound to verify instead of the derived one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub limit_tol: f64,
    pub n_lo: u32,
    pub n_hi: u32,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            x_lo: 100,
            x_hi: 150,
            h: 1.0,
            start: 0,
            a: 1.0,
            majorant_const: None,
            bound: None,
            limit_tol: 2e-2,
            n_lo: 6,
            n_hi: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Complete description of one invocation; round-trips through TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub engine: EngineParams,
    #[serde(default)]
    pub analysis: AnalysisParams,
    #[serde(default)]
    pub output: OutputParams,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            chain: None,
            engine: EngineParams::default(),
            analysis: AnalysisParams::default(),
            output: OutputParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    /// Rejects nonpositive numeric parameters.
    pub fn validate(&self) -> Result<(), String> {
        let e = &self.engine;
        let a = &self.analysis;
        let checks: [(&str, bool); 8] = [
            ("n_max", e.n_max > 0),
            ("tol", e.tol > 0.0),
            ("horizon", e.horizon > 0),
            ("n_traj", e.n_traj > 1),
            ("h", a.h > 0.0),
            ("a", a.a > 0.0),
            ("limit_tol", a.limit_tol > 0.0),
            ("x_lo <= x_hi", a.x_lo <= a.x_hi),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(format!("invalid `{name}`"));
            }
        }
        for (name, v) in [("accuracy", e.accuracy), ("q_sup", e.q_sup), ("bound", a.bound), ("majorant_const", a.majorant_const)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("`{name}` must be positive"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (e.window_lo, e.window_hi) {
            if lo >= hi {
                return Err("window_lo must be below window_hi".into());
            }
        }
        Ok(())
    }
}

/// Chain assembled from command-line flags.
pub fn chain_from_flags(name: ChainName, p: Option<f64>, q: Option<f64>, initial: Option<i64>) -> ChainSpec {
    let mut spec = ChainSpec::new(name);
    match name {
        ChainName::RandomWalk | ChainName::ReflectedWalk => {
            spec = spec.with_param("q", q.unwrap_or(0.75));
        }
        ChainName::ThreeBranch => {
            spec = spec.with_param("p", p.unwrap_or(0.5));
        }
        _ => {}
    }
    if let Some(k) = initial {
        spec = spec.with_initial(LatticePmf::point(k));
    }
    spec
}
