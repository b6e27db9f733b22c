use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use renewal_core::ChainName;

use crate::config::{chain_from_flags, Command, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "renewal", version, about = "Renewal measures of transient Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Exact renewal measure of a lattice chain with a truncation bracket.
    RenewalExact(Common),
    /// Monte Carlo occupation estimates of U(x, x+h].
    RenewalMc(Common),
    /// Green function Q(start, .) of a lattice chain.
    Green(Common),
    /// Domination certificates, uniform visit bounds and their verification.
    CheckConditions(Common),
    /// Tail renewal density against p0 / E xi.
    VerifyLimit(Common),
    /// Boundary masses of the counterexample chain.
    Counterexample(Common),
}

impl Sub {
    fn split(&self) -> (Command, &Common) {
        match self {
            Sub::RenewalExact(c) => (Command::RenewalExact, c),
            Sub::RenewalMc(c) => (Command::RenewalMc, c),
            Sub::Green(c) => (Command::Green, c),
            Sub::CheckConditions(c) => (Command::CheckConditions, c),
            Sub::VerifyLimit(c) => (Command::VerifyLimit, c),
            Sub::Counterexample(c) => (Command::Counterexample, c),
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// random-walk, reflected-walk, three-branch, counterexample, perturbed-walk or custom.
    #[arg(long)]
    pub chain: Option<String>,
    /// Up-probability at the origin (three_branch).
    #[arg(long)]
    pub p: Option<f64>,
    /// Up-probability of the +-1 step (random_walk, reflected_walk).
    #[arg(long)]
    pub q: Option<f64>,
    /// Initial state.
    #[arg(long, allow_hyphen_values = true)]
    pub initial: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub window_lo: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub window_hi: Option<i64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fail with exit code 3 if the bracket is wider than this.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Uniform visit bound used for the bracket.
    #[arg(long)]
    pub q_sup: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Turn Monte Carlo warnings into failures.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub x_lo: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_hi: Option<i64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Start state for `green`.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<i64>,
    /// Truncation level A.
    #[arg(long = "a")]
    pub a: Option<f64>,
    /// Constant majorant to certify.
    #[arg(long)]
    pub majorant_const: Option<f64>,
    /// Bound to verify instead of the derived one.
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(long)]
    pub limit_tol: Option<f64>,
    #[arg(long)]
    pub n_lo: Option<u32>,
    #[arg(long)]
    pub n_hi: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Cli {
    pub fn print_config(&self) -> bool {
        self.command.split().1.print_config
    }

    /// Resolves the run configuration: file first, then flags.
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let (command, c) = self.command.split();
        let mut cfg = match &c.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let mut cfg = RunConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                cfg.command = command;
                cfg
            }
            None => RunConfig::new(command),
        };
        let name = c
            .chain
            .as_deref()
            .map(|s| s.parse::<ChainName>().map_err(|e| e.to_string()))
            .transpose()?;
        match (name, cfg.chain.as_mut()) {
            (Some(name), _) => cfg.chain = Some(chain_from_flags(name, c.p, c.q, c.initial)),
            (None, Some(spec)) => {
                if let Some(p) = c.p {
                    spec.params.insert("p".into(), p);
                }
                if let Some(q) = c.q {
                    spec.params.insert("q".into(), q);
                }
                if let Some(k) = c.initial {
                    spec.initial = renewal_core::LatticePmf::point(k);
                }
            }
            (None, None) => {}
        }
        let e = &mut cfg.engine;
        e.window_lo = c.window_lo.or(e.window_lo);
        e.window_hi = c.window_hi.or(e.window_hi);
        e.accuracy = c.accuracy.or(e.accuracy);
        e.q_sup = c.q_sup.or(e.q_sup);
        e.n_max = c.n_max.unwrap_or(e.n_max);
        e.tol = c.tol.unwrap_or(e.tol);
        e.horizon = c.horizon.unwrap_or(e.horizon);
        e.n_traj = c.n_traj.unwrap_or(e.n_traj);
        e.seed = c.seed.unwrap_or(e.seed);
        e.strict |= c.strict;
        let a = &mut cfg.analysis;
        a.x_lo = c.x_lo.unwrap_or(a.x_lo);
        a.x_hi = c.x_hi.unwrap_or(a.x_hi);
        a.h = c.h.unwrap_or(a.h);
        a.start = c.start.unwrap_or(a.start);
        a.a = c.a.unwrap_or(a.a);
        a.majorant_const = c.majorant_const.or(a.majorant_const);
        a.bound = c.bound.or(a.bound);
        a.limit_tol = c.limit_tol.unwrap_or(a.limit_tol);
        a.n_lo = c.n_lo.unwrap_or(a.n_lo);
        a.n_hi = c.n_hi.unwrap_or(a.n_hi);
        cfg.output.path = c.out.clone().or(cfg.output.path.take());
        cfg.output.format = c.format.unwrap_or(cfg.output.format);
        Ok(cfg)
    }
}
