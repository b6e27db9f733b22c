//! Trajectory simulation: occupation-count estimates of the renewal measure,
//! of `p0 = lim P{X_n > x0}`, and of the stay-above probability.
//!
//! Trajectory `i` draws from a ChaCha8 stream `(master_seed, i)`, so results
//! do not depend on how rayon splits the work. Per-trajectory counts are
//! integers and are reduced exactly, which makes reruns bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::MarkovKernel;
use crate::error::{Error, Result};
use crate::law::LatticePmf;

/// Fraction of trajectories that must end beyond the last target.
pub const HORIZON_PASS_FRACTION: f64 = 0.99;

pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Window `(x, x + h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub x: f64,
    pub h: f64,
}

impl Target {
    pub fn new(x: f64, h: f64) -> Self {
        Target { x, h }
    }

    pub fn contains(&self, y: f64) -> bool {
        y > self.x && y <= self.x + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_traj: usize,
    pub horizon: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetEstimate {
    pub x: f64,
    pub h: f64,
    pub estimate: McEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub horizon: usize,
    pub n_traj: usize,
    pub master_seed: u64,
    /// Required clearance past the last target at the horizon.
    pub margin: f64,
    /// Turn horizon and stability warnings into errors.
    pub strict: bool,
}

impl McSettings {
    pub fn new(horizon: usize, n_traj: usize, master_seed: u64) -> Self {
        McSettings {
            horizon,
            n_traj,
            master_seed,
            margin: 10.0,
            strict: false,
        }
    }

    pub fn margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_traj < 2 {
            return Err(Error::param("n_traj", self.n_traj as f64, "need at least two trajectories"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", 0.0, "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalRun {
    pub estimates: Vec<TargetEstimate>,
    /// Fraction of trajectories ending at or beyond `max target + margin`.
    pub passed_fraction: f64,
    pub warning: Option<String>,
}

/// Mean and standard error of integer samples from exact integer sums.
fn summarize(sum: u64, sum_sq: u128, n: usize, horizon: usize, master_seed: u64) -> McEstimate {
    let nf = n as f64;
    let value = sum as f64 / nf;
    // n * sum_sq - sum^2 is exact in u128 and nonnegative by Cauchy-Schwarz.
    let spread = (n as u128) * sum_sq - (sum as u128) * (sum as u128);
    let var = spread as f64 / (nf * (nf - 1.0));
    McEstimate {
        value,
        stderr: (var / nf).sqrt(),
        n_traj: n,
        horizon,
        master_seed,
    }
}

pub fn estimate_renewal(
    kernel: &MarkovKernel,
    mu0: &LatticePmf,
    targets: &[Target],
    settings: &McSettings,
) -> Result<RenewalRun> {
    settings.validate()?;
    for &(s, _) in mu0.atoms() {
        kernel.check_state(s as f64)?;
    }
    let horizon = settings.horizon;
    let runs: Vec<(Vec<u32>, f64)> = (0..settings.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(settings.master_seed, i as u64);
            let mut x = mu0.sample(&mut rng) as f64;
            let mut counts = vec![0u32; targets.len()];
            for step in 0..=horizon {
                if step > 0 {
                    x = kernel.sample_step(x, &mut rng);
                }
                for (c, t) in counts.iter_mut().zip(targets) {
                    if t.contains(x) {
                        *c += 1;
                    }
                }
            }
            (counts, x)
        })
        .collect();

    let estimates = targets
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let (sum, sum_sq) = runs.iter().fold((0u64, 0u128), |(s, q), (c, _)| {
                let v = c[j] as u64;
                (s + v, q + (v as u128) * (v as u128))
            });
            TargetEstimate {
                x: t.x,
                h: t.h,
                estimate: summarize(sum, sum_sq, settings.n_traj, horizon, settings.master_seed),
            }
        })
        .collect();

    let reach = targets
        .iter()
        .map(|t| t.x + t.h)
        .fold(f64::NEG_INFINITY, f64::max)
        + settings.margin;
    let passed = runs.iter().filter(|(_, x)| *x >= reach).count();
    let passed_fraction = passed as f64 / settings.n_traj as f64;
    let warning = (passed_fraction < HORIZON_PASS_FRACTION).then(|| {
        format!(
            "only {:.2}% of trajectories ended beyond {reach} after {horizon} steps",
            100.0 * passed_fraction
        )
    });
    if settings.strict {
        if let Some(w) = &warning {
            return Err(Error::HorizonCheck(w.clone()));
        }
    }
    Ok(RenewalRun {
        estimates,
        passed_fraction,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Estimate {
    pub value: f64,
    pub ci95_halfwidth: f64,
    pub probe_time: usize,
    pub threshold: f64,
    /// Same estimate at `probe_time / 2`.
    pub half_time_value: f64,
    pub unstable: bool,
    pub n_traj: usize,
    pub master_seed: u64,
}

fn binomial_ci95(p: f64, n: usize) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

pub fn estimate_p0(
    kernel: &MarkovKernel,
    mu0: &LatticePmf,
    threshold: f64,
    probe_time: usize,
    settings: &McSettings,
) -> Result<P0Estimate> {
    settings.validate()?;
    let half = probe_time / 2;
    let (at_half, at_end): (usize, usize) = (0..settings.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(settings.master_seed, i as u64);
            let mut x = mu0.sample(&mut rng) as f64;
            let mut above_half = x > threshold;
            for step in 1..=probe_time {
                x = kernel.sample_step(x, &mut rng);
                if step == half {
                    above_half = x > threshold;
                }
            }
            (above_half as usize, (x > threshold) as usize)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = settings.n_traj;
    let value = at_end as f64 / n as f64;
    let half_time_value = at_half as f64 / n as f64;
    let ci = binomial_ci95(value, n);
    let unstable = (value - half_time_value).abs() > 2.0 * ci.max(binomial_ci95(half_time_value, n));
    if unstable && settings.strict {
        return Err(Error::Unstable(format!(
            "P(X > {threshold}) moved from {half_time_value} at step {half} to {value} at step {probe_time}"
        )));
    }
    Ok(P0Estimate {
        value,
        ci95_halfwidth: ci,
        probe_time,
        threshold,
        half_time_value,
        unstable,
        n_traj: n,
        master_seed: settings.master_seed,
    })
}

/// Fraction of trajectories from `x` with `X_n > x` for `1 <= n <= horizon`.
/// Upper-bounds the infinite-horizon probability.
pub fn estimate_stay_above(kernel: &MarkovKernel, x: f64, settings: &McSettings) -> Result<McEstimate> {
    settings.validate()?;
    kernel.check_state(x)?;
    let stayed: u64 = (0..settings.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(settings.master_seed, i as u64);
            let mut y = x;
            for _ in 0..settings.horizon {
                y = kernel.sample_step(y, &mut rng);
                if y <= x {
                    return 0;
                }
            }
            1
        })
        .sum();
    Ok(summarize(stayed, stayed as u128, settings.n_traj, settings.horizon, settings.master_seed))
}
