//! Limit verdicts: tail renewal density against `p0 / E xi`, flatness of unit
//! windows, and the growth of the counterexample chain at block boundaries.

use std::f64::consts::{E, LN_2};

use serde::Serialize;

use crate::chain::MarkovKernel;
use crate::conditions::uniform_visit_bound;
use crate::error::{Error, Result};
use crate::exact::{renewal_measure, RenewalMeasure, RenewalSettings, StateWindow};
use crate::law::LatticePmf;
use crate::monte_carlo::TargetEstimate;

/// Largest block index the counterexample report accepts.
pub const MAX_COUNTEREXAMPLE_BLOCK: u32 = 14;
/// States kept past the last spike.
pub const COUNTEREXAMPLE_MARGIN: i64 = 64;

/// Where window masses come from.
#[derive(Debug, Clone, Copy)]
pub enum MeasureSource<'a> {
    Exact(&'a RenewalMeasure),
    MonteCarlo(&'a [TargetEstimate]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitReport {
    /// Average of `U(x, x+h] / h` over the windows in range.
    pub alpha_estimate: f64,
    /// `p0 / E xi`.
    pub target: f64,
    /// `1 / E xi`.
    pub uncorrected_target: f64,
    pub relative_error: f64,
    pub uncorrected_relative_error: f64,
    /// Largest `|U(x, x+h] / h - target|` over the windows.
    pub max_abs_deviation: f64,
    /// Per-unit uncertainty of each window density (exact bracket or MC stderr).
    pub uncertainty: f64,
    pub window_range: (i64, i64),
    pub h: f64,
    pub p0_used: f64,
    pub mean_used: f64,
    /// The two targets differ.
    pub discrepancy: bool,
    pub windows: usize,
}

impl LimitReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.relative_error <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub density: f64,
    pub target: f64,
}

fn window_densities(source: MeasureSource<'_>, h: f64, range: (i64, i64)) -> Result<(Vec<(f64, f64)>, f64)> {
    if range.0 > range.1 {
        return Err(Error::InvalidWindow {
            lo: range.0,
            hi: range.1,
        });
    }
    match source {
        MeasureSource::Exact(m) => {
            if h.fract() != 0.0 || h < 1.0 {
                return Err(Error::param("h", h, "lattice windows need a positive integer h"));
            }
            let hi = h as i64;
            if !(m.is_probed(range.0 + 1) && m.is_probed(range.1 + hi)) {
                return Err(Error::WindowOutsideRegion {
                    lo: range.0 + 1,
                    hi: range.1 + hi,
                    region_lo: m.probe.0,
                    region_hi: m.probe.1,
                });
            }
            let rows = (range.0..=range.1)
                .map(|x| (x as f64, m.window_mass(x, hi).expect("probed") / h))
                .collect();
            Ok((rows, m.bracket_width))
        }
        MeasureSource::MonteCarlo(estimates) => {
            let picked: Vec<&TargetEstimate> = estimates
                .iter()
                .filter(|e| e.h == h && e.x >= range.0 as f64 && e.x <= range.1 as f64)
                .collect();
            if picked.is_empty() {
                return Err(Error::WindowOutsideRegion {
                    lo: range.0,
                    hi: range.1,
                    region_lo: 0,
                    region_hi: -1,
                });
            }
            let se = picked.iter().map(|e| e.estimate.stderr / h).fold(0.0, f64::max);
            Ok((picked.iter().map(|e| (e.x, e.estimate.value / h)).collect(), se))
        }
    }
}

pub fn limit_report(source: MeasureSource<'_>, h: f64, p0: f64, mean: f64, range: (i64, i64)) -> Result<LimitReport> {
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::NonPositiveDrift(mean));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::param("p0", p0, "must be a probability"));
    }
    let (rows, uncertainty) = window_densities(source, h, range)?;
    let target = p0 / mean;
    let uncorrected_target = 1.0 / mean;
    let alpha = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    let rel = |t: f64| if t > 0.0 { (alpha - t).abs() / t } else { alpha.abs() };
    Ok(LimitReport {
        alpha_estimate: alpha,
        target,
        uncorrected_target,
        relative_error: rel(target),
        uncorrected_relative_error: rel(uncorrected_target),
        max_abs_deviation: rows.iter().map(|r| (r.1 - target).abs()).fold(0.0, f64::max),
        uncertainty,
        window_range: range,
        h,
        p0_used: p0,
        mean_used: mean,
        discrepancy: (target - uncorrected_target).abs() > 1e-12 * uncorrected_target,
        windows: rows.len(),
    })
}

/// Plot rows `(x, U(x, x+h] / h, target)`.
pub fn density_rows(source: MeasureSource<'_>, h: f64, range: (i64, i64), target: f64) -> Result<Vec<DensityRow>> {
    let (rows, _) = window_densities(source, h, range)?;
    Ok(rows
        .into_iter()
        .map(|(x, density)| DensityRow { x, density, target })
        .collect())
}

/// Largest `|U(k, k+1] - U(k+1, k+2]|` for `k` in the range.
pub fn flatness_check(measure: &RenewalMeasure, range: (i64, i64)) -> Result<f64> {
    let (rows, _) = window_densities(MeasureSource::Exact(measure), 1.0, (range.0, range.1 + 1))?;
    Ok(rows.windows(2).map(|w| (w[0].1 - w[1].1).abs()).fold(0.0, f64::max))
}

/// `n ln 2 / ln(n + e^2)`.
pub fn counterexample_reference(n: u32) -> f64 {
    n as f64 * LN_2 / (n as f64 + E * E).ln()
}

/// `sum_{k=2}^{2^n+1} 1/k / (n ln 2)`.
pub fn harmonic_block_ratio(n: u32) -> f64 {
    let top = (1u64 << n) + 1;
    let sum: f64 = (2..=top).rev().map(|k| 1.0 / k as f64).sum();
    sum / (n as f64 * LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub n: u32,
    /// `U{2^{n+1}}`.
    pub spike: f64,
    pub reference: f64,
    pub ratio: f64,
    /// `U{2^{n+1} - 1}`.
    pub dip: f64,
    /// `U{2^{n+1} + 1}`.
    pub generic: f64,
    /// `U{3 * 2^{n-1}}`, the middle of block `n`.
    pub interior: f64,
    /// Largest unit-window variation over `[2^{n+1} - 2, 2^{n+1} + 1]`.
    pub flatness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub rows: Vec<CounterexampleRow>,
    pub ratio_band: (f64, f64),
    pub generic_masses: Vec<(i64, f64)>,
    pub bracket_width: f64,
    pub spikes_exceed_generic: bool,
}

/// Renewal measure of the counterexample chain from `delta_1` on
/// `[0, 2^{n_hi+1} + margin]`, read at the block boundaries `2^{n+1}`.
pub fn counterexample_growth(n_lo: u32, n_hi: u32) -> Result<CounterexampleReport> {
    if n_lo == 0 || n_lo > n_hi {
        return Err(Error::InvalidWindow {
            lo: n_lo as i64,
            hi: n_hi as i64,
        });
    }
    if n_hi > MAX_COUNTEREXAMPLE_BLOCK {
        return Err(Error::param("n_hi", n_hi as f64, format!("at most {MAX_COUNTEREXAMPLE_BLOCK}")));
    }
    let kernel = MarkovKernel::counterexample();
    let top = (1i64 << (n_hi + 1)) + COUNTEREXAMPLE_MARGIN;
    let q_sup = uniform_visit_bound(&kernel, 1.0)?.value;
    let measure = renewal_measure(
        &kernel,
        &LatticePmf::point(1),
        StateWindow::new(0, top)?,
        &RenewalSettings::new(q_sup),
    )?;
    counterexample_report(&measure, n_lo, n_hi)
}

/// Reads the counterexample rows off a precomputed measure.
pub fn counterexample_report(measure: &RenewalMeasure, n_lo: u32, n_hi: u32) -> Result<CounterexampleReport> {
    let at = |k: i64| {
        if measure.is_probed(k) {
            measure.mass_at(k).ok_or(Error::MassOutsideWindow(k))
        } else {
            Err(Error::WindowOutsideRegion {
                lo: k,
                hi: k,
                region_lo: measure.probe.0,
                region_hi: measure.probe.1,
            })
        }
    };
    let mut rows = Vec::new();
    for n in n_lo..=n_hi {
        let b = 1i64 << (n + 1);
        let spike = at(b)?;
        let reference = counterexample_reference(n);
        let flatness = (b - 2..=b)
            .map(|k| Ok((at(k)? - at(k + 1)?).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(CounterexampleRow {
            n,
            spike,
            reference,
            ratio: spike / reference,
            dip: at(b - 1)?,
            generic: at(b + 1)?,
            interior: at(3 * b / 4)?,
            flatness,
        });
    }
    let ratio_band = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    Ok(CounterexampleReport {
        spikes_exceed_generic: rows.iter().all(|r| r.spike > r.generic),
        generic_masses: rows.iter().map(|r| ((1i64 << (r.n + 1)) + 1, r.generic)).collect(),
        ratio_band,
        bracket_width: measure.bracket_width,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::RenewalSettings;
    use approx::assert_abs_diff_eq;

    fn walk_measure() -> RenewalMeasure {
        let k = MarkovKernel::random_walk(LatticePmf::up_down(0.75).unwrap()).unwrap();
        renewal_measure(
            &k,
            &LatticePmf::point(0),
            StateWindow::new(-60, 220).unwrap(),
            &RenewalSettings::new(8.0).probe(0, 160),
        )
        .unwrap()
    }

    #[test]
    fn walk_hits_target() {
        let m = walk_measure();
        let r = limit_report(MeasureSource::Exact(&m), 1.0, 1.0, 0.5, (100, 150)).unwrap();
        assert_abs_diff_eq!(r.target, 2.0);
        assert!(r.relative_error < 1e-3);
        assert!(!r.discrepancy);
        assert_eq!(r.windows, 51);
        assert!(flatness_check(&m, (100, 150)).unwrap() < 1e-3);
    }

    #[test]
    fn errors() {
        let m = walk_measure();
        assert!(matches!(
            limit_report(MeasureSource::Exact(&m), 1.0, 1.0, 0.0, (100, 150)),
            Err(Error::NonPositiveDrift(_))
        ));
        assert!(matches!(
            limit_report(MeasureSource::Exact(&m), 1.0, 1.0, 0.5, (100, 170)),
            Err(Error::WindowOutsideRegion { .. })
        ));
        assert!(matches!(
            limit_report(MeasureSource::MonteCarlo(&[]), 1.0, 1.0, 0.5, (100, 150)),
            Err(Error::WindowOutsideRegion { .. })
        ));
    }

    #[test]
    fn deterministic_walk_is_flat() {
        let k = MarkovKernel::random_walk(LatticePmf::point(1)).unwrap();
        let m = renewal_measure(
            &k,
            &LatticePmf::point(0),
            StateWindow::new(0, 40).unwrap(),
            &RenewalSettings::new(1.0),
        )
        .unwrap();
        assert_eq!(flatness_check(&m, (5, 30)).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_ratio_tends_to_one() {
        let r: Vec<f64> = [4, 8, 16, 24].iter().map(|&n| harmonic_block_ratio(n)).collect();
        assert!(r.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
        assert!((r[3] - 1.0).abs() < 0.03);
    }

    #[test]
    fn counterexample_rejects_bad_ranges() {
        assert!(counterexample_growth(0, 3).is_err());
        assert!(counterexample_growth(5, 4).is_err());
        assert!(counterexample_growth(6, 15).is_err());
    }
}
