//! Log-law ratios, density of the sets where the systole is not small, the
//! divergence integral and the distance-bound series.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surface::{SystoleTrajectory, TrajectorySample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("systole enclosure contains 0 at t = {0}")]
    ZeroSystole(f64),
    #[error("no samples beyond t = {0}")]
    EmptyWindow(f64),
    #[error("trajectory has no separating/non-separating split")]
    NoSplit,
    #[error("quadrature error estimate {err} above tolerance {tol}")]
    Quadrature { err: f64, tol: f64 },
    #[error("exponent c = {0} outside (0, 1/2]")]
    BadExponent(f64),
}

pub type Result<T> = std::result::Result<T, LawError>;

#[derive(Clone, Debug, Serialize)]
pub struct RatioPoint {
    pub t: f64,
    /// `-ln delta / ln t` at the enclosure midpoint.
    pub ratio: f64,
    /// Half-width of the ratio induced by the enclosure.
    pub err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub lambda: f64,
    /// Inf over `s >= burn_in` of `|S_lambda ∩ [t_0, s]| / (s - t_0)`.
    pub lower_density: f64,
    /// Membership of each sample `t >= ` grid start, left-endpoint convention.
    pub mask: Vec<bool>,
    /// Samples whose enclosure straddles the threshold.
    pub undecided: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoglawStats {
    pub burn_in: f64,
    pub ratios: Vec<RatioPoint>,
    pub limsup_grid: f64,
    pub limsup_min_times: Option<f64>,
    pub limsup: f64,
    pub density: Vec<DensityEstimate>,
}

fn ln_delta(s: &TrajectorySample) -> Result<(f64, f64)> {
    if !s.delta.lo.is_finite() {
        return Err(LawError::ZeroSystole(s.t));
    }
    Ok((s.delta.lo, s.delta.hi))
}

fn ratio_at(s: &TrajectorySample) -> Result<RatioPoint> {
    let (lo, hi) = ln_delta(s)?;
    let lt = s.t.ln();
    Ok(RatioPoint {
        t: s.t,
        ratio: -0.5 * (lo + hi) / lt,
        err: 0.5 * (hi - lo) / lt,
    })
}

/// Ratio series, limsup estimates and lower densities of `S_lambda`.
///
/// Ratios need `ln t > 0`, so samples with `t <= max(burn_in, 1)` are skipped.
pub fn loglaw_stats(
    traj: &SystoleTrajectory,
    lambdas: &[f64],
    burn_in: f64,
) -> Result<LoglawStats> {
    let start = burn_in.max(1.0);
    let ratios: Vec<RatioPoint> = traj
        .samples
        .iter()
        .filter(|s| s.t > start)
        .map(ratio_at)
        .collect::<Result<_>>()?;
    if ratios.is_empty() {
        return Err(LawError::EmptyWindow(start));
    }
    let limsup_grid = ratios
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let mt: Vec<RatioPoint> = traj
        .min_time_samples
        .iter()
        .filter(|s| s.t > start)
        .map(ratio_at)
        .collect::<Result<_>>()?;
    let limsup_min_times = mt.iter().map(|r| r.ratio).reduce(f64::max);
    let limsup = limsup_min_times.map_or(limsup_grid, |m| m.max(limsup_grid));
    let density = lambdas
        .iter()
        .map(|&l| density_estimate(traj, l, burn_in))
        .collect::<Result<_>>()?;
    Ok(LoglawStats {
        burn_in,
        ratios,
        limsup_grid,
        limsup_min_times,
        limsup,
        density,
    })
}

/// `S_lambda = {s : delta_s > s^{-1/2 + lambda}}` on the grid, with its lower density.
pub fn density_estimate(
    traj: &SystoleTrajectory,
    lambda: f64,
    burn_in: f64,
) -> Result<DensityEstimate> {
    let smp = &traj.samples;
    let mut mask = Vec::with_capacity(smp.len());
    let mut undecided = 0;
    for s in smp {
        let (lo, hi) = ln_delta(s)?;
        let thr = (lambda - 0.5) * s.t.ln();
        if lo <= thr && thr < hi {
            undecided += 1;
        }
        mask.push(0.5 * (lo + hi) > thr);
    }
    let t0 = smp.first().map(|s| s.t).unwrap_or(0.0);
    let mut measure = 0.0;
    let mut lower = f64::INFINITY;
    for j in 1..smp.len() {
        if mask[j - 1] {
            measure += smp[j].t - smp[j - 1].t;
        }
        let s = smp[j].t;
        if s >= burn_in {
            lower = lower.min(measure / (s - t0));
        }
    }
    if !lower.is_finite() {
        return Err(LawError::EmptyWindow(burn_in));
    }
    Ok(DensityEstimate {
        lambda,
        lower_density: lower.clamp(0.0, 1.0),
        mask,
        undecided,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceVerdict {
    DivergingTrend,
    ConvergingTrend,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceConfig {
    /// The trend is read off `[fit_from * T, T]`.
    pub fit_from: f64,
    /// Growth exponent at or above which the trend counts as diverging.
    pub diverging_exponent: f64,
    /// Increment over the fit window below which the trend counts as converging.
    pub cauchy_tol: f64,
    /// Allowed quadrature error relative to `max(1, integral)`.
    pub quad_tol: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        DivergenceConfig {
            fit_from: 0.5,
            diverging_exponent: 0.5,
            cauchy_tol: 1e-3,
            quad_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralPoint {
    pub t: f64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    /// Partial integrals of `delta^2` from the first sample.
    pub partial: Vec<IntegralPoint>,
    pub quadrature_error: f64,
    /// Slope of `ln I(T)` against `ln T` over the fit window.
    pub growth_exponent: f64,
    /// `I(T_end) - I(fit_from * T_end)`.
    pub window_increment: f64,
    pub verdict: DivergenceVerdict,
}

/// Integral of `delta_t^2` over the grid.
///
/// Pairs of equal-width cells are integrated with Simpson's rule; the difference
/// to the trapezoid rule on the pair serves as the error estimate. Enclosure widths
/// of `delta` widen the result on top of that.
pub fn divergence_integral(
    traj: &SystoleTrajectory,
    cfg: &DivergenceConfig,
) -> Result<DivergenceReport> {
    let smp = &traj.samples;
    if smp.len() < 2 {
        return Err(LawError::EmptyWindow(smp.first().map_or(0.0, |s| s.t)));
    }
    let sq = |s: &TrajectorySample| -> (f64, f64, f64) {
        let (lo, hi) = (s.delta.lo, s.delta.hi);
        (
            (2.0 * lo).exp(),
            (2.0 * (0.5 * (lo + hi))).exp(),
            (2.0 * hi).exp(),
        )
    };
    let vals: Vec<(f64, f64, f64)> = smp.iter().map(sq).collect();
    let mut partial = vec![IntegralPoint {
        t: smp[0].t,
        value: 0.0,
        lo: 0.0,
        hi: 0.0,
    }];
    let (mut lo, mut mid, mut hi, mut err) = (0.0, 0.0, 0.0, 0.0);
    let mut j = 0;
    while j + 1 < smp.len() {
        let h1 = smp[j + 1].t - smp[j].t;
        let pair = j + 2 < smp.len() && ((smp[j + 2].t - smp[j + 1].t) - h1).abs() <= 1e-9 * h1;
        if pair {
            let (a, b, c) = (vals[j], vals[j + 1], vals[j + 2]);
            let simpson = |x: f64, y: f64, z: f64| h1 / 3.0 * (x + 4.0 * y + z);
            let s_mid = simpson(a.1, b.1, c.1);
            let trap = h1 * (0.5 * a.1 + b.1 + 0.5 * c.1);
            let e = (s_mid - trap).abs();
            err += e;
            mid += s_mid;
            lo += simpson(a.0, b.0, c.0).min(h1 * (0.5 * a.0 + b.0 + 0.5 * c.0));
            hi += simpson(a.2, b.2, c.2).max(h1 * (0.5 * a.2 + b.2 + 0.5 * c.2));
            j += 2;
        } else {
            let (a, b) = (vals[j], vals[j + 1]);
            mid += 0.5 * h1 * (a.1 + b.1);
            lo += 0.5 * h1 * (a.0 + b.0);
            hi += 0.5 * h1 * (a.2 + b.2);
            // a lone trapezoid cell: bound by the variation across the cell
            err += 0.5 * h1 * (b.1 - a.1).abs();
            j += 1;
        }
        partial.push(IntegralPoint {
            t: smp[j].t,
            value: mid,
            lo: lo.min(mid) - err,
            hi: hi.max(mid) + err,
        });
    }
    let total = partial.last().unwrap().value;
    if err > cfg.quad_tol * total.max(1.0) {
        return Err(LawError::Quadrature {
            err,
            tol: cfg.quad_tol * total.max(1.0),
        });
    }
    let t_end = partial.last().unwrap().t;
    let t_from = (cfg.fit_from * t_end).max(partial[0].t);
    let window: Vec<&IntegralPoint> = partial
        .iter()
        .filter(|p| p.t >= t_from && p.value > 0.0)
        .collect();
    let growth_exponent = fit_log_slope(window.iter().map(|p| (p.t, p.value)));
    let start_val = window.first().map_or(0.0, |p| p.value);
    let window_increment = total - start_val;
    let verdict = if growth_exponent >= cfg.diverging_exponent {
        DivergenceVerdict::DivergingTrend
    } else if window_increment < cfg.cauchy_tol {
        DivergenceVerdict::ConvergingTrend
    } else {
        DivergenceVerdict::Inconclusive
    };
    Ok(DivergenceReport {
        partial,
        quadrature_error: err,
        growth_exponent,
        window_increment,
        verdict,
    })
}

/// Least-squares slope of `ln y` against `ln x`. Needs `x, y > 0`; `NaN` for fewer than two points.
pub fn fit_log_slope(pts: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = pts.map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct GapCheck {
    pub s: f64,
    /// `|S ∩ [0, s]| / s`.
    pub density: f64,
    /// `∫_{S ∩ [0, s]} t^{2c - 1} dt`.
    pub integral: f64,
    /// `(s^{2c} / 2c) (1 - (1 - d)^{2c})` with `d = density - slack`.
    pub lower_bound: f64,
    pub holds: bool,
}

/// Checks the lower bound for `∫_S t^{2c-1}` at each checkpoint `s`.
///
/// The mask assigns each grid cell `[t_j, t_{j+1})` the membership of its left endpoint.
/// Times before the first sample count as outside the set.
pub fn gap_chain(
    traj: &SystoleTrajectory,
    mask: &[bool],
    c: f64,
    slack: f64,
    checkpoints: &[f64],
) -> Result<Vec<GapCheck>> {
    if !(c > 0.0 && c <= 0.5) {
        return Err(LawError::BadExponent(c));
    }
    let e = 2.0 * c;
    let prim = |t: f64| t.max(0.0).powf(e) / e;
    let smp = &traj.samples;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &s in checkpoints {
        let (mut measure, mut integral) = (0.0, 0.0);
        for j in 0..smp.len().saturating_sub(1) {
            let (a, b) = (smp[j].t.max(0.0), smp[j + 1].t.min(s));
            if !mask[j] || b <= a {
                continue;
            }
            measure += b - a;
            integral += prim(b) - prim(a);
        }
        let density = measure / s;
        let d = (density - slack).max(0.0);
        let lower_bound = s.powf(e) / e * (1.0 - (1.0 - d).powf(e));
        let holds = integral >= lower_bound * (1.0 - 1e-12);
        out.push(GapCheck {
            s,
            density,
            integral,
            lower_bound,
            holds,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceBoundConfig {
    pub k2: f64,
    /// Samples before `t0` are excluded from the limsup.
    pub t0: f64,
}

impl Default for DistanceBoundConfig {
    fn default() -> Self {
        DistanceBoundConfig { k2: 0.0, t0: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistancePoint {
    pub t: f64,
    pub bound: f64,
    /// `bound / ln t`; `NaN` for `t <= 1`.
    pub ratio: f64,
    /// False when `delta^s >= 1`, where the separating term is not defined and is dropped.
    pub sep_term_defined: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceSeries {
    pub points: Vec<DistancePoint>,
    /// Max ratio over samples with `t >= max(t0, e)`.
    pub limsup_ratio: f64,
    pub sep_undefined: usize,
}

/// `max{(1/2) ln(-ln delta^s), -ln delta^{not s}} + K_2` along the trajectory.
pub fn distance_bound_series(
    traj: &SystoleTrajectory,
    cfg: &DistanceBoundConfig,
) -> Result<DistanceSeries> {
    let mut points = Vec::with_capacity(traj.samples.len());
    let mut sep_undefined = 0;
    for s in &traj.samples {
        let (Some(ds), Some(dn)) = (s.delta_sep, s.delta_nonsep) else {
            return Err(LawError::NoSplit);
        };
        let ln_s = ds.mid();
        let nonsep_term = -dn.mid();
        let sep_term_defined = ln_s < 0.0;
        let bound = if sep_term_defined {
            (0.5 * (-ln_s).ln()).max(nonsep_term)
        } else {
            nonsep_term
        } + cfg.k2;
        if !sep_term_defined && s.t >= cfg.t0 {
            sep_undefined += 1;
        }
        let ratio = if s.t > 1.0 {
            bound / s.t.ln()
        } else {
            f64::NAN
        };
        points.push(DistancePoint {
            t: s.t,
            bound,
            ratio,
            sep_term_defined,
        });
    }
    let from = cfg.t0.max(std::f64::consts::E);
    let limsup_ratio = points
        .iter()
        .filter(|p| p.t >= from)
        .map(|p| p.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    if !limsup_ratio.is_finite() {
        return Err(LawError::EmptyWindow(from));
    }
    Ok(DistanceSeries {
        points,
        limsup_ratio,
        sep_undefined,
    })
}

/// Summary in the shape written by the `laws` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub limsup_ratio: f64,
    pub limsup_ratio_grid: f64,
    pub limsup_ratio_min_times: Option<f64>,
    pub limsup_distance_ratio: Option<f64>,
    pub density: std::collections::BTreeMap<String, f64>,
    pub integral: Vec<[f64; 3]>,
    pub growth_exponent: f64,
    pub verdict: DivergenceVerdict,
}

pub struct LawInputs<'a> {
    pub lambdas: &'a [f64],
    pub burn_in: f64,
    pub divergence: &'a DivergenceConfig,
    pub distance: &'a DistanceBoundConfig,
}

pub fn law_report(traj: &SystoleTrajectory, inp: &LawInputs) -> Result<LawReport> {
    let stats = loglaw_stats(traj, inp.lambdas, inp.burn_in)?;
    let div = divergence_integral(traj, inp.divergence)?;
    let dist = match distance_bound_series(traj, inp.distance) {
        Ok(d) => Some(d.limsup_ratio),
        Err(LawError::NoSplit) => None,
        Err(e) => return Err(e),
    };
    Ok(LawReport {
        limsup_ratio: stats.limsup,
        limsup_ratio_grid: stats.limsup_grid,
        limsup_ratio_min_times: stats.limsup_min_times,
        limsup_distance_ratio: dist,
        density: stats
            .density
            .iter()
            .map(|d| (format!("{}", d.lambda), d.lower_density))
            .collect(),
        integral: div.partial.iter().map(|p| [p.t, p.lo, p.hi]).collect(),
        growth_exponent: div.growth_exponent,
        verdict: div.verdict,
    })
}
