//! The two-sheeted slit torus, its candidate short curves, and systole trajectories.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::holonomy::{
    envelope_of, flow_length, min_length_time, FlowTime, Holonomy, HolonomyError,
};
use crate::interval::{Dyadic, Interval, LogInterval, Round};
use crate::number_theory::{
    build_table_for_tails, slit_tail_sum, AlphaSpec, ConvergentTable, NumberTheoryError,
    TableOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error(transparent)]
    NumberTheory(#[from] NumberTheoryError),
    #[error(transparent)]
    Holonomy(#[from] HolonomyError),
    #[error("rotation number must be irrational (infinite expansion)")]
    RationalAlpha,
    #[error("slit length {0} is not known to be below 1")]
    SlitTooLong(String),
    #[error("time {t} beyond candidate coverage (max {t_max})")]
    CoverageExceeded { t: f64, t_max: f64 },
    #[error("search box holds {needed} points, above the cap of {cap}")]
    SearchBoxOverflow { needed: u128, cap: u128 },
    #[error("empty or non-increasing time grid")]
    BadGrid,
}

pub type Result<T> = std::result::Result<T, SurfaceError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceMode {
    /// The flat torus with one marked point; no slit.
    Torus,
    /// Two tori glued along the slit of length `S_1`.
    Slit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Cylinder,
    CylinderDouble,
    Slit,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cylinder => "cylinder",
            Family::CylinderDouble => "cylinder-double",
            Family::Slit => "slit",
        }
    }

    pub fn separating(&self) -> bool {
        matches!(self, Family::Slit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CandidateId {
    pub family: Family,
    pub k: i64,
}

#[derive(Clone, Debug)]
pub struct CurveCandidate {
    pub id: CandidateId,
    pub holonomy: Holonomy,
}

impl CurveCandidate {
    pub fn separating(&self) -> bool {
        self.id.family.separating()
    }
}

#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct SurfaceOptions {
    pub mode: SurfaceMode,
    pub k_max: usize,
    pub unit_area: bool,
    pub table: TableOptions,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        SurfaceOptions {
            mode: SurfaceMode::Slit,
            k_max: 40,
            unit_area: false,
            table: TableOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SlitTorusSurface {
    spec: AlphaSpec,
    opts: SurfaceOptions,
    table: ConvergentTable,
    slit: Option<Interval>,
    /// True when the slit length was supplied directly instead of `S_1`.
    custom_slit: bool,
}

pub fn build_surface(spec: &AlphaSpec, opts: &SurfaceOptions) -> Result<SlitTorusSurface> {
    if !spec.is_infinite() {
        return Err(SurfaceError::RationalAlpha);
    }
    let table = build_table_for_tails(spec, opts.k_max, &opts.table)?;
    let slit = match opts.mode {
        SurfaceMode::Torus => None,
        SurfaceMode::Slit => {
            let s = slit_tail_sum(&table, 1)?;
            if s.hi() >= &Dyadic::from_int(1) {
                return Err(SurfaceError::SlitTooLong(s.to_string()));
            }
            Some(s)
        }
    };
    Ok(SlitTorusSurface {
        spec: spec.clone(),
        opts: opts.clone(),
        table,
        slit,
        custom_slit: false,
    })
}

impl SlitTorusSurface {
    /// A slit surface with an arbitrary slit length in `(0, 1)`, for test batteries.
    pub fn with_slit_length(spec: &AlphaSpec, opts: &SurfaceOptions, slit: f64) -> Result<Self> {
        if !(slit > 0.0 && slit < 1.0) {
            return Err(SurfaceError::SlitTooLong(slit.to_string()));
        }
        let mut o = opts.clone();
        o.mode = SurfaceMode::Torus;
        let mut s = build_surface(spec, &o)?;
        s.opts.mode = SurfaceMode::Slit;
        s.slit = Some(Interval::from_f64(slit).unwrap());
        s.custom_slit = true;
        Ok(s)
    }

    pub fn spec(&self) -> &AlphaSpec {
        &self.spec
    }

    pub fn options(&self) -> &SurfaceOptions {
        &self.opts
    }

    pub fn mode(&self) -> SurfaceMode {
        self.opts.mode
    }

    pub fn k_max(&self) -> usize {
        self.opts.k_max
    }

    pub fn table(&self) -> &ConvergentTable {
        &self.table
    }

    pub fn slit(&self) -> Option<&Interval> {
        self.slit.as_ref()
    }

    pub fn custom_slit(&self) -> bool {
        self.custom_slit
    }

    pub fn alpha_f64(&self) -> f64 {
        self.table.alpha().mid_f64()
    }

    pub fn slit_f64(&self) -> Option<f64> {
        self.slit.as_ref().map(|s| s.mid_f64())
    }

    /// Raw flat area: 1 for the torus, 2 for the slit surface.
    pub fn area(&self) -> f64 {
        match self.opts.mode {
            SurfaceMode::Torus => 1.0,
            SurfaceMode::Slit => 2.0,
        }
    }

    /// Added to every log-length when lengths are reported at unit area.
    pub fn ln_scale(&self) -> f64 {
        if self.opts.unit_area {
            -0.5 * self.area().ln()
        } else {
            0.0
        }
    }

    /// Largest time for which candidates omitted beyond `k_max` have length at least 1 (raw units).
    pub fn coverage_limit(&self) -> f64 {
        let k = self.opts.k_max;
        let ln_q = |i: usize| Interval::from_int(self.table.q(i).clone()).ln().lo;
        let cyl = ln_q(k + 1);
        match self.opts.mode {
            SurfaceMode::Torus => cyl,
            SurfaceMode::Slit if self.custom_slit => cyl,
            SurfaceMode::Slit => cyl.min(std::f64::consts::LN_2 + ln_q(k)),
        }
    }

    pub fn descriptor(&self) -> SurfaceDescriptor {
        let (slit_lower, slit_upper) = match &self.slit {
            Some(s) => (
                Some(s.lo().to_sci_string(20, Round::Down)),
                Some(s.hi().to_sci_string(20, Round::Up)),
            ),
            None => (None, None),
        };
        SurfaceDescriptor {
            alpha: self.spec.clone(),
            mode: self.opts.mode,
            k_max: self.opts.k_max,
            table_depth: self.table.depth(),
            precision_bits: self.table.precision(),
            unit_area: self.opts.unit_area,
            area: self.area(),
            alpha_lower: self.table.alpha().lo().to_sci_string(20, Round::Down),
            alpha_upper: self.table.alpha().hi().to_sci_string(20, Round::Up),
            slit_lower,
            slit_upper,
            quotients_head: self.table.quotients().iter().take(12).copied().collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceDescriptor {
    pub alpha: AlphaSpec,
    pub mode: SurfaceMode,
    pub k_max: usize,
    pub table_depth: usize,
    pub precision_bits: u32,
    pub unit_area: bool,
    pub area: f64,
    pub alpha_lower: String,
    pub alpha_upper: String,
    pub slit_lower: Option<String>,
    pub slit_upper: Option<String>,
    pub quotients_head: Vec<u64>,
}

/// Candidate curves ordered by `(family, k)`.
pub fn enumerate_candidates(surface: &SlitTorusSurface) -> Result<Vec<CurveCandidate>> {
    let t = &surface.table;
    let k_max = surface.opts.k_max;
    let prec = t.precision();
    let mut out = Vec::new();
    let cyl = |k: i64, scale: i64| -> Result<Holonomy> {
        let s = BigInt::from(scale);
        if k < 0 {
            Ok(Holonomy::new(Interval::from_int(s), Interval::zero())?)
        } else {
            let k = k as usize;
            Ok(Holonomy::new(
                t.beta(k).mul_int(&s, prec),
                Interval::from_int(t.q(k) * &s),
            )?)
        }
    };
    let mut families = vec![Family::Cylinder];
    if surface.opts.mode == SurfaceMode::Slit {
        families.push(Family::CylinderDouble);
    }
    for fam in families {
        let scale = if fam == Family::Cylinder { 1 } else { 2 };
        for k in -1..=k_max as i64 {
            out.push(CurveCandidate {
                id: CandidateId { family: fam, k },
                holonomy: cyl(k, scale)?,
            });
        }
    }
    if surface.opts.mode == SurfaceMode::Slit {
        if surface.custom_slit {
            let s = surface.slit.clone().unwrap();
            out.push(CurveCandidate {
                id: CandidateId {
                    family: Family::Slit,
                    k: 1,
                },
                holonomy: Holonomy::new(s, Interval::zero())?,
            });
        } else {
            let mut qsum = BigInt::zero();
            for k in 1..=k_max {
                if k >= 2 {
                    qsum += t.q(k - 1);
                }
                let h = slit_tail_sum(t, k)?;
                let v = Interval::from_int(&qsum * 2);
                out.push(CurveCandidate {
                    id: CandidateId {
                        family: Family::Slit,
                        k: k as i64,
                    },
                    holonomy: Holonomy::new(h, v)?,
                });
            }
        }
    }
    Ok(out)
}

/// A vector between marked points: `(m - v alpha + shift, v)`.
#[derive(Clone, Debug)]
pub struct LatticeVector {
    /// Signed horizontal component.
    pub h: Interval,
    pub v: i64,
    pub m: i64,
    /// `0` for lattice vectors, `+1`/`-1` for vectors from P to Q / Q to P.
    pub shift: i8,
}

impl LatticeVector {
    pub fn holonomy(&self) -> Holonomy {
        Holonomy::new(self.h.clone(), Interval::from_int(self.v)).expect("nonzero")
    }
}

/// All vectors `(m - v alpha + shift * s, v)` with `g_t`-length at most `bound`, one per sign class.
///
/// `slit = None` gives the lattice of the torus alone.
pub fn brute_force_lattice_vectors(
    alpha: &Interval,
    slit: Option<&Interval>,
    bound: f64,
    t: FlowTime,
    max_points: u128,
    prec: u32,
) -> Result<Vec<LatticeVector>> {
    let vmax = (bound * t.exp()).floor();
    let hmax = bound * (-t).exp();
    let shifts: &[i8] = if slit.is_some() { &[0, 1, -1] } else { &[0] };
    let needed = (vmax as u128 + 1) * shifts.len() as u128 * (2 * hmax.ceil() as u128 + 3);
    if !vmax.is_finite() || needed > max_points {
        return Err(SurfaceError::SearchBoxOverflow {
            needed,
            cap: max_points,
        });
    }
    let a = alpha.mid_f64();
    let s_f = slit.map(|s| s.mid_f64()).unwrap_or(0.0);
    let ln_bound = bound.ln();
    let mut out: Vec<LatticeVector> = Vec::new();
    for v in 0..=vmax as i64 {
        for &sh in shifts {
            let center = v as f64 * a - sh as f64 * s_f;
            let lo = (center - hmax).floor() as i64 - 1;
            let hi = (center + hmax).ceil() as i64 + 1;
            for m in lo..=hi {
                let mut h = Interval::from_int(m).sub(&alpha.mul_int(&BigInt::from(v), prec), prec);
                if let Some(s) = slit {
                    match sh {
                        1 => h = h.add(s, prec),
                        -1 => h = h.sub(s, prec),
                        _ => {}
                    }
                }
                if v == 0 && !h.lo().is_positive() {
                    continue;
                }
                let Ok(hol) = Holonomy::new(h.clone(), Interval::from_int(v)) else {
                    continue;
                };
                if flow_length(&hol, t).lo > ln_bound {
                    continue;
                }
                if out
                    .iter()
                    .any(|w| w.v == v && w.h.try_cmp(&h) == Some(std::cmp::Ordering::Equal))
                {
                    continue;
                }
                out.push(LatticeVector { h, v, m, shift: sh });
            }
        }
    }
    Ok(out)
}

/// Brute-force short vectors of the surface at time `t`.
pub fn brute_force_saddle_connections(
    surface: &SlitTorusSurface,
    bound: f64,
    t: FlowTime,
    max_points: u128,
) -> Result<Vec<LatticeVector>> {
    brute_force_lattice_vectors(
        surface.table.alpha(),
        surface.slit.as_ref(),
        bound,
        t,
        max_points,
        surface.table.precision(),
    )
}

/// One sample of the systole trajectory. Lengths are log-enclosures in reporting units.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySample {
    pub t: FlowTime,
    pub delta: LogInterval,
    pub delta_sep: Option<LogInterval>,
    pub delta_nonsep: Option<LogInterval>,
    pub argmin: Option<CandidateId>,
    pub argmin_sep: Option<CandidateId>,
    pub argmin_nonsep: Option<CandidateId>,
    /// False when the argmin enclosure overlaps another candidate.
    pub decisive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystoleTrajectory {
    pub samples: Vec<TrajectorySample>,
    /// Samples at candidate minimum times that fall inside the grid range.
    pub min_time_samples: Vec<TrajectorySample>,
    pub unit_area: bool,
}

impl SystoleTrajectory {
    /// A trajectory from explicit length functions, for testing law analysis.
    pub fn synthetic<F, G, H>(times: &[f64], delta: F, sep: Option<G>, nonsep: Option<H>) -> Self
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
        H: Fn(f64) -> f64,
    {
        let samples = times
            .iter()
            .map(|&t| TrajectorySample {
                t,
                delta: LogInterval::of_value(delta(t)),
                delta_sep: sep.as_ref().map(|f| LogInterval::of_value(f(t))),
                delta_nonsep: nonsep.as_ref().map(|f| LogInterval::of_value(f(t))),
                argmin: None,
                argmin_sep: None,
                argmin_nonsep: None,
                decisive: true,
            })
            .collect();
        SystoleTrajectory {
            samples,
            min_time_samples: Vec::new(),
            unit_area: false,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Uniform grid `start, start + step, ..., <= end`.
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn sample_at(cands: &[CurveCandidate], t: f64, scale: f64) -> TrajectorySample {
    let ls: Vec<LogInterval> = cands
        .iter()
        .map(|c| flow_length(&c.holonomy, t).shift(scale))
        .collect();
    let split = |sep: bool| -> Option<(LogInterval, CandidateId)> {
        let idx: Vec<usize> = (0..cands.len())
            .filter(|&i| cands[i].separating() == sep)
            .collect();
        let sub: Vec<LogInterval> = idx.iter().map(|&i| ls[i]).collect();
        envelope_of(&sub).map(|e| (e.ln_length, cands[idx[e.argmin]].id))
    };
    let all = envelope_of(&ls).expect("non-empty candidate list");
    let sep = split(true);
    let nonsep = split(false);
    TrajectorySample {
        t,
        delta: all.ln_length,
        delta_sep: sep.map(|x| x.0),
        delta_nonsep: nonsep.map(|x| x.0),
        argmin: Some(cands[all.argmin].id),
        argmin_sep: sep.map(|x| x.1),
        argmin_nonsep: nonsep.map(|x| x.1),
        decisive: all.decisive,
    }
}

/// Evaluates the candidate envelope on `grid` and at every candidate minimum time inside it.
pub fn systole_trajectory(surface: &SlitTorusSurface, grid: &[f64]) -> Result<SystoleTrajectory> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SurfaceError::BadGrid);
    }
    let (t0, t1) = (grid[0], *grid.last().unwrap());
    let limit = surface.coverage_limit();
    if t1 > limit {
        return Err(SurfaceError::CoverageExceeded {
            t: t1,
            t_max: limit,
        });
    }
    let cands = enumerate_candidates(surface)?;
    let scale = surface.ln_scale();
    let samples: Vec<_> = grid
        .par_iter()
        .map(|&t| sample_at(&cands, t, scale))
        .collect();
    let mut times: Vec<f64> = cands
        .iter()
        .filter_map(|c| min_length_time(&c.holonomy).ok())
        .map(|m| m.t_star)
        .filter(|&t| t >= t0 && t <= t1)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let min_time_samples = times
        .par_iter()
        .map(|&t| sample_at(&cands, t, scale))
        .collect();
    Ok(SystoleTrajectory {
        samples,
        min_time_samples,
        unit_area: surface.opts.unit_area,
    })
}

/// `ln q_k` as f64, for convenience in reports.
pub fn ln_q(table: &ConvergentTable, k: usize) -> f64 {
    let q = table.q(k);
    match q.to_f64() {
        Some(x) if x.is_finite() => x.ln(),
        _ => Interval::from_int(q.clone()).ln().mid(),
    }
}
