//! The vertical flow of the slit surface as a two-sheet skew product over a rotation.
//!
//! Points of the return circle are residues modulo `D`. The rotation number is a
//! convergent `p_K / q_K` of `alpha` and `D = q_K * 2^32`, so orbits are exact and
//! reproducible while staying within `n / (q_K q_{K+1})` of the irrational orbit.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::surface::{SlitTorusSurface, SurfaceMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("surface has no slit")]
    NoSlit,
    #[error("slit enclosure wider than the simulation grid")]
    SlitTooWide,
    #[error("no convergent keeps {steps} steps within tolerance below 2^90")]
    NoSurrogate { steps: u64 },
    #[error("orbit hit a slit endpoint at step {step}")]
    Singular { step: u64 },
    #[error("need at least two starts covering both sheets")]
    BadStarts,
    #[error("parameter out of range: {0}")]
    BadParameter(&'static str),
    #[error("flow line hits a cone point at time {time}")]
    ConePoint { time: f64 },
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// Orbit error allowed for the rational surrogate of the rotation.
pub const SURROGATE_TOL: f64 = 1e-12;
const GUARD_BITS: u32 = 32;

/// `(x, sheet) -> (x + a mod D, sheet xor [x + a mod D in slit])`.
#[derive(Clone, Debug, Serialize)]
pub struct TwoSheetIET {
    denom: u128,
    a: u128,
    x0: u128,
    s: u128,
    /// Index of the convergent used for `alpha`, if any.
    pub convergent_index: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitState {
    /// Position as a residue modulo the circle denominator.
    pub raw: u128,
    pub sheet: u8,
    pub step: u64,
}

impl TwoSheetIET {
    /// Exact map on `Z / denom`: rotation by `a`, slit `[x0, x0 + s)`.
    pub fn from_raw(denom: u128, a: u128, x0: u128, s: u128) -> Result<Self> {
        if !(2..=1u128 << 126).contains(&denom) {
            return Err(FlowError::BadParameter("denominator"));
        }
        if a >= denom || x0 >= denom || s == 0 || s >= denom {
            return Err(FlowError::BadParameter("rotation or slit"));
        }
        Ok(TwoSheetIET {
            denom,
            a,
            x0,
            s,
            convergent_index: None,
        })
    }

    /// Rotation and slit rounded to the grid `2^-60`.
    pub fn from_f64(alpha: f64, slit: f64, x0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) || !(slit > 0.0 && slit < 1.0) || !(0.0..1.0).contains(&x0)
        {
            return Err(FlowError::BadParameter(
                "alpha, slit and x0 must lie in [0, 1)",
            ));
        }
        let d = 1u128 << 60;
        let r = |v: f64| (v * d as f64).round() as u128 % d;
        TwoSheetIET::from_raw(d, r(alpha), r(x0), r(slit))
    }

    pub fn denom(&self) -> u128 {
        self.denom
    }

    pub fn alpha(&self) -> f64 {
        self.a as f64 / self.denom as f64
    }

    pub fn slit(&self) -> (f64, f64) {
        let d = self.denom as f64;
        (self.x0 as f64 / d, (self.x0 + self.s) as f64 / d)
    }

    /// Rotation and slit `(x0, s)` as residues.
    pub fn raw_parts(&self) -> (u128, u128, u128) {
        (self.a, self.x0, self.s)
    }

    pub fn slit_length(&self) -> f64 {
        self.s as f64 / self.denom as f64
    }

    pub fn raw_of(&self, x: f64) -> u128 {
        let d = self.denom as f64;
        ((x.rem_euclid(1.0) * d) as u128).min(self.denom - 1)
    }

    pub fn to_f64(&self, raw: u128) -> f64 {
        raw as f64 / self.denom as f64
    }

    pub fn state(&self, x: f64, sheet: u8) -> OrbitState {
        OrbitState {
            raw: self.raw_of(x),
            sheet: sheet & 1,
            step: 0,
        }
    }

    fn in_slit(&self, y: u128) -> bool {
        let off = if y >= self.x0 {
            y - self.x0
        } else {
            y + self.denom - self.x0
        };
        off < self.s
    }

    fn on_endpoint(&self, y: u128) -> bool {
        y == self.x0 || y == (self.x0 + self.s) % self.denom
    }

    pub fn step(&self, st: &OrbitState) -> Result<OrbitState> {
        let mut y = st.raw + self.a;
        if y >= self.denom {
            y -= self.denom;
        }
        if self.on_endpoint(y) {
            return Err(FlowError::Singular { step: st.step + 1 });
        }
        let flip = self.in_slit(y) as u8;
        Ok(OrbitState {
            raw: y,
            sheet: st.sheet ^ flip,
            step: st.step + 1,
        })
    }

    pub fn step_back(&self, st: &OrbitState) -> Result<OrbitState> {
        if self.on_endpoint(st.raw) {
            return Err(FlowError::Singular { step: st.step });
        }
        let flip = self.in_slit(st.raw) as u8;
        let y = if st.raw >= self.a {
            st.raw - self.a
        } else {
            st.raw + self.denom - self.a
        };
        Ok(OrbitState {
            raw: y,
            sheet: st.sheet ^ flip,
            step: st.step.saturating_sub(1),
        })
    }

    pub fn iterate(&self, st: &OrbitState, n: u64) -> Result<OrbitState> {
        let mut s = *st;
        for _ in 0..n {
            s = self.step(&s)?;
        }
        Ok(s)
    }
}

/// Skew product for the vertical flow of `surface`, valid for orbits of up to `max_steps`.
pub fn build_skew_product(surface: &SlitTorusSurface, max_steps: u64) -> Result<TwoSheetIET> {
    if surface.mode() != SurfaceMode::Slit {
        return Err(FlowError::NoSlit);
    }
    let slit = surface.slit().ok_or(FlowError::NoSlit)?;
    let t = surface.table();
    let cap = BigInt::one() << 90u32;
    let mut chosen = None;
    for k in 1..t.num_quotients() {
        if t.q(k) >= &cap {
            break;
        }
        let prod = (t.q(k) * t.q(k + 1)).to_f64().unwrap_or(f64::INFINITY);
        if max_steps as f64 / prod < SURROGATE_TOL {
            chosen = Some(k);
            break;
        }
    }
    let k = chosen.ok_or(FlowError::NoSurrogate { steps: max_steps })?;
    let q = t.q(k).to_u128().unwrap();
    let p = t.p(k).to_u128().unwrap();
    let denom = q << GUARD_BITS;
    let a = (p % q) << GUARD_BITS;
    let s = round_to_grid(slit, denom)?;
    let mut iet = TwoSheetIET::from_raw(denom, a, 0, s)?;
    iet.convergent_index = Some(k);
    Ok(iet)
}

fn round_to_grid(s: &Interval, denom: u128) -> Result<u128> {
    let d = BigInt::from(denom);
    let lo = s.lo().mul_int(&d).floor();
    let hi = s.hi().mul_int(&d).floor();
    if &hi - &lo > BigInt::one() {
        return Err(FlowError::SlitTooWide);
    }
    s.mid()
        .mul_int(&d)
        .floor()
        .to_u128()
        .ok_or(FlowError::SlitTooWide)
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffResult {
    pub start: OrbitState,
    /// Mean of `[sheet = 1]` over the states after steps `1..=n`.
    pub average: f64,
    /// `(n, average)` at powers of two and at the final step.
    pub checkpoints: Vec<(u64, f64)>,
    /// Fraction of steps that flipped the sheet.
    pub flip_frequency: f64,
    pub end: OrbitState,
}

pub fn birkhoff_average(iet: &TwoSheetIET, start: &OrbitState, n: u64) -> Result<BirkhoffResult> {
    if n == 0 {
        return Err(FlowError::BadParameter("n must be positive"));
    }
    let mut st = *start;
    let (mut ones, mut flips) = (0u64, 0u64);
    let mut checkpoints = Vec::new();
    let mut next_cp = 1u64;
    for i in 1..=n {
        let nx = iet.step(&st)?;
        flips += (nx.sheet != st.sheet) as u64;
        st = nx;
        ones += st.sheet as u64;
        if i == next_cp || i == n {
            checkpoints.push((i, ones as f64 / i as f64));
            if i == next_cp {
                next_cp = next_cp.saturating_mul(2);
            }
        }
    }
    Ok(BirkhoffResult {
        start: *start,
        average: ones as f64 / n as f64,
        checkpoints,
        flip_frequency: flips as f64 / n as f64,
        end: st,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Checkpoints below this are not judged.
    pub n_min: u64,
    /// Gap above which every judged checkpoint must stay for the non-ergodic signature.
    pub nonergodic_gap: f64,
    /// Gap the final checkpoint must fall below for the ergodic signature.
    pub ergodic_gap: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            n_min: 10_000,
            nonergodic_gap: 0.5,
            ergodic_gap: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    NonErgodicSignature,
    ErgodicSignature,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub runs: Vec<BirkhoffResult>,
    /// `(n, max - min of averages across starts)`.
    pub gaps: Vec<(u64, f64)>,
    pub verdict: ProbeVerdict,
}

/// Birkhoff averages from several starts and their spread.
pub fn ergodicity_probe(
    iet: &TwoSheetIET,
    starts: &[OrbitState],
    n: u64,
    cfg: &ProbeConfig,
) -> Result<ProbeReport> {
    if starts.len() < 2
        || !starts.iter().any(|s| s.sheet == 0)
        || !starts.iter().any(|s| s.sheet == 1)
    {
        return Err(FlowError::BadStarts);
    }
    let runs: Vec<BirkhoffResult> = starts
        .par_iter()
        .map(|s| birkhoff_average(iet, s, n))
        .collect::<Result<_>>()?;
    let gaps: Vec<(u64, f64)> = (0..runs[0].checkpoints.len())
        .map(|i| {
            let vals = runs.iter().map(|r| r.checkpoints[i].1);
            let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.fold(f64::INFINITY, f64::min);
            (runs[0].checkpoints[i].0, hi - lo)
        })
        .collect();
    let judged: Vec<f64> = gaps
        .iter()
        .filter(|g| g.0 >= cfg.n_min)
        .map(|g| g.1)
        .collect();
    let verdict = if judged.is_empty() {
        ProbeVerdict::Inconclusive
    } else if judged.iter().all(|&g| g > cfg.nonergodic_gap) {
        ProbeVerdict::NonErgodicSignature
    } else if *judged.last().unwrap() < cfg.ergodic_gap {
        ProbeVerdict::ErgodicSignature
    } else {
        ProbeVerdict::Inconclusive
    };
    Ok(ProbeReport {
        runs,
        gaps,
        verdict,
    })
}

/// A point on the slit surface: sheet, and coordinates in the unit square of the torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub sheet: u8,
    pub x: f64,
    pub y: f64,
}

/// Straight-line vertical flow for time `time` from `p`, in f64.
///
/// Crossing the top edge maps `(x, 1)` to `(x + alpha, 0)`; arriving at height 0 inside
/// the slit swaps the sheet. The `j`-th crossing lands at `frac(x + j alpha)`, evaluated
/// directly rather than accumulated.
pub fn flow_oracle(
    alpha: f64,
    slit: (f64, f64),
    p: SurfacePoint,
    time: f64,
    cone_tol: f64,
) -> Result<SurfacePoint> {
    if !(time >= 0.0) || !(0.0..1.0).contains(&p.y) {
        return Err(FlowError::BadParameter(
            "time must be non-negative and y in [0, 1)",
        ));
    }
    let (lo, hi) = slit;
    let mut sheet = p.sheet & 1;
    let mut x = p.x;
    let first = 1.0 - p.y;
    if time < first {
        return Ok(SurfacePoint {
            sheet,
            x,
            y: p.y + time,
        });
    }
    let crossings = ((time - first).floor() as u64) + 1;
    for j in 1..=crossings {
        x = (p.x + j as f64 * alpha).rem_euclid(1.0);
        let near = |e: f64| {
            let d = (x - e).rem_euclid(1.0);
            d.min(1.0 - d) <= cone_tol
        };
        if near(lo) || near(hi) {
            return Err(FlowError::ConePoint {
                time: first + (j - 1) as f64,
            });
        }
        let off = (x - lo).rem_euclid(1.0);
        if off < hi - lo {
            sheet ^= 1;
        }
    }
    let y = time - first - (crossings - 1) as f64;
    Ok(SurfacePoint { sheet, x, y })
}
