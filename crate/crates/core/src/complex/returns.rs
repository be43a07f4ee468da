//! First-return data of the vertical flow to the inward boundary of a strip complex.

use serde::Serialize;
use thiserror::Error;

use super::cell::Complex;
use super::geometry::{ConePoint, Kind};
use crate::flow::{FlowError, OrbitState, TwoSheetIET};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReturnError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("return data needs a complex whose interior is a union of strips")]
    Unsupported,
    #[error("no boundary edge flows into the interior")]
    NoInwardBoundary,
    #[error("slit must start at 0 on the simulation circle")]
    ShiftedSlit,
    #[error("orbit did not close within {0} steps")]
    TimeCap(u64),
    #[error("continuity interval of width {0} is too narrow for the grid")]
    Degenerate(u128),
}

/// Inward boundary piece: states `(x, sheet)` with `lo < x < hi` on the residue circle.
#[derive(Clone, Debug, Serialize)]
pub struct Segment {
    pub edge: usize,
    pub sheet: u8,
    pub lo: u128,
    pub hi: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Discontinuity {
    pub segment: usize,
    pub raw: u128,
    /// Horizontal coordinate on the flowed surface.
    pub x: f64,
    /// Steps until the forward orbit meets the cone point.
    pub hit_steps: u64,
    /// The same time on the flowed surface.
    pub hit_time: f64,
    pub cone: ConePoint,
    pub endpoint: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnInterval {
    pub segment: usize,
    /// Indices into the discontinuity list.
    pub left: usize,
    pub right: usize,
    pub return_steps: u64,
    /// First time the orbit meets the boundary or leaves the complex.
    pub leave_steps: u64,
    pub leave_time: f64,
    pub return_sheet: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnData {
    pub segments: Vec<Segment>,
    pub discontinuities: Vec<Discontinuity>,
    pub intervals: Vec<ReturnInterval>,
    /// Vertical unit of the flowed surface per step.
    pub time_scale: f64,
    /// Horizontal unit of the flowed surface per unit of the circle.
    pub x_scale: f64,
    #[serde(skip)]
    rotation: u128,
    #[serde(skip)]
    denom: u128,
}

impl ReturnData {
    /// One segment `[0, 1]` cut into intervals of equal width with the given leaving
    /// times; `hits` gives the hitting times of the interior discontinuities.
    pub fn synthetic(leaves: &[f64], hits: &[f64]) -> Self {
        let n = leaves.len().max(1);
        let denom = 1u128 << 60;
        let cone = |k: usize| {
            if k.is_multiple_of(2) {
                ConePoint::P
            } else {
                ConePoint::Q
            }
        };
        let discontinuities = (0..=n)
            .map(|k| {
                let endpoint = k == 0 || k == n;
                let hit_time = if endpoint {
                    0.0
                } else {
                    hits.get(k - 1).copied().unwrap_or(0.0)
                };
                Discontinuity {
                    segment: 0,
                    raw: denom / n as u128 * k as u128,
                    x: k as f64 / n as f64,
                    hit_steps: hit_time.round() as u64,
                    hit_time,
                    cone: cone(k),
                    endpoint,
                }
            })
            .collect();
        let intervals = leaves
            .iter()
            .enumerate()
            .map(|(k, &l)| ReturnInterval {
                segment: 0,
                left: k,
                right: k + 1,
                return_steps: l.ceil() as u64,
                leave_steps: l.round() as u64,
                leave_time: l,
                return_sheet: 0,
            })
            .collect();
        ReturnData {
            segments: vec![Segment {
                edge: 0,
                sheet: 0,
                lo: 0,
                hi: denom,
            }],
            discontinuities,
            intervals,
            time_scale: 1.0,
            x_scale: 1.0,
            rotation: 0,
            denom,
        }
    }

    /// Number of discontinuities, segment endpoints included.
    pub fn d(&self) -> usize {
        self.discontinuities.len()
    }

    pub fn hit_times(&self) -> Vec<f64> {
        self.discontinuities.iter().map(|d| d.hit_time).collect()
    }

    pub fn leave_times(&self) -> Vec<f64> {
        self.intervals.iter().map(|i| i.leave_time).collect()
    }

    pub fn max_leave_time(&self) -> f64 {
        self.leave_times().into_iter().fold(0.0, f64::max)
    }

    /// Limit of the return map at a discontinuity from one side: `(residue, sheet)`.
    pub fn image(&self, interval: usize, disc: usize) -> (u128, u8) {
        let iv = &self.intervals[interval];
        let p = self.discontinuities[disc].raw;
        let shift = (iv.return_steps as u128 % self.denom) * self.rotation % self.denom;
        ((p + shift) % self.denom, iv.return_sheet)
    }

    /// Intervals to the left and right of each discontinuity, within its segment.
    pub fn neighbours(&self) -> Vec<(Option<usize>, Option<usize>)> {
        let mut out = vec![(None, None); self.discontinuities.len()];
        for (k, iv) in self.intervals.iter().enumerate() {
            out[iv.left].1 = Some(k);
            out[iv.right].0 = Some(k);
        }
        out
    }
}

/// Discontinuities, hitting times and leaving times of the first return to the
/// boundary edges that flow into the interior.
pub fn return_data(iet: &TwoSheetIET, c: &Complex, cap: u64) -> Result<ReturnData, ReturnError> {
    if c.strips.is_empty() || !c.triangles.is_empty() || c.edges.iter().any(|e| !e.is_horizontal())
    {
        return Err(ReturnError::Unsupported);
    }
    let (a, x0, s) = iet.raw_parts();
    if x0 != 0 {
        return Err(ReturnError::ShiftedSlit);
    }
    let denom = iet.denom();
    let sides = c.interior_sides();
    let boundary: Vec<Kind> = c
        .edges
        .iter()
        .zip(&sides)
        .filter(|(_, &n)| n == 1)
        .map(|(e, _)| e.kind)
        .collect();
    let mut segments = Vec::new();
    for (i, e) in c.edges.iter().enumerate() {
        if let Kind::Slit(b) = e.kind {
            if sides[i] == 1 && c.strips.contains(&(1 - b)) {
                segments.push(Segment {
                    edge: i,
                    sheet: 1 - b,
                    lo: 0,
                    hi: s,
                });
            }
        }
    }
    if segments.is_empty() {
        return Err(ReturnError::NoInwardBoundary);
    }
    let seg_of = |st: &OrbitState| {
        segments
            .iter()
            .position(|g| g.sheet == st.sheet && st.raw > g.lo && st.raw < g.hi)
    };
    let time_scale = (-c.t).exp();
    let x_scale = c.t.exp();
    let x_of = |raw: u128| raw as f64 / denom as f64 * x_scale;

    let mut discs = Vec::new();
    for (k, g) in segments.iter().enumerate() {
        for (raw, cone) in [(g.lo, ConePoint::P), (g.hi, ConePoint::Q)] {
            discs.push(Discontinuity {
                segment: k,
                raw,
                x: x_of(raw),
                hit_steps: 0,
                hit_time: 0.0,
                cone,
                endpoint: true,
            });
        }
    }
    for (cone_raw, cone) in [(0u128, ConePoint::P), (s, ConePoint::Q)] {
        for sheet in 0..2u8 {
            let mut st = OrbitState {
                raw: (cone_raw + denom - a) % denom,
                sheet,
                step: 0,
            };
            let mut n = 1u64;
            let seg = loop {
                if let Some(k) = seg_of(&st) {
                    break k;
                }
                if n >= cap {
                    return Err(ReturnError::TimeCap(cap));
                }
                st = iet.step_back(&OrbitState { step: n, ..st })?;
                n += 1;
            };
            discs.push(Discontinuity {
                segment: seg,
                raw: st.raw,
                x: x_of(st.raw),
                hit_steps: n,
                hit_time: n as f64 * time_scale,
                cone,
                endpoint: false,
            });
        }
    }
    discs.sort_by_key(|d| (d.segment, d.raw));

    let mut intervals = Vec::new();
    for i in 1..discs.len() {
        if discs[i].segment != discs[i - 1].segment {
            continue;
        }
        let (l, r) = (discs[i - 1].raw, discs[i].raw);
        if r - l < 2 {
            return Err(ReturnError::Degenerate(r - l));
        }
        let mut st = OrbitState {
            raw: l + (r - l) / 2,
            sheet: segments[discs[i].segment].sheet,
            step: 0,
        };
        let (mut hit, mut exit) = (None, None);
        let ret = loop {
            if st.step >= cap {
                return Err(ReturnError::TimeCap(cap));
            }
            let below = st.sheet;
            let nx = iet.step(&st)?;
            let in_slit = nx.raw > 0 && nx.raw < s;
            let crossed = if in_slit {
                Kind::Slit(below)
            } else {
                Kind::Arc(below)
            };
            if hit.is_none() && boundary.contains(&crossed) {
                hit = Some(nx.step);
            }
            if exit.is_none() && !c.strips.contains(&nx.sheet) {
                exit = Some(nx.step);
            }
            if seg_of(&nx).is_some() {
                break nx;
            }
            st = nx;
        };
        let leave = hit.into_iter().chain(exit).min().unwrap_or(ret.step);
        intervals.push(ReturnInterval {
            segment: discs[i].segment,
            left: i - 1,
            right: i,
            return_steps: ret.step,
            leave_steps: leave,
            leave_time: leave as f64 * time_scale,
            return_sheet: ret.sheet,
        });
    }
    Ok(ReturnData {
        segments,
        discontinuities: discs,
        intervals,
        time_scale,
        x_scale,
        rotation: a,
        denom,
    })
}
