//! Holonomy vectors under the Teichmüller flow `g_t = diag(e^t, e^-t)`.
//!
//! Lengths are carried as enclosures of their natural logarithm, since `e^t` overflows
//! f64 long before the interesting range of `t` ends.

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::interval::{logaddexp, next_down, next_up, Cmp3, Interval, LogInterval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error("holonomy vector is zero")]
    Zero,
    #[error("holonomy component {0} is not known to be positive; no interior minimum")]
    Degenerate(&'static str),
    #[error("empty candidate list")]
    Empty,
}

pub type FlowTime = f64;

/// Enclosure of `ln L` for a length `L`.
pub type LengthEnclosure = LogInterval;

/// Absolute horizontal and vertical components of a holonomy vector.
#[derive(Clone, Debug)]
pub struct Holonomy {
    h: Interval,
    v: Interval,
    ln_h: LogInterval,
    ln_v: LogInterval,
}

impl Holonomy {
    /// Canonicalizes to absolute components.
    pub fn new(h: Interval, v: Interval) -> Result<Self, HolonomyError> {
        let (h, v) = (h.abs(), v.abs());
        if !h.hi().is_positive() && !v.hi().is_positive() {
            return Err(HolonomyError::Zero);
        }
        let (ln_h, ln_v) = (h.ln(), v.ln());
        Ok(Holonomy { h, v, ln_h, ln_v })
    }

    pub fn from_f64(h: f64, v: f64) -> Result<Self, HolonomyError> {
        Holonomy::new(
            Interval::from_f64(h).expect("finite"),
            Interval::from_f64(v).expect("finite"),
        )
    }

    pub fn from_rationals(h: (i64, i64), v: (i64, i64), prec: u32) -> Result<Self, HolonomyError> {
        Holonomy::new(
            Interval::from_rational(&BigInt::from(h.0), &BigInt::from(h.1), prec),
            Interval::from_rational(&BigInt::from(v.0), &BigInt::from(v.1), prec),
        )
    }

    pub fn h(&self) -> &Interval {
        &self.h
    }

    pub fn v(&self) -> &Interval {
        &self.v
    }

    pub fn ln_h(&self) -> LogInterval {
        self.ln_h
    }

    pub fn ln_v(&self) -> LogInterval {
        self.ln_v
    }

    pub fn h_f64(&self) -> f64 {
        to_f64_or_exp(&self.h, &self.ln_h)
    }

    pub fn v_f64(&self) -> f64 {
        to_f64_or_exp(&self.v, &self.ln_v)
    }

    /// Flat length at `t = 0`.
    pub fn ln_length(&self) -> LogInterval {
        flow_length(self, 0.0)
    }
}

fn to_f64_or_exp(x: &Interval, ln: &LogInterval) -> f64 {
    let m = x.mid_f64();
    if m == 0.0 || m.is_normal() {
        m
    } else {
        ln.value()
    }
}

fn widen(x: f64, ulps: u32) -> (f64, f64) {
    let (mut lo, mut hi) = (x, x);
    for _ in 0..ulps {
        lo = next_down(lo);
        hi = next_up(hi);
    }
    (lo, hi)
}

/// Enclosure of `ln |g_t(h, v)| = (1/2) ln(e^{2t} h^2 + e^{-2t} v^2)`.
pub fn flow_length(hol: &Holonomy, t: FlowTime) -> LengthEnclosure {
    let half = |a: f64, b: f64| 0.5 * logaddexp(2.0 * a, 2.0 * b);
    let (ah_lo, ah_hi) = (hol.ln_h.lo + t, hol.ln_h.hi + t);
    let (av_lo, av_hi) = (hol.ln_v.lo - t, hol.ln_v.hi - t);
    let lo = widen(half(ah_lo, av_lo), 4).0;
    let hi = widen(half(ah_hi, av_hi), 4).1;
    LogInterval::new(if lo.is_nan() { f64::NEG_INFINITY } else { lo }, hi)
}

/// Time and length of the minimum over `t` of the flowed length.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MinLength {
    /// `t* = (1/2) ln(v/h)`, midpoint value.
    pub t_star: FlowTime,
    /// Enclosure of `t*`.
    pub t_bounds: (f64, f64),
    /// Enclosure of `ln sqrt(2 h v)`.
    pub ln_length: LogInterval,
}

impl MinLength {
    pub fn length(&self) -> f64 {
        self.ln_length.value()
    }
}

pub fn min_length_time(hol: &Holonomy) -> Result<MinLength, HolonomyError> {
    if !hol.h.lo().is_positive() {
        return Err(HolonomyError::Degenerate("h"));
    }
    if !hol.v.lo().is_positive() {
        return Err(HolonomyError::Degenerate("v"));
    }
    let t_lo = widen(0.5 * (hol.ln_v.lo - hol.ln_h.hi), 2).0;
    let t_hi = widen(0.5 * (hol.ln_v.hi - hol.ln_h.lo), 2).1;
    let ln2 = std::f64::consts::LN_2;
    let l_lo = widen(0.5 * (ln2 + hol.ln_h.lo + hol.ln_v.lo), 2).0;
    let l_hi = widen(0.5 * (ln2 + hol.ln_h.hi + hol.ln_v.hi), 2).1;
    Ok(MinLength {
        t_star: 0.5 * (hol.ln_v.mid() - hol.ln_h.mid()),
        t_bounds: (t_lo, t_hi),
        ln_length: LogInterval::new(l_lo, l_hi),
    })
}

/// Minimum of flowed lengths over a candidate list.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnvelopeMin {
    /// Enclosure of `ln min_i L_i(t)`.
    pub ln_length: LogInterval,
    /// Index of the minimizer; ties and overlaps resolve to the lowest index.
    pub argmin: usize,
    /// False when another candidate's enclosure overlaps the minimizer's.
    pub decisive: bool,
}

/// Envelope minimum of pre-evaluated log-length enclosures.
pub fn envelope_of(lengths: &[LogInterval]) -> Option<EnvelopeMin> {
    if lengths.is_empty() {
        return None;
    }
    let mut best = 0;
    for (i, l) in lengths.iter().enumerate().skip(1) {
        // strict improvement of the midpoint keeps the lowest index on ties
        if l.mid() < lengths[best].mid() {
            best = i;
        }
    }
    let mut env = lengths[0];
    for l in &lengths[1..] {
        env = env.min(l);
    }
    let decisive = lengths
        .iter()
        .enumerate()
        .all(|(i, l)| i == best || lengths[best].cmp3(l) == Cmp3::Less);
    Some(EnvelopeMin {
        ln_length: env,
        argmin: best,
        decisive,
    })
}

pub fn envelope_min(candidates: &[Holonomy], t: FlowTime) -> Result<EnvelopeMin, HolonomyError> {
    let ls: Vec<_> = candidates.iter().map(|c| flow_length(c, t)).collect();
    envelope_of(&ls).ok_or(HolonomyError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vectors_at_zero() {
        let l = flow_length(&Holonomy::from_f64(1.0, 0.0).unwrap(), 0.0);
        assert!(l.contains(0.0));
        let l = flow_length(&Holonomy::from_f64(1.0, 1.0).unwrap(), 0.0);
        assert!(l.contains(0.5 * 2f64.ln()));
    }

    #[test]
    fn zero_rejected() {
        assert_eq!(
            Holonomy::from_f64(0.0, 0.0).unwrap_err(),
            HolonomyError::Zero
        );
    }

    #[test]
    fn vertical_has_no_interior_minimum() {
        let h = Holonomy::from_f64(0.0, 2.0).unwrap();
        assert!(matches!(
            min_length_time(&h),
            Err(HolonomyError::Degenerate("h"))
        ));
    }
}
