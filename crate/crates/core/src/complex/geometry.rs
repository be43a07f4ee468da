//! Saddle connections on the slit surface.
//!
//! The surface is two copies of the torus `C / Lambda_alpha`, cut along the horizontal
//! slit from `P = (0, 0)` to `Q = (s, 0)` and glued crosswise. Both slit endpoints are
//! cone points of angle `4 pi`. A non-horizontal saddle connection is stored with its
//! lower endpoint first; it climbs through `v` unit strips, and the `j`-th time it crosses
//! the circle `y = 0` it lands at `x_j`, switching sheet when `x_j` lies in the slit.

use std::f64::consts::PI;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::surface::{SlitTorusSurface, SurfaceMode};

/// Tolerance for coincidences of points on the unit circle.
pub const TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("surface has no slit")]
    NoSlit,
    #[error("slit length must lie in (0, 1)")]
    BadSlit,
    #[error("segment passes through a cone point at crossing {0}")]
    ThroughCone(i64),
    #[error("vector does not end at a cone point")]
    NotSaddle,
    #[error("search box holds {needed} vectors, above the cap of {cap}")]
    SearchBox { needed: u128, cap: u128 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConePoint {
    P,
    Q,
}

/// Flat data of the slit surface, with high-precision copies for horizontal components.
#[derive(Clone, Debug)]
pub struct SlitGeometry {
    pub alpha: f64,
    pub s: f64,
    alpha_iv: Interval,
    s_iv: Interval,
    prec: u32,
}

impl SlitGeometry {
    pub fn new(alpha: f64, s: f64) -> Result<Self, GeometryError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(GeometryError::BadSlit);
        }
        let a = alpha.rem_euclid(1.0);
        Ok(SlitGeometry {
            alpha: a,
            s,
            alpha_iv: Interval::from_f64(a).unwrap(),
            s_iv: Interval::from_f64(s).unwrap(),
            prec: 128,
        })
    }

    pub fn from_surface(surface: &SlitTorusSurface) -> Result<Self, GeometryError> {
        if surface.mode() != SurfaceMode::Slit {
            return Err(GeometryError::NoSlit);
        }
        let s_iv = surface.slit().ok_or(GeometryError::NoSlit)?.clone();
        let alpha_iv = surface.table().alpha().clone();
        Ok(SlitGeometry {
            alpha: alpha_iv.mid_f64(),
            s: s_iv.mid_f64(),
            alpha_iv,
            s_iv,
            prec: surface.table().precision().max(128),
        })
    }

    pub fn area(&self) -> f64 {
        2.0
    }

    pub fn x_of(&self, c: ConePoint) -> f64 {
        match c {
            ConePoint::P => 0.0,
            ConePoint::Q => self.s,
        }
    }

    /// `x mod 1` strictly inside the slit.
    pub fn in_slit(&self, x: f64) -> bool {
        let y = x.rem_euclid(1.0);
        y > 0.0 && y < self.s
    }

    pub fn cone_at(&self, x: f64) -> Option<ConePoint> {
        let near = |c: f64| {
            let d = (x - c).rem_euclid(1.0);
            d.min(1.0 - d) <= TOL
        };
        if near(0.0) {
            Some(ConePoint::P)
        } else if near(self.s) {
            Some(ConePoint::Q)
        } else {
            None
        }
    }

    /// `m - v alpha + x_end - x_start` evaluated in interval arithmetic.
    fn horizontal(&self, start: ConePoint, end: ConePoint, v: i64, m: i64) -> f64 {
        let mut h = Interval::from_int(m).sub(
            &self.alpha_iv.mul_int(&BigInt::from(v), self.prec),
            self.prec,
        );
        match (start, end) {
            (ConePoint::P, ConePoint::Q) => h = h.add(&self.s_iv, self.prec),
            (ConePoint::Q, ConePoint::P) => h = h.sub(&self.s_iv, self.prec),
            _ => {}
        }
        h.mid_f64()
    }

    /// Sector bases of the `4 pi` angle at each cone point.
    ///
    /// At `P` the half-planes go Up0, Down0, Up1, Down1; at `Q` they go Up0, Down1, Up1, Down0.
    pub fn up_base(&self, _c: ConePoint, sheet: u8) -> f64 {
        2.0 * PI * sheet as f64
    }

    pub fn down_base(&self, c: ConePoint, sheet: u8) -> f64 {
        match c {
            ConePoint::P => 2.0 * PI * sheet as f64 + PI,
            ConePoint::Q => {
                if sheet == 1 {
                    PI
                } else {
                    3.0 * PI
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    /// The segment `(s, 1)` of the circle `y = 0` on a sheet, from `Q` to `P`.
    Arc(u8),
    /// The slit from `P` to `Q`, as seen from below on the given sheet.
    Slit(u8),
    Oblique,
}

#[derive(Clone, Debug, Serialize)]
pub struct SaddleConnection {
    pub kind: Kind,
    pub start: ConePoint,
    pub end: ConePoint,
    /// Sheet the segment leaves `start` into (upwards); for horizontal ones, the sheet in `kind`.
    pub sheet: u8,
    /// Sheet the segment arrives at `end` in (from below).
    pub end_sheet: u8,
    /// Signed horizontal and vertical components, from `start` to `end`.
    pub h: f64,
    pub v: i64,
    /// `m` in `h = m - v alpha + x_end - x_start`.
    pub m: i64,
    /// Landing points on `y = 0` and the sheet above them, for crossings `1..v`.
    #[serde(skip)]
    crossings: Vec<(f64, u8)>,
}

impl SaddleConnection {
    pub fn arc(g: &SlitGeometry, sheet: u8) -> Self {
        SaddleConnection {
            kind: Kind::Arc(sheet),
            start: ConePoint::Q,
            end: ConePoint::P,
            sheet,
            end_sheet: sheet,
            h: 1.0 - g.s,
            v: 0,
            m: 1,
            crossings: Vec::new(),
        }
    }

    pub fn slit(g: &SlitGeometry, below: u8) -> Self {
        SaddleConnection {
            kind: Kind::Slit(below),
            start: ConePoint::P,
            end: ConePoint::Q,
            sheet: below,
            end_sheet: below,
            h: g.s,
            v: 0,
            m: 0,
            crossings: Vec::new(),
        }
    }

    /// All four horizontal saddle connections.
    pub fn horizontal_all(g: &SlitGeometry) -> Vec<Self> {
        vec![
            Self::arc(g, 0),
            Self::arc(g, 1),
            Self::slit(g, 0),
            Self::slit(g, 1),
        ]
    }

    /// The segment leaving `start` upwards on `sheet` with vector `(m - v alpha + x_end - x_start, v)`.
    pub fn oblique(
        g: &SlitGeometry,
        start: ConePoint,
        end: ConePoint,
        sheet: u8,
        v: i64,
        m: i64,
    ) -> Result<Self, GeometryError> {
        if v < 1 {
            return Err(GeometryError::NotSaddle);
        }
        let xs = g.x_of(start);
        let delta = g.x_of(end) - xs;
        let mut crossings = Vec::with_capacity((v - 1) as usize);
        let mut cur = sheet & 1;
        for j in 1..v {
            let frac_m = ((j as i128 * m as i128).rem_euclid(v as i128)) as f64 / v as f64;
            let x = (xs + frac_m + j as f64 * delta / v as f64).rem_euclid(1.0);
            if g.cone_at(x).is_some() {
                return Err(GeometryError::ThroughCone(j));
            }
            if g.in_slit(x) {
                cur ^= 1;
            }
            crossings.push((x, cur));
        }
        let h = g.horizontal(start, end, v, m);
        Ok(SaddleConnection {
            kind: Kind::Oblique,
            start,
            end,
            sheet: sheet & 1,
            end_sheet: cur,
            h,
            v,
            m,
            crossings,
        })
    }

    pub fn crossings(&self) -> &[(f64, u8)] {
        &self.crossings
    }

    pub fn is_horizontal(&self) -> bool {
        self.v == 0
    }

    /// Components on `g_t omega`.
    pub fn hol_at(&self, t: f64) -> (f64, f64) {
        (t.exp() * self.h, (-t).exp() * self.v as f64)
    }

    pub fn length_at(&self, t: f64) -> f64 {
        let (a, b) = self.hol_at(t);
        a.hypot(b)
    }

    pub fn same_as(&self, o: &SaddleConnection) -> bool {
        self.kind == o.kind
            && self.start == o.start
            && self.end == o.end
            && self.sheet == o.sheet
            && self.v == o.v
            && self.m == o.m
    }

    /// Bottom points of the strip pieces: `(x, sheet)` for pieces `0..v`.
    fn pieces(&self, g: &SlitGeometry) -> Vec<(f64, u8)> {
        let mut out = Vec::with_capacity(self.v.max(0) as usize);
        out.push((g.x_of(self.start), self.sheet));
        out.extend(self.crossings.iter().copied());
        out
    }

    /// Horizontal drift across one strip.
    fn slope(&self, g: &SlitGeometry) -> f64 {
        (self.m as f64 + g.x_of(self.end) - g.x_of(self.start)) / self.v as f64 - g.alpha
    }

    /// Direction angle in `[0, 4 pi)` of the dart leaving `start` (`forward`) or `end`, on `g_t omega`.
    pub fn dart_angle(&self, g: &SlitGeometry, forward: bool, t: f64) -> f64 {
        match self.kind {
            Kind::Arc(s) => {
                if forward {
                    g.up_base(ConePoint::Q, s)
                } else {
                    g.up_base(ConePoint::P, s) + PI
                }
            }
            Kind::Slit(b) => {
                if forward {
                    (g.down_base(ConePoint::P, b) + PI).rem_euclid(4.0 * PI)
                } else {
                    g.down_base(ConePoint::Q, b)
                }
            }
            Kind::Oblique => {
                let (hh, vv) = self.hol_at(t);
                let phi = vv.atan2(hh);
                if forward {
                    g.up_base(self.start, self.sheet) + phi
                } else {
                    g.down_base(self.end, self.end_sheet) + phi
                }
            }
        }
    }
}

/// True iff the two saddle connections meet at most at their endpoints.
pub fn disjoint(g: &SlitGeometry, a: &SaddleConnection, b: &SaddleConnection) -> bool {
    if a.same_as(b) {
        return false;
    }
    match (a.is_horizontal(), b.is_horizontal()) {
        (true, true) => true,
        (false, true) => !crosses_horizontal(g, a, b),
        (true, false) => !crosses_horizontal(g, b, a),
        (false, false) => !oblique_meet(g, a, b),
    }
}

fn crosses_horizontal(g: &SlitGeometry, ob: &SaddleConnection, hz: &SaddleConnection) -> bool {
    let mut below = ob.sheet;
    for &(x, above) in &ob.crossings {
        let hit = match hz.kind {
            Kind::Arc(s) => !g.in_slit(x) && above == s,
            Kind::Slit(b) => g.in_slit(x) && below == b,
            Kind::Oblique => unreachable!(),
        };
        if hit {
            return true;
        }
        below = above;
    }
    false
}

fn oblique_meet(g: &SlitGeometry, a: &SaddleConnection, b: &SaddleConnection) -> bool {
    // shared crossing points on y = 0
    let mut cb: Vec<(f64, u8)> = b.crossings.clone();
    cb.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    for &(x, s) in &a.crossings {
        if near_sorted(&cb, x, s) {
            return true;
        }
    }
    // crossings inside strips: piece of b whose bottom lies strictly between the bottoms of
    // the a-piece and its b-relative drift
    let dp = a.slope(g) - b.slope(g);
    let mut bottoms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (x, s) in b.pieces(g) {
        bottoms[s as usize].push(x.rem_euclid(1.0));
    }
    for v in bottoms.iter_mut() {
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
    }
    for (x, s) in a.pieces(g) {
        let list = &bottoms[s as usize];
        if list.is_empty() {
            continue;
        }
        if dp.abs() > 1.0 + TOL {
            return true;
        }
        // b-bottom y meets the a-piece iff y - x lies strictly between 0 and dp (mod 1)
        let (lo, hi) = if dp > 0.0 {
            (x + TOL, x + dp - TOL)
        } else {
            (x + dp + TOL, x - TOL)
        };
        if hi > lo && count_in_arc(list, lo, hi) > 0 {
            return true;
        }
    }
    false
}

fn near_sorted(list: &[(f64, u8)], x: f64, s: u8) -> bool {
    let i = list.partition_point(|p| p.0 < x - TOL);
    let mut j = i;
    while j < list.len() && list[j].0 <= x + TOL {
        if list[j].1 == s {
            return true;
        }
        j += 1;
    }
    // wrap-around near 0 and 1
    if x < TOL {
        return list
            .iter()
            .rev()
            .take_while(|p| p.0 > 1.0 - TOL + x)
            .any(|p| p.1 == s);
    }
    if x > 1.0 - TOL {
        return list
            .iter()
            .take_while(|p| p.0 < x - 1.0 + TOL)
            .any(|p| p.1 == s);
    }
    false
}

/// Number of sorted points of `[0, 1)` in the open arc `(lo, hi)` taken mod 1, `hi - lo < 1`.
fn count_in_arc(sorted: &[f64], lo: f64, hi: f64) -> usize {
    let l = lo.rem_euclid(1.0);
    let h = l + (hi - lo);
    let below = |v: f64| sorted.partition_point(|&p| p <= v);
    if h <= 1.0 {
        below(h - f64::EPSILON) - below(l)
    } else {
        (sorted.len() - below(l)) + below(h - 1.0 - f64::EPSILON)
    }
}

/// All saddle connections of length at most `bound` on `g_t omega`, shortest first.
pub fn enumerate_saddle_connections(
    g: &SlitGeometry,
    bound: f64,
    t: f64,
    cap: u128,
) -> Result<Vec<SaddleConnection>, GeometryError> {
    let vmax = (bound * t.exp()).floor();
    let hmax = bound * (-t).exp();
    let per_v = 4 * (2 * hmax.ceil() as u128 + 3);
    let needed = (vmax.max(0.0) as u128) * per_v;
    if !vmax.is_finite() || needed > cap {
        return Err(GeometryError::SearchBox { needed, cap });
    }
    let mut out: Vec<SaddleConnection> = SaddleConnection::horizontal_all(g)
        .into_iter()
        .filter(|c| c.length_at(t) <= bound)
        .collect();
    let cones = [ConePoint::P, ConePoint::Q];
    for v in 1..=vmax as i64 {
        for &start in &cones {
            for &end in &cones {
                let delta = g.x_of(end) - g.x_of(start);
                let center = v as f64 * g.alpha - delta;
                let lo = (center - hmax).floor() as i64 - 1;
                let hi = (center + hmax).ceil() as i64 + 1;
                for m in lo..=hi {
                    let h = m as f64 - v as f64 * g.alpha + delta;
                    if (t.exp() * h).hypot((-t).exp() * v as f64) > bound * (1.0 + 1e-9) {
                        continue;
                    }
                    for sheet in 0..2u8 {
                        match SaddleConnection::oblique(g, start, end, sheet, v, m) {
                            Ok(c) if c.length_at(t) <= bound => out.push(c),
                            Ok(_) | Err(GeometryError::ThroughCone(_)) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.length_at(t)
            .partial_cmp(&b.length_at(t))
            .unwrap()
            .then_with(|| key(a).cmp(&key(b)))
    });
    Ok(out)
}

fn key(c: &SaddleConnection) -> (u8, i64, i64, ConePoint, ConePoint, u8) {
    let k = match c.kind {
        Kind::Arc(_) => 0,
        Kind::Slit(_) => 1,
        Kind::Oblique => 2,
    };
    (k, c.v, c.m, c.start, c.end, c.sheet)
}
