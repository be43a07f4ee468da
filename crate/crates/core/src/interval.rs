//! Dyadic interval arithmetic with outward rounding, plus f64 enclosures of logarithms.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rounding direction for a single endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

/// An exact binary fraction `mant * 2^exp`.
#[derive(Clone, Debug)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

fn pow2(k: u64) -> BigInt {
    BigInt::one() << k
}

fn div_round(n: &BigInt, d: &BigInt, dir: Round) -> BigInt {
    // d > 0
    match dir {
        Round::Down => n.div_floor(d),
        Round::Up => -((-n).div_floor(d)),
    }
}

/// Multiplies `x` by `2^e` without intermediate overflow.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        Dyadic { mant, exp }.normalized()
    }

    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int<T: Into<BigInt>>(n: T) -> Self {
        Dyadic::new(n.into(), 0)
    }

    /// Exact value of a finite f64.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(Dyadic::new(BigInt::from(m) * sign, e))
    }

    fn normalized(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
        self
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn sign(&self) -> Sign {
        self.mant.sign()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    /// Position of the leading bit: the value lies in `[2^(m-1), 2^m)` in absolute value.
    pub fn magnitude_bits(&self) -> i64 {
        self.mant.bits() as i64 + self.exp
    }

    /// Rounds to at most `prec` significant bits in direction `dir`.
    pub fn round(&self, prec: u32, dir: Round) -> Dyadic {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let shift = bits - prec as u64;
        let m = div_round(&self.mant, &pow2(shift), dir);
        Dyadic::new(m, self.exp + shift as i64)
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            self.mant.div_floor(&pow2((-self.exp) as u64))
        }
    }

    pub fn ceil(&self) -> BigInt {
        -(self.neg().floor())
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn add(&self, o: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(o.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &o.mant << (o.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, o: &Dyadic) -> Dyadic {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &o.mant, self.exp + o.exp)
    }

    pub fn mul_int(&self, n: &BigInt) -> Dyadic {
        Dyadic::new(&self.mant * n, self.exp)
    }

    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        Dyadic {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    /// `self / o` rounded to `prec` bits.
    pub fn div(&self, o: &Dyadic, prec: u32, dir: Round) -> Dyadic {
        assert!(!o.is_zero(), "division by zero");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let (mut n, mut d) = (self.mant.clone(), o.mant.clone());
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        let k = prec as i64 + d.bits() as i64 - n.bits() as i64 + 2;
        let (n, e) = if k >= 0 {
            (n << k as u64, self.exp - o.exp - k)
        } else {
            (n, self.exp - o.exp)
        };
        Dyadic::new(div_round(&n, &d, dir), e).round(prec, dir)
    }

    /// Square root rounded to `prec` bits. Panics on negative input.
    pub fn sqrt(&self, prec: u32, dir: Round) -> Dyadic {
        assert!(!self.is_negative(), "sqrt of negative value");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let want = 2 * prec as i64 + 4;
        let mut k = (want - self.mant.bits() as i64).max(0);
        if (self.exp - k).rem_euclid(2) != 0 {
            k += 1;
        }
        let m = &self.mant << k as u64;
        let mut r = m.sqrt();
        if dir == Round::Up && &r * &r < m {
            r += 1;
        }
        Dyadic::new(r, (self.exp - k) / 2).round(prec, dir)
    }

    /// Nearest-ish f64 (truncated mantissa); infinite on overflow.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (m, e) = if bits > 64 {
            let s = bits - 64;
            (&self.mant >> s, self.exp + s as i64)
        } else {
            (self.mant.clone(), self.exp)
        };
        ldexp(m.to_f64().unwrap_or(f64::NAN), e)
    }

    /// Natural log as f64 with an absolute error bound, valid for any positive magnitude.
    fn ln_estimate(&self) -> (f64, f64) {
        debug_assert!(self.is_positive());
        let bits = self.mant.bits();
        let s = bits.saturating_sub(60);
        let top = (&self.mant >> s).to_f64().unwrap();
        let e = (self.exp + s as i64) as f64;
        let v = top.ln() + e * std::f64::consts::LN_2;
        // top is exact to 2^-59 relative; ln and the product each lose a few ulps.
        let err = 2f64.powi(-57)
            + 4.0 * f64::EPSILON * (top.ln().abs() + (e * std::f64::consts::LN_2).abs() + 1.0);
        (v, err)
    }

    /// Rigorous lower (`Down`) or upper (`Up`) bound on `ln(self)` as f64.
    pub fn ln_bound(&self, dir: Round) -> f64 {
        if !self.is_positive() {
            return f64::NEG_INFINITY;
        }
        let (v, err) = self.ln_estimate();
        match dir {
            Round::Down => next_down(v - err),
            Round::Up => next_up(v + err),
        }
    }

    pub fn cmp_rational(&self, num: &BigInt, den: &BigInt) -> Ordering {
        // den > 0
        let (lhs, rhs) = if self.exp >= 0 {
            ((&self.mant << self.exp as u64) * den, num.clone())
        } else {
            (&self.mant * den, num << (-self.exp) as u64)
        };
        lhs.cmp(&rhs)
    }

    /// Rational `num/den` rounded to `prec` bits.
    pub fn from_rational(num: &BigInt, den: &BigInt, prec: u32, dir: Round) -> Dyadic {
        let (n, d) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        Dyadic::from_int(n).div(&Dyadic::from_int(d), prec, dir)
    }

    /// Decimal scientific notation with `digits` significant digits, rounded in `dir`.
    pub fn to_sci_string(&self, digits: usize, dir: Round) -> String {
        if self.is_zero() {
            return format!("{:.*}e0", digits.saturating_sub(1), 0.0);
        }
        let neg = self.is_negative();
        let a = self.abs();
        // magnitude estimate: value in [2^(mb-1), 2^mb)
        let mb = a.magnitude_bits();
        let mut e10 = ((mb - 1) as f64 * std::f64::consts::LOG10_2).floor() as i64;
        // adjust dir for the sign of the value
        let mag_dir = match (neg, dir) {
            (false, d) => d,
            (true, Round::Down) => Round::Up,
            (true, Round::Up) => Round::Down,
        };
        loop {
            let shift10 = digits as i64 - 1 - e10;
            let scaled = if shift10 >= 0 {
                a.mul_int(&BigInt::from(10).pow(shift10 as u32))
            } else {
                Dyadic::from_rational(
                    &(a.mant.clone() << a.exp.max(0) as u64),
                    &(BigInt::from(10).pow((-shift10) as u32) << (-a.exp).max(0) as u64),
                    (digits as u32) * 4 + 64,
                    mag_dir,
                )
            };
            let int = match mag_dir {
                Round::Down => scaled.floor(),
                Round::Up => scaled.ceil(),
            };
            let s = int.to_string();
            if s.len() > digits {
                e10 += 1;
                continue;
            }
            if s.len() < digits {
                e10 -= 1;
                continue;
            }
            let (head, tail) = s.split_at(1);
            let sign = if neg { "-" } else { "" };
            return if tail.is_empty() {
                format!("{sign}{head}e{e10}")
            } else {
                format!("{sign}{head}.{tail}e{e10}")
            };
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, o: &Self) -> Ordering {
        let d = self.sub(o);
        match d.mant.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(20, Round::Down))
    }
}

pub fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

pub fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// A closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Dyadic) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_int<T: Into<BigInt>>(n: T) -> Self {
        Interval::point(Dyadic::from_int(n))
    }

    pub fn zero() -> Self {
        Interval::point(Dyadic::zero())
    }

    pub fn from_f64(x: f64) -> Option<Self> {
        Dyadic::from_f64(x).map(Interval::point)
    }

    /// Outward-rounded enclosure of `num/den`.
    pub fn from_rational(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        Interval {
            lo: Dyadic::from_rational(num, den, prec, Round::Down),
            hi: Dyadic::from_rational(num, den, prec, Round::Up),
        }
    }

    /// Smallest interval containing both inputs.
    pub fn hull(&self, o: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    /// Width divided by the lower endpoint, as f64 (infinite if the interval touches zero).
    pub fn rel_width(&self) -> f64 {
        let m = self.lo.abs().min(self.hi.abs());
        if m.is_zero() || self.lo.sign() != self.hi.sign() {
            return f64::INFINITY;
        }
        let w = self.width();
        if w.is_zero() {
            return 0.0;
        }
        w.div(&m, 64, Round::Up).to_f64()
    }

    pub fn mid(&self) -> Dyadic {
        self.lo.add(&self.hi).mul_pow2(-1)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_rational(&self, num: &BigInt, den: &BigInt) -> bool {
        let (n, d) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        self.lo.cmp_rational(&n, &d) != Ordering::Greater
            && self.hi.cmp_rational(&n, &d) != Ordering::Less
    }

    pub fn contains_interval(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn intersects(&self, o: &Interval) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    /// Three-valued comparison: `Some` only when the intervals are separated or both are the same point.
    pub fn try_cmp(&self, o: &Interval) -> Option<Ordering> {
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if o.hi < self.lo {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && o.lo == o.hi && self.lo == o.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Interval {
                lo: Dyadic::zero(),
                hi: self.lo.abs().max(self.hi.abs()),
            }
        }
    }

    fn rounded(lo: Dyadic, hi: Dyadic, prec: u32) -> Interval {
        Interval {
            lo: lo.round(prec, Round::Down),
            hi: hi.round(prec, Round::Up),
        }
    }

    pub fn add(&self, o: &Interval, prec: u32) -> Interval {
        Interval::rounded(self.lo.add(&o.lo), self.hi.add(&o.hi), prec)
    }

    pub fn sub(&self, o: &Interval, prec: u32) -> Interval {
        Interval::rounded(self.lo.sub(&o.hi), self.hi.sub(&o.lo), prec)
    }

    pub fn mul(&self, o: &Interval, prec: u32) -> Interval {
        let c = [
            self.lo.mul(&o.lo),
            self.lo.mul(&o.hi),
            self.hi.mul(&o.lo),
            self.hi.mul(&o.hi),
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval::rounded(lo, hi, prec)
    }

    pub fn mul_int(&self, n: &BigInt, prec: u32) -> Interval {
        let (a, b) = (self.lo.mul_int(n), self.hi.mul_int(n));
        if n.is_negative() {
            Interval::rounded(b, a, prec)
        } else {
            Interval::rounded(a, b, prec)
        }
    }

    pub fn mul_pow2(&self, k: i64) -> Interval {
        Interval {
            lo: self.lo.mul_pow2(k),
            hi: self.hi.mul_pow2(k),
        }
    }

    /// Division by an interval not containing zero.
    pub fn div(&self, o: &Interval, prec: u32) -> Interval {
        assert!(
            o.lo.is_positive() || o.hi.is_negative(),
            "division by interval containing zero"
        );
        let q = |a: &Dyadic, b: &Dyadic, d| a.div(b, prec, d);
        let lo = [
            q(&self.lo, &o.lo, Round::Down),
            q(&self.lo, &o.hi, Round::Down),
            q(&self.hi, &o.lo, Round::Down),
            q(&self.hi, &o.hi, Round::Down),
        ]
        .into_iter()
        .min()
        .unwrap();
        let hi = [
            q(&self.lo, &o.lo, Round::Up),
            q(&self.lo, &o.hi, Round::Up),
            q(&self.hi, &o.lo, Round::Up),
            q(&self.hi, &o.hi, Round::Up),
        ]
        .into_iter()
        .max()
        .unwrap();
        Interval { lo, hi }
    }

    pub fn recip(&self, prec: u32) -> Interval {
        Interval::from_int(1).div(self, prec)
    }

    pub fn sqrt(&self, prec: u32) -> Interval {
        let lo = if self.lo.is_negative() {
            Dyadic::zero()
        } else {
            self.lo.sqrt(prec, Round::Down)
        };
        Interval {
            lo,
            hi: self.hi.sqrt(prec, Round::Up),
        }
    }

    /// Widens the upper endpoint by `extra >= 0`.
    pub fn widen_up(&self, extra: &Dyadic) -> Interval {
        Interval {
            lo: self.lo.clone(),
            hi: self.hi.add(extra),
        }
    }

    /// Rigorous enclosure of the natural logarithm as f64 bounds.
    pub fn ln(&self) -> LogInterval {
        LogInterval::new(self.lo.ln_bound(Round::Down), self.hi.ln_bound(Round::Up))
    }

    pub fn to_f64_bounds(&self) -> (f64, f64) {
        (next_down(self.lo.to_f64()), next_up(self.hi.to_f64()))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            self.lo.to_sci_string(17, Round::Down),
            self.hi.to_sci_string(17, Round::Up)
        )
    }
}

/// High-precision enclosure of `ln x` for a positive dyadic `x`.
pub fn ln_interval(x: &Dyadic, prec: u32) -> Interval {
    assert!(x.is_positive(), "logarithm of non-positive value");
    let wp = prec + 32;
    // x = y * 2^k with y in [1, 2)
    let k = x.magnitude_bits() - 1;
    let y = Interval::point(x.mul_pow2(-k));
    let one = Interval::from_int(1);
    let z = y.sub(&one, wp).div(&y.add(&one, wp), wp);
    let ln_y = atanh_series(&z, wp).mul_pow2(1);
    let third = Interval::from_rational(&BigInt::from(1), &BigInt::from(3), wp);
    let ln2 = atanh_series(&third, wp).mul_pow2(1);
    ln_y.add(&ln2.mul_int(&BigInt::from(k), wp), wp)
}

/// `atanh z` for `0 <= z <= 1/3`, with the truncation remainder folded into the upper end.
fn atanh_series(z: &Interval, wp: u32) -> Interval {
    let z2 = z.mul(z, wp);
    let mut term = z.clone();
    let mut sum = Interval::zero();
    let mut n: u64 = 0;
    let eps = Dyadic::new(BigInt::one(), -(wp as i64) - 4);
    loop {
        let t = term.div(&Interval::from_int(2 * n + 1), wp);
        sum = sum.add(&t, wp);
        term = term.mul(&z2, wp);
        n += 1;
        // remaining terms are bounded by term / (2n+1) / (1 - z^2) <= term * 9/8
        if term.hi() < &eps {
            let rem = term.hi().mul(&Dyadic::new(BigInt::from(9), -3));
            return sum.widen_up(&rem);
        }
    }
}

/// Ordering result for two enclosures that may overlap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp3 {
    Less,
    Greater,
    Overlap,
}

/// f64 enclosure `[lo, hi]` of the natural logarithm of a non-negative quantity.
///
/// `lo` may be `-inf` (quantity possibly zero).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogInterval {
    pub lo: f64,
    pub hi: f64,
}

impl LogInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(
            !(lo > hi),
            "log interval endpoints out of order: {lo} > {hi}"
        );
        LogInterval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        LogInterval { lo: v, hi: v }
    }

    /// Enclosure of `ln x` for a positive f64, widened by one ulp each side.
    pub fn of_value(x: f64) -> Self {
        let v = x.ln();
        LogInterval {
            lo: next_down(v),
            hi: next_up(v),
        }
    }

    pub fn mid(&self) -> f64 {
        if self.lo == f64::NEG_INFINITY {
            self.hi
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn shift(&self, c: f64) -> Self {
        LogInterval {
            lo: next_down(self.lo + c),
            hi: next_up(self.hi + c),
        }
    }

    /// Bounds on the underlying quantity itself.
    pub fn exp_bounds(&self) -> (f64, f64) {
        (next_down(self.lo.exp()).max(0.0), next_up(self.hi.exp()))
    }

    pub fn value(&self) -> f64 {
        self.mid().exp()
    }

    pub fn cmp3(&self, o: &LogInterval) -> Cmp3 {
        if self.hi < o.lo {
            Cmp3::Less
        } else if o.hi < self.lo {
            Cmp3::Greater
        } else {
            Cmp3::Overlap
        }
    }

    /// Enclosure of the minimum of the two quantities.
    pub fn min(&self, o: &LogInterval) -> LogInterval {
        LogInterval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Rigorous-ish `ln(e^a + e^b)` bounds from endpoint bounds.
pub fn logaddexp_bounds(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (
        next_down(logaddexp(a.0, b.0)),
        next_up(next_up(logaddexp(a.1, b.1))),
    )
}

pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
