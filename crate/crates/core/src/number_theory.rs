//! Continued fractions of the rotation number, convergent tables with rigorous
//! `beta_k = |q_k alpha - p_k|` enclosures, and the sums built from them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{ln_interval, Dyadic, Interval, Round};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumberTheoryError {
    #[error("partial quotient a_{index} must be >= 1")]
    InvalidQuotient { index: usize },
    #[error("quotient list is empty")]
    EmptyQuotients,
    #[error("rational alpha must lie strictly between 0 and 1 (got {0})")]
    RationalOutOfRange(String),
    #[error("partial quotient a_{index} does not fit in 64 bits")]
    QuotientOverflow { index: usize },
    #[error("only {available} partial quotients available, {needed} required")]
    InsufficientQuotients { needed: usize, available: usize },
    #[error("precision exhausted at {bits} bits while enclosing beta_{k}")]
    PrecisionExhausted { k: usize, bits: u32 },
    #[error("beta_{k} enclosure is inconsistent with the convergent bounds")]
    InconsistentEnclosure { k: usize },
    #[error("index {k} beyond table depth {depth}")]
    BeyondTable { k: usize, depth: usize },
    #[error("good-bound check for k = {k} is inconclusive at the current precision")]
    Inconclusive { k: usize },
    #[error("tail bound beyond the table exceeds tolerance for S_{k}")]
    TailTooLarge { k: usize },
}

pub type Result<T> = std::result::Result<T, NumberTheoryError>;

/// How the rotation number is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlphaSpec {
    /// `a_1 = first_quotient`, `a_i = ceil((i + 10) ln^2 i)` for `i >= 2`.
    PaperFormula {
        #[serde(default = "one")]
        first_quotient: u64,
    },
    /// Explicit quotients `a_1, a_2, ...`; `periodic` repeats the list forever.
    ExplicitQuotients {
        quotients: Vec<u64>,
        #[serde(default)]
        periodic: bool,
    },
    /// A rational number in `(0, 1)`; only useful for tests and rejection paths.
    Rational {
        #[serde(with = "bigint_string")]
        numerator: BigInt,
        #[serde(with = "bigint_string")]
        denominator: BigInt,
    },
}

fn one() -> u64 {
    1
}

mod bigint_string {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => s.trim().parse().map_err(D::Error::custom),
            Raw::I(i) => Ok(BigInt::from(i)),
        }
    }
}

impl AlphaSpec {
    pub fn paper() -> Self {
        AlphaSpec::PaperFormula { first_quotient: 1 }
    }

    pub fn golden() -> Self {
        AlphaSpec::ExplicitQuotients {
            quotients: vec![1],
            periodic: true,
        }
    }

    pub fn periodic(q: Vec<u64>) -> Self {
        AlphaSpec::ExplicitQuotients {
            quotients: q,
            periodic: true,
        }
    }

    pub fn rational(n: i64, d: i64) -> Self {
        AlphaSpec::Rational {
            numerator: n.into(),
            denominator: d.into(),
        }
    }

    /// True when the expansion never terminates.
    pub fn is_infinite(&self) -> bool {
        matches!(
            self,
            AlphaSpec::PaperFormula { .. } | AlphaSpec::ExplicitQuotients { periodic: true, .. }
        )
    }
}

/// `ceil((i + 10) ln^2 i)`, evaluated with interval logarithms.
pub fn paper_quotient(i: u64) -> u64 {
    assert!(i >= 2);
    let mut prec = 96;
    loop {
        let l = ln_interval(&Dyadic::from_int(i), prec);
        let v = l.mul(&l, prec).mul_int(&BigInt::from(i + 10), prec);
        let (clo, chi) = (v.lo().ceil(), v.hi().ceil());
        // lo strictly above an integer and both ends in the same unit cell
        if clo == chi && Dyadic::from_int(clo.clone() - 1) < *v.lo() {
            return clo.to_u64().expect("paper quotient overflow");
        }
        prec *= 2;
        assert!(
            prec <= 1 << 14,
            "cannot resolve ceiling of (i+10) ln^2 i at i = {i}"
        );
    }
}

/// First `k_max` partial quotients `a_1 .. a_{k_max}` (fewer if the expansion is finite).
pub fn expand_partial_quotients(spec: &AlphaSpec, k_max: usize) -> Result<Vec<u64>> {
    match spec {
        AlphaSpec::PaperFormula { first_quotient } => {
            if *first_quotient == 0 {
                return Err(NumberTheoryError::InvalidQuotient { index: 1 });
            }
            Ok((1..=k_max as u64)
                .map(|i| {
                    if i == 1 {
                        *first_quotient
                    } else {
                        paper_quotient(i)
                    }
                })
                .collect())
        }
        AlphaSpec::ExplicitQuotients {
            quotients,
            periodic,
        } => {
            if quotients.is_empty() {
                return Err(NumberTheoryError::EmptyQuotients);
            }
            if let Some(i) = quotients.iter().position(|&a| a == 0) {
                return Err(NumberTheoryError::InvalidQuotient { index: i + 1 });
            }
            if *periodic {
                Ok(quotients.iter().copied().cycle().take(k_max).collect())
            } else {
                Ok(quotients.iter().copied().take(k_max).collect())
            }
        }
        AlphaSpec::Rational {
            numerator,
            denominator,
        } => {
            let (mut n, mut d) = (numerator.clone(), denominator.clone());
            if d.is_negative() {
                n = -n;
                d = -d;
            }
            if d.is_zero() || !n.is_positive() || n >= d {
                return Err(NumberTheoryError::RationalOutOfRange(format!(
                    "{numerator}/{denominator}"
                )));
            }
            // alpha = n/d = [0; a_1, a_2, ...]
            let mut out = Vec::new();
            let (mut a, mut b) = (d, n);
            while !b.is_zero() && out.len() < k_max {
                let (q, r) = a.div_rem(&b);
                let q = q.to_u64().ok_or(NumberTheoryError::QuotientOverflow {
                    index: out.len() + 1,
                })?;
                out.push(q);
                a = b;
                b = r;
            }
            Ok(out)
        }
    }
}

/// Options for building a convergent table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    /// Starting working precision in bits; raised automatically when needed.
    pub precision: u32,
    /// Hard ceiling on working precision.
    pub max_precision: u32,
    /// Every `beta_k` must have relative width at most `2^-rel_tol_bits`.
    pub rel_tol_bits: u32,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            precision: 128,
            max_precision: 1 << 18,
            rel_tol_bits: 64,
        }
    }
}

/// Convergents `p_k/q_k` and enclosures of `beta_k` for `k = 0 ..= depth`.
#[derive(Clone, Debug)]
pub struct ConvergentTable {
    quotients: Vec<u64>,
    p: Vec<BigInt>,
    q: Vec<BigInt>,
    beta: Vec<Interval>,
    alpha: Interval,
    precision: u32,
    rel_tol_bits: u32,
}

fn convergents(quotients: &[u64]) -> (Vec<BigInt>, Vec<BigInt>) {
    // p_0 = 0, q_0 = 1; p_{-1} = 1, q_{-1} = 0
    let mut p = vec![BigInt::zero()];
    let mut q = vec![BigInt::one()];
    let (mut pm, mut qm) = (BigInt::one(), BigInt::zero());
    for &a in quotients {
        let a = BigInt::from(a);
        let pn = &a * p.last().unwrap() + &pm;
        let qn = &a * q.last().unwrap() + &qm;
        pm = p.last().unwrap().clone();
        qm = q.last().unwrap().clone();
        p.push(pn);
        q.push(qn);
    }
    (p, q)
}

/// Builds the table for `k = 0 ..= k_max` from an explicit quotient list at a fixed precision.
///
/// With `terminating` the list is the whole expansion and alpha is `p_n/q_n` exactly.
/// Otherwise the alpha enclosure is the hull of the deepest convergent and its mediant
/// with the previous one, which contains every number whose expansion starts with `quotients`.
pub fn convergents_with_errors(
    quotients: &[u64],
    k_max: usize,
    precision: u32,
    rel_tol_bits: u32,
    terminating: bool,
) -> Result<ConvergentTable> {
    if let Some(i) = quotients.iter().position(|&a| a == 0) {
        return Err(NumberTheoryError::InvalidQuotient { index: i + 1 });
    }
    if quotients.len() < k_max + 1 {
        return Err(NumberTheoryError::InsufficientQuotients {
            needed: k_max + 1,
            available: quotients.len(),
        });
    }
    let (p, q) = convergents(quotients);
    let n = quotients.len();
    let exact = Interval::from_rational(&p[n], &q[n], precision);
    let alpha = if terminating {
        exact
    } else {
        exact.hull(&Interval::from_rational(
            &(&p[n] + &p[n - 1]),
            &(&q[n] + &q[n - 1]),
            precision,
        ))
    };
    let mut beta = Vec::with_capacity(k_max + 1);
    let mut prev = Interval::from_int(1);
    let mut cur = alpha.clone();
    let tol = 0.5f64.powi(rel_tol_bits as i32);
    for k in 0..=k_max {
        let b = cur.abs();
        if !(b.rel_width() <= tol) {
            return Err(NumberTheoryError::PrecisionExhausted { k, bits: precision });
        }
        beta.push(b);
        if k < k_max {
            let next = prev.sub(
                &cur.mul_int(&BigInt::from(quotients[k]), precision),
                precision,
            );
            prev = cur;
            cur = next;
        }
    }
    let table = ConvergentTable {
        quotients: quotients.to_vec(),
        p,
        q,
        beta,
        alpha,
        precision,
        rel_tol_bits,
    };
    for k in 0..k_max {
        let (lo, hi) = table.good_bounds(k);
        if table.beta[k].hi() <= lo.lo() || table.beta[k].lo() >= hi.hi() {
            return Err(NumberTheoryError::InconsistentEnclosure { k });
        }
    }
    Ok(table)
}

/// Number of extra quotients needed so that the seed width does not spoil `beta_{k_max}`.
fn seed_is_tight(q: &[BigInt], k_max: usize, rel_tol_bits: u32) -> bool {
    let n = q.len() - 1;
    if n < k_max + 2 {
        return false;
    }
    let need = q[k_max].bits() + q[k_max + 1].bits() + rel_tol_bits as u64 + 8;
    2 * q[n].bits() >= need + 2
}

/// Builds a table of depth `k_max` for `spec`, generating extra quotients and raising
/// precision until every `beta_k` meets the relative tolerance.
pub fn build_table(spec: &AlphaSpec, k_max: usize, opts: &TableOptions) -> Result<ConvergentTable> {
    let quotients = if spec.is_infinite() {
        let mut extra = 8;
        loop {
            let qs = expand_partial_quotients(spec, k_max + 1 + extra)?;
            let (_, q) = convergents(&qs);
            if seed_is_tight(&q, k_max, opts.rel_tol_bits) {
                break qs;
            }
            extra *= 2;
        }
    } else {
        let qs = expand_partial_quotients(spec, usize::MAX)?;
        if qs.len() < k_max + 1 {
            return Err(NumberTheoryError::InsufficientQuotients {
                needed: k_max + 1,
                available: qs.len(),
            });
        }
        qs
    };
    let (_, q) = convergents(&quotients);
    let estimate = (q[k_max].bits() + q[k_max + 1].bits()) as u32 + opts.rel_tol_bits + 32;
    let mut prec = opts.precision.max(estimate).max(64).min(opts.max_precision);
    loop {
        match convergents_with_errors(
            &quotients,
            k_max,
            prec,
            opts.rel_tol_bits,
            !spec.is_infinite(),
        ) {
            Err(NumberTheoryError::PrecisionExhausted { k, .. }) => {
                if prec >= opts.max_precision {
                    return Err(NumberTheoryError::PrecisionExhausted { k, bits: prec });
                }
                prec = (prec * 2).min(opts.max_precision);
            }
            other => return other,
        }
    }
}

/// Builds a table deep enough that `S_k` for every `k <= k_max` has a negligible analytic tail.
pub fn build_table_for_tails(
    spec: &AlphaSpec,
    k_max: usize,
    opts: &TableOptions,
) -> Result<ConvergentTable> {
    let need = |q: &[BigInt], d: usize| {
        q[d + 2].bits() >= q[k_max + 1].bits() + opts.rel_tol_bits as u64 + 4
    };
    let mut depth = k_max + 1;
    if spec.is_infinite() {
        let mut n = k_max + 16;
        loop {
            let qs = expand_partial_quotients(spec, n)?;
            let (_, q) = convergents(&qs);
            if let Some(d) = (k_max + 1..n - 1).find(|&d| need(&q, d)) {
                depth = d;
                break;
            }
            n *= 2;
        }
    }
    build_table(spec, depth, opts)
}

/// Outcome of checking `1/(q_{k+1} + q_k) < beta_k < 1/(a_{k+1} q_k)`.
#[derive(Clone, Debug)]
pub struct GoodBound {
    pub k: usize,
    pub holds: bool,
    /// Enclosure of `beta_k - 1/(q_{k+1} + q_k)`.
    pub lower_margin: Interval,
    /// Enclosure of `1/(a_{k+1} q_k) - beta_k`.
    pub upper_margin: Interval,
}

impl ConvergentTable {
    /// Largest `k` with a `beta_k` enclosure.
    pub fn depth(&self) -> usize {
        self.beta.len() - 1
    }

    /// Number of partial quotients backing the table.
    pub fn num_quotients(&self) -> usize {
        self.quotients.len()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn rel_tol_bits(&self) -> u32 {
        self.rel_tol_bits
    }

    pub fn alpha(&self) -> &Interval {
        &self.alpha
    }

    /// `a_i` for `1 <= i <= num_quotients()`.
    pub fn a(&self, i: usize) -> u64 {
        self.quotients[i - 1]
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    /// `q_k` for `0 <= k <= num_quotients()`.
    pub fn q(&self, k: usize) -> &BigInt {
        &self.q[k]
    }

    pub fn p(&self, k: usize) -> &BigInt {
        &self.p[k]
    }

    pub fn beta(&self, k: usize) -> &Interval {
        &self.beta[k]
    }

    pub fn betas(&self) -> &[Interval] {
        &self.beta
    }

    /// `(1/(q_{k+1}+q_k), 1/(a_{k+1} q_k))` as outward enclosures.
    fn good_bounds(&self, k: usize) -> (Interval, Interval) {
        let prec = self.precision;
        let lo = Interval::from_rational(&BigInt::one(), &(&self.q[k + 1] + &self.q[k]), prec);
        let hi = Interval::from_rational(
            &BigInt::one(),
            &(BigInt::from(self.a(k + 1)) * &self.q[k]),
            prec,
        );
        (lo, hi)
    }

    /// Upper bound on `sum_{i > depth} beta_i`, via `beta_{i+2} < beta_i / 2` and `beta_i < 1/q_{i+1}`.
    pub fn beta_tail_bound(&self) -> Dyadic {
        let k = self.depth();
        let denom = if self.q.len() > k + 2 {
            self.q[k + 2].clone()
        } else {
            &self.q[k + 1] + &self.q[k]
        };
        Dyadic::from_rational(&BigInt::from(4), &denom, 64, Round::Up)
    }
}

pub fn check_good_bound(table: &ConvergentTable, k: usize) -> Result<GoodBound> {
    if k >= table.depth() || k + 1 > table.num_quotients() {
        return Err(NumberTheoryError::BeyondTable {
            k,
            depth: table.depth(),
        });
    }
    let prec = table.precision;
    let (lo, hi) = table.good_bounds(k);
    let b = &table.beta[k];
    let lower_margin = b.sub(&lo, prec);
    let upper_margin = hi.sub(b, prec);
    let decided = |m: &Interval| m.lo().is_positive() || !m.hi().is_positive();
    if !decided(&lower_margin) || !decided(&upper_margin) {
        return Err(NumberTheoryError::Inconclusive { k });
    }
    let holds = lower_margin.lo().is_positive() && upper_margin.lo().is_positive();
    Ok(GoodBound {
        k,
        holds,
        lower_margin,
        upper_margin,
    })
}

/// Enclosure of `S_k = sum_{i >= k} 2 beta_i`, including the analytic tail beyond the table.
pub fn slit_tail_sum(table: &ConvergentTable, k: usize) -> Result<Interval> {
    let depth = table.depth();
    if k > depth {
        return Err(NumberTheoryError::BeyondTable { k, depth });
    }
    let prec = table.precision;
    let mut s = Interval::zero();
    for i in (k..=depth).rev() {
        s = s.add(&table.beta[i], prec);
    }
    let tail = table.beta_tail_bound();
    // tail must be negligible relative to the head
    let tol = Dyadic::new(BigInt::one(), -(table.rel_tol_bits as i64));
    if tail > s.lo().mul(&tol) {
        return Err(NumberTheoryError::TailTooLarge { k });
    }
    Ok(s.widen_up(&tail).mul_pow2(1))
}

/// Termwise lower and upper comparison sums for `S_k` over the table, from the good bounds.
pub fn slit_sum_comparison(table: &ConvergentTable, k: usize) -> (Interval, Interval) {
    let prec = table.precision;
    let mut lo = Interval::zero();
    let mut hi = Interval::zero();
    for i in k..table.depth() {
        let (l, h) = table.good_bounds(i);
        lo = lo.add(&l.mul_int(&BigInt::from(2), prec), prec);
        hi = hi.add(&h.mul_int(&BigInt::from(2), prec), prec);
    }
    (lo, hi)
}

/// How the tail `sum_{k > K} 2/a_{k+1}` of the Veech comparison series behaves.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum VeechVerdict {
    /// Tail below `target` at the explicit index `k_explicit = 2^log2_k`.
    Summable {
        target: f64,
        log2_k: u64,
        tail_bound: f64,
    },
    /// The comparison series diverges (bounded quotients), so no tail bound exists.
    BoundDiverges,
    /// Finite expansion: the sum is a finite sum.
    Finite,
}

#[derive(Clone, Debug)]
pub struct VeechSum {
    /// `sum_{k=1}^{K} 2 q_k beta_k` for `K = 1 ..= depth`.
    pub partial: Vec<Interval>,
    /// Every term satisfies `2 q_k beta_k < 2/a_{k+1}`.
    pub terms_bounded: bool,
    pub verdict: VeechVerdict,
}

impl VeechSum {
    /// Explicit `K` as an integer (only for the summable verdict).
    pub fn explicit_k(&self) -> Option<BigInt> {
        match &self.verdict {
            VeechVerdict::Summable { log2_k, .. } => Some(BigInt::one() << *log2_k),
            _ => None,
        }
    }
}

/// Upper bound `2/ln(K+1)` on `sum_{k > K} 2/a_{k+1}` for the log-squared quotients.
pub fn paper_veech_tail_bound(k: f64) -> f64 {
    2.0 / (k + 1.0).ln()
}

pub fn veech_sum(spec: &AlphaSpec, table: &ConvergentTable, target: f64) -> VeechSum {
    let prec = table.precision;
    let mut partial = Vec::new();
    let mut acc = Interval::zero();
    let mut terms_bounded = true;
    for k in 1..=table.depth().min(table.num_quotients() - 1) {
        let term = table.beta[k].mul_int(&(BigInt::from(2) * &table.q[k]), prec);
        let bound = Interval::from_rational(&BigInt::from(2), &BigInt::from(table.a(k + 1)), prec);
        if term.hi() >= bound.lo() {
            terms_bounded = false;
        }
        acc = acc.add(&term, prec);
        partial.push(acc.clone());
    }
    let verdict = match spec {
        AlphaSpec::PaperFormula { .. } => {
            // 2/ln(K+1) < target once ln K > 2/target; take K a power of two
            let log2_k = (2.0 / target / std::f64::consts::LN_2).ceil() as u64;
            let tail_bound = 2.0 / (log2_k as f64 * std::f64::consts::LN_2);
            VeechVerdict::Summable {
                target,
                log2_k,
                tail_bound,
            }
        }
        AlphaSpec::ExplicitQuotients { periodic: true, .. } => VeechVerdict::BoundDiverges,
        _ => VeechVerdict::Finite,
    };
    VeechSum {
        partial,
        terms_bounded,
        verdict,
    }
}

/// One row of the convergent table export.
#[derive(Clone, Debug, Serialize)]
pub struct CfRow {
    pub k: usize,
    /// `a_k`; absent for `k = 0`.
    pub a_k: Option<u64>,
    pub q_k: String,
    pub beta_lower: String,
    pub beta_upper: String,
    pub good_bound_ok: Option<bool>,
}

/// Rows `k = 0 ..= depth - 1` with decimal enclosures at `digits` significant digits.
pub fn cf_rows(table: &ConvergentTable, digits: usize) -> Vec<CfRow> {
    (0..table.depth())
        .map(|k| CfRow {
            k,
            a_k: if k == 0 { None } else { Some(table.a(k)) },
            q_k: table.q[k].to_string(),
            beta_lower: table.beta[k].lo().to_sci_string(digits, Round::Down),
            beta_upper: table.beta[k].hi().to_sci_string(digits, Round::Up),
            good_bound_ok: check_good_bound(table, k).ok().map(|g| g.holds),
        })
        .collect()
}
