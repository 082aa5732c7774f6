//! Rigorous real enclosures with exact rational endpoints.
//!
//! Exact operations (`+`, `-`, `*`, negation, reciprocal) keep rational
//! endpoints as they are. Transcendental functions work in binary fixed
//! point with every truncation error accounted for, and return endpoints on
//! the dyadic grid `2^-prec`, rounded outward.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Starting precision (bits below the binary point) for escalating evaluations.
pub const START_PREC: u32 = 64;

/// Hard cap on the precision used by escalating evaluations.
pub const MAX_PREC: u32 = 1 << 14;

/// Arguments of `exp` above this magnitude are rejected.
const EXP_ARG_CAP: u32 = 1 << 20;

/// A closed interval `[lo, hi]` of rationals known to contain a real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealEnclosure {
    lo: Rational,
    hi: Rational,
}

impl RealEnclosure {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::domain(format!("empty enclosure [{lo}, {hi}]")));
        }
        Ok(RealEnclosure { lo, hi })
    }

    /// The degenerate enclosure of an exactly known value.
    pub fn exact(value: impl Into<Rational>) -> Self {
        let v = value.into();
        RealEnclosure { lo: v.clone(), hi: v }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn into_bounds(self) -> (Rational, Rational) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    pub fn midpoint(&self) -> Rational {
        Rational::from(&self.lo + &self.hi) >> 1u32
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    /// True if `other` lies inside `self`.
    pub fn contains_enclosure(&self, other: &RealEnclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &RealEnclosure) -> Option<RealEnclosure> {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| RealEnclosure {
            lo: lo.clone(),
            hi: hi.clone(),
        })
    }

    /// Provably strictly positive.
    pub fn is_positive(&self) -> bool {
        self.lo.cmp0() == Ordering::Greater
    }

    /// Provably strictly below `other`.
    pub fn certainly_lt(&self, other: &RealEnclosure) -> bool {
        self.hi < other.lo
    }

    /// Provably at most `other`.
    pub fn certainly_le(&self, other: &RealEnclosure) -> bool {
        self.hi <= other.lo
    }

    /// Widen the endpoints outward onto the grid `2^-prec`.
    pub fn rounded(&self, prec: u32) -> RealEnclosure {
        RealEnclosure {
            lo: round_down(&self.lo, prec),
            hi: round_up(&self.hi, prec),
        }
    }

    /// `floor` of the enclosed value, if both endpoints agree on it.
    pub fn floor_decided(&self) -> Option<Integer> {
        let a = floor_int(&self.lo);
        (a == floor_int(&self.hi)).then_some(a)
    }

    /// `ceil` of the enclosed value, if both endpoints agree on it.
    pub fn ceil_decided(&self) -> Option<Integer> {
        let a = ceil_int(&self.lo);
        (a == ceil_int(&self.hi)).then_some(a)
    }

    pub fn square(&self) -> RealEnclosure {
        let a = Rational::from(self.lo.square_ref());
        let b = Rational::from(self.hi.square_ref());
        if self.lo.cmp0() != Ordering::Less {
            RealEnclosure { lo: a, hi: b }
        } else if self.hi.cmp0() != Ordering::Greater {
            RealEnclosure { lo: b, hi: a }
        } else {
            let hi = if a > b { a } else { b };
            RealEnclosure {
                lo: Rational::new(),
                hi,
            }
        }
    }

    pub fn recip(&self) -> Result<RealEnclosure> {
        if self.lo.cmp0() != Ordering::Greater && self.hi.cmp0() != Ordering::Less {
            return Err(Error::domain("reciprocal of an enclosure containing 0"));
        }
        Ok(RealEnclosure {
            lo: Rational::from(self.hi.recip_ref()),
            hi: Rational::from(self.lo.recip_ref()),
        })
    }

    pub fn checked_div(&self, other: &RealEnclosure) -> Result<RealEnclosure> {
        Ok(self * &other.recip()?)
    }

    /// Multiply by `2^k` (exact).
    pub fn shl(&self, k: u32) -> RealEnclosure {
        RealEnclosure {
            lo: Rational::from(&self.lo << k),
            hi: Rational::from(&self.hi << k),
        }
    }

    pub fn exp(&self, prec: u32) -> Result<RealEnclosure> {
        let lo = exp_rational(&self.lo, prec)?;
        if self.is_exact() {
            return Ok(lo);
        }
        let hi = exp_rational(&self.hi, prec)?;
        Ok(RealEnclosure { lo: lo.lo, hi: hi.hi })
    }

    pub fn ln(&self, prec: u32) -> Result<RealEnclosure> {
        if self.lo.cmp0() != Ordering::Greater {
            return Err(Error::domain("logarithm of a non-positive enclosure"));
        }
        let lo = ln_rational(&self.lo, prec);
        if self.is_exact() {
            return Ok(lo);
        }
        let hi = ln_rational(&self.hi, prec);
        Ok(RealEnclosure { lo: lo.lo, hi: hi.hi })
    }

    pub fn sqrt(&self, prec: u32) -> Result<RealEnclosure> {
        if self.lo.cmp0() == Ordering::Less {
            return Err(Error::domain("square root of a negative enclosure"));
        }
        let (lo, lo_up) = sqrt_rational(&self.lo, prec);
        if self.is_exact() {
            return Ok(RealEnclosure { lo, hi: lo_up });
        }
        let (_, hi) = sqrt_rational(&self.hi, prec);
        Ok(RealEnclosure { lo, hi })
    }

    /// `self^q` for a positive base, as `exp(q ln self)`.
    pub fn pow_rational(&self, q: &Rational, prec: u32) -> Result<RealEnclosure> {
        if q.cmp0() == Ordering::Equal {
            return Ok(RealEnclosure::exact(1));
        }
        // The exponent scales the logarithm's error, and the exponential
        // scales absolute error by the size of the result.
        let qbits = magnitude_bits(&RealEnclosure::exact(q.clone()));
        let inv = self.recip()?;
        let qc = ceil_int(&Rational::from(q.abs_ref()))
            .to_u32()
            .ok_or_else(|| Error::domain("exponent too large"))?;
        let res_bits = (qc + 1) * (magnitude_bits(self) + magnitude_bits(&inv));
        let guard = prec + qbits + res_bits + 8;
        let l = self.ln(guard)?;
        let arg = &l * &RealEnclosure::exact(q.clone());
        arg.rounded(guard).exp(prec)
    }

    /// Euler's number.
    pub fn e(prec: u32) -> RealEnclosure {
        exp_rational(&Rational::from(1), prec).expect("exp(1) is in range")
    }
}

fn magnitude_bits(x: &RealEnclosure) -> u32 {
    let m = if Rational::from(x.lo.abs_ref()) > Rational::from(x.hi.abs_ref()) {
        Rational::from(x.lo.abs_ref())
    } else {
        Rational::from(x.hi.abs_ref())
    };
    let c = ceil_int(&m);
    c.significant_bits()
}

impl Add for &RealEnclosure {
    type Output = RealEnclosure;
    fn add(self, rhs: &RealEnclosure) -> RealEnclosure {
        RealEnclosure {
            lo: Rational::from(&self.lo + &rhs.lo),
            hi: Rational::from(&self.hi + &rhs.hi),
        }
    }
}

impl Sub for &RealEnclosure {
    type Output = RealEnclosure;
    fn sub(self, rhs: &RealEnclosure) -> RealEnclosure {
        RealEnclosure {
            lo: Rational::from(&self.lo - &rhs.hi),
            hi: Rational::from(&self.hi - &rhs.lo),
        }
    }
}

impl Mul for &RealEnclosure {
    type Output = RealEnclosure;
    fn mul(self, rhs: &RealEnclosure) -> RealEnclosure {
        let cands = [
            Rational::from(&self.lo * &rhs.lo),
            Rational::from(&self.lo * &rhs.hi),
            Rational::from(&self.hi * &rhs.lo),
            Rational::from(&self.hi * &rhs.hi),
        ];
        let mut lo = &cands[0];
        let mut hi = &cands[0];
        for c in &cands[1..] {
            if c < lo {
                lo = c;
            }
            if c > hi {
                hi = c;
            }
        }
        RealEnclosure {
            lo: lo.clone(),
            hi: hi.clone(),
        }
    }
}

impl Neg for &RealEnclosure {
    type Output = RealEnclosure;
    fn neg(self) -> RealEnclosure {
        RealEnclosure {
            lo: Rational::from(-&self.hi),
            hi: Rational::from(-&self.lo),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RealEnclosure {
            type Output = RealEnclosure;
            fn $m(self, rhs: RealEnclosure) -> RealEnclosure {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for RealEnclosure {
    type Output = RealEnclosure;
    fn neg(self) -> RealEnclosure {
        -&self
    }
}

pub fn floor_int(q: &Rational) -> Integer {
    let (_, f) = q.clone().fract_floor(Integer::new());
    f
}

pub fn ceil_int(q: &Rational) -> Integer {
    let mut c = q.clone();
    c.ceil_mut();
    c.into_numer_denom().0
}

/// Largest multiple of `2^-prec` not above `q`.
pub fn round_down(q: &Rational, prec: u32) -> Rational {
    if dyadic_fits(q, prec) {
        return q.clone();
    }
    let scaled = Rational::from(q << prec);
    Rational::from(floor_int(&scaled)) >> prec
}

/// Smallest multiple of `2^-prec` not below `q`.
pub fn round_up(q: &Rational, prec: u32) -> Rational {
    if dyadic_fits(q, prec) {
        return q.clone();
    }
    let scaled = Rational::from(q << prec);
    Rational::from(ceil_int(&scaled)) >> prec
}

fn dyadic_fits(q: &Rational, prec: u32) -> bool {
    let d = q.denom();
    d.is_power_of_two() && d.significant_bits() <= prec + 1
}

/// Outward rounding of fixed-point bounds `[lo, hi] / 2^w` to the grid `2^-prec`.
fn from_fixed(lo: Integer, hi: Integer, w: u32, prec: u32) -> RealEnclosure {
    let (lo, hi) = if w > prec {
        let sh = w - prec;
        let lo = lo >> sh;
        let hi = -((-hi) >> sh);
        (lo, hi)
    } else {
        (lo << (prec - w), hi << (prec - w))
    };
    RealEnclosure {
        lo: Rational::from(lo) >> prec,
        hi: Rational::from(hi) >> prec,
    }
}

fn exp_rational(x: &Rational, prec: u32) -> Result<RealEnclosure> {
    match x.cmp0() {
        Ordering::Equal => Ok(RealEnclosure::exact(1)),
        Ordering::Less => {
            // exp(-y) for y > 0 is the reciprocal of a value >= 1, which
            // shrinks absolute widths.
            let pos = exp_rational(&Rational::from(-x), prec + 2)?;
            let r = pos.recip()?;
            Ok(r.rounded(prec))
        }
        Ordering::Greater => exp_positive(x, prec),
    }
}

fn exp_positive(x: &Rational, prec: u32) -> Result<RealEnclosure> {
    let ceil_x = ceil_int(x);
    let cx = ceil_x
        .to_u32()
        .filter(|&c| c <= EXP_ARG_CAP)
        .ok_or_else(|| Error::domain(format!("exp argument {x} too large")))?;
    // Halve until the argument is at most 1/2.
    let mut s = 0u32;
    let half = Rational::from((1, 2));
    let mut y = x.clone();
    while y > half {
        y >>= 1u32;
        s += 1;
    }
    let mag = cx + cx / 2 + 2;
    let w = prec + mag + s + 32;
    let (p, q) = y.into_numer_denom();
    let one = Integer::from(1) << w;
    let mut sum = one.clone();
    let mut term = one;
    let mut i = 0u32;
    loop {
        i += 1;
        term *= &p;
        let d = Integer::from(&q * i);
        term = term.div_rem_floor(d).0;
        if term.cmp0() == Ordering::Equal {
            break;
        }
        sum += &term;
    }
    // Each computed term undershoots by at most 2 ulps and the omitted tail
    // is below 6 ulps.
    let mut lo = sum.clone();
    let mut hi: Integer = sum + (2 * i + 8);
    for _ in 0..s {
        lo = lo.square() >> w;
        let sq = hi.square();
        hi = -((-sq) >> w);
    }
    Ok(from_fixed(lo, hi, w, prec))
}

/// Fixed-point bounds for `atanh(p/q)` with `0 <= p/q <= 1/3`, scaled by `2^w`.
fn atanh_fixed(p: &Integer, q: &Integer, w: u32) -> (Integer, Integer) {
    let p2 = Integer::from(p.square_ref());
    let q2 = Integer::from(q.square_ref());
    let mut pow = (Integer::from(p << w)).div_rem_floor(q.clone()).0;
    let mut sum = pow.clone();
    let mut i = 0u32;
    loop {
        i += 1;
        pow *= &p2;
        pow = pow.div_rem_floor(q2.clone()).0;
        if pow.cmp0() == Ordering::Equal {
            break;
        }
        let t = Integer::from(&pow / (2 * i + 1));
        sum += t;
    }
    let hi = Integer::from(&sum + (3 * i + 8));
    (sum, hi)
}

fn ln_rational(x: &Rational, prec: u32) -> RealEnclosure {
    if *x == 1 {
        return RealEnclosure::exact(0);
    }
    let mut k = x.numer().significant_bits() as i64 - x.denom().significant_bits() as i64;
    let mut y = if k >= 0 {
        Rational::from(x >> k as u32)
    } else {
        Rational::from(x << (-k) as u32)
    };
    if y > (3, 2) {
        y >>= 1u32;
        k += 1;
    } else if y < (3, 4) {
        y <<= 1u32;
        k -= 1;
    }
    let kbits = 64 - k.unsigned_abs().leading_zeros();
    let w = prec + kbits + 16;

    let (a, b) = y.into_numer_denom();
    // z = (y - 1) / (y + 1), |z| <= 1/5
    let num = Integer::from(&a - &b);
    let den = Integer::from(&a + &b);
    let (zl, zh) = atanh_fixed(&Integer::from(num.abs_ref()), &den, w);
    let (zl, zh) = if num.cmp0() == Ordering::Less {
        (-zh, -zl)
    } else {
        (zl, zh)
    };
    let (l2l, l2h) = atanh_fixed(&Integer::from(1), &Integer::from(3), w);
    let (l2l, l2h) = (l2l * 2u32, l2h * 2u32);
    let (kl, kh) = if k >= 0 { (l2l * k, l2h * k) } else { (l2h * k, l2l * k) };
    let lo = kl + zl * 2u32;
    let hi = kh + zh * 2u32;
    from_fixed(lo, hi, w, prec)
}

/// Bounds `(floor, ceil)` of `sqrt(x)` on the grid `2^-prec`.
fn sqrt_rational(x: &Rational, prec: u32) -> (Rational, Rational) {
    let (p, q) = (x.numer(), x.denom());
    let scaled = Integer::from(p << (2 * prec));
    let (fl, rem) = scaled.div_rem_floor(q.clone());
    let (s, srem) = fl.sqrt_rem(Integer::new());
    let exact = rem.cmp0() == Ordering::Equal && srem.cmp0() == Ordering::Equal;
    let lo = Rational::from(s.clone()) >> prec;
    let hi = if exact {
        lo.clone()
    } else {
        Rational::from(s + 1u32) >> prec
    };
    (lo, hi)
}

/// `10^-digits` as an exact rational.
pub fn ten_pow_neg(digits: u32) -> Rational {
    Rational::from((Integer::from(1), Integer::from(10).pow(digits)))
}

/// A lazily evaluated real number: produces an enclosure at any precision.
#[derive(Clone)]
pub struct Real(Arc<dyn Fn(u32) -> Result<RealEnclosure> + Send + Sync>);

impl Real {
    pub fn new(f: impl Fn(u32) -> Result<RealEnclosure> + Send + Sync + 'static) -> Self {
        Real(Arc::new(f))
    }

    pub fn constant(q: Rational) -> Self {
        Real::new(move |_| Ok(RealEnclosure::exact(q.clone())))
    }

    pub fn at(&self, prec: u32) -> Result<RealEnclosure> {
        (self.0)(prec)
    }

    /// Nested enclosures at the given increasing precisions, each the
    /// intersection of all evaluations so far.
    pub fn refinements(&self, precs: &[u32]) -> Result<Vec<RealEnclosure>> {
        let mut out: Vec<RealEnclosure> = Vec::with_capacity(precs.len());
        for &p in precs {
            let e = self.at(p)?;
            let next = match out.last() {
                Some(prev) => prev
                    .intersect(&e)
                    .ok_or_else(|| Error::domain("inconsistent enclosures during refinement"))?,
                None => e,
            };
            out.push(next);
        }
        Ok(out)
    }

    /// Escalate precision until the enclosure is narrower than `width`.
    pub fn to_width(&self, width: &Rational) -> Result<RealEnclosure> {
        let mut prec = START_PREC;
        loop {
            let e = self.at(prec)?;
            if e.width() <= *width {
                return Ok(e);
            }
            if prec >= MAX_PREC {
                return Err(Error::PrecisionExhausted(format!(
                    "width {} still above target {width} at {prec} bits",
                    e.width()
                )));
            }
            prec *= 2;
        }
    }

    /// Certified `floor`, escalating precision; fails once the enclosure is
    /// narrower than `10^-60` without deciding.
    pub fn floor(&self, what: &str) -> Result<Integer> {
        self.decide(what, RealEnclosure::floor_decided)
    }

    /// Certified `ceil`; see [`Real::floor`].
    pub fn ceil(&self, what: &str) -> Result<Integer> {
        self.decide(what, RealEnclosure::ceil_decided)
    }

    /// Certified comparison with a rational, escalating precision. An
    /// enclosure that stays around `q` down to `10^-60` is an error unless it
    /// collapses to `q` exactly.
    pub fn cmp_rational(&self, q: &Rational, what: &str) -> Result<Ordering> {
        let cap = ten_pow_neg(60);
        let mut prec = START_PREC;
        loop {
            let e = self.at(prec)?;
            if e.lo() > q {
                return Ok(Ordering::Greater);
            }
            if e.hi() < q {
                return Ok(Ordering::Less);
            }
            if e.is_exact() {
                return Ok(Ordering::Equal);
            }
            if e.width() < cap || prec >= MAX_PREC {
                return Err(Error::UndecidableRounding(format!(
                    "{what}: cannot separate from {q} at width {}",
                    e.width().to_f64()
                )));
            }
            prec *= 2;
        }
    }

    fn decide(&self, what: &str, f: impl Fn(&RealEnclosure) -> Option<Integer>) -> Result<Integer> {
        let cap = ten_pow_neg(60);
        let mut prec = START_PREC;
        loop {
            let e = self.at(prec)?;
            if let Some(v) = f(&e) {
                return Ok(v);
            }
            if e.width() < cap || prec >= MAX_PREC {
                return Err(Error::UndecidableRounding(format!(
                    "{what}: enclosure [{}, {}] straddles an integer",
                    e.lo().to_f64(),
                    e.hi().to_f64()
                )));
            }
            prec *= 2;
        }
    }
}

impl std::fmt::Debug for Real {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Real(..)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        crate::decimal::parse_decimal(s).unwrap()
    }

    /// The enclosure lies within `tol` of the truncated decimal `lit`.
    fn near(x: &RealEnclosure, lit: &str, tol_digits: u32) {
        let c = r(lit);
        let tol = ten_pow_neg(tol_digits);
        let outer = RealEnclosure::new(Rational::from(&c - &tol), Rational::from(&c + &tol)).unwrap();
        assert!(
            outer.contains_enclosure(x),
            "{lit}: [{}, {}]",
            x.lo().to_f64(),
            x.hi().to_f64()
        );
    }

    #[test]
    fn e_digits() {
        let e = RealEnclosure::e(200);
        near(&e, "2.71828182845904523536028747135266249775724709369995", 50);
        assert!(e.width() <= Rational::from(1) >> 199u32);
    }

    #[test]
    fn exp_negative_and_large() {
        let x = RealEnclosure::exact(-10).exp(100).unwrap();
        near(&x, "0.0000453999297624848515355915155605506102379", 28);
        let y = RealEnclosure::exact(50).exp(40).unwrap();
        near(&y, "5184705528587072464087.45332293348538", 10);
        assert!(y.width() < Rational::from(1) >> 38u32);
    }

    #[test]
    fn ln_values() {
        let l2 = RealEnclosure::exact(2).ln(150).unwrap();
        near(&l2, "0.693147180559945309417232121458176568075500134360255", 44);
        let lt = RealEnclosure::exact(Rational::from((1, 1000))).ln(120).unwrap();
        near(&lt, "-6.90775527898213705205397436405309262280330446", 35);
        let big = RealEnclosure::exact(59301).ln(100).unwrap();
        near(&big, "10.9903814482500392756626332246916", 30);
    }

    #[test]
    fn sqrt_exact_and_inexact() {
        let s = RealEnclosure::exact(Rational::from((9, 4))).sqrt(30).unwrap();
        assert!(s.is_exact());
        assert_eq!(*s.lo(), Rational::from((3, 2)));
        let t = RealEnclosure::exact(2).sqrt(100).unwrap();
        assert!(t.contains(&r("1.41421356237309504880168872420969807856967")));
    }

    #[test]
    fn pow_two_thirds() {
        let x = RealEnclosure::exact(1000)
            .pow_rational(&Rational::from((2, 3)), 60)
            .unwrap();
        assert!(x.contains(&Rational::from(100)));
        assert!(x.width() < Rational::from(1) >> 50u32);
    }

    #[test]
    fn decided_rounding() {
        let x = RealEnclosure::new(Rational::from((7, 2)), Rational::from((15, 4))).unwrap();
        assert_eq!(x.floor_decided(), Some(Integer::from(3)));
        assert_eq!(x.ceil_decided(), Some(Integer::from(4)));
        let y = RealEnclosure::new(Rational::from((7, 2)), Rational::from((9, 2))).unwrap();
        assert_eq!(y.floor_decided(), None);
        let exact = Real::constant(Rational::from(5));
        assert!(matches!(exact.ceil("five"), Ok(v) if v == 5));
    }

    #[test]
    fn undecidable_integer_straddle() {
        let v = Real::new(|p| {
            let eps = Rational::from(1) >> p;
            RealEnclosure::new(Rational::from(3) - eps.clone(), Rational::from(3) + eps)
        });
        assert!(matches!(v.floor("three"), Err(Error::UndecidableRounding(_))));
    }
}
