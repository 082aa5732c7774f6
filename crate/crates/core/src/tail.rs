//! Janson-type tail bounds for sums of independent Bernoulli variables, their
//! specialization to the empty-box count `Y_n`, and exact checks of those
//! bounds against the closed-form tails.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rug::{Integer, Rational};

use crate::decimal::{to_decimal, Rounding};
use crate::enclosure::{Real, RealEnclosure};
use crate::error::{Error, Result};
use crate::survivor::{y_tail_exact, TailDirection};

pub use crate::survivor::expected_empty;

/// Default target width for bound enclosures.
pub fn default_width() -> Rational {
    Rational::from((1, Integer::from(1) << 100))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `P(W <= E W - u)`.
    Lower,
    /// `P(W >= E W + u)`.
    Upper,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        })
    }
}

/// `W` is a sum of `n` independent Bernoulli variables with `E W = n p`;
/// `u` is the deviation from the mean.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BernoulliSumParams {
    pub n: u64,
    pub p: Rational,
    pub u: Rational,
}

impl BernoulliSumParams {
    pub fn new(n: u64, p: Rational, u: Rational) -> Result<Self> {
        if !(0..=1).contains(&p) {
            return Err(Error::domain(format!("p = {p} outside [0, 1]")));
        }
        if u < 0 {
            return Err(Error::domain(format!("deviation u = {u} is negative")));
        }
        Ok(BernoulliSumParams { n, p, u })
    }

    /// `n p (1 - p) -+ u (1 - 2p) / 3`, minus for the lower tail.
    pub fn denominator(&self, side: Side) -> Rational {
        let q = Rational::from(1 - &self.p);
        let var = Rational::from(&self.p * &q) * self.n;
        let skew = (&self.u * Rational::from(&q - &self.p)) / 3u32;
        match side {
            Side::Lower => var - skew,
            Side::Upper => var + skew,
        }
    }
}

/// Enclosure of `exp(-u^2 / (2 (n p (1-p) -+ u (1-2p)/3)))` no wider than
/// `width`.
pub fn janson_bound(params: &BernoulliSumParams, side: Side, width: &Rational) -> Result<RealEnclosure> {
    if params.u == 0 {
        return Ok(RealEnclosure::exact(1));
    }
    let d = params.denominator(side);
    if d <= 0 {
        return Err(Error::domain(format!(
            "denominator {d} is not positive; the {side} bound does not apply"
        )));
    }
    let x = -(Rational::from(params.u.square_ref()) / (d * 2u32));
    Real::new(move |prec| RealEnclosure::exact(x.clone()).exp(prec)).to_width(width)
}

fn y_bound_real(n: u32, u: Rational, side: Side) -> Real {
    Real::new(move |prec| {
        if u == 0 {
            return Ok(RealEnclosure::exact(1));
        }
        let guard = prec + 16;
        let e = RealEnclosure::e(guard);
        let one = RealEnclosure::exact(1);
        let num = &e.square() * &RealEnclosure::exact(Rational::from(u.square_ref()));
        let mut den = &RealEnclosure::exact(n - 1) * &(&e - &one);
        if side == Side::Upper {
            let two = RealEnclosure::exact(2);
            let extra = &(&RealEnclosure::exact(u.clone()) * &e) * &(&e - &two);
            den = &den + &(&extra * &RealEnclosure::exact(Rational::from((1, 3))));
        }
        let arg = num.checked_div(&(&den * &RealEnclosure::exact(2)))?;
        (-arg).rounded(guard).exp(prec)
    })
}

/// The bound for `Y_n`: `exp(-e^2 u^2 / (2 (n-1)(e-1)))` on the lower side
/// and `exp(-e^2 u^2 / (2 ((n-1)(e-1) + u e (e-2)/3)))` on the upper side.
pub fn y_tail_bound(n: u32, u: &Rational, side: Side, width: &Rational) -> Result<RealEnclosure> {
    check_y(n, u)?;
    y_bound_real(n, u.clone(), side).to_width(width)
}

fn check_y(n: u32, u: &Rational) -> Result<()> {
    if n < 4 {
        return Err(Error::domain(format!("n = {n} must be at least 4")));
    }
    if *u < 0 {
        return Err(Error::domain(format!("deviation u = {u} is negative")));
    }
    Ok(())
}

/// The cut-off of the event bounded by [`y_tail_bound`]: `(n - 5/3)/e - u`
/// on the lower side, `(n - 3/2)/e + u` on the upper side.
pub fn y_tail_threshold(n: u32, u: &Rational, side: Side) -> Real {
    let u = u.clone();
    Real::new(move |prec| {
        let shift = match side {
            Side::Lower => Rational::from((5, 3)),
            Side::Upper => Rational::from((3, 2)),
        };
        let c = RealEnclosure::exact(Rational::from(n) - shift).checked_div(&RealEnclosure::e(prec))?;
        Ok(match side {
            Side::Lower => &c - &RealEnclosure::exact(u.clone()),
            Side::Upper => &c + &RealEnclosure::exact(u.clone()),
        })
    })
}

/// Exact probability of the event bounded by [`y_tail_bound`].
pub fn y_tail_event_exact(n: u32, u: &Rational, side: Side) -> Result<Rational> {
    check_y(n, u)?;
    let t = y_tail_threshold(n, u, side);
    match side {
        Side::Lower => {
            let k = t.floor("lower tail cut-off")?;
            if k < 0 {
                return Ok(Rational::new());
            }
            y_tail_exact(n, k.to_u32().unwrap_or(u32::MAX), TailDirection::AtMost)
        }
        Side::Upper => {
            let k = t.ceil("upper tail cut-off")?;
            if k <= 0 {
                return Ok(Rational::from(1));
            }
            y_tail_exact(n, k.to_u32().unwrap_or(u32::MAX), TailDirection::AtLeast)
        }
    }
}

/// `(n - 5/3)/e <= E Y_n <= (n - 3/2)/e`, decided with enclosures of `e`.
pub fn ey_sandwich(n: u32) -> Result<bool> {
    if n < 4 {
        return Err(Error::domain(format!("n = {n} must be at least 4")));
    }
    let ey = expected_empty(n)?;
    let zero = Rational::new();
    let lo = y_tail_threshold(n, &zero, Side::Lower).cmp_rational(&ey, "lower end of E Y_n")?;
    let hi = y_tail_threshold(n, &zero, Side::Upper).cmp_rational(&ey, "upper end of E Y_n")?;
    Ok(lo != Ordering::Greater && hi != Ordering::Less)
}

/// Check `(1-u)^(1/u) <= (1 - u/2)/e` and `(1-u)^(1/u) >= (1 - u/2 - u^2/2)/e`
/// at every grid point.
pub fn u_inequality_check(grid: &[Rational]) -> Result<bool> {
    for u in grid {
        if *u <= 0 || *u >= 1 {
            return Err(Error::domain(format!("grid point {u} outside (0, 1)")));
        }
        let (upper, lower) = u_inequality_gaps(u);
        if upper.cmp_rational(&Rational::new(), "upper inequality")? == Ordering::Greater {
            return Ok(false);
        }
        if lower.cmp_rational(&Rational::new(), "lower inequality")? == Ordering::Less {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(1-u)^(1/u) - (1-u/2)/e` and `(1-u)^(1/u) - (1-u/2-u^2/2)/e`.
fn u_inequality_gaps(u: &Rational) -> (Real, Real) {
    let make = |quad: bool| {
        let u = u.clone();
        Real::new(move |prec| {
            let base = RealEnclosure::exact(Rational::from(1 - &u));
            let lhs = base.pow_rational(&Rational::from(u.recip_ref()), prec)?;
            let mut c = Rational::from(1) - Rational::from(&u / 2u32);
            if quad {
                c -= Rational::from(u.square_ref()) / 2u32;
            }
            let rhs = RealEnclosure::exact(c).checked_div(&RealEnclosure::e(prec))?;
            Ok(&lhs - &rhs)
        })
    };
    (make(false), make(true))
}

/// One comparison of an exact tail with the hi-endpoint of its bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominationRow {
    pub n: u32,
    pub u: Rational,
    pub side: Side,
    pub exact_tail: Rational,
    pub bound_hi: Rational,
    pub dominated: bool,
}

/// Compare exact tails with the bounds for every `n` in `ns` and every
/// integer `u` in `0..=n`.
pub fn domination_report(ns: impl IntoIterator<Item = u32>, side: Side) -> Result<Vec<DominationRow>> {
    let width = default_width();
    let mut rows = Vec::new();
    for n in ns {
        for u in 0..=n {
            let u = Rational::from(u);
            let exact = y_tail_event_exact(n, &u, side)?;
            let bound = y_tail_bound(n, &u, side, &width)?;
            let dominated = if u == 0 {
                exact <= 1
            } else {
                y_bound_real(n, u.clone(), side).cmp_rational(&exact, "tail domination")? != Ordering::Less
            };
            rows.push(DominationRow {
                n,
                u,
                side,
                exact_tail: exact,
                bound_hi: bound.hi().clone(),
                dominated,
            });
        }
    }
    Ok(rows)
}

/// CSV `n,u,exact_tail,bound_hi,verdict` with 15 decimals rounded up.
pub fn write_domination_csv<W: Write>(rows: &[DominationRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "u", "exact_tail", "bound_hi", "verdict"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.u.to_string(),
            to_decimal(&r.exact_tail, 15, Rounding::Up),
            to_decimal(&r.bound_hi, 15, Rounding::Up),
            if r.dominated { "dominated" } else { "violated" }.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
