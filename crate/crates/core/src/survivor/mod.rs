//! Exact one-round survivor distributions and occupancy (balls-in-boxes)
//! distributions, plus certified scaled lower bounds on `P(S_n = k)`.

mod kernel;
mod sturm;

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::decimal::{to_decimal, Rounding};
use crate::error::{Error, Result};

pub use kernel::{LowerBoundKernel, RowStats};
pub use sturm::{
    count_real_roots, y_generating_poly, y_generating_poly_real_rooted, y_generating_poly_real_rooted_capped, IntPoly,
    REAL_ROOTED_MAX_N,
};

/// The default scale `10^10` for scaled probabilities.
pub const DEFAULT_SCALE: u64 = 10_000_000_000;

pub fn default_scale() -> Integer {
    Integer::from(DEFAULT_SCALE)
}

/// Exact probability mass function on a contiguous integer range, stored as
/// numerators over one common denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pmf {
    offset: i64,
    numerators: Vec<Integer>,
    denominator: Integer,
}

impl Pmf {
    /// Masses `numerators[i] / denominator` on outcomes `offset + i`.
    pub fn new(offset: i64, numerators: Vec<Integer>, denominator: Integer) -> Result<Self> {
        if denominator.cmp0() != Ordering::Greater {
            return Err(Error::domain("pmf denominator must be positive"));
        }
        if numerators.iter().any(|m| m.cmp0() == Ordering::Less) {
            return Err(Error::domain("pmf has a negative mass"));
        }
        let total: Integer = numerators.iter().sum();
        if total != denominator {
            return Err(Error::domain("pmf masses do not sum to 1"));
        }
        Ok(Pmf {
            offset,
            numerators,
            denominator,
        })
    }

    pub fn denominator(&self) -> &Integer {
        &self.denominator
    }

    /// Outcomes with nonzero mass, in increasing order.
    pub fn support(&self) -> Vec<i64> {
        self.iter_numerators()
            .filter(|(_, m)| m.cmp0() != Ordering::Equal)
            .map(|(x, _)| x)
            .collect()
    }

    pub fn numerator(&self, outcome: i64) -> Integer {
        self.index(outcome)
            .map(|i| self.numerators[i].clone())
            .unwrap_or_default()
    }

    pub fn mass(&self, outcome: i64) -> Rational {
        Rational::from((self.numerator(outcome), self.denominator.clone()))
    }

    fn index(&self, outcome: i64) -> Option<usize> {
        let i = outcome.checked_sub(self.offset)?;
        (i >= 0 && (i as usize) < self.numerators.len()).then_some(i as usize)
    }

    /// `(outcome, numerator)` pairs over the stored range, zeros included.
    pub fn iter_numerators(&self) -> impl Iterator<Item = (i64, &Integer)> + '_ {
        self.numerators
            .iter()
            .enumerate()
            .map(move |(i, m)| (self.offset + i as i64, m))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Rational)> + '_ {
        self.iter_numerators()
            .map(move |(x, m)| (x, Rational::from((m.clone(), self.denominator.clone()))))
    }

    /// The pmf of `X + by`.
    pub fn shifted(&self, by: i64) -> Pmf {
        Pmf {
            offset: self.offset + by,
            ..self.clone()
        }
    }

    pub fn at_least(&self, k: i64) -> Rational {
        let s: Integer = self.iter_numerators().filter(|(x, _)| *x >= k).map(|(_, m)| m).sum();
        Rational::from((s, self.denominator.clone()))
    }

    pub fn at_most(&self, k: i64) -> Rational {
        let s: Integer = self.iter_numerators().filter(|(x, _)| *x <= k).map(|(_, m)| m).sum();
        Rational::from((s, self.denominator.clone()))
    }

    pub fn mean(&self) -> Rational {
        let s: Integer = self.iter_numerators().map(|(x, m)| Integer::from(m * x)).sum();
        Rational::from((s, self.denominator.clone()))
    }

    /// Exact total-variation distance to the empirical distribution of `counts`
    /// (pairs of outcome and count).
    pub fn total_variation(&self, counts: &[(i64, u64)]) -> Rational {
        let trials: u64 = counts.iter().map(|c| c.1).sum();
        if trials == 0 {
            return Rational::from(1);
        }
        let mut outcomes: Vec<i64> = self.iter_numerators().map(|(x, _)| x).collect();
        outcomes.extend(counts.iter().map(|c| c.0));
        outcomes.sort_unstable();
        outcomes.dedup();
        let t = Integer::from(trials);
        // |m/D - c/T| summed, over the common denominator D*T.
        let mut acc = Integer::new();
        for x in outcomes {
            let c: u64 = counts.iter().filter(|p| p.0 == x).map(|p| p.1).sum();
            let d = (self.numerator(x) * &t) - Integer::from(&self.denominator * c);
            acc += d.abs();
        }
        Rational::from((acc, Integer::from(&self.denominator * &t) * 2u32))
    }

    /// CSV with columns `outcome,numerator,denominator`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["outcome", "numerator", "denominator"])?;
        let den = self.denominator.to_string();
        for (x, m) in self.iter_numerators() {
            out.write_record([x.to_string(), m.to_string(), den.clone()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV with columns `outcome,value,rounding`: decimals with the rounding
    /// direction spelled out (`exact` when no rounding happened).
    pub fn write_decimal_csv<W: Write>(&self, w: W, digits: u32, dir: Rounding) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["outcome", "value", "rounding"])?;
        for (x, q) in self.iter() {
            let label = if crate::decimal::is_exact_decimal(&q, digits) {
                "exact".to_string()
            } else {
                dir.to_string()
            };
            out.write_record([x.to_string(), to_decimal(&q, digits, dir), label])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A probability bound `numerator / scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledProb {
    numerator: Integer,
    scale: Integer,
}

impl ScaledProb {
    pub fn new(numerator: Integer, scale: Integer) -> Result<Self> {
        if scale.cmp0() != Ordering::Greater {
            return Err(Error::domain("scale must be positive"));
        }
        if numerator.cmp0() == Ordering::Less || numerator > scale {
            return Err(Error::domain(format!(
                "scaled probability {numerator}/{scale} outside [0, 1]"
            )));
        }
        Ok(ScaledProb { numerator, scale })
    }

    pub fn numerator(&self) -> &Integer {
        &self.numerator
    }

    pub fn scale(&self) -> &Integer {
        &self.scale
    }

    pub fn to_rational(&self) -> Rational {
        Rational::from((self.numerator.clone(), self.scale.clone()))
    }
}

/// One inclusion-exclusion term of the survivor distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedTerm {
    pub n: u32,
    pub k: u32,
    pub r: u32,
    pub value: Integer,
}

impl TruncatedTerm {
    /// `C(n,k) C(n-k,r) (n-k-r)^(k+r) (n-k-r-1)^(n-k-r)`, zero when `n-k-r <= 0`.
    pub fn new(n: u32, k: u32, r: u32) -> Self {
        let value = if k + r >= n {
            Integer::new()
        } else {
            let m = n - k - r;
            Integer::from(Integer::binomial_u(n, k))
                * Integer::from(Integer::binomial_u(n - k, r))
                * Integer::from(Integer::u_pow_u(m, k + r))
                * Integer::from(Integer::u_pow_u(m - 1, m))
        };
        TruncatedTerm { n, k, r, value }
    }
}

/// `Q_m = m^(n-m) (m-1)^m`, the `k`-independent factor of the terms with
/// `n-k-r = m`; `Q_n = (n-1)^n`.
pub(crate) fn q_factor(n: u32, m: u32) -> Integer {
    if m < 2 {
        return Integer::new();
    }
    Integer::from(Integer::u_pow_u(m, n - m)) * Integer::from(Integer::u_pow_u(m - 1, m))
}

fn check_n(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be at least 2")));
    }
    Ok(())
}

/// Exact distribution of the number of survivors `S_n` after one round.
pub fn s_pmf_exact(n: u32) -> Result<Pmf> {
    check_n(n)?;
    let q: Vec<Integer> = (0..=n).map(|m| q_factor(n, m)).collect();
    let mut nums = Vec::with_capacity(n as usize - 1);
    for k in 0..=n - 2 {
        let j = n - k;
        let mut sum = Integer::new();
        let mut c = Integer::from(1);
        for r in 0..=j - 2 {
            let t = Integer::from(&c * &q[(j - r) as usize]);
            if r % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
            c *= j - r;
            c.div_exact_u_mut(r + 1);
        }
        nums.push(sum * Integer::from(Integer::binomial_u(n, k)));
    }
    Pmf::new(0, nums, q[n as usize].clone())
}

/// The certified lower bound `P_{n,k}` on `scale * P(S_n = k)`, evaluated
/// directly from the definition.
pub fn s_pmf_lower_scaled(n: u32, k: u32, scale: &Integer) -> Result<ScaledProb> {
    check_n(n)?;
    if k > n - 2 {
        return Err(Error::domain(format!("k = {k} outside 0..={}", n - 2)));
    }
    let d = Integer::from(Integer::u_pow_u(n - 1, n));
    let mut sum = Integer::new();
    let mut r = 0;
    loop {
        let even = TruncatedTerm::new(n, k, r).value;
        if Integer::from(scale * &even) < d {
            break;
        }
        sum += even;
        sum -= TruncatedTerm::new(n, k, r + 1).value;
        r += 2;
    }
    let m = Integer::from(scale * &sum).div_rem_floor(d).0;
    ScaledProb::new(m.max(Integer::new()), scale.clone())
}

/// Exact distribution of the number of empty boxes after throwing `balls`
/// balls uniformly into `boxes` boxes.
pub fn empty_boxes_pmf(balls: u32, boxes: u32) -> Result<Pmf> {
    if boxes == 0 {
        return Err(Error::domain("at least one box is required"));
    }
    let nb = boxes;
    // pw[m] = m^balls with 0^0 = 1
    let pw: Vec<Integer> = (0..=nb).map(|m| Integer::from(Integer::u_pow_u(m, balls))).collect();
    let mut nums = Vec::with_capacity(nb as usize + 1);
    for e in 0..=nb {
        let j = nb - e;
        let mut sum = Integer::new();
        let mut c = Integer::from(1);
        for r in 0..=j {
            let t = Integer::from(&c * &pw[(j - r) as usize]);
            if r % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
            c *= j - r;
            c.div_exact_u_mut(r + 1);
        }
        nums.push(sum * Integer::from(Integer::binomial_u(nb, e)));
    }
    Pmf::new(0, nums, Integer::from(Integer::u_pow_u(nb, balls)))
}

/// Distribution of `Y_n`: empty boxes after `n-1` balls into `n-1` boxes.
pub fn y_pmf(n: u32) -> Result<Pmf> {
    check_n(n)?;
    empty_boxes_pmf(n - 1, n - 1)
}

/// Distribution of `Z_n`: one plus the empty boxes after `n` balls into
/// `n-1` boxes.
pub fn z_pmf(n: u32) -> Result<Pmf> {
    check_n(n)?;
    Ok(empty_boxes_pmf(n, n - 1)?.shifted(1))
}

/// Which tail of `Y_n` to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailDirection {
    AtLeast,
    AtMost,
}

/// Number of consecutive terms summed by one parallel task in the tails.
const TAIL_CHUNK: u32 = 128;

/// Exact `P(Y_n >= k)` or `P(Y_n <= k)` from the integer-term closed forms.
///
/// With `N = n - 1` balls and boxes, both tails are alternating sums of
/// `C(N, k+r) C(k+r-1, r or r-1) (N-k-r)^N` over `N^N`. The terms are summed
/// in parallel chunks; the integer result does not depend on the schedule.
pub fn y_tail_exact(n: u32, k: u32, direction: TailDirection) -> Result<Rational> {
    check_n(n)?;
    let big_n = n - 1;
    let den = Integer::from(Integer::u_pow_u(big_n, big_n));
    let (first, lower_index) = match direction {
        TailDirection::AtLeast => {
            if k == 0 {
                return Err(Error::domain("the at-least tail needs k >= 1"));
            }
            // At least one ball lands, so not every box can stay empty.
            if k >= big_n {
                return Ok(Rational::new());
            }
            (0, false)
        }
        TailDirection::AtMost => {
            if k >= big_n {
                return Ok(Rational::from(1));
            }
            (1, true)
        }
    };
    // Terms with N-k-r = 0 vanish, so r stops at N-k-1.
    let last = big_n - k - 1;
    let chunks: Vec<(u32, u32)> = (first..=last)
        .step_by(TAIL_CHUNK as usize)
        .map(|a| (a, (a + TAIL_CHUNK - 1).min(last)))
        .collect();
    let partial: Vec<Integer> = chunks
        .par_iter()
        .map(|&(a, b)| tail_chunk(big_n, k, a, b, lower_index))
        .collect();
    let mut sum: Integer = partial.into_iter().sum();
    if lower_index {
        sum += &den;
    }
    Ok(Rational::from((sum, den)))
}

/// `sum_{r=a}^{b} (-1)^r C(N,k+r) C(k+r-1, r') (N-k-r)^N` with `r' = r - 1`
/// when `lower_index` is set and `r' = r` otherwise.
fn tail_chunk(big_n: u32, k: u32, a: u32, b: u32, lower_index: bool) -> Integer {
    let second = |r: u32| {
        if lower_index {
            Integer::from(Integer::binomial_u(k + r - 1, r - 1))
        } else {
            Integer::from(Integer::binomial_u(k + r - 1, r))
        }
    };
    let mut c = Integer::from(Integer::binomial_u(big_n, k + a)) * second(a);
    let mut sum = Integer::new();
    for r in a..=b {
        let m = big_n - k - r;
        let t = Integer::from(Integer::u_pow_u(m, big_n)) * &c;
        if r % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
        // C(N, k+r+1) = C(N, k+r) (N-k-r) / (k+r+1), and the second factor
        // gains (k+r)/(r+1), or (k+r)/r for the shifted index.
        c *= m;
        c *= k + r;
        c.div_exact_u_mut(k + r + 1);
        c.div_exact_u_mut(if lower_index { r } else { r + 1 });
    }
    sum
}

/// Stirling number of the second kind `S(i, k)`.
pub fn stirling2(i: u32, k: u32) -> Integer {
    if k > i {
        return Integer::new();
    }
    if k == 0 {
        return Integer::from(u32::from(i == 0));
    }
    // k! S(i,k) = sum_j (-1)^j C(k,j) (k-j)^i
    let mut sum = Integer::new();
    for j in 0..=k {
        let t = Integer::from(Integer::binomial_u(k, j)) * Integer::from(Integer::u_pow_u(k - j, i));
        if j % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    sum.div_exact(&Integer::from(Integer::factorial(k)))
}

/// Exact `E Y_n = (n-2)^(n-1) / (n-1)^(n-2)`.
pub fn expected_empty(n: u32) -> Result<Rational> {
    check_n(n)?;
    if n == 2 {
        return Ok(Rational::new());
    }
    Ok(Rational::from((
        Integer::from(n - 2).pow(n - 1),
        Integer::from(n - 1).pow(n - 2),
    )))
}

#[cfg(test)]
mod tests;
