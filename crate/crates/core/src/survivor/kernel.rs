//! Fast evaluation of `P_{n,k}` for a sweep over increasing `n`.
//!
//! Every term factors as `C(n,k) * C(n-k,r) * Q_m` with `m = n-k-r` and
//! `Q_m = m^(n-m) (m-1)^m`, and `Q_m` for `n+1` is `m * Q_m` for `n`, so the
//! exact table of `Q_m` is carried from one `n` to the next.
//!
//! The alternating sum itself is accumulated on a truncated fixed-point
//! frame: each term is bracketed by integers in units of `2^e`, where `e` is
//! chosen so that one unit is far below the resolution of the final floor.
//! When the bracket cannot decide a comparison or the final floor, the
//! kernel falls back to the exact integer sum, so results always equal the
//! definition.

use std::cmp::Ordering;

use rug::{Complete, Integer};

use super::{q_factor, ScaledProb};
use crate::error::{Error, Result};

/// Guard bits between the final floor and one unit of the truncated frame.
const GUARD_BITS: i64 = 64;

/// Below this `n` the exact sum is cheap enough to use directly.
const EXACT_BELOW: u32 = 100;

/// Counters describing how a batch of `P_{n,k}` values was obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RowStats {
    pub terms: u64,
    pub exact_fallbacks: u64,
}

impl RowStats {
    pub fn merge(self, other: RowStats) -> RowStats {
        RowStats {
            terms: self.terms + other.terms,
            exact_fallbacks: self.exact_fallbacks + other.exact_fallbacks,
        }
    }
}

/// Evaluates `P_{n,k}` for one `n` at a time; [`LowerBoundKernel::advance`]
/// moves to `n + 1`.
#[derive(Clone, Debug)]
pub struct LowerBoundKernel {
    n: u32,
    scale: Integer,
    q: Vec<Integer>,
}

impl LowerBoundKernel {
    pub fn new(n: u32, scale: Integer) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("n = {n} must be at least 2")));
        }
        if scale.cmp0() != Ordering::Greater {
            return Err(Error::domain("scale must be positive"));
        }
        let q = (0..=n).map(|m| q_factor(n, m)).collect();
        Ok(LowerBoundKernel { n, scale, q })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn scale(&self) -> &Integer {
        &self.scale
    }

    /// The common denominator `(n-1)^n`.
    pub fn denominator(&self) -> &Integer {
        &self.q[self.n as usize]
    }

    pub fn advance(&mut self) {
        for (m, qm) in self.q.iter_mut().enumerate().skip(2) {
            *qm *= m as u32;
        }
        let n = self.n;
        self.q.push(Integer::from(Integer::u_pow_u(n, n + 1)));
        self.n += 1;
    }

    fn check_k(&self, k: u32) -> Result<()> {
        if k > self.n - 2 {
            return Err(Error::domain(format!("k = {k} outside 0..={}", self.n - 2)));
        }
        Ok(())
    }

    /// `P_{n,k}` via the exact integer sum.
    pub fn lower_scaled_exact(&self, k: u32) -> Result<(ScaledProb, RowStats)> {
        self.check_k(k)?;
        let n = self.n;
        let j = n - k;
        let d = self.denominator();
        let w = Integer::from(Integer::binomial_u(n, k)) * &self.scale;
        let mut sum = Integer::new();
        let mut c = Integer::from(1);
        let mut terms = 0;
        for r in 0..j.saturating_sub(1) {
            let t = Integer::from(&c * &self.q[(j - r) as usize]);
            terms += 1;
            if r % 2 == 0 {
                if Integer::from(&w * &t) < *d {
                    break;
                }
                sum += t;
            } else {
                sum -= t;
            }
            c *= j - r;
            c.div_exact_u_mut(r + 1);
        }
        let m = (w * sum).div_rem_floor(d.clone()).0;
        let p = ScaledProb::new(m.max(Integer::new()), self.scale.clone())?;
        Ok((
            p,
            RowStats {
                terms,
                exact_fallbacks: 0,
            },
        ))
    }

    /// `P_{n,k}`, bit-identical to the definition.
    pub fn lower_scaled(&self, k: u32) -> Result<(ScaledProb, RowStats)> {
        self.check_k(k)?;
        let n = self.n;
        if n < EXACT_BELOW {
            return self.lower_scaled_exact(k);
        }
        let j = n - k;
        let d = self.denominator();
        let w = Integer::from(Integer::binomial_u(n, k)) * &self.scale;
        let e = d.significant_bits() as i64 - w.significant_bits() as i64 - GUARD_BITS - 1;
        if e < 0 {
            return self.lower_scaled_exact(k);
        }
        let e_u = e as u32;
        let theta = d.div_rem_ceil_ref(&Integer::from(&w << e_u)).complete().0;

        let mut tlo = Integer::new();
        let mut thi = Integer::new();
        let mut c = Integer::from(1);
        let mut terms = 0;
        for r in 0..j.saturating_sub(1) {
            let qm = &self.q[(j - r) as usize];
            let (lo, hi) = bracket(&c, qm, e);
            terms += 1;
            if r % 2 == 0 {
                let small = if hi < theta {
                    true
                } else if lo >= theta {
                    false
                } else {
                    Integer::from(&w * &c) * qm < *d
                };
                if small {
                    break;
                }
                tlo += lo;
                thi += hi;
            } else {
                tlo -= hi;
                thi -= lo;
            }
            c *= j - r;
            c.div_exact_u_mut(r + 1);
        }
        let p_lo = (Integer::from(&w * &tlo) << e_u).div_rem_floor(d.clone()).0;
        let p_hi = (Integer::from(&w * &thi) << e_u).div_rem_floor(d.clone()).0;
        let stats = RowStats {
            terms,
            exact_fallbacks: 0,
        };
        if p_lo == p_hi || p_hi.cmp0() != Ordering::Greater {
            let m = p_lo.max(Integer::new());
            return Ok((ScaledProb::new(m, self.scale.clone())?, stats));
        }
        let (p, exact) = self.lower_scaled_exact(k)?;
        Ok((
            p,
            RowStats {
                terms: stats.terms + exact.terms,
                exact_fallbacks: 1,
            },
        ))
    }
}

/// Integers `lo <= c*q / 2^e <= hi`, computed from truncated operands.
fn bracket(c: &Integer, q: &Integer, e: i64) -> (Integer, Integer) {
    let cb = c.significant_bits() as i64;
    let qb = q.significant_bits() as i64;
    // Keep a few bits more than the product carries above one unit.
    let p = (cb + qb - e + 8).max(16);
    let sc = (cb - p).max(0);
    let sq = (qb - p).max(0);
    let cl = Integer::from(c >> sc as u32);
    let ql = Integer::from(q >> sq as u32);
    let prod = Integer::from(&cl * &ql);
    let mut up = prod.clone();
    if sq > 0 {
        up += &cl;
    }
    if sc > 0 {
        up += &ql;
    }
    if sc > 0 && sq > 0 {
        up += 1;
    }
    let sh = sc + sq - e;
    if sh >= 0 {
        let s = sh as u32;
        (prod << s, up << s)
    } else {
        let s = (-sh) as u32;
        (prod >> s, -((-up) >> s))
    }
}
