//! Exact real-root counting for the generating polynomial of `Y_n`.

use std::cmp::Ordering;

use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Default upper limit on `n` for the exact polynomial check.
pub const REAL_ROOTED_MAX_N: u32 = 12;

/// Polynomial with integer coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly(pub Vec<Integer>);

impl IntPoly {
    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| c.cmp0() != Ordering::Equal)
    }
}

type RatPoly = Vec<Rational>;

fn trim(p: &mut RatPoly) {
    while p.last().is_some_and(|c| c.cmp0() == Ordering::Equal) {
        p.pop();
    }
}

fn derivative(p: &RatPoly) -> RatPoly {
    let mut d: RatPoly = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| Rational::from(c * i as u32))
        .collect();
    trim(&mut d);
    d
}

fn rem(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lb = &b[db];
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let f = Rational::from(r.last().unwrap() / lb);
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= Rational::from(&f * c);
        }
        r.pop();
        trim(&mut r);
    }
    r
}

fn gcd(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let (mut x, mut y) = (a.clone(), b.clone());
    while !y.is_empty() {
        let r = rem(&x, &y);
        x = y;
        y = r;
    }
    x
}

fn sign_changes(signs: impl Iterator<Item = Ordering>) -> usize {
    let mut last = Ordering::Equal;
    let mut changes = 0;
    for s in signs.filter(|s| *s != Ordering::Equal) {
        if last != Ordering::Equal && s != last {
            changes += 1;
        }
        last = s;
    }
    changes
}

fn distinct_real_roots(p: &RatPoly) -> usize {
    if p.len() <= 1 {
        return 0;
    }
    let mut seq = vec![p.clone(), derivative(p)];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let r = rem(&seq[n - 2], &seq[n - 1]);
        if r.is_empty() {
            break;
        }
        seq.push(r.into_iter().map(|c| -c).collect());
    }
    let at_pos = seq.iter().map(|q| q.last().unwrap().cmp0());
    let at_neg = seq.iter().map(|q| {
        let s = q.last().unwrap().cmp0();
        if (q.len() - 1) % 2 == 1 {
            s.reverse()
        } else {
            s
        }
    });
    sign_changes(at_neg) - sign_changes(at_pos)
}

fn real_roots_with_multiplicity(p: &RatPoly) -> usize {
    if p.len() <= 1 {
        return 0;
    }
    let g = gcd(p, &derivative(p));
    distinct_real_roots(p) + real_roots_with_multiplicity(&g)
}

/// Number of real roots counted with multiplicity.
pub fn count_real_roots(p: &IntPoly) -> Result<usize> {
    if p.degree().is_none() {
        return Err(Error::domain("zero polynomial"));
    }
    let mut q: RatPoly = p.0.iter().map(|c| Rational::from(c.clone())).collect();
    trim(&mut q);
    Ok(real_roots_with_multiplicity(&q))
}

/// `(n-1)^(n-1) E z^(Y_n)`, obtained as `R(z-1)` with
/// `R(z) = sum_k C(n-1,k) (n-k-1)^(n-1) z^k`.
pub fn y_generating_poly(n: u32) -> Result<IntPoly> {
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be at least 2")));
    }
    let b = n - 1;
    let r: Vec<Integer> = (0..=b)
        .map(|k| Integer::from(Integer::binomial_u(b, k)) * Integer::from(Integer::u_pow_u(b - k, b)))
        .collect();
    // Expand sum_k r_k (z-1)^k.
    let mut out = vec![Integer::new(); r.len()];
    for (k, rk) in r.iter().enumerate() {
        for (i, slot) in out.iter_mut().enumerate().take(k + 1) {
            let mut t = Integer::from(Integer::binomial_u(k as u32, i as u32)) * rk;
            if (k - i) % 2 == 1 {
                t = -t;
            }
            *slot += t;
        }
    }
    Ok(IntPoly(out))
}

/// Whether the generating polynomial of `Y_n` has only real roots, for
/// `3 <= n <= max_n`.
pub fn y_generating_poly_real_rooted_capped(n: u32, max_n: u32) -> Result<bool> {
    if n < 3 || n > max_n {
        return Err(Error::domain(format!("n = {n} outside 3..={max_n}")));
    }
    let p = y_generating_poly(n)?;
    let deg = p.degree().ok_or_else(|| Error::domain("degenerate zero polynomial"))?;
    Ok(count_real_roots(&p)? == deg)
}

/// [`y_generating_poly_real_rooted_capped`] with the default cap.
pub fn y_generating_poly_real_rooted(n: u32) -> Result<bool> {
    y_generating_poly_real_rooted_capped(n, REAL_ROOTED_MAX_N)
}
