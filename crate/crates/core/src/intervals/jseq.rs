use rug::{Integer, Rational};

use super::{build_interval_seq, IntervalSeqParams};
use crate::enclosure::{floor_int, Real, RealEnclosure};
use crate::error::{Error, Result};

fn exp_at(x: Rational, prec: u32) -> Result<RealEnclosure> {
    RealEnclosure::exact(x).exp(prec)
}

fn guard(x: &Rational, k: u32, prec: u32) -> u32 {
    let mag = floor_int(x).to_u32().unwrap_or(0) + k;
    prec + 2 * mag + 32
}

fn check_j(w: &Rational, delta: &Rational) -> Result<()> {
    if *w < 0 || *w > 1 {
        return Err(Error::domain(format!("w = {w} outside [0, 1]")));
    }
    if *delta <= 0 || *delta >= (1, 3) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1/3)")));
    }
    Ok(())
}

/// Enclosures of the real endpoints of `J_k`:
/// `J_0 = [e^{x-3d}, e^{x-3d} + e^{2(x-3d)/3}]` and
/// `J_k = [e^{x+k-d}, e^{x+k+d}]` with `x = k0 + w`.
pub fn j_interval_endpoints(
    k0: u32,
    w: &Rational,
    delta: &Rational,
    k: u32,
    prec: u32,
) -> Result<(RealEnclosure, RealEnclosure)> {
    check_j(w, delta)?;
    let x = Rational::from(k0) + w;
    let g = guard(&x, k, prec);
    if k == 0 {
        let a = &x - Rational::from(delta * 3u32);
        let lo = exp_at(a.clone(), g)?;
        let extra = exp_at(a * Rational::from((2, 3)), g)?;
        Ok((lo.rounded(prec), (&lo + &extra).rounded(prec)))
    } else {
        let c = x + k;
        let lo = exp_at(Rational::from(&c - delta), g)?;
        let hi = exp_at(c + delta, g)?;
        Ok((lo.rounded(prec), hi.rounded(prec)))
    }
}

/// The integers in `J_0, ..., J_K`, as `[lo, hi]` pairs (`lo > hi` when a
/// `J_k` holds no integer).
pub fn j_intervals(k0: u32, w: &Rational, delta: &Rational, k_max: u32) -> Result<Vec<(Integer, Integer)>> {
    check_j(w, delta)?;
    (0..=k_max)
        .map(|k| {
            let (w1, d1, w2, d2) = (w.clone(), delta.clone(), w.clone(), delta.clone());
            let lo = Real::new(move |p| Ok(j_interval_endpoints(k0, &w1, &d1, k, p)?.0));
            let hi = Real::new(move |p| Ok(j_interval_endpoints(k0, &w2, &d2, k, p)?.1));
            Ok((lo.ceil("J_k lower end")?, hi.floor("J_k upper end")?))
        })
        .collect()
}

/// Parameters of `I_k(x)`: `I0-+ = e^{x -+ 2 delta_x}` with
/// `delta_x = e^{-x/3}/12`, and `gamma = 1/4`.
pub fn x_interval_params(x: &Rational) -> Result<IntervalSeqParams> {
    if *x < 0 {
        return Err(Error::domain(format!("x = {x} is negative")));
    }
    let end = |sign: i32| {
        let x = x.clone();
        Real::new(move |prec| {
            let g = prec + 2 * floor_int(&x).to_u32().unwrap_or(0) + 32;
            let dx = &exp_at(-Rational::from(&x / 3u32), g)? * &RealEnclosure::exact(Rational::from((1, 12)));
            let two_dx = &dx * &RealEnclosure::exact(2 * sign);
            let arg = (&RealEnclosure::exact(x.clone()) + &two_dx).rounded(g);
            Ok(arg.exp(g)?.rounded(prec))
        })
    };
    IntervalSeqParams::from_reals(end(-1), end(1), Rational::from((1, 4)))
}

/// `delta_{k0+1} = e^{-(k0+1)/3} / 12`, rounded down to a multiple of `2^-64`.
pub fn delta_for(k0: u32) -> Result<Rational> {
    let d = exp_at(Rational::from((-(k0 as i64) - 1, 3)), 96)?;
    let lo = Rational::from(d.lo() / 12u32);
    let scaled = floor_int(&(lo << 64u32));
    Ok(Rational::from((scaled, Integer::from(1) << 64)))
}

/// Outcome of the two inclusion checks at one `x = k0 + w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InclusionRow {
    pub k0: u32,
    pub w: Rational,
    pub delta: Rational,
    /// `J_k` is contained in `I_k(x)` for every `1 <= k <= K`.
    pub outer: bool,
    /// `I_0(x)` is contained in `J_0`.
    pub inner: bool,
}

impl InclusionRow {
    pub fn holds(&self) -> bool {
        self.outer && self.inner
    }
}

/// Check both inclusions for every `k0` and `w`, with `delta = delta_for(k0)`.
pub fn inclusion_scan(k0s: impl IntoIterator<Item = u32>, ws: &[Rational], k_max: u32) -> Result<Vec<InclusionRow>> {
    let mut rows = Vec::new();
    for k0 in k0s {
        let delta = delta_for(k0)?;
        for w in ws {
            let x = Rational::from(k0) + w;
            let seq = build_interval_seq(&x_interval_params(&x)?, k_max)?;
            let j = j_intervals(k0, w, &delta, k_max)?;
            let outer = (1..=k_max as usize).all(|k| {
                let (ilo, ihi) = &seq.intervals[k];
                let (jlo, jhi) = &j[k];
                jlo > jhi || (ilo <= jlo && jhi <= ihi)
            });
            let (ilo, ihi) = &seq.intervals[0];
            let (jlo, jhi) = &j[0];
            let inner = jlo <= ilo && ihi <= jhi;
            rows.push(InclusionRow {
                k0,
                w: w.clone(),
                delta: delta.clone(),
                outer,
                inner,
            });
        }
    }
    Ok(rows)
}

/// Smallest scanned `k0` from which every row at that `k0` or above holds.
pub fn k0_threshold(rows: &[InclusionRow]) -> Option<u32> {
    let mut k0s: Vec<u32> = rows.iter().map(|r| r.k0).collect();
    k0s.sort_unstable();
    k0s.dedup();
    let mut best = None;
    for &k0 in k0s.iter().rev() {
        if rows.iter().filter(|r| r.k0 == k0).all(InclusionRow::holds) {
            best = Some(k0);
        } else {
            break;
        }
    }
    best
}
