//! Certified scaled lower bounds on `p_n` and on `1 - p_n` from the truncated
//! recursion `p_n = sum_k P(S_n = k) p_k`.

pub mod cache;

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use rug::{Integer, Rational};

use crate::decimal::{to_decimal, Rounding};
use crate::enclosure::{ceil_int, floor_int, RealEnclosure};
use crate::error::{Error, Result};
use crate::survivor::{s_pmf_exact, LowerBoundKernel, RowStats, ScaledProb};

/// Largest `n` accepted by [`exact_p`].
pub const EXACT_P_CAP: u32 = 60;

/// Which `k` range enters the recursion for each `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WindowPolicy {
    /// `n/e -+ sqrt(5n)`, widened outward to integers.
    Widened,
    /// Every `k` in `0..=n-2`.
    Full,
}

impl WindowPolicy {
    pub fn name(self) -> &'static str {
        match self {
            WindowPolicy::Widened => "widened",
            WindowPolicy::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "widened" => Some(WindowPolicy::Widened),
            "full" => Some(WindowPolicy::Full),
            _ => None,
        }
    }
}

impl fmt::Display for WindowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The range `k1..=k2` of survivor counts summed for one `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationWindow {
    pub k1: u32,
    pub k2: u32,
}

impl TruncationWindow {
    /// Contains `[ceil(n/e - sqrt(5n)) v 0, floor(n/e + sqrt(5n)) ^ (n-2)]`;
    /// the irrational endpoints are enclosed and rounded outward.
    pub fn for_n(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("n = {n} must be at least 2")));
        }
        let prec = 64;
        let ne = RealEnclosure::exact(n).checked_div(&RealEnclosure::e(prec))?;
        let root = RealEnclosure::exact(5 * n as u64).sqrt(prec)?;
        let lo = &ne - &root;
        let hi = &ne + &root;
        let k1 = floor_int(lo.lo()).max(Integer::new());
        let k2 = ceil_int(hi.hi()).min(Integer::from(n - 2));
        Ok(TruncationWindow {
            k1: k1.to_u32().unwrap_or(0),
            k2: k2.to_u32().unwrap_or(0),
        })
    }

    pub fn full(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("n = {n} must be at least 2")));
        }
        Ok(TruncationWindow { k1: 0, k2: n - 2 })
    }

    pub fn for_policy(n: u32, policy: WindowPolicy) -> Result<Self> {
        match policy {
            WindowPolicy::Widened => Self::for_n(n),
            WindowPolicy::Full => Self::full(n),
        }
    }
}

/// Scaled lower bounds `p̂_n <= scale p_n` and `q̂_n <= scale (1 - p_n)` for
/// `0 <= n <= n_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsTable {
    scale: Integer,
    policy: WindowPolicy,
    lower_p: Vec<Integer>,
    lower_q: Vec<Integer>,
}

impl BoundsTable {
    /// Assemble a table from rows `n = 2..`, validating every invariant.
    pub fn from_rows(
        scale: Integer,
        policy: WindowPolicy,
        rows: impl IntoIterator<Item = (Integer, Integer)>,
    ) -> Result<Self> {
        if scale.cmp0() != Ordering::Greater {
            return Err(Error::domain("scale must be positive"));
        }
        let mut lower_p = vec![scale.clone(), Integer::new()];
        let mut lower_q = vec![Integer::new(), scale.clone()];
        for (i, (p, q)) in rows.into_iter().enumerate() {
            let n = i + 2;
            if p.cmp0() == Ordering::Less || q.cmp0() == Ordering::Less {
                return Err(Error::domain(format!("row n={n} has a negative bound")));
            }
            if Integer::from(&p + &q) > scale {
                return Err(Error::domain(format!(
                    "row n={n}: lower bounds on p and 1-p sum above 1"
                )));
            }
            lower_p.push(p);
            lower_q.push(q);
        }
        Ok(BoundsTable {
            scale,
            policy,
            lower_p,
            lower_q,
        })
    }

    pub fn scale(&self) -> &Integer {
        &self.scale
    }

    pub fn policy(&self) -> WindowPolicy {
        self.policy
    }

    pub fn n_max(&self) -> u32 {
        (self.lower_p.len() - 1) as u32
    }

    fn check(&self, n: u32) -> Result<usize> {
        if n > self.n_max() {
            return Err(Error::domain(format!(
                "n = {n} beyond the table (n_max = {})",
                self.n_max()
            )));
        }
        Ok(n as usize)
    }

    pub fn lower_p(&self, n: u32) -> Result<ScaledProb> {
        let i = self.check(n)?;
        ScaledProb::new(self.lower_p[i].clone(), self.scale.clone())
    }

    pub fn lower_q(&self, n: u32) -> Result<ScaledProb> {
        let i = self.check(n)?;
        ScaledProb::new(self.lower_q[i].clone(), self.scale.clone())
    }

    pub fn lower_p_num(&self, n: u32) -> &Integer {
        &self.lower_p[n as usize]
    }

    pub fn lower_q_num(&self, n: u32) -> &Integer {
        &self.lower_q[n as usize]
    }

    /// `p̂_n / scale`.
    pub fn lower(&self, n: u32) -> Result<Rational> {
        Ok(self.lower_p(n)?.to_rational())
    }

    /// `1 - q̂_n / scale`.
    pub fn upper(&self, n: u32) -> Result<Rational> {
        Ok(Rational::from(1) - self.lower_q(n)?.to_rational())
    }

    /// `upper - lower` at `n`.
    pub fn gap(&self, n: u32) -> Result<Rational> {
        let i = self.check(n)?;
        let g = Integer::from(&self.scale - &self.lower_p[i]) - &self.lower_q[i];
        Ok(Rational::from((g, self.scale.clone())))
    }

    /// Largest gap over `2..=n_max` and where it occurs.
    pub fn max_gap(&self) -> Option<(u32, Rational)> {
        (2..=self.n_max())
            .map(|n| (n, self.gap(n).expect("n in range")))
            .fold(None, |best, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
    }

    /// The same bounds restricted to `n <= n_max`.
    pub fn truncated(&self, n_max: u32) -> Result<BoundsTable> {
        let i = self.check(n_max)?;
        Ok(BoundsTable {
            scale: self.scale.clone(),
            policy: self.policy,
            lower_p: self.lower_p[..=i].to_vec(),
            lower_q: self.lower_q[..=i].to_vec(),
        })
    }
}

/// Progress callback invoked after each row with `(n, stats)`.
pub type Progress<'a> = &'a (dyn Fn(u32, RowStats) + Sync);

/// Compute the table for `n <= n_max` with the widened window.
pub fn run_bounds(n_max: u32, scale: &Integer) -> Result<BoundsTable> {
    run_bounds_with(n_max, scale, WindowPolicy::Widened, None)
}

pub fn run_bounds_with(
    n_max: u32,
    scale: &Integer,
    policy: WindowPolicy,
    progress: Option<Progress<'_>>,
) -> Result<BoundsTable> {
    if n_max < 1 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    if scale.cmp0() != Ordering::Greater {
        return Err(Error::domain("scale must be positive"));
    }
    let mut p = vec![scale.clone(), Integer::new()];
    let mut q = vec![Integer::new(), scale.clone()];
    if n_max >= 2 {
        let mut kern = LowerBoundKernel::new(2, scale.clone())?;
        for n in 2..=n_max {
            let w = TruncationWindow::for_policy(n, policy)?;
            let vals: Vec<(ScaledProb, RowStats)> = (w.k1..=w.k2)
                .into_par_iter()
                .map(|k| kern.lower_scaled(k))
                .collect::<Result<_>>()?;
            let mut sp = Integer::new();
            let mut sq = Integer::new();
            let mut stats = RowStats::default();
            for (k, (pk, st)) in (w.k1..=w.k2).zip(&vals) {
                sp += Integer::from(pk.numerator() * &p[k as usize]);
                sq += Integer::from(pk.numerator() * &q[k as usize]);
                stats = stats.merge(*st);
            }
            p.push(sp.div_rem_floor(scale.clone()).0);
            q.push(sq.div_rem_floor(scale.clone()).0);
            if let Some(f) = progress {
                f(n, stats);
            }
            if n < n_max {
                kern.advance();
            }
        }
    }
    Ok(BoundsTable {
        scale: scale.clone(),
        policy,
        lower_p: p,
        lower_q: q,
    })
}

/// Exact `p_0, ..., p_{n_max}` from the untruncated recursion.
pub fn exact_p(n_max: u32) -> Result<Vec<Rational>> {
    if n_max > EXACT_P_CAP {
        return Err(Error::Refused(format!(
            "exact p_n is limited to n <= {EXACT_P_CAP} (asked for {n_max})"
        )));
    }
    let mut p = vec![Rational::from(1), Rational::new()];
    for n in 2..=n_max {
        let pmf = s_pmf_exact(n)?;
        let v: Rational = pmf.iter().map(|(k, m)| m * &p[k as usize]).sum();
        p.push(v);
    }
    p.truncate(n_max as usize + 1);
    Ok(p)
}

/// One line of the figure data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FigureRow {
    pub n: u32,
    pub log_n: String,
    pub lower: String,
    pub upper: String,
}

/// Digits needed to show `m / scale` exactly when the scale is a power of ten.
fn scale_digits(scale: &Integer) -> u32 {
    (scale.to_string().len() as u32).saturating_sub(1).max(1)
}

/// Rows for `n = 2..=n_max`: `ln n` (midpoint of a tight enclosure), the lower
/// bound rounded down and the upper bound rounded up.
pub fn figure_data(table: &BoundsTable) -> Result<Vec<FigureRow>> {
    let digits = scale_digits(table.scale());
    (2..=table.n_max())
        .map(|n| {
            let ln = RealEnclosure::exact(n).ln(64)?;
            Ok(FigureRow {
                n,
                log_n: to_decimal(&ln.midpoint(), 10, Rounding::Nearest),
                lower: to_decimal(&table.lower(n)?, digits, Rounding::Down),
                upper: to_decimal(&table.upper(n)?, digits, Rounding::Up),
            })
        })
        .collect()
}

pub fn write_figure_csv<W: Write>(rows: &[FigureRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "log_n", "lower", "upper"])?;
    for r in rows {
        out.write_record([r.n.to_string(), r.log_n.clone(), r.lower.clone(), r.upper.clone()])?;
    }
    out.flush()?;
    Ok(())
}

/// Extremes of the stored bounds over an interval of `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extrema {
    pub min_lower: Rational,
    pub argmin_lower: u32,
    pub max_upper: Rational,
    pub argmax_upper: u32,
}

/// Minimum of the lower bounds and maximum of the upper bounds over `a..=b`.
pub fn interval_extrema(table: &BoundsTable, a: u32, b: u32) -> Result<Extrema> {
    if a > b || b > table.n_max() {
        return Err(Error::domain(format!(
            "interval [{a}, {b}] not inside [0, {}]",
            table.n_max()
        )));
    }
    let mut argmin = a;
    let mut argmax = a;
    for n in a..=b {
        if table.lower_p_num(n) < table.lower_p_num(argmin) {
            argmin = n;
        }
        if table.lower_q_num(n) < table.lower_q_num(argmax) {
            argmax = n;
        }
    }
    Ok(Extrema {
        min_lower: table.lower(argmin)?,
        argmin_lower: argmin,
        max_upper: table.upper(argmax)?,
        argmax_upper: argmax,
    })
}

#[cfg(test)]
mod tests;
