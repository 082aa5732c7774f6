//! Interval sequences `I_0, I_1, ...` whose endpoints grow like `e^k`, the
//! probability bound for a process to walk down such a sequence, the
//! hill/valley data behind the non-convergence certificate, and the
//! intervals `J_k` used near `e^(k0 + w)`.

mod certificate;
mod jseq;

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use rug::{Integer, Rational};

use crate::enclosure::{ten_pow_neg, Real, RealEnclosure, MAX_PREC, START_PREC};
use crate::error::{Error, Result};
use crate::survivor::{y_tail_exact, TailDirection};

pub use certificate::{
    nonconvergence_certificate, nonconvergence_certificate_with, CertificateReport, CheckedInequality, CERT_N_MIN,
    TARGET_LOWER, TARGET_UPPER,
};
pub use jseq::{
    delta_for, inclusion_scan, j_interval_endpoints, j_intervals, k0_threshold, x_interval_params, InclusionRow,
};

/// Hills `H_0..H_3`.
pub const H_TABLE: [(u32, u32); 4] = [(2479, 3151), (6991, 8290), (19425, 22086), (53501, 59301)];

/// Valleys `V_0..V_2`.
pub const V_TABLE: [(u32, u32); 3] = [(4129, 5143), (11553, 13623), (31952, 36447)];

fn s0_terms_for(prec: u32) -> u32 {
    // e^{-(K+1)/4} / (1 - e^{-1/4}) <= 2^-prec once K + 1 >= 4 (prec ln 2 + 1.51)
    (4 * (prec as u64 * 7 / 10 + 2)) as u32
}

/// `sum_{i=1}^{k} sqrt(i) e^{-i/2}` for `k = 0..=k_max`, at guard precision `g`.
fn partial_sums(k_max: u32, g: u32) -> Result<Vec<RealEnclosure>> {
    let g2 = g + 16;
    let half = RealEnclosure::exact(Rational::from((-1, 2))).exp(g2)?;
    let mut pow = RealEnclosure::exact(1);
    let mut acc = RealEnclosure::exact(0);
    let mut out = Vec::with_capacity(k_max as usize + 1);
    out.push(acc.clone());
    for i in 1..=k_max {
        pow = (&pow * &half).rounded(g2);
        let root = RealEnclosure::exact(i).sqrt(g2)?;
        acc = (&acc + &(&root * &pow)).rounded(g2);
        out.push(acc.clone());
    }
    Ok(out)
}

fn s0_at(prec: u32) -> Result<RealEnclosure> {
    let k = s0_terms_for(prec);
    let g = prec + 8 + (32 - k.leading_zeros());
    let partial = partial_sums(k, g)?.pop().expect("k >= 1");
    // sqrt(i) <= e^{i/4}, so the rest is at most sum_{i>K} e^{-i/4}
    let quarter = RealEnclosure::exact(Rational::from((-1, 4)));
    let num = RealEnclosure::exact(Rational::from((-(k as i64) - 1, 4))).exp(g)?;
    let den = &RealEnclosure::exact(1) - &quarter.exp(g)?;
    let tail = num.checked_div(&den)?;
    let hi = Rational::from(partial.hi() + tail.hi());
    RealEnclosure::new(partial.lo().clone(), hi).map(|e| e.rounded(prec))
}

/// Enclosure of `s_0 = sum_{i>=1} sqrt(i) e^{-i/2}` with width about `2^-prec`.
pub fn s0_enclosure(prec: u32) -> Result<RealEnclosure> {
    if prec > MAX_PREC {
        return Err(Error::PrecisionExhausted(format!("precision {prec} above {MAX_PREC}")));
    }
    s0_at(prec)
}

/// `s_0` as a lazily refined real.
pub fn s0_real() -> Real {
    Real::new(s0_at)
}

/// Starting interval `[I0-, I0+]` and the parameter `gamma`.
#[derive(Clone, Debug)]
pub struct IntervalSeqParams {
    pub i0_minus: Real,
    pub i0_plus: Real,
    pub gamma: Rational,
}

impl IntervalSeqParams {
    /// Rational endpoints; requires `2 <= I0- <= I0+ < e I0-` and
    /// `0 < gamma <= 1`.
    pub fn new(i0_minus: Rational, i0_plus: Rational, gamma: Rational) -> Result<Self> {
        if i0_minus < 2 || i0_plus < i0_minus {
            return Err(Error::domain(format!(
                "need 2 <= I0- <= I0+, got [{i0_minus}, {i0_plus}]"
            )));
        }
        let m = i0_minus.clone();
        let e_times = Real::new(move |prec| Ok(&RealEnclosure::e(prec) * &RealEnclosure::exact(m.clone())));
        if e_times.cmp_rational(&i0_plus, "e I0-")? != Ordering::Greater {
            return Err(Error::domain(format!("I0+ = {i0_plus} is not below e I0-")));
        }
        Self::from_reals(Real::constant(i0_minus), Real::constant(i0_plus), gamma)
    }

    /// Integer endpoints, as for the hill and valley tables.
    pub fn from_interval((lo, hi): (u32, u32), gamma: Rational) -> Result<Self> {
        Self::new(Rational::from(lo), Rational::from(hi), gamma)
    }

    /// Arbitrary real endpoints. Only `gamma` is checked here.
    pub fn from_reals(i0_minus: Real, i0_plus: Real, gamma: Rational) -> Result<Self> {
        if gamma <= 0 || gamma > 1 {
            return Err(Error::domain(format!("gamma = {gamma} outside (0, 1]")));
        }
        Ok(IntervalSeqParams {
            i0_minus,
            i0_plus,
            gamma,
        })
    }
}

/// Real endpoints `I_k^-`, `I_k^+` for `k = 0..=k_max`, plus `c_0`, `c_1`,
/// `c_2` and `s_0`, all at absolute precision about `2^-prec`.
struct Evaluation {
    ends: Vec<(RealEnclosure, RealEnclosure)>,
    s0: RealEnclosure,
    c0: RealEnclosure,
    c1: Option<RealEnclosure>,
    c2: Option<RealEnclosure>,
}

fn magnitude(params: &IntervalSeqParams) -> Result<u32> {
    let hi = params.i0_plus.at(32)?;
    Ok(crate::enclosure::ceil_int(hi.hi()).significant_bits())
}

fn evaluate(params: &IntervalSeqParams, k_max: u32, prec: u32) -> Result<Evaluation> {
    let g = prec + magnitude(params)? + 2 * k_max + 40;
    let e = RealEnclosure::e(g);
    let one = RealEnclosure::exact(1);
    let im = params.i0_minus.at(g)?;
    let ip = params.i0_plus.at(g)?;
    let s0 = s0_at(g)?;
    let sqrt_e = e.sqrt(g)?;
    let gamma = RealEnclosure::exact(params.gamma.clone());
    let c0 = (&(&ip.sqrt(g)? - &im.sqrt(g)?) * &gamma).checked_div(&(&s0 * &sqrt_e))?;
    let fm = &c0 * &e.checked_div(&im)?.sqrt(g)?;
    let fp = &c0 * &e.checked_div(&ip)?.sqrt(g)?;
    let partial = partial_sums(k_max, g)?;
    let mut ek = one.clone();
    let mut ends = Vec::with_capacity(k_max as usize + 1);
    for (k, sum) in partial.iter().enumerate() {
        if k > 0 {
            ek = (&ek * &e).rounded(g);
        }
        let lo = &(&im * &ek) * &(&one + &(&fm * sum));
        let hi = &(&ip * &ek) * &(&one - &(&fp * sum));
        ends.push((lo.rounded(prec), hi.rounded(prec)));
    }
    let num = &(&e * &c0.square()) * &RealEnclosure::exact(Rational::from((1, 2)));
    let em1 = &e - &one;
    let d1 = &em1 * &(&one + &(&(&c0 * &s0) * &e.checked_div(&im)?.sqrt(g)?));
    let three_sqrt = &RealEnclosure::exact(3) * &ip.sqrt(g)?;
    let two_e_m1 = &(&e * &RealEnclosure::exact(2)) - &one;
    let d2 = &em1 - &(&c0 * &two_e_m1).checked_div(&three_sqrt)?;
    let positive = |d: &RealEnclosure| d.is_positive();
    let c1 = if positive(&d1) {
        Some(num.checked_div(&d1)?.rounded(prec))
    } else {
        None
    };
    let c2 = if positive(&d2) {
        Some(num.checked_div(&d2)?.rounded(prec))
    } else {
        None
    };
    Ok(Evaluation {
        ends,
        s0: s0.rounded(prec),
        c0: c0.rounded(prec),
        c1,
        c2,
    })
}

/// The integer intervals `I_k = [floor(I_k^-), ceil(I_k^+)]` with the
/// constants of their construction.
#[derive(Clone, Debug)]
pub struct IntervalSeq {
    pub params: IntervalSeqParams,
    pub s0: RealEnclosure,
    pub c0: RealEnclosure,
    pub c1: Option<RealEnclosure>,
    pub c2: Option<RealEnclosure>,
    pub intervals: Vec<(Integer, Integer)>,
    /// Enclosures of the real endpoints `(I_k^-, I_k^+)`.
    pub endpoints: Vec<(RealEnclosure, RealEnclosure)>,
}

impl IntervalSeq {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// For `gamma = 1`: `ceil(I_k^+) - floor(I_k^-) >= (I0+ - I0-) e^{k/2}`
    /// at every `k`.
    pub fn length_growth_holds(&self) -> Result<bool> {
        for (k, (lo, hi)) in self.intervals.iter().enumerate() {
            let len = Rational::from(Integer::from(hi - lo));
            let p = self.params.clone();
            let bound = Real::new(move |prec| {
                let g = prec + 64;
                let w = &p.i0_plus.at(g)? - &p.i0_minus.at(g)?;
                let half = RealEnclosure::exact(Rational::from((k as i64, 2))).exp(g)?;
                Ok(&w * &half)
            });
            if bound.cmp_rational(&len, "interval length bound")? == Ordering::Greater {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Build `I_0..=I_K`, resolving every floor and ceiling from enclosures.
pub fn build_interval_seq(params: &IntervalSeqParams, k_max: u32) -> Result<IntervalSeq> {
    let cap = ten_pow_neg(60);
    let mut prec = START_PREC;
    let mut resolved: Vec<Option<(Integer, Integer)>> = vec![None; k_max as usize + 1];
    loop {
        let ev = evaluate(params, k_max, prec)?;
        let mut pending = None;
        for (k, (lo, hi)) in ev.ends.iter().enumerate() {
            if resolved[k].is_some() {
                continue;
            }
            match (lo.floor_decided(), hi.ceil_decided()) {
                (Some(a), Some(b)) => resolved[k] = Some((a, b)),
                _ => {
                    let w = lo.width().max(hi.width());
                    pending.get_or_insert((k, w));
                }
            }
        }
        match pending {
            None => {
                let intervals: Vec<(Integer, Integer)> = resolved.into_iter().map(|r| r.expect("resolved")).collect();
                for k in 1..intervals.len() {
                    if intervals[k - 1].1 >= intervals[k].0 {
                        return Err(Error::domain(format!(
                            "I_{} = [{}, {}] and I_{k} = [{}, {}] overlap",
                            k - 1,
                            intervals[k - 1].0,
                            intervals[k - 1].1,
                            intervals[k].0,
                            intervals[k].1
                        )));
                    }
                }
                return Ok(IntervalSeq {
                    params: params.clone(),
                    s0: ev.s0,
                    c0: ev.c0,
                    c1: ev.c1,
                    c2: ev.c2,
                    intervals,
                    endpoints: ev.ends,
                });
            }
            Some((k, w)) => {
                if w < cap || prec >= MAX_PREC {
                    return Err(Error::UndecidableRounding(format!(
                        "endpoint of I_{k} straddles an integer at width {}",
                        w.to_f64()
                    )));
                }
                prec *= 2;
            }
        }
    }
}

/// `1/(e^{c_1} - 1) + 1/(e^{c_2} - 1)` as a real.
pub fn lemma27_real(params: &IntervalSeqParams) -> Real {
    let p = params.clone();
    Real::new(move |prec| {
        let g = prec + 16;
        let ev = evaluate(&p, 0, g)?;
        let (c1, c2) = match (ev.c1, ev.c2) {
            (Some(a), Some(b)) if a.is_positive() && b.is_positive() => (a, b),
            _ => return Err(Error::domain("c1 or c2 is not provably positive")),
        };
        let one = RealEnclosure::exact(1);
        let t1 = (&c1.exp(g)? - &one).recip()?;
        let t2 = (&c2.exp(g)? - &one).recip()?;
        Ok((&t1 + &t2).rounded(prec))
    })
}

/// Enclosure of the walk-down bound for `seq`, no wider than `10^-30`.
pub fn lemma27_bound(seq: &IntervalSeq) -> Result<RealEnclosure> {
    lemma27_bound_to(seq, &ten_pow_neg(30))
}

pub fn lemma27_bound_to(seq: &IntervalSeq, width: &Rational) -> Result<RealEnclosure> {
    match (&seq.c1, &seq.c2) {
        (Some(a), Some(b)) if a.is_positive() && b.is_positive() => {}
        _ => return Err(Error::domain("c1 or c2 is not provably positive")),
    }
    lemma27_real(&seq.params).to_width(width)
}

/// CSV `k,lo,hi`.
pub fn write_intervals_csv<W: Write>(intervals: &[(Integer, Integer)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "lo", "hi"])?;
    for (k, (lo, hi)) in intervals.iter().enumerate() {
        out.write_record([k.to_string(), lo.to_string(), hi.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// The two exact one-step tails for the step from `chain[k]` to `chain[k-1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailTerm {
    pub k: usize,
    /// `P(Y_{lo_k} <= lo_{k-1} - 1)`.
    pub lower: Rational,
    /// `P(Y_{hi_k} >= hi_{k-1})`.
    pub upper: Rational,
}

/// Exact tail terms along a chain of intervals, `k = 1..chain.len()`.
pub fn chain_tail_terms(chain: &[(u32, u32)]) -> Result<Vec<TailTerm>> {
    let jobs: Vec<(usize, bool)> = (1..chain.len()).flat_map(|k| [(k, false), (k, true)]).collect();
    let vals: Vec<Rational> = jobs
        .par_iter()
        .map(|&(k, upper)| {
            let (prev, cur) = (chain[k - 1], chain[k]);
            if upper {
                y_tail_exact(cur.1, prev.1, TailDirection::AtLeast)
            } else if prev.0 == 0 {
                Ok(Rational::new())
            } else {
                y_tail_exact(cur.0, prev.0 - 1, TailDirection::AtMost)
            }
        })
        .collect::<Result<_>>()?;
    Ok(vals
        .chunks(2)
        .enumerate()
        .map(|(i, v)| TailTerm {
            k: i + 1,
            lower: v[0].clone(),
            upper: v[1].clone(),
        })
        .collect())
}

pub fn chain_tail_sum(terms: &[TailTerm]) -> Rational {
    terms.iter().fold(Rational::new(), |acc, t| acc + &t.lower + &t.upper)
}

/// Exact tail sums along the hill chain and the valley chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HvTailSums {
    pub h_terms: Vec<TailTerm>,
    pub v_terms: Vec<TailTerm>,
    pub h_sum: Rational,
    pub v_sum: Rational,
}

pub fn hv_tail_terms() -> Result<HvTailSums> {
    let (h, v) = rayon::join(|| chain_tail_terms(&H_TABLE), || chain_tail_terms(&V_TABLE));
    let (h_terms, v_terms) = (h?, v?);
    Ok(HvTailSums {
        h_sum: chain_tail_sum(&h_terms),
        v_sum: chain_tail_sum(&v_terms),
        h_terms,
        v_terms,
    })
}

/// `(H sum, V sum)`.
pub fn hv_tail_sums() -> Result<(Rational, Rational)> {
    let t = hv_tail_terms()?;
    Ok((t.h_sum, t.v_sum))
}
