use std::fmt;
use std::io::Write;

use rug::{Integer, Rational};

use super::{build_interval_seq, hv_tail_terms, lemma27_bound_to, HvTailSums, IntervalSeqParams, H_TABLE, V_TABLE};
use crate::bounds::{interval_extrema, BoundsTable, Extrema};
use crate::decimal::{parse_decimal, to_decimal, Rounding};
use crate::enclosure::{ten_pow_neg, RealEnclosure};
use crate::error::{Error, Result};

/// The bounds table must reach the right end of `V_0`.
pub const CERT_N_MIN: u32 = 5143;

/// Certified lower bound on `p_n` over every hill.
pub const TARGET_LOWER: &str = "0.515428";

/// Certified upper bound on `p_n` over every valley.
pub const TARGET_UPPER: &str = "0.477449";

/// Number of constructed intervals listed beyond the tables.
const EXTENSION_LEN: u32 = 8;

/// One named inequality `lhs <= rhs` (or `>=`) of the certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedInequality {
    pub name: &'static str,
    pub lhs: Rational,
    pub relation: &'static str,
    pub rhs: Rational,
    pub holds: bool,
}

impl CheckedInequality {
    fn ge(name: &'static str, lhs: Rational, rhs: Rational) -> Self {
        let holds = lhs >= rhs;
        CheckedInequality {
            name,
            lhs,
            relation: ">=",
            rhs,
            holds,
        }
    }

    fn le(name: &'static str, lhs: Rational, rhs: Rational) -> Self {
        let holds = lhs <= rhs;
        CheckedInequality {
            name,
            lhs,
            relation: "<=",
            rhs,
            holds,
        }
    }
}

/// Every quantity entering the non-convergence certificate.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub h_table: Vec<(u32, u32)>,
    pub v_table: Vec<(u32, u32)>,
    /// `H_4, H_5, ...` from the construction started at `H_3`.
    pub h_extension: Vec<(Integer, Integer)>,
    /// `V_3, V_4, ...` from the construction started at `V_2`.
    pub v_extension: Vec<(Integer, Integer)>,
    pub tails: HvTailSums,
    pub lemma27_h: RealEnclosure,
    pub lemma27_v: RealEnclosure,
    pub extrema_h0: Extrema,
    pub extrema_v0: Extrema,
    /// Lower bound on the probability of walking down the hills.
    pub walk_h: Rational,
    /// Lower bound on the probability of walking down the valleys.
    pub walk_v: Rational,
    pub final_lower: Rational,
    pub final_upper: Rational,
    pub checks: Vec<CheckedInequality>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckedInequality> {
        self.checks.iter().filter(|c| !c.holds)
    }

    /// `quantity,value` rows; values rounded outward in the safe direction.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["quantity", "value"])?;
        for (name, value) in self.rows() {
            out.write_record([name, value])?;
        }
        out.flush()?;
        Ok(())
    }

    fn rows(&self) -> Vec<(String, String)> {
        let up = |q: &Rational| to_decimal(q, 12, Rounding::Up);
        let down = |q: &Rational| to_decimal(q, 12, Rounding::Down);
        let mut rows = vec![
            ("h_tail_sum".to_string(), up(&self.tails.h_sum)),
            ("v_tail_sum".to_string(), up(&self.tails.v_sum)),
            ("lemma27_h_hi".to_string(), up(self.lemma27_h.hi())),
            ("lemma27_v_hi".to_string(), up(self.lemma27_v.hi())),
            ("min_lower_h0".to_string(), down(&self.extrema_h0.min_lower)),
            ("argmin_lower_h0".to_string(), self.extrema_h0.argmin_lower.to_string()),
            ("max_upper_v0".to_string(), up(&self.extrema_v0.max_upper)),
            ("argmax_upper_v0".to_string(), self.extrema_v0.argmax_upper.to_string()),
            ("walk_h".to_string(), down(&self.walk_h)),
            ("walk_v".to_string(), down(&self.walk_v)),
            ("final_lower".to_string(), down(&self.final_lower)),
            ("final_upper".to_string(), up(&self.final_upper)),
        ];
        for c in &self.checks {
            rows.push((
                format!("check:{}", c.name),
                if c.holds { "pass" } else { "fail" }.to_string(),
            ));
        }
        rows
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |t: &[(u32, u32)]| {
            t.iter()
                .map(|(a, b)| format!("[{a}, {b}]"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let ext = |t: &[(Integer, Integer)]| {
            t.iter()
                .map(|(a, b)| format!("[{a}, {b}]"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(f, "hills = {}", list(&self.h_table))?;
        writeln!(f, "hills_extended = {}", ext(&self.h_extension))?;
        writeln!(f, "valleys = {}", list(&self.v_table))?;
        writeln!(f, "valleys_extended = {}", ext(&self.v_extension))?;
        for (name, value) in self.rows() {
            writeln!(f, "{name} = {value}")?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "{}: {} {} {} -> {}",
                c.name,
                to_decimal(&c.lhs, 12, Rounding::Nearest),
                c.relation,
                to_decimal(&c.rhs, 12, Rounding::Nearest),
                if c.holds { "holds" } else { "FAILS" }
            )?;
        }
        writeln!(f, "certificate = {}", if self.passed() { "pass" } else { "fail" })
    }
}

fn chain_start((lo, hi): (u32, u32)) -> Result<IntervalSeqParams> {
    IntervalSeqParams::from_interval((lo, hi), Rational::from(1))
}

/// Assemble the certificate, computing the exact tail sums.
pub fn nonconvergence_certificate(table: &BoundsTable) -> Result<CertificateReport> {
    check_table(table)?;
    let tails = hv_tail_terms()?;
    nonconvergence_certificate_with(table, tails, &ten_pow_neg(30))
}

fn check_table(table: &BoundsTable) -> Result<()> {
    if table.n_max() < CERT_N_MIN {
        return Err(Error::domain(format!(
            "bounds table reaches n = {}, the certificate needs n = {CERT_N_MIN}",
            table.n_max()
        )));
    }
    Ok(())
}

/// Assemble the certificate from precomputed tail sums, enclosing the
/// walk-down bounds to within `width`.
pub fn nonconvergence_certificate_with(
    table: &BoundsTable,
    tails: HvTailSums,
    width: &Rational,
) -> Result<CertificateReport> {
    check_table(table)?;
    let h_seq = build_interval_seq(&chain_start(H_TABLE[3])?, EXTENSION_LEN)?;
    let v_seq = build_interval_seq(&chain_start(V_TABLE[2])?, EXTENSION_LEN)?;
    let lemma27_h = lemma27_bound_to(&h_seq, width)?;
    let lemma27_v = lemma27_bound_to(&v_seq, width)?;
    let extrema_h0 = interval_extrema(table, H_TABLE[0].0, H_TABLE[0].1)?;
    let extrema_v0 = interval_extrema(table, V_TABLE[0].0, V_TABLE[0].1)?;

    let one = Rational::from(1);
    let walk_h = Rational::from(&one - lemma27_h.hi()) - &tails.h_sum;
    let walk_v = Rational::from(&one - lemma27_v.hi()) - &tails.v_sum;
    let final_lower = Rational::from(&walk_h * &extrema_h0.min_lower);
    let final_upper = &one - (&walk_v * Rational::from(&one - &extrema_v0.max_upper));

    let checks = vec![
        CheckedInequality::ge("hill walk probability is positive", walk_h.clone(), Rational::new()),
        CheckedInequality::ge("valley walk probability is positive", walk_v.clone(), Rational::new()),
        CheckedInequality::ge("inf p_n over hills", final_lower.clone(), parse_decimal(TARGET_LOWER)?),
        CheckedInequality::le(
            "sup p_n over valleys",
            final_upper.clone(),
            parse_decimal(TARGET_UPPER)?,
        ),
    ];
    Ok(CertificateReport {
        h_table: H_TABLE.to_vec(),
        v_table: V_TABLE.to_vec(),
        h_extension: h_seq.intervals[1..].to_vec(),
        v_extension: v_seq.intervals[1..].to_vec(),
        tails,
        lemma27_h,
        lemma27_v,
        extrema_h0,
        extrema_v0,
        walk_h,
        walk_v,
        final_lower,
        final_upper,
        checks,
    })
}
