use std::cmp::Ordering;
use std::fmt;

use rug::Rational;

use crate::decimal::{to_decimal, Rounding};
use crate::enclosure::{Real, RealEnclosure};
use crate::error::{Error, Result};

/// `sqrt(p (1 - p) / trials)` for an enclosed `p`.
pub fn binomial_sigma(p: &RealEnclosure, trials: u64, prec: u32) -> Result<RealEnclosure> {
    if trials == 0 {
        return Err(Error::domain("zero trials"));
    }
    let one = RealEnclosure::exact(1);
    let var = &(p * &(&one - p)) * &RealEnclosure::exact(Rational::from((1, trials)));
    // interval products may dip below zero at p = 0 or 1
    let var = RealEnclosure::new(var.lo().clone().max(Rational::new()), var.hi().clone())?;
    var.sqrt(prec)
}

/// `exp(-7 (b - a))`.
pub fn collision_bound(a: u32, b: u32, prec: u32) -> Result<RealEnclosure> {
    RealEnclosure::exact(-7 * (b as i64 - a as i64)).exp(prec)
}

/// Result of a collision experiment compared against `exp(-7(b-a))`
/// minus three binomial standard deviations (taken at the bound).
#[derive(Clone, Debug)]
pub struct CollisionReport {
    pub a: u32,
    pub b: u32,
    pub trials: u64,
    pub successes: u64,
    pub frequency: Rational,
    pub bound: RealEnclosure,
    pub sigma: RealEnclosure,
    pub threshold: RealEnclosure,
    pub passed: bool,
}

impl CollisionReport {
    pub fn new(a: u32, b: u32, trials: u64, successes: u64) -> Result<Self> {
        let frequency = Rational::from((successes, trials));
        let threshold_at = move |prec: u32| -> Result<RealEnclosure> {
            let bound = collision_bound(a, b, prec)?;
            let sigma = binomial_sigma(&bound, trials, prec)?;
            Ok(&bound - &(&sigma * &RealEnclosure::exact(3)))
        };
        let real = Real::new(threshold_at);
        let passed = real.cmp_rational(&frequency, "collision threshold")? != Ordering::Greater;
        let prec = 96;
        let bound = collision_bound(a, b, prec)?;
        let sigma = binomial_sigma(&bound, trials, prec)?;
        Ok(CollisionReport {
            a,
            b,
            trials,
            successes,
            frequency,
            threshold: threshold_at(prec)?,
            bound,
            sigma,
            passed,
        })
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }
}

/// `key = value` lines; enclosures are printed as outward-rounded decimals.
impl fmt::Display for CollisionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = |e: &RealEnclosure| to_decimal(e.lo(), 12, Rounding::Down);
        let hi = |e: &RealEnclosure| to_decimal(e.hi(), 12, Rounding::Up);
        writeln!(f, "a = {}", self.a)?;
        writeln!(f, "b = {}", self.b)?;
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "successes = {}", self.successes)?;
        writeln!(f, "frequency = {}", to_decimal(&self.frequency, 12, Rounding::Nearest))?;
        writeln!(f, "bound = [{}, {}]", lo(&self.bound), hi(&self.bound))?;
        writeln!(f, "sigma = [{}, {}]", lo(&self.sigma), hi(&self.sigma))?;
        writeln!(f, "threshold = [{}, {}]", lo(&self.threshold), hi(&self.threshold))?;
        writeln!(f, "verdict = {}", self.verdict())
    }
}
