//! The explicit coupling of one shooting round for every `n` at once, driven
//! by shared uniforms `U_j` and victims `V_{A,i}`, together with the
//! multi-round coupling and Monte Carlo experiments built on top of it.
//!
//! All randomness is counter based: `U_j` and `V_{A,i}` are pure functions of
//! the seed, the copy index and their own index, so two chains that consult
//! the same `(A, i)` always see the same victim, and results never depend on
//! evaluation order or thread count.

mod stats;

use std::io::Write;
use std::ops::RangeInclusive;

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use rug::Rational;

use crate::error::{Error, Result};

pub use stats::{binomial_sigma, collision_bound, CollisionReport};

const TAG_U: u64 = 0x55;
const TAG_V: u64 = 0x56;
const TAG_ELEM: u64 = 0x45;

fn splitmix(x: u64) -> u64 {
    SplitMix64::seed_from_u64(x).next_u64()
}

fn combine(h: u64, part: u64) -> u64 {
    splitmix(h ^ splitmix(part))
}

/// One copy of the coupling: the sequence `U_1, U_2, ...` and the victim map
/// `(A, i) -> V_{A,i}`, both materialized on demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CouplingRealization {
    seed: u64,
    copy: i64,
    u_key: u64,
    v_key: u64,
    elem_key: u64,
}

impl CouplingRealization {
    pub fn new(seed: u64, copy: i64) -> Self {
        let base = combine(combine(0x243f_6a88_85a3_08d3, seed), copy as u64);
        CouplingRealization {
            seed,
            copy,
            u_key: combine(base, TAG_U),
            v_key: combine(base, TAG_V),
            elem_key: combine(base, TAG_ELEM),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn copy(&self) -> i64 {
        self.copy
    }

    /// Raw 64-bit draw behind `U_j = (raw + 1) / 2^64`, a uniform on `(0, 1]`.
    pub fn u_raw(&self, j: u64) -> u64 {
        combine(self.u_key, j)
    }

    /// `U_j` as an exact rational.
    pub fn u(&self, j: u64) -> Rational {
        Rational::from((rug::Integer::from(self.u_raw(j)) + 1u32, rug::Integer::from(1) << 64))
    }

    /// Whether `U_j <= num / den`, decided exactly.
    pub fn u_at_most(&self, j: u64, num: u64, den: u64) -> bool {
        (self.u_raw(j) as u128 + 1) * den as u128 <= (num as u128) << 64
    }

    fn elem_hash(&self, a: u32) -> u64 {
        combine(self.elem_key, a as u64)
    }

    /// Order-independent hash of a set, updatable one element at a time.
    fn set_hash<'a>(&self, set: impl IntoIterator<Item = &'a u32>) -> u64 {
        set.into_iter().fold(0u64, |h, &a| h.wrapping_add(self.elem_hash(a)))
    }

    /// Rank (0-based) of `V_{A,i}` within `A \ {i}`, given the set's hash and
    /// the size of `A \ {i}`.
    fn victim_rank(&self, set_hash: u64, i: u32, size: u32) -> u32 {
        let mut rng = SplitMix64::seed_from_u64(combine(combine(self.v_key, set_hash), i as u64));
        rng.random_range(0..size)
    }

    /// `V_{A,i}`: a uniform element of `A \ {i}`. `set` must be sorted and
    /// free of duplicates.
    pub fn victim(&self, set: &[u32], i: u32) -> Result<u32> {
        if set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("set must be strictly increasing"));
        }
        let rest: Vec<u32> = set.iter().copied().filter(|&a| a != i).collect();
        if rest.is_empty() {
            return Err(Error::domain(format!("A \\ {{{i}}} is empty")));
        }
        let r = self.victim_rank(self.set_hash(set), i, rest.len() as u32);
        Ok(rest[r as usize])
    }
}

/// Membership and order statistics over `{1, ..., n}`.
struct Fenwick {
    tree: Vec<u32>,
    top: usize,
}

impl Fenwick {
    fn full(n: usize) -> Self {
        let mut tree = vec![0u32; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        let top = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        Fenwick { tree, top }
    }

    fn remove(&mut self, mut i: usize) {
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of elements `<= i`.
    fn rank(&self, mut i: usize) -> u32 {
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    /// The element with 1-based rank `k`.
    fn select(&self, mut k: u32) -> usize {
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] < k {
                pos = next;
                k -= self.tree[next];
            }
            step >>= 1;
        }
        pos + 1
    }
}

/// Per-step values `S^n_i`, `Y^n_i`, `Z^n_i` for `i = 0..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundTrace {
    pub s: Vec<u32>,
    pub y: Vec<u32>,
    pub z: Vec<u32>,
}

/// Terminal values `S_n`, `Y_n`, `Z_n` of one coupled round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub n: u32,
    pub s: u32,
    pub y: u32,
    pub z: u32,
    pub trace: Option<RoundTrace>,
}

fn run_round(
    real: &CouplingRealization,
    n: u32,
    traced: bool,
    mut sets: Option<&mut Vec<Vec<u32>>>,
) -> Result<RoundOutcome> {
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be at least 2")));
    }
    let den = (n - 1) as u64;
    let mut alive = Fenwick::full(n as usize);
    let mut present = vec![true; n as usize + 1];
    let mut hash = real.set_hash((1..=n).collect::<Vec<_>>().iter());
    let (mut s, mut y, mut z) = (n, n, n);
    let mut trace = traced.then(|| RoundTrace {
        s: vec![n],
        y: vec![n],
        z: vec![n],
    });
    if let Some(sets) = sets.as_deref_mut() {
        sets.push((1..=n).collect());
    }
    for i in 0..n {
        let shooter = i + 1;
        let j = (n - i) as u64;
        let own = present[shooter as usize] as u32;
        if real.u_at_most(j, (s - own) as u64, den) {
            let r = real.victim_rank(hash, shooter, s - own);
            // 1-based rank in A, skipping the shooter
            let mut k = r + 1;
            if own == 1 && alive.rank(shooter as usize) <= k {
                k += 1;
            }
            let v = alive.select(k);
            alive.remove(v);
            present[v] = false;
            hash = hash.wrapping_sub(real.elem_hash(v as u32));
            s -= 1;
        }
        if real.u_at_most(j, y as u64, den) {
            y -= 1;
        }
        if real.u_at_most(j, (z - 1) as u64, den) {
            z -= 1;
        }
        if let Some(t) = trace.as_mut() {
            t.s.push(s);
            t.y.push(y);
            t.z.push(z);
        }
        if let Some(sets) = sets.as_deref_mut() {
            sets.push((1..=n).filter(|&a| present[a as usize]).collect());
        }
    }
    Ok(RoundOutcome { n, s, y, z, trace })
}

/// One coupled round from `n` people: terminal `S_n`, `Y_n`, `Z_n`.
pub fn simulate_round(real: &CouplingRealization, n: u32) -> Result<RoundOutcome> {
    run_round(real, n, false, None)
}

/// Like [`simulate_round`], also recording every intermediate value.
pub fn simulate_round_traced(real: &CouplingRealization, n: u32) -> Result<RoundOutcome> {
    run_round(real, n, true, None)
}

/// The sets `A^n_0, ..., A^n_n`, each sorted.
pub fn round_sets(real: &CouplingRealization, n: u32) -> Result<Vec<Vec<u32>>> {
    let mut sets = Vec::with_capacity(n as usize + 1);
    run_round(real, n, false, Some(&mut sets))?;
    Ok(sets)
}

/// Traced rounds for every `n` in `range`, all on the same realization.
pub fn simulate_round_sweep(real: &CouplingRealization, range: RangeInclusive<u32>) -> Result<Vec<RoundOutcome>> {
    if *range.start() < 2 {
        return Err(Error::domain(format!(
            "sweep must start at n >= 2, not {}",
            range.start()
        )));
    }
    range.map(|n| simulate_round_traced(real, n)).collect()
}

/// A pathwise inequality that failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub n: u32,
    pub i: u32,
    pub what: &'static str,
}

/// Count pathwise violations in a sweep: `Y <= S <= Z <= Y + 1` at every
/// step, and `Y^n_i <= Y^{n+1}_{i+1} <= Y^n_i + 1` (likewise for `Z`)
/// between consecutive `n`. Outcomes must carry traces.
pub fn sweep_violations(outcomes: &[RoundOutcome]) -> Result<(u64, Vec<Violation>)> {
    let mut checked = 0u64;
    let mut bad = Vec::new();
    let traces: Vec<&RoundTrace> = outcomes
        .iter()
        .map(|o| o.trace.as_ref().ok_or_else(|| Error::domain("outcome without trace")))
        .collect::<Result<_>>()?;
    for (o, t) in outcomes.iter().zip(&traces) {
        for i in 0..=o.n as usize {
            checked += 1;
            let (s, y, z) = (t.s[i], t.y[i], t.z[i]);
            if !(y <= s && s <= z && z <= y + 1) {
                bad.push(Violation {
                    n: o.n,
                    i: i as u32,
                    what: "Y <= S <= Z <= Y+1",
                });
            }
        }
    }
    for w in outcomes.windows(2).zip(traces.windows(2)) {
        let ((a, b), (ta, tb)) = ((&w.0[0], &w.0[1]), (w.1[0], w.1[1]));
        if b.n != a.n + 1 {
            continue;
        }
        for i in 0..=a.n as usize {
            checked += 1;
            if !(ta.y[i] <= tb.y[i + 1] && tb.y[i + 1] <= ta.y[i] + 1) {
                bad.push(Violation {
                    n: a.n,
                    i: i as u32,
                    what: "Y^n_i <= Y^(n+1)_(i+1) <= Y^n_i+1",
                });
            }
            if !(ta.z[i] <= tb.z[i + 1] && tb.z[i + 1] <= ta.z[i] + 1) {
                bad.push(Violation {
                    n: a.n,
                    i: i as u32,
                    what: "Z^n_i <= Z^(n+1)_(i+1) <= Z^n_i+1",
                });
            }
        }
    }
    Ok((checked, bad))
}

/// On one sweep: whenever `Y_a >= alpha` and `Y_b <= beta - 1`, every `S_n`
/// with `a <= n <= b` lies in `[alpha, beta]`. Returns `false` on a
/// counterexample; `a..=b` must be covered by the sweep.
pub fn corridor_event_holds(outcomes: &[RoundOutcome], a: u32, b: u32, alpha: u32, beta: u32) -> Result<bool> {
    let get = |n: u32| {
        outcomes
            .iter()
            .find(|o| o.n == n)
            .ok_or_else(|| Error::domain(format!("n = {n} not in sweep")))
    };
    if a > b {
        return Err(Error::domain(format!("empty range {a}..={b}")));
    }
    if !(get(a)?.y >= alpha && get(b)?.y < beta) {
        return Ok(true);
    }
    for n in a..=b {
        let s = get(n)?.s;
        if s < alpha || s > beta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Starting copies for the multi-round coupling: the round `i + 1` of the
/// process started at `n` uses copy `k_n - i`.
pub struct MultiRoundPlan {
    seed: u64,
    k: Box<dyn Fn(u32) -> i64 + Send + Sync>,
}

impl MultiRoundPlan {
    pub fn new(seed: u64, k: impl Fn(u32) -> i64 + Send + Sync + 'static) -> Self {
        MultiRoundPlan { seed, k: Box::new(k) }
    }

    /// `k_n = k` for every start.
    pub fn constant(seed: u64, k: i64) -> Self {
        Self::new(seed, move |_| k)
    }

    pub fn k(&self, start: u32) -> i64 {
        (self.k)(start)
    }

    /// The copy used in round `round` (1-based) from `start`.
    pub fn copy_for(&self, start: u32, round: u32) -> CouplingRealization {
        CouplingRealization::new(self.seed, self.k(start) - (round as i64 - 1))
    }
}

/// `X^n_0 = start, X^n_1, ...` up to absorption in `{0, 1}` or `max_rounds`.
pub fn simulate_multiround(plan: &MultiRoundPlan, start: u32, max_rounds: u32) -> Result<Vec<u32>> {
    let mut traj = vec![start];
    let mut x = start;
    for round in 1..=max_rounds {
        if x < 2 {
            break;
        }
        x = simulate_round(&plan.copy_for(start, round), x)?.s;
        traj.push(x);
    }
    Ok(traj)
}

/// CSV `round,value`.
pub fn write_trajectory_csv<W: Write>(traj: &[u32], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["round", "value"])?;
    for (i, v) in traj.iter().enumerate() {
        out.write_record([i.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Outcome counts of `S_n`, `Y_n`, `Z_n` over `trials` independent copies
/// (copy index = trial number).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub trials: u64,
    pub s: Vec<u64>,
    pub y: Vec<u64>,
    pub z: Vec<u64>,
}

impl OutcomeCounts {
    fn with_n(n: u32) -> Self {
        let len = n as usize + 1;
        OutcomeCounts {
            trials: 0,
            s: vec![0; len],
            y: vec![0; len],
            z: vec![0; len],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        for (a, b) in [
            (&mut self.s, &other.s),
            (&mut self.y, &other.y),
            (&mut self.z, &other.z),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self
    }

    /// `(outcome, count)` pairs with nonzero count, as taken by
    /// [`crate::survivor::Pmf::total_variation`].
    pub fn pairs(counts: &[u64]) -> Vec<(i64, u64)> {
        counts
            .iter()
            .enumerate()
            .filter(|c| *c.1 > 0)
            .map(|(k, &c)| (k as i64, c))
            .collect()
    }
}

const BATCH: u64 = 4096;

/// Sample one round from `n` on copies `0..trials` of seed `seed`.
pub fn sample_round(n: u32, trials: u64, seed: u64) -> Result<OutcomeCounts> {
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be at least 2")));
    }
    let batches = trials.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut c = OutcomeCounts::with_n(n);
            for t in b * BATCH..((b + 1) * BATCH).min(trials) {
                let o = simulate_round(&CouplingRealization::new(seed, t as i64), n)?;
                c.trials += 1;
                c.s[o.s as usize] += 1;
                c.y[o.y as usize] += 1;
                c.z[o.z as usize] += 1;
            }
            Ok(c)
        })
        .try_reduce(|| OutcomeCounts::with_n(n), |a, b| Ok(a.merge(b)))
}

/// Sweeps over `n_range` on copies `0..realizations`; returns the number of
/// inequalities checked and every violation.
pub fn sweep_experiment(range: RangeInclusive<u32>, realizations: u64, seed: u64) -> Result<(u64, Vec<Violation>)> {
    (0..realizations)
        .into_par_iter()
        .map(|t| {
            let out = simulate_round_sweep(&CouplingRealization::new(seed, t as i64), range.clone())?;
            sweep_violations(&out)
        })
        .try_reduce(
            || (0, Vec::new()),
            |mut a, b| {
                a.0 += b.0;
                a.1.extend(b.1);
                Ok(a)
            },
        )
}

/// Frequency of `S_a = S_b` (same copy, hence coupled) over copies
/// `0..trials`. Requires `2 <= a <= b <= 5a/4`; `a = b` is the trivial case.
pub fn collision_experiment(a: u32, b: u32, trials: u64, seed: u64) -> Result<CollisionReport> {
    if a < 2 || b < a || 4 * b as u64 > 5 * a as u64 {
        return Err(Error::domain(format!("need 2 <= a <= b <= 5a/4, got a = {a}, b = {b}")));
    }
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let batches = trials.div_ceil(BATCH);
    let successes = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut hits = 0u64;
            for t in k * BATCH..((k + 1) * BATCH).min(trials) {
                let real = CouplingRealization::new(seed, t as i64);
                if simulate_round(&real, a)?.s == simulate_round(&real, b)?.s {
                    hits += 1;
                }
            }
            Ok::<_, Error>(hits)
        })
        .try_reduce(|| 0, |x, y| Ok(x + y))?;
    CollisionReport::new(a, b, trials, successes)
}

#[cfg(test)]
mod tests;
