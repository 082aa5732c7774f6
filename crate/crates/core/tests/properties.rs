use proptest::prelude::*;
use rug::{Integer, Rational};

use roulette_core::bounds::cache::{read_table, write_table};
use roulette_core::bounds::{exact_p, run_bounds, WindowPolicy};
use roulette_core::coupling::{sample_round, OutcomeCounts};
use roulette_core::intervals::{chain_tail_terms, inclusion_scan, k0_threshold};
use roulette_core::survivor::{s_pmf_exact, y_pmf, y_tail_exact, z_pmf, TailDirection};
use roulette_core::tail::{y_tail_event_exact, Side};

#[test]
fn table_survives_a_cache_roundtrip() {
    let t = run_bounds(45, &Integer::from(10_000_000_000u64)).unwrap();
    let mut buf = Vec::new();
    write_table(&t, &mut buf).unwrap();
    let back = read_table(&buf[..], WindowPolicy::Widened).unwrap();
    for n in 2..=45 {
        assert_eq!(back.lower_p_num(n), t.lower_p_num(n));
        assert_eq!(back.lower_q_num(n), t.lower_q_num(n));
    }
}

#[test]
fn survivor_count_sits_between_y_and_z() {
    for n in 3..=40 {
        let (y, s, z) = (y_pmf(n).unwrap(), s_pmf_exact(n).unwrap(), z_pmf(n).unwrap());
        assert!(y.mean() <= s.mean() && s.mean() <= z.mean(), "n = {n}");
        // first-order dominance, one tail at a time
        for k in 0..=n as i64 {
            assert!(
                y.at_least(k) <= s.at_least(k) && s.at_least(k) <= z.at_least(k),
                "n = {n}, k = {k}"
            );
        }
    }
}

#[test]
fn simulated_counts_match_all_three_pmfs() {
    let n = 12;
    let c = sample_round(n, 200_000, 3).unwrap();
    let limit = Rational::from((1, 100));
    for (pmf, counts) in [(s_pmf_exact(n), &c.s), (y_pmf(n), &c.y), (z_pmf(n), &c.z)] {
        let tv = pmf.unwrap().total_variation(&OutcomeCounts::pairs(counts));
        assert!(tv < limit, "{}", tv.to_f64());
    }
}

#[test]
fn chain_terms_are_threshold_events() {
    // lower term: P(Y <= prev.lo - 1) at cur.lo; upper: P(Y >= prev.hi) at cur.hi
    let chain = [(12, 16), (33, 41)];
    let t = &chain_tail_terms(&chain).unwrap()[0];
    assert_eq!(t.lower, y_tail_exact(33, 11, TailDirection::AtMost).unwrap());
    assert_eq!(t.upper, y_tail_exact(41, 16, TailDirection::AtLeast).unwrap());
    let ev = y_tail_event_exact(40, &Rational::new(), Side::Upper).unwrap();
    assert!(ev > 0 && ev <= 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bounds_bracket_exact_values_at_any_scale(digits in 3u32..14) {
        let scale = Integer::from(Integer::u_pow_u(10, digits));
        let t = run_bounds(24, &scale).unwrap();
        let p = exact_p(24).unwrap();
        for n in 2..=24u32 {
            prop_assert!(t.lower(n).unwrap() <= p[n as usize]);
            prop_assert!(p[n as usize] <= t.upper(n).unwrap());
        }
    }

    #[test]
    fn j_intervals_fit_inside_constructed_intervals(k0 in 6u32..11, wn in 0i64..=16) {
        let rows = inclusion_scan([k0], &[Rational::from((wn, 16))], 5).unwrap();
        prop_assert!(rows[0].holds(), "{:?}", rows[0]);
        prop_assert_eq!(k0_threshold(&rows), Some(k0));
    }
}
