use super::*;
use proptest::prelude::*;

fn q(a: i64, b: i64) -> Rational {
    Rational::from((a, b))
}

/// Survivor counts over all `(n-1)^n` target assignments.
fn brute_force_s(n: u32) -> Vec<u64> {
    let n_us = n as usize;
    let mut counts = vec![0u64; n_us + 1];
    let total = (n as u64 - 1).pow(n);
    let mut targets = vec![0usize; n_us];
    for code in 0..total {
        let mut c = code;
        for (i, t) in targets.iter_mut().enumerate() {
            let d = (c % (n as u64 - 1)) as usize;
            c /= n as u64 - 1;
            // skip self
            *t = if d >= i { d + 1 } else { d };
        }
        let mut shot = vec![false; n_us];
        for &t in &targets {
            shot[t] = true;
        }
        counts[shot.iter().filter(|s| !**s).count()] += 1;
    }
    counts
}

/// Empty-box counts over all `boxes^balls` placements.
fn brute_force_empty(balls: u32, boxes: u32) -> Vec<u64> {
    let mut counts = vec![0u64; boxes as usize + 1];
    let total = (boxes as u64).pow(balls);
    for code in 0..total {
        let mut c = code;
        let mut hit = vec![false; boxes as usize];
        for _ in 0..balls {
            hit[(c % boxes as u64) as usize] = true;
            c /= boxes as u64;
        }
        counts[hit.iter().filter(|h| !**h).count()] += 1;
    }
    counts
}

#[test]
fn s_pmf_examples() {
    let p2 = s_pmf_exact(2).unwrap();
    assert_eq!(p2.support(), vec![0]);
    assert_eq!(p2.mass(0), 1);
    let p3 = s_pmf_exact(3).unwrap();
    assert_eq!(p3.mass(0), q(1, 4));
    assert_eq!(p3.mass(1), q(3, 4));
    let p4 = s_pmf_exact(4).unwrap();
    assert_eq!(p4.mass(0), q(9, 81));
    assert_eq!(p4.mass(1), q(48, 81));
    assert_eq!(p4.mass(2), q(24, 81));
    assert!(matches!(s_pmf_exact(1), Err(Error::Domain(_))));
}

#[test]
fn s_pmf_matches_enumeration() {
    for n in 2..=7 {
        let counts = brute_force_s(n);
        let pmf = s_pmf_exact(n).unwrap();
        let total: u64 = counts.iter().sum();
        for (k, &c) in counts.iter().enumerate() {
            assert_eq!(pmf.mass(k as i64), Rational::from((c, total)), "n={n} k={k}");
        }
    }
}

#[test]
fn s_pmf_normalised_with_bounded_support() {
    for n in 2..40 {
        let pmf = s_pmf_exact(n).unwrap();
        let total: Rational = pmf.iter().map(|(_, m)| m).sum();
        assert_eq!(total, 1);
        assert!(pmf.support().iter().all(|&k| k <= n as i64 - 2));
        assert_eq!(pmf.numerator(n as i64 - 1), 0);
    }
}

#[test]
fn lower_scaled_examples() {
    let s = default_scale();
    assert_eq!(*s_pmf_lower_scaled(3, 0, &s).unwrap().numerator(), 2_500_000_000u64);
    assert_eq!(*s_pmf_lower_scaled(3, 1, &s).unwrap().numerator(), 7_500_000_000u64);
    assert!(matches!(s_pmf_lower_scaled(5, 4, &s), Err(Error::Domain(_))));
}

#[test]
fn lower_scaled_is_certified_and_tight() {
    let s = default_scale();
    let two_ulp = q(2, 10_000_000_000);
    for n in 2..40 {
        let pmf = s_pmf_exact(n).unwrap();
        for k in 0..=n - 2 {
            let lb = s_pmf_lower_scaled(n, k, &s).unwrap().to_rational();
            let exact = pmf.mass(k as i64);
            assert!(lb <= exact, "n={n} k={k}");
            assert!(exact - lb < two_ulp, "n={n} k={k}");
        }
    }
}

#[test]
fn kernel_matches_definition() {
    let s = default_scale();
    let mut kern = LowerBoundKernel::new(95, s.clone()).unwrap();
    while kern.n() <= 112 {
        let n = kern.n();
        for k in 0..=n - 2 {
            let (fast, _) = kern.lower_scaled(k).unwrap();
            let (exact, _) = kern.lower_scaled_exact(k).unwrap();
            assert_eq!(fast, exact, "n={n} k={k}");
            assert_eq!(fast, s_pmf_lower_scaled(n, k, &s).unwrap(), "n={n} k={k}");
        }
        kern.advance();
    }
}

#[test]
fn kernel_matches_definition_at_larger_n() {
    let s = default_scale();
    let kern = LowerBoundKernel::new(700, s.clone()).unwrap();
    for k in [0, 150, 200, 230, 257, 258, 290, 330, 698] {
        let (fast, _) = kern.lower_scaled(k).unwrap();
        assert_eq!(fast, s_pmf_lower_scaled(700, k, &s).unwrap(), "k={k}");
    }
}

#[test]
fn kernel_advance_equals_fresh_table() {
    let s = Integer::from(1000);
    let mut a = LowerBoundKernel::new(150, s.clone()).unwrap();
    a.advance();
    a.advance();
    let b = LowerBoundKernel::new(152, s).unwrap();
    assert_eq!(a.denominator(), b.denominator());
    for k in (0..=150).step_by(7) {
        assert_eq!(a.lower_scaled(k).unwrap().0, b.lower_scaled(k).unwrap().0);
    }
}

#[test]
fn truncated_term_formula() {
    // C(4,1) C(3,0) 3^1 2^3
    assert_eq!(TruncatedTerm::new(4, 1, 0).value, 96);
    assert_eq!(TruncatedTerm::new(4, 1, 2).value, 0);
    assert_eq!(TruncatedTerm::new(4, 2, 2).value, 0);
    // C(5,0) C(5,1) 4^1 3^4
    assert_eq!(TruncatedTerm::new(5, 0, 1).value, 5 * 4 * 81);
}

#[test]
fn empty_boxes_examples() {
    let a = empty_boxes_pmf(1, 1).unwrap();
    assert_eq!(a.support(), vec![0]);
    let b = empty_boxes_pmf(2, 2).unwrap();
    assert_eq!(b.mass(0), q(1, 2));
    assert_eq!(b.mass(1), q(1, 2));
    let c = empty_boxes_pmf(3, 2).unwrap();
    assert_eq!(c.mass(0), q(3, 4));
    assert_eq!(c.mass(1), q(1, 4));
    let none = empty_boxes_pmf(0, 3).unwrap();
    assert_eq!(none.mass(3), 1);
    assert!(matches!(empty_boxes_pmf(2, 0), Err(Error::Domain(_))));
}

#[test]
fn empty_boxes_matches_enumeration() {
    for boxes in 1..=5 {
        for balls in 0..=7 {
            if (boxes as u64).pow(balls) > 200_000 {
                continue;
            }
            let counts = brute_force_empty(balls, boxes);
            let total: u64 = counts.iter().sum();
            let pmf = empty_boxes_pmf(balls, boxes).unwrap();
            for (e, &c) in counts.iter().enumerate() {
                assert_eq!(pmf.mass(e as i64), Rational::from((c, total)));
            }
        }
    }
    // ten balls into three boxes
    let counts = brute_force_empty(10, 3);
    let pmf = empty_boxes_pmf(10, 3).unwrap();
    for (e, &c) in counts.iter().enumerate() {
        assert_eq!(pmf.mass(e as i64), Rational::from((c, 59049)));
    }
}

#[test]
fn stirling_identity() {
    for n in 1..=15u32 {
        for i in 0..=n {
            let pmf = empty_boxes_pmf(i, n).unwrap();
            for k in 0..=n {
                let falling = Integer::from(Integer::factorial(n)) / Integer::from(Integer::factorial(n - k));
                let rhs = Rational::from((falling * stirling2(i, k), Integer::from(Integer::u_pow_u(n, i))));
                assert_eq!(pmf.mass((n - k) as i64), rhs, "n={n} i={i} k={k}");
            }
        }
    }
}

#[test]
fn stirling_values() {
    for i in 1..20 {
        assert_eq!(stirling2(i, 1), 1);
    }
    assert_eq!(stirling2(3, 2), 3);
    assert_eq!(stirling2(4, 2), 7);
    assert_eq!(stirling2(0, 0), 1);
    assert_eq!(stirling2(3, 0), 0);
    assert_eq!(stirling2(2, 3), 0);
    // S(i+1,k) = k S(i,k) + S(i,k-1)
    for i in 1..25 {
        for k in 1..=i {
            assert_eq!(stirling2(i + 1, k), stirling2(i, k) * k + stirling2(i, k - 1));
        }
    }
}

#[test]
fn y_tail_examples() {
    assert_eq!(y_tail_exact(3, 1, TailDirection::AtLeast).unwrap(), q(1, 2));
    assert_eq!(y_tail_exact(3, 1, TailDirection::AtMost).unwrap(), 1);
    assert_eq!(y_tail_exact(4, 1, TailDirection::AtLeast).unwrap(), q(7, 9));
    assert!(matches!(
        y_tail_exact(4, 0, TailDirection::AtLeast),
        Err(Error::Domain(_))
    ));
}

#[test]
fn y_tail_consistency() {
    for n in 2..=40 {
        let pmf = y_pmf(n).unwrap();
        for k in 0..=n + 1 {
            if k >= 1 {
                let t = y_tail_exact(n, k, TailDirection::AtLeast).unwrap();
                assert_eq!(t, pmf.at_least(k as i64), "n={n} k={k}");
            }
            let t = y_tail_exact(n, k, TailDirection::AtMost).unwrap();
            assert_eq!(t, pmf.at_most(k as i64), "n={n} k={k}");
        }
    }
}

#[test]
fn y_z_distributions() {
    let y = y_pmf(4).unwrap();
    assert_eq!(y.at_least(1), q(7, 9));
    let z2 = z_pmf(2).unwrap();
    assert_eq!(z2.support(), vec![1]);
    for n in 2..=12 {
        assert_eq!(y_pmf(n).unwrap().mean(), expected_empty(n).unwrap());
    }
}

#[test]
fn expectation_examples() {
    assert_eq!(expected_empty(2).unwrap(), 0);
    assert_eq!(expected_empty(4).unwrap(), q(8, 9));
}

#[test]
fn csv_export() {
    let mut buf = Vec::new();
    s_pmf_exact(3).unwrap().write_csv(&mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "outcome,numerator,denominator\n0,2,8\n1,6,8\n"
    );
    let mut buf = Vec::new();
    s_pmf_exact(4)
        .unwrap()
        .write_decimal_csv(&mut buf, 4, Rounding::Down)
        .unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("0,0.1111,down"));
}

#[test]
fn total_variation_is_exact() {
    let pmf = s_pmf_exact(3).unwrap();
    assert_eq!(pmf.total_variation(&[(0, 1), (1, 3)]), 0);
    assert_eq!(pmf.total_variation(&[(1, 4)]), q(1, 4));
    assert_eq!(pmf.total_variation(&[(5, 1)]), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empty_boxes_is_a_pmf(balls in 0u32..40, boxes in 1u32..40) {
        let pmf = empty_boxes_pmf(balls, boxes).unwrap();
        // fewer balls than boxes leaves at least boxes - balls empty
        let min_empty = boxes.saturating_sub(balls) as i64;
        prop_assert!(pmf.support().iter().all(|&e| e >= min_empty && e <= boxes as i64));
        if balls > 0 {
            prop_assert_eq!(pmf.numerator(boxes as i64), 0);
        }
    }

    #[test]
    fn lower_bound_never_exceeds_exact(n in 2u32..60, kf in 0.0f64..1.0, scale in 1u64..1_000_000_000_000) {
        let k = ((n - 2) as f64 * kf) as u32;
        let s = Integer::from(scale);
        let lb = s_pmf_lower_scaled(n, k, &s).unwrap().to_rational();
        let exact = s_pmf_exact(n).unwrap().mass(k as i64);
        prop_assert!(lb <= exact);
        prop_assert!(exact - lb < (2, scale));
    }

    #[test]
    fn tails_are_complementary(n in 3u32..80, k in 1u32..80) {
        let ge = y_tail_exact(n, k, TailDirection::AtLeast).unwrap();
        let le = y_tail_exact(n, k - 1, TailDirection::AtMost).unwrap();
        prop_assert_eq!(ge + le, Rational::from(1));
    }
}
