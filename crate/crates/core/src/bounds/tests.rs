use super::cache::*;
use super::*;
use crate::enclosure::Real;
use crate::survivor::default_scale;

fn q(a: i64, b: i64) -> Rational {
    Rational::from((a, b))
}

/// `p_n` by enumerating every target assignment of every round.
fn brute_force_p(n_max: usize) -> Vec<Rational> {
    let mut p = vec![Rational::from(1), Rational::new()];
    for n in 2..=n_max {
        let m = n - 1;
        let total = (m as u64).pow(n as u32);
        let mut acc = Rational::new();
        for code in 0..total {
            let mut c = code;
            let mut shot = vec![false; n];
            for i in 0..n {
                let d = (c % m as u64) as usize;
                c /= m as u64;
                shot[if d >= i { d + 1 } else { d }] = true;
            }
            let alive = shot.iter().filter(|s| !**s).count();
            acc += &p[alive];
        }
        p.push(acc / Rational::from(total));
    }
    p
}

#[test]
fn seeds_and_small_rows() {
    let s = default_scale();
    let t = run_bounds(5, &s).unwrap();
    assert_eq!(*t.lower_p_num(0), s);
    assert_eq!(*t.lower_q_num(0), 0);
    assert_eq!(*t.lower_p_num(1), 0);
    assert_eq!(*t.lower_q_num(1), s);
    assert_eq!(*t.lower_p_num(2), s);
    assert_eq!(*t.lower_p_num(3), 2_500_000_000u64);
    let one = run_bounds(1, &s).unwrap();
    assert_eq!(one.n_max(), 1);
}

#[test]
fn exact_p_examples() {
    let p = exact_p(6).unwrap();
    assert_eq!(p[2], 1);
    assert_eq!(p[3], q(1, 4));
    assert_eq!(p[4], q(11, 27));
    assert!(matches!(exact_p(EXACT_P_CAP + 1), Err(Error::Refused(_))));
    let bf = brute_force_p(6);
    assert_eq!(&p[..], &bf[..]);
}

#[test]
fn sandwich_against_exact() {
    let s = default_scale();
    let t = run_bounds(30, &s).unwrap();
    let p = exact_p(30).unwrap();
    for n in 0..=30 {
        assert!(t.lower(n).unwrap() <= p[n as usize], "n={n}");
        assert!(p[n as usize] <= t.upper(n).unwrap(), "n={n}");
    }
}

#[test]
fn wider_window_never_lowers_bounds() {
    let s = default_scale();
    let w = run_bounds_with(150, &s, WindowPolicy::Widened, None).unwrap();
    let f = run_bounds_with(150, &s, WindowPolicy::Full, None).unwrap();
    for n in 0..=150 {
        assert!(f.lower_p_num(n) >= w.lower_p_num(n), "n={n}");
        assert!(f.lower_q_num(n) >= w.lower_q_num(n), "n={n}");
    }
}

#[test]
fn window_contains_the_nominal_range() {
    for n in (2..3000).step_by(37).chain([2, 3, 4, 5143, 6000]) {
        let w = TruncationWindow::for_n(n).unwrap();
        assert!(w.k1 <= w.k2 && w.k2 <= n - 2);
        let centre = move |sign: i32| {
            Real::new(move |prec| {
                let ne = RealEnclosure::exact(n).checked_div(&RealEnclosure::e(prec))?;
                let root = RealEnclosure::exact(5 * n).sqrt(prec)?;
                Ok(if sign < 0 { &ne - &root } else { &ne + &root })
            })
        };
        let k1 = centre(-1).ceil("k1").unwrap().max(Integer::new());
        let k2 = centre(1).floor("k2").unwrap().min(Integer::from(n - 2));
        assert!(w.k1 <= k1, "n={n}");
        assert!(w.k2 >= k2, "n={n}");
        assert!(k1 <= Integer::from(w.k1) + 1 && w.k2 <= k2.clone() + 1);
    }
}

#[test]
fn deterministic_and_gap_bounded() {
    let s = default_scale();
    let a = run_bounds(260, &s).unwrap();
    let b = run_bounds(260, &s).unwrap();
    assert_eq!(a, b);
    let (_, gap) = a.max_gap().unwrap();
    assert!(gap <= q(600, 10_000_000_000));
}

#[test]
fn figure_rows() {
    let t = run_bounds(12, &default_scale()).unwrap();
    let rows = figure_data(&t).unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0].n, 2);
    assert_eq!(rows[0].lower, "1.0000000000");
    assert_eq!(rows[0].upper, "1.0000000000");
    assert_eq!(rows[0].log_n, "0.6931471806");
    assert_eq!(rows[1].lower, "0.2500000000");
    let mut buf = Vec::new();
    write_figure_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("n,log_n,lower,upper\n2,0.6931471806,1.0000000000,1.0000000000\n"));
}

#[test]
fn extrema() {
    let t = run_bounds(40, &default_scale()).unwrap();
    let e = interval_extrema(&t, 2, 2).unwrap();
    assert_eq!(e.min_lower, 1);
    assert_eq!(e.max_upper, 1);
    let e = interval_extrema(&t, 3, 10).unwrap();
    for n in 3..=10 {
        assert!(e.min_lower <= t.lower(n).unwrap());
        assert!(e.max_upper >= t.upper(n).unwrap());
    }
    assert!(matches!(interval_extrema(&t, 5, 41), Err(Error::Domain(_))));
    assert!(matches!(interval_extrema(&t, 9, 8), Err(Error::Domain(_))));
}

#[test]
fn cache_round_trip_and_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let s = default_scale();
    let (t, status) = load_or_compute(dir.path(), 60, &s, WindowPolicy::Widened, false, None).unwrap();
    assert!(matches!(status, CacheStatus::Computed(_)));
    let (t2, status) = load_or_compute(dir.path(), 50, &s, WindowPolicy::Widened, false, None).unwrap();
    assert!(matches!(status, CacheStatus::Hit(_)));
    assert_eq!(t, t2);
    assert!(find_cache(dir.path(), &s, 61, WindowPolicy::Widened).unwrap().is_none());
    assert!(find_cache(dir.path(), &Integer::from(1000), 10, WindowPolicy::Widened)
        .unwrap()
        .is_none());
    let mut buf = Vec::new();
    write_table(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("n,lower_p_num,lower_q_num,scale\n2,10000000000,0,10000000000\n3,2500000000,"));
    assert_eq!(text.lines().count(), 60);
}

#[test]
fn corrupted_rows_are_named() {
    let t = run_bounds(45, &default_scale()).unwrap();
    let mut buf = Vec::new();
    write_table(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();

    let mut bad = lines.clone();
    bad[5] = "6,oops,1,10000000000";
    let err = read_table(bad.join("\n").as_bytes(), WindowPolicy::Widened).unwrap_err();
    assert!(matches!(err, Error::CacheIntegrity { row: 6, .. }), "{err}");

    let mut bad = lines.clone();
    bad[10] = "11,9999999999,9999999999,10000000000";
    let err = read_table(bad.join("\n").as_bytes(), WindowPolicy::Widened).unwrap_err();
    assert!(matches!(err, Error::CacheIntegrity { row: 11, .. }), "{err}");

    let mut bad = lines.clone();
    bad.remove(7);
    let err = read_table(bad.join("\n").as_bytes(), WindowPolicy::Widened).unwrap_err();
    assert!(matches!(err, Error::CacheIntegrity { row: 8, .. }), "{err}");

    // plausible but wrong value inside the spot-checked prefix
    let mut bad: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    bad[3] = format!("4,{},{},10000000000", t.lower_p_num(4).clone() - 1u32, t.lower_q_num(4));
    let err = read_table(bad.join("\n").as_bytes(), WindowPolicy::Widened).unwrap_err();
    assert!(matches!(err, Error::CacheIntegrity { row: 4, .. }), "{err}");

    let err = read_table("n,p,q,scale\n".as_bytes(), WindowPolicy::Widened).unwrap_err();
    assert!(matches!(err, Error::CacheIntegrity { row: 1, .. }));
}
