use proptest::prelude::*;

use super::*;
use crate::enclosure::RealEnclosure;
use crate::survivor::{s_pmf_exact, y_pmf, z_pmf};

#[test]
fn two_people_always_kill_each_other() {
    for seed in 0..50 {
        let o = simulate_round(&CouplingRealization::new(seed, 3), 2).unwrap();
        assert_eq!((o.s, o.y, o.z), (0, 0, 1));
    }
    assert!(simulate_round(&CouplingRealization::new(0, 0), 1).is_err());
}

#[test]
fn uniforms_live_in_the_half_open_unit_interval() {
    let r = CouplingRealization::new(9, -4);
    for j in 1..200 {
        let u = r.u(j);
        assert!(u > 0 && u <= 1);
        assert!(r.u_at_most(j, 1, 1));
        assert_eq!(r.u_at_most(j, 1, 3), u <= (1, 3));
    }
}

#[test]
fn victims_are_stable_and_valid() {
    let r = CouplingRealization::new(5, 0);
    let set = [2, 3, 7, 11];
    for i in [1, 2, 7, 12] {
        let v = r.victim(&set, i).unwrap();
        assert_ne!(v, i);
        assert!(set.contains(&v));
        assert_eq!(v, r.victim(&set, i).unwrap());
    }
    assert!(r.victim(&[4], 4).is_err());
    assert!(r.victim(&[3, 2], 1).is_err());
}

#[test]
fn victims_cover_the_set_uniformly() {
    let set = [1, 2, 3, 4, 5];
    let mut hits = [0u32; 6];
    for seed in 0..20_000 {
        hits[CouplingRealization::new(seed, 0).victim(&set, 3).unwrap() as usize] += 1;
    }
    assert_eq!(hits[3], 0);
    for v in [1, 2, 4, 5] {
        assert!((4600..5400).contains(&hits[v]), "{hits:?}");
    }
}

#[test]
fn round_matches_the_set_construction() {
    // replaying the recursion with the public victim map
    for seed in 0..30 {
        let r = CouplingRealization::new(seed, 1);
        for n in [3, 4, 7, 12] {
            let sets = round_sets(&r, n).unwrap();
            let mut a: Vec<u32> = (1..=n).collect();
            for i in 0..n {
                let own = a.contains(&(i + 1)) as u64;
                if r.u_at_most((n - i) as u64, a.len() as u64 - own, (n - 1) as u64) {
                    let v = r.victim(&a, i + 1).unwrap();
                    a.retain(|&x| x != v);
                }
                assert_eq!(a, sets[i as usize + 1], "seed={seed} n={n} i={i}");
            }
            assert_eq!(simulate_round(&r, n).unwrap().s as usize, a.len());
        }
    }
}

#[test]
fn sweep_is_pathwise_ordered() {
    let (checked, bad) = sweep_experiment(2..=60, 200, 11).unwrap();
    assert!(checked > 0);
    assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(5)]);
}

#[test]
fn sweep_terminal_monotonicity_and_corridor() {
    for seed in 0..40 {
        let out = simulate_round_sweep(&CouplingRealization::new(seed, 0), 2..=80).unwrap();
        for w in out.windows(2) {
            assert!(w[0].y <= w[1].y && w[1].y <= w[0].y + 1);
            assert!(w[0].z <= w[1].z && w[1].z <= w[0].z + 1);
        }
        for (a, b) in [(20, 30), (40, 60), (2, 80)] {
            for alpha in [0, 5, 8, 12] {
                for beta in [10, 15, 25, 40] {
                    assert!(corridor_event_holds(&out, a, b, alpha, beta).unwrap());
                }
            }
        }
    }
}

#[test]
fn violations_are_detected() {
    let mut out = simulate_round_sweep(&CouplingRealization::new(1, 0), 5..=6).unwrap();
    out[0].trace.as_mut().unwrap().s[2] = 0;
    out[1].trace.as_mut().unwrap().y[3] = 6;
    let (_, bad) = sweep_violations(&out).unwrap();
    assert!(bad.iter().any(|v| v.n == 5 && v.i == 2));
    assert!(bad.iter().any(|v| v.what.starts_with("Y^n_i")));
}

#[test]
fn empirical_pmfs_match_exact() {
    let trials = 200_000;
    for n in [3u32, 5, 8] {
        let c = sample_round(n, trials, 2024).unwrap();
        assert_eq!(c.trials, trials);
        let tv_s = s_pmf_exact(n).unwrap().total_variation(&OutcomeCounts::pairs(&c.s));
        let tv_y = y_pmf(n).unwrap().total_variation(&OutcomeCounts::pairs(&c.y));
        let tv_z = z_pmf(n).unwrap().total_variation(&OutcomeCounts::pairs(&c.z));
        for tv in [tv_s, tv_y, tv_z] {
            assert!(tv < (1, 100), "n={n} tv={}", tv.to_f64());
        }
    }
}

#[test]
fn sampling_is_thread_independent() {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| sample_round(9, 10_000, 3).unwrap());
    let b = four.install(|| sample_round(9, 10_000, 3).unwrap());
    assert_eq!(a, b);
    let a = one.install(|| collision_experiment(20, 21, 5000, 8).unwrap().successes);
    let b = four.install(|| collision_experiment(20, 21, 5000, 8).unwrap().successes);
    assert_eq!(a, b);
}

#[test]
fn multiround_basics() {
    let plan = MultiRoundPlan::constant(4, 10);
    assert_eq!(simulate_multiround(&plan, 0, 20).unwrap(), vec![0]);
    assert_eq!(simulate_multiround(&plan, 1, 20).unwrap(), vec![1]);
    let t = simulate_multiround(&plan, 50, 100).unwrap();
    assert_eq!(t[0], 50);
    assert!(*t.last().unwrap() <= 1);
    assert!(t.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(plan.copy_for(50, 1).copy(), 10);
    assert_eq!(plan.copy_for(50, 13).copy(), -2);
    let mut buf = Vec::new();
    write_trajectory_csv(&t, &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("round,value\n0,50\n"));
}

#[test]
fn coupled_starts_merge_after_meeting() {
    let plan = MultiRoundPlan::constant(77, 5);
    let mut met = 0;
    for m in 30..60 {
        let a = simulate_multiround(&plan, m, 200).unwrap();
        let b = simulate_multiround(&plan, m + 1, 200).unwrap();
        if let Some(i) = (1..a.len().min(b.len())).find(|&i| a[i] == b[i]) {
            met += 1;
            assert_eq!(a[i..], b[i..]);
        }
    }
    assert!(met > 0);
}

#[test]
fn collision_degenerate_and_domain() {
    let r = collision_experiment(30, 30, 100, 0).unwrap();
    assert_eq!(r.successes, 100);
    assert!(r.passed);
    assert!(collision_experiment(40, 51, 10, 0).is_err());
    assert!(collision_experiment(1, 1, 10, 0).is_err());
    assert!(collision_experiment(41, 40, 10, 0).is_err());
    assert!(collision_experiment(40, 41, 0, 0).is_err());
}

#[test]
fn collision_report_arithmetic() {
    let sigma = binomial_sigma(&RealEnclosure::exact(Rational::from((1, 4))), 300, 80).unwrap();
    // sqrt(3/16/300) = 1/40
    assert!(sigma.contains(&Rational::from((1, 40))));
    // exp(-7) = 0.000911..., sigma at 10^6 trials is about 0.0000302
    let r = CollisionReport::new(40, 41, 1_000_000, 820).unwrap();
    assert!(!r.passed);
    let text = r.to_string();
    assert!(text.contains("verdict = fail"));
    assert!(text.contains("trials = 1000000"));
    assert!(CollisionReport::new(40, 41, 1_000_000, 830).unwrap().passed);
    // a negative threshold passes trivially
    assert!(CollisionReport::new(40, 41, 1000, 0).unwrap().passed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lemma_ordering_holds(seed in any::<u64>(), copy in -50i64..50, n in 2u32..120) {
        let r = CouplingRealization::new(seed, copy);
        let o = simulate_round_traced(&r, n).unwrap();
        let t = o.trace.as_ref().unwrap();
        prop_assert!(o.y <= o.s && o.s <= o.z && o.z <= o.y + 1);
        prop_assert_eq!(t.s.len(), n as usize + 1);
        let next = simulate_round_traced(&r, n + 1).unwrap();
        let (_, bad) = sweep_violations(&[o, next]).unwrap();
        prop_assert!(bad.is_empty());
    }

    #[test]
    fn deterministic_per_seed(seed in any::<u64>(), n in 2u32..60) {
        let r = CouplingRealization::new(seed, 0);
        prop_assert_eq!(simulate_round_traced(&r, n).unwrap(), simulate_round_traced(&r, n).unwrap());
    }
}
