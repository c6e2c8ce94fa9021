use proptest::prelude::*;

use rcp_core::graphical::{build_sample_with, BuildOptions};
use rcp_core::paths::{config_at, detect_spatial_crossing, detect_temporal_crossing};
use rcp_core::renewal::{generate_track, hazard_coupled_tracks};
use rcp_core::renorm::tunnel_schedule;
use rcp_core::seed::{rng_for, tag};
use rcp_core::stats::{wilson, Z95};
use rcp_core::{build_sample, dump, Configuration, InterarrivalLaw, SeedSpec, SpaceTimeBox};

fn laws() -> impl Strategy<Value = InterarrivalLaw> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|r| InterarrivalLaw::exponential(r).unwrap()),
        (0.2f64..0.95, 0.1f64..2.0).prop_map(|(a, s)| InterarrivalLaw::pareto_tail(a, s).unwrap()),
        (0.5f64..4.0).prop_map(|v| InterarrivalLaw::deterministic(v).unwrap()),
        (3.0f64..40.0).prop_map(|t0| InterarrivalLaw::example_log_sv(t0).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn larger_initial_sets_stay_larger(seed in any::<u64>(), law in laws(), lambda in 0.0f64..3.0, mask in any::<u32>()) {
        let b = SpaceTimeBox::centered(1, 6, 0.0, 8.0).unwrap();
        let s = build_sample(&b, lambda, &law, SeedSpec::new(seed)).unwrap();
        let n = b.num_sites();
        let small: Vec<Vec<i64>> = (0..n).filter(|i| mask >> (i % 32) & 3 == 3).map(|i| b.site_coords(i)).collect();
        let large: Vec<Vec<i64>> = (0..n).filter(|i| mask >> (i % 32) & 1 == 1).map(|i| b.site_coords(i)).collect();
        let a = Configuration::from_sites(&b, &small).unwrap();
        let c = Configuration::from_sites(&b, &large).unwrap();
        prop_assert!(a.is_subset(&c));
        for t in [0.5, 2.0, 5.0, 8.0] {
            prop_assert!(config_at(&s, &a, 0.0, t).unwrap().is_subset(&config_at(&s, &c, 0.0, t).unwrap()));
        }
    }

    #[test]
    fn crossings_imply_half_crossings(seed in any::<u64>(), law in laws(), lambda in 0.0f64..4.0, d in 1usize..3) {
        let b = SpaceTimeBox::new(vec![0; d], vec![4; d], 0.0, 3.0).unwrap();
        let s = build_sample(&b, lambda, &law, SeedSpec::new(seed)).unwrap();
        if detect_temporal_crossing(&s, &b, false).unwrap() {
            prop_assert!(detect_temporal_crossing(&s, &b, true).unwrap());
        }
        for j in 0..d {
            if detect_spatial_crossing(&s, &b, j, false).unwrap() {
                prop_assert!(detect_spatial_crossing(&s, &b, j, true).unwrap());
            }
        }
    }

    #[test]
    fn infection_grows_with_lambda_under_thinning(seed in any::<u64>(), law in laws(), l1 in 0.0f64..2.0, dl in 0.0f64..2.0) {
        let b = SpaceTimeBox::centered(1, 8, 0.0, 10.0).unwrap();
        let opts = BuildOptions { lambda_ceiling: Some(4.0), ..BuildOptions::default() };
        let lo = build_sample_with(&b, l1, &law, SeedSpec::new(seed), &opts).unwrap();
        let hi = build_sample_with(&b, l1 + dl, &law, SeedSpec::new(seed), &opts).unwrap();
        let init = Configuration::from_sites(&b, &[vec![0]]).unwrap();
        for t in [1.0, 4.0, 10.0] {
            prop_assert!(config_at(&lo, &init, 0.0, t).unwrap().is_subset(&config_at(&hi, &init, 0.0, t).unwrap()));
        }
    }

    #[test]
    fn age_plus_overshoot_is_the_covering_gap(seed in any::<u64>(), law in laws(), t in 0.0f64..50.0) {
        let tr = generate_track(&law, 0.0, 60.0, &mut rng_for(seed, tag::CURE, &[0])).unwrap();
        let ao = tr.age_overshoot_at(t).unwrap();
        let last = tr.last_at_or_before(t);
        let next = tr.first_after(t).unwrap();
        prop_assert!((ao.age + ao.overshoot.unwrap() - (next - last)).abs() <= 1e-9 * next.max(1.0));
        prop_assert!(ao.age >= 0.0 && ao.overshoot.unwrap() > 0.0);
    }

    #[test]
    fn enlarging_the_box_keeps_marks(seed in any::<u64>(), law in laws(), lambda in 0.1f64..2.0) {
        let small = SpaceTimeBox::centered(2, 2, 0.0, 4.0).unwrap();
        let big = SpaceTimeBox::centered(2, 4, 0.0, 4.0).unwrap();
        let a = build_sample(&small, lambda, &law, SeedSpec::new(seed)).unwrap();
        let b = build_sample(&big, lambda, &law, SeedSpec::new(seed)).unwrap();
        for i in 0..small.num_sites() {
            let x = small.site_coords(i);
            let j = big.site_index(&x).unwrap();
            prop_assert_eq!(&a.cures[i].marks, &b.cures[j].marks);
            for dir in 0..4 {
                if a.neighbour(i, dir).is_some() {
                    prop_assert_eq!(a.transmissions(i, dir), b.transmissions(j, dir));
                }
            }
        }
    }

    #[test]
    fn coupled_tracks_are_nested(seed in any::<u64>(), r1 in 0.2f64..2.0, dr in 0.0f64..2.0) {
        let mu = InterarrivalLaw::exponential(r1).unwrap();
        let nu = InterarrivalLaw::exponential(r1 + dr).unwrap();
        let (a, b) = hazard_coupled_tracks(&mu, &nu, 0.0, 30.0, &mut rng_for(seed, tag::COUPLING, &[])).unwrap();
        prop_assert!(a.marks.iter().all(|m| b.marks.contains(m)));
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(k in 0u64..500, extra in 0u64..500) {
        let n = k + extra + 1;
        let ci = wilson(k.min(n), n, Z95);
        prop_assert!(0.0 <= ci.lo && ci.lo <= ci.estimate && ci.estimate <= ci.hi && ci.hi <= 1.0);
    }

    #[test]
    fn tunnel_scales_increase(ln_r0 in 1.5f64..300.0, a in 0.05f64..0.95) {
        let s = tunnel_schedule(ln_r0, a, 50).unwrap();
        prop_assert!(s.ln_r.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(s.m.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn dumps_round_trip(seed in any::<u64>(), law in laws(), lambda in 0.0f64..2.0) {
        let b = SpaceTimeBox::new(vec![-2, 0], vec![1, 2], 0.5, 3.0).unwrap();
        let s = build_sample(&b, lambda, &law, SeedSpec { cure: seed, transmission: seed ^ 1 }).unwrap();
        let mut buf = Vec::new();
        dump::write_sample(&s, &mut buf).unwrap();
        prop_assert_eq!(dump::read_sample(buf.as_slice()).unwrap(), s);
    }
}

#[test]
fn confidence_intervals_shrink_like_root_n() {
    let small = wilson(300, 1000, Z95).half_width();
    let large = wilson(1200, 4000, Z95).half_width();
    assert!((small / large - 2.0).abs() < 0.05);
}
