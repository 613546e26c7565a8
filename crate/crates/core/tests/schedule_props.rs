use proptest::prelude::*;
use treecoal::schedule::{
    check_split_atoms, from_profile, merge_measure, profile_measure, tau, tau_window, DegreeMix,
};
use treecoal::{DegreeSchedule, Error, Row};

/// A random valid schedule with small generations.
fn schedule() -> impl Strategy<Value = DegreeSchedule> {
    prop::collection::vec(1usize..8, 1..10).prop_flat_map(|sizes| {
        let h = sizes.len();
        let gens: Vec<usize> = std::iter::once(1).chain(sizes).collect();
        let rows: Vec<_> = (0..h)
            .map(|i| prop::collection::vec(0..gens[i], gens[i + 1]).prop_map({
                let width = gens[i];
                move |fathers| {
                    let mut deg = vec![0u64; width];
                    for f in fathers {
                        deg[f] += 1;
                    }
                    deg.sort_unstable_by(|a, b| b.cmp(a));
                    Row::from_degrees(&deg)
                }
            }))
            .collect();
        rows.prop_map(move |rows| DegreeSchedule::new(h, rows))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_give_valid_schedules(
        n in 1usize..300,
        scale in 1.0f64..500.0,
        a in 0.1f64..2.0,
        b in 0.1f64..2.0,
        fillers in any::<bool>(),
    ) {
        let profile = |t: f64| a + (b - a) * t;
        if fillers {
            let s = from_profile(profile, n, scale, &DegreeMix::default()).unwrap();
            prop_assert!(s.validate().is_valid(), "{:?}", s.validate());
            prop_assert_eq!(s.height(), n);
        } else {
            // a strict mix either succeeds with a valid schedule or says why not
            match from_profile(profile, n, scale, &DegreeMix::zero_four()) {
                Ok(s) => prop_assert!(s.validate().is_valid(), "{:?}", s.validate()),
                Err(e) => prop_assert!(matches!(e, Error::ProfileTooSmall { .. }), "{e:?}"),
            }
        }
    }

    #[test]
    fn profile_measure_has_unit_mass(s in schedule()) {
        let m = profile_measure(&s).unwrap();
        prop_assert!((m.cdf(f64::INFINITY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_is_monotone_and_windows_add(s in schedule(), k in 1u64..20) {
        let h = s.height();
        for i in 0..h {
            prop_assert!(tau(&s, i, k) <= tau(&s, i, k + 1));
        }
        if h >= 2 {
            let mid = h / 2;
            let whole = tau_window(&s, 0, h - 1, k);
            let split = tau_window(&s, 0, mid - 1, k) + tau_window(&s, mid, h - 1, k);
            prop_assert!(whole == split || (whole - split).abs() < 1e-9);
        }
    }

    #[test]
    fn merge_measure_splits_into_small_part_and_cloud(s in schedule(), thr in 0.0f64..1.0) {
        let (full, cloud_full) = merge_measure(&s, 1.0);
        prop_assert!(cloud_full.points.is_empty());
        let (small, cloud) = merge_measure(&s, thr);
        let cloud_mass: f64 = cloud.points.iter().map(|p| p.weight).sum();
        prop_assert!((full.total_mass - small.total_mass - cloud_mass).abs() < 1e-9);
        prop_assert!(small.total_mass <= full.total_mass + 1e-12);
    }

    #[test]
    fn split_atom_gap_grows_with_eps(s in schedule(), e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(check_split_atoms(&s, lo).min_gap <= check_split_atoms(&s, hi).min_gap);
    }

    #[test]
    fn schedule_json_round_trips(s in schedule()) {
        let mut buf = Vec::new();
        s.to_json_writer(&mut buf).unwrap();
        prop_assert_eq!(DegreeSchedule::from_json_reader(buf.as_slice()).unwrap(), s);
    }
}
