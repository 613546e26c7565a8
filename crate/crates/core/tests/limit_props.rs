use proptest::prelude::*;
use treecoal::limit::{limit_distance_matrix, replay, Atom, BirthLaw, CoalescentNoise, LimitParams, MergeIntensity};
use treecoal::rng::stream;

fn params() -> impl Strategy<Value = LimitParams> {
    let rho = (0.0f64..5.0, 0.0f64..5.0).prop_map(|(a, b)| MergeIntensity { grid: vec![(0.0, 0.5, a), (0.5, 1.0, b)] });
    let atoms = prop::collection::vec((0.01f64..0.99, 0.01f64..0.5, 0.01f64..0.5), 0..3).prop_map(|v| {
        let mut v: Vec<Atom> = v.into_iter().map(|(t, a, b)| Atom { t, weights: vec![a.max(b), a.min(b)] }).collect();
        v.sort_by(|x, y| y.t.total_cmp(&x.t));
        v.dedup_by(|x, y| (x.t - y.t).abs() < 1e-9);
        v
    });
    let nu = (0.05f64..0.95).prop_map(|m| BirthLaw { cdf_grid: vec![(0.0, 0.0), (m, 0.5), (1.0, 1.0)] });
    (nu, rho, atoms).prop_map(|(nu, rho, theta)| LimitParams { nu, rho, theta })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_keeps_merge_times(p in params(), seed in any::<u64>(), k in 1usize..6) {
        let noise = CoalescentNoise::draw(&p, 10, &mut stream(seed, 0)).unwrap();
        let full = replay(&p, &noise);
        let part = replay(&p, &noise.restrict(k));
        for q in 0..k {
            for r in 0..k {
                prop_assert_eq!(full.c[q][r], part.c[q][r]);
            }
        }
    }

    #[test]
    fn traces_are_ultrametric_and_bounded(p in params(), seed in any::<u64>(), k in 1usize..12) {
        let noise = CoalescentNoise::draw(&p, k, &mut stream(seed, 0)).unwrap();
        let trace = replay(&p, &noise);
        prop_assert!(trace.satisfies_three_point(1e-12));
        prop_assert!(trace.events.windows(2).all(|w| w[0].time > w[1].time));
        let d = limit_distance_matrix(&trace);
        for q in 0..k {
            for r in 0..k {
                let (hq, hr) = (trace.births[q], trace.births[r]);
                prop_assert!(d[q][r] <= hq + hr + 1e-12);
                prop_assert!(d[q][r] >= (hq - hr).abs() - 1e-12);
            }
        }
    }

    #[test]
    fn params_json_round_trips(p in params()) {
        let mut buf = Vec::new();
        p.to_json_writer(&mut buf).unwrap();
        prop_assert_eq!(LimitParams::from_json_reader(buf.as_slice()).unwrap(), p);
    }
}
