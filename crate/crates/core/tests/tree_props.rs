use std::collections::VecDeque;
use std::sync::Arc;

use proptest::prelude::*;
use treecoal::discrete::trace_genealogy;
use treecoal::rng::stream;
use treecoal::{DegreeSchedule, Row, Tree, VertexRef};

fn schedule() -> impl Strategy<Value = DegreeSchedule> {
    prop::collection::vec(1usize..7, 1..8).prop_flat_map(|sizes| {
        let h = sizes.len();
        let gens: Vec<usize> = std::iter::once(1).chain(sizes).collect();
        let rows: Vec<_> = (0..h)
            .map(|i| {
                let width = gens[i];
                prop::collection::vec(0..width, gens[i + 1]).prop_map(move |fathers| {
                    let mut deg = vec![0u64; width];
                    for f in fathers {
                        deg[f] += 1;
                    }
                    deg.sort_unstable_by(|a, b| b.cmp(a));
                    Row::from_degrees(&deg)
                })
            })
            .collect();
        rows.prop_map(move |rows| DegreeSchedule::new(h, rows))
    })
}

/// Plain BFS over father and child edges.
fn bfs(tree: &Tree, from: VertexRef) -> Vec<usize> {
    let mut dist = vec![usize::MAX; tree.vertex_count()];
    let mut queue = VecDeque::from([from]);
    dist[tree.global_id(from)] = 0;
    while let Some(v) = queue.pop_front() {
        let d = dist[tree.global_id(v)];
        let mut next: Vec<VertexRef> = tree.children(v).collect();
        if v.height > 0 {
            next.push(tree.father(v).unwrap());
        }
        for w in next {
            let g = tree.global_id(w);
            if dist[g] == usize::MAX {
                dist[g] = d + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn child_counts_match_degrees(s in schedule(), seed in any::<u64>()) {
        let s = Arc::new(s);
        let t = Tree::sample(Arc::clone(&s), &mut stream(seed, 0)).unwrap();
        for i in 0..t.height() {
            let row = s.row(i);
            for j in 1..=t.vertices_at(i) {
                prop_assert_eq!(t.children(VertexRef::new(i, j)).count() as u64, row.degree(j as u64));
            }
        }
    }

    #[test]
    fn distance_is_a_tree_metric(s in schedule(), seed in any::<u64>()) {
        let t = Tree::sample(Arc::new(s), &mut stream(seed, 0)).unwrap();
        let mut rng = stream(seed, 1);
        for _ in 0..20 {
            let v = t.sample_uniform_vertices(4, &mut rng);
            let d = |a: usize, b: usize| t.distance(v[a], v[b]).unwrap();
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2));
            // four-point condition: the two largest of the three pair sums agree
            let mut sums = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
            sums.sort_unstable();
            prop_assert_eq!(sums[1], sums[2]);
            let lca = t.lca(v[0], v[1]).unwrap();
            prop_assert_eq!(d(0, 1), v[0].height + v[1].height - 2 * lca.height);
        }
    }

    #[test]
    fn distance_matches_bfs(s in schedule(), seed in any::<u64>()) {
        let t = Tree::sample(Arc::new(s), &mut stream(seed, 0)).unwrap();
        let from = t.sample_uniform_vertices(1, &mut stream(seed, 1))[0];
        let dist = bfs(&t, from);
        for g in 0..t.vertex_count() {
            prop_assert_eq!(t.distance(from, t.vertex_of(g)).unwrap(), dist[g]);
        }
    }

    #[test]
    fn sampling_is_reproducible(s in schedule(), seed in any::<u64>()) {
        let s = Arc::new(s);
        let a = Tree::sample(Arc::clone(&s), &mut stream(seed, 3)).unwrap();
        let b = Tree::sample(s, &mut stream(seed, 3)).unwrap();
        prop_assert_eq!(a.parents(), b.parents());
    }

    #[test]
    fn traces_agree_with_distances(s in schedule(), seed in any::<u64>(), k in 1usize..10) {
        let t = Tree::sample(Arc::new(s), &mut stream(seed, 0)).unwrap();
        let v = t.sample_uniform_vertices(k, &mut stream(seed, 1));
        let trace = trace_genealogy(&t, &v).unwrap();
        prop_assert!(trace.satisfies_three_point());
        for q in 0..k {
            for r in 0..k {
                prop_assert_eq!(t.distance(v[q], v[r]).unwrap(), v[q].height + v[r].height - 2 * trace.c[q][r]);
            }
        }
        let lowest = *trace.birth_heights.iter().min().unwrap();
        let active: Vec<usize> = (0..=lowest).map(|i| trace.active_lines(i)).collect();
        prop_assert!(active.windows(2).all(|w| w[0] <= w[1]));
    }
}
