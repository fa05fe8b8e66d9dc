use packclass_core::graphs::{
    find_induced_c4, find_transitive_orientation, intersection_graph, is_interval_graph,
    max_weight_stable_set, SimpleGraph,
};
use proptest::prelude::*;

fn graph_from_bits(n: usize, bits: &[bool]) -> SimpleGraph {
    let mut g = SimpleGraph::new(n);
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if bits[k] {
                g.add_edge(u, v);
            }
            k += 1;
        }
    }
    g
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = SimpleGraph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2)
            .prop_map(move |bits| graph_from_bits(n, &bits))
    })
}

fn brute_c4(g: &SimpleGraph) -> bool {
    let n = g.vertex_count();
    let e = |a, b| g.has_edge(a, b);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let q = [a, b, c, d];
                    // The three ways to split four vertices into two chords.
                    for (p, r) in [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))] {
                        let chords = [(q[p.0], q[p.1]), (q[r.0], q[r.1])];
                        let mut cycle = true;
                        for i in 0..4 {
                            for j in i + 1..4 {
                                let is_chord = chords.contains(&(q[i], q[j]));
                                if e(q[i], q[j]) == is_chord {
                                    cycle = false;
                                }
                            }
                        }
                        if cycle {
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

/// Tries every orientation of every edge.
fn brute_transitive(g: &SimpleGraph) -> bool {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let n = g.vertex_count();
    'outer: for mask in 0u32..1 << edges.len() {
        let mut arc = vec![vec![false; n]; n];
        for (k, &(u, v)) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                arc[u][v] = true;
            } else {
                arc[v][u] = true;
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if arc[a][b] && arc[b][c] && !arc[a][c] {
                        continue 'outer;
                    }
                }
            }
        }
        return true;
    }
    false
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Interval graphs are exactly the graphs with a vertex order in which
/// every edge `v_i v_k` with `i < j < k` implies the edge `v_i v_j`.
fn brute_interval(g: &SimpleGraph) -> bool {
    let n = g.vertex_count();
    permutations(n).into_iter().any(|p| {
        (0..n).all(|i| {
            (i + 1..n).all(|j| (j + 1..n).all(|k| !g.has_edge(p[i], p[k]) || g.has_edge(p[i], p[j])))
        })
    })
}

fn brute_stable(g: &SimpleGraph, w: &[u64]) -> u64 {
    let n = g.vertex_count();
    let mut best = 0;
    for mask in 0u64..1 << n {
        let stable = (0..n).all(|u| mask >> u & 1 == 0 || g.neighbors(u) & mask == 0);
        if stable {
            best = best.max((0..n).filter(|&v| mask >> v & 1 == 1).map(|v| w[v]).sum());
        }
    }
    best
}

#[test]
fn c5_has_no_transitive_orientation() {
    let c5 = SimpleGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
    assert!(!brute_transitive(&c5));
    assert!(find_transitive_orientation(&c5).is_none());
    assert!(is_interval_graph(&c5).is_none());
}

#[test]
fn c4_is_found_and_is_not_interval() {
    let c4 = SimpleGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    let [a, b, c, d] = find_induced_c4(&c4).expect("C4 present");
    assert!(c4.has_edge(a, b) && c4.has_edge(b, c) && c4.has_edge(c, d) && c4.has_edge(d, a));
    assert!(!c4.has_edge(a, c) && !c4.has_edge(b, d));
    assert!(is_interval_graph(&c4).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn induced_c4_matches_brute_force(g in arb_graph(8)) {
        let found = find_induced_c4(&g);
        prop_assert_eq!(found.is_some(), brute_c4(&g));
        if let Some([a, b, c, d]) = found {
            prop_assert!(g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(c, d) && g.has_edge(d, a));
            prop_assert!(!g.has_edge(a, c) && !g.has_edge(b, d));
        }
    }

    #[test]
    fn transitive_orientation_matches_brute_force(g in arb_graph(6)) {
        let found = find_transitive_orientation(&g);
        prop_assert_eq!(found.is_some(), brute_transitive(&g));
        if let Some(o) = found {
            prop_assert!(o.is_transitive_orientation_of(&g));
        }
    }

    #[test]
    fn interval_recognition_matches_brute_force(g in arb_graph(7)) {
        let found = is_interval_graph(&g);
        prop_assert_eq!(found.is_some(), brute_interval(&g));
        if let Some(intervals) = found {
            prop_assert_eq!(intersection_graph(&intervals), g);
        }
    }

    #[test]
    fn intervals_always_give_interval_graphs(
        ends in proptest::collection::vec((0u32..12, 1u32..6), 1..9)
    ) {
        let intervals: Vec<(u32, u32)> = ends.iter().map(|&(a, len)| (a, a + len)).collect();
        let g = intersection_graph(&intervals);
        let realized = is_interval_graph(&g).expect("interval graph recognized");
        prop_assert_eq!(intersection_graph(&realized), g);
    }

    #[test]
    fn stable_set_matches_enumeration(
        (g, w) in arb_graph(12).prop_flat_map(|g| {
            let n = g.vertex_count();
            (Just(g), proptest::collection::vec(0u64..20, n))
        })
    ) {
        let (value, set) = max_weight_stable_set(&g, &w);
        prop_assert_eq!(value, brute_stable(&g, &w));
        prop_assert_eq!(set.iter().map(|&v| w[v]).sum::<u64>(), value);
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                prop_assert!(!g.has_edge(u, v));
            }
        }
    }

    #[test]
    fn recognition_ignores_labels(
        (g, perm) in arb_graph(8).prop_flat_map(|g| {
            let n = g.vertex_count();
            (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let h = g.relabel(&perm);
        prop_assert_eq!(find_induced_c4(&g).is_some(), find_induced_c4(&h).is_some());
        prop_assert_eq!(is_interval_graph(&g).is_some(), is_interval_graph(&h).is_some());
        prop_assert_eq!(
            find_transitive_orientation(&g).is_some(),
            find_transitive_orientation(&h).is_some()
        );
        let w: Vec<u64> = (0..g.vertex_count() as u64).map(|i| i % 5 + 1).collect();
        let wp: Vec<u64> = {
            let mut wp = vec![0; w.len()];
            for (i, &p) in perm.iter().enumerate() {
                wp[p] = w[i];
            }
            wp
        };
        prop_assert_eq!(max_weight_stable_set(&g, &w).0, max_weight_stable_set(&h, &wp).0);
    }
}
