//! Small-graph algorithms used by packing classes.
//!
//! Graphs have at most [`MAX_VERTICES`] vertices and store one `u64`
//! adjacency row per vertex.

/// Largest vertex count a [`SimpleGraph`] can hold.
pub const MAX_VERTICES: usize = 64;

/// Iterates the set bits of a word, lowest first.
#[derive(Debug, Clone, Copy)]
pub struct Bits(pub u64);

impl Iterator for Bits {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

#[inline]
pub(crate) fn bit(i: usize) -> u64 {
    1u64 << i
}

#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimpleGraph {
    n: usize,
    adj: Vec<u64>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        assert!(
            n <= MAX_VERTICES,
            "graph with {n} vertices exceeds {MAX_VERTICES}"
        );
        Self { n, adj: vec![0; n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Builds a graph from adjacency rows; rows are symmetrised and the
    /// diagonal is cleared.
    pub fn from_rows(rows: &[u64]) -> Self {
        let mut g = Self::new(rows.len());
        let mask = low_mask(rows.len());
        for (u, &row) in rows.iter().enumerate() {
            for v in Bits(row & mask & !bit(u)) {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v, "self-loop on {u}");
        assert!(u < self.n && v < self.n);
        self.adj[u] |= bit(v);
        self.adj[v] |= bit(u);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] & bit(v) != 0
    }

    pub fn neighbors(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| Bits(self.adj[u] & !low_mask(u + 1)).map(move |v| (u, v)))
    }

    pub fn complement(&self) -> SimpleGraph {
        let all = low_mask(self.n);
        SimpleGraph {
            n: self.n,
            adj: (0..self.n).map(|v| !self.adj[v] & all & !bit(v)).collect(),
        }
    }

    /// Graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> SimpleGraph {
        let mut g = SimpleGraph::new(self.n);
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]);
        }
        g
    }
}

/// A direction for every edge of a graph: `u → v` is stored as bit `v` of
/// `succ[u]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orientation {
    succ: Vec<u64>,
}

impl Orientation {
    pub fn points(&self, u: usize, v: usize) -> bool {
        self.succ[u] & bit(v) != 0
    }

    pub fn successors(&self, v: usize) -> u64 {
        self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> u64 {
        self.succ
            .iter()
            .enumerate()
            .filter(|(_, s)| *s & bit(v) != 0)
            .fold(0, |acc, (u, _)| acc | bit(u))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, &s)| Bits(s).map(move |v| (u, v)))
    }

    /// Checks that every edge of `g` is directed exactly once, no non-edge is
    /// directed, and `u → v → w` implies `u → w`.
    pub fn is_transitive_orientation_of(&self, g: &SimpleGraph) -> bool {
        if self.succ.len() != g.vertex_count() {
            return false;
        }
        for u in 0..g.vertex_count() {
            for v in 0..g.vertex_count() {
                let fwd = self.points(u, v);
                let back = self.points(v, u);
                if g.has_edge(u, v) != (fwd || back) || (fwd && back) {
                    return false;
                }
            }
        }
        (0..g.vertex_count()).all(|u| Bits(self.succ[u]).all(|v| self.succ[v] & !self.succ[u] == 0))
    }

    /// A topological order of the vertices (sources first, ties by index).
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.succ.len();
        let mut indegree: Vec<u32> = (0..n).map(|v| self.predecessors(v).count_ones()).collect();
        let mut order = Vec::with_capacity(n);
        let mut done = 0u64;
        while order.len() < n {
            let next = (0..n)
                .find(|&v| done & bit(v) == 0 && indegree[v] == 0)
                .expect("orientation contains a cycle");
            done |= bit(next);
            order.push(next);
            for s in Bits(self.succ[next]) {
                indegree[s] -= 1;
            }
        }
        order
    }
}

/// Finds `[a, b, c, d]` with edges `ab, bc, cd, da` and non-edges `ac, bd`.
pub fn find_induced_c4(g: &SimpleGraph) -> Option<[usize; 4]> {
    let n = g.vertex_count();
    for a in 0..n {
        // c ranges over non-neighbours of a with c > a.
        let far = !g.neighbors(a) & low_mask(n) & !low_mask(a + 1);
        for c in Bits(far) {
            let common = g.neighbors(a) & g.neighbors(c);
            for b in Bits(common) {
                let rest = common & !g.neighbors(b) & !low_mask(b + 1);
                if let Some(d) = Bits(rest).next() {
                    return Some([a, b, c, d]);
                }
            }
        }
    }
    None
}

/// Transitive orientation by implication-class forcing.
///
/// Repeatedly picks an unoriented edge, orients it, and closes the choice
/// under the forcing relation (`a → b` forces `a → c` when `c` is adjacent
/// to `a` but not to `b`, and `c → b` when `c` is adjacent to `b` but not to
/// `a`), evaluated in the graph of edges not yet oriented. An edge forced
/// both ways inside one class means no transitive orientation exists.
pub fn find_transitive_orientation(g: &SimpleGraph) -> Option<Orientation> {
    let n = g.vertex_count();
    let mut remaining: Vec<u64> = (0..n).map(|v| g.neighbors(v)).collect();
    let mut succ = vec![0u64; n];

    while let Some((u0, v0)) = (0..n).find_map(|u| Bits(remaining[u]).next().map(|v| (u, v))) {
        let mut class = vec![0u64; n];
        class[u0] |= bit(v0);
        let mut queue = vec![(u0, v0)];
        while let Some((a, b)) = queue.pop() {
            let closed_b = remaining[b] | bit(b);
            let closed_a = remaining[a] | bit(a);
            let forced_from_a = Bits(remaining[a] & !closed_b).map(|c| (a, c));
            let forced_into_b = Bits(remaining[b] & !closed_a).map(|c| (c, b));
            for (x, y) in forced_from_a.chain(forced_into_b) {
                if class[y] & bit(x) != 0 {
                    return None;
                }
                if class[x] & bit(y) == 0 {
                    class[x] |= bit(y);
                    queue.push((x, y));
                }
            }
        }
        for (x, row) in class.iter().enumerate() {
            for y in Bits(*row) {
                succ[x] |= bit(y);
                remaining[x] &= !bit(y);
                remaining[y] &= !bit(x);
            }
        }
    }

    let orientation = Orientation { succ };
    debug_assert!(orientation.is_transitive_orientation_of(g));
    Some(orientation)
}

/// Half-open intervals whose intersection graph equals `g`, if `g` is an
/// interval graph.
pub fn is_interval_graph(g: &SimpleGraph) -> Option<Vec<(u32, u32)>> {
    if find_induced_c4(g).is_some() {
        return None;
    }
    let order = find_transitive_orientation(&g.complement())?;
    Some(interval_realization(&order, g.vertex_count()))
}

/// Realizes the interval order `u → v` ("u lies entirely before v").
///
/// The left end of `v` is the number of its predecessors; the right end is
/// the smallest left end among its successors. Predecessor sets of an
/// interval order are nested, which makes overlapping pairs exactly the
/// incomparable ones.
fn interval_realization(order: &Orientation, n: usize) -> Vec<(u32, u32)> {
    let left: Vec<u32> = (0..n).map(|v| order.predecessors(v).count_ones()).collect();
    (0..n)
        .map(|v| {
            let right = Bits(order.successors(v))
                .map(|s| left[s])
                .min()
                .unwrap_or(n as u32 + 1);
            (left[v], right)
        })
        .collect()
}

/// Intersection graph of half-open intervals.
pub fn intersection_graph(intervals: &[(u32, u32)]) -> SimpleGraph {
    let mut g = SimpleGraph::new(intervals.len());
    for (i, a) in intervals.iter().enumerate() {
        for (j, b) in intervals.iter().enumerate().skip(i + 1) {
            if a.0.max(b.0) < a.1.min(b.1) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Maximum-weight independent set by branch and bound. Returns the weight
/// and the chosen vertices in increasing order.
pub fn max_weight_stable_set(g: &SimpleGraph, weights: &[u64]) -> (u64, Vec<usize>) {
    assert_eq!(weights.len(), g.vertex_count());
    let (value, set) = max_weight_stable_within(g, weights, low_mask(g.vertex_count()));
    (value, Bits(set).collect())
}

/// Maximum-weight independent set restricted to the vertices in `candidates`,
/// returned as a bit set.
pub fn max_weight_stable_within(g: &SimpleGraph, weights: &[u64], candidates: u64) -> (u64, u64) {
    let mut best = (0, 0);
    let compatible = |v: usize| !g.neighbors(v);
    weighted_branch(&compatible, weights, candidates, 0, 0, &mut best);
    best
}

/// Maximum-weight clique among `candidates` in the graph given by adjacency
/// rows, returned as a bit set.
pub fn max_weight_clique_within(rows: &[u64], weights: &[u64], candidates: u64) -> (u64, u64) {
    let mut best = (0, 0);
    let compatible = |v: usize| rows[v];
    weighted_branch(&compatible, weights, candidates, 0, 0, &mut best);
    best
}

/// Picks a maximum-weight set of pairwise compatible vertices.
fn weighted_branch<F: Fn(usize) -> u64>(
    compatible: &F,
    weights: &[u64],
    candidates: u64,
    chosen: u64,
    value: u64,
    best: &mut (u64, u64),
) {
    if value > best.0 {
        *best = (value, chosen);
    }
    if candidates == 0 {
        return;
    }
    let bound: u64 = Bits(candidates).map(|v| weights[v]).sum();
    if value + bound <= best.0 {
        return;
    }
    // Branch on the heaviest candidate, ties to the lowest index.
    let v = Bits(candidates)
        .max_by_key(|&v| (weights[v], std::cmp::Reverse(v)))
        .expect("nonempty");
    weighted_branch(
        compatible,
        weights,
        candidates & compatible(v) & !bit(v),
        chosen | bit(v),
        value + weights[v],
        best,
    );
    weighted_branch(compatible, weights, candidates & !bit(v), chosen, value, best);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> SimpleGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        SimpleGraph::from_edges(n, &edges)
    }

    fn complete(n: usize) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    #[test]
    fn c4_detection() {
        let w = find_induced_c4(&cycle(4)).unwrap();
        let g = cycle(4);
        assert!(g.has_edge(w[0], w[1]) && g.has_edge(w[1], w[2]));
        assert!(g.has_edge(w[2], w[3]) && g.has_edge(w[3], w[0]));
        assert!(!g.has_edge(w[0], w[2]) && !g.has_edge(w[1], w[3]));
        assert_eq!(find_induced_c4(&complete(4)), None);
        assert_eq!(find_induced_c4(&cycle(5)), None);
    }

    #[test]
    fn path_is_comparability() {
        let p3 = SimpleGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let o = find_transitive_orientation(&p3).unwrap();
        assert!(o.is_transitive_orientation_of(&p3));
        // Either both arcs point into 1 or both point out of it.
        assert_eq!(o.points(0, 1), o.points(2, 1));
    }

    #[test]
    fn five_cycle_is_not_comparability() {
        assert!(find_transitive_orientation(&cycle(5)).is_none());
    }

    #[test]
    fn interval_examples() {
        let p3 = SimpleGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let iv = is_interval_graph(&p3).unwrap();
        assert_eq!(intersection_graph(&iv), p3);
        assert!(is_interval_graph(&cycle(4)).is_none());
        assert!(is_interval_graph(&SimpleGraph::new(0)).is_some());
    }

    #[test]
    fn stable_set_examples() {
        let (v, set) = max_weight_stable_set(&SimpleGraph::new(3), &[3, 4, 5]);
        assert_eq!((v, set), (12, vec![0, 1, 2]));
        let (v, set) = max_weight_stable_set(&complete(3), &[3, 4, 5]);
        assert_eq!((v, set), (5, vec![2]));
    }

    #[test]
    fn edges_listed_once() {
        let g = cycle(4);
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            vec![(0, 1), (0, 3), (1, 2), (2, 3)]
        );
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.complement().edge_count(), 2);
    }
}
