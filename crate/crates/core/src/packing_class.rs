//! Packing classes: per-axis component graphs over the modules, partially
//! decided during search.
//!
//! For each axis a pair of modules is `In` when their projections onto that
//! axis must overlap, `Out` when they must not, and `Free` while undecided.
//! A complete assignment is a packing class when, for both axes,
//!
//! * the `In` graph is an interval graph,
//! * every stable set of the `In` graph fits the container extent, and
//! * no pair is `In` on both axes.
//!
//! Exactly the complete assignments meeting these three conditions come
//! from feasible packings; [`PackingClassState::extract_layout`] builds one.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, Container, Layout, ModuleSpec, Placement};
use crate::graphs::{
    bit, find_transitive_orientation, is_interval_graph, low_mask, max_weight_clique_within,
    max_weight_stable_set, Bits, SimpleGraph, MAX_VERTICES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeState {
    In,
    Out,
    Free,
}

impl EdgeState {
    fn symbol(self) -> char {
        match self {
            EdgeState::In => '1',
            EdgeState::Out => '0',
            EdgeState::Free => '?',
        }
    }

    fn opposite(self) -> EdgeState {
        match self {
            EdgeState::In => EdgeState::Out,
            EdgeState::Out => EdgeState::In,
            EdgeState::Free => EdgeState::Free,
        }
    }
}

/// Decision of one pair on one axis. `state` is never `Free` and `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeFix {
    pub axis: Axis,
    pub u: usize,
    pub v: usize,
    pub state: EdgeState,
}

impl EdgeFix {
    pub fn new(axis: Axis, u: usize, v: usize, state: EdgeState) -> Self {
        assert!(state != EdgeState::Free, "a fix must decide the pair");
        assert!(u != v);
        let (u, v) = (u.min(v), u.max(v));
        Self { axis, u, v, state }
    }
}

/// Which forbidden configuration a propagation step ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// A fix contradicts an earlier decision of the same pair.
    Contradiction,
    /// The pair would overlap on both axes.
    Separation,
    /// Chordless four-cycle in an `In` graph.
    ChordlessCycle,
    /// Modules pairwise `Out` on an axis whose extents exceed the container.
    OversizedStack,
    /// The `Out` pairs on an axis admit no consistent "lies before" order.
    Orientation,
}

/// Propagation reached an impossible state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub axis: Axis,
    pub u: usize,
    pub v: usize,
    pub rule: Rule,
}

/// Outcome of [`PackingClassState::check_conditions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    /// `In` graph of each axis is an interval graph.
    pub interval: [bool; 2],
    /// Every stable set of each axis fits the container extent.
    pub stable_sets_fit: [bool; 2],
    /// No pair is `In` on both axes.
    pub separated: bool,
}

impl ConditionReport {
    pub fn passes(&self) -> bool {
        self.interval.iter().all(|&b| b) && self.stable_sets_fit.iter().all(|&b| b) && self.separated
    }

    fn describe_failures(&self) -> String {
        let mut parts = Vec::new();
        for axis in Axis::BOTH {
            if !self.interval[axis.index()] {
                parts.push(format!("interval property on {axis}"));
            }
            if !self.stable_sets_fit[axis.index()] {
                parts.push(format!("stable-set capacity on {axis}"));
            }
        }
        if !self.separated {
            parts.push("pairwise separation".to_string());
        }
        parts.join(", ")
    }
}

/// Search node: for each axis, which pairs overlap (`In`), which do not
/// (`Out`), and which are undecided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingClassState {
    extents: [Vec<u32>; 2],
    capacity: [u32; 2],
    in_rows: [Vec<u64>; 2],
    out_rows: [Vec<u64>; 2],
}

impl PackingClassState {
    /// All pairs undecided.
    pub fn new(modules: &[ModuleSpec], container: Container) -> Result<Self> {
        let n = modules.len();
        if n > MAX_VERTICES {
            return Err(Error::TooManyModules(n));
        }
        Ok(Self {
            extents: [
                modules.iter().map(|m| m.width).collect(),
                modules.iter().map(|m| m.height).collect(),
            ],
            capacity: [container.width, container.height],
            in_rows: [vec![0; n], vec![0; n]],
            out_rows: [vec![0; n], vec![0; n]],
        })
    }

    /// The complete class induced by a valid layout: a pair is `In` on an
    /// axis exactly when the projections of the two modules intersect.
    /// Vertex `i` is the module of `layout.placements[i]`.
    pub fn from_layout(layout: &Layout) -> Result<Self> {
        layout.validate()?;
        let placed: Vec<_> = layout.placed().collect();
        let modules: Vec<ModuleSpec> = placed.iter().map(|(m, _)| (*m).clone()).collect();
        let mut state = Self::new(&modules, layout.container)?;
        for (u, (_, a)) in placed.iter().enumerate() {
            for (v, (_, b)) in placed.iter().enumerate().skip(u + 1) {
                let x = crate::geometry::overlap_len(a.x, a.width, b.x, b.width) > 0;
                let y = crate::geometry::overlap_len(a.y, a.height, b.y, b.height) > 0;
                for (axis, overlaps) in [(Axis::X, x), (Axis::Y, y)] {
                    let s = if overlaps { EdgeState::In } else { EdgeState::Out };
                    state.set(axis, u, v, s);
                }
            }
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.extents[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self, axis: Axis, v: usize) -> u32 {
        self.extents[axis.index()][v]
    }

    pub fn capacity(&self, axis: Axis) -> u32 {
        self.capacity[axis.index()]
    }

    pub fn state(&self, axis: Axis, u: usize, v: usize) -> EdgeState {
        let a = axis.index();
        if self.in_rows[a][u] & bit(v) != 0 {
            EdgeState::In
        } else if self.out_rows[a][u] & bit(v) != 0 {
            EdgeState::Out
        } else {
            EdgeState::Free
        }
    }

    fn set(&mut self, axis: Axis, u: usize, v: usize, s: EdgeState) {
        let a = axis.index();
        let rows = match s {
            EdgeState::In => &mut self.in_rows[a],
            EdgeState::Out => &mut self.out_rows[a],
            EdgeState::Free => unreachable!("pairs are never reset to free"),
        };
        rows[u] |= bit(v);
        rows[v] |= bit(u);
    }

    /// Undecided partners of `v` on `axis`.
    pub fn free_row(&self, axis: Axis, v: usize) -> u64 {
        let a = axis.index();
        low_mask(self.len()) & !bit(v) & !self.in_rows[a][v] & !self.out_rows[a][v]
    }

    pub fn in_row(&self, axis: Axis, v: usize) -> u64 {
        self.in_rows[axis.index()][v]
    }

    pub fn out_row(&self, axis: Axis, v: usize) -> u64 {
        self.out_rows[axis.index()][v]
    }

    pub fn free_count(&self) -> usize {
        Axis::BOTH.iter().map(|&axis| self.free_count_on(axis)).sum()
    }

    pub fn free_count_on(&self, axis: Axis) -> usize {
        (0..self.len())
            .map(|v| self.free_row(axis, v).count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    pub fn is_complete(&self) -> bool {
        self.free_count() == 0
    }

    pub fn in_graph(&self, axis: Axis) -> SimpleGraph {
        SimpleGraph::from_rows(&self.in_rows[axis.index()])
    }

    fn weights(&self, axis: Axis) -> Vec<u64> {
        self.extents[axis.index()].iter().map(|&e| u64::from(e)).collect()
    }

    /// Evaluates the three packing-class conditions on a complete state.
    pub fn check_conditions(&self) -> Result<ConditionReport> {
        if !self.is_complete() {
            return Err(Error::IncompleteClass);
        }
        let mut report = ConditionReport {
            interval: [true; 2],
            stable_sets_fit: [true; 2],
            separated: true,
        };
        for axis in Axis::BOTH {
            let a = axis.index();
            let g = self.in_graph(axis);
            report.interval[a] = is_interval_graph(&g).is_some();
            let (stack, _) = max_weight_stable_set(&g, &self.weights(axis));
            report.stable_sets_fit[a] = stack <= u64::from(self.capacity[a]);
        }
        report.separated = (0..self.len()).all(|v| self.in_rows[0][v] & self.in_rows[1][v] == 0);
        Ok(report)
    }

    /// Checks only the conditions that can be decided for `axis` alone.
    /// Requires every pair on `axis` to be decided.
    pub(crate) fn axis_is_consistent(&self, axis: Axis) -> bool {
        debug_assert_eq!(self.free_count_on(axis), 0);
        let g = self.in_graph(axis);
        if is_interval_graph(&g).is_none() {
            return false;
        }
        let (stack, _) = max_weight_stable_set(&g, &self.weights(axis));
        stack <= u64::from(self.capacity(axis))
    }

    /// Fixes forced by pairs that cannot sit side by side on some axis
    /// because their extents alone exceed the container. Call once on a
    /// fresh state.
    pub fn propagate_initial(&mut self) -> std::result::Result<Vec<EdgeFix>, Conflict> {
        let mut seeds = Vec::new();
        for axis in Axis::BOTH {
            for u in 0..self.len() {
                for v in u + 1..self.len() {
                    if self.extent(axis, u) + self.extent(axis, v) > self.capacity(axis) {
                        seeds.push(EdgeFix::new(axis, u, v, EdgeState::In));
                    }
                }
            }
        }
        self.run(seeds, true)
    }

    /// Applies `fix` and every fix it implies, to a fixpoint.
    ///
    /// Returns the implied fixes (not including `fix` itself). On conflict
    /// the state is left partially updated and should be discarded.
    pub fn propagate(&mut self, fix: EdgeFix) -> std::result::Result<Vec<EdgeFix>, Conflict> {
        self.run(vec![fix], false)
    }

    fn run(
        &mut self,
        seeds: Vec<EdgeFix>,
        report_seeds: bool,
    ) -> std::result::Result<Vec<EdgeFix>, Conflict> {
        let mut queue: VecDeque<(EdgeFix, bool)> = seeds.into_iter().map(|f| (f, report_seeds)).collect();
        let mut forced = Vec::new();
        let mut unordered = [false; 2];
        loop {
            let Some((fix, report)) = queue.pop_front() else {
                // The order check is global, so it runs once the local rules
                // have settled.
                let Some(axis) = Axis::BOTH.into_iter().find(|a| unordered[a.index()]) else {
                    break;
                };
                unordered[axis.index()] = false;
                let mut implied = Vec::new();
                self.orientation_rule(axis, &mut implied)?;
                queue.extend(implied.into_iter().map(|f| (f, true)));
                continue;
            };
            match self.state(fix.axis, fix.u, fix.v) {
                s if s == fix.state => continue,
                EdgeState::Free => {}
                _ => {
                    return Err(Conflict {
                        axis: fix.axis,
                        u: fix.u,
                        v: fix.v,
                        rule: Rule::Contradiction,
                    })
                }
            }
            self.set(fix.axis, fix.u, fix.v, fix.state);
            unordered[fix.axis.index()] = true;
            if report {
                forced.push(fix);
            }
            for implied in self.implications(fix)? {
                queue.push_back((implied, true));
            }
        }
        Ok(forced)
    }

    /// Direct consequences of a fix that has just been applied.
    fn implications(&self, fix: EdgeFix) -> std::result::Result<Vec<EdgeFix>, Conflict> {
        let mut out = Vec::new();
        let EdgeFix { axis, u, v, state } = fix;
        if state == EdgeState::In {
            if self.state(axis.other(), u, v) == EdgeState::In {
                return Err(Conflict {
                    axis,
                    u,
                    v,
                    rule: Rule::Separation,
                });
            }
            out.push(EdgeFix::new(axis.other(), u, v, EdgeState::Out));
        }
        self.chordless_cycle_rule(axis, u, v, state, &mut out)?;
        if state == EdgeState::Out {
            self.stack_rule(axis, u, v, &mut out)?;
        }
        Ok(out)
    }

    /// Pairs `Out` on an axis are ordered along it, and the order must be
    /// transitive. For `c` with `Out` partners `p` and `q`, an `In` pair
    /// `p, q` forbids `p` before `c` before `q`: both pairs point away from
    /// `c` or both towards it. These parity constraints are collected with a
    /// union-find. Inconsistency is a conflict; a `Free` pair `p, q` whose
    /// partners are already forced into a chain `p, c, q` must be `Out`.
    fn orientation_rule(&self, axis: Axis, out: &mut Vec<EdgeFix>) -> std::result::Result<(), Conflict> {
        let n = self.len();
        let outs = &self.out_rows[axis.index()];
        let ins = &self.in_rows[axis.index()];
        let mut sets = ParityForest::new(n * n);
        let var = |a: usize, b: usize| a.min(b) * n + a.max(b);
        // Parity of "points away from c" relative to "low end first".
        let away = |c: usize, p: usize| u8::from(c < p);
        for (c, &out_c) in outs.iter().enumerate() {
            for p in Bits(out_c) {
                for q in Bits(out_c & ins[p] & !low_mask(p + 1)) {
                    let parity = away(c, p) ^ away(c, q);
                    if !sets.union(var(c, p), var(c, q), parity) {
                        return Err(Conflict {
                            axis,
                            u: p,
                            v: q,
                            rule: Rule::Orientation,
                        });
                    }
                }
            }
        }
        for (c, &out_c) in outs.iter().enumerate() {
            for p in Bits(out_c) {
                for q in Bits(out_c & self.free_row(axis, p) & !low_mask(p + 1)) {
                    let (rp, sp) = sets.find(var(c, p));
                    let (rq, sq) = sets.find(var(c, q));
                    if rp == rq && sp ^ sq != away(c, p) ^ away(c, q) {
                        out.push(EdgeFix::new(axis, p, q, EdgeState::Out));
                    }
                }
            }
        }
        Ok(())
    }

    /// Forbids chordless four-cycles of `In` edges that use both `u` and `v`,
    /// either as a cycle edge (when `In`) or as a chord (when `Out`).
    ///
    /// A pattern with every edge decided is a conflict; with one undecided
    /// edge left, that edge is fixed the other way.
    fn chordless_cycle_rule(
        &self,
        axis: Axis,
        u: usize,
        v: usize,
        state: EdgeState,
        out: &mut Vec<EdgeFix>,
    ) -> std::result::Result<(), Conflict> {
        let a = axis.index();
        let maybe_in = |x: usize| self.in_rows[a][x] | self.free_row(axis, x);
        let maybe_out = |x: usize| self.out_rows[a][x] | self.free_row(axis, x);
        let mut check = |edges: [(usize, usize, EdgeState); 5]| {
            let mut free = edges
                .iter()
                .filter(|&&(p, q, _)| self.state(axis, p, q) == EdgeState::Free);
            match (free.next(), free.next()) {
                (None, _) => Err(Conflict {
                    axis,
                    u,
                    v,
                    rule: Rule::ChordlessCycle,
                }),
                (Some(&(p, q, want)), None) => {
                    out.push(EdgeFix::new(axis, p, q, want.opposite()));
                    Ok(())
                }
                _ => Ok(()),
            }
        };
        match state {
            // Cycle u, v, c, d with chords u-c and v-d.
            EdgeState::In => {
                for c in Bits(maybe_in(v) & maybe_out(u)) {
                    for d in Bits(maybe_in(u) & maybe_out(v) & maybe_in(c)) {
                        check([
                            (v, c, EdgeState::In),
                            (c, d, EdgeState::In),
                            (d, u, EdgeState::In),
                            (u, c, EdgeState::Out),
                            (v, d, EdgeState::Out),
                        ])?;
                    }
                }
            }
            // Cycle u, c, v, d with the other chord c-d.
            EdgeState::Out => {
                let common = maybe_in(u) & maybe_in(v);
                for c in Bits(common) {
                    for d in Bits(common & maybe_out(c) & !low_mask(c + 1)) {
                        check([
                            (u, c, EdgeState::In),
                            (c, v, EdgeState::In),
                            (v, d, EdgeState::In),
                            (d, u, EdgeState::In),
                            (c, d, EdgeState::Out),
                        ])?;
                    }
                }
            }
            EdgeState::Free => {}
        }
        Ok(())
    }

    /// Heaviest set of modules pairwise `Out` on `axis` that contains both
    /// `p` and `q`, treating the pair `p, q` itself as `Out`.
    fn heaviest_stack_through(&self, axis: Axis, p: usize, q: usize, weights: &[u64]) -> u64 {
        let rows = &self.out_rows[axis.index()];
        let common = rows[p] & rows[q];
        let (rest, _) = max_weight_clique_within(rows, weights, common);
        weights[p] + weights[q] + rest
    }

    /// Modules pairwise `Out` on an axis are stacked along it, so their
    /// extents must fit. A stack through the new `Out` pair that overflows is
    /// a conflict; an undecided pair that would complete an overflowing
    /// stack is fixed `In`.
    fn stack_rule(
        &self,
        axis: Axis,
        u: usize,
        v: usize,
        out: &mut Vec<EdgeFix>,
    ) -> std::result::Result<(), Conflict> {
        let cap = u64::from(self.capacity(axis));
        let weights = self.weights(axis);
        if self.heaviest_stack_through(axis, u, v, &weights) > cap {
            return Err(Conflict {
                axis,
                u,
                v,
                rule: Rule::OversizedStack,
            });
        }
        let rows = &self.out_rows[axis.index()];
        let touched = bit(u) | bit(v);
        for p in 0..self.len() {
            for q in Bits(self.free_row(axis, p) & !low_mask(p + 1)) {
                let reach = bit(p) | bit(q) | (rows[p] & rows[q]);
                if reach & touched != touched {
                    continue;
                }
                if self.heaviest_stack_through(axis, p, q, &weights) > cap {
                    out.push(EdgeFix::new(axis, p, q, EdgeState::In));
                }
            }
        }
        Ok(())
    }

    /// Concrete coordinates for a complete packing class.
    ///
    /// On each axis the complement of the `In` graph is oriented
    /// transitively ("lies before"), and every module starts where the
    /// heaviest chain of its predecessors ends.
    pub fn extract_layout(&self, modules: &[ModuleSpec], container: Container) -> Result<Layout> {
        assert_eq!(modules.len(), self.len(), "module list does not match the class");
        let report = self.check_conditions()?;
        if !report.passes() {
            return Err(Error::ConditionsViolated(report.describe_failures()));
        }
        let mut coords = [vec![0u32; self.len()], vec![0u32; self.len()]];
        for axis in Axis::BOTH {
            let before = find_transitive_orientation(&self.in_graph(axis).complement())
                .ok_or_else(|| Error::ConditionsViolated(format!("comparability on {axis}")))?;
            let coord = &mut coords[axis.index()];
            for v in before.topological_order() {
                coord[v] = Bits(before.predecessors(v))
                    .map(|p| coord[p] + self.extent(axis, p))
                    .max()
                    .unwrap_or(0);
            }
        }
        let layout = Layout {
            container,
            modules: modules.to_vec(),
            placements: modules
                .iter()
                .enumerate()
                .map(|(v, m)| Placement::new(m.id.clone(), coords[0][v], coords[1][v]))
                .collect(),
        };
        debug_assert!(crate::geometry::validate_layout(&layout).is_empty());
        Ok(layout)
    }

    /// Adjacency matrices per axis: `1` In, `0` Out, `?` undecided, `.` on
    /// the diagonal.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for axis in Axis::BOTH {
            let _ = writeln!(s, "{axis}:");
            for u in 0..self.len() {
                for v in 0..self.len() {
                    s.push(if u == v {
                        '.'
                    } else {
                        self.state(axis, u, v).symbol()
                    });
                }
                s.push('\n');
            }
        }
        s
    }
}

impl fmt::Display for PackingClassState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Union-find over boolean variables with parity constraints `x ^ y = p`.
struct ParityForest {
    parent: Vec<usize>,
    parity: Vec<u8>,
}

impl ParityForest {
    fn new(len: usize) -> Self {
        ParityForest {
            parent: (0..len).collect(),
            parity: vec![0; len],
        }
    }

    /// Root of `x` and the parity of `x` relative to it.
    fn find(&mut self, x: usize) -> (usize, u8) {
        let p = self.parent[x];
        if p == x {
            return (x, 0);
        }
        let (root, up) = self.find(p);
        self.parent[x] = root;
        self.parity[x] ^= up;
        (root, self.parity[x])
    }

    /// Adds `x ^ y = parity`; false when it contradicts earlier constraints.
    fn union(&mut self, x: usize, y: usize, parity: u8) -> bool {
        let (rx, px) = self.find(x);
        let (ry, py) = self.find(y);
        if rx == ry {
            return px ^ py == parity;
        }
        self.parent[rx] = ry;
        self.parity[rx] = px ^ py ^ parity;
        true
    }
}
