//! Orthogonal packing decision: do these modules fit in this container?
//!
//! Depth-first branch and bound over the pair states of a
//! [`PackingClassState`], with propagation after every decision and a full
//! condition check on complete classes.

use std::time::{Duration, Instant};

use log::{debug, trace};
use serde::{Deserialize, Serialize};

use crate::bounds::dff_refutes;
use crate::error::{Error, Result};
use crate::geometry::{validate_layout, Axis, Container, Layout, ModuleSpec, Placement, Violation};
use crate::packing_class::{EdgeFix, EdgeState, PackingClassState};

/// Optional caps on a single search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl SearchLimits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn nodes(max_nodes: u64) -> Self {
        Self {
            max_nodes: Some(max_nodes),
            max_time: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub conflicts: u64,
    pub propagated: u64,
    pub max_depth: u32,
    /// Wall-clock time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum OppVerdict {
    Feasible {
        layout: Layout,
        packing_class: PackingClassState,
    },
    Infeasible,
    /// The search budget ran out before the question was settled.
    Unknown,
}

impl OppVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OppVerdict::Feasible { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            OppVerdict::Feasible { .. } => "feasible",
            OppVerdict::Infeasible => "infeasible",
            OppVerdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OppResult {
    pub verdict: OppVerdict,
    pub stats: SearchStats,
}

impl OppResult {
    pub fn layout(&self) -> Option<&Layout> {
        match &self.verdict {
            OppVerdict::Feasible { layout, .. } => Some(layout),
            _ => None,
        }
    }
}

fn check_modules(modules: &[ModuleSpec]) -> Result<()> {
    let probe = Layout {
        container: Container::new(0, 0),
        modules: modules.to_vec(),
        placements: Vec::new(),
    };
    let violations: Vec<Violation> = validate_layout(&probe);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidLayout(violations))
    }
}

/// Cheap refutations: a module wider or taller than the container, more
/// total area than the container has, or a dual feasible function bound.
fn fails_precheck(modules: &[ModuleSpec], container: Container) -> bool {
    modules
        .iter()
        .any(|m| m.width > container.width || m.height > container.height)
        || modules.iter().map(ModuleSpec::area).sum::<u64>() > container.area()
        || dff_refutes(modules, container)
}

/// Decides whether `modules` can be packed into `container` without
/// rotation or overlap.
pub fn solve_opp(modules: &[ModuleSpec], container: Container, limits: &SearchLimits) -> Result<OppResult> {
    check_modules(modules)?;
    let start = Instant::now();
    let mut stats = SearchStats::default();

    if fails_precheck(modules, container) {
        stats.nodes = 1;
        stats.conflicts = 1;
        stats.elapsed = start.elapsed();
        return Ok(OppResult {
            verdict: OppVerdict::Infeasible,
            stats,
        });
    }

    let mut root = PackingClassState::new(modules, container)?;
    let verdict = match root.propagate_initial() {
        Err(_) => {
            stats.nodes = 1;
            stats.conflicts = 1;
            OppVerdict::Infeasible
        }
        Ok(forced) => {
            stats.propagated = forced.len() as u64;
            let mut search = Search {
                twins: identical_pairs(modules),
                order: branching_order(&root),
                limits,
                start,
                stats: &mut stats,
            };
            match search.descend(root, 0) {
                Step::Found(class) => {
                    let layout = class.extract_layout(modules, container)?;
                    OppVerdict::Feasible {
                        layout,
                        packing_class: class,
                    }
                }
                Step::Exhausted => OppVerdict::Infeasible,
                Step::Aborted => OppVerdict::Unknown,
            }
        }
    };
    stats.elapsed = start.elapsed();
    debug!(
        "opp {}x{} with {} modules: {} after {} nodes",
        container.width,
        container.height,
        modules.len(),
        verdict.label(),
        stats.nodes
    );
    Ok(OppResult { verdict, stats })
}

enum Step {
    Found(PackingClassState),
    Exhausted,
    Aborted,
}

struct Search<'a> {
    twins: Vec<(usize, usize)>,
    order: Vec<(Axis, usize, usize)>,
    limits: &'a SearchLimits,
    start: Instant,
    stats: &'a mut SearchStats,
}

impl Search<'_> {
    fn out_of_budget(&self) -> bool {
        if let Some(max) = self.limits.max_nodes {
            if self.stats.nodes > max {
                return true;
            }
        }
        if let Some(max) = self.limits.max_time {
            // Checking the clock on every node is wasteful.
            if self.stats.nodes.is_multiple_of(256) && self.start.elapsed() > max {
                return true;
            }
        }
        false
    }

    fn descend(&mut self, state: PackingClassState, depth: u32) -> Step {
        self.stats.nodes += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if self.out_of_budget() {
            return Step::Aborted;
        }

        let next = self
            .order
            .iter()
            .find(|&&(a, u, v)| state.state(a, u, v) == EdgeState::Free);
        let Some(&(axis, u, v)) = next else {
            let passes = state.check_conditions().map(|r| r.passes()).unwrap_or(false);
            return if passes {
                Step::Found(state)
            } else {
                self.stats.conflicts += 1;
                Step::Exhausted
            };
        };

        for value in value_order(&state, axis, u, v) {
            let mut child = state.clone();
            let fix = EdgeFix::new(axis, u, v, value);
            trace!("depth {depth}: fix {axis} ({u}, {v}) {value:?}");
            match child.propagate(fix) {
                Err(conflict) => {
                    trace!("conflict {:?}", conflict.rule);
                    self.stats.conflicts += 1;
                    continue;
                }
                Ok(forced) => self.stats.propagated += forced.len() as u64,
            }
            // An axis that just became fully decided can be checked on its own.
            let settled_badly = Axis::BOTH.iter().any(|&a| {
                state.free_count_on(a) > 0 && child.free_count_on(a) == 0 && !child.axis_is_consistent(a)
            });
            if settled_badly
                || self
                    .twins
                    .iter()
                    .any(|&(i, j)| swap_is_smaller(&child, &self.order, i, j))
            {
                self.stats.conflicts += 1;
                continue;
            }
            match self.descend(child, depth + 1) {
                Step::Exhausted => {}
                other => return other,
            }
        }
        Step::Exhausted
    }
}

/// Pairs of modules with equal dimensions. Swapping two of them maps
/// packing classes to packing classes.
fn identical_pairs(modules: &[ModuleSpec]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..modules.len() {
        for j in i + 1..modules.len() {
            if (modules[i].width, modules[i].height) == (modules[j].width, modules[j].height) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Lex-leader test for the swap of twins `i` and `j`. Pair states are read
/// in branching order; the state must not be lexicographically larger than
/// its image under the swap. Every orbit keeps its smallest member, so only
/// redundant classes are cut. True when the decided prefix already shows
/// the image to be smaller.
fn swap_is_smaller(state: &PackingClassState, order: &[(Axis, usize, usize)], i: usize, j: usize) -> bool {
    let swap = |x: usize| {
        if x == i {
            j
        } else if x == j {
            i
        } else {
            x
        }
    };
    let rank = |s: EdgeState| match s {
        EdgeState::Out => Some(0),
        EdgeState::In => Some(1),
        EdgeState::Free => None,
    };
    for &(axis, u, v) in order {
        let (su, sv) = (swap(u), swap(v));
        if (su.min(sv), su.max(sv)) == (u, v) {
            continue;
        }
        match (rank(state.state(axis, u, v)), rank(state.state(axis, su, sv))) {
            (Some(a), Some(b)) if a == b => {}
            (Some(a), Some(b)) => return a > b,
            _ => return false,
        }
    }
    false
}

/// Static branching order over all pairs. The x axis is settled completely
/// before the y axis, so the per-axis checks apply as early as possible.
/// Within an axis, pairs of large modules come first, measured by the sum
/// of both extents of both modules; ties go to the lexicographically
/// smallest pair.
fn branching_order(state: &PackingClassState) -> Vec<(Axis, usize, usize)> {
    let size = |v: usize| state.extent(Axis::X, v) + state.extent(Axis::Y, v);
    let mut order = Vec::new();
    for axis in Axis::BOTH {
        let mut pairs: Vec<(usize, usize)> = (0..state.len())
            .flat_map(|u| (u + 1..state.len()).map(move |v| (u, v)))
            .collect();
        pairs.sort_by_key(|&(u, v)| (std::cmp::Reverse(size(u) + size(v)), u, v));
        order.extend(pairs.into_iter().map(|(u, v)| (axis, u, v)));
    }
    order
}

/// `In` first when the branching axis has at least as much relative slack
/// left for the pair as the other axis, otherwise `Out` first.
fn value_order(state: &PackingClassState, axis: Axis, u: usize, v: usize) -> [EdgeState; 2] {
    let slack = |a: Axis| {
        let cap = i64::from(state.capacity(a));
        let used = i64::from(state.extent(a, u)) + i64::from(state.extent(a, v));
        (cap - used, cap)
    };
    let (s_here, c_here) = slack(axis);
    let (s_other, c_other) = slack(axis.other());
    if s_here * c_other >= s_other * c_here {
        [EdgeState::In, EdgeState::Out]
    } else {
        [EdgeState::Out, EdgeState::In]
    }
}

/// Largest search space (product of per-module position counts) the
/// brute-force oracle accepts.
pub const BRUTE_FORCE_CAP: u128 = 1_000_000_000_000;

/// Exhaustive placement enumeration over every grid position of every
/// module, pruned only by pairwise overlap. Meant as a ground truth for
/// small instances.
pub fn brute_force_opp(modules: &[ModuleSpec], container: Container) -> Result<Option<Layout>> {
    check_modules(modules)?;
    let mut space: u128 = 1;
    for m in modules {
        if m.width > container.width || m.height > container.height {
            return Ok(None);
        }
        space = space.saturating_mul(
            u128::from(container.width - m.width + 1) * u128::from(container.height - m.height + 1),
        );
    }
    if space > BRUTE_FORCE_CAP {
        return Err(Error::SearchSpaceTooLarge(space));
    }
    if modules.iter().map(ModuleSpec::area).sum::<u64>() > container.area() {
        return Ok(None);
    }

    // Larger modules first so overlaps are found early.
    let mut order: Vec<usize> = (0..modules.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(modules[i].area()));
    let mut grid = vec![vec![false; container.width as usize]; container.height as usize];
    let mut positions = vec![(0u32, 0u32); modules.len()];
    if !place_from(0, &order, modules, container, &mut grid, &mut positions) {
        return Ok(None);
    }
    Ok(Some(Layout {
        container,
        modules: modules.to_vec(),
        placements: modules
            .iter()
            .zip(&positions)
            .map(|(m, &(x, y))| Placement::new(m.id.clone(), x, y))
            .collect(),
    }))
}

fn place_from(
    k: usize,
    order: &[usize],
    modules: &[ModuleSpec],
    container: Container,
    grid: &mut [Vec<bool>],
    positions: &mut [(u32, u32)],
) -> bool {
    let Some(&i) = order.get(k) else {
        return true;
    };
    let m = &modules[i];
    for y in 0..=container.height - m.height {
        for x in 0..=container.width - m.width {
            let free = (y..y + m.height).all(|r| (x..x + m.width).all(|c| !grid[r as usize][c as usize]));
            if !free {
                continue;
            }
            mark(grid, x, y, m, true);
            positions[i] = (x, y);
            if place_from(k + 1, order, modules, container, grid, positions) {
                return true;
            }
            mark(grid, x, y, m, false);
        }
    }
    false
}

fn mark(grid: &mut [Vec<bool>], x: u32, y: u32, m: &ModuleSpec, value: bool) {
    for r in y..y + m.height {
        for c in x..x + m.width {
            grid[r as usize][c as usize] = value;
        }
    }
}
