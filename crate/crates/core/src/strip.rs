//! Minimum strip width by bisection over packing decisions, and layout
//! defragmentation built on it.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::bounds::compute_bounds;
use crate::error::{Error, Result};
use crate::geometry::{free_columns, Container, Layout, MetricsReport, ModuleSpec, Placement, Rect};
use crate::opp::{solve_opp, OppVerdict, SearchLimits, SearchStats};

/// One packing decision made during bisection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub width: u32,
    pub verdict: String,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripResult {
    pub optimal_width: u32,
    /// Initial bracket before any probe.
    pub lower_bound: u32,
    pub upper_bound: u32,
    /// Packing at `optimal_width`, in a container that wide.
    pub layout: Layout,
    pub probes: Vec<Probe>,
}

/// Smallest number of columns that holds every module at `rows` rows.
pub fn min_strip_width(modules: &[ModuleSpec], rows: u32, limits: &SearchLimits) -> Result<StripResult> {
    min_strip_width_seeded(modules, rows, limits, None)
}

/// As [`min_strip_width`], starting from `incumbent` as an additional upper
/// bound witness when it is narrower than the shelf heuristics.
fn min_strip_width_seeded(
    modules: &[ModuleSpec],
    rows: u32,
    limits: &SearchLimits,
    incumbent: Option<Layout>,
) -> Result<StripResult> {
    let bounds = compute_bounds(modules, rows)?;
    let mut lower = bounds.lower;
    let mut upper = bounds.upper;
    let mut witness = bounds.upper_layout;
    if let Some(inc) = incumbent {
        if inc.container.width < upper {
            upper = inc.container.width;
            witness = inc;
        }
    }
    lower = lower.min(upper);
    let (lower_bound, upper_bound) = (lower, upper);
    debug!("strip bisection starts at [{lower}, {upper}]");

    let mut probes = Vec::new();
    while lower < upper {
        let width = lower + (upper - lower) / 2;
        let result = solve_opp(modules, Container::new(width, rows), limits)?;
        probes.push(Probe {
            width,
            verdict: result.verdict.label().to_string(),
            stats: result.stats.clone(),
        });
        match result.verdict {
            OppVerdict::Feasible { layout, .. } => {
                upper = width;
                witness = layout;
            }
            OppVerdict::Infeasible => lower = width + 1,
            OppVerdict::Unknown => {
                return Err(Error::BudgetExhausted { width, lower, upper });
            }
        }
    }
    witness.container = Container::new(upper, rows);
    info!("minimum strip width {upper} after {} probes", probes.len());
    Ok(StripResult {
        optimal_width: upper,
        lower_bound,
        upper_bound,
        layout: witness,
        probes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defragmentation {
    pub layout: Layout,
    pub before: MetricsReport,
    pub after: MetricsReport,
    pub strip: StripResult,
}

/// Moves every placed module into the fewest leftmost columns possible.
///
/// Among packings of that width, one is chosen whose largest free
/// rectangle is no smaller than before when such a packing can be found
/// within `limits`. The result keeps the original container and module
/// table; unplaced modules stay unplaced.
pub fn defragment(layout: &Layout, limits: &SearchLimits) -> Result<Defragmentation> {
    layout.validate()?;
    let placed = layout.placed_modules();
    let rows = layout.container.height;
    let before = MetricsReport::of(layout);

    // The current layout, cropped to its used width, is a valid witness.
    let current = Layout {
        container: Container::new(layout.used_width(), rows),
        modules: placed.clone(),
        placements: layout.placements.clone(),
    };
    let strip = min_strip_width_seeded(&placed, rows, limits, Some(current))?;

    let mut packed = layout.clone();
    packed.placements = ordered_like(&placed, &strip.layout);
    let target = before.max_free_rect.area();
    if crate::geometry::max_free_rectangle(&packed).area() < target {
        let spare = layout.container.width - strip.optimal_width;
        if free_columns(layout).count == spare {
            packed = layout.clone();
        } else if let Some(better) =
            keep_free_rectangle(&placed, strip.optimal_width, layout.container, target, limits)?
        {
            packed.placements = ordered_like(&placed, &better);
        } else {
            warn!(
                "no {}-column packing keeps a free rectangle of {target} cells",
                strip.optimal_width
            );
        }
    }
    debug_assert!(packed.validate().is_ok());
    Ok(Defragmentation {
        before,
        after: MetricsReport::of(&packed),
        layout: packed,
        strip,
    })
}

fn ordered_like(modules: &[ModuleSpec], source: &Layout) -> Vec<Placement> {
    modules
        .iter()
        .map(|m| {
            source
                .placement(&m.id)
                .cloned()
                .expect("packing places every module")
        })
        .collect()
}

/// Node budget of one exact search around a fixed pocket.
const POCKET_NODES: u64 = 100_000;

/// Where the free rectangle we are trying to keep sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pocket {
    /// Anywhere inside the packed columns.
    Hole { width: u32, height: u32 },
    /// Against the right edge of the packed columns, so it joins the free
    /// columns beyond them.
    Edge { width: u32, height: u32 },
}

/// A packing of `modules` into the leftmost `width` columns of `device`
/// whose largest free rectangle has at least `target` cells. Candidate
/// rectangles are tried smallest first.
fn keep_free_rectangle(
    modules: &[ModuleSpec],
    width: u32,
    device: Container,
    target: u64,
    limits: &SearchLimits,
) -> Result<Option<Layout>> {
    let rows = device.height;
    let spare = u64::from(device.width - width);
    let used: u64 = modules.iter().map(ModuleSpec::area).sum();
    let waste = u64::from(width) * u64::from(rows) - used;

    let mut pockets = Vec::new();
    // A pocket as tall as the device would be a free column, and `width` is
    // already minimal.
    for h in 1..rows {
        for w in 1..=width {
            let cells = u64::from(w) * u64::from(h);
            if cells > waste {
                break;
            }
            if cells >= target {
                pockets.push((cells, Pocket::Hole { width: w, height: h }));
            }
            let joined = (u64::from(w) + spare) * u64::from(h);
            if spare > 0 && joined >= target {
                pockets.push((joined, Pocket::Edge { width: w, height: h }));
            }
        }
    }
    pockets.sort_by_key(|&(cells, pocket)| {
        let (w, h, edge) = match pocket {
            Pocket::Hole { width, height } => (width, height, false),
            Pocket::Edge { width, height } => (width, height, true),
        };
        (cells, w * h, edge, w, h)
    });

    let strip = Container::new(width, rows);
    for (_, pocket) in pockets {
        let found = match pocket {
            Pocket::Hole { width: w, height: h } => pack_with_hole(modules, strip, w, h, limits)?,
            Pocket::Edge { width: w, height: h } => (0..=(rows - h) / 2).find_map(|y| {
                let blocked = Rect {
                    x: width - w,
                    y,
                    width: w,
                    height: h,
                };
                let budget = limits.max_nodes.map_or(POCKET_NODES, |n| n.min(POCKET_NODES));
                fill_around(modules, strip, blocked, budget)
            }),
        };
        if let Some(mut layout) = found {
            debug!("kept a free rectangle using {pocket:?}");
            layout.container = device;
            return Ok(Some(layout));
        }
    }
    Ok(None)
}

/// Packs `modules` together with an empty `w × h` block.
fn pack_with_hole(
    modules: &[ModuleSpec],
    strip: Container,
    w: u32,
    h: u32,
    limits: &SearchLimits,
) -> Result<Option<Layout>> {
    let mut id = String::from("hole");
    while modules.iter().any(|m| m.id == id) {
        id.push('_');
    }
    let mut with_hole = modules.to_vec();
    with_hole.push(ModuleSpec::new(id.clone(), w, h));
    let result = solve_opp(&with_hole, strip, limits)?;
    Ok(match result.verdict {
        OppVerdict::Feasible { mut layout, .. } => {
            layout.remove(&id);
            layout.modules.retain(|m| m.id != id);
            Some(layout)
        }
        _ => None,
    })
}

/// Exact placement of `modules` in `strip` leaving `blocked` empty.
///
/// The first empty cell in column-major order is either the lower-left
/// corner of some module or stays empty; every packing arises this way.
/// Gives up after `max_nodes` search nodes.
fn fill_around(modules: &[ModuleSpec], strip: Container, blocked: Rect, max_nodes: u64) -> Option<Layout> {
    let mut columns = vec![0u64; strip.width as usize];
    for c in blocked.x..blocked.x + blocked.width {
        columns[c as usize] |= span(blocked.y, blocked.height);
    }
    let mut shapes: Vec<(u32, u32)> = modules.iter().map(|m| (m.width, m.height)).collect();
    shapes.sort_unstable_by(|a, b| b.cmp(a));
    shapes.dedup();
    let mut left: Vec<Vec<usize>> = shapes
        .iter()
        .map(|&s| {
            (0..modules.len())
                .filter(|&i| (modules[i].width, modules[i].height) == s)
                .collect()
        })
        .collect();
    let used: u64 = modules.iter().map(ModuleSpec::area).sum();
    let mut search = Filler {
        strip,
        shapes: &shapes,
        positions: vec![(0, 0); modules.len()],
        nodes: 0,
        max_nodes,
    };
    let waste = strip.area() - blocked.area() - used;
    if !search.fill(&mut columns, &mut left, 0, waste, modules.len()) {
        return None;
    }
    let mut layout = Layout::new(strip);
    for (m, &(x, y)) in modules.iter().zip(&search.positions) {
        layout.place(m.clone(), x, y);
    }
    Some(layout)
}

fn span(y: u32, h: u32) -> u64 {
    (((1u128 << h) - 1) << y) as u64
}

struct Filler<'a> {
    strip: Container,
    shapes: &'a [(u32, u32)],
    positions: Vec<(u32, u32)>,
    nodes: u64,
    max_nodes: u64,
}

impl Filler<'_> {
    fn fill(
        &mut self,
        columns: &mut [u64],
        left: &mut [Vec<usize>],
        from: u32,
        waste: u64,
        remaining: usize,
    ) -> bool {
        if remaining == 0 {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return false;
        }
        let Some(cell) = (from..self.strip.area() as u32).find(|&i| {
            let (x, y) = (i / self.strip.height, i % self.strip.height);
            columns[x as usize] & (1 << y) == 0
        }) else {
            return false;
        };
        let (x, y) = (cell / self.strip.height, cell % self.strip.height);
        for (s, &(w, h)) in self.shapes.iter().enumerate() {
            if left[s].is_empty() || x + w > self.strip.width || y + h > self.strip.height {
                continue;
            }
            let mask = span(y, h);
            let cols = x as usize..(x + w) as usize;
            if columns[cols.clone()].iter().any(|c| c & mask != 0) {
                continue;
            }
            columns[cols.clone()].iter_mut().for_each(|c| *c |= mask);
            let i = left[s].pop().expect("shape has modules left");
            self.positions[i] = (x, y);
            if self.fill(columns, left, cell + 1, waste, remaining - 1) {
                return true;
            }
            left[s].push(i);
            columns[cols].iter_mut().for_each(|c| *c &= !mask);
        }
        if waste > 0 {
            columns[x as usize] |= 1 << y;
            let done = self.fill(columns, left, cell + 1, waste - 1, remaining);
            columns[x as usize] &= !(1 << y);
            if done {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{free_columns, max_free_rectangle, validate_layout};

    fn boxes(dims: &[(u32, u32)]) -> Vec<ModuleSpec> {
        dims.iter()
            .enumerate()
            .map(|(i, &(w, h))| ModuleSpec::new(format!("m{i}"), w, h))
            .collect()
    }

    #[test]
    fn tight_bounds_need_no_probe() {
        let r = min_strip_width(
            &boxes(&[(3, 4), (2, 2), (2, 2), (1, 3)]),
            4,
            &SearchLimits::unlimited(),
        )
        .unwrap();
        assert_eq!(r.optimal_width, 6);
        assert!(r.probes.is_empty());
        assert!(validate_layout(&r.layout).is_empty());
    }

    #[test]
    fn single_module_width() {
        let r = min_strip_width(&boxes(&[(4, 2)]), 5, &SearchLimits::unlimited()).unwrap();
        assert_eq!(r.optimal_width, 4);
    }

    #[test]
    fn defragment_moves_everything_left() {
        let mut l = Layout::new(Container::new(13, 11));
        l.place(ModuleSpec::new("a", 2, 11), 3, 0);
        l.place(ModuleSpec::new("b", 2, 6), 8, 0);
        l.place(ModuleSpec::new("c", 2, 5), 11, 6);
        let d = defragment(&l, &SearchLimits::unlimited()).unwrap();
        assert_eq!(d.strip.optimal_width, 4);
        assert_eq!(free_columns(&d.layout).columns, (4..13).collect::<Vec<_>>());
        assert_eq!(d.after.free_columns.count, 9);
        assert_eq!(max_free_rectangle(&d.layout).area(), 9 * 11);
        assert_eq!(d.before.free_columns.count, 13 - 6);
    }

    #[test]
    fn defragment_empty_layout() {
        let l = Layout::new(Container::new(13, 11));
        let d = defragment(&l, &SearchLimits::unlimited()).unwrap();
        assert_eq!(d.strip.optimal_width, 0);
        assert_eq!(d.after, d.before);
    }
}
