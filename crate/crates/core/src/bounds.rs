//! Simple bounds on the number of columns a module set needs at a fixed
//! height: the area bound from below and three shelf heuristics from above.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Container, Layout, ModuleSpec, Placement};

/// `⌈Σ w·h / rows⌉`.
pub fn volume_lower_bound(modules: &[ModuleSpec], rows: u32) -> u32 {
    assert!(rows >= 1, "strip needs at least one row");
    let area: u64 = modules.iter().map(ModuleSpec::area).sum();
    area.div_ceil(u64::from(rows)) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShelfStrategy {
    /// Only the most recently opened shelf is tried.
    NextFit,
    /// The leftmost shelf with room.
    FirstFit,
    /// The shelf left with the least free height, leftmost on ties.
    BestFit,
}

impl ShelfStrategy {
    pub const ALL: [ShelfStrategy; 3] = [
        ShelfStrategy::NextFit,
        ShelfStrategy::FirstFit,
        ShelfStrategy::BestFit,
    ];
}

struct Shelf {
    x: u32,
    used: u32,
}

/// Packs the modules into vertical shelves of a strip `rows` high.
///
/// Modules are taken by non-increasing width (then non-increasing height,
/// then id). Each shelf is as wide as the module that opened it; modules
/// stack upwards inside a shelf. The returned layout's container is exactly
/// as wide as the shelves.
pub fn shelf_pack(modules: &[ModuleSpec], rows: u32, strategy: ShelfStrategy) -> Result<Layout> {
    if let Some(m) = modules.iter().find(|m| m.height > rows) {
        return Err(Error::TooTall {
            id: m.id.clone(),
            width: m.width,
            height: m.height,
            rows,
        });
    }
    let mut sorted: Vec<&ModuleSpec> = modules.iter().collect();
    sorted.sort_by(|a, b| {
        b.width
            .cmp(&a.width)
            .then(b.height.cmp(&a.height))
            .then(a.id.cmp(&b.id))
    });

    let mut shelves: Vec<Shelf> = Vec::new();
    let mut width = 0;
    let mut placements = Vec::with_capacity(modules.len());
    for m in sorted {
        let fits = |s: &Shelf| s.used + m.height <= rows;
        let chosen = match strategy {
            ShelfStrategy::NextFit => shelves.len().checked_sub(1).filter(|&i| fits(&shelves[i])),
            ShelfStrategy::FirstFit => shelves.iter().position(fits),
            ShelfStrategy::BestFit => shelves
                .iter()
                .enumerate()
                .filter(|(_, s)| fits(s))
                .min_by_key(|(i, s)| (rows - s.used - m.height, *i))
                .map(|(i, _)| i),
        };
        let idx = chosen.unwrap_or_else(|| {
            shelves.push(Shelf { x: width, used: 0 });
            width += m.width;
            shelves.len() - 1
        });
        let shelf = &mut shelves[idx];
        placements.push(Placement::new(m.id.clone(), shelf.x, shelf.used));
        shelf.used += m.height;
    }
    Ok(Layout {
        container: Container::new(width, rows),
        modules: modules.to_vec(),
        placements,
    })
}

/// A dual feasible function on integer extents with capacity `cap`: any
/// extents summing to at most `cap` map to values summing to at most
/// [`Dff::capacity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dff {
    Identity,
    /// Extents above `cap - e` count fully, below `e` not at all.
    Threshold(u32),
    /// Rounds `(k + 1)·x / cap` down unless it is integral.
    Rounding(u32),
}

impl Dff {
    fn family(cap: u32) -> Vec<Dff> {
        let mut fs = vec![Dff::Identity];
        fs.extend((1..=cap / 2).map(Dff::Threshold));
        fs.extend((1..=cap.min(16)).map(Dff::Rounding));
        fs
    }

    fn capacity(self, cap: u32) -> u64 {
        match self {
            Dff::Identity | Dff::Threshold(_) => u64::from(cap),
            Dff::Rounding(k) => u64::from(k) * u64::from(cap),
        }
    }

    fn apply(self, x: u32, cap: u32) -> u64 {
        let (x64, c64) = (u64::from(x), u64::from(cap));
        match self {
            Dff::Identity => x64,
            Dff::Threshold(e) if x > cap - e => c64,
            Dff::Threshold(e) if x < e => 0,
            Dff::Threshold(_) => x64,
            Dff::Rounding(k) => {
                let k = u64::from(k);
                if ((k + 1) * x64) % c64 == 0 {
                    x64 * k
                } else {
                    ((k + 1) * x64 / c64) * c64
                }
            }
        }
    }
}

/// True when some pair of dual feasible functions, one per axis, proves
/// that `modules` cannot fit in `container`: the transformed areas exceed
/// the transformed container.
pub fn dff_refutes(modules: &[ModuleSpec], container: Container) -> bool {
    let Container { width, height } = container;
    if width == 0 || height == 0 {
        return !modules.is_empty();
    }
    if modules.iter().any(|m| m.width > width || m.height > height) {
        return true;
    }
    let fx = Dff::family(width);
    let fy = Dff::family(height);
    let xs: Vec<Vec<u64>> = fx
        .iter()
        .map(|f| modules.iter().map(|m| f.apply(m.width, width)).collect())
        .collect();
    for g in &fy {
        let ys: Vec<u64> = modules.iter().map(|m| g.apply(m.height, height)).collect();
        let cap_y = g.capacity(height);
        for (f, x) in fx.iter().zip(&xs) {
            let total: u64 = x.iter().zip(&ys).map(|(a, b)| a * b).sum();
            if total > f.capacity(width) * cap_y {
                return true;
            }
        }
    }
    false
}

/// Bracket for the optimal strip width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: u32,
    pub upper: u32,
    pub strategy: Option<ShelfStrategy>,
    /// Packing that attains `upper`, in a container exactly `upper` wide.
    pub upper_layout: Layout,
}

/// Area lower bound and the best of the three shelf heuristics.
pub fn compute_bounds(modules: &[ModuleSpec], rows: u32) -> Result<Bounds> {
    let lower = volume_lower_bound(modules, rows);
    let mut best: Option<(ShelfStrategy, Layout)> = None;
    for strategy in ShelfStrategy::ALL {
        let layout = shelf_pack(modules, rows, strategy)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| layout.container.width < b.container.width)
        {
            best = Some((strategy, layout));
        }
    }
    let (strategy, upper_layout) = best.expect("three strategies were tried");
    Ok(Bounds {
        lower,
        upper: upper_layout.container.width,
        strategy: (!modules.is_empty()).then_some(strategy),
        upper_layout,
    })
}
