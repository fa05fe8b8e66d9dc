//! Device model: modules, containers, layouts and the fragmentation metrics
//! computed over them.
//!
//! All coordinates are integer and every extent is half-open, so a module of
//! width `w` placed at column `x` covers columns `[x, x + w)`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangular hardware module.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub id: String,
    /// Width in columns.
    pub width: u32,
    /// Height in rows.
    pub height: u32,
    #[serde(rename = "usage", default)]
    pub usage_count: u32,
}

impl ModuleSpec {
    pub fn new(id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            id: id.into(),
            width,
            height,
            usage_count: 0,
        }
    }

    pub fn with_usage(mut self, usage_count: u32) -> Self {
        self.usage_count = usage_count;
        self
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    /// Extent along `axis` (width for X, height for Y).
    pub fn extent(&self, axis: Axis) -> u32 {
        match axis {
            Axis::X => self.width,
            Axis::Y => self.height,
        }
    }
}

/// One of the two device axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => f.write_str("x"),
            Axis::Y => f.write_str("y"),
        }
    }
}

/// The reconfigurable area: `width` columns by `height` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Container {
    pub width: u32,
    pub height: u32,
}

impl Container {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn extent(&self, axis: Axis) -> u32 {
        match axis {
            Axis::X => self.width,
            Axis::Y => self.height,
        }
    }
}

/// Position of a module's lower-left cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    #[serde(rename = "id")]
    pub module_id: String,
    pub x: u32,
    pub y: u32,
}

impl Placement {
    pub fn new(module_id: impl Into<String>, x: u32, y: u32) -> Self {
        Self {
            module_id: module_id.into(),
            x,
            y,
        }
    }
}

/// A container, the modules known to it, and the placements of those that
/// are currently configured on the device.
///
/// Modules without a placement are allowed; they are known but not loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub container: Container,
    #[serde(default)]
    pub modules: Vec<ModuleSpec>,
    #[serde(default)]
    pub placements: Vec<Placement>,
}

/// Axis-aligned rectangle covering `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        overlap_len(self.x, self.width, other.x, other.width) > 0
            && overlap_len(self.y, self.height, other.y, other.height) > 0
    }
}

/// Length of the intersection of `[a, a + la)` and `[b, b + lb)`.
pub fn overlap_len(a: u32, la: u32, b: u32, lb: u32) -> u32 {
    let lo = a.max(b);
    let hi = (a + la).min(b + lb);
    hi.saturating_sub(lo)
}

impl Layout {
    pub fn new(container: Container) -> Self {
        Self {
            container,
            modules: Vec::new(),
            placements: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serialization is infallible")
    }

    pub fn module(&self, id: &str) -> Option<&ModuleSpec> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn placement(&self, id: &str) -> Option<&Placement> {
        self.placements.iter().find(|p| p.module_id == id)
    }

    pub fn is_placed(&self, id: &str) -> bool {
        self.placement(id).is_some()
    }

    /// Adds `module` to the module table (replacing any spec with the same
    /// id) and places it at `(x, y)`. No validity check is made.
    pub fn place(&mut self, module: ModuleSpec, x: u32, y: u32) {
        let id = module.id.clone();
        match self.modules.iter_mut().find(|m| m.id == id) {
            Some(slot) => *slot = module,
            None => self.modules.push(module),
        }
        self.placements.retain(|p| p.module_id != id);
        self.placements.push(Placement::new(id, x, y));
    }

    /// Removes the placement and module spec for `id`. Returns whether a
    /// placement existed.
    pub fn remove(&mut self, id: &str) -> bool {
        let before = self.placements.len();
        self.placements.retain(|p| p.module_id != id);
        self.modules.retain(|m| m.id != id);
        self.placements.len() != before
    }

    /// Placed modules paired with their rectangles, in placement order.
    /// Placements with unknown ids are skipped.
    pub fn placed(&self) -> impl Iterator<Item = (&ModuleSpec, Rect)> + '_ {
        self.placements.iter().filter_map(move |p| {
            self.module(&p.module_id).map(|m| {
                (
                    m,
                    Rect {
                        x: p.x,
                        y: p.y,
                        width: m.width,
                        height: m.height,
                    },
                )
            })
        })
    }

    /// Module specs of every placed module, in placement order.
    pub fn placed_modules(&self) -> Vec<ModuleSpec> {
        self.placed().map(|(m, _)| m.clone()).collect()
    }

    /// One past the rightmost occupied column, 0 for an empty layout.
    pub fn used_width(&self) -> u32 {
        self.placed().map(|(_, r)| r.x + r.width).max().unwrap_or(0)
    }

    pub fn occupancy(&self) -> OccupancyGrid {
        let mut grid = OccupancyGrid::new(self.container);
        for (_, r) in self.placed() {
            grid.fill(&r);
        }
        grid
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_layout(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLayout(violations))
        }
    }
}

/// A reason a layout is invalid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DegenerateModule { id: String },
    DuplicateModule { id: String },
    UnknownModule { id: String },
    DuplicatePlacement { id: String },
    OutOfBounds { id: String },
    Overlap { first: String, second: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DegenerateModule { id } => write!(f, "module {id} has a zero extent"),
            Violation::DuplicateModule { id } => write!(f, "module id {id} is declared twice"),
            Violation::UnknownModule { id } => write!(f, "placement references unknown module {id}"),
            Violation::DuplicatePlacement { id } => write!(f, "module {id} is placed twice"),
            Violation::OutOfBounds { id } => write!(f, "module {id} lies outside the container"),
            Violation::Overlap { first, second } => {
                write!(f, "modules {first} and {second} overlap")
            }
        }
    }
}

/// Lists every way in which `layout` breaks the layout invariants. An empty
/// result means the layout is valid.
pub fn validate_layout(layout: &Layout) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for m in &layout.modules {
        if !seen.insert(m.id.as_str()) {
            violations.push(Violation::DuplicateModule { id: m.id.clone() });
        }
        if m.width == 0 || m.height == 0 {
            violations.push(Violation::DegenerateModule { id: m.id.clone() });
        }
    }

    let mut placed_ids = HashSet::new();
    let mut rects: Vec<(&str, Rect)> = Vec::with_capacity(layout.placements.len());
    for p in &layout.placements {
        if !placed_ids.insert(p.module_id.as_str()) {
            violations.push(Violation::DuplicatePlacement {
                id: p.module_id.clone(),
            });
            continue;
        }
        let Some(m) = layout.module(&p.module_id) else {
            violations.push(Violation::UnknownModule {
                id: p.module_id.clone(),
            });
            continue;
        };
        let c = layout.container;
        if u64::from(p.x) + u64::from(m.width) > u64::from(c.width)
            || u64::from(p.y) + u64::from(m.height) > u64::from(c.height)
        {
            violations.push(Violation::OutOfBounds { id: m.id.clone() });
        }
        rects.push((
            &m.id,
            Rect {
                x: p.x,
                y: p.y,
                width: m.width,
                height: m.height,
            },
        ));
    }

    for (i, (a, ra)) in rects.iter().enumerate() {
        for (b, rb) in &rects[i + 1..] {
            if ra.intersects(rb) {
                violations.push(Violation::Overlap {
                    first: a.to_string(),
                    second: b.to_string(),
                });
            }
        }
    }
    violations
}

/// Cell occupancy of a container, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    width: u32,
    height: u32,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(container: Container) -> Self {
        Self {
            width: container.width,
            height: container.height,
            cells: vec![false; container.area() as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Marks the in-bounds part of `rect` occupied.
    pub fn fill(&mut self, rect: &Rect) {
        let x_end = (rect.x + rect.width).min(self.width);
        let y_end = (rect.y + rect.height).min(self.height);
        for y in rect.y..y_end {
            for x in rect.x..x_end {
                self.cells[(y * self.width + x) as usize] = true;
            }
        }
    }

    pub fn is_occupied(&self, x: u32, y: u32) -> bool {
        self.cells[(y * self.width + x) as usize]
    }

    pub fn is_region_free(&self, rect: &Rect) -> bool {
        if rect.x + rect.width > self.width || rect.y + rect.height > self.height {
            return false;
        }
        (rect.y..rect.y + rect.height).all(|y| (rect.x..rect.x + rect.width).all(|x| !self.is_occupied(x, y)))
    }

    pub fn column_is_free(&self, x: u32) -> bool {
        (0..self.height).all(|y| !self.is_occupied(x, y))
    }
}

/// Free columns of a layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeColumns {
    pub count: u32,
    pub columns: Vec<u32>,
}

impl FreeColumns {
    /// Length of the longest run of consecutive free columns.
    pub fn longest_run(&self) -> u32 {
        let mut best = 0;
        let mut run = 0;
        let mut prev: Option<u32> = None;
        for &c in &self.columns {
            run = match prev {
                Some(p) if p + 1 == c => run + 1,
                _ => 1,
            };
            best = best.max(run);
            prev = Some(c);
        }
        best
    }
}

/// Columns no placed module touches.
pub fn free_columns(layout: &Layout) -> FreeColumns {
    let mut used = vec![false; layout.container.width as usize];
    for (_, r) in layout.placed() {
        let end = (r.x + r.width).min(layout.container.width);
        for c in r.x..end {
            used[c as usize] = true;
        }
    }
    let columns: Vec<u32> = (0..layout.container.width)
        .filter(|&c| !used[c as usize])
        .collect();
    FreeColumns {
        count: columns.len() as u32,
        columns,
    }
}

/// Largest empty rectangle of a layout.
///
/// Ties on area prefer the wider rectangle, then the smaller `(x, y)`.
/// A fully occupied layout yields the all-zero rectangle.
pub fn max_free_rectangle(layout: &Layout) -> Rect {
    max_free_rectangle_in(&layout.occupancy())
}

pub fn max_free_rectangle_in(grid: &OccupancyGrid) -> Rect {
    let (w, h) = (grid.width(), grid.height());
    let mut best = Rect {
        x: 0,
        y: 0,
        width: 0,
        height: 0,
    };
    let better = |cand: &Rect, best: &Rect| {
        (cand.area(), cand.width, std::cmp::Reverse((cand.x, cand.y)))
            > (best.area(), best.width, std::cmp::Reverse((best.x, best.y)))
    };
    // For each column span, track which rows are free across the whole span
    // and consider every maximal vertical run of such rows.
    let mut row_free = vec![true; h as usize];
    for x0 in 0..w {
        row_free.iter_mut().for_each(|r| *r = true);
        for x1 in x0..w {
            for y in 0..h {
                if grid.is_occupied(x1, y) {
                    row_free[y as usize] = false;
                }
            }
            let width = x1 - x0 + 1;
            let mut y = 0;
            while y < h {
                if !row_free[y as usize] {
                    y += 1;
                    continue;
                }
                let start = y;
                while y < h && row_free[y as usize] {
                    y += 1;
                }
                let cand = Rect {
                    x: x0,
                    y: start,
                    width,
                    height: y - start,
                };
                if better(&cand, &best) {
                    best = cand;
                }
            }
            if row_free.iter().all(|r| !r) {
                break;
            }
        }
    }
    best
}

/// Number of empty cells.
pub fn free_area(layout: &Layout) -> u64 {
    let used: u64 = layout.placed().map(|(_, r)| r.area()).sum();
    layout.container.area().saturating_sub(used)
}

/// Interruption caused by reconfiguring a window of columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interference {
    /// Modules sharing at least one column with the window.
    pub interrupted: usize,
    /// `(module id, interruption time)` for every placed module, in
    /// placement order.
    pub per_module: Vec<(String, u64)>,
}

impl Interference {
    pub fn total(&self) -> u64 {
        self.per_module.iter().map(|(_, t)| t).sum()
    }

    pub fn of(&self, id: &str) -> Option<u64> {
        self.per_module.iter().find(|(m, _)| m == id).map(|(_, t)| *t)
    }
}

/// Interruption each placed module suffers when columns `[x, x + width)`
/// are reconfigured at `time_per_column` per column.
pub fn column_interference(layout: &Layout, x: u32, width: u32, time_per_column: u64) -> Interference {
    let per_module: Vec<(String, u64)> = layout
        .placed()
        .map(|(m, r)| {
            let shared = overlap_len(r.x, r.width, x, width);
            (m.id.clone(), time_per_column * u64::from(shared))
        })
        .collect();
    Interference {
        interrupted: per_module.iter().filter(|(_, t)| *t > 0).count(),
        per_module,
    }
}

/// The fragmentation figures reported before and after defragmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub free_area: u64,
    pub max_free_rect: Rect,
    pub free_columns: FreeColumns,
}

impl MetricsReport {
    pub fn of(layout: &Layout) -> Self {
        Self {
            free_area: free_area(layout),
            max_free_rect: max_free_rectangle(layout),
            free_columns: free_columns(layout),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> Container {
        Container::new(13, 11)
    }

    fn fig2(m5_y: u32) -> Layout {
        let mut l = Layout::new(device());
        l.place(ModuleSpec::new("M4", 5, 4), 3, 1);
        l.place(ModuleSpec::new("M5", 5, 4), 5, m5_y);
        l
    }

    #[test]
    fn empty_layout_is_valid() {
        assert!(validate_layout(&Layout::new(device())).is_empty());
    }

    #[test]
    fn stacked_modules_do_not_overlap() {
        assert!(validate_layout(&fig2(6)).is_empty());
    }

    #[test]
    fn shifted_module_overlaps() {
        let v = validate_layout(&fig2(3));
        assert_eq!(
            v,
            vec![Violation::Overlap {
                first: "M4".into(),
                second: "M5".into()
            }]
        );
    }

    #[test]
    fn unknown_and_out_of_bounds_are_reported() {
        let mut l = Layout::new(Container::new(4, 4));
        l.place(ModuleSpec::new("a", 3, 1), 2, 0);
        l.placements.push(Placement::new("ghost", 0, 0));
        l.placements.push(Placement::new("a", 0, 3));
        let v = validate_layout(&l);
        assert!(v.contains(&Violation::OutOfBounds { id: "a".into() }));
        assert!(v.contains(&Violation::UnknownModule { id: "ghost".into() }));
        assert!(v.contains(&Violation::DuplicatePlacement { id: "a".into() }));
    }

    #[test]
    fn free_columns_examples() {
        let l = Layout::new(device());
        assert_eq!(free_columns(&l).count, 13);
        assert_eq!(free_columns(&l).columns, (0..13).collect::<Vec<_>>());

        let mut full = Layout::new(device());
        full.place(ModuleSpec::new("bar", 13, 1), 0, 0);
        assert_eq!(
            free_columns(&full),
            FreeColumns {
                count: 0,
                columns: vec![]
            }
        );

        let mut left = Layout::new(device());
        left.place(ModuleSpec::new("a", 6, 3), 0, 0);
        left.place(ModuleSpec::new("b", 5, 2), 6, 9);
        assert_eq!(free_columns(&left).columns, vec![11, 12]);
    }

    #[test]
    fn max_rect_examples() {
        let l = Layout::new(device());
        assert_eq!(
            max_free_rectangle(&l),
            Rect {
                x: 0,
                y: 0,
                width: 13,
                height: 11
            }
        );

        // Columns [0, 11) fully covered.
        let mut packed = Layout::new(device());
        packed.place(ModuleSpec::new("a", 11, 6), 0, 0);
        packed.place(ModuleSpec::new("b", 11, 5), 0, 6);
        assert_eq!(
            max_free_rectangle(&packed),
            Rect {
                x: 11,
                y: 0,
                width: 2,
                height: 11
            }
        );

        let mut full = Layout::new(Container::new(2, 2));
        full.place(ModuleSpec::new("a", 2, 2), 0, 0);
        assert_eq!(max_free_rectangle(&full).area(), 0);
        assert_eq!(
            max_free_rectangle(&full),
            Rect {
                x: 0,
                y: 0,
                width: 0,
                height: 0
            }
        );
    }

    #[test]
    fn max_rect_tie_breaks_on_width_then_position() {
        // Free: a 2x3 block at the left and a 3x2 block at the right.
        let mut l = Layout::new(Container::new(6, 3));
        l.place(ModuleSpec::new("mid", 1, 3), 2, 0);
        l.place(ModuleSpec::new("top", 3, 1), 3, 2);
        let r = max_free_rectangle(&l);
        assert_eq!(
            r,
            Rect {
                x: 3,
                y: 0,
                width: 3,
                height: 2
            }
        );
    }

    #[test]
    fn interference_examples() {
        let mut l = Layout::new(device());
        l.place(ModuleSpec::new("M4", 5, 4), 3, 1);
        let i = column_interference(&l, 5, 5, 1);
        assert_eq!(i.of("M4"), Some(3));
        assert_eq!(i.interrupted, 1);

        let i = column_interference(&l, 8, 5, 1);
        assert_eq!(i.interrupted, 0);
        assert_eq!(i.total(), 0);

        let i = column_interference(&l, 3, 5, 2);
        assert_eq!(i.of("M4"), Some(10));
    }

    #[test]
    fn free_area_examples() {
        assert_eq!(free_area(&Layout::new(device())), 143);
        let mut l = Layout::new(device());
        l.place(ModuleSpec::new("a", 11, 6), 0, 0);
        l.place(ModuleSpec::new("b", 11, 5), 0, 6);
        assert_eq!(free_area(&l), 143 - 121);
    }

    #[test]
    fn json_schema_round_trip() {
        let text = r#"{"container": {"width": 13, "height": 11},
            "modules": [{"id": "M4", "width": 5, "height": 4, "usage": 2}],
            "placements": [{"id": "M4", "x": 3, "y": 1}]}"#;
        let l = Layout::from_json(text).unwrap();
        assert_eq!(l.module("M4").unwrap().usage_count, 2);
        assert_eq!(l.placements[0], Placement::new("M4", 3, 1));
        let back = Layout::from_json(&l.to_json_pretty()).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn longest_free_run() {
        let fc = FreeColumns {
            count: 5,
            columns: vec![0, 1, 4, 5, 6],
        };
        assert_eq!(fc.longest_run(), 3);
    }
}
