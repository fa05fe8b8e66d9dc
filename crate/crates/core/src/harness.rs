//! Scenario simulator: online placement with least interference fit,
//! eviction and removal, and defragmentation on request, reported as
//! before/after fragmentation rows.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    free_area, free_columns, max_free_rectangle, overlap_len, validate_layout, Container, Layout, ModuleSpec,
    Placement, Rect,
};
use crate::opp::SearchLimits;
use crate::strip::defragment;

/// Least-interference-fit position for `module`, or `None` if no empty
/// rectangle can hold it.
///
/// Positions are ranked by the number of placed modules sharing a column
/// with the module, then the number of shared columns, then `x`, then `y`.
pub fn lif_place(layout: &Layout, module: &ModuleSpec) -> Option<Placement> {
    let c = layout.container;
    if module.width > c.width || module.height > c.height {
        return None;
    }
    let grid = layout.occupancy();
    let placed: Vec<Rect> = layout.placed().map(|(_, r)| r).collect();
    let mut best: Option<((usize, u32, u32, u32), Placement)> = None;
    for x in 0..=c.width - module.width {
        let mut touched = 0;
        let mut shared = 0;
        for r in &placed {
            let s = overlap_len(r.x, r.width, x, module.width);
            if s > 0 {
                touched += 1;
                shared += s;
            }
        }
        if best.as_ref().is_some_and(|(k, _)| (touched, shared) > (k.0, k.1)) {
            continue;
        }
        for y in 0..=c.height - module.height {
            let rect = Rect {
                x,
                y,
                width: module.width,
                height: module.height,
            };
            if grid.is_region_free(&rect) {
                let key = (touched, shared, x, y);
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, Placement::new(module.id.clone(), x, y)));
                }
                break;
            }
        }
    }
    best.map(|(_, p)| p)
}

/// The placed module used longest ago. Modules missing from `last_use`
/// count as time 0; ties go to the smallest id.
pub fn lru_evict(layout: &Layout, last_use: &HashMap<String, u64>) -> Result<String> {
    layout
        .placements
        .iter()
        .map(|p| (last_use.get(&p.module_id).copied().unwrap_or(0), &p.module_id))
        .min()
        .map(|(_, id)| id.clone())
        .ok_or(Error::NothingToEvict)
}

/// Removes every placed module whose usage count is below `threshold` and
/// returns their ids in placement order.
pub fn remove_low_usage(layout: &mut Layout, threshold: u64) -> Vec<String> {
    let doomed: Vec<String> = layout
        .placed()
        .filter(|(m, _)| u64::from(m.usage_count) < threshold)
        .map(|(m, _)| m.id.clone())
        .collect();
    for id in &doomed {
        layout.remove(id);
    }
    doomed
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioEvent {
    /// A module is requested. If it is already placed this counts as a use.
    Arrive(ModuleSpec),
    Depart {
        id: String,
    },
    RemoveLowUsage {
        threshold: u64,
    },
    Defragment,
}

/// Scenario file: a container, optional initial placements and an event
/// list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub container: Container,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modules: Vec<ModuleSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub placements: Vec<Placement>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn initial_layout(&self) -> Layout {
        Layout {
            container: self.container,
            modules: self.modules.clone(),
            placements: self.placements.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Placed { x: u32, y: u32 },
    Rejected,
    Used { usage: u32 },
    Departed,
    Removed { ids: Vec<String> },
    Defragmented { optimal_width: u32, probes: usize },
}

/// An applied event and the layout right after it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub event: ScenarioEvent,
    pub outcome: Outcome,
    pub layout: Layout,
}

/// One line of the fragmentation table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub modules: usize,
    pub free_space: u64,
    pub before_max_rect: Rect,
    pub before_free_columns: u32,
    pub after_max_rect: Option<Rect>,
    pub after_free_columns: Option<u32>,
}

impl ReportRow {
    /// Row for a defragmentation from `before` to `after`.
    pub fn between(label: impl Into<String>, before: &Layout, after: &Layout) -> Self {
        let mut row = Self::at(label, before);
        row.after_max_rect = Some(max_free_rectangle(after));
        row.after_free_columns = Some(free_columns(after).count);
        row
    }

    /// Row for a single state, with no "after" columns.
    pub fn at(label: impl Into<String>, layout: &Layout) -> Self {
        Self {
            label: label.into(),
            modules: layout.placements.len(),
            free_space: free_area(layout),
            before_max_rect: max_free_rectangle(layout),
            before_free_columns: free_columns(layout).count,
            after_max_rect: None,
            after_free_columns: None,
        }
    }
}

/// Snapshots of a scenario run. Table rows are derived from the snapshots
/// on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioReport {
    pub initial: Layout,
    pub steps: Vec<StepRecord>,
}

impl ScenarioReport {
    pub fn final_layout(&self) -> &Layout {
        self.steps.last().map_or(&self.initial, |s| &s.layout)
    }

    /// One row per defragmentation, then one for the final state.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        let mut previous = &self.initial;
        for step in &self.steps {
            if step.event == ScenarioEvent::Defragment {
                rows.push(ReportRow::between(
                    format!("defrag@{}", step.index),
                    previous,
                    &step.layout,
                ));
            }
            previous = &step.layout;
        }
        rows.push(ReportRow::at("final", self.final_layout()));
        rows
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            rows: Vec<ReportRow>,
            initial: &'a Layout,
            steps: &'a [StepRecord],
        }
        serde_json::to_string_pretty(&Doc {
            rows: self.rows(),
            initial: &self.initial,
            steps: &self.steps,
        })
        .expect("report serialization is infallible")
    }

    pub fn to_table(&self) -> String {
        format_table(&self.rows())
    }
}

fn rect_cell(r: &Rect) -> String {
    format!("{}x{}", r.width, r.height)
}

/// Aligned text table with the columns: label, module count, free space,
/// max rectangle and free columns before, max rectangle and free columns
/// after.
pub fn format_table(rows: &[ReportRow]) -> String {
    let header = [
        "Scenario",
        "|I|",
        "Free space",
        "Max rect (before)",
        "Free cols (before)",
        "Max rect (after)",
        "Free cols (after)",
    ];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.modules.to_string(),
                r.free_space.to_string(),
                rect_cell(&r.before_max_rect),
                r.before_free_columns.to_string(),
                r.after_max_rect.as_ref().map_or("-".into(), rect_cell),
                r.after_free_columns.map_or("-".into(), |c| c.to_string()),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
    };
    line(&mut out, &header.map(String::from));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for row in &cells {
        line(&mut out, row);
    }
    out
}

/// Knobs for [`run_scenario`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub limits: SearchLimits,
    /// Applied as a low-usage removal right before every defragmentation.
    pub usage_threshold: Option<u64>,
}

/// Applies `events` to `initial` in order. Timestamps for recency are event
/// indices.
pub fn run_scenario(
    initial: &Layout,
    events: &[ScenarioEvent],
    options: &RunOptions,
) -> Result<ScenarioReport> {
    initial.validate()?;
    let mut layout = initial.clone();
    let mut last_use: HashMap<String, u64> = HashMap::new();
    let mut steps = Vec::with_capacity(events.len());

    for (index, event) in events.iter().enumerate() {
        let malformed = |reason: String| Error::MalformedEvent { index, reason };
        let outcome = match event {
            ScenarioEvent::Arrive(module) => {
                if module.width == 0 || module.height == 0 {
                    return Err(malformed(format!("module {} has a zero extent", module.id)));
                }
                last_use.insert(module.id.clone(), index as u64);
                if layout.is_placed(&module.id) {
                    let known = layout
                        .modules
                        .iter_mut()
                        .find(|m| m.id == module.id)
                        .expect("placed modules have specs");
                    if (known.width, known.height) != (module.width, module.height) {
                        return Err(malformed(format!(
                            "module {} arrives with different dimensions",
                            module.id
                        )));
                    }
                    known.usage_count = known.usage_count.saturating_add(1);
                    Outcome::Used {
                        usage: known.usage_count,
                    }
                } else {
                    match lif_place(&layout, module) {
                        Some(p) => {
                            layout.place(module.clone(), p.x, p.y);
                            Outcome::Placed { x: p.x, y: p.y }
                        }
                        None => Outcome::Rejected,
                    }
                }
            }
            ScenarioEvent::Depart { id } => {
                if !layout.remove(id) {
                    return Err(malformed(format!("module {id} is not placed")));
                }
                Outcome::Departed
            }
            ScenarioEvent::RemoveLowUsage { threshold } => Outcome::Removed {
                ids: remove_low_usage(&mut layout, *threshold),
            },
            ScenarioEvent::Defragment => {
                if let Some(threshold) = options.usage_threshold {
                    remove_low_usage(&mut layout, threshold);
                }
                let d = defragment(&layout, &options.limits)?;
                layout = d.layout;
                Outcome::Defragmented {
                    optimal_width: d.strip.optimal_width,
                    probes: d.strip.probes.len(),
                }
            }
        };
        debug_assert!(validate_layout(&layout).is_empty());
        steps.push(StepRecord {
            index,
            event: event.clone(),
            outcome,
            layout: layout.clone(),
        });
    }
    Ok(ScenarioReport {
        initial: initial.clone(),
        steps,
    })
}

/// Shape of generated scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub container: Container,
    /// Inclusive range for the number of modules left before defragmenting.
    pub modules: (usize, usize),
    pub width: (u32, u32),
    pub height: (u32, u32),
    pub usage: (u32, u32),
    /// Requests issued during the busy phase.
    pub busy_requests: usize,
    /// Chance that a busy-phase request reuses a module already placed.
    pub reuse_probability: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            container: Container::new(13, 11),
            modules: (5, 11),
            width: (1, 5),
            height: (2, 8),
            usage: (0, 9),
            busy_requests: 40,
            reuse_probability: 0.25,
        }
    }
}

impl ScenarioParams {
    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.container.width == 0 || self.container.height == 0 {
            return bad("container must be at least 1x1");
        }
        if self.modules.0 > self.modules.1 {
            return bad("module range is empty");
        }
        if self.width.0 == 0 || self.height.0 == 0 {
            return bad("module extents must be at least 1");
        }
        if self.width.0 > self.width.1 || self.height.0 > self.height.1 || self.usage.0 > self.usage.1 {
            return bad("extent or usage range is empty");
        }
        if self.width.1 > self.container.width || self.height.1 > self.container.height {
            return bad("modules may exceed the container");
        }
        if !(0.0..=1.0).contains(&self.reuse_probability) {
            return bad("reuse probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Deterministic busy-period scenario.
///
/// Modules arrive and are placed by least interference fit; a request that
/// does not fit evicts least recently used modules until it does. Then
/// randomly chosen modules depart until the target module count is reached,
/// and a defragmentation closes the scenario.
pub fn generate_scenario(seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(params.modules.0..=params.modules.1);

    let mut layout = Layout::new(params.container);
    let mut last_use: HashMap<String, u64> = HashMap::new();
    let mut events = Vec::new();
    let mut next_id = 1;

    let mut fresh_module = |rng: &mut ChaCha8Rng| {
        let m = ModuleSpec::new(
            format!("M{next_id}"),
            rng.gen_range(params.width.0..=params.width.1),
            rng.gen_range(params.height.0..=params.height.1),
        )
        .with_usage(rng.gen_range(params.usage.0..=params.usage.1));
        next_id += 1;
        m
    };

    let request = |module: ModuleSpec,
                   evict: bool,
                   layout: &mut Layout,
                   last_use: &mut HashMap<String, u64>,
                   events: &mut Vec<ScenarioEvent>|
     -> bool {
        loop {
            if let Some(p) = lif_place(layout, &module) {
                last_use.insert(module.id.clone(), events.len() as u64);
                events.push(ScenarioEvent::Arrive(module.clone()));
                layout.place(module, p.x, p.y);
                return true;
            }
            if !evict || layout.placements.is_empty() {
                return false;
            }
            let victim = lru_evict(layout, last_use).expect("layout is nonempty");
            layout.remove(&victim);
            events.push(ScenarioEvent::Depart { id: victim });
        }
    };

    for _ in 0..params.busy_requests {
        if !layout.placements.is_empty() && rng.gen_bool(params.reuse_probability) {
            let p = layout.placements.choose(&mut rng).expect("nonempty");
            let module = layout.module(&p.module_id).expect("placed").clone();
            last_use.insert(module.id.clone(), events.len() as u64);
            if let Some(m) = layout.modules.iter_mut().find(|m| m.id == module.id) {
                m.usage_count = m.usage_count.saturating_add(1);
            }
            events.push(ScenarioEvent::Arrive(module));
        } else {
            let module = fresh_module(&mut rng);
            request(module, true, &mut layout, &mut last_use, &mut events);
        }
    }

    // Top up without evicting, giving up after a few rejections.
    let mut misses = 0;
    while layout.placements.len() < target && misses < 20 {
        let module = fresh_module(&mut rng);
        if !request(module, false, &mut layout, &mut last_use, &mut events) {
            misses += 1;
        }
    }
    while layout.placements.len() > target {
        let p = layout.placements.choose(&mut rng).expect("nonempty");
        let id = p.module_id.clone();
        layout.remove(&id);
        events.push(ScenarioEvent::Depart { id });
    }
    events.push(ScenarioEvent::Defragment);

    Ok(Scenario {
        container: params.container,
        seed: Some(seed),
        modules: Vec::new(),
        placements: Vec::new(),
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> Layout {
        Layout::new(Container::new(13, 11))
    }

    #[test]
    fn lif_on_empty_device() {
        let p = lif_place(&device(), &ModuleSpec::new("a", 3, 3)).unwrap();
        assert_eq!((p.x, p.y), (0, 0));
    }

    #[test]
    fn lif_prefers_free_columns() {
        let mut l = device();
        l.place(ModuleSpec::new("a", 11, 6), 0, 0);
        l.place(ModuleSpec::new("b", 11, 4), 0, 6);
        let p = lif_place(&l, &ModuleSpec::new("c", 2, 11)).unwrap();
        assert_eq!((p.x, p.y), (11, 0));

        // Even a short module goes to the free columns rather than the gap
        // above the left block.
        let p = lif_place(&l, &ModuleSpec::new("d", 2, 1)).unwrap();
        assert_eq!(p.x, 11);
    }

    #[test]
    fn lif_rejects_when_fragmented() {
        // 4x4 device with a checkerboard of 1x1 modules: 8 free cells but no
        // free 2x1 slot.
        let mut l = Layout::new(Container::new(4, 4));
        for y in 0..4 {
            for x in 0..4 {
                if (x + y) % 2 == 0 {
                    l.place(ModuleSpec::new(format!("c{x}{y}"), 1, 1), x, y);
                }
            }
        }
        assert_eq!(free_area(&l), 8);
        assert_eq!(lif_place(&l, &ModuleSpec::new("new", 2, 1)), None);
    }

    #[test]
    fn lru_examples() {
        let mut l = device();
        l.place(ModuleSpec::new("a", 1, 1), 0, 0);
        l.place(ModuleSpec::new("b", 1, 1), 1, 0);
        l.place(ModuleSpec::new("c", 1, 1), 2, 0);
        let stamps: HashMap<String, u64> = [("a", 5), ("b", 2), ("c", 9)]
            .map(|(k, v)| (k.to_string(), v))
            .into();
        assert_eq!(lru_evict(&l, &stamps).unwrap(), "b");
        let flat: HashMap<String, u64> = [("c", 1), ("b", 1), ("a", 1)]
            .map(|(k, v)| (k.to_string(), v))
            .into();
        assert_eq!(lru_evict(&l, &flat).unwrap(), "a");
        assert!(matches!(lru_evict(&device(), &flat), Err(Error::NothingToEvict)));
    }

    #[test]
    fn low_usage_removal() {
        let mut l = device();
        for i in 0..11u32 {
            let usage = if i >= 9 { 0 } else { 5 };
            l.place(
                ModuleSpec::new(format!("M{}", i + 1), 1, 1).with_usage(usage),
                i,
                0,
            );
        }
        assert!(remove_low_usage(&mut l.clone(), 0).is_empty());
        let removed = remove_low_usage(&mut l, 1);
        assert_eq!(removed, vec!["M10".to_string(), "M11".to_string()]);
        assert_eq!(l.placements.len(), 9);
        remove_low_usage(&mut l, u64::MAX);
        assert!(l.placements.is_empty());
    }

    #[test]
    fn empty_scenario_reports_initial_state() {
        let mut l = device();
        l.place(ModuleSpec::new("a", 3, 3), 4, 4);
        let r = run_scenario(&l, &[], &RunOptions::default()).unwrap();
        assert_eq!(r.rows(), vec![ReportRow::at("final", &l)]);
    }

    #[test]
    fn departing_unknown_module_is_malformed() {
        let events = vec![ScenarioEvent::Depart { id: "nope".into() }];
        let err = run_scenario(&device(), &events, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedEvent { index: 0, .. }));
    }

    #[test]
    fn rearrival_counts_as_use() {
        let m = ModuleSpec::new("a", 2, 2).with_usage(1);
        let events = vec![ScenarioEvent::Arrive(m.clone()), ScenarioEvent::Arrive(m)];
        let r = run_scenario(&device(), &events, &RunOptions::default()).unwrap();
        assert_eq!(r.steps[1].outcome, Outcome::Used { usage: 2 });
        assert_eq!(r.final_layout().placements.len(), 1);
    }

    #[test]
    fn event_json_shape() {
        let text = r#"[{"type": "arrive", "id": "M1", "width": 2, "height": 3, "usage": 4},
                       {"type": "depart", "id": "M1"},
                       {"type": "remove_low_usage", "threshold": 2},
                       {"type": "defragment"}]"#;
        let events: Vec<ScenarioEvent> = serde_json::from_str(text).unwrap();
        assert_eq!(
            events[0],
            ScenarioEvent::Arrive(ModuleSpec::new("M1", 2, 3).with_usage(4))
        );
        assert_eq!(events[3], ScenarioEvent::Defragment);
        let back: Vec<ScenarioEvent> =
            serde_json::from_str(&serde_json::to_string(&events).unwrap()).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn generator_is_deterministic() {
        let p = ScenarioParams::default();
        let a = serde_json::to_string(&generate_scenario(7, &p).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_scenario(7, &p).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&generate_scenario(8, &p).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_rejects_bad_params() {
        let p = ScenarioParams {
            width: (1, 20),
            ..ScenarioParams::default()
        };
        assert!(matches!(generate_scenario(1, &p), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn table_columns() {
        let l = device();
        let t = format_table(&[ReportRow::between("A", &l, &l)]);
        let mut lines = t.lines();
        assert!(lines.next().unwrap().starts_with("Scenario | |I| | Free space"));
        lines.next();
        let row = lines.next().unwrap();
        assert!(row.contains("13x11"), "{row}");
    }
}
