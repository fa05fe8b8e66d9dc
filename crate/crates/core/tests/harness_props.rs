use std::collections::HashMap;

use packclass_core::{
    generate_scenario, lif_place, lru_evict, max_free_rectangle, run_scenario, validate_layout, Container,
    Layout, ModuleSpec, ReportRow, RunOptions, Scenario, ScenarioEvent, ScenarioParams,
};
use proptest::prelude::*;

fn small_params() -> ScenarioParams {
    ScenarioParams {
        container: Container::new(8, 6),
        modules: (3, 6),
        width: (1, 3),
        height: (1, 4),
        busy_requests: 15,
        ..ScenarioParams::default()
    }
}

/// Any top-left corner where the module fits on free cells.
fn some_slot_exists(layout: &Layout, m: &ModuleSpec) -> bool {
    let c = layout.container;
    if m.width > c.width || m.height > c.height {
        return false;
    }
    (0..=c.width - m.width).any(|x| {
        (0..=c.height - m.height).any(|y| {
            let mut probe = layout.clone();
            probe.place(ModuleSpec::new("__probe", m.width, m.height), x, y);
            validate_layout(&probe).is_empty()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Random arrivals with LRU eviction on a small device: every step
    /// keeps the layout valid and LIF only rejects when nothing fits.
    #[test]
    fn arrival_loop_stays_valid(
        requests in proptest::collection::vec((1u32..=4, 1u32..=4), 1..40)
    ) {
        let mut layout = Layout::new(Container::new(6, 5));
        let mut last_use = HashMap::new();
        for (t, (w, h)) in requests.into_iter().enumerate() {
            let m = ModuleSpec::new(format!("r{t}"), w, h);
            loop {
                match lif_place(&layout, &m) {
                    Some(p) => {
                        layout.place(m.clone(), p.x, p.y);
                        last_use.insert(m.id.clone(), t as u64);
                        break;
                    }
                    None => {
                        prop_assert!(!some_slot_exists(&layout, &m));
                        let victim = lru_evict(&layout, &last_use).unwrap();
                        prop_assert!(layout.remove(&victim));
                    }
                }
            }
            prop_assert!(validate_layout(&layout).is_empty());
        }
    }

    /// When a whole free band is wide enough, LIF touches no module.
    #[test]
    fn lif_uses_free_columns_first(
        blocks in proptest::collection::vec((0u32..10, 1u32..=3, 1u32..=4), 0..5),
        (w, h) in (1u32..=3, 1u32..=6),
    ) {
        let mut layout = Layout::new(Container::new(10, 6));
        for (i, (x, bw, bh)) in blocks.into_iter().enumerate() {
            let mut probe = layout.clone();
            probe.place(ModuleSpec::new(format!("b{i}"), bw, bh), x, 0);
            if validate_layout(&probe).is_empty() {
                layout = probe;
            }
        }
        let free = packclass_core::free_columns(&layout).columns;
        let band = free
            .windows(w as usize)
            .any(|win| win.last().unwrap() - win[0] + 1 == w);
        let m = ModuleSpec::new("new", w, h);
        let p = lif_place(&layout, &m);
        if band {
            let p = p.expect("a free band holds it");
            let touched = layout.placed().filter(|(_, r)| r.x < p.x + w && p.x < r.x + r.width).count();
            prop_assert_eq!(touched, 0);
        }
        prop_assert_eq!(lif_place(&layout, &m).is_some(), some_slot_exists(&layout, &m));
    }

    #[test]
    fn generated_scenarios_replay_cleanly(seed in 0u64..10_000) {
        let scenario = generate_scenario(seed, &small_params()).unwrap();
        prop_assert_eq!(&scenario, &generate_scenario(seed, &small_params()).unwrap());
        prop_assert_eq!(scenario.events.last(), Some(&ScenarioEvent::Defragment));

        // Departures only ever name modules that are placed at that point.
        let report = run_scenario(&scenario.initial_layout(), &scenario.events, &RunOptions::default()).unwrap();
        let mut previous = &report.initial;
        for step in &report.steps {
            prop_assert!(validate_layout(&step.layout).is_empty());
            if let ScenarioEvent::Depart { id } = &step.event {
                prop_assert!(previous.is_placed(id));
            }
            previous = &step.layout;
        }

        // Report rows agree with metrics recomputed from the step snapshots.
        let rows = report.rows();
        let mut before = &report.initial;
        let mut k = 0;
        for step in &report.steps {
            if step.event == ScenarioEvent::Defragment {
                let expect = ReportRow::between(format!("defrag@{}", step.index), before, &step.layout);
                prop_assert_eq!(&rows[k], &expect);
                prop_assert_eq!(rows[k].after_max_rect, Some(max_free_rectangle(&step.layout)));
                k += 1;
            }
            before = &step.layout;
        }
        prop_assert_eq!(rows.len(), k + 1);
    }
}

#[test]
fn scenarios_roundtrip_through_json() {
    let s = generate_scenario(7, &ScenarioParams::default()).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(Scenario::from_json(&text).unwrap(), s);
}

#[test]
fn default_scenarios_defragment_without_losing_columns() {
    for seed in 0..20 {
        let s = generate_scenario(seed, &ScenarioParams::default()).unwrap();
        let report = run_scenario(&s.initial_layout(), &s.events, &RunOptions::default()).unwrap();
        let row = &report.rows()[0];
        assert!(
            row.after_free_columns.unwrap() >= row.before_free_columns,
            "seed {seed}"
        );
        assert_eq!(report.final_layout().placements.len(), row.modules, "seed {seed}");
    }
}

#[test]
fn usage_threshold_clears_rarely_used_modules_before_defragmenting() {
    let mut initial = Layout::new(Container::new(6, 4));
    initial.place(ModuleSpec::new("busy", 2, 4).with_usage(5), 0, 0);
    initial.place(ModuleSpec::new("idle", 2, 4).with_usage(0), 3, 0);
    let options = RunOptions {
        usage_threshold: Some(1),
        ..RunOptions::default()
    };
    let report = run_scenario(&initial, &[ScenarioEvent::Defragment], &options).unwrap();
    let after = report.final_layout();
    assert!(after.is_placed("busy"));
    assert!(!after.is_placed("idle"));
    assert_eq!(packclass_core::free_columns(after).count, 4);
}
