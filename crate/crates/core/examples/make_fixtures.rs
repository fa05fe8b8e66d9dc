//! Regenerates the bundled scenario fixtures.
//!
//! For each target row (module count, free space) the generator seeds are
//! scanned in order and the first seed whose layout at the defragment
//! event has exactly that many modules and the closest free space wins.
//! Writes `scenarios/<label>.json` and the layout just before the
//! defragment event as `layouts/<label>.json`.
//!
//! ```text
//! cargo run --release -p packclass-core --example make_fixtures -- fixtures
//! ```

use std::path::PathBuf;

use packclass_core::{free_area, generate_scenario, run_scenario, RunOptions, ScenarioParams};

const TARGETS: [(&str, usize, u64); 10] = [
    ("A", 11, 30),
    ("B", 9, 52),
    ("C", 9, 70),
    ("D", 9, 42),
    ("E", 6, 83),
    ("F", 6, 54),
    ("G", 5, 76),
    ("H", 6, 53),
    ("I", 5, 87),
    ("J", 6, 42),
];
const SEEDS: u64 = 20_000;

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    for sub in ["scenarios", "layouts"] {
        std::fs::create_dir_all(root.join(sub)).expect("create output directory");
    }
    for (label, modules, free) in TARGETS {
        let params = ScenarioParams {
            modules: (modules, modules),
            ..ScenarioParams::default()
        };
        let mut best = None;
        for seed in 0..SEEDS {
            let scenario = generate_scenario(seed, &params).expect("valid params");
            let busy = &scenario.events[..scenario.events.len() - 1];
            let report = run_scenario(&scenario.initial_layout(), busy, &RunOptions::default())
                .expect("generated events replay");
            let layout = report.final_layout();
            if layout.placements.len() != modules {
                continue;
            }
            let gap = free_area(layout).abs_diff(free);
            if best.as_ref().is_none_or(|(g, _, _, _)| gap < *g) {
                best = Some((gap, seed, scenario, layout.clone()));
            }
            if gap == 0 {
                break;
            }
        }
        let (gap, seed, scenario, layout) = best.expect("some seed reaches the module count");
        let text = serde_json::to_string_pretty(&scenario).expect("serializable") + "\n";
        std::fs::write(root.join(format!("scenarios/{label}.json")), text).expect("write fixture");
        std::fs::write(
            root.join(format!("layouts/{label}.json")),
            layout.to_json_pretty() + "\n",
        )
        .expect("write fixture");
        println!("{label}: |I|={modules} seed {seed} free space off by {gap}");
    }
}
