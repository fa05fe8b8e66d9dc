//! Benchmark inputs: the bundled pre-defragmentation layouts.

use std::path::Path;

use packclass_core::Layout;

pub const LABELS: [&str; 10] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J"];

pub fn fixture_layout(label: &str) -> Layout {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/layouts/{label}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Layout::from_json(&text).expect("fixture parses")
}
