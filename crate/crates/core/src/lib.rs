//! Exact two-dimensional packing with packing classes, applied to
//! defragmenting module layouts on column-reconfigurable FPGAs.
//!
//! * [`geometry`]: modules, layouts, validation and fragmentation metrics.
//! * [`graphs`]: interval and comparability graph recognition, stable sets.
//! * [`packing_class`]: partial packing classes and their propagation.
//! * [`opp`]: the orthogonal packing decision procedure and its brute-force
//!   counterpart.
//! * [`bounds`]: area lower bound and shelf upper bounds on strip width.
//! * [`strip`]: minimum strip width by bisection, and defragmentation.
//! * [`harness`]: online placement simulator and report tables.

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod graphs;
pub mod harness;
pub mod opp;
pub mod packing_class;
pub mod strip;

pub use bounds::{compute_bounds, dff_refutes, shelf_pack, volume_lower_bound, Bounds, ShelfStrategy};
pub use error::{Error, Result};
pub use geometry::{
    column_interference, free_area, free_columns, max_free_rectangle, validate_layout, Axis, Container,
    FreeColumns, Interference, Layout, MetricsReport, ModuleSpec, Placement, Rect, Violation,
};
pub use harness::{
    generate_scenario, lif_place, lru_evict, remove_low_usage, run_scenario, ReportRow, RunOptions, Scenario,
    ScenarioEvent, ScenarioParams, ScenarioReport,
};
pub use opp::{brute_force_opp, solve_opp, OppResult, OppVerdict, SearchLimits, SearchStats};
pub use packing_class::{Conflict, EdgeFix, EdgeState, PackingClassState};
pub use strip::{defragment, min_strip_width, Defragmentation, StripResult};
