use thiserror::Error;

use crate::geometry::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {}", join(.0))]
    InvalidLayout(Vec<Violation>),

    #[error("module {id} ({width}x{height}) does not fit in {rows} rows")]
    TooTall {
        id: String,
        width: u32,
        height: u32,
        rows: u32,
    },

    #[error("packing class still has undecided pairs")]
    IncompleteClass,

    #[error("packing class violates {0}")]
    ConditionsViolated(String),

    #[error("instance has {0} modules; at most {max} are supported", max = crate::graphs::MAX_VERTICES)]
    TooManyModules(usize),

    #[error("search space of {0} placements exceeds the brute-force cap")]
    SearchSpaceTooLarge(u128),

    #[error("search budget exhausted while probing width {width} (known bounds [{lower}, {upper}])")]
    BudgetExhausted { width: u32, lower: u32, upper: u32 },

    #[error("event {index}: {reason}")]
    MalformedEvent { index: usize, reason: String },

    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),

    #[error("no placed modules to evict")]
    NothingToEvict,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
