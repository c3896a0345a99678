use thiserror::Error;

/// Failures of the physical property models and coefficient helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("temperature {0} °C is outside the viscosity model's domain (must be finite and > 0)")]
    Domain(f64),
    #[error("segment range {anchor}..{end} is outside gap {gap} with {len} segments")]
    Index {
        gap: usize,
        anchor: usize,
        end: usize,
        len: usize,
    },
    #[error("`{what}` has {found} entries, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

/// A scenario that violates a structural invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}
