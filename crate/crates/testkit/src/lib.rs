//! Reference implementations and scenario builders used by the test suites.
//!
//! Everything here is written against the raw formulas and data types only,
//! so it can serve as an independent oracle for the solver crates.

pub mod cutting_stock;
pub mod grid;
pub mod instances;
pub mod lp_oracle;
pub mod physics;
pub mod sampling;
