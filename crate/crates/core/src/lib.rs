//! Globally optimal pump and furnace scheduling for heated oil pipelines.
//!
//! The crate models a pipeline as a chain of stations joined by pipe
//! segments, prices a pumping and heating scheme by its daily energy cost,
//! and finds the cheapest feasible scheme by branch-and-bound over the pump
//! counts with linear outer-approximation bounds.
//!
//! Modules, bottom up:
//!
//! * [`model`]: viscosity, friction, heat loss, cost and temperature chains;
//! * [`scenario`]: the static pipeline description and its validation;
//! * [`scheme`]: forward propagation, feasibility, lifting and repair;
//! * [`preprocess`]: bound tightening of a pump-count box;
//! * [`lp`]: a dense bounded-variable simplex;
//! * [`relax`]: the relaxation LP, tangent cuts and the cutting-plane loop;
//! * [`bnb`]: the best-first search.

pub mod bnb;
mod bounds;
pub mod error;
pub mod lp;
pub mod model;
pub mod preprocess;
pub mod relax;
pub mod scenario;
pub mod scheme;

pub use bnb::{solve, SolveOptions, SolveReport, SolveStatus};
pub use error::{ModelError, ScenarioError};
pub use model::{FluidProps, FrictionModel, ViscosityModel};
pub use relax::NodeBounds;
pub use scenario::{EconomicParams, Interval, PipeSegment, Scenario, Station};
pub use scheme::{Scheme, SolutionVector};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pipeline-model.md")]
    mod pipeline_model {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    mod preprocessing {}
    #[doc = include_str!("../../../book/src/relaxation.md")]
    mod relaxation {}
    #[doc = include_str!("../../../book/src/branch-and-bound.md")]
    mod branch_and_bound {}
}
