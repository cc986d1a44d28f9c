//! Log-diffusion `v_t = Δ̄ ln v` on the plane: the Ricci flow of
//! `g = v (dx² + dy²)` in conformal gauge.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod metric;
pub mod soliton;
pub mod solver;

pub use error::{FlowError, Result};
pub use harness::{run_scenario, ScenarioConfig};
pub use metric::{
    Chart, Field, FlowState, GridSpec, InitialDataSpec, PlanarField, PlanarGrid, RadialGrid,
    RadialProfile,
};
pub use soliton::{classify_limit, LimitClassification, LimitTag, SolitonThresholds};
pub use solver::{
    evolve, BoundaryCondition, BoundaryKind, EvolveOptions, Scheme, StepController,
    TerminationStatus, Trajectory,
};
