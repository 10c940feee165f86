//! Solver and verification toolkit for stationary first-order mean-field
//! games on intervals and rectangles with mixed boundary conditions: a
//! prescribed agent influx on one part of the boundary and an exit cost with
//! outflow-only and contact-set conditions on the rest.
//!
//! The game is solved through its variational form: minimize
//! `∫ G(H(x, Dw)) dx − ∫ j w ds` over nodal fields `w` bounded above by the
//! exit cost at exit nodes, then recover the density as `m = G'(H(x, Du))`.
//! The crate also ships closed-form solution families used as oracles and a
//! diagnostics layer that checks weak-solution residuals, boundary and
//! contact conditions, energy estimates, operator monotonicity, and the
//! tangential-flux condition on the free boundary of the density.
//!
//! All numerics are generic over the floating-point scalar; `f64` aliases
//! for the main types live at the crate root.

// Validation code writes `!(x > y)` on purpose: a NaN parameter must count
// as a violation, not slip through a reversed comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod functional;
pub mod grid;
pub mod model;
pub mod optimizer;
pub mod scalar;
pub mod verify;

pub use scalar::{lit, Scalar, Vec2};

/// `f64` aliases for the common instantiation.
pub type Grid64 = grid::Grid<f64>;
pub type Field64 = grid::Field<f64>;
pub type CellField64 = grid::CellField<f64>;
pub type CellVectorField64 = grid::CellVectorField<f64>;
pub type ProblemSpec64 = model::ProblemSpec<f64>;
pub type Objective64 = functional::Objective<f64>;
pub type DensityFields64 = functional::DensityFields<f64>;
pub type SolveOptions64 = optimizer::SolveOptions<f64>;
pub type SolveReport64 = optimizer::SolveReport<f64>;
pub type Solution64 = optimizer::Solution<f64>;
pub type DiagnosticsReport64 = verify::DiagnosticsReport<f64>;

/// `f32` aliases; the whole pipeline is scalar-generic.
pub type Grid32 = grid::Grid<f32>;
pub type Field32 = grid::Field<f32>;
pub type CellField32 = grid::CellField<f32>;
pub type ProblemSpec32 = model::ProblemSpec<f32>;
pub type Objective32 = functional::Objective<f32>;
