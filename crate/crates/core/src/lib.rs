//! Space-time finite-volume schemes for scalar conservation laws in one space dimension.

// `!(a < b)` is how NaN gets rejected here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod initial;
pub mod model;
pub mod numerics;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

// f64 front door
pub type Grid = grid::SpaceTimeGrid<f64>;
pub type GridFn = grid::GridFunction<f64>;
pub type Metrics = grid::GridMetrics<f64>;
pub type Point = geometry::Point<f64>;
pub type Data = initial::Piecewise<f64>;
pub type Scheme<'a> = numerics::NumericalScheme<'a, f64>;
pub type Report = numerics::PropertyReport<f64>;
pub type Experiment = verify::Experiment<f64>;
pub type Table = verify::ConvergenceTable<f64>;
pub type Phi = verify::TestFunction<f64>;
