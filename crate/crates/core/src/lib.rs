//! Numerical laboratory for maximal spacelike graphs in generalized
//! Robertson-Walker spacetimes `I x_f F` with metric `-dt^2 + f(t)^2 g_F`.
//!
//! The pointwise and grid kernels are generic over [`Scalar`] (`f32` or `f64`);
//! the reporting layers ([`analysis`], [`verify`]) work in `f64`.

pub mod analysis;
pub mod discrete;
pub mod error;
pub mod expr;
pub mod fiber;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod solver;
pub mod verify;
pub mod warping;

pub use error::{Error, Result};
pub use expr::{Compiled, EvalError, Expr, Func, SyntaxError, SyntaxErrorKind};
pub use fiber::{Christoffel, Fiber, FiberKind};
pub use linalg::Mat;
pub use scalar::Scalar;
pub use warping::{Extrema, Interval, Quantity, WarpValues, Warping};

pub type Mat64 = Mat<f64>;
pub use geometry::{geometry_at, GeometryAtPoint, Maximality, PointJet};

pub type PointJet64 = PointJet<f64>;
pub type GeometryAtPoint64 = GeometryAtPoint<f64>;
pub use discrete::{Grid, GridFunction, NodeField};

pub type Grid64 = Grid<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub use model::Model;
pub use solver::{SolveReport, SolverConfig};

pub type SolverConfig64 = SolverConfig<f64>;
