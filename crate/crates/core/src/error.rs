//! Error type shared by the geometry, discretization and solver layers.

use thiserror::Error;

use crate::expr::{EvalError, SyntaxError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("warping function is not positive at t = {t} (value {value})")]
    NotPositive { t: f64, value: f64 },
    #[error("empty interval ({lo}, {hi})")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("t = {t} lies outside the interval ({lo}, {hi})")]
    OutOfInterval { t: f64, lo: f64, hi: f64 },
    #[error("unbounded interval needs an explicit scan window")]
    ScanWindowRequired,
    #[error("point {point:?} lies outside the chart")]
    OutOfChart { point: Vec<f64> },
    #[error("graph is not spacelike (|Du|^2 = {du2}, f(u)^2 = {f2}){}", node_suffix(*.node))]
    NotSpacelike { du2: f64, f2: f64, node: Option<usize> },
    #[error("graph is not maximal at this point (H = {h})")]
    NotMaximal { h: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {node} is too close to the grid boundary")]
    BoundaryNode { node: usize },
    #[error("metric is degenerate at node {node}")]
    DegenerateMetric { node: usize },
    #[error("node {node} is not reachable from the source")]
    DisconnectedRegion { node: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("step could not be damped back into the spacelike region after {iterations} iterations")]
    SpacelikeViolation { iterations: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("{0}")]
    Format(String),
}

fn node_suffix(node: Option<usize>) -> String {
    node.map(|k| format!(" at node {k}")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;
