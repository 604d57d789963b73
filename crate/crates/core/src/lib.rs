//! Pareto-front learning with Fritz-John residual descent.
//!
//! Candidate points are driven down `det(LᵀL)`, the Gram determinant of the
//! Fritz-John matrix, until they sit on the weak Pareto manifold. A small
//! neural classifier learns an indicator of that manifold from the
//! residual-derived labels, and each converged point carries trade-off
//! weights read off the null space of `L`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fjc;
pub mod linalg;
pub mod manifold;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use fjc::{FjcEvaluation, TradeoffVector};
pub use linalg::Matrix;
pub use manifold::{label_batch, InputScaling, LabeledBatch, ManifoldClassifier};
pub use problem::{
    catalog, BenchmarkCase, BenchmarkId, Bounds, FrontErrors, Function, MooProblem, PointClass,
    PointSet,
};
