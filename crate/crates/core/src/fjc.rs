//! Fritz-John rank test.
//!
//! At a weak Pareto point there is a non-zero, non-negative `δ = (λ, μ)`
//! with `L δ = 0`, where
//!
//! ```text
//!     L = | ∇F  ∇G |     (n+m) x (k+m)
//!         |  0   G |
//! ```
//!
//! holds the objective gradients, the constraint gradients and
//! `diag(g_1..g_m)`. Rank deficiency of `L` is measured by the Gram
//! determinant `det(LᵀL)`, which is also defined when `L` is not square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, gram, sym_eigen, Matrix};
use crate::problem::MooProblem;

/// Relative finite-difference step for [`residual_gradient`].
pub const FD_STEP: f64 = 1e-6;
/// Components of the unit null vector below this are genuine sign violations.
pub const SIGN_TOLERANCE: f64 = -1e-6;
/// Eigenvalues of `LᵀL` below `RANK_TOLERANCE * trace` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// The Fritz-John matrix at one point, its residual and residual gradient.
#[derive(Debug, Clone)]
pub struct FjcEvaluation {
    pub x: Vec<f64>,
    pub l: Matrix,
    pub residual: f64,
    pub gradient: Vec<f64>,
}

/// Multipliers recovered from the null space of `L`, normalised so that
/// `Σλ + Σμ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffVector {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// `‖L δ‖₂`.
    pub null_residual: f64,
    /// Number of near-zero eigenvalues of `LᵀL`.
    pub rank_deficiency: usize,
    /// Set when the null space has dimension two or more; `δ` is then one
    /// arbitrary member of it.
    pub degenerate: bool,
}

impl TradeoffVector {
    pub fn delta(&self) -> Vec<f64> {
        self.lambda.iter().chain(&self.mu).copied().collect()
    }
}

/// Whether constraints take part in `L` for this problem.
fn uses_constraints(p: &MooProblem, constrained: bool) -> bool {
    constrained && p.m() > 0
}

pub fn build_l(p: &MooProblem, x: &[f64], constrained: bool) -> Result<Matrix> {
    p.check_dim(x)?;
    let n = p.n();
    let k = p.k();
    let m = if uses_constraints(p, constrained) {
        p.m()
    } else {
        0
    };

    let mut l = Matrix::zeros(n + m, k + m);
    for (col, f) in p.objectives().iter().enumerate() {
        let g = f.gradient(x);
        if g.len() != n {
            return Err(Error::numerical(
                format!(
                    "objective {col} gradient has length {}, expected {n}",
                    g.len()
                ),
                Some(x),
            ));
        }
        for (row, v) in g.into_iter().enumerate() {
            l[(row, col)] = v;
        }
    }
    for (j, c) in p.constraints().iter().enumerate().take(m) {
        let col = k + j;
        let g = c.gradient(x);
        if g.len() != n {
            return Err(Error::numerical(
                format!(
                    "constraint {j} gradient has length {}, expected {n}",
                    g.len()
                ),
                Some(x),
            ));
        }
        for (row, v) in g.into_iter().enumerate() {
            l[(row, col)] = v;
        }
        l[(n + j, col)] = c.value(x);
    }
    if !l.is_finite() {
        return Err(Error::numerical(
            "non-finite entry in Fritz-John matrix",
            Some(x),
        ));
    }
    Ok(l)
}

/// `det(LᵀL)`; zero exactly on the weak Pareto set.
pub fn residual(p: &MooProblem, x: &[f64], constrained: bool) -> Result<f64> {
    let l = build_l(p, x, constrained)?;
    residual_of(&l, x)
}

fn residual_of(l: &Matrix, x: &[f64]) -> Result<f64> {
    let r = determinant(&gram(l))?;
    if !r.is_finite() {
        return Err(Error::numerical("non-finite residual", Some(x)));
    }
    Ok(r)
}

/// Central differences of [`residual`] with step `max(FD_STEP, FD_STEP·|x_i|)`.
pub fn residual_gradient(p: &MooProblem, x: &[f64], constrained: bool) -> Result<Vec<f64>> {
    residual_gradient_with_step(p, x, constrained, FD_STEP)
}

/// Like [`residual_gradient`] with a custom base step. Probes are clamped
/// into the box, so boundary coordinates fall back to a one-sided stencil.
pub fn residual_gradient_with_step(
    p: &MooProblem,
    x: &[f64],
    constrained: bool,
    step: f64,
) -> Result<Vec<f64>> {
    p.check_dim(x)?;
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for (i, b) in p.bounds().iter().enumerate() {
        let h = step.max(step * x[i].abs());
        let hi = b.clamp(x[i] + h);
        let lo = b.clamp(x[i] - h);
        probe[i] = hi;
        let r_hi = residual(p, &probe, constrained)?;
        probe[i] = lo;
        let r_lo = residual(p, &probe, constrained)?;
        probe[i] = x[i];
        let g = (r_hi - r_lo) / (hi - lo);
        if !g.is_finite() {
            return Err(Error::numerical(
                format!("non-finite residual gradient along coordinate {i}"),
                Some(x),
            ));
        }
        grad.push(g);
    }
    Ok(grad)
}

/// Number of maximal minors of an `rows x cols` matrix, if it fits in `usize`.
pub fn minor_count(rows: usize, cols: usize) -> Option<usize> {
    if cols > rows {
        return Some(0);
    }
    let c = cols.min(rows - cols);
    (0..c).try_fold(1usize, |acc, i| {
        acc.checked_mul(rows - i).map(|v| v / (i + 1))
    })
}

/// Lexicographic `size`-subsets of `0..n`.
fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..size).rev().find(|&i| idx[i] < n - size + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Determinants of all square row-subsets of `L`. By Cauchy-Binet their
/// squares sum to `det(LᵀL)`, which makes the residual a sum of squares.
pub fn maximal_minors(p: &MooProblem, x: &[f64], constrained: bool) -> Result<Vec<f64>> {
    let l = build_l(p, x, constrained)?;
    subsets(l.rows(), l.cols())
        .iter()
        .map(|rows| determinant(&l.select_rows(rows)))
        .collect()
}

/// Maximal minors at `x` and their Jacobian (one row per minor) by central
/// differences, with probes clamped into the box as in
/// [`residual_gradient_with_step`].
pub fn minors_jacobian(
    p: &MooProblem,
    x: &[f64],
    constrained: bool,
    step: f64,
) -> Result<(Vec<f64>, Matrix)> {
    p.check_dim(x)?;
    let m0 = maximal_minors(p, x, constrained)?;
    let mut jac = Matrix::zeros(m0.len(), x.len());
    let mut probe = x.to_vec();
    for (i, b) in p.bounds().iter().enumerate() {
        let h = step.max(step * x[i].abs());
        let hi = b.clamp(x[i] + h);
        let lo = b.clamp(x[i] - h);
        probe[i] = hi;
        let m_hi = maximal_minors(p, &probe, constrained)?;
        probe[i] = lo;
        let m_lo = maximal_minors(p, &probe, constrained)?;
        probe[i] = x[i];
        for (r, (a, c)) in m_hi.iter().zip(&m_lo).enumerate() {
            let d = (a - c) / (hi - lo);
            if !d.is_finite() {
                return Err(Error::numerical(
                    format!("non-finite minor derivative along coordinate {i}"),
                    Some(x),
                ));
            }
            jac[(r, i)] = d;
        }
    }
    Ok((m0, jac))
}

pub fn evaluate(p: &MooProblem, x: &[f64], constrained: bool) -> Result<FjcEvaluation> {
    let l = build_l(p, x, constrained)?;
    let residual = residual_of(&l, x)?;
    let gradient = residual_gradient(p, x, constrained)?;
    Ok(FjcEvaluation {
        x: x.to_vec(),
        l,
        residual,
        gradient,
    })
}

/// Recovers `δ` from the eigenvector of `LᵀL` with the smallest
/// eigenvalue.
///
/// Fails with [`Error::SignViolation`] when the null vector has a
/// component below [`SIGN_TOLERANCE`] after orienting its largest entry
/// positive: such a point is stationary but not weak Pareto.
pub fn tradeoffs(p: &MooProblem, x: &[f64], constrained: bool) -> Result<TradeoffVector> {
    let l = build_l(p, x, constrained)?;
    let g = gram(&l);
    let eig = sym_eigen(&g)?;
    let mut v = eig.vectors.column(0);

    let pivot = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .expect("L has at least two columns");
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    let min_component = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min_component < SIGN_TOLERANCE {
        return Err(Error::SignViolation {
            min_component,
            delta: v,
        });
    }
    v.iter_mut().for_each(|c| *c = c.max(0.0));
    let sum: f64 = v.iter().sum();
    let delta: Vec<f64> = v.iter().map(|c| c / sum).collect();

    let null_residual = l.mul_vec(&delta)?.iter().map(|r| r * r).sum::<f64>().sqrt();
    let cutoff = RANK_TOLERANCE * g.trace();
    let rank_deficiency = eig.values.iter().filter(|&&e| e <= cutoff).count();

    let k = p.k();
    Ok(TradeoffVector {
        lambda: delta[..k].to_vec(),
        mu: delta[k..].to_vec(),
        null_residual,
        rank_deficiency,
        degenerate: rank_deficiency >= 2,
    })
}
