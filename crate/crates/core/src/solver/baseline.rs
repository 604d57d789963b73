use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::descent::project_feasible;
use crate::error::{Error, Result};
use crate::problem::MooProblem;

/// Slack allowed on `Σα = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Endpoint of one linear-scalarisation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub alpha: Vec<f64>,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

pub(crate) fn check_simplex(alpha: &[f64], k: usize) -> Result<()> {
    if alpha.len() != k {
        return Err(Error::rejected(format!(
            "weight vector has {} entries, problem has {k} objectives",
            alpha.len()
        )));
    }
    let sum: f64 = alpha.iter().sum();
    if alpha.iter().any(|a| !(*a >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::rejected(format!("{alpha:?} is not on the simplex")));
    }
    Ok(())
}

/// `count` evenly spaced weights `(t, 1 - t)` from `(0, 1)` to `(1, 0)`.
pub fn evenly_spaced_weights(count: usize) -> Vec<Vec<f64>> {
    match count {
        0 => Vec::new(),
        1 => vec![vec![0.5, 0.5]],
        _ => (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                vec![t, 1.0 - t]
            })
            .collect(),
    }
}

/// Projected gradient descent on `S(x) = Σ αᵢ fᵢ(x)` for every weight
/// vector, each from its own seeded feasible start. The endpoints are not
/// guaranteed Pareto optimal on non-convex fronts.
pub fn ls_baseline(
    p: &MooProblem,
    alphas: &[Vec<f64>],
    steps: usize,
    lr: f64,
    seed: u64,
) -> Result<Vec<BaselinePoint>> {
    if !(lr > 0.0) {
        return Err(Error::rejected("learning rate must be positive"));
    }
    for a in alphas {
        check_simplex(a, p.k())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    alphas
        .iter()
        .map(|alpha| {
            let mut x = p
                .sample_feasible_with(1, &mut rng)?
                .pop()
                .expect("one sample");
            for _ in 0..steps {
                let mut grad = vec![0.0; p.n()];
                for (a, f) in alpha.iter().zip(p.objectives()) {
                    for (g, d) in grad.iter_mut().zip(f.gradient(&x)) {
                        *g += a * d;
                    }
                }
                let to: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v - lr * g).collect();
                x = project_feasible(p, &x, &to)?;
            }
            let f = p.objective_values(&x);
            Ok(BaselinePoint {
                alpha: alpha.clone(),
                x,
                f,
            })
        })
        .collect()
}
