use serde::{Deserialize, Serialize};

use super::baseline::check_simplex;
use super::{FrontPoint, SolveReport};
use crate::error::{Error, Result};

/// Answer to a trade-off query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffQuery {
    pub alpha: Vec<f64>,
    pub x: Vec<f64>,
    /// `λ` of the returned point (interpolated between neighbours).
    pub lambda: Vec<f64>,
    /// Set when `α` lies outside the range of `λ` on the front and the
    /// nearest endpoint was returned instead.
    pub extrapolated: bool,
}

/// Design point for the trade-off weights `alpha`.
///
/// With two objectives the front is ordered by `λ₁` and `x` is linearly
/// interpolated between the two bracketing points. With more objectives
/// the nearest front point in `λ` is returned.
pub fn query_by_tradeoff(report: &SolveReport, alpha: &[f64]) -> Result<TradeoffQuery> {
    query_front(&report.front, alpha)
}

pub fn query_front(front: &[FrontPoint], alpha: &[f64]) -> Result<TradeoffQuery> {
    let first = front
        .first()
        .ok_or_else(|| Error::NoSolution("the front is empty".into()))?;
    let k = first.tradeoff.lambda.len();
    check_simplex(alpha, k)?;
    let answer = |p: &FrontPoint, extrapolated| TradeoffQuery {
        alpha: alpha.to_vec(),
        x: p.x.clone(),
        lambda: p.tradeoff.lambda.clone(),
        extrapolated,
    };

    if k != 2 {
        let dist = |p: &FrontPoint| -> f64 {
            p.tradeoff
                .lambda
                .iter()
                .zip(alpha)
                .map(|(l, a)| (l - a) * (l - a))
                .sum()
        };
        let best = front
            .iter()
            .min_by(|a, b| dist(a).total_cmp(&dist(b)))
            .expect("non-empty front");
        return Ok(answer(best, false));
    }

    let mut sorted: Vec<&FrontPoint> = front.iter().collect();
    sorted.sort_by(|a, b| a.tradeoff.lambda[0].total_cmp(&b.tradeoff.lambda[0]));
    let target = alpha[0];
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    if target < lo.tradeoff.lambda[0] {
        return Ok(answer(lo, true));
    }
    if target > hi.tradeoff.lambda[0] {
        return Ok(answer(hi, true));
    }
    if let Some(hit) = sorted.iter().find(|p| p.tradeoff.lambda[0] == target) {
        return Ok(answer(hit, false));
    }
    let upper = sorted
        .iter()
        .position(|p| p.tradeoff.lambda[0] > target)
        .expect("target below the largest λ₁");
    let (a, b) = (sorted[upper - 1], sorted[upper]);
    let w = (target - a.tradeoff.lambda[0]) / (b.tradeoff.lambda[0] - a.tradeoff.lambda[0]);
    let lerp = |u: &[f64], v: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(v)
            .map(|(p, q)| (1.0 - w) * p + w * q)
            .collect()
    };
    Ok(TradeoffQuery {
        alpha: alpha.to_vec(),
        x: lerp(&a.x, &b.x),
        lambda: lerp(&a.tradeoff.lambda, &b.tradeoff.lambda),
        extrapolated: false,
    })
}
