//! Differentiable multi-objective problems and the benchmark catalog.
//!
//! A [`MooProblem`] bundles `k` objectives and `m` functional constraints
//! over a box in `R^n`. Constraints follow the `g(x) <= 0` convention. The
//! box is only a sampling and projection domain; it never enters the
//! Fritz-John matrix.

mod catalog;
mod front;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{case2_with_dims, catalog, BenchmarkCase, BenchmarkId, FrontErrors};
pub use front::{curve_distance, AnalyticFront};

/// Constraint values up to this are still feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-9;
/// Consecutive rejections allowed per requested sample.
pub const REJECTIONS_PER_SAMPLE: u64 = 10_000;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A scalar function paired with its gradient.
#[derive(Clone)]
pub struct Function {
    value: ScalarFn,
    gradient: VectorFn,
}

impl Function {
    pub fn new<F, G>(value: F, gradient: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

impl fmt::Debug for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Function")
    }
}

/// Closed interval `[lo, hi]` for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// Minimise `f_1..f_k` subject to `g_j(x) <= 0` and a box.
#[derive(Debug, Clone)]
pub struct MooProblem {
    bounds: Vec<Bounds>,
    objectives: Vec<Function>,
    constraints: Vec<Function>,
}

impl MooProblem {
    pub fn new(
        bounds: Vec<Bounds>,
        objectives: Vec<Function>,
        constraints: Vec<Function>,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::rejected("problem needs at least one variable"));
        }
        if objectives.len() < 2 {
            return Err(Error::rejected(format!(
                "multi-objective problem needs k >= 2 objectives, got {}",
                objectives.len()
            )));
        }
        if let Some((i, b)) = bounds
            .iter()
            .enumerate()
            .find(|(_, b)| !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite())
        {
            return Err(Error::rejected(format!(
                "bounds of coordinate {i} must satisfy lo < hi, got [{}, {}]",
                b.lo, b.hi
            )));
        }
        Ok(Self {
            bounds,
            objectives,
            constraints,
        })
    }

    /// Variable dimension.
    pub fn n(&self) -> usize {
        self.bounds.len()
    }

    /// Objective count.
    pub fn k(&self) -> usize {
        self.objectives.len()
    }

    /// Functional constraint count (box excluded).
    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn bounds(&self) -> &[Bounds] {
        &self.bounds
    }

    pub fn objectives(&self) -> &[Function] {
        &self.objectives
    }

    pub fn constraints(&self) -> &[Function] {
        &self.constraints
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::rejected(format!(
                "point has dimension {}, problem expects {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    pub fn objective_values(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|f| f.value(x)).collect()
    }

    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|g| g.value(x)).collect()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(&v, b)| b.contains(v))
    }

    pub fn clamp_to_box(&self, x: &mut [f64]) {
        for (v, b) in x.iter_mut().zip(&self.bounds) {
            *v = b.clamp(*v);
        }
    }

    /// Inside the box and every `g_j(x) <= FEASIBILITY_SLACK`.
    pub fn is_feasible(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.in_box(x)
            && self
                .constraints
                .iter()
                .all(|g| g.value(x) <= FEASIBILITY_SLACK))
    }

    /// Draws `count` points uniformly from the box and keeps the feasible
    /// ones. Deterministic for a fixed seed.
    pub fn sample_feasible(&self, count: usize, seed: u64) -> Result<PointSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = self.sample_feasible_with(count, &mut rng)?;
        Ok(PointSet::new(PointClass::Background, points))
    }

    pub(crate) fn sample_feasible_with<R: Rng>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::rejected("sample count must be at least 1"));
        }
        let budget = REJECTIONS_PER_SAMPLE.saturating_mul(count as u64);
        let mut out = Vec::with_capacity(count);
        let mut rejections = 0u64;
        while out.len() < count {
            let x: Vec<f64> = self
                .bounds
                .iter()
                .map(|b| rng.gen_range(b.lo..=b.hi))
                .collect();
            if self.is_feasible(&x)? {
                out.push(x);
                rejections = 0;
            } else {
                rejections += 1;
                if rejections >= budget {
                    return Err(Error::InfeasibleDomain { rejections });
                }
            }
        }
        Ok(out)
    }
}

/// Which side of the classifier a point set feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    /// Fixed background sample (non-Pareto class).
    Background,
    /// Pareto candidates refined by the outer descent.
    Candidate,
}

/// Ordered points in variable space with an optional residual cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub class: PointClass,
    pub points: Vec<Vec<f64>>,
    /// `det(LᵀL)` per point, once evaluated.
    pub residuals: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(class: PointClass, points: Vec<Vec<f64>>) -> Self {
        Self {
            class,
            points,
            residuals: None,
        }
    }

    pub fn with_class(mut self, class: PointClass) -> Self {
        self.class = class;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> MooProblem {
        MooProblem::new(
            vec![Bounds::new(0.0, 1.0)],
            vec![
                Function::new(|x| x[0], |_| vec![1.0]),
                Function::new(|x| 1.0 - x[0], |_| vec![-1.0]),
            ],
            vec![Function::new(|x| x[0] - 0.5, |_| vec![1.0])],
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_problems() {
        let one = vec![Function::new(|x| x[0], |_| vec![1.0])];
        assert!(MooProblem::new(vec![Bounds::new(0.0, 1.0)], one.clone(), vec![]).is_err());
        let two = vec![one[0].clone(), one[0].clone()];
        assert!(MooProblem::new(vec![], two.clone(), vec![]).is_err());
        assert!(MooProblem::new(vec![Bounds::new(1.0, 1.0)], two, vec![]).is_err());
    }

    #[test]
    fn feasibility_uses_slack_and_box() {
        let p = toy();
        assert!(p.is_feasible(&[0.5 + 0.5e-9]).unwrap());
        assert!(!p.is_feasible(&[0.6]).unwrap());
        assert!(!p.is_feasible(&[-0.1]).unwrap());
        assert!(matches!(
            p.is_feasible(&[0.1, 0.2]),
            Err(Error::Rejected(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_feasible() {
        let p = toy();
        let a = p.sample_feasible(40, 9).unwrap();
        let b = p.sample_feasible(40, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        assert!(a.points.iter().all(|x| p.is_feasible(x).unwrap()));
        assert!(p.sample_feasible(0, 1).is_err());
    }

    #[test]
    fn empty_feasible_set_exhausts_budget() {
        let p = MooProblem::new(
            vec![Bounds::new(0.0, 1.0)],
            toy().objectives().to_vec(),
            vec![Function::new(|_| 1.0, |_| vec![0.0])],
        )
        .unwrap();
        assert_eq!(
            p.sample_feasible(2, 0).unwrap_err(),
            Error::InfeasibleDomain { rejections: 20_000 }
        );
    }
}
