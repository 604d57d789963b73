use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fjc;
use crate::linalg;
use crate::problem::{MooProblem, PointClass, PointSet};

/// Segment-parameter resolution of the boundary bisection.
pub const BISECTION_TOLERANCE: f64 = 1e-10;
/// Step halvings tried before a point is left in place for the round.
pub const MAX_HALVINGS: usize = 40;
/// Largest step as a multiple of the base step.
pub const MAX_STEP_GROWTH: f64 = (1u64 << 20) as f64;

/// Damping increases tried per Levenberg-Marquardt step.
pub const MAX_DAMPING_TRIES: usize = 30;
/// Most maximal minors handled by the Gauss-Newton refinement.
pub const MAX_MINORS: usize = 10_000;

/// How candidates move down the residual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentMethod {
    /// Projected gradient steps on `det(LᵀL)` with backtracking.
    #[default]
    Gradient,
    /// Projected Levenberg-Marquardt steps on the vector of maximal minors
    /// of `L`, whose squared norm is `det(LᵀL)`.
    GaussNewton,
}

impl DescentMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DescentMethod::Gradient => "gradient",
            DescentMethod::GaussNewton => "gauss-newton",
        }
    }
}

impl std::str::FromStr for DescentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(DescentMethod::Gradient),
            "gauss-newton" => Ok(DescentMethod::GaussNewton),
            other => Err(Error::rejected(format!(
                "unknown descent method '{other}' (expected gradient or gauss-newton)"
            ))),
        }
    }
}

/// Residual and gradient evaluations spent so far. A minor Jacobian costs
/// the same `2n` bundle evaluations as a residual gradient and is counted
/// with them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvaluationCounter {
    pub residuals: u64,
    pub gradients: u64,
}

impl EvaluationCounter {
    /// Bundle evaluations: one per residual, `2n` per gradient.
    pub fn total(&self, n: usize) -> u64 {
        self.residuals + 2 * n as u64 * self.gradients
    }
}

/// `Σ det(LᵀL)²` over the candidate set.
pub fn outer_error(p: &MooProblem, set: &PointSet, constrained: bool) -> Result<f64> {
    match &set.residuals {
        Some(r) if r.len() == set.len() => Ok(r.iter().map(|v| v * v).sum()),
        _ => set.points.iter().try_fold(0.0, |acc, x| {
            let r = fjc::residual(p, x, constrained)?;
            Ok(acc + r * r)
        }),
    }
}

/// Moves from the feasible point `from` towards `to`, stopping at the
/// feasible boundary when the segment leaves the feasible set.
///
/// The target is first clamped into the box, so steps slide along box
/// faces. If the clamped target still violates a functional constraint,
/// the segment is bisected down to [`BISECTION_TOLERANCE`] and the last
/// feasible point is returned.
pub fn project_feasible(p: &MooProblem, from: &[f64], to: &[f64]) -> Result<Vec<f64>> {
    p.check_dim(to)?;
    if !p.is_feasible(from)? {
        return Err(Error::Contract(format!(
            "projection must start from a feasible point, got {from:?}"
        )));
    }
    let mut target = to.to_vec();
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite projection target", Some(to)));
    }
    p.clamp_to_box(&mut target);
    if p.is_feasible(&target)? {
        return Ok(target);
    }
    let along = |t: f64| -> Vec<f64> {
        let mut y: Vec<f64> = from
            .iter()
            .zip(&target)
            .map(|(a, b)| a + t * (b - a))
            .collect();
        p.clamp_to_box(&mut y);
        y
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if p.is_feasible(&along(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(along(lo))
}

/// One fixed-step update of every point: `x ← project(x, x − η ∇r(x))`.
pub fn descent_step(
    p: &MooProblem,
    set: &PointSet,
    eta: f64,
    constrained: bool,
) -> Result<PointSet> {
    if !(eta > 0.0) {
        return Err(Error::rejected("eta must be positive"));
    }
    let mut points = Vec::with_capacity(set.len());
    let mut residuals = Vec::with_capacity(set.len());
    for x in &set.points {
        let g = fjc::residual_gradient(p, x, constrained)?;
        let to: Vec<f64> = x.iter().zip(&g).map(|(v, d)| v - eta * d).collect();
        let y = project_feasible(p, x, &to)?;
        residuals.push(fjc::residual(p, &y, constrained)?);
        points.push(y);
    }
    Ok(PointSet {
        class: set.class,
        points,
        residuals: Some(residuals),
    })
}

/// Settings for [`refine`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct RefineSettings {
    pub method: DescentMethod,
    pub eta: f64,
    pub substeps: usize,
    pub fd_step: f64,
    pub constrained: bool,
}

/// One round of refinement for a single candidate.
pub(crate) fn refine(
    p: &MooProblem,
    x: &[f64],
    residual: f64,
    s: RefineSettings,
    counter: &mut EvaluationCounter,
) -> Result<(Vec<f64>, f64)> {
    match s.method {
        DescentMethod::Gradient => refine_gradient(p, x, residual, s, counter),
        DescentMethod::GaussNewton => refine_gauss_newton(p, x, residual, s, counter),
    }
}

/// Up to `substeps` projected gradient steps on the residual. Each step
/// starts from the last accepted length, is halved until the residual
/// strictly drops and is doubled after acceptance. The point stays put for
/// the rest of the round once no decrease is found.
fn refine_gradient(
    p: &MooProblem,
    x: &[f64],
    residual: f64,
    s: RefineSettings,
    counter: &mut EvaluationCounter,
) -> Result<(Vec<f64>, f64)> {
    let mut x = x.to_vec();
    let mut r = residual;
    let mut step = s.eta;
    let max_step = s.eta * MAX_STEP_GROWTH;
    for _ in 0..s.substeps {
        let g = fjc::residual_gradient_with_step(p, &x, s.constrained, s.fd_step)?;
        counter.gradients += 1;
        if g.iter().all(|d| *d == 0.0) {
            break;
        }
        let mut trial = step;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let to: Vec<f64> = x.iter().zip(&g).map(|(v, d)| v - trial * d).collect();
            let y = project_feasible(p, &x, &to)?;
            let ry = fjc::residual(p, &y, s.constrained)?;
            counter.residuals += 1;
            if ry < r {
                x = y;
                r = ry;
                step = (2.0 * trial).min(max_step);
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, r))
}

/// Up to `substeps` Levenberg-Marquardt steps on the maximal minors
/// `m(x)`, solving `(JᵀJ + μ(I + diag JᵀJ)) d = Jᵀm`. Damping shrinks after
/// an accepted step and grows until the residual strictly drops.
fn refine_gauss_newton(
    p: &MooProblem,
    x: &[f64],
    residual: f64,
    s: RefineSettings,
    counter: &mut EvaluationCounter,
) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    let mut x = x.to_vec();
    let mut r = residual;
    let mut damping = 1e-3;
    for _ in 0..s.substeps {
        if r == 0.0 {
            break;
        }
        let (m, jac) = fjc::minors_jacobian(p, &x, s.constrained, s.fd_step)?;
        counter.gradients += 1;
        let normal = linalg::gram(&jac);
        let rhs = jac.transpose().mul_vec(&m)?;
        let mut accepted = false;
        for _ in 0..MAX_DAMPING_TRIES {
            let mut a = normal.clone();
            for i in 0..n {
                a[(i, i)] += damping * (1.0 + normal[(i, i)]);
            }
            let Ok(d) = linalg::solve(&a, &rhs) else {
                damping *= 4.0;
                continue;
            };
            let to: Vec<f64> = x.iter().zip(&d).map(|(v, dv)| v - dv).collect();
            let y = project_feasible(p, &x, &to)?;
            let ry = fjc::residual(p, &y, s.constrained)?;
            counter.residuals += 1;
            if ry < r {
                x = y;
                r = ry;
                damping = (damping / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, r))
}

/// Checks that the Gauss-Newton refinement can handle `L` at this size.
pub(crate) fn check_minor_budget(p: &MooProblem, constrained: bool) -> Result<()> {
    let extra = if constrained { p.m() } else { 0 };
    let count = fjc::minor_count(p.n() + extra, p.k() + extra);
    match count {
        Some(c) if c <= MAX_MINORS => Ok(()),
        _ => Err(Error::rejected(format!(
            "L has more than {MAX_MINORS} maximal minors; use gradient descent"
        ))),
    }
}

/// Adaptive descent of a whole candidate set; see [`refine`].
pub(crate) fn refine_set(
    p: &MooProblem,
    set: &PointSet,
    s: RefineSettings,
    counter: &mut EvaluationCounter,
) -> Result<PointSet> {
    let residuals = set
        .residuals
        .as_ref()
        .filter(|r| r.len() == set.len())
        .ok_or_else(|| Error::Contract("candidate residuals must be cached".into()))?;
    let mut points = Vec::with_capacity(set.len());
    let mut out = Vec::with_capacity(set.len());
    for (x, &r) in set.points.iter().zip(residuals) {
        let (y, ry) = refine(p, x, r, s, counter)?;
        points.push(y);
        out.push(ry);
    }
    Ok(PointSet {
        class: PointClass::Candidate,
        points,
        residuals: Some(out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BenchmarkId;
    use approx::assert_relative_eq;

    fn candidates(points: Vec<Vec<f64>>) -> PointSet {
        PointSet::new(PointClass::Candidate, points)
    }

    #[test]
    fn outer_error_examples() {
        let quad = BenchmarkId::Quad.build().problem;
        let on = candidates(vec![vec![0.3, 0.3], vec![-0.7, -0.7]]);
        assert!(outer_error(&quad, &on, false).unwrap() <= 1e-18);
        let off = candidates(vec![vec![1.0, 0.0]]);
        assert_relative_eq!(
            outer_error(&quad, &off, false).unwrap(),
            4096.0,
            max_relative = 1e-12
        );
        let pts = vec![vec![0.2, -0.4], vec![0.9, 0.1]];
        let once = outer_error(&quad, &candidates(pts.clone()), false).unwrap();
        let doubled: Vec<_> = pts.iter().chain(&pts).cloned().collect();
        let twice = outer_error(&quad, &candidates(doubled), false).unwrap();
        assert_relative_eq!(twice, 2.0 * once, max_relative = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let case1 = BenchmarkId::CaseI.build().problem;
        assert_eq!(
            project_feasible(&case1, &[0.5, 0.0], &[0.5, 0.1]).unwrap(),
            vec![0.5, 0.1]
        );
        assert_eq!(
            project_feasible(&case1, &[0.9, 0.0], &[1.2, 0.0]).unwrap(),
            vec![1.0, 0.0]
        );
        assert!(matches!(
            project_feasible(&case1, &[1.5, 0.0], &[0.5, 0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn projection_stops_at_curved_constraint() {
        let case3 = BenchmarkId::CaseIII.build().problem;
        let from = [0.8, 0.8];
        let to = [0.5, 0.5];
        assert!(case3.is_feasible(&from).unwrap());
        assert!(!case3.is_feasible(&to).unwrap());
        let y = project_feasible(&case3, &from, &to).unwrap();
        assert!(case3.is_feasible(&y).unwrap());
        assert!(case3.constraint_values(&y)[1].abs() <= 1e-8);
        // Independent check: a hair further along the segment is infeasible.
        let t = (y[0] - from[0]) / (to[0] - from[0]) + 1e-9;
        let beyond = [
            from[0] + t * (to[0] - from[0]),
            from[1] + t * (to[1] - from[1]),
        ];
        assert!(!case3.is_feasible(&beyond).unwrap());
    }

    #[test]
    fn fixed_step_matches_hand_update() {
        let quad = BenchmarkId::Quad.build().problem;
        let set = candidates(vec![vec![1.0, 0.0]]);
        let next = descent_step(&quad, &set, 0.001, false).unwrap();
        assert!((next.points[0][0] - 0.872).abs() <= 1e-3);
        assert!((next.points[0][1] - 0.128).abs() <= 1e-3);
        let r = next.residuals.unwrap()[0];
        assert_relative_eq!(r, 64.0 * (0.744f64).powi(2), max_relative = 1e-3);
    }

    #[test]
    fn fixed_step_leaves_manifold_points_in_place() {
        let quad = BenchmarkId::Quad.build().problem;
        let set = candidates(vec![vec![0.25, 0.25]]);
        let eta = 0.01;
        let next = descent_step(&quad, &set, eta, false).unwrap();
        let moved: f64 = next.points[0]
            .iter()
            .zip(&set.points[0])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(moved <= 1e-4 * eta);
    }

    #[test]
    fn refine_drives_residual_down_and_counts() {
        let case1 = BenchmarkId::CaseI.build().problem;
        let x = vec![0.3, 1.2];
        let r0 = fjc::residual(&case1, &x, false).unwrap();
        let mut counter = EvaluationCounter::default();
        let settings = RefineSettings {
            method: DescentMethod::Gradient,
            eta: 0.01,
            substeps: 100,
            fd_step: fjc::FD_STEP,
            constrained: false,
        };
        let (y, r) = refine(&case1, &x, r0, settings, &mut counter).unwrap();
        assert!(r < 1e-12, "{r}");
        assert!(y[1].abs() < 1e-6);
        assert!(counter.gradients >= 1 && counter.gradients <= 100);
        assert!(counter.residuals >= counter.gradients - 1);
        assert_eq!(counter.total(2), counter.residuals + 4 * counter.gradients);
    }

    #[test]
    fn gauss_newton_reaches_the_curved_case2_set() {
        let case = crate::problem::case2_with_dims(10).unwrap();
        let starts = case.problem.sample_feasible(20, 5).unwrap();
        let settings = RefineSettings {
            method: DescentMethod::GaussNewton,
            eta: 0.01,
            substeps: 100,
            fd_step: fjc::FD_STEP,
            constrained: false,
        };
        let mut reached = 0;
        for x in &starts.points {
            let r0 = fjc::residual(&case.problem, x, false).unwrap();
            let mut counter = EvaluationCounter::default();
            let (y, r) = refine(&case.problem, x, r0, settings, &mut counter).unwrap();
            assert!(r <= r0);
            assert!(case.problem.is_feasible(&y).unwrap());
            if r <= 1e-10 && case.point_error(&y) <= 1e-4 {
                reached += 1;
            }
        }
        assert!(reached >= 14, "{reached}/20");
    }

    #[test]
    fn method_names_round_trip() {
        for m in [DescentMethod::Gradient, DescentMethod::GaussNewton] {
            assert_eq!(m.as_str().parse::<DescentMethod>().unwrap(), m);
        }
        assert!("newton".parse::<DescentMethod>().is_err());
    }
}
