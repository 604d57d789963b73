//! The outer/inner solve loop and its post-processing.
//!
//! Each outer iteration trains the classifier on the current labelled data
//! `D = 𝒫0 ∪ 𝒫1`, measures `err = Σ det(LᵀL)²` over the candidates, and
//! stops once `err <= eps_outer · P` and every candidate residual is within
//! `eps_inner`, so that each candidate qualifies for the front. Otherwise every candidate takes a
//! round of projected gradient steps on its own residual. The background
//! set `𝒫0` is drawn once and never modified.

mod baseline;
mod descent;
mod pareto;
mod query;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fjc::{self, TradeoffVector};
use crate::manifold::{InputScaling, LabeledBatch, ManifoldClassifier, DEFAULT_HIDDEN};
use crate::problem::{BenchmarkCase, FrontErrors, MooProblem, PointClass, PointSet};

pub use baseline::{evenly_spaced_weights, ls_baseline, BaselinePoint, SIMPLEX_TOLERANCE};
pub use descent::{
    descent_step, outer_error, project_feasible, DescentMethod, EvaluationCounter,
    BISECTION_TOLERANCE, MAX_DAMPING_TRIES, MAX_HALVINGS, MAX_MINORS, MAX_STEP_GROWTH,
};
pub use pareto::{dominates, non_dominated_indices, pareto_filter, DOMINANCE_TOLERANCE};
pub use query::{query_by_tradeoff, query_front, TradeoffQuery};

/// Front points must satisfy `‖Lδ‖ <= NULL_RESIDUAL_LIMIT`.
pub const NULL_RESIDUAL_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Points per class.
    pub points: usize,
    pub eps_outer: f64,
    /// Residual threshold for the Pareto label and for front membership.
    pub eps_inner: f64,
    /// Initial step length of each descent round.
    pub eta: f64,
    pub epochs_per_iter: usize,
    pub steps_per_epoch: usize,
    pub max_outer_iters: usize,
    /// Refinement steps per candidate per outer iteration.
    pub descent_substeps: usize,
    pub descent: DescentMethod,
    /// Extra training rounds on the final data, stopping once the loss
    /// reaches `eps_inner`.
    pub final_training_rounds: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub hidden: Vec<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            points: 50,
            eps_outer: 1e-4,
            eps_inner: 1e-4,
            eta: 0.01,
            epochs_per_iter: 2,
            steps_per_epoch: 50,
            max_outer_iters: 50,
            descent_substeps: 100,
            descent: DescentMethod::Gradient,
            final_training_rounds: 20,
            seed: 0,
            fd_step: fjc::FD_STEP,
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_outer", self.eps_outer),
            ("eps_inner", self.eps_inner),
            ("eta", self.eta),
            ("fd_step", self.fd_step),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::rejected(format!("{name} must be positive, got {v}")));
        }
        if self.points == 0 {
            return Err(Error::rejected("points per class must be at least 1"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::rejected(
                "hidden widths must be non-empty and positive",
            ));
        }
        Ok(())
    }

    /// The stopping threshold on `err`.
    pub fn tolerance(&self) -> f64 {
        self.eps_outer * self.points as f64
    }
}

/// A converged point with its objective values and trade-off weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub residual: f64,
    pub tradeoff: TradeoffVector,
    /// Set the point came from.
    pub source: PointClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Benchmark id, when solving a catalog case.
    pub case: Option<String>,
    pub config: SolverConfig,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub constrained_fjc: bool,
    /// Descent rounds performed.
    pub iterations: usize,
    /// Bundle evaluations: `residual_evaluations + 2n · gradient_evaluations`.
    pub evaluations: u64,
    pub residual_evaluations: u64,
    pub gradient_evaluations: u64,
    /// `err` before each descent round and after the last one.
    pub outer_error_trace: Vec<f64>,
    /// Loss before every classifier update.
    pub bce_trace: Vec<f64>,
    /// Mean squared distance of `𝒫1` to the analytic optimum, per entry of
    /// `outer_error_trace`. Empty without a known front.
    pub mse_trace: Vec<f64>,
    /// `𝒫1` at the start and after every descent round.
    pub trajectories: Vec<PointSet>,
    pub front: Vec<FrontPoint>,
    /// Non-dominated subset of `front`.
    pub strong_front: Vec<FrontPoint>,
    /// Stationary points dropped because their multipliers change sign.
    pub sign_violations: usize,
    pub front_error: Option<FrontErrors>,
    pub wall_time: f64,
    pub converged: bool,
}

/// A report together with the trained indicator and the background set.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: SolveReport,
    pub classifier: ManifoldClassifier,
    pub background: PointSet,
}

/// Draws `𝒫0` and then `𝒫1` from one seeded stream.
pub fn initial_sets(p: &MooProblem, cfg: &SolverConfig) -> Result<(PointSet, PointSet)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let background = p.sample_feasible_with(cfg.points, &mut rng)?;
    let candidates = p.sample_feasible_with(cfg.points, &mut rng)?;
    Ok((
        PointSet::new(PointClass::Background, background),
        PointSet::new(PointClass::Candidate, candidates),
    ))
}

/// Solves a catalog benchmark and scores the result against its front.
pub fn solve(case: &BenchmarkCase, cfg: &SolverConfig) -> Result<Solution> {
    run(&case.problem, case.constrained_fjc, Some(case), cfg)
}

/// Solves an arbitrary problem; no front error is reported.
pub fn solve_problem(p: &MooProblem, constrained: bool, cfg: &SolverConfig) -> Result<Solution> {
    run(p, constrained, None, cfg)
}

fn residuals_of(
    p: &MooProblem,
    points: &[Vec<f64>],
    constrained: bool,
    counter: &mut EvaluationCounter,
) -> Result<Vec<f64>> {
    counter.residuals += points.len() as u64;
    points
        .iter()
        .map(|x| fjc::residual(p, x, constrained))
        .collect()
}

fn mean_squared_error(case: &BenchmarkCase, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| case.point_error(x).powi(2))
        .sum::<f64>()
        / points.len() as f64
}

fn run(
    p: &MooProblem,
    constrained: bool,
    case: Option<&BenchmarkCase>,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let started = Instant::now();
    let (mut background, mut candidates) = initial_sets(p, cfg)?;
    let mut counter = EvaluationCounter::default();
    background.residuals = Some(residuals_of(
        p,
        &background.points,
        constrained,
        &mut counter,
    )?);
    candidates.residuals = Some(residuals_of(
        p,
        &candidates.points,
        constrained,
        &mut counter,
    )?);
    let background = background;

    let mut classifier = ManifoldClassifier::new(p.n(), &cfg.hidden, cfg.seed)?
        .with_scaling(InputScaling::from_bounds(p.bounds()))?;
    if cfg.descent == DescentMethod::GaussNewton {
        descent::check_minor_budget(p, constrained)?;
    }
    let settings = descent::RefineSettings {
        method: cfg.descent,
        eta: cfg.eta,
        substeps: cfg.descent_substeps,
        fd_step: cfg.fd_step,
        constrained,
    };

    let mut outer_error_trace = Vec::new();
    let mut bce_trace = Vec::new();
    let mut mse_trace = Vec::new();
    let mut trajectories = vec![candidates.clone()];
    let mut iterations = 0;
    let converged = loop {
        let batch = labelled_data(&background, &candidates, cfg.eps_inner)?;
        bce_trace.extend(classifier.train(
            &batch,
            cfg.epochs_per_iter,
            cfg.steps_per_epoch,
            cfg.eps_inner,
        )?);

        let err = outer_error(p, &candidates, constrained)?;
        outer_error_trace.push(err);
        if let Some(case) = case {
            mse_trace.push(mean_squared_error(case, &candidates.points));
        }
        let worst = candidates
            .residuals
            .as_deref()
            .unwrap_or_default()
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        if err <= cfg.tolerance() && worst <= cfg.eps_inner {
            break true;
        }
        if iterations == cfg.max_outer_iters {
            break false;
        }
        candidates = descent::refine_set(p, &candidates, settings, &mut counter)?;
        trajectories.push(candidates.clone());
        iterations += 1;
    };

    let batch = labelled_data(&background, &candidates, cfg.eps_inner)?;
    for _ in 0..cfg.final_training_rounds {
        if bce_trace.last().is_some_and(|l| *l <= cfg.eps_inner) {
            break;
        }
        bce_trace.extend(classifier.train(
            &batch,
            cfg.epochs_per_iter,
            cfg.steps_per_epoch,
            cfg.eps_inner,
        )?);
    }

    let (front, sign_violations) = extract_front(p, constrained, cfg, &candidates, &background)?;
    let fs: Vec<&[f64]> = front.iter().map(|fp| fp.f.as_slice()).collect();
    let strong_front = non_dominated_indices(&fs)
        .into_iter()
        .map(|i| front[i].clone())
        .collect();
    let front_error = match case {
        Some(case) if !front.is_empty() => {
            let xs: Vec<&[f64]> = front.iter().map(|fp| fp.x.as_slice()).collect();
            Some(case.front_errors(&xs)?)
        }
        _ => None,
    };

    let report = SolveReport {
        case: case.map(|c| c.id.as_str().to_string()),
        config: cfg.clone(),
        n: p.n(),
        k: p.k(),
        m: p.m(),
        constrained_fjc: constrained,
        iterations,
        evaluations: counter.total(p.n()),
        residual_evaluations: counter.residuals,
        gradient_evaluations: counter.gradients,
        outer_error_trace,
        bce_trace,
        mse_trace,
        trajectories,
        front,
        strong_front,
        sign_violations,
        front_error,
        wall_time: started.elapsed().as_secs_f64(),
        converged,
    };
    Ok(Solution {
        report,
        classifier,
        background,
    })
}

fn labelled_data(background: &PointSet, candidates: &PointSet, eps: f64) -> Result<LabeledBatch> {
    let mut inputs = background.points.clone();
    inputs.extend(candidates.points.iter().cloned());
    let residuals: Vec<f64> = [background, candidates]
        .iter()
        .flat_map(|s| s.residuals.clone().unwrap_or_default())
        .collect();
    LabeledBatch::from_residuals(inputs, &residuals, eps)
}

/// Points of `𝒫1` and `𝒫0` below the residual threshold whose multipliers
/// are non-negative and solve `Lδ = 0` to [`NULL_RESIDUAL_LIMIT`].
fn extract_front(
    p: &MooProblem,
    constrained: bool,
    cfg: &SolverConfig,
    candidates: &PointSet,
    background: &PointSet,
) -> Result<(Vec<FrontPoint>, usize)> {
    let mut front = Vec::new();
    let mut sign_violations = 0;
    for set in [candidates, background] {
        let residuals = set.residuals.as_deref().unwrap_or_default();
        for (x, &r) in set.points.iter().zip(residuals) {
            if r.abs() > cfg.eps_inner {
                continue;
            }
            let tradeoff = match fjc::tradeoffs(p, x, constrained) {
                Ok(t) => t,
                Err(Error::SignViolation { .. }) => {
                    sign_violations += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if tradeoff.null_residual > NULL_RESIDUAL_LIMIT {
                continue;
            }
            front.push(FrontPoint {
                x: x.clone(),
                f: p.objective_values(x),
                residual: r,
                tradeoff,
                source: set.class,
            });
        }
    }
    Ok((front, sign_violations))
}
