use std::sync::OnceLock;

use proptest::prelude::*;
use suhnpf_core::fjc;
use suhnpf_core::problem::{case2_with_dims, BenchmarkId};
use suhnpf_core::solver::{
    descent_step, initial_sets, project_feasible, query_by_tradeoff, solve, DescentMethod,
    Solution, SolveReport, SolverConfig, NULL_RESIDUAL_LIMIT,
};
use suhnpf_core::{PointClass, PointSet};

fn solved(id: BenchmarkId) -> &'static Solution {
    static CELLS: [OnceLock<Solution>; 6] = [const { OnceLock::new() }; 6];
    let slot = BenchmarkId::ALL.iter().position(|c| *c == id).unwrap();
    CELLS[slot].get_or_init(|| solve(&id.build(), &SolverConfig::default()).unwrap())
}

fn dominated_brute_force(fs: &[Vec<f64>]) -> Vec<bool> {
    (0..fs.len())
        .map(|i| {
            (0..fs.len()).any(|j| {
                j != i
                    && fs[j].iter().zip(&fs[i]).all(|(a, b)| *a <= b + 1e-12)
                    && fs[j].iter().zip(&fs[i]).any(|(a, b)| *a < b - 1e-12)
            })
        })
        .collect()
}

fn check_report_invariants(id: BenchmarkId, r: &SolveReport) {
    let case = id.build();
    if r.converged {
        assert!(*r.outer_error_trace.last().unwrap() <= r.config.tolerance());
    } else {
        assert_eq!(r.iterations, r.config.max_outer_iters);
    }
    for fp in &r.front {
        assert!(fp.residual.abs() <= r.config.eps_inner);
        assert!(fp.tradeoff.delta().iter().all(|d| *d >= 0.0));
        assert!(fp.tradeoff.null_residual <= NULL_RESIDUAL_LIMIT);
        assert!(case.problem.is_feasible(&fp.x).unwrap());
    }
    // Strong front equals pairwise filtering of the weak front.
    let fs: Vec<Vec<f64>> = r.front.iter().map(|fp| fp.f.clone()).collect();
    let dominated = dominated_brute_force(&fs);
    let expected: Vec<_> = r
        .front
        .iter()
        .zip(&dominated)
        .filter(|(_, d)| !**d)
        .map(|(fp, _)| fp.clone())
        .collect();
    assert_eq!(r.strong_front, expected, "{id}");
    assert_eq!(
        r.evaluations,
        r.residual_evaluations + 2 * r.n as u64 * r.gradient_evaluations
    );
    for set in &r.trajectories {
        assert_eq!(set.len(), r.config.points);
        assert!(set
            .points
            .iter()
            .all(|x| case.problem.is_feasible(x).unwrap()));
    }
}

#[test]
fn report_invariants_hold_on_every_benchmark() {
    for id in BenchmarkId::ALL {
        if id == BenchmarkId::CaseII {
            continue;
        }
        check_report_invariants(id, &solved(id).report);
    }
}

#[test]
fn background_set_is_bitwise_constant() {
    let case = BenchmarkId::CaseIII.build();
    let (before, _) = initial_sets(&case.problem, &SolverConfig::default()).unwrap();
    let after = &solved(BenchmarkId::CaseIII).background;
    let bits =
        |s: &PointSet| -> Vec<u64> { s.points.iter().flatten().map(|v| v.to_bits()).collect() };
    assert_eq!(bits(&before), bits(after));
    assert_eq!(after.class, PointClass::Background);
}

#[test]
fn identical_seeds_give_identical_reports() {
    let case = BenchmarkId::CaseI.build();
    let cfg = SolverConfig {
        points: 20,
        ..SolverConfig::default().with_seed(13)
    };
    let mut a = solve(&case, &cfg).unwrap();
    let mut b = solve(&case, &cfg).unwrap();
    a.report.wall_time = 0.0;
    b.report.wall_time = 0.0;
    assert_eq!(a.report, b.report);
    assert_eq!(a.classifier, b.classifier);
    let c = solve(&case, &cfg.clone().with_seed(14)).unwrap();
    assert_ne!(a.report.trajectories[0], c.report.trajectories[0]);
}

#[test]
fn case1_front_and_indicator() {
    let sol = solved(BenchmarkId::CaseI);
    let r = &sol.report;
    assert!(r.converged);
    assert!(r.iterations <= 30);
    assert!(r.front.len() >= 50);
    assert!(r.front_error.unwrap().max <= 1e-3);
    assert!(sol.classifier.indicate(&[0.5, 0.0]).unwrap() >= 0.5);
    assert!(sol.classifier.indicate(&[0.5, 1.5]).unwrap() < 0.5);
}

#[test]
fn loss_trends_down() {
    for id in [BenchmarkId::Quad, BenchmarkId::CaseI, BenchmarkId::CaseIII] {
        let trace = &solved(id).report.bce_trace;
        assert!(trace.iter().all(|v| v.is_finite()));
        let mut head: Vec<f64> = trace[..10].to_vec();
        head.sort_by(f64::total_cmp);
        let p95 = head[9];
        assert!(*trace.last().unwrap() <= p95, "{id}");
    }
}

#[test]
fn case3_strong_front_sits_on_the_second_constraint() {
    let case = BenchmarkId::CaseIII.build();
    let r = &solved(BenchmarkId::CaseIII).report;
    assert!(!r.strong_front.is_empty());
    for fp in &r.strong_front {
        assert!(case.problem.constraint_values(&fp.x)[1].abs() <= 1e-3);
    }
}

#[test]
fn quad_query_finds_the_centre() {
    let r = &solved(BenchmarkId::Quad).report;
    assert!(r.converged);
    assert!(r.front_error.unwrap().max <= 1e-3);
    let q = query_by_tradeoff(r, &[0.5, 0.5]).unwrap();
    assert!(q.x.iter().all(|v| v.abs() <= 1e-2), "{:?}", q.x);
    let hit = &r.front[3];
    let exact = query_by_tradeoff(r, &hit.tradeoff.lambda).unwrap();
    assert_eq!(exact.x, hit.x);
}

#[test]
fn gauss_newton_covers_most_of_case2() {
    let case = case2_with_dims(10).unwrap();
    let cfg = SolverConfig {
        descent: DescentMethod::GaussNewton,
        max_outer_iters: 10,
        ..SolverConfig::default()
    };
    let r = solve(&case, &cfg).unwrap().report;
    let on_shape = r
        .front
        .iter()
        .filter(|fp| (fp.f[1] - (1.0 - fp.f[0].sqrt())).abs() <= 1e-2)
        .count();
    assert!(r.front.len() >= 30, "{}", r.front.len());
    assert!(on_shape as f64 >= 0.9 * r.front.len() as f64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn descent_keeps_points_feasible(seed in 0u64..10_000, eta in 1e-4f64..0.5) {
        let case = BenchmarkId::CaseIII.build();
        let set = case.problem.sample_feasible(5, seed).unwrap().with_class(PointClass::Candidate);
        let next = descent_step(&case.problem, &set, eta, true).unwrap();
        for x in &next.points {
            prop_assert!(case.problem.is_feasible(x).unwrap());
        }
        let cached = next.residuals.as_ref().unwrap();
        for (x, r) in next.points.iter().zip(cached) {
            prop_assert_eq!(*r, fjc::residual(&case.problem, x, true).unwrap());
        }
    }

    #[test]
    fn projection_lands_in_the_feasible_set(
        seed in 0u64..10_000, dx in -4.0f64..4.0, dy in -4.0f64..4.0
    ) {
        let case = BenchmarkId::CaseIII.build();
        let from = case.problem.sample_feasible(1, seed).unwrap().points.remove(0);
        let to = [from[0] + dx, from[1] + dy];
        let y = project_feasible(&case.problem, &from, &to).unwrap();
        prop_assert!(case.problem.is_feasible(&y).unwrap());
        let mut clamped = to.to_vec();
        case.problem.clamp_to_box(&mut clamped);
        if case.problem.is_feasible(&clamped).unwrap() {
            prop_assert_eq!(y, clamped);
        }
    }
}
