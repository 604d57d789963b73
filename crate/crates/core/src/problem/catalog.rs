//! Built-in benchmark problems with known optimal sets.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::front::{curve_distance, golden_min, AnalyticFront};
use super::{Bounds, Function, MooProblem};
use crate::error::{Error, Result};

/// Stable benchmark identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkId {
    #[serde(rename = "quad")]
    Quad,
    #[serde(rename = "case1")]
    CaseI,
    #[serde(rename = "case2")]
    CaseII,
    #[serde(rename = "case3")]
    CaseIII,
    #[serde(rename = "caseA")]
    CaseA,
    #[serde(rename = "caseB")]
    CaseB,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 6] = [
        BenchmarkId::Quad,
        BenchmarkId::CaseI,
        BenchmarkId::CaseII,
        BenchmarkId::CaseIII,
        BenchmarkId::CaseA,
        BenchmarkId::CaseB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::Quad => "quad",
            BenchmarkId::CaseI => "case1",
            BenchmarkId::CaseII => "case2",
            BenchmarkId::CaseIII => "case3",
            BenchmarkId::CaseA => "caseA",
            BenchmarkId::CaseB => "caseB",
        }
    }

    pub fn build(self) -> BenchmarkCase {
        match self {
            BenchmarkId::Quad => quad(),
            BenchmarkId::CaseI => case1(),
            BenchmarkId::CaseII => case2_with_dims(30).expect("30 dimensions is valid"),
            BenchmarkId::CaseIII => case3(),
            BenchmarkId::CaseA => case_a(),
            BenchmarkId::CaseB => case_b(),
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::rejected(format!(
                    "unknown benchmark '{s}', expected one of: quad, case1, case2, case3, caseA, caseB"
                ))
            })
    }
}

/// A problem together with its ground truth.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub id: BenchmarkId,
    pub problem: MooProblem,
    pub front: AnalyticFront,
    /// Whether functional constraints enter the Fritz-John matrix.
    pub constrained_fjc: bool,
}

/// Average and worst distance of a point set to the analytic front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontErrors {
    pub avg: f64,
    pub max: f64,
}

impl BenchmarkCase {
    /// Distance of one point: in variable space when the front defines it,
    /// otherwise in objective space.
    pub fn point_error(&self, x: &[f64]) -> f64 {
        match self.front.variable_distance(x) {
            Some(d) => d,
            None => {
                let f = self.problem.objective_values(x);
                self.front
                    .function_distance(&f)
                    .expect("every front defines at least one distance")
            }
        }
    }

    pub fn front_errors<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<FrontErrors> {
        if points.is_empty() {
            return Err(Error::rejected("front_errors needs at least one point"));
        }
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        for p in points {
            let p = p.as_ref();
            self.problem.check_dim(p)?;
            let e = self.point_error(p);
            sum += e;
            max = max.max(e);
        }
        Ok(FrontErrors {
            avg: sum / points.len() as f64,
            max,
        })
    }
}

/// The six built-in cases in listing order.
pub fn catalog() -> Vec<BenchmarkCase> {
    BenchmarkId::ALL
        .into_iter()
        .map(BenchmarkId::build)
        .collect()
}

fn quad() -> BenchmarkCase {
    let problem = MooProblem::new(
        vec![Bounds::new(-1.0, 1.0); 2],
        vec![
            Function::new(
                |x| (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2),
                |x| vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 1.0)],
            ),
            Function::new(
                |x| (x[0] + 1.0).powi(2) + (x[1] + 1.0).powi(2),
                |x| vec![2.0 * (x[0] + 1.0), 2.0 * (x[1] + 1.0)],
            ),
        ],
        vec![],
    )
    .expect("valid problem");
    let image = |s: f64| vec![2.0 * (s - 1.0).powi(2), 2.0 * (s + 1.0).powi(2)];
    let front = AnalyticFront::new(
        "segment x1 = x2, x1 in [-1, 1]",
        Some(Arc::new(|x: &[f64]| (x[0] - x[1]).abs() * FRAC_1_SQRT_2)),
        Some(Arc::new(move |f: &[f64]| {
            curve_distance(image, -1.0, 1.0, f)
        })),
        Arc::new(|t| {
            let s = 2.0 * t - 1.0;
            vec![s, s]
        }),
    );
    BenchmarkCase {
        id: BenchmarkId::Quad,
        problem,
        front,
        constrained_fjc: false,
    }
}

fn case1() -> BenchmarkCase {
    let problem = MooProblem::new(
        vec![Bounds::new(0.0, 1.0), Bounds::new(-2.0, 2.0)],
        vec![
            Function::new(|x| x[0], |_| vec![1.0, 0.0]),
            Function::new(
                |x| 1.0 + x[1] * x[1] - x[0] - 0.1 * (3.0 * PI * x[0]).sin(),
                |x| vec![-1.0 - 0.3 * PI * (3.0 * PI * x[0]).cos(), 2.0 * x[1]],
            ),
        ],
        vec![],
    )
    .expect("valid problem");
    let image = |t: f64| vec![t, 1.0 - t - 0.1 * (3.0 * PI * t).sin()];
    let front = AnalyticFront::new(
        "line x2 = 0, 0 <= x1 <= 1",
        Some(Arc::new(|x: &[f64]| x[1].abs())),
        Some(Arc::new(move |f: &[f64]| {
            curve_distance(image, 0.0, 1.0, f)
        })),
        Arc::new(|t| vec![t, 0.0]),
    );
    BenchmarkCase {
        id: BenchmarkId::CaseI,
        problem,
        front,
        constrained_fjc: false,
    }
}

/// Amplitude and phase of the spiral coordinate `j` at `x1`, with
/// derivatives: returns `(s_j, ds_j/dx1)` where `y_j = x_j - s_j(x1)`.
fn spiral(j: usize, n: usize, x1: f64) -> (f64, f64) {
    let jf = j as f64;
    let nf = n as f64;
    let c_arg = 24.0 * PI * x1 + 4.0 * jf * PI / nf;
    let b_arg = 6.0 * PI * x1 + jf * PI / nf;
    let amp = 0.3 * x1 * x1 * c_arg.cos() + 0.6 * x1;
    let amp_d = 0.6 * x1 * c_arg.cos() - 0.3 * x1 * x1 * 24.0 * PI * c_arg.sin() + 0.6;
    let s = amp * b_arg.cos();
    let s_d = amp_d * b_arg.cos() - amp * 6.0 * PI * b_arg.sin();
    (s, s_d)
}

/// Smallest `x1` used when differentiating `sqrt(x1)`.
const SQRT_FLOOR: f64 = 1e-12;

/// Case II in `n` dimensions. The odd and even coordinate groups share one
/// spiral formula.
pub fn case2_with_dims(n: usize) -> Result<BenchmarkCase> {
    if n < 3 {
        return Err(Error::rejected(format!(
            "case2 needs n >= 3 so both coordinate groups are non-empty, got {n}"
        )));
    }
    let odd: Arc<Vec<usize>> = Arc::new((2..=n).filter(|j| j % 2 == 1).collect());
    let even: Arc<Vec<usize>> = Arc::new((2..=n).filter(|j| j % 2 == 0).collect());

    let group_value = |group: Arc<Vec<usize>>| {
        move |x: &[f64]| -> f64 {
            let sum: f64 = group
                .iter()
                .map(|&j| {
                    let y = x[j - 1] - spiral(j, n, x[0]).0;
                    y * y
                })
                .sum();
            2.0 * sum / group.len() as f64
        }
    };
    // Gradient of the group term; the first entry is d/dx1.
    let group_gradient = |group: Arc<Vec<usize>>| {
        move |x: &[f64]| -> Vec<f64> {
            let mut g = vec![0.0; n];
            let scale = 4.0 / group.len() as f64;
            for &j in group.iter() {
                let (s, s_d) = spiral(j, n, x[0]);
                let y = x[j - 1] - s;
                g[j - 1] = scale * y;
                g[0] -= scale * y * s_d;
            }
            g
        }
    };

    let f1_group = group_value(odd.clone());
    let f1_grad = group_gradient(odd);
    let f2_group = group_value(even.clone());
    let f2_grad = group_gradient(even);

    let mut bounds = vec![Bounds::new(-1.0, 1.0); n];
    bounds[0] = Bounds::new(0.0, 1.0);
    let problem = MooProblem::new(
        bounds,
        vec![
            Function::new(
                move |x| x[0] + f1_group(x),
                move |x| {
                    let mut g = f1_grad(x);
                    g[0] += 1.0;
                    g
                },
            ),
            Function::new(
                move |x| 1.0 - x[0].max(0.0).sqrt() + f2_group(x),
                move |x| {
                    let mut g = f2_grad(x);
                    g[0] -= 0.5 / x[0].max(SQRT_FLOOR).sqrt();
                    g
                },
            ),
        ],
        vec![],
    )?;

    let front = AnalyticFront::new(
        format!("spiral y_j = 0 for j = 2..{n}; objective front f2 = 1 - sqrt(f1)"),
        Some(Arc::new(move |x: &[f64]| {
            (2..=n)
                .map(|j| {
                    let y = x[j - 1] - spiral(j, n, x[0]).0;
                    y * y
                })
                .sum::<f64>()
                .sqrt()
        })),
        Some(Arc::new(|f: &[f64]| {
            curve_distance(|t| vec![t, 1.0 - t.sqrt()], 0.0, 1.0, f)
        })),
        Arc::new(move |t| {
            let mut x = vec![t; n];
            for (j, xj) in x.iter_mut().enumerate().skip(1) {
                *xj = spiral(j + 1, n, t).0;
            }
            x
        }),
    );
    Ok(BenchmarkCase {
        id: BenchmarkId::CaseII,
        problem,
        front,
        constrained_fjc: false,
    })
}

fn tanaka_g1(x: &[f64]) -> f64 {
    (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - 0.5
}

/// The wavy-circle constraint, negated into `<= 0` form.
fn tanaka_g2(x: &[f64]) -> f64 {
    let psi = x[0].atan2(x[1]);
    1.0 + 0.1 * (16.0 * psi).cos() - x[0] * x[0] - x[1] * x[1]
}

fn tanaka_g2_gradient(x: &[f64]) -> Vec<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let psi = x[0].atan2(x[1]);
    // d psi / dx = (x2, -x1) / r^2; the angular term vanishes at the origin.
    let wave = if r2 > 0.0 {
        -1.6 * (16.0 * psi).sin() / r2
    } else {
        0.0
    };
    vec![wave * x[1] - 2.0 * x[0], -wave * x[0] - 2.0 * x[1]]
}

/// The boundary `g2 = 0` in polar form around the x2 axis.
fn tanaka_curve(psi: f64) -> [f64; 2] {
    let r = (1.0 + 0.1 * (16.0 * psi).cos()).sqrt();
    [r * psi.sin(), r * psi.cos()]
}

const TANAKA_SAMPLES: usize = 20_000;

/// The non-dominated, `g1`-feasible arcs of the `g2 = 0` boundary, as
/// runs of the angle `psi`.
#[derive(Debug)]
struct TanakaArcs {
    runs: Vec<(f64, f64)>,
    samples: Vec<(f64, [f64; 2], usize)>,
    spacing: f64,
}

impl TanakaArcs {
    fn build() -> Self {
        let spacing = FRAC_PI_2 / TANAKA_SAMPLES as f64;
        let curve: Vec<[f64; 2]> = (0..=TANAKA_SAMPLES)
            .map(|i| tanaka_curve(i as f64 * spacing))
            .collect();
        let feasible: Vec<bool> = curve.iter().map(|c| tanaka_g1(c) <= 0.0).collect();

        let mut order: Vec<usize> = (0..curve.len()).filter(|&i| feasible[i]).collect();
        order.sort_by(|&a, &b| {
            curve[a][0]
                .total_cmp(&curve[b][0])
                .then(curve[a][1].total_cmp(&curve[b][1]))
        });
        let mut keep = vec![false; curve.len()];
        let mut best_x2 = f64::INFINITY;
        for i in order {
            if curve[i][1] < best_x2 {
                keep[i] = true;
                best_x2 = curve[i][1];
            }
        }

        let mut runs = Vec::new();
        let mut samples = Vec::new();
        let mut i = 0;
        while i < keep.len() {
            if !keep[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < keep.len() && keep[i + 1] {
                i += 1;
            }
            let run = runs.len();
            runs.push((start as f64 * spacing, i as f64 * spacing));
            for (s, c) in (start..=i).zip(&curve[start..=i]) {
                samples.push((s as f64 * spacing, *c, run));
            }
            i += 1;
        }
        Self {
            runs,
            samples,
            spacing,
        }
    }

    fn distance(&self, x: &[f64]) -> f64 {
        let d2 = |c: [f64; 2]| (c[0] - x[0]).powi(2) + (c[1] - x[1]).powi(2);
        let &(psi, point, run) = self
            .samples
            .iter()
            .min_by(|a, b| d2(a.1).total_cmp(&d2(b.1)))
            .expect("Pareto arcs are non-empty");
        let (lo, hi) = self.runs[run];
        let a = (psi - self.spacing).max(lo);
        let b = (psi + self.spacing).min(hi);
        let refined = if b > a {
            golden_min(&|p: f64| d2(tanaka_curve(p)), a, b)
        } else {
            f64::INFINITY
        };
        refined.min(d2(point)).sqrt()
    }

    fn point(&self, t: f64) -> Vec<f64> {
        let total: f64 = self.runs.iter().map(|(a, b)| b - a).sum();
        let mut target = t * total;
        for &(a, b) in &self.runs {
            let len = b - a;
            if target <= len {
                return tanaka_curve(a + target).to_vec();
            }
            target -= len;
        }
        let &(_, b) = self.runs.last().expect("Pareto arcs are non-empty");
        tanaka_curve(b).to_vec()
    }
}

fn case3() -> BenchmarkCase {
    let problem = MooProblem::new(
        vec![Bounds::new(0.0, PI); 2],
        vec![
            Function::new(|x| x[0], |_| vec![1.0, 0.0]),
            Function::new(|x| x[1], |_| vec![0.0, 1.0]),
        ],
        vec![
            Function::new(tanaka_g1, |x| vec![2.0 * (x[0] - 0.5), 2.0 * (x[1] - 0.5)]),
            Function::new(tanaka_g2, tanaka_g2_gradient),
        ],
    )
    .expect("valid problem");
    let arcs = Arc::new(TanakaArcs::build());
    let (a1, a2, a3) = (arcs.clone(), arcs.clone(), arcs);
    let front = AnalyticFront::new(
        "non-dominated arcs of the wavy boundary g2 = 0 inside the disk g1 <= 0",
        Some(Arc::new(move |x: &[f64]| a1.distance(x))),
        Some(Arc::new(move |f: &[f64]| a2.distance(f))),
        Arc::new(move |t| a3.point(t)),
    );
    BenchmarkCase {
        id: BenchmarkId::CaseIII,
        problem,
        front,
        constrained_fjc: true,
    }
}

// With the box kept out of the Fritz-John matrix, Cases A and B are
// rank deficient in the interior only along one objective's stationary
// line: x2 = 0 for A, x1 = 0 for B. Their variable-space ground truth is
// that line; the objective-space distance measures against the full
// trade-off curve, whose remainder lies on the box boundary.

fn case_a() -> BenchmarkCase {
    let problem = MooProblem::new(
        vec![Bounds::new(0.0, 1.0); 2],
        vec![
            Function::new(
                |x| ((x[0] - 1.0) * x[1] * x[1] + 1.0) / 3.0,
                |x| vec![x[1] * x[1] / 3.0, 2.0 * (x[0] - 1.0) * x[1] / 3.0],
            ),
            Function::new(|x| x[1], |_| vec![0.0, 1.0]),
        ],
        vec![],
    )
    .expect("valid problem");
    let image = |s: f64| vec![(1.0 - s * s) / 3.0, s];
    let front = AnalyticFront::new(
        "interior stationary line x2 = 0 (objective-space curve f1 = (1 - f2^2)/3)",
        Some(Arc::new(|x: &[f64]| x[1].abs())),
        Some(Arc::new(move |f: &[f64]| {
            curve_distance(image, 0.0, 1.0, f)
        })),
        Arc::new(|t| vec![t, 0.0]),
    );
    BenchmarkCase {
        id: BenchmarkId::CaseA,
        problem,
        front,
        constrained_fjc: false,
    }
}

fn case_b() -> BenchmarkCase {
    let problem = MooProblem::new(
        vec![Bounds::new(0.0, 1.0); 2],
        vec![
            Function::new(|x| x[0], |_| vec![1.0, 0.0]),
            Function::new(
                |x| 1.0 - (x[0] / (1.0 + 9.0 * x[1])).powi(2),
                |x| {
                    let d = 1.0 + 9.0 * x[1];
                    vec![-2.0 * x[0] / (d * d), 18.0 * x[0] * x[0] / (d * d * d)]
                },
            ),
        ],
        vec![],
    )
    .expect("valid problem");
    let image = |s: f64| vec![s, 1.0 - s * s];
    let front = AnalyticFront::new(
        "interior stationary line x1 = 0 (objective-space curve f2 = 1 - f1^2)",
        Some(Arc::new(|x: &[f64]| x[0].abs())),
        Some(Arc::new(move |f: &[f64]| {
            curve_distance(image, 0.0, 1.0, f)
        })),
        Arc::new(|t| vec![0.0, t]),
    );
    BenchmarkCase {
        id: BenchmarkId::CaseB,
        problem,
        front,
        constrained_fjc: false,
    }
}
