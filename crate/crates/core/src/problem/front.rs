use std::fmt;
use std::sync::Arc;

use super::ScalarFn;

pub type ManifoldFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Ground truth for a benchmark: distances to the known optimal manifold
/// and a parameterisation of it.
#[derive(Clone)]
pub struct AnalyticFront {
    pub description: String,
    variable_distance: Option<ScalarFn>,
    function_distance: Option<ScalarFn>,
    manifold: ManifoldFn,
}

impl AnalyticFront {
    pub(crate) fn new(
        description: impl Into<String>,
        variable_distance: Option<ScalarFn>,
        function_distance: Option<ScalarFn>,
        manifold: ManifoldFn,
    ) -> Self {
        Self {
            description: description.into(),
            variable_distance,
            function_distance,
            manifold,
        }
    }

    /// Distance of `x` to the optimal set in variable space.
    pub fn variable_distance(&self, x: &[f64]) -> Option<f64> {
        self.variable_distance.as_ref().map(|d| d(x))
    }

    /// Distance of an objective vector to the optimal front.
    pub fn function_distance(&self, f: &[f64]) -> Option<f64> {
        self.function_distance.as_ref().map(|d| d(f))
    }

    pub fn has_variable_distance(&self) -> bool {
        self.variable_distance.is_some()
    }

    /// Point on the optimal manifold for `t` in `[0, 1]`.
    pub fn point_on_manifold(&self, t: f64) -> Vec<f64> {
        (self.manifold)(t.clamp(0.0, 1.0))
    }
}

impl fmt::Debug for AnalyticFront {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFront")
            .field("description", &self.description)
            .field("variable_distance", &self.variable_distance.is_some())
            .field("function_distance", &self.function_distance.is_some())
            .finish()
    }
}

const COARSE_SAMPLES: usize = 400;
const GOLDEN_ITERS: usize = 200;

/// Euclidean distance from `target` to the curve `t -> curve(t)`, `t` in
/// `[lo, hi]`. A coarse scan picks the basin, golden-section search
/// refines it.
pub fn curve_distance<F>(curve: F, lo: f64, hi: f64, target: &[f64]) -> f64
where
    F: Fn(f64) -> Vec<f64>,
{
    let dist2 = |t: f64| -> f64 {
        curve(t)
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let step = (hi - lo) / COARSE_SAMPLES as f64;
    let (best_i, best) = (0..=COARSE_SAMPLES)
        .map(|i| (i, dist2(lo + step * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty scan");
    let a = (lo + step * (best_i as f64 - 1.0)).max(lo);
    let b = (lo + step * (best_i as f64 + 1.0)).min(hi);
    let refined = golden_min(&dist2, a, b);
    refined.min(best).sqrt()
}

/// Minimum value of a unimodal function on `[a, b]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() <= f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(a)).min(f(b))
}
