/// Ties closer than this count as equal.
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// `a` is no worse than `b` everywhere and strictly better somewhere
/// (minimisation).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if *x > y + DOMINANCE_TOLERANCE {
            return false;
        }
        if *x < y - DOMINANCE_TOLERANCE {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the non-dominated objective vectors, in input order.
///
/// Candidates are scanned in order of objective sum: a dominator can only
/// have a sum up to `k·tol` above the dominated point, which prunes most
/// comparisons.
pub fn non_dominated_indices<F: AsRef<[f64]>>(objectives: &[F]) -> Vec<usize> {
    let sums: Vec<f64> = objectives.iter().map(|f| f.as_ref().iter().sum()).collect();
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]));

    let mut keep: Vec<usize> = (0..objectives.len())
        .filter(|&i| {
            let fi = objectives[i].as_ref();
            let slack = fi.len() as f64 * DOMINANCE_TOLERANCE + 1e-12 * (1.0 + sums[i].abs());
            let bound = sums[i] + slack;
            !order
                .iter()
                .take_while(|&&j| sums[j] <= bound)
                .any(|&j| j != i && dominates(objectives[j].as_ref(), fi))
        })
        .collect();
    keep.sort_unstable();
    keep
}

/// Non-dominated `(x, f)` pairs, in input order.
pub fn pareto_filter(points: &[(Vec<f64>, Vec<f64>)]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let fs: Vec<&[f64]> = points.iter().map(|(_, f)| f.as_slice()).collect();
    non_dominated_indices(&fs)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(fs: &[Vec<f64>]) -> Vec<usize> {
        (0..fs.len())
            .filter(|&i| {
                !(0..fs.len()).any(|j| {
                    j != i
                        && fs[j].iter().zip(&fs[i]).all(|(a, b)| *a <= b + 1e-12)
                        && fs[j].iter().zip(&fs[i]).any(|(a, b)| *a < b - 1e-12)
                })
            })
            .collect()
    }

    #[test]
    fn small_examples() {
        let pts = vec![
            (vec![0.0], vec![1.0, 2.0]),
            (vec![1.0], vec![2.0, 1.0]),
            (vec![2.0], vec![2.0, 2.0]),
        ];
        let kept = pareto_filter(&pts);
        assert_eq!(kept, pts[..2].to_vec());
        assert_eq!(pareto_filter(&pts[2..]), pts[2..].to_vec());
        assert!(pareto_filter(&[]).is_empty());
    }

    #[test]
    fn duplicates_and_near_ties_survive() {
        let fs = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0 + 1e-13, 1.0]];
        assert_eq!(non_dominated_indices(&fs), vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle(
            fs in prop::collection::vec(prop::collection::vec(-3i32..3, 3), 0..60)
        ) {
            // Coarse integer grid so that ties are common.
            let fs: Vec<Vec<f64>> = fs.into_iter().map(|v| v.into_iter().map(f64::from).collect()).collect();
            prop_assert_eq!(non_dominated_indices(&fs), brute_force(&fs));
        }

        #[test]
        fn kept_points_are_mutually_non_dominated(
            fs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..80)
        ) {
            let keep = non_dominated_indices(&fs);
            prop_assert!(!keep.is_empty());
            for &a in &keep {
                for &b in &keep {
                    prop_assert!(!dominates(&fs[a], &fs[b]));
                }
            }
        }
    }
}
