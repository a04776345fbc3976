use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::knn::{RegressionSample, RobustKnnModel};
use crate::nn_index::Metric;
use crate::rng::rng_from_seed;

/// Mean validation error of each grid value, and the chosen `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub k: usize,
    /// `(k, mean 0-1 error against the observed labels)`, in grid order.
    pub errors: Vec<(usize, f64)>,
}

/// Picks `k` from `k_grid` by `folds`-fold cross-validation of the robust
/// classifier (rates re-estimated on every training fold), scored by 0-1
/// error against the observed (possibly corrupted) labels. Ties go to the
/// smallest `k`.
pub fn cross_validate_k(sample: &RegressionSample, k_grid: &[usize], folds: usize, seed: u64) -> Result<usize> {
    Ok(cross_validate_k_report(sample, k_grid, folds, seed)?.k)
}

pub fn cross_validate_k_report(
    sample: &RegressionSample,
    k_grid: &[usize],
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if k_grid.is_empty() || k_grid.contains(&0) {
        return Err(invalid("k_grid", "must be non-empty with positive values"));
    }
    let n = sample.len();
    if folds < 2 || folds > n {
        return Err(invalid("folds", format!("{folds} is outside [2, {n}]")));
    }
    sample.check_binary()?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (pos, &i) in perm.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };
    let splits: Vec<(RegressionSample, RegressionSample)> = (0..folds)
        .map(|fold| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
            Ok((sample.subset(&train)?, sample.subset(&test)?))
        })
        .collect::<Result<_>>()?;

    let mut errors = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let mut wrong = 0usize;
        let mut feasible = true;
        for (train, test) in &splits {
            if k > train.len() {
                feasible = false;
                break;
            }
            let model = RobustKnnModel::fit(train.clone(), k, Metric::Euclidean)?;
            for (x, &y) in test.points.iter().zip(&test.responses) {
                if model.classify(x)? as f64 != y {
                    wrong += 1;
                }
            }
        }
        let err = if feasible { wrong as f64 / n as f64 } else { f64::INFINITY };
        errors.push((k, err));
    }
    let mut order: Vec<&(usize, f64)> = errors.iter().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let best = *order[0];
    if !best.1.is_finite() {
        return Err(invalid("k_grid", "every k exceeds the training-fold size"));
    }
    Ok(CvReport { k: best.0, errors })
}

/// About `count` geometrically spaced integers from `lo` to `hi`, deduplicated.
pub fn geometric_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || hi <= lo {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1)) as f64, hi as f64);
    let mut grid: Vec<usize> = (0..count)
        .map(|i| (a * (b / a).powf(i as f64 / (count - 1) as f64)).round() as usize)
        .collect();
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn_index::PointSet;

    fn sample(xs: &[f64], ys: &[u8]) -> RegressionSample {
        RegressionSample::from_labels(PointSet::from_line(xs).unwrap(), ys).unwrap()
    }

    #[test]
    fn singleton_grid() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        assert_eq!(cross_validate_k(&sample(&xs, &ys), &[7], 4, 1).unwrap(), 7);
    }

    #[test]
    fn identical_labels_pick_smallest() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ys = vec![1u8; 30];
        assert_eq!(cross_validate_k(&sample(&xs, &ys), &[9, 3, 5], 3, 2).unwrap(), 3);
    }

    #[test]
    fn invalid_arguments() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0], &[0, 1, 0, 1]);
        assert!(cross_validate_k(&s, &[], 2, 0).is_err());
        assert!(cross_validate_k(&s, &[1], 1, 0).is_err());
        assert!(cross_validate_k(&s, &[0], 2, 0).is_err());
        assert!(cross_validate_k(&s, &[100], 2, 0).is_err());
    }

    #[test]
    fn geometric_grids() {
        assert_eq!(geometric_grid(5, 5000, 4), vec![5, 50, 500, 5000]);
        assert_eq!(geometric_grid(1, 3, 10), vec![1, 2, 3]);
    }
}
