//! Ranking metrics for binary classifiers.

use serde::{Deserialize, Serialize};

/// Area under the ROC curve via the rank-sum statistic.
///
/// Equivalent to the probability that a uniformly chosen positive outranks a
/// uniformly chosen negative, with ties counting half. Tied scores share the
/// average of the ranks they occupy. Returns `None` when either class is
/// absent.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("scores must not contain NaN")
            .then(a.cmp(&b))
    });

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Rows i..j (0-based) are tied; ranks are 1-based.
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        for &row in &order[i..j] {
            if labels[row] == 1 {
                rank_sum_pos += mid_rank;
            }
        }
        i = j;
    }

    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Some((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Quadratic reference implementation of [`roc_auc`]: averages win/tie
/// credit over every positive-negative pair.
pub fn roc_auc_pairwise(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let mut wins = 0.0;
    let mut pairs = 0u64;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    if pairs == 0 {
        return None;
    }
    Some(wins / pairs as f64)
}

/// An ROC curve as (false-positive rate, true-positive rate) points from
/// (0, 0) to (1, 1), thresholds descending. Tied scores form a single step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Returns `None` when either class is absent.
    pub fn compute(scores: &[f64], labels: &[u8]) -> Option<RocCurve> {
        assert_eq!(scores.len(), labels.len(), "scores and labels must align");
        let n_pos = labels.iter().filter(|&&l| l == 1).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return None;
        }

        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_unstable_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("scores must not contain NaN")
                .then(a.cmp(&b))
        });

        let mut points = vec![(0.0, 0.0)];
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j < order.len() && scores[order[j]] == scores[order[i]] {
                if labels[order[j]] == 1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                j += 1;
            }
            points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
            i = j;
        }
        Some(RocCurve { points })
    }

    /// True-positive rate at a false-positive rate, linearly interpolated.
    /// `fpr` must lie in `[0, 1]`.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        assert!((0.0..=1.0).contains(&fpr), "fpr out of range: {fpr}");
        // Find the segment containing fpr. Vertical runs (equal fpr) resolve
        // to the highest tpr at that fpr.
        let mut best = 0.0f64;
        for window in self.points.windows(2) {
            let (x0, y0) = window[0];
            let (x1, y1) = window[1];
            if fpr < x0 || fpr > x1 {
                continue;
            }
            let y = if x1 == x0 {
                y0.max(y1)
            } else {
                y0 + (y1 - y0) * (fpr - x0) / (x1 - x0)
            };
            best = best.max(y);
        }
        best
    }

    /// Samples the curve on a uniform false-positive-rate grid with
    /// `n_points` entries from 0 to 1, for averaging across folds.
    pub fn sample_grid(&self, n_points: usize) -> Vec<(f64, f64)> {
        assert!(n_points >= 2, "need at least the two endpoints");
        (0..n_points)
            .map(|i| {
                let fpr = i as f64 / (n_points - 1) as f64;
                (fpr, self.tpr_at(fpr))
            })
            .collect()
    }

    /// Area under this curve by trapezoidal integration.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                (x1 - x0) * (y0 + y1) / 2.0
            })
            .sum()
    }
}

/// Pointwise mean of curves already sampled on a common grid.
pub fn mean_curve(curves: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    assert!(!curves.is_empty(), "need at least one curve");
    let len = curves[0].len();
    assert!(
        curves.iter().all(|c| c.len() == len),
        "curves must share a grid"
    );
    (0..len)
        .map(|i| {
            let fpr = curves[0][i].0;
            let tpr = curves.iter().map(|c| c[i].1).sum::<f64>() / curves.len() as f64;
            (fpr, tpr)
        })
        .collect()
}
