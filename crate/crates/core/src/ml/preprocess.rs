//! Feature-matrix preprocessing: null-heavy column removal, greedy
//! correlation pruning, and standardization.
//!
//! Fitting proceeds in three passes over the training matrix:
//!
//! 1. columns whose missing fraction exceeds `null_threshold` are dropped;
//! 2. among the survivors, scanned in schema order, a later column is dropped
//!    when its absolute Pearson correlation with an earlier kept column
//!    exceeds `corr_threshold`. Correlations use pairwise-complete rows; when
//!    a correlation is undefined (fewer than two complete pairs, or zero
//!    variance on the complete subset) the column is kept;
//! 3. surviving columns are centered and scaled by their population standard
//!    deviation over non-missing entries. Zero-variance columns transform to
//!    zero rather than dividing by zero. Missing values stay missing.
//!
//! `transform` applies the fitted column set and statistics to any matrix
//! with the same width as the training matrix.

use serde::{Deserialize, Serialize};

use super::{Matrix, MlError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Drop a column when its missing fraction is strictly above this.
    pub null_threshold: f64,
    /// Drop a later column when |r| with an earlier kept column is strictly
    /// above this.
    pub corr_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            null_threshold: 0.85,
            corr_threshold: 0.73,
        }
    }
}

/// Fitted preprocessing: which input columns survive and their statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessorModel {
    pub config: PreprocessConfig,
    /// Width of the matrix this model was fitted on.
    pub n_input_columns: usize,
    /// Surviving column indices into the input matrix, ascending.
    pub kept: Vec<usize>,
    /// Mean of each kept column over non-missing training entries.
    pub means: Vec<f64>,
    /// Population standard deviation of each kept column (0 for constants).
    pub stds: Vec<f64>,
}

/// Per-column facts gathered in one pass, reused across pair scans.
struct ColumnProfile {
    missing: Vec<bool>,
    n_missing: usize,
    mean: f64,
    std: f64,
    /// Values with missing entries as-is (NaN), borrowed layout per row.
    complete: bool,
}

fn profile_column(x: &Matrix, col: usize) -> ColumnProfile {
    let n = x.n_rows();
    let mut missing = vec![false; n];
    let mut n_missing = 0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for row in 0..n {
        let v = x.get(row, col);
        if v.is_nan() {
            missing[row] = true;
            n_missing += 1;
        } else {
            sum += v;
            sum_sq += v * v;
        }
    }
    let present = (n - n_missing) as f64;
    let (mean, std) = if n_missing == n {
        (0.0, 0.0)
    } else {
        let mean = sum / present;
        let var = (sum_sq / present - mean * mean).max(0.0);
        (mean, var.sqrt())
    };
    ColumnProfile {
        missing,
        n_missing,
        mean,
        std,
        complete: n_missing == 0,
    }
}

/// Pearson correlation over pairwise-complete rows; `None` when undefined.
fn pairwise_pearson(x: &Matrix, a: usize, b: usize, pa: &ColumnProfile, pb: &ColumnProfile) -> Option<f64> {
    let n = x.n_rows();
    if pa.complete && pb.complete {
        // Fast path: reuse the full-column moments, accumulate only Σxy.
        if pa.std == 0.0 || pb.std == 0.0 || n < 2 {
            return None;
        }
        let mut sum_xy = 0.0;
        for row in 0..n {
            sum_xy += x.get(row, a) * x.get(row, b);
        }
        let cov = sum_xy / n as f64 - pa.mean * pb.mean;
        return Some(cov / (pa.std * pb.std));
    }
    let mut count = 0.0;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for row in 0..n {
        if pa.missing[row] || pb.missing[row] {
            continue;
        }
        let (u, v) = (x.get(row, a), x.get(row, b));
        count += 1.0;
        sx += u;
        sy += v;
        sxx += u * u;
        syy += v * v;
        sxy += u * v;
    }
    if count < 2.0 {
        return None;
    }
    let var_x = sxx / count - (sx / count) * (sx / count);
    let var_y = syy / count - (sy / count) * (sy / count);
    if var_x <= 0.0 || var_y <= 0.0 {
        return None;
    }
    let cov = sxy / count - (sx / count) * (sy / count);
    Some(cov / (var_x.sqrt() * var_y.sqrt()))
}

impl PreprocessorModel {
    /// Fits the column set and statistics on a training matrix.
    pub fn fit(x: &Matrix, config: &PreprocessConfig) -> Result<Self, MlError> {
        if x.n_rows() == 0 || x.n_cols() == 0 {
            return Err(MlError::EmptyMatrix);
        }
        for (name, v) in [("null_threshold", config.null_threshold), ("corr_threshold", config.corr_threshold)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(MlError::BadHyperparam(format!("{name} = {v}")));
            }
        }
        let n = x.n_rows() as f64;
        let profiles: Vec<ColumnProfile> = (0..x.n_cols()).map(|c| profile_column(x, c)).collect();

        // Pass 1: missing-fraction filter.
        let survivors: Vec<usize> = (0..x.n_cols())
            .filter(|&c| profiles[c].n_missing as f64 / n <= config.null_threshold)
            .collect();

        // Pass 2: greedy correlation pruning, earlier column wins.
        let mut kept: Vec<usize> = Vec::with_capacity(survivors.len());
        let mut dropped = vec![false; x.n_cols()];
        for (i, &col) in survivors.iter().enumerate() {
            if dropped[col] {
                continue;
            }
            kept.push(col);
            for &later in &survivors[i + 1..] {
                if dropped[later] {
                    continue;
                }
                if let Some(r) = pairwise_pearson(x, col, later, &profiles[col], &profiles[later]) {
                    if r.abs() > config.corr_threshold {
                        dropped[later] = true;
                    }
                }
            }
        }
        if kept.is_empty() {
            return Err(MlError::AllFeaturesDropped);
        }

        let means = kept.iter().map(|&c| profiles[c].mean).collect();
        let stds = kept.iter().map(|&c| profiles[c].std).collect();
        Ok(PreprocessorModel {
            config: *config,
            n_input_columns: x.n_cols(),
            kept,
            means,
            stds,
        })
    }

    /// Applies the fitted statistics; input must have the fitted width.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix, MlError> {
        if x.n_cols() != self.n_input_columns {
            return Err(MlError::SchemaMismatch {
                expected: self.n_input_columns,
                found: x.n_cols(),
            });
        }
        let mut out = Matrix::zeros(x.n_rows(), self.kept.len());
        for row in 0..x.n_rows() {
            for (j, &col) in self.kept.iter().enumerate() {
                let v = x.get(row, col);
                let standardized = if v.is_nan() {
                    f64::NAN
                } else if self.stds[j] == 0.0 {
                    0.0
                } else {
                    (v - self.means[j]) / self.stds[j]
                };
                out.set(row, j, standardized);
            }
        }
        Ok(out)
    }

    pub fn fit_transform(x: &Matrix, config: &PreprocessConfig) -> Result<(Self, Matrix), MlError> {
        let model = Self::fit(x, config)?;
        let transformed = model.transform(x)?;
        Ok((model, transformed))
    }
}
