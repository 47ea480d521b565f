//! Preprocessing, the gradient-boosted tree classifier, ROC metrics, and
//! model serialization.
//!
//! Everything here is deterministic: training touches no global RNG, feature
//! loops run in a fixed order, and ties break toward the earlier candidate.
//! Training the same data with the same hyperparameters yields bit-identical
//! models regardless of thread count.

pub mod gbdt;
pub mod metrics;
pub mod model_io;
pub mod preprocess;

pub use gbdt::{GbdtModel, Hyperparams, TreeNode};
pub use model_io::ModelDocument;
pub use preprocess::{PreprocessConfig, PreprocessorModel};

use thiserror::Error;

use crate::features::FeatureRow;
use crate::mining::Label;

#[derive(Debug, Error, PartialEq)]
pub enum MlError {
    #[error("all features were dropped by preprocessing")]
    AllFeaturesDropped,
    #[error("matrix has {found} columns but the model expects {expected}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("{rows} rows but {labels} labels")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("hyperparameter out of range: {0}")]
    BadHyperparam(String),
}

/// Dense row-major matrix of feature values; missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_rows * n_cols, "matrix shape mismatch");
        Matrix { n_rows, n_cols, data }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n_cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// Rows of this matrix restricted to `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix::new(rows.len(), self.n_cols, data)
    }

    /// Copy without the given columns (indices into this matrix).
    pub fn drop_columns(&self, drop: &std::collections::BTreeSet<usize>) -> Matrix {
        let kept: Vec<usize> = (0..self.n_cols).filter(|c| !drop.contains(c)).collect();
        let mut data = Vec::with_capacity(self.n_rows * kept.len());
        for r in 0..self.n_rows {
            let row = self.row(r);
            data.extend(kept.iter().map(|&c| row[c]));
        }
        Matrix::new(self.n_rows, kept.len(), data)
    }

    /// Builds the design matrix and 0/1 label vector (broken = 1) from
    /// extracted rows. All rows must have the same width.
    pub fn from_feature_rows(rows: &[FeatureRow]) -> (Matrix, Vec<u8>) {
        let n_cols = rows.first().map_or(0, |r| r.values.len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        let mut labels = Vec::with_capacity(rows.len());
        for row in rows {
            assert_eq!(row.values.len(), n_cols, "ragged feature rows");
            data.extend_from_slice(&row.values);
            labels.push(u8::from(row.label == Label::Broken));
        }
        (Matrix::new(rows.len(), n_cols, data), labels)
    }
}

/// Preprocessor plus classifier, fitted together and applied in sequence.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pipeline {
    pub preprocessor: PreprocessorModel,
    pub booster: GbdtModel,
}

impl Pipeline {
    /// Fits preprocessing on `x` and the booster on the transformed matrix.
    pub fn fit(
        x: &Matrix,
        y: &[u8],
        prep: &PreprocessConfig,
        hp: &Hyperparams,
    ) -> Result<Pipeline, MlError> {
        let preprocessor = PreprocessorModel::fit(x, prep)?;
        let transformed = preprocessor.transform(x)?;
        let booster = GbdtModel::train(&transformed, y, hp)?;
        Ok(Pipeline { preprocessor, booster })
    }

    /// Probability that each row is a broken page.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, MlError> {
        let transformed = self.preprocessor.transform(x)?;
        Ok(self.booster.predict_proba(&transformed))
    }
}
