//! Evaluation protocols: stratified k-fold splits, nested cross-validated
//! hyperparameter search, leave-one-covariate-out importance, and learning
//! curves.
//!
//! Every protocol fits the full pipeline — preprocessing included — on
//! training rows only, so no statistic of a test fold ever reaches a fit.
//! All randomness is derived from an explicit seed; results are
//! bit-identical across runs and thread counts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureSchema;
use crate::ml::metrics::{mean_curve, roc_auc, RocCurve};
use crate::ml::{GbdtModel, Hyperparams, Matrix, MlError, PreprocessConfig, PreprocessorModel};
use crate::seeds::{self, tag};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("class {label} has {count} examples; cannot stratify into {folds} folds")]
    TooFewSamples { label: u8, count: usize, folds: usize },
    #[error("invalid evaluation config: {0}")]
    BadConfig(String),
    #[error("unknown leave-out target `{0}`")]
    UnknownTarget(String),
    #[error("a test fold contained a single class; AUC is undefined")]
    DegenerateFold,
    #[error(transparent)]
    Ml(#[from] MlError),
}

/// Splits rows into `n_folds` disjoint test sets with near-equal class
/// balance: each class is shuffled independently and dealt round-robin.
/// Returns the test-row indices per fold, each sorted ascending.
pub fn stratified_folds(labels: &[u8], n_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if n_folds < 2 {
        return Err(EvalError::BadConfig(format!("n_folds = {n_folds}, need at least 2")));
    }
    let mut rng = seeds::rng(seed, &[tag::FOLDS]);
    let mut folds = vec![Vec::new(); n_folds];
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if rows.len() < n_folds {
            return Err(EvalError::TooFewSamples {
                label: class,
                count: rows.len(),
                folds: n_folds,
            });
        }
        // Fisher-Yates, then deal.
        for i in (1..rows.len()).rev() {
            let j = rng.gen_range(0..=i);
            rows.swap(i, j);
        }
        for (k, row) in rows.into_iter().enumerate() {
            folds[k % n_folds].push(row);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

fn complement(folds: &[Vec<usize>], skip: usize) -> Vec<usize> {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != skip)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    train
}

/// One point in hyperparameter space: booster settings plus the
/// preprocessing thresholds they were searched jointly with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub hyperparams: Hyperparams,
    pub preprocess: PreprocessConfig,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            hyperparams: Hyperparams::default(),
            preprocess: PreprocessConfig::default(),
        }
    }
}

/// Ranges for random search. `learning_rate` is sampled log-uniformly, the
/// rest uniformly; integer ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub n_trees: (usize, usize),
    pub max_depth: (usize, usize),
    pub learning_rate: (f64, f64),
    pub null_threshold: (f64, f64),
    pub corr_threshold: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            n_trees: (50, 400),
            max_depth: (2, 8),
            learning_rate: (0.01, 0.3),
            null_threshold: (0.7, 0.95),
            corr_threshold: (0.6, 0.9),
        }
    }
}

impl SearchSpace {
    /// Draw order is part of the reproducibility contract; do not reorder.
    pub fn sample(&self, rng: &mut impl Rng) -> CandidateConfig {
        let n_trees = rng.gen_range(self.n_trees.0..=self.n_trees.1);
        let max_depth = rng.gen_range(self.max_depth.0..=self.max_depth.1);
        let lr = {
            let (lo, hi) = self.learning_rate;
            (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
        };
        let null_threshold = rng.gen_range(self.null_threshold.0..=self.null_threshold.1);
        let corr_threshold = rng.gen_range(self.corr_threshold.0..=self.corr_threshold.1);
        CandidateConfig {
            hyperparams: Hyperparams {
                n_trees,
                max_depth,
                learning_rate: lr,
                ..Hyperparams::default()
            },
            preprocess: PreprocessConfig {
                null_threshold,
                corr_threshold,
            },
        }
    }
}

/// Fits the full pipeline on `train` rows and returns predicted
/// probabilities for `test` rows, in `test` order.
pub fn fit_and_score(
    x: &Matrix,
    y: &[u8],
    train: &[usize],
    test: &[usize],
    cfg: &CandidateConfig,
) -> Result<Vec<f64>, MlError> {
    let x_train = x.select_rows(train);
    let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let (prep, transformed) = PreprocessorModel::fit_transform(&x_train, &cfg.preprocess)?;
    let model = GbdtModel::train(&transformed, &y_train, &cfg.hyperparams)?;
    let x_test = prep.transform(&x.select_rows(test))?;
    Ok(model.predict_proba(&x_test))
}

fn fold_auc(
    x: &Matrix,
    y: &[u8],
    train: &[usize],
    test: &[usize],
    cfg: &CandidateConfig,
) -> Result<f64, EvalError> {
    let scores = fit_and_score(x, y, train, test, cfg)?;
    let labels: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    roc_auc(&scores, &labels).ok_or(EvalError::DegenerateFold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedCvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    /// Number of random-search candidates per outer fold.
    pub budget: usize,
    pub seed: u64,
    pub space: SearchSpace,
    /// Points in the false-positive-rate grid used to average fold ROC
    /// curves.
    pub roc_grid: usize,
}

impl Default for NestedCvConfig {
    fn default() -> Self {
        NestedCvConfig {
            outer_folds: 10,
            inner_folds: 3,
            budget: 10,
            seed: 0,
            space: SearchSpace::default(),
            roc_grid: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterFoldOutcome {
    pub fold: usize,
    /// AUC of the selected configuration on this fold's held-out rows.
    pub auc: f64,
    pub chosen: CandidateConfig,
    /// Inner-CV mean AUC that won the search.
    pub inner_mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedCvResult {
    pub outer: Vec<OuterFoldOutcome>,
    pub mean_auc: f64,
    /// Population standard deviation of the outer-fold AUCs.
    pub std_auc: f64,
    /// Vertically averaged ROC curve on a uniform false-positive-rate grid.
    pub mean_roc: Vec<(f64, f64)>,
}

/// Nested cross-validation: an inner random search selects a configuration
/// per outer fold; the outer AUCs estimate generalization of the whole
/// selection procedure, not of any single configuration.
pub fn nested_cv(x: &Matrix, y: &[u8], cfg: &NestedCvConfig) -> Result<NestedCvResult, EvalError> {
    if cfg.budget == 0 {
        return Err(EvalError::BadConfig("search budget = 0".into()));
    }
    if cfg.roc_grid < 2 {
        return Err(EvalError::BadConfig(format!("roc_grid = {}", cfg.roc_grid)));
    }
    let folds = stratified_folds(y, cfg.outer_folds, cfg.seed)?;

    let per_fold: Vec<Result<(OuterFoldOutcome, Vec<(f64, f64)>), EvalError>> = (0..cfg.outer_folds)
        .into_par_iter()
        .map(|k| {
            let test = &folds[k];
            let train = complement(&folds, k);
            let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();

            let mut rng = seeds::rng(cfg.seed, &[tag::SEARCH, k as u64]);
            let candidates: Vec<CandidateConfig> =
                (0..cfg.budget).map(|_| cfg.space.sample(&mut rng)).collect();

            let inner_seed = seeds::derive(cfg.seed, &[tag::FOLDS, 1 + k as u64]);
            let inner_folds = stratified_folds(&y_train, cfg.inner_folds, inner_seed)?;

            let mut best: Option<(usize, f64)> = None;
            for (c, candidate) in candidates.iter().enumerate() {
                let mut sum = 0.0;
                for j in 0..cfg.inner_folds {
                    // Inner folds hold local indices into `train`.
                    let inner_test: Vec<usize> = inner_folds[j].iter().map(|&i| train[i]).collect();
                    let inner_train: Vec<usize> = complement(&inner_folds, j)
                        .into_iter()
                        .map(|i| train[i])
                        .collect();
                    sum += fold_auc(x, y, &inner_train, &inner_test, candidate)?;
                }
                let mean = sum / cfg.inner_folds as f64;
                // Strict comparison: ties keep the earliest candidate.
                if best.map_or(true, |(_, incumbent)| mean > incumbent) {
                    best = Some((c, mean));
                }
            }
            let (chosen_idx, inner_mean_auc) = best.expect("budget >= 1");
            let chosen = candidates[chosen_idx].clone();

            let scores = fit_and_score(x, y, &train, test, &chosen)?;
            let labels: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            let auc = roc_auc(&scores, &labels).ok_or(EvalError::DegenerateFold)?;
            let curve = RocCurve::compute(&scores, &labels)
                .ok_or(EvalError::DegenerateFold)?
                .sample_grid(cfg.roc_grid);
            Ok((
                OuterFoldOutcome {
                    fold: k,
                    auc,
                    chosen,
                    inner_mean_auc,
                },
                curve,
            ))
        })
        .collect();

    let mut outer = Vec::with_capacity(cfg.outer_folds);
    let mut curves = Vec::with_capacity(cfg.outer_folds);
    for item in per_fold {
        let (outcome, curve) = item?;
        outer.push(outcome);
        curves.push(curve);
    }

    let aucs: Vec<f64> = outer.iter().map(|o| o.auc).collect();
    let mean_auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
    let var = aucs.iter().map(|a| (a - mean_auc).powi(2)).sum::<f64>() / aucs.len() as f64;
    Ok(NestedCvResult {
        outer,
        mean_auc,
        std_auc: var.sqrt(),
        mean_roc: mean_curve(&curves),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocoConfig {
    pub folds: usize,
    pub seed: u64,
    /// Fixed configuration used for the baseline and every reduced fit.
    pub candidate: CandidateConfig,
}

impl Default for LocoConfig {
    fn default() -> Self {
        LocoConfig {
            folds: 5,
            seed: 0,
            candidate: CandidateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocoEntry {
    pub target: String,
    /// Schema columns removed for this entry.
    pub columns: Vec<usize>,
    pub mean_auc: f64,
    /// Baseline mean AUC minus this entry's mean AUC. Positive means the
    /// removed columns carried information the rest could not replace.
    pub auc_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocoResult {
    pub baseline_auc: f64,
    pub entries: Vec<LocoEntry>,
}

/// Leave-one-covariate-out importance: retrain without a feature (or a whole
/// named feature group) on the same folds as the baseline and report the AUC
/// drop. Targets name either a single feature or a schema group.
pub fn loco(
    x: &Matrix,
    y: &[u8],
    schema: &FeatureSchema,
    targets: &[String],
    cfg: &LocoConfig,
) -> Result<LocoResult, EvalError> {
    if x.n_cols() != schema.len() {
        return Err(EvalError::Ml(MlError::SchemaMismatch {
            expected: schema.len(),
            found: x.n_cols(),
        }));
    }
    let mut resolved: Vec<(String, Vec<usize>)> = Vec::with_capacity(targets.len());
    for target in targets {
        let columns = if let Some(idx) = schema.index_of(target) {
            vec![idx]
        } else if let Some(group) = schema.group(target) {
            group
        } else {
            return Err(EvalError::UnknownTarget(target.clone()));
        };
        resolved.push((target.clone(), columns));
    }

    let folds = stratified_folds(y, cfg.folds, seeds::derive(cfg.seed, &[tag::LOCO]))?;
    let fold_mean = |matrix: &Matrix| -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for k in 0..cfg.folds {
            let train = complement(&folds, k);
            sum += fold_auc(matrix, y, &train, &folds[k], &cfg.candidate)?;
        }
        Ok(sum / cfg.folds as f64)
    };

    let baseline_auc = fold_mean(x)?;
    let entries: Vec<Result<LocoEntry, EvalError>> = resolved
        .into_par_iter()
        .map(|(target, columns)| {
            let set: std::collections::BTreeSet<usize> = columns.iter().copied().collect();
            let reduced = x.drop_columns(&set);
            if reduced.n_cols() == 0 {
                return Err(EvalError::Ml(MlError::AllFeaturesDropped));
            }
            let mean_auc = fold_mean(&reduced)?;
            Ok(LocoEntry {
                target,
                columns,
                mean_auc,
                auc_loss: baseline_auc - mean_auc,
            })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>, _>>()?;

    Ok(LocoResult { baseline_auc, entries })
}

/// The sample fractions a learning curve is evaluated at.
pub const CURVE_FRACTIONS: [f64; 5] = [0.01, 0.25, 0.50, 0.75, 1.00];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub folds: usize,
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub candidate: CandidateConfig,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            folds: 10,
            fractions: CURVE_FRACTIONS.to_vec(),
            seed: 0,
            candidate: CandidateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    /// Mean test AUC across folds; NaN when unavailable.
    pub mean_auc: f64,
    pub std_auc: f64,
    /// False when the fraction left some training fold without at least one
    /// example of each class.
    pub available: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub points: Vec<CurvePoint>,
}

/// Test AUC as a function of training-set size. Each fold's training side is
/// stratified-subsampled to the requested fraction; the test fold is always
/// the full held-out fold, so points are comparable across fractions.
pub fn learning_curve(x: &Matrix, y: &[u8], cfg: &CurveConfig) -> Result<CurveResult, EvalError> {
    for &f in &cfg.fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(EvalError::BadConfig(format!("fraction {f} outside (0, 1]")));
        }
    }
    let folds = stratified_folds(y, cfg.folds, seeds::derive(cfg.seed, &[tag::CURVE]))?;

    // One job per (fraction, fold); Ok(None) marks an unavailable fold.
    let jobs: Vec<(usize, usize)> = (0..cfg.fractions.len())
        .flat_map(|fi| (0..cfg.folds).map(move |k| (fi, k)))
        .collect();
    let outcomes: Vec<Result<Option<f64>, EvalError>> = jobs
        .par_iter()
        .map(|&(fi, k)| {
            let fraction = cfg.fractions[fi];
            let train = complement(&folds, k);
            let subsampled = if fraction < 1.0 {
                let mut rng = seeds::rng(cfg.seed, &[tag::SUBSAMPLE, fi as u64, k as u64]);
                let mut keep = Vec::new();
                for class in [0u8, 1u8] {
                    let mut rows: Vec<usize> =
                        train.iter().copied().filter(|&i| y[i] == class).collect();
                    let take = (rows.len() as f64 * fraction).round() as usize;
                    if take == 0 {
                        return Ok(None);
                    }
                    for i in (1..rows.len()).rev() {
                        let j = rng.gen_range(0..=i);
                        rows.swap(i, j);
                    }
                    keep.extend(rows.into_iter().take(take));
                }
                keep.sort_unstable();
                keep
            } else {
                train
            };
            fold_auc(x, y, &subsampled, &folds[k], &cfg.candidate).map(Some)
        })
        .collect();

    let mut per_fraction: Vec<Vec<Option<f64>>> = vec![Vec::new(); cfg.fractions.len()];
    for (&(fi, _), outcome) in jobs.iter().zip(outcomes) {
        per_fraction[fi].push(outcome?);
    }

    let points = cfg
        .fractions
        .iter()
        .zip(per_fraction)
        .map(|(&fraction, fold_aucs)| {
            if fold_aucs.iter().any(|a| a.is_none()) {
                return CurvePoint {
                    fraction,
                    mean_auc: f64::NAN,
                    std_auc: f64::NAN,
                    available: false,
                };
            }
            let aucs: Vec<f64> = fold_aucs.into_iter().map(|a| a.unwrap()).collect();
            let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
            let var = aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / aucs.len() as f64;
            CurvePoint {
                fraction,
                mean_auc: mean,
                std_auc: var.sqrt(),
                available: true,
            }
        })
        .collect();

    Ok(CurveResult { points })
}
