//! Gradient-boosted decision trees for binary classification with
//! missing-value support.
//!
//! Second-order boosting on the logistic loss: each round fits a regression
//! tree to the per-row gradients `g = p - y` and hessians `h = p(1 - p)`.
//! Split gain is
//!
//! ```text
//! gain = 1/2 * ( G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda) )
//! ```
//!
//! and a leaf's value is `-G/(H+lambda) * learning_rate`. Trees grow
//! level-wise over exact presorted feature scans. Rows with a missing value
//! in the split feature are sent to whichever side scored better during
//! training (`missing_left`), evaluated for every candidate threshold in both
//! directions. Thresholds are actual feature values; the split predicate is
//! `value < threshold`.
//!
//! Training is bit-deterministic: features are scanned in index order, ties
//! keep the earliest candidate, and the only randomness (row subsampling) is
//! derived from the `seed` hyperparameter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Matrix, MlError};
use crate::seeds::{self, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
    /// Row fraction per tree; 1.0 disables subsampling.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 200,
            max_depth: 4,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<(), MlError> {
        let bad = |msg: String| Err(MlError::BadHyperparam(msg));
        if self.n_trees == 0 {
            return bad("n_trees = 0".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth = 0".into());
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad(format!("learning_rate = {}", self.learning_rate));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad(format!("lambda = {}", self.lambda));
        }
        if !self.min_child_weight.is_finite() || self.min_child_weight < 0.0 {
            return bad(format!("min_child_weight = {}", self.min_child_weight));
        }
        if !self.subsample.is_finite() || self.subsample <= 0.0 || self.subsample > 1.0 {
            return bad(format!("subsample = {}", self.subsample));
        }
        Ok(())
    }
}

/// A trained tree node. `Split` sends `value < threshold` left, `NaN` to the
/// `missing_left` side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        missing_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *missing_left } else { v < *threshold };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Feature indices referenced anywhere in this tree.
    pub fn features_used(&self, out: &mut std::collections::BTreeSet<usize>) {
        if let TreeNode::Split { feature, left, right, .. } = self {
            out.insert(*feature);
            left.features_used(out);
            right.features_used(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub hyperparams: Hyperparams,
    /// Initial margin: log-odds of the positive rate in training.
    pub base_score: f64,
    pub trees: Vec<TreeNode>,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic loss of a margin against a 0/1 label.
pub fn logistic_loss(label: f64, margin: f64) -> f64 {
    let p = sigmoid(margin);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// First derivative of [`logistic_loss`] in the margin.
pub fn gradient(label: f64, margin: f64) -> f64 {
    sigmoid(margin) - label
}

/// Second derivative of [`logistic_loss`] in the margin.
pub fn hessian(margin: f64) -> f64 {
    let p = sigmoid(margin);
    p * (1.0 - p)
}

/// Presorted view of one feature column.
struct SortedFeature {
    /// Non-missing row indices, ascending by value then row.
    order: Vec<u32>,
    /// Values aligned with `order`.
    values: Vec<f64>,
    /// Rows where this feature is missing.
    missing: Vec<u32>,
    /// No split possible (fewer than two rows or a single distinct value).
    constant: bool,
}

fn presort(x: &Matrix) -> Vec<SortedFeature> {
    (0..x.n_cols())
        .map(|col| {
            let mut order: Vec<u32> = Vec::new();
            let mut missing = Vec::new();
            for row in 0..x.n_rows() {
                if x.get(row, col).is_nan() {
                    missing.push(row as u32);
                } else {
                    order.push(row as u32);
                }
            }
            order.sort_unstable_by(|&a, &b| {
                x.get(a as usize, col)
                    .partial_cmp(&x.get(b as usize, col))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let values: Vec<f64> = order.iter().map(|&r| x.get(r as usize, col)).collect();
            let constant = match (values.first(), values.last()) {
                (Some(first), Some(last)) => first == last,
                _ => true,
            };
            SortedFeature {
                order,
                values,
                missing,
                constant,
            }
        })
        .collect()
}

const NO_NODE: i32 = -1;

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    missing_left: bool,
}

/// Arena form of a tree while it grows.
enum Arena {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        missing_left: bool,
        left: usize,
        right: usize,
    },
}

fn arena_to_tree(arena: &[Arena], idx: usize) -> TreeNode {
    match &arena[idx] {
        Arena::Leaf(value) => TreeNode::Leaf { value: *value },
        Arena::Split {
            feature,
            threshold,
            missing_left,
            left,
            right,
        } => TreeNode::Split {
            feature: *feature,
            threshold: *threshold,
            missing_left: *missing_left,
            left: Box::new(arena_to_tree(arena, *left)),
            right: Box::new(arena_to_tree(arena, *right)),
        },
    }
}

fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, g: f64, h: f64, lambda: f64) -> f64 {
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
}

#[allow(clippy::too_many_arguments)]
fn build_tree(
    x: &Matrix,
    sorted: &[SortedFeature],
    g: &[f64],
    h: &[f64],
    in_sample: &[bool],
    hp: &Hyperparams,
) -> TreeNode {
    let n = x.n_rows();
    let mut assign: Vec<i32> = (0..n).map(|r| if in_sample[r] { 0 } else { NO_NODE }).collect();

    let mut arena: Vec<Arena> = Vec::new();
    // Root totals.
    let (mut root_g, mut root_h, mut root_count) = (0.0, 0.0, 0usize);
    for r in 0..n {
        if in_sample[r] {
            root_g += g[r];
            root_h += h[r];
            root_count += 1;
        }
    }
    arena.push(Arena::Leaf(0.0)); // placeholder for the root slot

    // Per-level node state, indexed by the local id stored in `assign`.
    let mut arena_of: Vec<usize> = vec![0];
    let mut tot_g = vec![root_g];
    let mut tot_h = vec![root_h];
    let mut counts = vec![root_count];

    for _depth in 0..hp.max_depth {
        let n_nodes = arena_of.len();
        if n_nodes == 0 {
            break;
        }
        let mut best = vec![
            Candidate {
                gain: 0.0,
                feature: usize::MAX,
                threshold: 0.0,
                missing_left: false,
            };
            n_nodes
        ];

        let mut miss_g = vec![0.0; n_nodes];
        let mut miss_h = vec![0.0; n_nodes];
        let mut scan_g = vec![0.0; n_nodes];
        let mut scan_h = vec![0.0; n_nodes];
        let mut scan_count = vec![0usize; n_nodes];
        let mut prev_value = vec![0.0; n_nodes];

        for (feature, feat) in sorted.iter().enumerate() {
            if feat.constant {
                continue;
            }
            miss_g.iter_mut().for_each(|v| *v = 0.0);
            miss_h.iter_mut().for_each(|v| *v = 0.0);
            scan_g.iter_mut().for_each(|v| *v = 0.0);
            scan_h.iter_mut().for_each(|v| *v = 0.0);
            scan_count.iter_mut().for_each(|v| *v = 0);

            for &row in &feat.missing {
                let node = assign[row as usize];
                if node >= 0 {
                    miss_g[node as usize] += g[row as usize];
                    miss_h[node as usize] += h[row as usize];
                }
            }

            for (pos, &row) in feat.order.iter().enumerate() {
                let node = assign[row as usize];
                if node < 0 {
                    continue;
                }
                let node = node as usize;
                let value = feat.values[pos];
                if scan_count[node] > 0 && value > prev_value[node] {
                    // Candidate: rows with v < value go left.
                    let threshold = value;
                    let (ng, nh) = (tot_g[node], tot_h[node]);
                    // Missing right (default).
                    let (gl, hl) = (scan_g[node], scan_h[node]);
                    let (gr, hr) = (ng - gl, nh - hl);
                    if hl >= hp.min_child_weight && hr >= hp.min_child_weight {
                        let gain = split_gain(gl, hl, gr, hr, ng, nh, hp.lambda);
                        if gain > best[node].gain && gain > 0.0 {
                            best[node] = Candidate {
                                gain,
                                feature,
                                threshold,
                                missing_left: false,
                            };
                        }
                    }
                    // Missing left.
                    let (gl2, hl2) = (gl + miss_g[node], hl + miss_h[node]);
                    let (gr2, hr2) = (ng - gl2, nh - hl2);
                    if hl2 >= hp.min_child_weight && hr2 >= hp.min_child_weight {
                        let gain = split_gain(gl2, hl2, gr2, hr2, ng, nh, hp.lambda);
                        if gain > best[node].gain && gain > 0.0 {
                            best[node] = Candidate {
                                gain,
                                feature,
                                threshold,
                                missing_left: true,
                            };
                        }
                    }
                }
                scan_g[node] += g[row as usize];
                scan_h[node] += h[row as usize];
                scan_count[node] += 1;
                prev_value[node] = value;
            }
        }

        // Materialize splits and build the next level.
        let mut next_arena_of = Vec::new();
        let mut next_tot_g = Vec::new();
        let mut next_tot_h = Vec::new();
        let mut next_counts = Vec::new();
        // For each current node: NO_NODE if it became a leaf, else local id of
        // its left child (right child is +1).
        let mut child_base = vec![NO_NODE; n_nodes];
        let mut any_split = false;
        for node in 0..n_nodes {
            let cand = best[node];
            if cand.feature == usize::MAX {
                arena[arena_of[node]] =
                    Arena::Leaf(-tot_g[node] / (tot_h[node] + hp.lambda) * hp.learning_rate);
                continue;
            }
            any_split = true;
            let left_slot = arena.len();
            arena.push(Arena::Leaf(0.0));
            let right_slot = arena.len();
            arena.push(Arena::Leaf(0.0));
            arena[arena_of[node]] = Arena::Split {
                feature: cand.feature,
                threshold: cand.threshold,
                missing_left: cand.missing_left,
                left: left_slot,
                right: right_slot,
            };
            child_base[node] = next_arena_of.len() as i32;
            next_arena_of.extend([left_slot, right_slot]);
            next_tot_g.extend([0.0, 0.0]);
            next_tot_h.extend([0.0, 0.0]);
            next_counts.extend([0, 0]);
        }
        if !any_split {
            break;
        }

        for row in 0..n {
            let node = assign[row];
            if node < 0 {
                continue;
            }
            let node = node as usize;
            if child_base[node] == NO_NODE {
                assign[row] = NO_NODE; // finished in a leaf
                continue;
            }
            let (feature, threshold, missing_left) = match arena[arena_of[node]] {
                Arena::Split {
                    feature,
                    threshold,
                    missing_left,
                    ..
                } => (feature, threshold, missing_left),
                Arena::Leaf(_) => unreachable!("split node lost its slot"),
            };
            let v = x.get(row, feature);
            let go_left = if v.is_nan() { missing_left } else { v < threshold };
            let child = child_base[node] + i32::from(!go_left);
            assign[row] = child;
            let child = child as usize;
            next_tot_g[child] += g[row];
            next_tot_h[child] += h[row];
            next_counts[child] += 1;
        }

        arena_of = next_arena_of;
        tot_g = next_tot_g;
        tot_h = next_tot_h;
        counts = next_counts;
    }

    // Whatever survived to the depth limit becomes leaves.
    for (local, &slot) in arena_of.iter().enumerate() {
        if counts[local] > 0 || matches!(arena[slot], Arena::Leaf(_)) {
            arena[slot] = Arena::Leaf(-tot_g[local] / (tot_h[local] + hp.lambda) * hp.learning_rate);
        }
    }

    arena_to_tree(&arena, 0)
}

impl GbdtModel {
    /// Trains on standardized features `x` and 0/1 labels `y`.
    pub fn train(x: &Matrix, y: &[u8], hp: &Hyperparams) -> Result<GbdtModel, MlError> {
        hp.validate()?;
        let n = x.n_rows();
        if n == 0 || x.n_cols() == 0 {
            return Err(MlError::EmptyMatrix);
        }
        if y.len() != n {
            return Err(MlError::LabelMismatch { rows: n, labels: y.len() });
        }

        let positives = y.iter().filter(|&&v| v == 1).count() as f64;
        let rate = (positives / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (rate / (1.0 - rate)).ln();

        let sorted = presort(x);
        let mut margins = vec![base_score; n];
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        let mut trees = Vec::with_capacity(hp.n_trees);

        for t in 0..hp.n_trees {
            for i in 0..n {
                let p = sigmoid(margins[i]);
                g[i] = p - f64::from(y[i]);
                h[i] = p * (1.0 - p);
            }
            let in_sample: Vec<bool> = if hp.subsample < 1.0 {
                let mut rng = seeds::rng(hp.seed, &[tag::SUBSAMPLE, t as u64]);
                (0..n).map(|_| rng.gen_bool(hp.subsample)).collect()
            } else {
                vec![true; n]
            };
            let tree = build_tree(x, &sorted, &g, &h, &in_sample, hp);
            for i in 0..n {
                margins[i] += tree.predict(x.row(i));
            }
            trees.push(tree);
        }

        Ok(GbdtModel {
            hyperparams: hp.clone(),
            base_score,
            trees,
        })
    }

    pub fn predict_margin(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows())
            .map(|r| {
                let row = x.row(r);
                self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
            })
            .collect()
    }

    /// Probability of the positive (broken) class per row.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        self.predict_margin(x).into_iter().map(sigmoid).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn hand_hyperparams() -> Hyperparams {
        Hyperparams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            lambda: 1.0,
            min_child_weight: 0.0,
            subsample: 1.0,
            seed: 0,
        }
    }

    /// Two negatives at x=0, two positives at x=1: with lambda = 1 and one
    /// depth-1 tree the leaf values are exactly -2/3 and +2/3.
    #[test]
    fn hand_worked_split_is_exact() {
        let x = Matrix::new(4, 1, vec![0.0, 0.0, 1.0, 1.0]);
        let y = vec![0, 0, 1, 1];
        let model = GbdtModel::train(&x, &y, &hand_hyperparams()).unwrap();
        assert_eq!(model.base_score, 0.0);
        match &model.trees[0] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.0);
                let (TreeNode::Leaf { value: lv }, TreeNode::Leaf { value: rv }) = (&**left, &**right)
                else {
                    panic!("expected two leaves")
                };
                // g_left = 0.5+0.5 = 1, h_left = 0.5 -> -1/(0.5+1) = -2/3.
                assert_eq!(*lv, -(2.0 / 3.0));
                assert_eq!(*rv, 2.0 / 3.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        let proba = model.predict_proba(&x);
        assert!((proba[0] - sigmoid(-2.0 / 3.0)).abs() < 1e-15);
        assert!((proba[3] - sigmoid(2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let eps = 1e-5;
        for &label in &[0.0, 1.0] {
            for &margin in &[-2.0, -0.5, 0.0, 0.3, 1.7] {
                let numeric_g =
                    (logistic_loss(label, margin + eps) - logistic_loss(label, margin - eps)) / (2.0 * eps);
                assert!((numeric_g - gradient(label, margin)).abs() < 1e-6);
                let numeric_h = (gradient(label, margin + eps) - gradient(label, margin - eps)) / (2.0 * eps);
                assert!((numeric_h - hessian(margin)).abs() < 1e-6);
            }
        }
    }

    fn separable_data() -> (Matrix, Vec<u8>) {
        let n = 30;
        let mut values = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = u8::from(i % 2 == 0);
            // Two well-separated clusters with mild within-class spread.
            values.push(f64::from(label) * 10.0 + (i as f64) * 0.1);
            values.push((i as f64) * 0.37 % 3.0); // irrelevant second column
            y.push(label);
        }
        (Matrix::new(n, 2, values), y)
    }

    #[test]
    fn separable_data_is_ranked_perfectly() {
        let (x, y) = separable_data();
        let hp = Hyperparams {
            n_trees: 10,
            ..Hyperparams::default()
        };
        let model = GbdtModel::train(&x, &y, &hp).unwrap();
        let proba = model.predict_proba(&x);
        let min_pos = proba
            .iter()
            .zip(&y)
            .filter(|(_, &l)| l == 1)
            .map(|(p, _)| *p)
            .fold(f64::INFINITY, f64::min);
        let max_neg = proba
            .iter()
            .zip(&y)
            .filter(|(_, &l)| l == 0)
            .map(|(p, _)| *p)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_pos > max_neg, "positives must outrank negatives");
    }

    #[test]
    fn training_is_bit_deterministic() {
        let (x, y) = separable_data();
        let hp = Hyperparams {
            n_trees: 8,
            subsample: 0.8,
            seed: 9,
            ..Hyperparams::default()
        };
        let a = GbdtModel::train(&x, &y, &hp).unwrap();
        let b = GbdtModel::train(&x, &y, &hp).unwrap();
        assert_eq!(a, b);
        // JSON round trip must reproduce every leaf bit-for-bit.
        let serialized = serde_json::to_string(&a).unwrap();
        let back: GbdtModel = serde_json::from_str(&serialized).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn subsampling_changes_the_model_but_stays_deterministic() {
        let (x, y) = separable_data();
        let full = GbdtModel::train(&x, &y, &Hyperparams { n_trees: 8, ..Hyperparams::default() }).unwrap();
        let hp = Hyperparams {
            n_trees: 8,
            subsample: 0.6,
            seed: 1,
            ..Hyperparams::default()
        };
        let sub = GbdtModel::train(&x, &y, &hp).unwrap();
        assert_ne!(full, sub);
        assert_eq!(GbdtModel::train(&x, &y, &hp).unwrap(), sub);
    }

    #[test]
    fn missing_rows_are_routed_to_the_better_side() {
        // Missing feature value is itself the signal.
        let x = Matrix::new(
            6,
            1,
            vec![1.0, 2.0, 3.0, f64::NAN, f64::NAN, f64::NAN],
        );
        let y = vec![0, 0, 0, 1, 1, 1];
        let hp = Hyperparams {
            n_trees: 4,
            max_depth: 2,
            learning_rate: 0.5,
            min_child_weight: 0.0,
            ..Hyperparams::default()
        };
        let model = GbdtModel::train(&x, &y, &hp).unwrap();
        let test = Matrix::new(2, 1, vec![2.0, f64::NAN]);
        let proba = model.predict_proba(&test);
        assert!(proba[1] > proba[0], "missing row should look broken: {proba:?}");
    }

    #[test]
    fn constant_columns_are_never_split_on() {
        let n = 20;
        let mut values = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            values.push(7.0); // constant
            values.push(f64::from(u8::from(i % 2 == 0)) + (i as f64) * 0.01);
            y.push(u8::from(i % 2 == 0));
        }
        let x = Matrix::new(n, 2, values);
        let model = GbdtModel::train(&x, &y, &Hyperparams { n_trees: 5, ..Hyperparams::default() }).unwrap();
        let mut used = BTreeSet::new();
        for tree in &model.trees {
            tree.features_used(&mut used);
        }
        assert!(!used.contains(&0));
        assert!(used.contains(&1));
    }

    #[test]
    fn depth_limit_is_respected() {
        let (x, y) = separable_data();
        for depth in 1..=3 {
            let hp = Hyperparams {
                n_trees: 3,
                max_depth: depth,
                ..Hyperparams::default()
            };
            let model = GbdtModel::train(&x, &y, &hp).unwrap();
            for tree in &model.trees {
                assert!(tree.depth() <= depth);
            }
        }
    }

    #[test]
    fn invalid_hyperparameters_and_shapes_error_out() {
        let x = Matrix::new(2, 1, vec![0.0, 1.0]);
        let y = vec![0, 1];
        let bad = Hyperparams { n_trees: 0, ..Hyperparams::default() };
        assert!(matches!(GbdtModel::train(&x, &y, &bad), Err(MlError::BadHyperparam(_))));
        let bad = Hyperparams { subsample: 0.0, ..Hyperparams::default() };
        assert!(matches!(GbdtModel::train(&x, &y, &bad), Err(MlError::BadHyperparam(_))));
        let bad = Hyperparams { learning_rate: 0.0, ..Hyperparams::default() };
        assert!(matches!(GbdtModel::train(&x, &y, &bad), Err(MlError::BadHyperparam(_))));

        let empty = Matrix::new(0, 0, vec![]);
        assert!(matches!(
            GbdtModel::train(&empty, &[], &Hyperparams::default()),
            Err(MlError::EmptyMatrix)
        ));
        assert!(matches!(
            GbdtModel::train(&x, &[1], &Hyperparams::default()),
            Err(MlError::LabelMismatch { rows: 2, labels: 1 })
        ));
    }

    #[test]
    fn predictions_stay_finite_on_noisy_inputs() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let cols = 5;
        let mut values = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            for _ in 0..cols {
                if rng.gen_bool(0.2) {
                    values.push(f64::NAN);
                } else {
                    values.push(rng.gen_range(-3.0..3.0));
                }
            }
            y.push(u8::from(i % 3 == 0));
        }
        let x = Matrix::new(n, cols, values);
        let model = GbdtModel::train(&x, &y, &Hyperparams { n_trees: 12, ..Hyperparams::default() }).unwrap();
        for p in model.predict_proba(&x) {
            assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
    }
}
