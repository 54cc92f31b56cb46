//! Regression trees and random forests used as imputation engines.
//!
//! Splits minimize the within-child sum of squares. Candidate thresholds are the
//! midpoints between consecutive distinct predictor values; ties in improvement go
//! to the lower threshold and then to the lower variable index. A split is taken
//! only if both children keep at least `minbucket` rows and the improvement is at
//! least `cp` times the root sum of squares.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("no training rows")]
    Empty,
    #[error("predictor rows ({rows}) and outcomes ({outcomes}) differ in length")]
    LengthMismatch { rows: usize, outcomes: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub minbucket: usize,
    pub cp: f64,
    pub max_depth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            minbucket: 5,
            cp: 1e-4,
            max_depth: 30,
        }
    }
}

impl TreeParams {
    fn validate(&self) -> Result<(), TreeError> {
        if self.minbucket < 1 {
            return Err(TreeError::InvalidParams("minbucket must be >= 1".into()));
        }
        if !(self.cp >= 0.0) {
            return Err(TreeError::InvalidParams("cp must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        var: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        members: Vec<usize>,
        mean: f64,
    },
}

/// A fitted regression tree. Leaves keep the training-row indices they contain
/// (with multiplicity when the tree was grown on a bootstrap sample).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    var,
                    threshold,
                    left,
                    right,
                } => idx = if x[*var] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return idx,
            }
        }
    }

    /// Training rows in the leaf that `x` routes to.
    pub fn leaf_members(&self, x: &[f64]) -> &[usize] {
        assert_eq!(x.len(), self.n_features, "predictor dimension");
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { members, .. } => members,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_features, "predictor dimension");
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { mean, .. } => *mean,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// `(members, mean)` for every leaf.
    pub fn leaves(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { members, mean } => Some((members.as_slice(), *mean)),
            Node::Split { .. } => None,
        })
    }

    /// `(variable, threshold)` of the first split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.nodes[0] {
            Node::Split { var, threshold, .. } => Some((*var, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

struct BestSplit {
    var: usize,
    threshold: f64,
    improvement: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

struct Grower<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: TreeParams,
    min_improvement: f64,
    ss_floor: f64,
    nodes: Vec<Node>,
}

impl<'a> Grower<'a> {
    fn new(x: &'a DMatrix<f64>, y: &'a [f64], rows: &[usize], params: TreeParams) -> Self {
        let (_, ss) = mean_ss(y, rows);
        let raw = rows.iter().map(|&r| y[r] * y[r]).sum::<f64>();
        let ss_floor = 1e-12 * raw.max(f64::MIN_POSITIVE);
        Grower {
            x,
            y,
            params,
            min_improvement: (params.cp * ss).max(ss_floor),
            ss_floor,
            nodes: Vec::new(),
        }
    }

    fn best_split(&self, rows: &[usize], vars: &[usize]) -> Option<BestSplit> {
        let m = rows.len();
        let mb = self.params.minbucket;
        if m < 2 * mb {
            return None;
        }
        let (mean, ss) = mean_ss(self.y, rows);
        if ss <= self.ss_floor {
            return None;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<(f64, f64)> = Vec::with_capacity(m);
        for &v in vars {
            order.clear();
            order.extend(rows.iter().map(|&r| (self.x[(r, v)], self.y[r] - mean)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 1..m {
                left_sum += order[k - 1].1;
                if k < mb || m - k < mb || order[k - 1].0 == order[k].0 {
                    continue;
                }
                // Centered outcomes: SS reduction = S_L^2 m / (k (m - k)).
                let improvement = left_sum * left_sum * m as f64 / (k as f64 * (m - k) as f64);
                if best.is_none_or(|(_, _, b)| improvement > b) {
                    best = Some((v, 0.5 * (order[k - 1].0 + order[k].0), improvement));
                }
            }
        }
        let (var, threshold, improvement) = best?;
        if !(improvement > 0.0 && improvement >= self.min_improvement) {
            return None;
        }
        let (left, right) = rows.iter().partition(|&&r| self.x[(r, var)] <= threshold);
        Some(BestSplit {
            var,
            threshold,
            improvement,
            left,
            right,
        })
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, vars: &mut dyn FnMut() -> Vec<usize>) -> usize {
        let id = self.nodes.len();
        let split = if depth < self.params.max_depth {
            self.best_split(&rows, &vars())
        } else {
            None
        };
        match split {
            None => {
                let (mean, _) = mean_ss(self.y, &rows);
                self.nodes.push(Node::Leaf { members: rows, mean });
            }
            Some(s) => {
                debug_assert!(s.improvement > 0.0);
                self.nodes.push(Node::Split {
                    var: s.var,
                    threshold: s.threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                let left = self.grow(s.left, depth + 1, vars);
                let right = self.grow(s.right, depth + 1, vars);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[id]
                {
                    *l = left;
                    *r = right;
                }
            }
        }
        id
    }
}

fn mean_ss(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let m = rows.len() as f64;
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / m;
    let ss = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum();
    (mean, ss)
}

fn check_inputs(x: &DMatrix<f64>, y: &[f64]) -> Result<(), TreeError> {
    if y.is_empty() || x.ncols() == 0 {
        return Err(TreeError::Empty);
    }
    if x.nrows() != y.len() {
        return Err(TreeError::LengthMismatch {
            rows: x.nrows(),
            outcomes: y.len(),
        });
    }
    Ok(())
}

fn grow_tree(
    x: &DMatrix<f64>,
    y: &[f64],
    rows: Vec<usize>,
    params: TreeParams,
    vars: &mut dyn FnMut() -> Vec<usize>,
) -> RegressionTree {
    let mut grower = Grower::new(x, y, &rows, params);
    grower.grow(rows, 0, vars);
    RegressionTree {
        nodes: grower.nodes,
        n_features: x.ncols(),
    }
}

/// Greedy recursive partitioning of `(x, y)`.
pub fn cart_fit(x: &DMatrix<f64>, y: &[f64], params: &TreeParams) -> Result<RegressionTree, TreeError> {
    check_inputs(x, y)?;
    params.validate()?;
    let all: Vec<usize> = (0..x.ncols()).collect();
    Ok(grow_tree(x, y, (0..y.len()).collect(), *params, &mut || all.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub ntree: usize,
    /// Predictors sampled per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
    pub tree_params: TreeParams,
    /// Grow each tree on a bootstrap sample. Disabling it is a testing hook.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            ntree: 10,
            mtry: None,
            tree_params: TreeParams {
                minbucket: 5,
                cp: 0.0,
                max_depth: 30,
            },
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
            .clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestTree {
    pub tree: RegressionTree,
    /// Training rows drawn for this tree, with multiplicity.
    pub in_bag: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<ForestTree>,
    pub oob_mse: f64,
    /// Set when no row was ever out of bag and `oob_mse` is the in-sample MSE.
    pub oob_fallback: bool,
}

/// Bagged trees with per-split predictor sampling. Trees are grown in order from
/// `stream`, so a fixed stream gives a bitwise-identical forest.
pub fn rf_fit(
    x: &DMatrix<f64>,
    y: &[f64],
    params: &ForestParams,
    stream: &mut RngStream,
) -> Result<Forest, TreeError> {
    check_inputs(x, y)?;
    params.tree_params.validate()?;
    let (n, p) = x.shape();
    if n < 2 {
        return Err(TreeError::InvalidParams("a forest needs at least two rows".into()));
    }
    if params.ntree < 1 {
        return Err(TreeError::InvalidParams("ntree must be >= 1".into()));
    }
    if let Some(m) = params.mtry {
        if m < 1 || m > p {
            return Err(TreeError::InvalidParams(format!("mtry {m} outside 1..={p}")));
        }
    }
    let mtry = params.mtry_for(p);

    let mut trees = Vec::with_capacity(params.ntree);
    let mut oob_sum = vec![0.0; n];
    let mut oob_count = vec![0usize; n];
    let mut in_bag_flag = vec![false; n];
    for _ in 0..params.ntree {
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| stream.index(n)).collect()
        } else {
            (0..n).collect()
        };
        let tree = {
            let mut vars = || {
                if mtry == p {
                    (0..p).collect()
                } else {
                    let mut v = stream.sample_without_replacement(p, mtry);
                    v.sort_unstable();
                    v
                }
            };
            grow_tree(x, y, rows.clone(), params.tree_params, &mut vars)
        };
        in_bag_flag.iter_mut().for_each(|f| *f = false);
        for &r in &rows {
            in_bag_flag[r] = true;
        }
        let mut row = vec![0.0; p];
        for i in (0..n).filter(|&i| !in_bag_flag[i]) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[(i, j)];
            }
            oob_sum[i] += tree.predict(&row);
            oob_count[i] += 1;
        }
        trees.push(ForestTree { tree, in_bag: rows });
    }

    let scored: Vec<usize> = (0..n).filter(|&i| oob_count[i] > 0).collect();
    let mut forest = Forest {
        trees,
        oob_mse: 0.0,
        oob_fallback: scored.is_empty(),
    };
    if forest.oob_fallback {
        log::warn!("every row was in bag for every tree; using in-sample MSE");
        let mut row = vec![0.0; p];
        let mut sse = 0.0;
        for i in 0..n {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[(i, j)];
            }
            sse += (y[i] - rf_predict(&forest, &row)).powi(2);
        }
        forest.oob_mse = sse / n as f64;
    } else {
        forest.oob_mse = scored
            .iter()
            .map(|&i| (y[i] - oob_sum[i] / oob_count[i] as f64).powi(2))
            .sum::<f64>()
            / scored.len() as f64;
    }
    Ok(forest)
}

/// Mean of the per-tree leaf means.
pub fn rf_predict(forest: &Forest, x: &[f64]) -> f64 {
    forest.trees.iter().map(|t| t.tree.predict(x)).sum::<f64>() / forest.trees.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, Label};
    use proptest::prelude::*;

    fn column(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(xs.len(), 1, xs)
    }

    fn step_data(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut s = derive_stream(seed, &[(Label::Datagen, 0)]);
        let xs: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let y = xs
            .iter()
            .map(|&x| if x > 0.0 { 5.0 } else { 0.0 } + 0.01 * s.standard_normal())
            .collect();
        (column(&xs), y)
    }

    /// Exhaustive split search computing child sums of squares from scratch.
    fn brute_force_root(x: &DMatrix<f64>, y: &[f64], minbucket: usize) -> Option<f64> {
        let ss = |idx: &[usize]| {
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        let mut best: Option<f64> = None;
        for v in 0..x.ncols() {
            let mut vals: Vec<f64> = (0..x.nrows()).map(|i| x[(i, v)]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = (0..x.nrows()).partition(|&i| x[(i, v)] <= t);
                if l.len() < minbucket || r.len() < minbucket {
                    continue;
                }
                let within = ss(&l) + ss(&r);
                if best.is_none_or(|b| within < b) {
                    best = Some(within);
                }
            }
        }
        best
    }

    fn within_ss_of_split(x: &DMatrix<f64>, y: &[f64], var: usize, t: f64) -> f64 {
        let (l, r): (Vec<usize>, Vec<usize>) = (0..x.nrows()).partition(|&i| x[(i, var)] <= t);
        let ss = |idx: &[usize]| {
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        ss(&l) + ss(&r)
    }

    #[test]
    fn step_function_single_split_in_gap() {
        let (x, y) = step_data(200, 1);
        let params = TreeParams::default();
        let tree = cart_fit(&x, &y, &TreeParams { cp: 0.01, ..params }).unwrap();
        let (var, t) = tree.root_split().unwrap();
        assert_eq!(var, 0);
        let below = (0..200).map(|i| x[(i, 0)]).filter(|&v| v <= 0.0).fold(f64::MIN, f64::max);
        let above = (0..200).map(|i| x[(i, 0)]).filter(|&v| v > 0.0).fold(f64::MAX, f64::min);
        assert!(below < t && t < above, "{below} < {t} < {above}");
        assert_eq!(tree.n_leaves(), 2);
        let oracle = brute_force_root(&x, &y, 5).unwrap();
        assert!((within_ss_of_split(&x, &y, var, t) - oracle).abs() < 1e-9);
    }

    #[test]
    fn constant_outcome_gives_root_only() {
        let x = column(&(0..50).map(|i| i as f64).collect::<Vec<_>>());
        let tree = cart_fit(&x, &[0.1; 50], &TreeParams::default()).unwrap();
        assert_eq!(tree.n_leaves(), 1);
        assert_eq!(tree.leaf_members(&[3.0]).len(), 50);
    }

    #[test]
    fn too_few_rows_for_minbucket() {
        let x = column(&(0..9).map(|i| i as f64).collect::<Vec<_>>());
        let y: Vec<f64> = (0..9).map(|i| (i * i) as f64).collect();
        let tree = cart_fit(&x, &y, &TreeParams::default()).unwrap();
        assert_eq!(tree.n_leaves(), 1);
        let mut all = tree.leaf_members(&[0.0]).to_vec();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn empty_data_is_an_error() {
        let x = DMatrix::<f64>::zeros(0, 1);
        assert_eq!(cart_fit(&x, &[], &TreeParams::default()), Err(TreeError::Empty));
    }

    #[test]
    fn leaf_membership_replays_splits() {
        let (x, y) = step_data(200, 2);
        let tree = cart_fit(&x, &y, &TreeParams { cp: 0.01, ..Default::default() }).unwrap();
        let (_, t) = tree.root_split().unwrap();
        let mut got = tree.leaf_members(&[3.0]).to_vec();
        got.sort_unstable();
        let expected: Vec<usize> = (0..200).filter(|&i| x[(i, 0)] > t).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn leaves_partition_training_rows() {
        let mut s = derive_stream(3, &[]);
        let n = 150;
        let x = DMatrix::from_fn(n, 2, |_, _| s.standard_normal());
        let y: Vec<f64> = (0..n).map(|i| (2.0 * x[(i, 0)]).sin() * 10.0 + x[(i, 1)] + s.standard_normal()).collect();
        let tree = cart_fit(&x, &y, &TreeParams::default()).unwrap();
        let mut seen = vec![0; n];
        for (members, _) in tree.leaves() {
            assert!(members.len() >= 5);
            for &m in members {
                seen[m] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        for i in 0..n {
            let row = [x[(i, 0)], x[(i, 1)]];
            assert!(tree.leaf_members(&row).contains(&i));
        }
    }

    #[test]
    fn raising_cp_never_adds_leaves() {
        let mut s = derive_stream(4, &[]);
        let n = 200;
        let x = DMatrix::from_fn(n, 2, |_, _| s.standard_normal());
        let y: Vec<f64> = (0..n).map(|i| 20.0 * (x[(i, 0)] * 2.5).sin() + 5.0 * s.standard_normal()).collect();
        let mut last = usize::MAX;
        for cp in [0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3, 1.0] {
            let leaves = cart_fit(&x, &y, &TreeParams { cp, ..Default::default() }).unwrap().n_leaves();
            assert!(leaves <= last, "cp {cp}: {leaves} > {last}");
            last = leaves;
        }
        assert_eq!(last, 1);
    }

    proptest! {
        #[test]
        fn root_split_is_exhaustive_optimum(
            n in 10usize..=60,
            seed in 0u64..10_000,
            p in 1usize..=3,
            minbucket in 1usize..=6,
        ) {
            let mut s = derive_stream(seed, &[]);
            // Rounded predictors exercise tied values.
            let x = DMatrix::from_fn(n, p, |_, _| (s.standard_normal() * 4.0).round() / 4.0);
            let y: Vec<f64> = (0..n).map(|i| x[(i, 0)].powi(2) * 3.0 + s.standard_normal()).collect();
            let tree = cart_fit(&x, &y, &TreeParams { minbucket, cp: 0.0, max_depth: 30 }).unwrap();
            let oracle = brute_force_root(&x, &y, minbucket);
            match (tree.root_split(), oracle) {
                (Some((v, t)), Some(best)) => {
                    let got = within_ss_of_split(&x, &y, v, t);
                    prop_assert!((got - best).abs() <= 1e-9 * (1.0 + best.abs()), "{} vs {}", got, best);
                }
                (None, None) => {}
                (split, best) => prop_assert!(false, "tree {:?} oracle {:?}", split, best),
            }
        }

        #[test]
        fn forest_leaves_respect_minbucket(seed in 0u64..1000, minbucket in 1usize..8) {
            let mut s = derive_stream(seed, &[]);
            let n = 80;
            let x = DMatrix::from_fn(n, 3, |_, _| s.standard_normal());
            let y: Vec<f64> = (0..n).map(|i| x[(i, 1)] * 4.0 + s.standard_normal()).collect();
            let params = ForestParams {
                ntree: 5,
                tree_params: TreeParams { minbucket, cp: 0.0, max_depth: 30 },
                ..Default::default()
            };
            let forest = rf_fit(&x, &y, &params, &mut s).unwrap();
            for t in &forest.trees {
                for (members, _) in t.tree.leaves() {
                    prop_assert!(members.len() >= minbucket);
                }
            }
        }
    }

    #[test]
    fn single_tree_identity_forest_matches_cart() {
        let (x, y) = step_data(120, 5);
        let tp = TreeParams::default();
        let params = ForestParams {
            ntree: 1,
            mtry: Some(1),
            tree_params: tp,
            bootstrap: false,
        };
        let mut s = derive_stream(1, &[]);
        let forest = rf_fit(&x, &y, &params, &mut s).unwrap();
        assert!(forest.oob_fallback);
        let tree = cart_fit(&x, &y, &tp).unwrap();
        for v in [-2.0, -0.3, 0.0, 0.2, 1.7] {
            assert_eq!(rf_predict(&forest, &[v]), tree.predict(&[v]));
        }
    }

    #[test]
    fn oob_mse_tracks_noise_variance() {
        let n = 500;
        let sigma = 3.0;
        let mut s = derive_stream(6, &[]);
        let x = DMatrix::from_fn(n, 2, |_, _| s.standard_normal());
        let y: Vec<f64> = (0..n).map(|_| 10.0 + sigma * s.standard_normal()).collect();
        let forest = rf_fit(&x, &y, &ForestParams::default(), &mut s).unwrap();
        let v = sigma * sigma;
        assert!(forest.oob_mse > 0.8 * v && forest.oob_mse < 1.4 * v, "{}", forest.oob_mse);
    }

    #[test]
    fn forest_is_deterministic() {
        let (x, y) = step_data(100, 7);
        let fit = |seed| rf_fit(&x, &y, &ForestParams::default(), &mut derive_stream(seed, &[])).unwrap();
        assert_eq!(fit(9), fit(9));
        assert_ne!(fit(9), fit(10));
    }

    #[test]
    fn forest_prediction_properties() {
        let (x, y) = step_data(500, 8);
        let mut s = derive_stream(2, &[]);
        let mut forest = rf_fit(&x, &y, &ForestParams::default(), &mut s).unwrap();
        let lo = y.iter().cloned().fold(f64::MAX, f64::min);
        let hi = y.iter().cloned().fold(f64::MIN, f64::max);
        assert!((rf_predict(&forest, &[2.0]) - 5.0).abs() < 0.5);
        assert!((rf_predict(&forest, &[-2.0])).abs() < 0.5);
        for v in [-4.0, -1.0, 0.0, 0.5, 3.0, 10.0] {
            let pred = rf_predict(&forest, &[v]);
            assert!(pred >= lo && pred <= hi);
        }
        let before = rf_predict(&forest, &[0.3]);
        forest.trees.reverse();
        assert!((rf_predict(&forest, &[0.3]) - before).abs() < 1e-12);
        let one = forest.trees[0].clone();
        let same = Forest {
            trees: vec![one.clone(), one.clone(), one.clone()],
            ..forest.clone()
        };
        assert!((rf_predict(&same, &[0.3]) - one.tree.predict(&[0.3])).abs() < 1e-12);
    }

    #[test]
    fn invalid_forest_params() {
        let (x, y) = step_data(20, 1);
        let mut s = derive_stream(1, &[]);
        let bad = ForestParams { mtry: Some(2), ..Default::default() };
        assert!(rf_fit(&x, &y, &bad, &mut s).is_err());
        let bad = ForestParams { ntree: 0, ..Default::default() };
        assert!(rf_fit(&x, &y, &bad, &mut s).is_err());
        assert_eq!(ForestParams::default().mtry_for(1), 1);
        assert_eq!(ForestParams::default().mtry_for(4), 2);
        assert_eq!(ForestParams::default().mtry_for(5), 3);
    }
}
