//! Single-variable imputation engines. Predictor matrices carry no intercept
//! column; the parametric methods add one.

use nalgebra::DMatrix;

use super::ImputeError;
use crate::regress::{draw_posterior, ols_fit, DesignMatrix, OlsFit};
use crate::rng::RngStream;
use crate::trees::{cart_fit, rf_fit, rf_predict, Forest, ForestParams, TreeParams};

fn check_shapes(x_obs: &DMatrix<f64>, y_obs: &[f64], x_mis: &DMatrix<f64>) -> Result<(), ImputeError> {
    if x_obs.nrows() != y_obs.len() || x_obs.ncols() != x_mis.ncols() {
        return Err(ImputeError::Shape {
            detail: format!(
                "x_obs {}x{}, y_obs {}, x_mis {}x{}",
                x_obs.nrows(),
                x_obs.ncols(),
                y_obs.len(),
                x_mis.nrows(),
                x_mis.ncols()
            ),
        });
    }
    Ok(())
}

fn require_observed(got: usize, needed: usize) -> Result<(), ImputeError> {
    if got < needed {
        return Err(ImputeError::TooFewObserved { needed, got });
    }
    Ok(())
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    (0..x.ncols()).map(|j| x[(i, j)]).collect()
}

fn intercept_row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    std::iter::once(1.0).chain((0..x.ncols()).map(|j| x[(i, j)])).collect()
}

fn fit_linear(x_obs: &DMatrix<f64>, y_obs: &[f64]) -> Result<OlsFit, ImputeError> {
    // One residual degree of freedom is needed for the variance draw.
    require_observed(y_obs.len(), x_obs.ncols() + 2)?;
    Ok(ols_fit(&DesignMatrix::with_intercept(x_obs), y_obs)?)
}

/// Bayesian linear regression: one posterior draw of `(beta, sigma^2)`, then
/// `x beta* + N(0, sigma2*)` per missing row.
pub fn impute_norm(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    stream: &mut RngStream,
) -> Result<Vec<f64>, ImputeError> {
    check_shapes(x_obs, y_obs, x_mis)?;
    if x_mis.nrows() == 0 {
        return Ok(Vec::new());
    }
    let fit = fit_linear(x_obs, y_obs)?;
    let draw = draw_posterior(&fit, stream)?;
    let sd = draw.sigma2_star.sqrt();
    Ok((0..x_mis.nrows())
        .map(|i| draw.predict_row(&intercept_row(x_mis, i)) + sd * stream.standard_normal())
        .collect())
}

/// Indices of the `k` observed rows whose predictions are closest to `target`;
/// ties go to the lower row index.
pub fn donor_pool(pred_obs: &[f64], target: f64, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pred_obs.len()).collect();
    let key = |i: usize| (pred_obs[i] - target).abs();
    let cmp = |a: &usize, b: &usize| key(*a).total_cmp(&key(*b)).then(a.cmp(b));
    let k = k.min(idx.len());
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

/// Predictive mean matching with type-1 matching: observed rows are predicted
/// from the least-squares fit, missing rows from a posterior draw.
pub fn impute_pmm(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    donors: usize,
    stream: &mut RngStream,
) -> Result<Vec<f64>, ImputeError> {
    check_shapes(x_obs, y_obs, x_mis)?;
    if donors < 1 {
        return Err(ImputeError::Shape {
            detail: "donors must be >= 1".into(),
        });
    }
    if x_mis.nrows() == 0 {
        return Ok(Vec::new());
    }
    require_observed(y_obs.len(), donors)?;
    let fit = fit_linear(x_obs, y_obs)?;
    let draw = draw_posterior(&fit, stream)?;
    let pred_obs: Vec<f64> = (0..x_obs.nrows())
        .map(|i| fit.predict_row(&intercept_row(x_obs, i)))
        .collect();
    Ok((0..x_mis.nrows())
        .map(|i| {
            let target = draw.predict_row(&intercept_row(x_mis, i));
            let pool = donor_pool(&pred_obs, target, donors);
            y_obs[pool[stream.index(pool.len())]]
        })
        .collect())
}

/// How a donor is taken from a tree leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafDraw {
    /// One leaf member uniformly.
    Uniform,
    /// Resample the leaf with replacement, then draw one member of the resample.
    Bootstrap,
}

pub fn impute_cart(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    params: &TreeParams,
    leaf_draw: LeafDraw,
    stream: &mut RngStream,
) -> Result<Vec<f64>, ImputeError> {
    check_shapes(x_obs, y_obs, x_mis)?;
    if x_mis.nrows() == 0 {
        return Ok(Vec::new());
    }
    require_observed(y_obs.len(), 1)?;
    let tree = cart_fit(x_obs, y_obs, params)?;
    Ok((0..x_mis.nrows())
        .map(|i| {
            let members = tree.leaf_members(&row(x_mis, i));
            match leaf_draw {
                LeafDraw::Uniform => y_obs[members[stream.index(members.len())]],
                LeafDraw::Bootstrap => {
                    let resample: Vec<usize> =
                        (0..members.len()).map(|_| members[stream.index(members.len())]).collect();
                    y_obs[resample[stream.index(resample.len())]]
                }
            }
        })
        .collect())
}

/// Forest donors: per missing row, a tree is chosen uniformly and a member of
/// that tree's leaf (bootstrap rows included with multiplicity) is drawn.
pub fn impute_rf_doove(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    params: &ForestParams,
    stream: &mut RngStream,
) -> Result<Vec<f64>, ImputeError> {
    impute_rf_doove_with_forest(x_obs, y_obs, x_mis, params, stream).map(|(v, _)| v)
}

pub(crate) fn impute_rf_doove_with_forest(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    params: &ForestParams,
    stream: &mut RngStream,
) -> Result<(Vec<f64>, Option<Forest>), ImputeError> {
    check_shapes(x_obs, y_obs, x_mis)?;
    if x_mis.nrows() == 0 {
        return Ok((Vec::new(), None));
    }
    require_observed(y_obs.len(), 2)?;
    let forest = rf_fit(x_obs, y_obs, params, stream)?;
    let values = (0..x_mis.nrows())
        .map(|i| {
            let tree = &forest.trees[stream.index(forest.trees.len())].tree;
            let members = tree.leaf_members(&row(x_mis, i));
            y_obs[members[stream.index(members.len())]]
        })
        .collect();
    Ok((values, Some(forest)))
}

/// Normal draws around the forest prediction with the out-of-bag error as
/// variance, the forest being fit to a bootstrap sample of the observed rows.
pub fn impute_rf_caliber(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    params: &ForestParams,
    stream: &mut RngStream,
) -> Result<Vec<f64>, ImputeError> {
    caliber_draws(x_obs, y_obs, x_mis, params, stream).map(|c| c.values)
}

pub(crate) struct CaliberDraws {
    pub values: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub predictions: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub oob_mse: f64,
}

pub(crate) fn caliber_draws(
    x_obs: &DMatrix<f64>,
    y_obs: &[f64],
    x_mis: &DMatrix<f64>,
    params: &ForestParams,
    stream: &mut RngStream,
) -> Result<CaliberDraws, ImputeError> {
    check_shapes(x_obs, y_obs, x_mis)?;
    if x_mis.nrows() == 0 {
        return Ok(CaliberDraws {
            values: Vec::new(),
            predictions: Vec::new(),
            oob_mse: 0.0,
        });
    }
    let n = y_obs.len();
    require_observed(n, 2)?;
    let boot: Vec<usize> = (0..n).map(|_| stream.index(n)).collect();
    let xb = x_obs.select_rows(&boot);
    let yb: Vec<f64> = boot.iter().map(|&i| y_obs[i]).collect();
    let forest = rf_fit(&xb, &yb, params, stream)?;
    let sd = forest.oob_mse.sqrt();
    let predictions: Vec<f64> = (0..x_mis.nrows()).map(|i| rf_predict(&forest, &row(x_mis, i))).collect();
    let values = predictions.iter().map(|&p| p + sd * stream.standard_normal()).collect();
    Ok(CaliberDraws {
        values,
        predictions,
        oob_mse: forest.oob_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, Label};

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn step_arm(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut s = derive_stream(seed, &[(Label::Datagen, 0)]);
        let x: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let y = x
            .iter()
            .map(|&v| if v > 0.0 { 100.0 } else { 0.0 } + s.standard_normal())
            .collect();
        (col(&x), y)
    }

    #[test]
    fn no_missing_rows_gives_empty_output() {
        let (x, y) = step_arm(30, 1);
        let none = DMatrix::<f64>::zeros(0, 1);
        let mut s = derive_stream(1, &[]);
        assert!(impute_norm(&x, &y, &none, &mut s).unwrap().is_empty());
        assert!(impute_pmm(&x, &y, &none, 5, &mut s).unwrap().is_empty());
        assert!(impute_cart(&x, &y, &none, &TreeParams::default(), LeafDraw::Uniform, &mut s)
            .unwrap()
            .is_empty());
        assert!(impute_rf_doove(&x, &y, &none, &ForestParams::default(), &mut s).unwrap().is_empty());
        assert!(impute_rf_caliber(&x, &y, &none, &ForestParams::default(), &mut s).unwrap().is_empty());
    }

    #[test]
    fn norm_on_perfect_line() {
        let x = col(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let y = [1.0, 3.0, 5.0, 7.0, 9.0];
        let out = impute_norm(&x, &y, &col(&[10.0, -1.0]), &mut derive_stream(2, &[])).unwrap();
        assert!((out[0] - 21.0).abs() < 1e-8 && (out[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn norm_requires_residual_df() {
        let x = col(&[0.0, 1.0]);
        let err = impute_norm(&x, &[1.0, 2.0], &col(&[0.5]), &mut derive_stream(1, &[])).unwrap_err();
        assert_eq!(err, ImputeError::TooFewObserved { needed: 3, got: 2 });
    }

    #[test]
    fn norm_imputations_center_on_true_conditional_mean() {
        let reps = 10_000;
        let x0 = 0.5;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut s = derive_stream(r as u64, &[(Label::Rep, 0)]);
            let x: Vec<f64> = (0..60).map(|_| s.standard_normal()).collect();
            let y: Vec<f64> = x.iter().map(|&v| 40.0 + 25.0 * v + 42.0 * s.standard_normal()).collect();
            vals.push(impute_norm(&col(&x), &y, &col(&[x0]), &mut s).unwrap()[0]);
        }
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        let truth = 40.0 + 25.0 * x0;
        assert!((mean - truth).abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean} vs {truth}");
    }

    #[test]
    fn donor_pool_matches_exhaustive_sort() {
        // Twelve observed rows with hand-chosen predictions, including a tie.
        let preds: [f64; 12] = [3.0, 7.5, 1.0, 4.2, 4.0, 9.0, 2.2, 5.1, 3.8, 6.6, 4.0, 0.5];
        for &target in &[4.1, 0.0, 9.9, 5.0, 3.9] {
            for k in 1..=12 {
                let mut oracle: Vec<usize> = (0..12).collect();
                oracle.sort_by(|&a, &b| {
                    let (da, db) = ((preds[a] - target).abs(), (preds[b] - target).abs());
                    da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                });
                oracle.truncate(k);
                assert_eq!(donor_pool(&preds, target, k), oracle, "target {target} k {k}");
            }
        }
        assert_eq!(donor_pool(&preds, 4.1, 3), vec![4, 10, 3]);
    }

    #[test]
    fn pmm_single_donor_is_nearest_prediction() {
        // Monotone data with no noise in the ordering: nearest prediction is nearest x.
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&v| 3.0 * v + 0.01 * (v * 7.0).sin()).collect();
        let out = impute_pmm(&col(&xs), &ys, &col(&[6.9, 13.2]), 1, &mut derive_stream(3, &[])).unwrap();
        assert_eq!(out, vec![ys[7], ys[13]]);
    }

    #[test]
    fn donor_methods_only_return_observed_values() {
        let (x, y) = step_arm(80, 4);
        let x_mis = col(&[-2.0, -0.1, 0.0, 0.3, 2.5, 10.0]);
        let mut s = derive_stream(5, &[]);
        let outs = [
            impute_pmm(&x, &y, &x_mis, 5, &mut s).unwrap(),
            impute_cart(&x, &y, &x_mis, &TreeParams::default(), LeafDraw::Uniform, &mut s).unwrap(),
            impute_cart(&x, &y, &x_mis, &TreeParams::default(), LeafDraw::Bootstrap, &mut s).unwrap(),
            impute_rf_doove(&x, &y, &x_mis, &ForestParams::default(), &mut s).unwrap(),
        ];
        for out in outs {
            assert_eq!(out.len(), 6);
            assert!(out.iter().all(|v| y.contains(v)));
        }
    }

    #[test]
    fn pmm_needs_enough_donors() {
        let (x, y) = step_arm(4, 1);
        let err = impute_pmm(&x, &y, &col(&[0.0]), 5, &mut derive_stream(1, &[])).unwrap_err();
        assert_eq!(err, ImputeError::TooFewObserved { needed: 5, got: 4 });
    }

    #[test]
    fn cart_root_only_draws_from_all_observed() {
        let x = col(&(0..8).map(|i| i as f64).collect::<Vec<_>>());
        let y: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let mut s = derive_stream(6, &[]);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..400 {
            let v = impute_cart(&x, &y, &col(&[3.0]), &TreeParams::default(), LeafDraw::Uniform, &mut s).unwrap()[0];
            seen.insert(v as i64);
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn cart_high_covariate_uses_high_leaf_donors() {
        let (x, y) = step_arm(200, 7);
        let tree = cart_fit(&x, &y, &TreeParams::default()).unwrap();
        let allowed: Vec<f64> = tree.leaf_members(&[2.0]).iter().map(|&i| y[i]).collect();
        let mut s = derive_stream(8, &[]);
        for mode in [LeafDraw::Uniform, LeafDraw::Bootstrap] {
            let out = impute_cart(&x, &y, &col(&[2.0; 50]), &TreeParams::default(), mode, &mut s).unwrap();
            assert!(out.iter().all(|v| allowed.contains(v) && *v > 50.0));
        }
    }

    #[test]
    fn single_tree_doove_draws_from_that_tree() {
        let (x, y) = step_arm(100, 9);
        let params = ForestParams {
            ntree: 1,
            mtry: Some(1),
            bootstrap: false,
            tree_params: TreeParams::default(),
        };
        let (out, forest) =
            impute_rf_doove_with_forest(&x, &y, &col(&[-1.0, 0.4, 2.0]), &params, &mut derive_stream(10, &[])).unwrap();
        let forest = forest.unwrap();
        let cart = cart_fit(&x, &y, &TreeParams::default()).unwrap();
        assert_eq!(forest.trees[0].tree, cart);
        for (v, q) in out.iter().zip([-1.0, 0.4, 2.0]) {
            let leaf: Vec<f64> = cart.leaf_members(&[q]).iter().map(|&i| y[i]).collect();
            assert!(leaf.contains(v));
        }
    }

    #[test]
    fn doove_high_arm_rate() {
        let (x, y) = step_arm(300, 11);
        let out = impute_rf_doove(&x, &y, &col(&[2.0; 10_000]), &ForestParams::default(), &mut derive_stream(12, &[])).unwrap();
        let high = out.iter().filter(|&&v| v > 50.0).count() as f64 / out.len() as f64;
        assert!(high > 0.95, "{high}");
    }

    #[test]
    fn caliber_constant_outcome() {
        let x = col(&(0..30).map(|i| i as f64).collect::<Vec<_>>());
        let out = impute_rf_caliber(&x, &[7.0; 30], &col(&[3.0, 50.0]), &ForestParams::default(), &mut derive_stream(13, &[])).unwrap();
        assert_eq!(out, vec![7.0, 7.0]);
    }

    #[test]
    fn caliber_draws_are_continuous() {
        let (x, y) = step_arm(100, 14);
        let out = impute_rf_caliber(&x, &y, &col(&[1.0; 20]), &ForestParams::default(), &mut derive_stream(15, &[])).unwrap();
        assert!(out.iter().any(|v| !y.contains(v)));
    }

    #[test]
    fn caliber_variance_decomposes() {
        let (x, y) = step_arm(60, 16);
        let x0 = col(&[0.8]);
        let reps = 10_000;
        let (mut vals, mut preds, mut oob) = (Vec::new(), Vec::new(), 0.0);
        for r in 0..reps {
            let c = caliber_draws(&x, &y, &x0, &ForestParams::default(), &mut derive_stream(r, &[(Label::Imp, 0)])).unwrap();
            vals.push(c.values[0]);
            preds.push(c.predictions[0]);
            oob += c.oob_mse;
        }
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let expected = var(&preds) + oob / reps as f64;
        let got = var(&vals);
        // SE of a sample variance from the fourth central moment.
        let m = vals.iter().sum::<f64>() / reps as f64;
        let m4 = vals.iter().map(|a| (a - m).powi(4)).sum::<f64>() / reps as f64;
        let se = ((m4 - got * got) / reps as f64).sqrt();
        assert!((got - expected).abs() < 4.0 * se, "{got} vs {expected} (se {se})");
    }
}
