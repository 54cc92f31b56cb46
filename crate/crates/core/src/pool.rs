//! Rubin's rules with the Barnard–Rubin small-sample degrees of freedom.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoolError {
    #[error("pooling needs at least 2 imputations, got {0}")]
    TooFewImputations(usize),
    #[error("estimates ({0}) and variances ({1}) differ in length")]
    LengthMismatch(usize, usize),
    #[error("variances must be finite and non-negative")]
    InvalidVariance,
    #[error("estimates must be finite")]
    NonFiniteEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledEstimate {
    pub qbar: f64,
    pub within: f64,
    pub between: f64,
    pub total_var: f64,
    pub df: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub m: usize,
}

impl PooledEstimate {
    pub fn se(&self) -> f64 {
        self.total_var.sqrt()
    }
}

/// Two-sided interval and test for a single estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TInference {
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

/// Upper `1 - alpha/2` quantile of t with `df` degrees of freedom (normal when
/// `df` is infinite or astronomically large).
pub fn t_quantile(df: f64, alpha: f64) -> f64 {
    let p = 1.0 - alpha / 2.0;
    if !df.is_finite() || df > 1e10 {
        Normal::standard().inverse_cdf(p)
    } else {
        StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(p)
    }
}

fn t_two_sided(stat: f64, df: f64) -> f64 {
    let tail = if !df.is_finite() || df > 1e10 {
        Normal::standard().cdf(-stat.abs())
    } else {
        StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(-stat.abs())
    };
    (2.0 * tail).min(1.0)
}

/// `est ± t_{df} se` and the two-sided p-value against `null_value`. A zero SE
/// gives a degenerate interval with `p = 1` only when `est` equals the null.
pub fn t_inference(est: f64, se: f64, df: f64, alpha: f64, null_value: f64) -> TInference {
    if se <= 0.0 {
        return TInference {
            ci_low: est,
            ci_high: est,
            p_value: if est == null_value { 1.0 } else { 0.0 },
        };
    }
    let half = t_quantile(df, alpha) * se;
    TInference {
        ci_low: est - half,
        ci_high: est + half,
        p_value: t_two_sided((est - null_value) / se, df),
    }
}

pub fn rubin_pool(
    estimates: &[f64],
    variances: &[f64],
    df_com: f64,
    alpha: f64,
    null_value: f64,
) -> Result<PooledEstimate, PoolError> {
    let m = estimates.len();
    if variances.len() != m {
        return Err(PoolError::LengthMismatch(m, variances.len()));
    }
    if m < 2 {
        return Err(PoolError::TooFewImputations(m));
    }
    if estimates.iter().any(|e| !e.is_finite()) {
        return Err(PoolError::NonFiniteEstimate);
    }
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(PoolError::InvalidVariance);
    }
    let mf = m as f64;
    let qbar = estimates.iter().sum::<f64>() / mf;
    let within = variances.iter().sum::<f64>() / mf;
    let between = estimates.iter().map(|q| (q - qbar).powi(2)).sum::<f64>() / (mf - 1.0);
    let inflated = (1.0 + 1.0 / mf) * between;
    let total_var = within + inflated;

    let lambda = if total_var > 0.0 { inflated / total_var } else { 0.0 };
    let inv_old = lambda * lambda / (mf - 1.0);
    let df_obs = (df_com + 1.0) / (df_com + 3.0) * df_com * (1.0 - lambda);
    let inv_obs = if df_obs.is_finite() { 1.0 / df_obs } else { 0.0 };
    let df = if inv_old + inv_obs > 0.0 {
        1.0 / (inv_old + inv_obs)
    } else {
        f64::INFINITY
    };
    let inf = t_inference(qbar, total_var.sqrt(), df, alpha, null_value);
    Ok(PooledEstimate {
        qbar,
        within,
        between,
        total_var,
        df,
        ci_low: inf.ci_low,
        ci_high: inf.ci_high,
        p_value: inf.p_value,
        m,
    })
}
