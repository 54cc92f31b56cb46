//! Linear-model numerics: least squares, conjugate posterior draws for imputation,
//! and REML-fitted generalized least squares for repeated measures.

mod mmrm;
mod ols;

pub use mmrm::{
    cholesky_from_params, log_cholesky_params, reml_fit_mmrm, CovStructure, MmrmFit, MmrmOptions, RemlObjective, RepeatedSubject,
};
pub use ols::{draw_posterior, ols_fit, DesignMatrix, OlsFit, PosteriorDraw};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("insufficient data: {n} rows for {p} parameters")]
    InsufficientData { n: usize, p: usize },
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("empty data")]
    Empty,
}

/// Fits exposing a coefficient vector, its covariance and a residual df rule.
pub trait LinearFit {
    fn coefficients(&self) -> &DVector<f64>;
    fn coef_covariance(&self) -> &DMatrix<f64>;
    fn contrast_df(&self) -> f64;
}

/// A linear combination of fitted coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contrast {
    pub estimate: f64,
    pub se: f64,
    pub df: f64,
}

/// `c'coef` with standard error `sqrt(c' cov c)`.
pub fn contrast<F: LinearFit + ?Sized>(fit: &F, c: &[f64]) -> Result<Contrast, FitError> {
    let coef = fit.coefficients();
    if c.len() != coef.len() {
        return Err(FitError::DimensionMismatch {
            expected: coef.len(),
            got: c.len(),
        });
    }
    let cv = DVector::from_column_slice(c);
    let estimate = cv.dot(coef);
    let quad = (fit.coef_covariance() * &cv).dot(&cv);
    Ok(Contrast {
        estimate,
        se: quad.max(0.0).sqrt(),
        df: fit.contrast_df(),
    })
}
