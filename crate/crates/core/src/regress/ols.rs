use nalgebra::{DMatrix, DVector};

use super::{FitError, LinearFit};
use crate::rng::RngStream;

/// Row-major view over an `n x p` regression design (intercept included by the caller).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        DesignMatrix(matrix)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        DesignMatrix(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    /// `[1 | predictors]`.
    pub fn with_intercept(predictors: &DMatrix<f64>) -> Self {
        let (n, p) = predictors.shape();
        DesignMatrix(DMatrix::from_fn(n, p + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                predictors[(i, j - 1)]
            }
        }))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    /// `sigma2_hat * (X'X)^-1`
    pub coef_cov: DMatrix<f64>,
    /// Unscaled `(X'X)^-1`.
    pub xtx_inv: DMatrix<f64>,
    pub sse: f64,
    pub sigma2_hat: f64,
    pub df_resid: usize,
    pub n_obs: usize,
}

impl OlsFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        row.iter().zip(self.coef.iter()).map(|(a, b)| a * b).sum()
    }
}

impl LinearFit for OlsFit {
    fn coefficients(&self) -> &DVector<f64> {
        &self.coef
    }

    fn coef_covariance(&self) -> &DMatrix<f64> {
        &self.coef_cov
    }

    fn contrast_df(&self) -> f64 {
        self.df_resid as f64
    }
}

const RANK_TOL: f64 = 1e-10;

/// Least squares through a Householder QR; rank is checked with column pivoting first.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<OlsFit, FitError> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(FitError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if p == 0 || n == 0 {
        return Err(FitError::Empty);
    }
    if n <= p {
        return Err(FitError::InsufficientData { n, p });
    }

    let pivoted = x.0.clone().col_piv_qr();
    let r_piv = pivoted.r();
    let lead = r_piv[(0, 0)].abs();
    if lead == 0.0 || (0..p).any(|k| r_piv[(k, k)].abs() <= RANK_TOL * lead) {
        return Err(FitError::SingularDesign);
    }

    let qr = x.0.clone().qr();
    let r = qr.r();
    let yv = DVector::from_column_slice(y);
    let mut qty = yv.clone();
    qr.q_tr_mul(&mut qty);
    let qty = qty.rows(0, p).into_owned();
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(FitError::SingularDesign)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(FitError::SingularDesign)?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let resid = &yv - &x.0 * &coef;
    let sse = resid.norm_squared();
    let df_resid = n - p;
    let sigma2_hat = sse / df_resid as f64;
    Ok(OlsFit {
        coef_cov: &xtx_inv * sigma2_hat,
        coef,
        xtx_inv,
        sse,
        sigma2_hat,
        df_resid,
        n_obs: n,
    })
}

/// One draw of `(beta, sigma^2)` from the posterior under flat priors on the
/// coefficients and `log sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub beta_star: DVector<f64>,
    pub sigma2_star: f64,
}

impl PosteriorDraw {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        row.iter().zip(self.beta_star.iter()).map(|(a, b)| a * b).sum()
    }
}

/// `sigma2* = SSE / chi2(n - p)`, `beta* ~ N(coef, sigma2* (X'X)^-1)`.
pub fn draw_posterior(fit: &OlsFit, stream: &mut RngStream) -> Result<PosteriorDraw, FitError> {
    if fit.df_resid < 1 {
        return Err(FitError::InsufficientData {
            n: fit.n_obs,
            p: fit.coef.len(),
        });
    }
    let g = stream.chi_square(fit.df_resid as f64);
    let sigma2_star = fit.sse / g;
    let chol = fit
        .xtx_inv
        .clone()
        .cholesky()
        .ok_or(FitError::NotPositiveDefinite)?;
    let z = DVector::from_fn(fit.coef.len(), |_, _| stream.standard_normal());
    let beta_star = &fit.coef + chol.l() * z * sigma2_star.sqrt();
    Ok(PosteriorDraw {
        beta_star,
        sigma2_star,
    })
}
