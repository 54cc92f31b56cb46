//! REML fitting of a linear model with an unstructured residual covariance across
//! repeated time points.
//!
//! Subjects are grouped by their pattern of observed times. For each pattern the
//! cross-products `sum_i X_i (x) X_i`, `sum_i X_i (x) y_i` and `sum_i y_i y_i'` are
//! accumulated once, so a likelihood evaluation costs O(patterns * (k p)^2)
//! regardless of the number of subjects.
//!
//! The covariance is parameterized by its log-Cholesky factor: the first `T`
//! parameters are `log L[j][j]`, followed by the strictly lower entries `L[i][j]`
//! row by row (`i = 1..T`, `j = 0..i`).

use nalgebra::{DMatrix, DVector};

use super::{FitError, LinearFit};

/// Observed rows for one subject. `times` are strictly increasing indices below
/// the number of time points; `design` holds one row of fixed-effect covariates per
/// observed time.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedSubject {
    pub times: Vec<usize>,
    pub design: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovStructure {
    Unstructured,
    /// `sigma^2 I`
    ScaledIdentity,
    /// GLS at a known covariance; nothing is estimated.
    Fixed(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmrmOptions {
    pub n_times: usize,
    pub covariance: CovStructure,
    pub max_iter: usize,
    /// Relative change in the restricted log-likelihood between iterations.
    pub rel_tol: f64,
    /// Largest absolute gradient component (log-Cholesky scale) accepted at convergence.
    pub grad_tol: f64,
}

impl MmrmOptions {
    pub fn new(n_times: usize) -> Self {
        MmrmOptions {
            n_times,
            covariance: CovStructure::Unstructured,
            max_iter: 500,
            rel_tol: 1e-8,
            grad_tol: 1e-5,
        }
    }

    pub fn with_covariance(mut self, covariance: CovStructure) -> Self {
        self.covariance = covariance;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmrmFit {
    pub fixed_coef: DVector<f64>,
    /// `(sum_i X_i' V_i^-1 X_i)^-1`
    pub fixed_cov: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub reml_loglik: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub n_subjects: usize,
    pub n_obs: usize,
    /// Largest absolute gradient component at the returned estimate.
    pub max_gradient: f64,
}

impl MmrmFit {
    /// Contrast degrees of freedom: contributing subjects minus fixed effects.
    pub fn df(&self) -> f64 {
        (self.n_subjects as f64 - self.fixed_coef.len() as f64).max(1.0)
    }
}

impl LinearFit for MmrmFit {
    fn coefficients(&self) -> &DVector<f64> {
        &self.fixed_coef
    }

    fn coef_covariance(&self) -> &DMatrix<f64> {
        &self.fixed_cov
    }

    fn contrast_df(&self) -> f64 {
        self.df()
    }
}

#[derive(Debug, Clone)]
struct PatternStats {
    times: Vec<usize>,
    count: usize,
    /// index `((a * p + r) * k + b) * p + s`
    sxx: Vec<f64>,
    /// index `(a * p + r) * k + b`
    sxy: Vec<f64>,
    /// index `a * k + b`
    syy: Vec<f64>,
}

impl PatternStats {
    fn new(times: Vec<usize>, p: usize) -> Self {
        let k = times.len();
        PatternStats {
            times,
            count: 0,
            sxx: vec![0.0; k * p * k * p],
            sxy: vec![0.0; k * p * k],
            syy: vec![0.0; k * k],
        }
    }

    fn add(&mut self, design: &[Vec<f64>], y: &[f64], p: usize) {
        let k = self.times.len();
        self.count += 1;
        for a in 0..k {
            for r in 0..p {
                let xar = design[a][r];
                if xar == 0.0 {
                    continue;
                }
                for b in 0..k {
                    let base = ((a * p + r) * k + b) * p;
                    for s in 0..p {
                        self.sxx[base + s] += xar * design[b][s];
                    }
                    self.sxy[(a * p + r) * k + b] += xar * y[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                self.syy[a * k + b] += y[a] * y[b];
            }
        }
    }
}

struct GlsEval {
    loglik: f64,
    beta: DVector<f64>,
    fixed_cov: DMatrix<f64>,
    /// `d loglik / d Sigma` (symmetric).
    grad_sigma: Option<DMatrix<f64>>,
}

/// The restricted log-likelihood of a repeated-measures dataset as a function of
/// the residual covariance.
#[derive(Debug, Clone)]
pub struct RemlObjective {
    n_times: usize,
    p: usize,
    n_obs: usize,
    n_subjects: usize,
    patterns: Vec<PatternStats>,
}

impl RemlObjective {
    pub fn new(subjects: &[RepeatedSubject], n_times: usize) -> Result<Self, FitError> {
        let p = subjects
            .iter()
            .find_map(|s| s.design.first().map(Vec::len))
            .ok_or(FitError::Empty)?;
        let mut patterns: Vec<PatternStats> = Vec::new();
        let mut index_of = vec![usize::MAX; 1usize << n_times];
        let mut n_obs = 0;
        let mut n_subjects = 0;
        let mut time_seen = vec![false; n_times];
        for subj in subjects {
            let k = subj.times.len();
            if k == 0 {
                continue;
            }
            if subj.y.len() != k || subj.design.len() != k {
                return Err(FitError::DimensionMismatch {
                    expected: k,
                    got: subj.y.len().min(subj.design.len()),
                });
            }
            if let Some(row) = subj.design.iter().find(|row| row.len() != p) {
                return Err(FitError::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            let mut mask = 0usize;
            for (i, &t) in subj.times.iter().enumerate() {
                if t >= n_times || (i > 0 && subj.times[i - 1] >= t) {
                    return Err(FitError::DimensionMismatch {
                        expected: n_times,
                        got: t,
                    });
                }
                mask |= 1 << t;
                time_seen[t] = true;
            }
            if index_of[mask] == usize::MAX {
                index_of[mask] = patterns.len();
                patterns.push(PatternStats::new(subj.times.clone(), p));
            }
            patterns[index_of[mask]].add(&subj.design, &subj.y, p);
            n_obs += k;
            n_subjects += 1;
        }
        if n_subjects == 0 {
            return Err(FitError::Empty);
        }
        if time_seen.iter().any(|seen| !seen) {
            return Err(FitError::InsufficientData { n: n_obs, p });
        }
        if n_obs <= p {
            return Err(FitError::InsufficientData { n: n_obs, p });
        }
        let obj = RemlObjective {
            n_times,
            p,
            n_obs,
            n_subjects,
            patterns,
        };
        obj.check_estimable()?;
        Ok(obj)
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_params_unstructured(&self) -> usize {
        self.n_times * (self.n_times + 1) / 2
    }

    fn check_estimable(&self) -> Result<(), FitError> {
        let p = self.p;
        let mut xtx = DMatrix::<f64>::zeros(p, p);
        for pat in &self.patterns {
            let k = pat.times.len();
            for a in 0..k {
                for r in 0..p {
                    for s in 0..p {
                        xtx[(r, s)] += pat.sxx[((a * p + r) * k + a) * p + s];
                    }
                }
            }
        }
        let eig = xtx.symmetric_eigenvalues();
        let max = eig.amax();
        if max == 0.0 || eig.min() <= 1e-10 * max {
            return Err(FitError::SingularDesign);
        }
        Ok(())
    }

    fn gls(&self, sigma: &DMatrix<f64>, want_grad: bool) -> Result<GlsEval, FitError> {
        let p = self.p;
        let mut xtvx = DMatrix::<f64>::zeros(p, p);
        let mut xtvy = DVector::<f64>::zeros(p);
        let mut yvy = 0.0;
        let mut logdet_v = 0.0;
        let mut vinvs = Vec::with_capacity(self.patterns.len());
        for pat in &self.patterns {
            let k = pat.times.len();
            let v = DMatrix::from_fn(k, k, |a, b| sigma[(pat.times[a], pat.times[b])]);
            let chol = v.cholesky().ok_or(FitError::NotPositiveDefinite)?;
            let ld: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
            logdet_v += pat.count as f64 * ld;
            let vinv = chol.inverse();
            for a in 0..k {
                for b in 0..k {
                    let w = vinv[(a, b)];
                    yvy += w * pat.syy[a * k + b];
                    for r in 0..p {
                        xtvy[r] += w * pat.sxy[(a * p + r) * k + b];
                        let base = ((a * p + r) * k + b) * p;
                        for s in 0..p {
                            xtvx[(r, s)] += w * pat.sxx[base + s];
                        }
                    }
                }
            }
            vinvs.push(vinv);
        }
        let chol = xtvx.cholesky().ok_or(FitError::SingularDesign)?;
        let logdet_xtvx: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let beta = chol.solve(&xtvy);
        let fixed_cov = chol.inverse();
        let rvr = yvy - beta.dot(&xtvy);
        let loglik = -0.5
            * ((self.n_obs - p) as f64 * (2.0 * std::f64::consts::PI).ln()
                + logdet_v
                + logdet_xtvx
                + rvr);

        let grad_sigma = if want_grad {
            // d loglik = -1/2 sum_i tr(M_i dV_i) with
            // M_i = V^-1 - V^-1 (X_i A X_i' + r_i r_i') V^-1.
            let t = self.n_times;
            let mut h = DMatrix::zeros(t, t);
            let ab = DMatrix::from_fn(p, p, |r, s| fixed_cov[(r, s)] + beta[r] * beta[s]);
            for (pat, vinv) in self.patterns.iter().zip(&vinvs) {
                let k = pat.times.len();
                let mut c = DMatrix::<f64>::zeros(k, k);
                for a in 0..k {
                    for b in 0..k {
                        let mut acc = pat.syy[a * k + b];
                        for r in 0..p {
                            acc -= beta[r] * (pat.sxy[(a * p + r) * k + b] + pat.sxy[(b * p + r) * k + a]);
                            let base = ((a * p + r) * k + b) * p;
                            for s in 0..p {
                                acc += ab[(r, s)] * pat.sxx[base + s];
                            }
                        }
                        c[(a, b)] = acc;
                    }
                }
                let m = vinv * pat.count as f64 - vinv * c * vinv;
                for a in 0..k {
                    for b in 0..k {
                        h[(pat.times[a], pat.times[b])] -= 0.5 * m[(a, b)];
                    }
                }
            }
            Some(h)
        } else {
            None
        };
        Ok(GlsEval {
            loglik,
            beta,
            fixed_cov,
            grad_sigma,
        })
    }

    /// Restricted log-likelihood at `sigma`.
    pub fn loglik_at_sigma(&self, sigma: &DMatrix<f64>) -> Result<f64, FitError> {
        self.gls(sigma, false).map(|e| e.loglik)
    }

    /// Log-likelihood and its gradient with respect to the log-Cholesky parameters.
    pub fn unstructured(&self, theta: &[f64]) -> Result<(f64, Vec<f64>), FitError> {
        let t = self.n_times;
        let l = cholesky_from_params(theta, t);
        let sigma = &l * l.transpose();
        let eval = self.gls(&sigma, true)?;
        let h = eval.grad_sigma.expect("gradient requested");
        let gl = (h * &l) * 2.0;
        let mut grad = Vec::with_capacity(theta.len());
        for j in 0..t {
            grad.push(gl[(j, j)] * l[(j, j)]);
        }
        for i in 1..t {
            for j in 0..i {
                grad.push(gl[(i, j)]);
            }
        }
        Ok((eval.loglik, grad))
    }

    fn scaled_identity(&self, theta: &[f64]) -> Result<(f64, Vec<f64>), FitError> {
        let var = (2.0 * theta[0]).exp();
        let sigma = DMatrix::identity(self.n_times, self.n_times) * var;
        let eval = self.gls(&sigma, true)?;
        let h = eval.grad_sigma.expect("gradient requested");
        Ok((eval.loglik, vec![2.0 * var * h.trace()]))
    }

    /// Per-time residual variances from the pooled ordinary least squares fit.
    fn ols_residual_variances(&self) -> Result<Vec<f64>, FitError> {
        let t = self.n_times;
        let ident = DMatrix::identity(t, t);
        let eval = self.gls(&ident, false)?;
        let beta = eval.beta;
        let p = self.p;
        let mut ss = vec![0.0; t];
        let mut count = vec![0usize; t];
        for pat in &self.patterns {
            let k = pat.times.len();
            for a in 0..k {
                let mut acc = pat.syy[a * k + a];
                for r in 0..p {
                    acc -= 2.0 * beta[r] * pat.sxy[(a * p + r) * k + a];
                    let base = ((a * p + r) * k + a) * p;
                    for s in 0..p {
                        acc += beta[r] * beta[s] * pat.sxx[base + s];
                    }
                }
                ss[pat.times[a]] += acc;
                count[pat.times[a]] += pat.count;
            }
        }
        let total: f64 = ss.iter().sum::<f64>() / self.n_obs as f64;
        let floor = (total * 1e-6).max(1e-12);
        Ok(ss
            .iter()
            .zip(&count)
            .map(|(s, &c)| (s / c as f64).max(floor))
            .collect())
    }
}

/// Lower-triangular factor from log-Cholesky parameters.
pub fn cholesky_from_params(theta: &[f64], t: usize) -> DMatrix<f64> {
    assert_eq!(theta.len(), t * (t + 1) / 2, "log-Cholesky parameter count");
    let mut l = DMatrix::zeros(t, t);
    for j in 0..t {
        l[(j, j)] = theta[j].exp();
    }
    let mut idx = t;
    for i in 1..t {
        for j in 0..i {
            l[(i, j)] = theta[idx];
            idx += 1;
        }
    }
    l
}

/// Log-Cholesky parameters of an SPD matrix.
pub fn log_cholesky_params(sigma: &DMatrix<f64>) -> Result<Vec<f64>, FitError> {
    let t = sigma.nrows();
    let chol = sigma.clone().cholesky().ok_or(FitError::NotPositiveDefinite)?;
    let l = chol.l();
    let mut theta = Vec::with_capacity(t * (t + 1) / 2);
    for j in 0..t {
        theta.push(l[(j, j)].ln());
    }
    for i in 1..t {
        for j in 0..i {
            theta.push(l[(i, j)]);
        }
    }
    Ok(theta)
}

struct Maximum {
    theta: Vec<f64>,
    loglik: f64,
    max_gradient: f64,
    n_iter: usize,
    converged: bool,
}

/// BFGS ascent with Armijo backtracking.
fn maximize<F>(f: F, theta0: Vec<f64>, opts: &MmrmOptions) -> Result<Maximum, FitError>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>), FitError>,
{
    let n = theta0.len();
    let (ll0, g0) = f(&theta0)?;
    // Minimize the negative log-likelihood.
    let mut theta = DVector::from_vec(theta0);
    let mut fx = -ll0;
    let mut gx = -DVector::from_vec(g0);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut n_iter = 0;
    let mut converged = false;

    while n_iter < opts.max_iter {
        if gx.amax() < opts.grad_tol * 1e-3 {
            converged = true;
            break;
        }
        n_iter += 1;
        let mut dir = -(&hinv * &gx);
        let mut slope = dir.dot(&gx);
        if !(slope < 0.0) {
            hinv = DMatrix::identity(n, n);
            dir = -gx.clone();
            slope = dir.dot(&gx);
        }
        // Keep trial points within a sane range of the log-scale parameters.
        let longest = dir.amax();
        if longest > 5.0 {
            dir *= 5.0 / longest;
            slope = dir.dot(&gx);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &theta + &dir * step;
            if let Ok((ll, g)) = f(trial.as_slice()) {
                let ft = -ll;
                let gt = -DVector::from_vec(g);
                let armijo = ft <= fx + 1e-4 * step * slope;
                // Below rounding noise in the objective, progress is judged by the gradient.
                let flat = (ft - fx).abs() <= 1e-11 * fx.abs().max(1.0) && gt.amax() < gx.amax();
                if ft.is_finite() && (armijo || flat) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, fnext, gnext)) = accepted else {
            // No descent possible: numerically at the optimum, or stuck.
            converged = gx.amax() < opts.grad_tol * 100.0;
            break;
        };

        let s = &next - &theta;
        let y = &gnext - &gx;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if n_iter == 1 {
                hinv = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
            hinv -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }

        let rel = (fnext - fx).abs() / fnext.abs().max(1e-300);
        theta = next;
        fx = fnext;
        gx = gnext;
        if rel < opts.rel_tol && gx.amax() < opts.grad_tol {
            converged = true;
            break;
        }
    }

    Ok(Maximum {
        theta: theta.as_slice().to_vec(),
        loglik: -fx,
        max_gradient: gx.amax(),
        n_iter,
        converged,
    })
}

/// Fit fixed effects by GLS and the residual covariance by REML.
///
/// Non-convergence is reported through [`MmrmFit::converged`], not as an error.
pub fn reml_fit_mmrm(subjects: &[RepeatedSubject], opts: &MmrmOptions) -> Result<MmrmFit, FitError> {
    let obj = RemlObjective::new(subjects, opts.n_times)?;
    let t = opts.n_times;
    let (sigma, reml, max_gradient, n_iter, converged) = match &opts.covariance {
        CovStructure::Fixed(sigma) => {
            if sigma.shape() != (t, t) {
                return Err(FitError::DimensionMismatch {
                    expected: t,
                    got: sigma.nrows(),
                });
            }
            (sigma.clone(), None, 0.0, 0, true)
        }
        CovStructure::ScaledIdentity => {
            let init = obj.ols_residual_variances()?;
            let mean_var = init.iter().sum::<f64>() / t as f64;
            let max = maximize(|th| obj.scaled_identity(th), vec![0.5 * mean_var.ln()], opts)?;
            let var = (2.0 * max.theta[0]).exp();
            (
                DMatrix::identity(t, t) * var,
                Some(max.loglik),
                max.max_gradient,
                max.n_iter,
                max.converged,
            )
        }
        CovStructure::Unstructured => {
            let init = obj.ols_residual_variances()?;
            let mut theta0 = vec![0.0; obj.n_params_unstructured()];
            for (j, v) in init.iter().enumerate() {
                theta0[j] = 0.5 * v.ln();
            }
            let max = maximize(|th| obj.unstructured(th), theta0, opts)?;
            let l = cholesky_from_params(&max.theta, t);
            (
                &l * l.transpose(),
                Some(max.loglik),
                max.max_gradient,
                max.n_iter,
                max.converged,
            )
        }
    };
    let eval = obj.gls(&sigma, false)?;
    Ok(MmrmFit {
        fixed_coef: eval.beta,
        fixed_cov: eval.fixed_cov,
        sigma,
        reml_loglik: reml.unwrap_or(eval.loglik),
        converged,
        n_iter,
        n_subjects: obj.n_subjects,
        n_obs: obj.n_obs,
        max_gradient,
    })
}
