//! Least squares, a posterior draw for imputation, and a REML repeated-measures fit.
//!
//! Run with `cargo run --example regression_and_mmrm`.

use trialmi::regress::{
    contrast, draw_posterior, ols_fit, reml_fit_mmrm, DesignMatrix, MmrmOptions, RepeatedSubject,
};
use trialmi::rng::derive_stream;

fn main() {
    let mut s = derive_stream(5, &[]);

    // y = 2 + 3x + noise
    let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![1.0, s.normal(0.0, 1.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| 2.0 + 3.0 * r[1] + s.normal(0.0, 0.5)).collect();
    let fit = ols_fit(&DesignMatrix::from_rows(&rows), &y).unwrap();
    println!("OLS coef = {:.3?}, sigma^2 = {:.3}, df = {}", fit.coef.as_slice(), fit.sigma2_hat, fit.df_resid);

    let slope = contrast(&fit, &[0.0, 1.0]).unwrap();
    println!("slope = {:.3} (se {:.3}, df {})", slope.estimate, slope.se, slope.df);

    let draw = draw_posterior(&fit, &mut s).unwrap();
    println!("posterior draw: beta* = {:.3?}, sigma2* = {:.3}", draw.beta_star.as_slice(), draw.sigma2_star);

    // Three visits with correlated errors; a third of subjects miss the last visit.
    let subjects: Vec<RepeatedSubject> = (0..150)
        .map(|i| {
            let treated = i % 2 == 1;
            let shared = s.normal(0.0, 2.0);
            let n_visits = if i % 3 == 0 { 2 } else { 3 };
            let times: Vec<usize> = (0..n_visits).collect();
            let design = times
                .iter()
                .map(|&t| {
                    let mut row = vec![1.0, 0.0, 0.0, if treated { 1.0 } else { 0.0 }];
                    if t > 0 {
                        row[t] = 1.0;
                    }
                    row
                })
                .collect::<Vec<_>>();
            let y = design
                .iter()
                .map(|r| 10.0 + r[1] + 2.0 * r[2] + 1.5 * r[3] + shared + s.normal(0.0, 1.0))
                .collect();
            RepeatedSubject { times, design, y }
        })
        .collect();
    let mm = reml_fit_mmrm(&subjects, &MmrmOptions::new(3)).unwrap();
    println!(
        "MMRM: converged = {}, max |gradient| = {:.2e}, treatment = {:.3}, df = {}",
        mm.converged,
        mm.max_gradient,
        mm.fixed_coef[3],
        mm.df()
    );
    println!("Sigma-hat =\n{:.2}", mm.sigma);
}
