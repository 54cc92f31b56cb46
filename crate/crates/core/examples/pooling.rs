//! Rubin's rules with the Barnard–Rubin small-sample degrees of freedom.
//!
//! Run with `cargo run --example pooling`.

use trialmi::pool::{rubin_pool, t_quantile};

fn main() {
    let estimates = [10.2, 11.0, 9.6, 10.8, 10.4];
    let variances = [1.1, 0.9, 1.0, 1.2, 1.0];

    for df_com in [f64::INFINITY, 100.0, 20.0] {
        let p = rubin_pool(&estimates, &variances, df_com, 0.05, 0.0).unwrap();
        println!(
            "df_com {df_com:>5}: qbar {:.3}  W {:.3}  B {:.3}  T {:.3}  df {:>7.2}  CI [{:.3}, {:.3}]  p {:.2e}",
            p.qbar, p.within, p.between, p.total_var, p.df, p.ci_low, p.ci_high, p.p_value
        );
    }
    println!("t(0.975, 10) = {:.4}", t_quantile(10.0, 0.05));
}
