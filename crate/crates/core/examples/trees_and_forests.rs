//! CART and random-forest regression on a step function.
//!
//! Run with `cargo run --example trees_and_forests`.

use nalgebra::DMatrix;
use trialmi::rng::derive_stream;
use trialmi::trees::{cart_fit, rf_fit, rf_predict, ForestParams, TreeParams};

fn main() {
    let mut s = derive_stream(11, &[]);
    let n = 300;
    let x = DMatrix::from_fn(n, 2, |_, _| s.normal(0.0, 1.0));
    let y: Vec<f64> = (0..n)
        .map(|i| if x[(i, 0)] > 0.0 { 50.0 } else { 0.0 } + s.normal(0.0, 5.0))
        .collect();

    let tree = cart_fit(&x, &y, &TreeParams::default()).unwrap();
    let (var, thr) = tree.root_split().unwrap();
    println!("CART: {} leaves, root split x{var} <= {thr:.3}", tree.n_leaves());
    println!("  predict(+1, 0) = {:.2}", tree.predict(&[1.0, 0.0]));
    println!("  donors for (+1, 0): {} observations", tree.leaf_members(&[1.0, 0.0]).len());

    let params = ForestParams::default();
    let forest = rf_fit(&x, &y, &params, &mut s).unwrap();
    println!(
        "forest: {} trees, mtry = {}, OOB MSE = {:.2}",
        forest.trees.len(),
        params.mtry_for(2),
        forest.oob_mse
    );
    println!("  predict(-1, 0) = {:.2}", rf_predict(&forest, &[-1.0, 0.0]));
}
