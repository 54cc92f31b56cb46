//! The command-line workflow driven in-process: run a small config, rerun it
//! (a no-op), and extract the figure data.
//!
//! Run with `cargo run --release --example cli_pipeline`.

use trialmi::cli::run_with_args;

fn main() {
    let dir = std::env::temp_dir().join("trialmi-cli-pipeline");
    let config = dir.join("demo.toml");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        &config,
        r#"
[run]
seed = 1
reps = 30

[[scenario]]
study = "study1"
n = 200
relationship = ["linear", "quadratic"]
effect = "null"
mechanism = "mcar"
miss_pct = 30
methods = ["cc", "mi_norm"]
m = 5
"#,
    )
    .unwrap();
    let out = dir.join("results");
    let out_s = out.to_str().unwrap();
    let cfg_s = config.to_str().unwrap();

    assert_eq!(run_with_args(["trialmi", "run", "--config", cfg_s, "--out", out_s]), 0);
    // Same config and seed: outputs are already complete, nothing reruns.
    assert_eq!(run_with_args(["trialmi", "run", "--config", cfg_s, "--out", out_s]), 0);

    print!("{}", std::fs::read_to_string(out.join("s1_quadratic_mcar30_n200_null/summary.csv")).unwrap());
    // Only 2 of the figure's scenarios exist, so ask for partial output.
    let code = run_with_args(["trialmi", "plotdata", out_s, "--figure", "fig3", "--partial"]);
    assert_eq!(code, 0);
}
