//! Command-line front end: `run`, `list-scenarios` and `plotdata`.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 I/O
//! failure, 4 missing scenario results.

mod config;
mod plotdata;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use config::*;
pub use plotdata::*;

use crate::harness::{is_complete, output_files, registry, run_scenario, scenario_dir, write_scenario, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MISSING: i32 = 4;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "TRIALMI_OUT";

/// Built-in configurations, selectable by name with `run --config <name>`.
pub const PRESETS: [(&str, &str); 6] = [
    ("study1_grid", include_str!("../../configs/study1_grid.toml")),
    ("fig3", include_str!("../../configs/fig3.toml")),
    ("fig4", include_str!("../../configs/fig4.toml")),
    ("fig5", include_str!("../../configs/fig5.toml")),
    ("study2", include_str!("../../configs/study2.toml")),
    ("smoke", include_str!("../../configs/smoke.toml")),
];

#[derive(Debug, Parser)]
#[command(name = "trialmi", version, about = "Multiple-imputation simulation harness for randomized trials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ListFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenarios of a config file or built-in preset.
    Run {
        /// Path to a TOML config, or a preset name (see `list-scenarios`).
        #[arg(long)]
        config: String,
        /// Replicates per scenario (overrides the config).
        #[arg(long)]
        reps: Option<usize>,
        /// Run seed; each scenario derives its own seed from it and its id.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for replicates. Results do not depend on it.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Output directory (beats TRIALMI_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary formats; repeat for both. Defaults to the config, then csv and json.
        #[arg(long = "format", value_enum)]
        formats: Vec<OutFormat>,
        /// Also write every replicate record to records.csv.
        #[arg(long)]
        dump_records: bool,
        /// Rerun scenarios whose outputs are already complete.
        #[arg(long)]
        force: bool,
    },
    /// Print the built-in scenario registry and presets.
    ListScenarios {
        #[arg(long, value_enum, default_value = "text")]
        format: ListFormat,
    },
    /// Emit tidy CSV for one summary figure from a results directory.
    Plotdata {
        results_dir: PathBuf,
        #[arg(long, value_enum)]
        figure: Figure,
        /// Output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip missing scenarios instead of failing.
        #[arg(long)]
        partial: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run {
            config,
            reps,
            seed,
            parallelism,
            out,
            formats,
            dump_records,
            force,
        } => {
            let formats: Vec<Format> = formats
                .iter()
                .map(|f| match f {
                    OutFormat::Csv => Format::Csv,
                    OutFormat::Json => Format::Json,
                })
                .collect();
            let args = RunArgs {
                config,
                overrides: Overrides { seed, reps },
                parallelism,
                out,
                formats,
                dump_records,
                force,
            };
            cmd_run(&args)
        }
        Command::ListScenarios { format } => cmd_list_scenarios(format, &mut io::stdout()),
        Command::Plotdata {
            results_dir,
            figure,
            out,
            partial,
        } => cmd_plotdata(&results_dir, figure, out.as_deref(), partial),
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub config: String,
    pub overrides: Overrides,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
    pub dump_records: bool,
    pub force: bool,
}

/// Reads a config path, falling back to a preset name.
pub fn load_config(name_or_path: &str) -> Result<RunConfig, ConfigError> {
    let path = Path::new(name_or_path);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{name_or_path}: {e}")))?
    } else if let Some((_, t)) = PRESETS.iter().find(|(n, _)| *n == name_or_path) {
        t.to_string()
    } else {
        let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
        return Err(ConfigError(format!(
            "config '{name_or_path}' is neither a file nor a preset ({})",
            names.join(", ")
        )));
    };
    parse_config(&text).map_err(|e| ConfigError(format!("{name_or_path}: {e}")))
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    // Everything is validated before any compute starts.
    let scenarios = match cfg.scenarios(&args.overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config);
            return EXIT_CONFIG;
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.run.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let formats = if !args.formats.is_empty() {
        args.formats.clone()
    } else {
        cfg.run.formats.clone().unwrap_or_else(|| vec![Format::Csv, Format::Json])
    };
    let dump = args.dump_records || cfg.run.dump_records.unwrap_or(false);
    let parallelism = args.parallelism.or(cfg.run.parallelism).unwrap_or(1);
    let files = output_files(&formats, dump);

    let total = scenarios.len();
    for (i, sc) in scenarios.iter().enumerate() {
        let dir = scenario_dir(&out, &sc.id);
        if !args.force && is_complete(&dir, sc, &files) {
            eprintln!("[{}/{total}] {} up to date, skipped", i + 1, sc.id);
            continue;
        }
        let result = run_scenario(sc, parallelism);
        let failed = result.records.iter().filter(|r| r.failed).count();
        if let Err(e) = write_scenario(&out, &result, &formats, dump) {
            eprintln!("error: writing {}: {e}", dir.display());
            return EXIT_IO;
        }
        eprintln!(
            "[{}/{total}] {} reps={} failed_records={failed} {:.1}s",
            i + 1,
            sc.id,
            sc.n_reps,
            result.wall_time_secs
        );
    }
    EXIT_OK
}

pub fn cmd_list_scenarios<W: Write>(format: ListFormat, out: &mut W) -> i32 {
    let reg = registry();
    let res = match format {
        ListFormat::Json => {
            let presets: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            let doc = serde_json::json!({ "presets": presets, "scenarios": reg });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("registry serializes"))
        }
        ListFormat::Text => (|| {
            writeln!(out, "presets: {}", PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "))?;
            writeln!(out, "{:<44} {:<7} {:<22} {:<7} {:>4} {:>6}  figure", "id", "study", "setting", "mech", "n", "effect")?;
            for e in &reg {
                writeln!(
                    out,
                    "{:<44} {:<7} {:<22} {:<7} {:>4} {:>6}  {}",
                    e.id,
                    e.study.as_str(),
                    e.setting,
                    e.mechanism,
                    e.n,
                    e.true_effect,
                    e.figure.unwrap_or("-")
                )?;
            }
            Ok(())
        })(),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(_) => EXIT_IO,
    }
}

pub fn cmd_plotdata(results: &Path, figure: Figure, out: Option<&Path>, partial: bool) -> i32 {
    let res = match out {
        Some(p) => match std::fs::File::create(p) {
            Ok(f) => write_plotdata(results, figure, partial, io::BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return EXIT_IO;
            }
        },
        None => write_plotdata(results, figure, partial, io::stdout().lock()),
    };
    match res {
        Ok(_) => EXIT_OK,
        Err(PlotError::Missing(ids)) => {
            eprintln!(
                "error: {} has no results for {} scenario(s) of {}:",
                results.display(),
                ids.len(),
                figure.as_str()
            );
            for id in ids {
                eprintln!("  {id}");
            }
            EXIT_MISSING
        }
        Err(PlotError::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}
