use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alloom_core::engine::cv_baseline;
use alloom_core::featurize::{featurize_dataset, FeatureSet, WindowConfig};
use alloom_harness::error::{HarnessError, Result};
use alloom_harness::io::{load_feature_csv, load_raw_series_csv, save_feature_csv, save_raw_series_csv, RawSchema};
use alloom_harness::report::{compare, parse_filter, summarize_table, PairBy, DEFAULT_GROUP_BY};
use alloom_harness::results::load_results;
use alloom_harness::runner::{dry_run_grid, run_spec, worker_pool, write_outputs};
use alloom_harness::spec::{preset, ExperimentSpec};
use alloom_harness::synth::{gen_synthetic, Generator, Synthetic, SyntheticSpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alloom", version, about = "Pool-based active learning experiments on windowed time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Slice raw series into windows and write a feature CSV.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        window_s: f64,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long, default_value = "tactile11")]
        feature_set: FeatureSet,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value = "series_id")]
        id_column: String,
        #[arg(long, default_value = "label")]
        label_column: String,
        /// Comma-separated channel columns; defaults to all remaining columns.
        #[arg(long, value_delimiter = ',')]
        channels: Vec<String>,
    },
    /// Run every experiment of a spec file.
    Run {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run a spec over a window × overlap grid.
    Grid {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        overlaps: Option<Vec<f64>>,
        /// Print the executed and skipped combinations without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Repeated stratified k-fold macro-F1 on a feature CSV.
    Baseline {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "random_forest")]
        model: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 4)]
        repeats: usize,
        #[arg(long, default_value_t = 1415)]
        seed: u64,
    },
    /// Mean ± std macro-F1 per group and labelled count.
    Summarize {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_delimiter = ',')]
        group_by: Option<Vec<String>>,
    },
    /// Generate a synthetic benchmark.
    Synth {
        #[arg(long)]
        generator: Generator,
        /// JSON synthetic spec; the generator flag overrides its generator.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wilcoxon signed-rank test between two selections of a results table.
    Stats {
        #[arg(long)]
        results: PathBuf,
        /// Second table for side b; defaults to --results.
        #[arg(long)]
        results_b: Option<PathBuf>,
        /// Selection for side a, e.g. "strategy=uncertainty,balanced=true".
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "seed-step")]
        pair_by: PairBy,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = worker_pool().and_then(|pool| pool.install(|| execute(cli.command)));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn run_and_write(spec: &ExperimentSpec, text: &str) -> Result<()> {
    let out = run_spec(spec, text)?;
    let files = write_outputs(&out, &spec.output_dir)?;
    for cell in &out.cells {
        if let Some(reason) = &cell.skipped {
            eprintln!("skipped {} s / {}%: {reason}", cell.window_s, cell.overlap * 100.0);
        }
    }
    println!("{}", files.results.display());
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Featurize {
            input,
            output,
            window_s,
            overlap,
            feature_set,
            rate,
            id_column,
            label_column,
            channels,
        } => {
            let schema = RawSchema {
                id_column,
                label_column,
                channels,
                sample_rate_hz: rate,
                t0_column: None,
            };
            let series = load_raw_series_csv(&input, &schema)?;
            let ds = featurize_dataset(&series, &WindowConfig::new(window_s, overlap, feature_set)?)?;
            save_feature_csv(&output, &ds)?;
            eprintln!("{} instances × {} features", ds.len(), ds.n_features());
            Ok(())
        }
        Command::Run { spec } => {
            let (spec, text) = ExperimentSpec::load(&spec)?;
            run_and_write(&spec, &text)
        }
        Command::Grid {
            spec,
            windows,
            overlaps,
            dry_run,
        } => {
            let (mut spec, text) = ExperimentSpec::read(&spec)?;
            let mut grid = spec.grid.clone().unwrap_or_default();
            if let Some(w) = windows {
                grid.windows = w;
            }
            if let Some(o) = overlaps {
                grid.overlaps = o;
            }
            spec.grid = Some(grid);
            spec.validate()?;
            if dry_run {
                let cells = dry_run_grid(&spec)?;
                println!("{}", json(&cells));
                let executed = cells.iter().filter(|c| c.executed()).count();
                eprintln!("{executed} executed, {} skipped", cells.len() - executed);
                Ok(())
            } else {
                run_and_write(&spec, &text)
            }
        }
        Command::Baseline {
            features,
            model,
            folds,
            repeats,
            seed,
        } => {
            let ds = load_feature_csv(&features)?;
            let report = cv_baseline(&ds, &preset(&model)?, folds, repeats, seed)?;
            println!("{}", json(&report));
            Ok(())
        }
        Command::Summarize { results, group_by } => {
            let rows = load_results(&results)?;
            let cols = group_by.unwrap_or_else(|| DEFAULT_GROUP_BY.iter().map(|s| s.to_string()).collect());
            print!("{}", summarize_table(&rows, &cols)?);
            Ok(())
        }
        Command::Synth {
            generator,
            spec,
            counts,
            seed,
            out,
        } => {
            let mut s = match spec {
                Some(p) => read_synth_spec(&p)?,
                None => SyntheticSpec::sine_mix(vec![500, 7, 172, 44]),
            };
            s.generator = generator;
            if let Some(c) = counts {
                s.counts = c;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            match gen_synthetic(&s)? {
                Synthetic::Series(series) => save_raw_series_csv(&out, &series),
                Synthetic::Features(ds) => save_feature_csv(&out, &ds),
            }
        }
        Command::Stats {
            results,
            results_b,
            a,
            b,
            pair_by,
        } => {
            let rows_a = load_results(&results)?;
            let rows_b = match results_b {
                Some(p) => load_results(&p)?,
                None => rows_a.clone(),
            };
            let r = compare(&rows_a, &parse_filter(&a)?, &rows_b, &parse_filter(&b)?, pair_by)?;
            println!("{}", json(&r));
            Ok(())
        }
    }
}

fn read_synth_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::invalid(format!("invalid synthetic spec: {e}")))
}
