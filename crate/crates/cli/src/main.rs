//! Command-line front end: fit, eval, bench, ablate, and ranktest
//! subcommands over the fusion library. All randomness flows from --seed;
//! repeated invocations with the same arguments produce byte-identical
//! result files (wall-clock timing outputs excepted).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use locfuse::evaluation::{skillings_mack, RankTable};
use locfuse::experiment::{
    evaluate_model, fit_model, load_dataset, run_trials, timing_ablation, AblationConfig,
    DatasetSchema, HyperGrid, Method, RunConfig,
};
use locfuse::fusion::{FusionMode, FusionModel};

#[derive(Parser)]
#[command(name = "locfuse", version, about = "Locally adaptive one-class classifier fusion")]
struct Cli {
    /// Worker threads for trial-level parallelism (default: logical CPUs)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Stdout format for summaries
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    output_format: OutputFormat,

    /// Print progress details to stderr
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PureRpau,
    PurePseudoneg,
    Nonpure,
}

impl ModeArg {
    fn to_mode(self) -> FusionMode {
        match self {
            ModeArg::PureRpau => FusionMode::PureRpau,
            ModeArg::PurePseudoneg => FusionMode::PurePseudoNeg,
            ModeArg::Nonpure => FusionMode::NonPure,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    InteriorPoint,
    FrankWolfe,
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated norm exponents (subset of the standard grid)
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,

    /// Comma-separated trim percentiles in 1..=10
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<u32>>,

    /// Comma-separated kernel width multipliers
    #[arg(long, value_delimiter = ',')]
    multipliers: Option<Vec<f64>>,

    /// Comma-separated KPCA subspace dimensions
    #[arg(long, value_delimiter = ',')]
    kpca_dims: Option<Vec<usize>>,

    /// Comma-separated GMM component counts
    #[arg(long, value_delimiter = ',')]
    gmm_components: Option<Vec<usize>>,
}

impl GridArgs {
    fn to_grid(&self) -> HyperGrid {
        let mut grid = HyperGrid::default();
        if let Some(p) = &self.p_grid {
            grid.p_values = p.clone();
        }
        if let Some(r) = &self.rho_grid {
            grid.rhos = r.clone();
        }
        if let Some(m) = &self.multipliers {
            grid.width_multipliers = m.clone();
        }
        if let Some(k) = &self.kpca_dims {
            grid.kpca_dims = k.clone();
        }
        if let Some(g) = &self.gmm_components {
            grid.gmm_components = g.clone();
        }
        grid
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a fusion model on one seeded split and save it to a file
    Fit {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::PureRpau)]
        mode: ModeArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OptimizerArg::InteriorPoint)]
        optimizer: OptimizerArg,
        /// Output model file (JSON, versioned)
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Score a saved model against a labeled dataset
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Optional metrics JSON output path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run repeated trials over the requested methods and write records
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::PureRpau)]
        mode: ModeArg,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated methods (interior-point, frank-wolfe, sum-rule,
        /// single-best, svdd, ocgp, kpca, gmm); default: all
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Results file, one JSON record per trial and method
        #[arg(long)]
        output: PathBuf,
        /// Optional rendered table output path
        #[arg(long)]
        table_output: Option<PathBuf>,
        /// Optional per-phase wall-clock timings (not byte-deterministic)
        #[arg(long)]
        timings: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare optimizer wall-clock on synthetic problems (CSV table)
    Ablate {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated norm exponents (default: 32/31, 8/7, 2, 100)
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        /// Comma-separated tolerances from {1e-2, 1e-3, 1e-4}
        #[arg(long, value_delimiter = ',')]
        tolerances: Option<Vec<f64>>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Skillings-Mack rank test over a methods-by-datasets CSV
    Ranktest {
        /// CSV with a dataset column then one column per method; empty cells
        /// mark missing entries
        #[arg(long)]
        input: PathBuf,
        /// Optional JSON output path
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized, --jobs ignored");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit {
            dataset,
            schema,
            mode,
            seed,
            optimizer,
            output,
            grid,
        } => {
            let ds = load(&dataset, &schema)?;
            let config = RunConfig {
                mode: mode.to_mode(),
                grid: grid.to_grid(),
                ..Default::default()
            };
            let method = match optimizer {
                OptimizerArg::InteriorPoint => Method::InteriorPoint,
                OptimizerArg::FrankWolfe => Method::FrankWolfe,
            };
            let (model, record) = fit_model(&ds, &config, method, seed)?;
            model.save(&output)?;
            match cli.output_format {
                OutputFormat::Json => println!("{}", serde_json::to_string(&record)?),
                OutputFormat::Table => {
                    println!(
                        "fitted {} on {} (seed {seed}): val criterion {:.4}, test AUC {:.4}, threshold {:.4}",
                        record.method, record.dataset, record.criterion_value,
                        record.auc_roc, record.threshold
                    );
                    println!("model written to {}", output.display());
                }
            }
            Ok(())
        }
        Command::Eval {
            model,
            dataset,
            schema,
            output,
        } => {
            let ds = load(&dataset, &schema)?;
            let model = FusionModel::load(&model)?;
            let metrics = evaluate_model(&model, &ds)?;
            let json = serde_json::to_string(&metrics)?;
            if let Some(path) = output {
                fs::write(&path, format!("{json}\n"))?;
            }
            match cli.output_format {
                OutputFormat::Json => println!("{json}"),
                OutputFormat::Table => println!(
                    "{}: AUC-ROC {:.4}  AUC-PR {:.4}  G-mean {:.4}  (threshold {:.4})",
                    ds.name, metrics.auc_roc, metrics.auc_pr, metrics.g_mean, metrics.threshold
                ),
            }
            Ok(())
        }
        Command::Bench {
            dataset,
            schema,
            mode,
            trials,
            seed,
            methods,
            output,
            table_output,
            timings,
            grid,
        } => {
            let ds = load(&dataset, &schema)?;
            let methods = match methods {
                None => Method::ALL.to_vec(),
                Some(names) => {
                    let mut out = Vec::new();
                    for name in &names {
                        match Method::parse(name) {
                            Some(m) => out.push(m),
                            None => bail!("unknown method {name:?}"),
                        }
                    }
                    out
                }
            };
            let config = RunConfig {
                mode: mode.to_mode(),
                methods,
                n_trials: trials,
                base_seed: seed,
                grid: grid.to_grid(),
                ..Default::default()
            };
            let outcome = run_trials(&ds, &config)?;
            fs::write(&output, outcome.to_jsonl())?;
            let table = outcome.render_table();
            if let Some(path) = &table_output {
                fs::write(path, &table)?;
            }
            if let Some(path) = &timings {
                fs::write(path, serde_json::to_string_pretty(&outcome.timings)?)?;
            }
            for (trial, message) in &outcome.failed_trials {
                eprintln!("warning: trial {trial} failed: {message}");
            }
            if cli.verbose > 0 {
                for t in &outcome.timings {
                    eprintln!(
                        "trial {} (seed {}): split {:.3}s, fit {:.3}s, tune {:.3}s",
                        t.trial, t.seed, t.split_secs, t.fit_secs, t.tune_secs
                    );
                }
            }
            match cli.output_format {
                OutputFormat::Json => {
                    let summaries = serde_json::to_string(&outcome.summaries)?;
                    println!("{summaries}");
                }
                OutputFormat::Table => print!("{table}"),
            }
            Ok(())
        }
        Command::Ablate {
            n,
            d,
            seed,
            p_grid,
            tolerances,
            output,
        } => {
            let mut config = AblationConfig {
                n,
                d,
                seed,
                ..Default::default()
            };
            if let Some(p) = p_grid {
                config.p_values = p;
            }
            if let Some(t) = tolerances {
                config.tolerances = t;
            }
            let table = timing_ablation(&config)?;
            fs::write(&output, table.to_csv())?;
            match cli.output_format {
                OutputFormat::Json => println!("{}", serde_json::to_string(&table)?),
                OutputFormat::Table => print!("{}", table.to_csv()),
            }
            Ok(())
        }
        Command::Ranktest { input, output } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let table = RankTable::from_csv(&text)?;
            let outcome = skillings_mack(&table)?;
            let json = serde_json::to_string(&outcome)?;
            if let Some(path) = output {
                fs::write(&path, format!("{json}\n"))?;
            }
            match cli.output_format {
                OutputFormat::Json => println!("{json}"),
                OutputFormat::Table => {
                    println!(
                        "statistic {:.6}  p-value {:.3e}  ({} datasets skipped)",
                        outcome.statistic,
                        outcome.p_value,
                        outcome.skipped_datasets.len()
                    );
                    let mut ranked: Vec<(usize, f64)> = outcome
                        .mean_ranks
                        .iter()
                        .copied()
                        .enumerate()
                        .collect();
                    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                    for (idx, rank) in ranked {
                        println!("{:<20} mean rank {:.2}", table.methods()[idx], rank);
                    }
                }
            }
            Ok(())
        }
    }
}

fn load(dataset: &PathBuf, schema: &PathBuf) -> anyhow::Result<locfuse::experiment::Dataset> {
    let schema = DatasetSchema::from_path(schema)
        .with_context(|| format!("loading schema {}", schema.display()))?;
    let ds = load_dataset(dataset, &schema)
        .with_context(|| format!("loading dataset {}", dataset.display()))?;
    if ds.rejected_rows > 0 {
        eprintln!(
            "note: {} rows rejected for missing values in {}",
            ds.rejected_rows, ds.name
        );
    }
    Ok(ds)
}
