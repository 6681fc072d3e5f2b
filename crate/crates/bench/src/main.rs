use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use adaselection::data::write_dataset_csv;
use adaselection::train::GradNormMode;
use adaselection::{ScorerKind, Task};
use adaselection_bench::config::ModelSpec;
use adaselection_bench::results::read_results;
use adaselection_bench::{rank_table, run_single, run_sweep, BenchError, ExperimentConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adasel", version, about = "Adaptive minibatch subsampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated dataset (train rows then test rows) to CSV.
    GenData {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Train one strategy at one sampling rate and append its rows to the results CSV.
    Run {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the strategy x rate x beta grid, skipping cells already in the results CSV.
    Sweep {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Mean-rank table from a results CSV.
    Rank {
        #[arg(long, default_value = "results.csv")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormMode {
    Exact,
    LastLayer,
}

/// Every flag overrides the matching field of `--config`, or of the defaults.
#[derive(Args)]
struct Overrides {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `regression`, `blobs` or `csv:<path>`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    target_col: Option<String>,
    /// Task of a CSV dataset.
    #[arg(long)]
    task: Option<Task>,
    /// Comma-separated strategy tokens: full, the scorer names, adaselect.
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated candidate scorers for adaselect.
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long, conflicts_with = "rates")]
    rate: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    #[arg(long, conflicts_with = "betas", allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    betas: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long)]
    no_curriculum: bool,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    model: Option<String>,
    /// Layer sizes, input first, e.g. `8,32,4`.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long, value_enum)]
    grad_norms: Option<NormMode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(self) -> Result<ExperimentConfig, BenchError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(dataset => dataset, target_col => target_col, task => task, kappa => kappa,
            temperature => temperature, epochs => epochs, batch => batch, lr => lr, momentum => momentum,
            seed => seed, noise_sigma => noise_sigma, n_train => n_train, n_test => n_test, out => out,
            rates => rates, betas => betas);
        if let Some(s) = self.strategy {
            cfg.strategies = s.split(',').map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect();
        }
        if let Some(c) = self.candidates {
            cfg.candidates = ScorerKind::parse_list(&c).map_err(|e| BenchError::Config(e.to_string()))?;
        }
        if let Some(r) = self.rate {
            cfg.rates = vec![r];
        }
        if let Some(b) = self.beta {
            cfg.betas = vec![b];
        }
        if self.no_curriculum {
            cfg.curriculum = false;
        }
        if let Some(m) = self.model {
            cfg.model = m.parse::<ModelSpec>()?;
        }
        if let Some(l) = self.layers {
            cfg.layers = Some(l);
        }
        if let Some(g) = self.grad_norms {
            cfg.grad_norm_mode = match g {
                NormMode::Exact => GradNormMode::Exact,
                NormMode::LastLayer => GradNormMode::LastLayer,
            };
        }
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::GenData { opts } => {
            let cfg = opts.resolve()?;
            let ds = cfg.build_dataset()?;
            let file = File::create(&cfg.out)?;
            write_dataset_csv(&ds, BufWriter::new(file))?;
            eprintln!(
                "wrote {} ({} train + {} test rows) to {}",
                ds.name,
                ds.train.len(),
                ds.test.len(),
                cfg.out.display()
            );
        }
        Command::Run { opts } => {
            let cfg = opts.resolve()?;
            let (rows, report) = run_single(&cfg)?;
            for row in &rows {
                println!(
                    "epoch {:>3}  train {}  test {}  acc {}  backward {}",
                    row.epoch,
                    fmt_opt(row.train_loss),
                    fmt_opt(row.test_loss),
                    fmt_opt(row.test_accuracy),
                    row.backward_samples
                );
            }
            if let Some(last) = report.weight_trace.last() {
                let names: Vec<String> = report
                    .candidates
                    .iter()
                    .zip(&last.weights)
                    .map(|(k, w)| format!("{k}={w:.4}"))
                    .collect();
                println!("final weights: {}", names.join(" "));
            }
            eprintln!("appended {} rows to {}", rows.len(), cfg.out.display());
        }
        Command::Sweep { opts } => {
            let cfg = opts.resolve()?;
            let out = run_sweep(&cfg)?;
            eprintln!(
                "{} runs, {} skipped, {} failed; results in {}, weights in {}, plot script {}",
                out.cells_run,
                out.cells_skipped,
                out.failures,
                out.results_path.display(),
                out.weights_path.display(),
                out.plot_path.display()
            );
        }
        Command::Rank { input, format, out } => {
            let rows = read_results(&input)?;
            let table = rank_table(&rows)?;
            let text = match format {
                Format::Markdown => table.to_markdown(),
                Format::Csv => table.to_csv()?,
            };
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
