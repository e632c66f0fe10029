use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use symdyn::reduce::Weighting;
use symdyn::select::Criterion;
use symdyn_cli::commands::{self, Reduction};
use symdyn_cli::{configure_threads, io, CliError, CliResult, InputFormat, PipelineConfig};

#[derive(Parser)]
#[command(name = "symdyn", version, about = "Reduced-order Markov models of time series via symbolic dynamics")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the defaults (or of `--config`).
#[derive(Args)]
struct ConfigArgs {
    /// JSON pipeline configuration to start from.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alphabet: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    dmax: Option<usize>,
    #[arg(long, global = true)]
    depth_floor: Option<usize>,
    #[arg(long, global = true)]
    prior: Option<f64>,
    #[arg(long, global = true, value_parser = parse_weighting)]
    weighting: Option<Weighting>,
    #[arg(long, global = true, value_parser = parse_criterion)]
    criterion: Option<Criterion>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Zero-based CSV column of the signal.
    #[arg(long, global = true)]
    column: Option<usize>,
    #[arg(long, global = true)]
    skip_header: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<InputFormat>,
    /// Normalize after downsampling instead of before.
    #[arg(long, global = true)]
    normalize_after: bool,
    /// Sequence length for the Hamming bound column.
    #[arg(long, global = true)]
    bound_length: Option<usize>,
    #[arg(long, global = true, default_value = "symdyn-out")]
    out_dir: PathBuf,
}

fn parse_weighting(s: &str) -> Result<Weighting, symdyn::Error> {
    s.parse()
}

fn parse_criterion(s: &str) -> Result<Criterion, symdyn::Error> {
    s.parse()
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let bytes = io::read_bytes(path)?;
                serde_json::from_slice(&bytes).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.alphabet {
            c.alphabet_size = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.dmax {
            c.d_max = v;
        }
        if let Some(v) = self.depth_floor {
            c.depth_floor = v;
        }
        if let Some(v) = self.prior {
            c.prior_weight = v;
        }
        if let Some(v) = self.weighting {
            c.weighting = v;
        }
        if let Some(v) = self.criterion {
            c.criterion = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.column {
            c.column = v;
        }
        if let Some(v) = self.format {
            c.input_format = v;
        }
        if let Some(v) = self.bound_length {
            c.bound_length = v;
        }
        c.skip_header |= self.skip_header;
        c.normalize_first &= !self.normalize_after;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a full-order model to one series.
    Fit { input: PathBuf },
    /// Cluster the states of a fitted model and score every cut.
    Reduce {
        model: PathBuf,
        /// The series the model was fitted on.
        input: PathBuf,
        /// Smallest cut to score (and write).
        #[arg(long)]
        n_min: Option<usize>,
        /// Largest cut to score (and write).
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Anomaly statistics for every series in a directory.
    Analyze { batch: PathBuf },
    /// Coupled realizations of a model and one of its reductions.
    Simulate {
        model: PathBuf,
        /// Reduced model written by `reduce`.
        #[arg(long, conflicts_with = "states")]
        reduced: Option<PathBuf>,
        /// Cut the model's dendrogram into this many states.
        #[arg(long)]
        states: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Flattened reduced emission rows for every series in a directory.
    Features {
        batch: PathBuf,
        #[arg(long)]
        states: usize,
    },
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    configure_threads()?;
    let cfg = cli.config.resolve()?;
    let out = cli.config.out_dir.as_path();
    match cli.command {
        Command::Fit { input } => commands::cmd_fit(&input, &cfg, out),
        Command::Reduce { model, input, n_min, n_max } => {
            commands::cmd_reduce(&model, &input, (n_min, n_max), &cfg, out)
        }
        Command::Analyze { batch } => commands::cmd_analyze(&batch, &cfg, out),
        Command::Simulate { model, reduced, states, length, trials } => {
            let reduction = match (reduced, states) {
                (Some(path), _) => Reduction::File(path),
                (None, Some(n)) => Reduction::States(n),
                (None, None) => Reduction::Identity,
            };
            commands::cmd_simulate(&model, &reduction, length, trials, &cfg, out)
        }
        Command::Features { batch, states } => commands::cmd_features(&batch, states, &cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on bad arguments, which is taken by input errors here
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
