use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ttrr_cli::{run, ExperimentConfig, ExperimentKind, HamSource, TableScale};

#[derive(Parser)]
#[command(
    name = "ttrr",
    version,
    about = "Rayleigh-quotient experiments on tensor-train varieties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segre classification and dimension cross-check of a profile.
    Classify(Common),
    /// Gauged TT factorization of a dense tensor JSON file.
    Factorize(Common),
    /// Dense tensor of a TT JSON file.
    Decompress(Common),
    /// One-site ALS.
    Als(Common),
    /// Two-site DMRG; `--r` caps the bond dimensions.
    Dmrg(Common),
    /// Restarted ALS statistics against enumerated local minima.
    Stats(Common),
    /// Monodromy count of critical points at a generic point.
    Rrdeg(Common),
    /// All critical points for the given Hamiltonian.
    Enumerate(Common),
    /// Histogram of real critical point counts over random matrices.
    Realcount(Common),
    /// Recompute the reference count tables.
    Tables(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Small,
    Stretch,
}

#[derive(Args)]
struct Common {
    /// Physical dimensions, e.g. 2,2,2.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    k: Option<Vec<usize>>,
    /// Inner bond dimensions, e.g. 1,2,1.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    r: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hamiltonian matrix JSON; random when absent.
    #[arg(long, conflicts_with = "sq_spec")]
    ham: Option<PathBuf>,
    /// Second-quantized coefficient JSON.
    #[arg(long)]
    sq_spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// rnc, p1xp1 or tt.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// Stop once this many critical points are found.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, value_enum, default_value = "small")]
    scale: Scale,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

impl Common {
    fn into_config(self, kind: ExperimentKind) -> ExperimentConfig {
        let ham = match (self.ham, self.sq_spec) {
            (Some(path), _) => HamSource::File { path },
            (None, Some(path)) => HamSource::SecondQuantized { path },
            (None, None) => HamSource::Random,
        };
        ExperimentConfig {
            kind,
            k: self.k,
            r: self.r,
            ham,
            seed: self.seed,
            input: self.input,
            out: self.out,
            threads: self.threads,
            budget_secs: self.budget,
            trials: self.trials,
            samples: self.samples,
            family: self.family,
            d: self.d,
            target: self.target,
            scale: match self.scale {
                Scale::Small => TableScale::Small,
                Scale::Stretch => TableScale::Stretch,
            },
            max_sweeps: self.max_sweeps,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Classify(c) => (ExperimentKind::Classify, c),
        Command::Factorize(c) => (ExperimentKind::Factorize, c),
        Command::Decompress(c) => (ExperimentKind::Decompress, c),
        Command::Als(c) => (ExperimentKind::Als, c),
        Command::Dmrg(c) => (ExperimentKind::Dmrg, c),
        Command::Stats(c) => (ExperimentKind::Stats, c),
        Command::Rrdeg(c) => (ExperimentKind::Rrdeg, c),
        Command::Enumerate(c) => (ExperimentKind::Enumerate, c),
        Command::Realcount(c) => (ExperimentKind::Realcount, c),
        Command::Tables(c) => (ExperimentKind::Tables, c),
    };
    let config = common.into_config(kind);
    match run(&config) {
        Ok(record) => {
            print!("{}", record.summary);
            if config.out.is_none() {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&record.payload).expect("json values serialize")
                );
            }
            ExitCode::from(record.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
