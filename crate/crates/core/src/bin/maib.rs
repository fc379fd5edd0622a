use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maib::experiment::{self, ExperimentConfig, RunOutput};
use maib::Error;

#[derive(Parser)]
#[command(name = "maib", version, about = "Information-bottleneck curves from BA and MA-IB")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blahut-Arimoto curve for a discrete source
    BaCurve(RunArgs),
    /// Neural MA-IB curve (one CSV per sample size)
    MaibCurve(RunArgs),
    /// min(R, H(Y)) reference for deterministic labels
    TheoryCurve(RunArgs),
    /// Every command selected by the config's `method`
    Run(RunArgs),
    /// Vertical gap of TEST below REFERENCE; exit 1 if the median exceeds the threshold
    Compare {
        test: PathBuf,
        reference: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Also write the full report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Finite-difference check of the network and loss gradients
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the effective config as TOML
    Config(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; omitted keys take defaults
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory [env: MAIB_OUT_DIR]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads [env: MAIB_JOBS]
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated beta values
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    betas: Option<Vec<f64>>,
    /// Comma-separated MA-IB sample sizes
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
}

impl RunArgs {
    /// File, then environment, then flags.
    fn effective(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_env()?;
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        cfg.jobs = self.jobs.or(cfg.jobs);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        if let Some(b) = &self.betas {
            cfg.betas = b.clone();
        }
        if let Some(s) = &self.sizes {
            cfg.sizes = s.clone();
        }
        cfg.repeats = self.repeats.unwrap_or(cfg.repeats);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(out: &RunOutput) {
    for f in &out.files {
        if f.extension().is_some_and(|e| e == "csv") && !f.to_string_lossy().ends_with(".history.csv") {
            println!("wrote {}", f.display());
        }
    }
    println!("manifest {} ({} points, {} failed)", out.manifest.display(), out.points, out.failures);
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::BaCurve(a) => report(&experiment::cmd_ba_curve(&a.effective()?)?),
        Command::MaibCurve(a) => report(&experiment::cmd_maib_curve(&a.effective()?)?),
        Command::TheoryCurve(a) => report(&experiment::cmd_theory_curve(&a.effective()?)?),
        Command::Run(a) => experiment::cmd_run(&a.effective()?)?.iter().for_each(report),
        Command::Config(a) => print!("{}", a.effective()?.to_toml()?),
        Command::Compare { test, reference, threshold, report } => {
            let outcome = experiment::cmd_compare(&test, &reference, threshold)?;
            println!("{}", outcome.summary());
            if let Some(path) = report {
                std::fs::write(&path, outcome.to_json()?).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
            }
            if !outcome.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Gradcheck { instances, step, seed } => {
            let (r, passed) = experiment::cmd_gradcheck(instances, step, seed)?;
            println!(
                "instances {} step {:e} backward_max_rel_err {:e} end_to_end_max_rel_err {:e} tolerance {:e} {}",
                r.instances,
                r.step,
                r.backward,
                r.end_to_end,
                experiment::GRADCHECK_TOLERANCE,
                if passed { "PASS" } else { "FAIL" }
            );
            if !passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
