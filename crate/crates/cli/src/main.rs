use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxyopt::{
    certify_experiment, exit_code_for, list_experiments, run_experiment, CliError, ExperimentConfig, Result,
};

#[derive(Debug, Parser)]
#[command(name = "proxyopt", version, about = "Certify proxy conditions and check gradient-descent guarantees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its report, trajectory and certificates.
    Run {
        /// JSON configuration file; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered experiments.
    List,
    /// Check an experiment's conditions on sampled points without running descent.
    Certify {
        #[arg(long)]
        experiment: String,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn build_config(
    config: Option<PathBuf>,
    experiment: Option<String>,
    eps: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    let mut cfg = match (config, &experiment) {
        (Some(path), _) => ExperimentConfig::from_json_file(&path)?,
        (None, Some(name)) => ExperimentConfig::new(name),
        (None, None) => return Err(CliError::Config("pass --config or --experiment".into())),
    };
    if let Some(name) = experiment {
        cfg.experiment = name;
    }
    if let Some(e) = eps {
        cfg = cfg.with_eps(e);
    }
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(dir) = out {
        cfg = cfg.with_out_dir(dir);
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::List => {
            for e in list_experiments() {
                println!("{:<30} {}", e.name, e.description);
            }
            Ok(0)
        }
        Command::Run {
            config,
            experiment,
            eps,
            seed,
            out,
        } => {
            let cfg = build_config(config, experiment, eps, seed, out)?;
            let report = run_experiment(&cfg)?;
            for c in &report.cert_reports {
                let kind = if c.gating { "" } else { " (advisory)" };
                let status = if c.report.pass { "pass" } else { "FAIL" };
                println!("cert {:<36} {status}  min_slack {:.3e}{kind}", c.report.condition_id, c.report.min_slack);
            }
            let b = &report.bound;
            println!(
                "bound min g = {:.6e} at t = {} vs {:.6e}: {}{}",
                b.g_min,
                b.t_best,
                b.bound,
                if b.pass { "pass" } else { "FAIL" },
                if b.empirical_constant { " (empirical constant)" } else { "" }
            );
            println!("wrote {} files to {}", report.artifacts.len(), cfg.out_dir.display());
            Ok(report.exit_code)
        }
        Command::Certify {
            experiment,
            points,
            seed,
        } => {
            let cfg = ExperimentConfig::new(&experiment).with_seed(seed);
            let certs = certify_experiment(&cfg, points)?;
            println!("{}", serde_json::to_string_pretty(&certs)?);
            Ok(exit_code_for(&certs, None))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
