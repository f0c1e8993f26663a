//! Thin command-line front end over the library drivers.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use framecoef::config::RunConfig;
use framecoef::drivers::{
    run_add_noise, run_denoise_files, run_psrf, run_validate, ValidateOutputs,
};
use framecoef::lp_ball::LpNorm;
use framecoef::Result;

#[derive(Parser)]
#[command(
    name = "framecoef",
    about = "Bayesian frame-coefficient estimation and bounded-noise image denoising",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus the flag overrides shared by the experiment commands.
#[derive(Args)]
struct ConfigArgs {
    /// Plain-text key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. `-s iterations=5000 -s seed=1`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for assignment in &self.set {
            let (key, value) = assignment.split_once('=').ok_or_else(|| {
                framecoef::Error::Config(format!("override {assignment:?} is not KEY=VALUE"))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic validation: draw hyperparameters, re-estimate them, report NMSE.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write per-chain traces into this directory.
        #[arg(long)]
        traces_dir: Option<PathBuf>,
        /// Write per-group coefficient histograms (first run) into this directory.
        #[arg(long)]
        histograms_dir: Option<PathBuf>,
        /// Write the report as JSON to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Denoise a PGM image under the bounded-error model.
    Denoise {
        #[command(flatten)]
        config: ConfigArgs,
        /// Noisy input image (8-bit PGM, P2 or P5).
        #[arg(long)]
        input: PathBuf,
        /// Clean reference image for SNR/SSIM reporting.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Output path of the denoised image.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        traces_dir: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Gelman-Rubin convergence table over stored traces.
    Psrf {
        /// Trace stems (paths without the .csv/.bin/.meta.json extension).
        #[arg(required = true, num_args = 2..)]
        traces: Vec<PathBuf>,
        /// Burn-in override (defaults to the burn-in stored in the traces).
        #[arg(long)]
        burn_in: Option<u64>,
        /// Exit nonzero when any PSRF exceeds this threshold.
        #[arg(long, default_value_t = 1.2)]
        max_psrf: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Corrupt an image with noise uniform on an lp ball.
    AddNoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Norm order (a number >= 1, or `inf`).
        #[arg(long, default_value = "inf")]
        p: String,
        /// Ball radius.
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| framecoef::Error::Config(format!("json serialization failed: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate {
            config,
            traces_dir,
            histograms_dir,
            json,
        } => {
            let config = config.load()?;
            let outputs = ValidateOutputs {
                trace_dir: traces_dir,
                histogram_dir: histograms_dir,
            };
            let report = run_validate(&config, &outputs)?;
            println!(
                "validate: {} | sampler {} | {} iterations, {} burn-in, {} chains, {} runs",
                report.frame,
                report.sampler,
                report.iterations,
                report.burn_in,
                report.chains,
                report.runs
            );
            println!("{:<12} {:>12} {:>12} {:>12}", "group", "NMSE(beta)", "NMSE(alpha)", "NMSE(gamma)");
            for g in &report.groups {
                println!(
                    "{:<12} {:>12.5} {:>12.5} {:>12.5}",
                    g.label, g.beta_nmse, g.alpha_nmse, g.gamma_nmse
                );
            }
            println!(
                "max NMSE: beta {:.5}, alpha {:.5}",
                report.max_beta_nmse, report.max_alpha_nmse
            );
            if let Some(path) = json {
                write_json(&path, &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Denoise {
            config,
            input,
            reference,
            output,
            traces_dir,
            json,
        } => {
            let config = config.load()?;
            let report = run_denoise_files(
                &config,
                &input,
                reference.as_deref(),
                &output,
                traces_dir.as_deref(),
            )?;
            println!(
                "denoise: {} | sampler {} | {} iterations | acceptance {:.3}",
                report.frame, report.sampler, report.iterations, report.coeff_acceptance
            );
            let fmt = |m: &Option<framecoef::drivers::ImageMetrics>| match m {
                Some(m) => format!("SNR {:.2} dB, SSIM {:.3}", m.snr_db, m.ssim),
                None => "n/a (no reference)".into(),
            };
            println!("  noisy:    {}", fmt(&report.noisy));
            println!("  wiener:   {}", fmt(&report.wiener));
            println!("  denoised: {}", fmt(&report.denoised));
            println!("wrote {}", output.display());
            if let Some(path) = json {
                write_json(&path, &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Psrf {
            traces,
            burn_in,
            max_psrf,
            json,
        } => {
            let report = run_psrf(&traces, burn_in, max_psrf)?;
            println!(
                "psrf over {} chains (burn-in {}):",
                report.chains, report.burn_in
            );
            println!("{:<12} {:>8} {:>10}", "group", "param", "PSRF");
            for e in &report.entries {
                println!("{:<12} {:>8} {:>10.4}", e.label, e.parameter, e.psrf);
            }
            println!(
                "max PSRF {:.4} (threshold {})",
                report.max_psrf, report.threshold
            );
            if let Some(path) = json {
                write_json(&path, &report)?;
            }
            if report.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("convergence threshold exceeded");
                Ok(ExitCode::from(2))
            }
        }
        Command::AddNoise {
            input,
            output,
            p,
            delta,
            seed,
        } => {
            let p = LpNorm::parse(&p)?;
            run_add_noise(&input, &output, p, delta, seed)?;
            println!("wrote {}", output.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
