//! Experiment drivers behind the CLI subcommands: synthetic hyperparameter
//! validation, image denoising, PSRF reporting over stored traces, and
//! bounded-noise injection.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::frame::FrameOperator;
use crate::image::{read_pgm, write_pgm, Image};
use crate::inference::{
    histogram_with_gg_fit, mmse_estimate_pooled, nmse, psrf_table, snr_db, ssim, wiener_baseline,
    PsrfEntry,
};
use crate::lp_ball::{sample_lp_ball, LpNorm};
use crate::model::{sample_gg, GgParams, HyperParams, Observation};
use crate::sampler::{run_chain, SamplerKind};
use crate::trace::{read_trace, write_trace, ChainTrace};

/// RNG streams: chains of run `r` use streams `r * chains + c`; the
/// synthetic ground truth of run `r` uses `TRUTH_STREAM_BASE + r`.
const TRUTH_STREAM_BASE: u64 = 1 << 32;

/// Recovery quality of one coefficient group over the Monte Carlo runs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GroupRecovery {
    pub label: String,
    pub beta_nmse: f64,
    pub alpha_nmse: f64,
    pub gamma_nmse: f64,
}

/// Output of the synthetic validation experiment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidateReport {
    pub frame: String,
    pub sampler: SamplerKind,
    pub iterations: u64,
    pub burn_in: u64,
    pub chains: usize,
    pub runs: usize,
    pub groups: Vec<GroupRecovery>,
    pub max_beta_nmse: f64,
    pub max_alpha_nmse: f64,
}

/// Optional file outputs of [`run_validate`].
#[derive(Debug, Default, Clone)]
pub struct ValidateOutputs {
    /// Directory receiving per-chain traces (`run{r}_chain{c}.{csv,bin,meta.json}`).
    pub trace_dir: Option<PathBuf>,
    /// Directory receiving per-group histogram CSVs from the first run.
    pub histogram_dir: Option<PathBuf>,
}

/// Draws one synthetic validation instance: ground-truth hyperparameters
/// (`beta` uniform, `gamma` log-uniform over the configured ranges), frame
/// coefficients from the grouped GG prior, and the synthesized observation.
pub fn draw_instance(
    config: &RunConfig,
    frame: &FrameOperator,
    run: usize,
) -> Result<(HyperParams, Vec<f64>, Observation)> {
    use rand::Rng;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(TRUTH_STREAM_BASE + run as u64);
    let (b0, b1) = config.beta_range;
    let (g0, g1) = config.gamma_range;
    let truth = HyperParams::new(
        (0..frame.layout().group_count())
            .map(|_| {
                let beta = rng.random_range(b0..=b1);
                let gamma = (rng.random_range(g0.ln()..=g1.ln())).exp();
                GgParams { gamma, beta }
            })
            .collect(),
    );
    let mut x = vec![0.0; frame.coeff_len()];
    for (span, p) in frame.layout().spans().iter().zip(&truth.groups) {
        for v in &mut x[span.range()] {
            *v = sample_gg(p.gamma, p.beta, &mut rng);
        }
    }
    let y = frame.synthesize(&x)?;
    let obs = Observation::new(y, config.p, config.effective_delta())?;
    Ok((truth, x, obs))
}

/// Runs the configured number of chains in parallel (one worker per chain)
/// and returns them in chain order. Determinism comes from per-chain RNG
/// streams, not scheduling.
pub fn run_chains(
    config: &RunConfig,
    obs: &Observation,
    frame: &FrameOperator,
    base_stream: u64,
) -> Result<Vec<ChainTrace>> {
    if config.chains == 1 {
        return Ok(vec![run_chain(
            config.sampler,
            &config.settings(base_stream),
            obs,
            frame,
        )?]);
    }
    let mut results: Vec<Option<Result<ChainTrace>>> = Vec::new();
    results.resize_with(config.chains, || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for c in 0..config.chains {
            let settings = config.settings(base_stream + c as u64);
            handles.push(scope.spawn(move || run_chain(config.sampler, &settings, obs, frame)));
        }
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("chain worker panicked"));
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("all chains joined"))
        .collect()
}

/// The synthetic validation experiment: draw hyperparameters and
/// coefficients, synthesize the observation, re-estimate by MMSE, and report
/// per-group NMSEs over the Monte Carlo runs.
pub fn run_validate(config: &RunConfig, outputs: &ValidateOutputs) -> Result<ValidateReport> {
    config.validate()?;
    let frame = config.build_frame()?;
    let layout = frame.layout().clone();
    let g = layout.group_count();

    let mut beta_estimates = vec![Vec::with_capacity(config.runs); g];
    let mut alpha_estimates = vec![Vec::with_capacity(config.runs); g];
    let mut gamma_estimates = vec![Vec::with_capacity(config.runs); g];
    let mut truths: Vec<HyperParams> = Vec::with_capacity(config.runs);

    for run in 0..config.runs {
        let (truth, x_true, obs) = draw_instance(config, &frame, run)?;
        let base_stream = (run * config.chains) as u64;
        let traces = run_chains(config, &obs, &frame, base_stream)?;

        if let Some(dir) = &outputs.trace_dir {
            std::fs::create_dir_all(dir)?;
            for (c, trace) in traces.iter().enumerate() {
                write_trace(trace, dir.join(format!("run{run}_chain{c}")))?;
            }
        }

        let (_x_hat, theta_hat) = mmse_estimate_pooled(&traces, config.burn_in)?;
        for grp in 0..g {
            let p = theta_hat.groups[grp];
            beta_estimates[grp].push(p.beta);
            gamma_estimates[grp].push(p.gamma);
            alpha_estimates[grp].push(p.alpha());
        }

        if run == 0 {
            if let Some(dir) = &outputs.histogram_dir {
                std::fs::create_dir_all(dir)?;
                for (span, p) in layout.spans().iter().zip(&theta_hat.groups) {
                    let rows = histogram_with_gg_fit(&x_true[span.range()], 50, *p);
                    write_histogram_csv(&dir.join(format!("{}.csv", span.label)), &rows)?;
                }
            }
        }
        truths.push(truth);
    }

    let mut groups = Vec::with_capacity(g);
    for grp in 0..g {
        let beta_true: Vec<f64> = truths.iter().map(|t| t.groups[grp].beta).collect();
        let gamma_true: Vec<f64> = truths.iter().map(|t| t.groups[grp].gamma).collect();
        // NMSE against per-run truths: accumulate the per-run squared
        // relative errors, then average.
        let avg_nmse = |est: &[f64], truth: &[f64]| -> Result<f64> {
            let mut acc = 0.0;
            for (e, t) in est.iter().zip(truth) {
                acc += nmse(&[*e], *t)?;
            }
            Ok(acc / est.len() as f64)
        };
        let alpha_true: Vec<f64> = truths
            .iter()
            .map(|t| t.groups[grp].alpha())
            .collect();
        groups.push(GroupRecovery {
            label: layout.span(grp).label.clone(),
            beta_nmse: avg_nmse(&beta_estimates[grp], &beta_true)?,
            alpha_nmse: avg_nmse(&alpha_estimates[grp], &alpha_true)?,
            gamma_nmse: avg_nmse(&gamma_estimates[grp], &gamma_true)?,
        });
    }

    let max_beta = groups.iter().map(|e| e.beta_nmse).fold(0.0, f64::max);
    let max_alpha = groups.iter().map(|e| e.alpha_nmse).fold(0.0, f64::max);
    Ok(ValidateReport {
        frame: frame.describe(),
        sampler: config.sampler,
        iterations: config.iterations,
        burn_in: config.burn_in,
        chains: config.chains,
        runs: config.runs,
        groups,
        max_beta_nmse: max_beta,
        max_alpha_nmse: max_alpha,
    })
}

fn write_histogram_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut csv = String::from("bin_center,empirical_density,fitted_density\n");
    for (center, density, fit) in rows {
        csv.push_str(&format!("{center},{density},{fit}\n"));
    }
    std::fs::write(path, csv)?;
    Ok(())
}

/// SNR/SSIM pair of one image against the reference.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ImageMetrics {
    pub snr_db: f64,
    pub ssim: f64,
}

fn metrics(reference: &Image, image: &Image) -> Result<ImageMetrics> {
    Ok(ImageMetrics {
        snr_db: snr_db(reference.pixels(), image.pixels()),
        ssim: ssim(reference, image)?,
    })
}

/// Output of the denoising driver.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DenoiseReport {
    pub frame: String,
    pub sampler: SamplerKind,
    pub iterations: u64,
    pub chains: usize,
    pub coeff_acceptance: f64,
    /// Metrics versus the reference image, when one was supplied.
    pub noisy: Option<ImageMetrics>,
    pub denoised: Option<ImageMetrics>,
    pub wiener: Option<ImageMetrics>,
}

/// Denoises `noisy` under the bounded-error model: sample coefficients, take
/// the MMSE estimate, and synthesize `y_hat = F* x_hat` (clamped to
/// `[0, 255]`). Returns the denoised image and the metric report.
pub fn run_denoise(
    config: &RunConfig,
    noisy: &Image,
    reference: Option<&Image>,
    trace_dir: Option<&Path>,
) -> Result<(Image, DenoiseReport)> {
    config.validate()?;
    let frame = config.build_frame_for(noisy.rows(), noisy.cols())?;
    let obs = Observation::new(noisy.pixels().to_vec(), config.p, config.effective_delta())?;
    let traces = run_chains(config, &obs, &frame, 0)?;
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
        for (c, trace) in traces.iter().enumerate() {
            write_trace(trace, dir.join(format!("chain{c}")))?;
        }
    }
    let accepted: u64 = traces.iter().map(|t| t.accept.coeff_accepts).sum();
    let proposed: u64 = traces.iter().map(|t| t.accept.coeff_proposals).sum();
    let (x_hat, _theta_hat) = mmse_estimate_pooled(&traces, config.burn_in)?;
    let synth = frame.synthesize(&x_hat)?;
    let denoised = Image::new(
        noisy.rows(),
        noisy.cols(),
        synth.iter().map(|v| v.clamp(0.0, 255.0)).collect(),
    )?;

    let (noisy_m, denoised_m, wiener_m) = match reference {
        Some(r) => {
            let w = wiener_baseline(noisy, 5)?;
            (
                Some(metrics(r, noisy)?),
                Some(metrics(r, &denoised)?),
                Some(metrics(r, &w)?),
            )
        }
        None => (None, None, None),
    };

    Ok((
        denoised,
        DenoiseReport {
            frame: frame.describe(),
            sampler: config.sampler,
            iterations: config.iterations,
            chains: config.chains,
            coeff_acceptance: if proposed == 0 {
                0.0
            } else {
                accepted as f64 / proposed as f64
            },
            noisy: noisy_m,
            denoised: denoised_m,
            wiener: wiener_m,
        },
    ))
}

/// File-based wrapper over [`run_denoise`].
pub fn run_denoise_files(
    config: &RunConfig,
    input: &Path,
    reference: Option<&Path>,
    output: &Path,
    trace_dir: Option<&Path>,
) -> Result<DenoiseReport> {
    let noisy = read_pgm(input)?;
    let reference = reference.map(read_pgm).transpose()?;
    let (denoised, report) = run_denoise(config, &noisy, reference.as_ref(), trace_dir)?;
    write_pgm(output, &denoised)?;
    Ok(report)
}

/// PSRF report over stored traces.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PsrfReport {
    pub chains: usize,
    pub burn_in: u64,
    pub entries: Vec<PsrfEntry>,
    pub max_psrf: f64,
    pub threshold: f64,
    pub converged: bool,
}

/// Reads stored traces (by stem) and computes the per-hyperparameter PSRF
/// table. Fails when the trace configurations are incompatible.
pub fn run_psrf(stems: &[PathBuf], burn_in: Option<u64>, threshold: f64) -> Result<PsrfReport> {
    if stems.len() < 2 {
        return Err(Error::InvalidParameter(
            "psrf needs at least two trace stems".into(),
        ));
    }
    let traces: Vec<ChainTrace> = stems.iter().map(read_trace).collect::<Result<_>>()?;
    let burn = burn_in.unwrap_or(traces[0].meta.burn_in);
    let refs: Vec<&ChainTrace> = traces.iter().collect();
    let entries = psrf_table(&refs, burn)?;
    let max_psrf = entries.iter().map(|e| e.psrf).fold(0.0, f64::max);
    Ok(PsrfReport {
        chains: traces.len(),
        burn_in: burn,
        entries,
        max_psrf,
        threshold,
        converged: max_psrf <= threshold,
    })
}

/// Adds noise drawn uniformly from the `l_p` ball of radius `delta` to a
/// PGM image (values clamp to `[0, 255]` on write).
pub fn run_add_noise(
    input: &Path,
    output: &Path,
    p: LpNorm,
    delta: f64,
    seed: u64,
) -> Result<()> {
    let image = read_pgm(input)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = sample_lp_ball(image.len(), p, delta, &mut rng)?;
    let noisy = Image::new(
        image.rows(),
        image.cols(),
        image
            .pixels()
            .iter()
            .zip(&noise)
            .map(|(v, n)| v + n)
            .collect(),
    )?;
    write_pgm(output, &noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FrameChoice;
    use crate::wavelet::WaveletFilter;

    fn tiny_config() -> RunConfig {
        RunConfig {
            frame: FrameChoice::Union,
            filters: vec![WaveletFilter::Haar, WaveletFilter::Daubechies4Shifted],
            levels: 1,
            rows: 8,
            cols: 8,
            delta: 1e-3,
            iterations: 400,
            burn_in: 200,
            thin: 20,
            seed: 3,
            chains: 2,
            runs: 2,
            gamma_range: (0.5, 2.0),
            beta_range: (1.0, 2.0),
            ..Default::default()
        }
    }

    #[test]
    fn validate_produces_full_report_and_traces() {
        let dir = tempfile::tempdir().unwrap();
        let outputs = ValidateOutputs {
            trace_dir: Some(dir.path().join("traces")),
            histogram_dir: Some(dir.path().join("hist")),
        };
        let config = tiny_config();
        let report = run_validate(&config, &outputs).unwrap();
        assert_eq!(report.groups.len(), 8);
        assert_eq!(report.runs, 2);
        for g in &report.groups {
            assert!(g.beta_nmse.is_finite());
            assert!(g.alpha_nmse.is_finite());
        }
        // Two runs, two chains each.
        for run in 0..2 {
            for chain in 0..2 {
                let stem = dir.path().join(format!("traces/run{run}_chain{chain}"));
                assert!(stem.with_extension("csv").exists());
                assert!(stem.with_extension("bin").exists());
            }
        }
        // One histogram per group, densities summing to one.
        let hist = std::fs::read_to_string(dir.path().join("hist/b1.a.csv")).unwrap();
        assert!(hist.starts_with("bin_center,empirical_density,fitted_density"));
    }

    #[test]
    fn validate_is_deterministic() {
        let config = tiny_config();
        let a = run_validate(&config, &ValidateOutputs::default()).unwrap();
        let b = run_validate(&config, &ValidateOutputs::default()).unwrap();
        for (ga, gb) in a.groups.iter().zip(&b.groups) {
            assert_eq!(ga.beta_nmse, gb.beta_nmse);
            assert_eq!(ga.gamma_nmse, gb.gamma_nmse);
        }
    }

    #[test]
    fn psrf_driver_reads_back_written_traces() {
        let dir = tempfile::tempdir().unwrap();
        let outputs = ValidateOutputs {
            trace_dir: Some(dir.path().to_path_buf()),
            histogram_dir: None,
        };
        let mut config = tiny_config();
        config.runs = 1;
        run_validate(&config, &outputs).unwrap();
        let stems = vec![dir.path().join("run0_chain0"), dir.path().join("run0_chain1")];
        let report = run_psrf(&stems, None, 1.2).unwrap();
        assert_eq!(report.entries.len(), 2 * 8);
        assert!(report.max_psrf >= ((200.0 - 1.0) / 200.0f64).sqrt());

        // Tightening the threshold flips the exit condition.
        let strict = run_psrf(&stems, None, report.max_psrf * 0.5).unwrap();
        assert!(!strict.converged);
    }
}
