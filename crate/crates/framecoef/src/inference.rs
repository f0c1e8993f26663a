//! Chain post-processing: the Gelman-Rubin potential scale reduction factor,
//! MMSE estimation from traces, and the evaluation metrics used by the
//! validation and denoising drivers (NMSE, SNR, SSIM, a local Wiener
//! baseline), plus Kolmogorov-Smirnov helpers for distributional checks.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{gg_pdf, GgParams, HyperParams};
use crate::trace::ChainTrace;
use crate::wavelet::{dwt_step, WaveletFilter, WaveletSpec};

/// Potential scale reduction factor over two or more chains of one scalar
/// parameter. Chains are truncated to the shortest length.
///
/// `R = sqrt( ((n-1)/n W + B/n) / W )` with `W` the mean within-chain sample
/// variance and `B/n` the sample variance of the chain means. Degenerate
/// chains with `W = 0` give 1.
pub fn psrf(chains: &[&[f64]]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidParameter(
            "psrf needs at least two chains".into(),
        ));
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if n < 10 {
        return Err(Error::InvalidParameter(format!(
            "psrf needs chains of length >= 10, got {n}"
        )));
    }
    let nf = n as f64;
    let mut means = Vec::with_capacity(chains.len());
    let mut within = 0.0;
    for chain in chains {
        let c = &chain[..n];
        let mean = c.iter().sum::<f64>() / nf;
        let var = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
        means.push(mean);
        within += var;
    }
    let w = within / chains.len() as f64;
    if w == 0.0 {
        return Ok(1.0);
    }
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let b_over_n = means
        .iter()
        .map(|m| (m - grand) * (m - grand))
        .sum::<f64>()
        / (means.len() as f64 - 1.0);
    Ok((((nf - 1.0) / nf * w + b_over_n) / w).sqrt())
}

/// PSRF of one hyperparameter series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PsrfEntry {
    pub group: usize,
    pub label: String,
    pub parameter: &'static str,
    pub psrf: f64,
}

/// Per-hyperparameter PSRF across parallel chains, after discarding
/// `burn_in` iterations.
pub fn psrf_table(traces: &[&ChainTrace], burn_in: u64) -> Result<Vec<PsrfEntry>> {
    if traces.len() < 2 {
        return Err(Error::InvalidParameter(
            "psrf needs at least two traces".into(),
        ));
    }
    let meta = &traces[0].meta;
    for t in &traces[1..] {
        if !meta.compatible_with(&t.meta) {
            return Err(Error::Config(
                "traces have incompatible configurations (frame, delta, p, iterations, thin)"
                    .into(),
            ));
        }
    }
    let burn = burn_in as usize;
    let mut entries = Vec::new();
    for g in 0..meta.group_count() {
        for (name, series) in [("beta", 0), ("gamma", 1)] {
            let chains: Vec<Vec<f64>> = traces
                .iter()
                .map(|t| {
                    let full = if series == 0 {
                        t.beta_series(g)
                    } else {
                        t.gamma_series(g)
                    };
                    full[burn.min(full.len())..].to_vec()
                })
                .collect();
            let views: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
            entries.push(PsrfEntry {
                group: g,
                label: meta.group_labels[g].clone(),
                parameter: name,
                psrf: psrf(&views)?,
            });
        }
    }
    Ok(entries)
}

/// MMSE estimates: componentwise means of the post-burn-in coefficient
/// snapshots and hyperparameter history.
pub fn mmse_estimate(trace: &ChainTrace, burn_in: u64) -> Result<(Vec<f64>, HyperParams)> {
    mmse_estimate_pooled(std::slice::from_ref(trace), burn_in)
}

/// As [`mmse_estimate`], pooling several chains of one posterior.
pub fn mmse_estimate_pooled(
    traces: &[ChainTrace],
    burn_in: u64,
) -> Result<(Vec<f64>, HyperParams)> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidParameter("no traces given".into()))?;
    let k = first.meta.coeff_len;
    let g = first.group_count();
    let thin = first.meta.thin;

    let mut coeff_sum = vec![0.0; k];
    let mut coeff_count = 0usize;
    let mut beta_sum = vec![0.0; g];
    let mut gamma_sum = vec![0.0; g];
    let mut hyper_count = 0usize;

    for trace in traces {
        // Snapshot s (0-based) was taken at iteration (s+1) * thin.
        for (s, snap) in trace.snapshots.iter().enumerate() {
            let iteration = (s as u64 + 1) * thin;
            if iteration > burn_in {
                for (acc, v) in coeff_sum.iter_mut().zip(snap) {
                    *acc += v;
                }
                coeff_count += 1;
            }
        }
        let iterations = trace.len();
        for it in burn_in as usize..iterations {
            for grp in 0..g {
                beta_sum[grp] += trace.beta[it * g + grp];
                gamma_sum[grp] += trace.gamma[it * g + grp];
            }
            hyper_count += 1;
        }
    }

    if coeff_count == 0 || hyper_count == 0 {
        return Err(Error::InvalidParameter(
            "empty post-burn-in window: lower burn_in or extend the chain".into(),
        ));
    }
    let coeffs: Vec<f64> = coeff_sum.iter().map(|v| v / coeff_count as f64).collect();
    let groups = beta_sum
        .iter()
        .zip(&gamma_sum)
        .map(|(b, ga)| GgParams {
            gamma: ga / hyper_count as f64,
            beta: b / hyper_count as f64,
        })
        .collect();
    Ok((coeffs, HyperParams::new(groups)))
}

/// Normalized mean square error of estimates against a nonzero truth:
/// `mean_r (est_r - truth)^2 / truth^2`.
pub fn nmse(estimates: &[f64], truth: f64) -> Result<f64> {
    if truth == 0.0 {
        return Err(Error::InvalidParameter(
            "nmse is undefined for a zero reference value".into(),
        ));
    }
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("nmse needs at least one run".into()));
    }
    Ok(estimates
        .iter()
        .map(|e| ((e - truth) / truth).powi(2))
        .sum::<f64>()
        / estimates.len() as f64)
}

/// Signal-to-noise ratio `20 log10(||ref|| / ||ref - est||)` in dB;
/// `f64::INFINITY` when the images are identical.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> f64 {
    debug_assert_eq!(reference.len(), estimate.len());
    let num: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    let den: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if den == 0.0 {
        return f64::INFINITY;
    }
    20.0 * (num / den).log10()
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_DYNAMIC_RANGE: f64 = 255.0;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        *v = (-(i as f64 - center).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Separable valid-mode filtering with the 1D window along rows then columns.
fn filter_valid(data: &[f64], rows: usize, cols: usize, window: &[f64]) -> Vec<f64> {
    let w = window.len();
    let out_cols = cols - w + 1;
    let mut row_pass = vec![0.0; rows * out_cols];
    for i in 0..rows {
        for j in 0..out_cols {
            let mut acc = 0.0;
            for (k, wk) in window.iter().enumerate() {
                acc += wk * data[i * cols + j + k];
            }
            row_pass[i * out_cols + j] = acc;
        }
    }
    let out_rows = rows - w + 1;
    let mut out = vec![0.0; out_rows * out_cols];
    for j in 0..out_cols {
        for i in 0..out_rows {
            let mut acc = 0.0;
            for (k, wk) in window.iter().enumerate() {
                acc += wk * row_pass[(i + k) * out_cols + j];
            }
            out[i * out_cols + j] = acc;
        }
    }
    out
}

/// Mean structural similarity over sliding 11x11 Gaussian windows
/// (8-bit dynamic-range convention). Symmetric; 1 for identical images.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.rows() < SSIM_WINDOW || a.cols() < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}"
        )));
    }
    let window = gaussian_window();
    let (rows, cols) = (a.rows(), a.cols());
    let x = a.pixels();
    let y = b.pixels();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(x, rows, cols, &window);
    let mu_y = filter_valid(y, rows, cols, &window);
    let m_xx = filter_valid(&xx, rows, cols, &window);
    let m_yy = filter_valid(&yy, rows, cols, &window);
    let m_xy = filter_valid(&xy, rows, cols, &window);

    let c1 = (SSIM_K1 * SSIM_DYNAMIC_RANGE).powi(2);
    let c2 = (SSIM_K2 * SSIM_DYNAMIC_RANGE).powi(2);
    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let mx = mu_x[i];
        let my = mu_y[i];
        let var_x = m_xx[i] - mx * mx;
        let var_y = m_yy[i] - my * my;
        let cov = m_xy[i] - mx * my;
        acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
            / ((mx * mx + my * my + c1) * (var_x + var_y + c2));
    }
    Ok(acc / mu_x.len() as f64)
}

/// Noise variance estimate from the median absolute deviation of the finest
/// diagonal Haar subband.
pub fn estimate_noise_variance(image: &Image) -> f64 {
    let rows = image.rows() & !1;
    let cols = image.cols() & !1;
    if rows < 2 || cols < 2 {
        return 0.0;
    }
    let spec = WaveletSpec::new(WaveletFilter::Haar, 1).expect("haar is valid");
    let (h, g) = (spec.lowpass(), spec.highpass());
    // One separable high-high pass over the even-cropped image.
    let mut row_hi = vec![0.0; rows * (cols / 2)];
    let mut lo = vec![0.0; cols / 2];
    let mut hi = vec![0.0; cols / 2];
    for i in 0..rows {
        let row: Vec<f64> = (0..cols).map(|j| image.get(i, j)).collect();
        dwt_step(&row, h, g, &mut lo, &mut hi);
        row_hi[i * (cols / 2)..(i + 1) * (cols / 2)].copy_from_slice(&hi);
    }
    let mut diag = Vec::with_capacity((rows / 2) * (cols / 2));
    let mut col = vec![0.0; rows];
    let mut clo = vec![0.0; rows / 2];
    let mut chi = vec![0.0; rows / 2];
    for j in 0..cols / 2 {
        for i in 0..rows {
            col[i] = row_hi[i * (cols / 2) + j];
        }
        dwt_step(&col, h, g, &mut clo, &mut chi);
        diag.extend(chi.iter().map(|v| v.abs()));
    }
    diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = diag[diag.len() / 2];
    // The Haar analysis filters here carry a gain of 2 from the two passes
    // relative to the usual normalized diagonal subband; the 0.6745 factor
    // maps MAD to a Gaussian sigma.
    let sigma = mad / 0.6745 / 2.0;
    sigma * sigma
}

/// Locally adaptive Wiener filter: per-window mean and variance with a
/// global noise-variance estimate, `out = m + max(v - nv, 0)/v * (x - m)`.
pub fn wiener_baseline(noisy: &Image, window: usize) -> Result<Image> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "wiener window must be odd and >= 3, got {window}"
        )));
    }
    let nv = estimate_noise_variance(noisy);
    let (rows, cols) = (noisy.rows(), noisy.cols());
    let half = (window / 2) as isize;
    let mut out = Image::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut count = 0.0;
            for di in -half..=half {
                for dj in -half..=half {
                    let r = (i as isize + di).clamp(0, rows as isize - 1) as usize;
                    let c = (j as isize + dj).clamp(0, cols as isize - 1) as usize;
                    let v = noisy.get(r, c);
                    sum += v;
                    sum_sq += v * v;
                    count += 1.0;
                }
            }
            let mean = sum / count;
            let var = (sum_sq / count - mean * mean).max(0.0);
            let gain = if var > 0.0 { (var - nv).max(0.0) / var } else { 0.0 };
            out.set(i, j, mean + gain * (noisy.get(i, j) - mean));
        }
    }
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
/// Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Histogram of `values` with the fitted GG density at each bin center.
/// Empirical densities integrate to one over the binned range.
pub fn histogram_with_gg_fit(
    values: &[f64],
    bins: usize,
    params: GgParams,
) -> Vec<(f64, f64, f64)> {
    assert!(bins >= 1 && !values.is_empty());
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let center = lo + (i as f64 + 0.5) * width;
            let density = c as f64 / (values.len() as f64 * width);
            (center, density, gg_pdf(center, params.gamma, params.beta))
        })
        .collect()
}
