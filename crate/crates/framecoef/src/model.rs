//! The hierarchical model: grouped generalized-Gaussian priors over frame
//! coefficients, the bounded-error likelihood, the joint log-posterior, and
//! the two hyperparameter conditional updates shared by both samplers.
//!
//! Per-group parameters use the reparameterized scale `gamma = alpha^beta`,
//! under which the `gamma` conditional is inverse-gamma (sampled exactly)
//! while `beta` is updated with a truncated-Gaussian random-walk
//! Metropolis-Hastings step. All density evaluations run in the log domain.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::frame::{FrameOperator, GroupLayout};
use crate::lp_ball::{BallConstraint, LpNorm};

/// Shape parameters `beta` live on `(0, 3]`; values below this clamp make
/// `Gamma(1/beta)` overflow, so proposals under it are auto-rejected.
pub const BETA_MIN: f64 = 0.05;
/// Upper end of the hyperprior support for `beta`.
pub const BETA_MAX: f64 = 3.0;
/// Random-walk standard deviation of the truncated-Gaussian proposal for
/// `beta`.
pub const SIGMA_BETA: f64 = 0.05;

/// Scale/shape pair of one coefficient group.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GgParams {
    /// Reparameterized scale `gamma = alpha^beta`, positive.
    pub gamma: f64,
    /// Shape, in `(0, 3]`.
    pub beta: f64,
}

impl GgParams {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        if !(beta > 0.0 && beta <= BETA_MAX) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, {BETA_MAX}], got {beta}"
            )));
        }
        Ok(Self { gamma, beta })
    }

    /// The natural scale `alpha = gamma^(1/beta)`.
    pub fn alpha(&self) -> f64 {
        self.gamma.powf(1.0 / self.beta)
    }
}

/// Per-group hyperparameters for all `G` groups.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HyperParams {
    pub groups: Vec<GgParams>,
}

impl HyperParams {
    pub fn new(groups: Vec<GgParams>) -> Self {
        Self { groups }
    }

    pub fn constant(group_count: usize, gamma: f64, beta: f64) -> Result<Self> {
        let p = GgParams::new(gamma, beta)?;
        Ok(Self {
            groups: vec![p; group_count],
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.groups
            .iter()
            .all(|p| p.gamma > 0.0 && p.gamma.is_finite() && p.beta > 0.0 && p.beta <= BETA_MAX)
    }
}

/// An observed signal together with its error ball `C_delta`.
#[derive(Debug, Clone)]
pub struct Observation {
    y: Vec<f64>,
    constraint: BallConstraint,
}

impl Observation {
    pub fn new(y: Vec<f64>, p: LpNorm, delta: f64) -> Result<Self> {
        let constraint = BallConstraint::new(p, delta, y.clone())?;
        Ok(Self { y, constraint })
    }

    pub fn signal(&self) -> &[f64] {
        &self.y
    }

    pub fn delta(&self) -> f64 {
        self.constraint.radius
    }

    pub fn norm(&self) -> LpNorm {
        self.constraint.p
    }

    pub fn constraint(&self) -> &BallConstraint {
        &self.constraint
    }

    /// `N(y - F* x)` under the observation norm.
    pub fn residual_norm(&self, frame: &FrameOperator, coeffs: &[f64]) -> f64 {
        let mut synth = vec![0.0; self.y.len()];
        frame.synthesize_into(coeffs, &mut synth);
        for (s, y) in synth.iter_mut().zip(&self.y) {
            *s = y - *s;
        }
        self.constraint.p.norm(&synth)
    }
}

/// Membership test for the constraint set: `N(y - F* x) <= delta`.
pub fn in_constraint(coeffs: &[f64], obs: &Observation, frame: &FrameOperator) -> bool {
    obs.residual_norm(frame, coeffs) <= obs.delta()
}

/// Group energy `sum_{k in group} |x_k|^beta`.
pub fn group_energy(values: &[f64], beta: f64) -> f64 {
    if beta == 1.0 {
        values.iter().map(|x| x.abs()).sum()
    } else if beta == 2.0 {
        values.iter().map(|x| x * x).sum()
    } else {
        values.iter().map(|x| x.abs().powf(beta)).sum()
    }
}

/// Per-coefficient log-normalizer of the GG density:
/// `ln(beta) - ln 2 - (1/beta) ln(gamma) - ln Gamma(1/beta)`.
pub fn gg_log_normalizer(gamma: f64, beta: f64) -> f64 {
    beta.ln() - std::f64::consts::LN_2 - gamma.ln() / beta - ln_gamma(1.0 / beta)
}

/// GG density at `x` (linear scale), used for histogram overlays.
pub fn gg_pdf(x: f64, gamma: f64, beta: f64) -> f64 {
    (gg_log_normalizer(gamma, beta) - x.abs().powf(beta) / gamma).exp()
}

/// Log of the grouped GG prior of the full coefficient vector.
pub fn log_prior(coeffs: &[f64], layout: &GroupLayout, theta: &HyperParams) -> f64 {
    debug_assert_eq!(layout.group_count(), theta.len());
    let mut total = 0.0;
    for (span, p) in layout.spans().iter().zip(&theta.groups) {
        let e = group_energy(&coeffs[span.range()], p.beta);
        total += span.len as f64 * gg_log_normalizer(p.gamma, p.beta) - e / p.gamma;
    }
    total
}

/// Log-posterior of `(x, theta)` given the observation; `-inf` outside the
/// constraint set or outside the hyperprior support.
pub fn log_posterior(
    coeffs: &[f64],
    theta: &HyperParams,
    obs: &Observation,
    frame: &FrameOperator,
) -> f64 {
    if !theta.is_valid() {
        return f64::NEG_INFINITY;
    }
    if !in_constraint(coeffs, obs, frame) {
        return f64::NEG_INFINITY;
    }
    let jeffreys: f64 = theta.groups.iter().map(|p| -p.gamma.ln()).sum();
    log_prior(coeffs, frame.layout(), theta) + jeffreys
}

/// Draws from the generalized Gaussian with density proportional to
/// `exp(-|x|^beta / gamma)`: `|X| = (gamma W)^(1/beta)` with
/// `W ~ Gamma(1/beta, 1)` and a random sign.
pub fn sample_gg(gamma: f64, beta: f64, rng: &mut impl Rng) -> f64 {
    let w = Gamma::new(1.0 / beta, 1.0)
        .expect("beta > 0 gives a valid gamma shape")
        .sample(rng);
    let magnitude = (gamma * w).powf(1.0 / beta);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Exact draw from the inverse-gamma conditional of `gamma` given the group
/// energy `b = sum |x_k|^beta`: `IG(n/beta, b)`.
///
/// Returns `None` when `b = 0` (an all-zero group), in which case the caller
/// keeps the previous value.
pub fn sample_gamma_conditional_from_energy(
    group_size: usize,
    energy: f64,
    beta: f64,
    rng: &mut impl Rng,
) -> Option<f64> {
    if energy <= 0.0 {
        return None;
    }
    let shape = group_size as f64 / beta;
    let g = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    Some(energy / g)
}

/// As [`sample_gamma_conditional_from_energy`], computing the energy from
/// the group values.
pub fn sample_gamma_conditional(
    group_values: &[f64],
    beta: f64,
    rng: &mut impl Rng,
) -> Option<f64> {
    sample_gamma_conditional_from_energy(
        group_values.len(),
        group_energy(group_values, beta),
        beta,
        rng,
    )
}

/// Log of the `beta` full conditional, up to an additive constant:
/// `n ln(beta) - (n/beta) ln(gamma) - n ln Gamma(1/beta) - E(beta)/gamma`.
fn log_beta_conditional(group_values: &[f64], gamma: f64, beta: f64) -> f64 {
    let n = group_values.len() as f64;
    let e = group_energy(group_values, beta);
    n * beta.ln() - n * gamma.ln() / beta - n * ln_gamma(1.0 / beta) - e / gamma
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Mass of the truncated-Gaussian proposal support `[0, BETA_MAX]` for a
/// proposal centered at `mean`.
fn truncation_mass(mean: f64) -> f64 {
    normal_cdf((BETA_MAX - mean) / SIGMA_BETA) - normal_cdf(-mean / SIGMA_BETA)
}

/// Outcome of one `beta` Metropolis-Hastings step.
#[derive(Debug, Clone, Copy)]
pub struct BetaStep {
    pub beta: f64,
    pub accepted: bool,
    /// Group energy at the returned `beta`, for caller-side caching.
    pub energy: f64,
}

/// One Metropolis-Hastings step on a group's shape parameter.
///
/// The proposal is a Gaussian with standard deviation [`SIGMA_BETA`] centered
/// at the previous value and truncated to `[0, BETA_MAX]`; the acceptance
/// ratio carries the asymmetric truncation correction. Candidates below
/// [`BETA_MIN`] are rejected outright.
pub fn mh_step_beta(
    group_values: &[f64],
    gamma: f64,
    beta_prev: f64,
    rng: &mut impl Rng,
) -> BetaStep {
    debug_assert!(beta_prev > 0.0 && beta_prev <= BETA_MAX);
    let proposal = Normal::new(beta_prev, SIGMA_BETA).expect("positive sigma");
    let candidate = loop {
        let c = proposal.sample(rng);
        if (0.0..=BETA_MAX).contains(&c) {
            break c;
        }
    };
    if candidate < BETA_MIN {
        return BetaStep {
            beta: beta_prev,
            accepted: false,
            energy: group_energy(group_values, beta_prev),
        };
    }

    let log_target_diff = log_beta_conditional(group_values, gamma, candidate)
        - log_beta_conditional(group_values, gamma, beta_prev);
    // Truncated-Gaussian correction: the Gaussian kernels are symmetric, so
    // only the truncation masses survive in q(prev|cand)/q(cand|prev).
    let log_q_ratio = truncation_mass(beta_prev).ln() - truncation_mass(candidate).ln();
    let log_r = log_target_diff + log_q_ratio;

    if log_r >= 0.0 || rng.random::<f64>().ln() < log_r {
        BetaStep {
            beta: candidate,
            accepted: true,
            energy: group_energy(group_values, candidate),
        }
    } else {
        BetaStep {
            beta: beta_prev,
            accepted: false,
            energy: group_energy(group_values, beta_prev),
        }
    }
}

/// Book-keeping from one full hyperparameter sweep.
#[derive(Debug, Clone)]
pub struct HyperUpdateOutcome {
    /// Per-group acceptance flag of the `beta` move.
    pub beta_accepted: Vec<bool>,
    /// Number of groups whose `gamma` draw was skipped because the group
    /// energy was zero.
    pub gamma_kept: u32,
}

/// One hyperparameter sweep: for every group, an exact inverse-gamma draw of
/// `gamma` followed by a Metropolis-Hastings step on `beta`. Used verbatim by
/// both coefficient samplers.
pub fn update_hyperparams(
    coeffs: &[f64],
    layout: &GroupLayout,
    theta: &mut HyperParams,
    rng: &mut impl Rng,
) -> HyperUpdateOutcome {
    let mut energies: Vec<f64> = layout
        .spans()
        .iter()
        .zip(&theta.groups)
        .map(|(span, p)| group_energy(&coeffs[span.range()], p.beta))
        .collect();
    update_hyperparams_cached(coeffs, layout, theta, &mut energies, rng)
}

/// As [`update_hyperparams`], with the caller supplying current group
/// energies `E_g = sum |x_k|^{beta_g}`. Energies are refreshed in place so
/// they stay consistent with the updated `beta` values.
pub fn update_hyperparams_cached(
    coeffs: &[f64],
    layout: &GroupLayout,
    theta: &mut HyperParams,
    energies: &mut [f64],
    rng: &mut impl Rng,
) -> HyperUpdateOutcome {
    debug_assert_eq!(layout.group_count(), theta.len());
    debug_assert_eq!(energies.len(), theta.len());
    let mut beta_accepted = Vec::with_capacity(theta.len());
    let mut gamma_kept = 0u32;
    for ((span, p), energy) in layout
        .spans()
        .iter()
        .zip(theta.groups.iter_mut())
        .zip(energies.iter_mut())
    {
        match sample_gamma_conditional_from_energy(span.len, *energy, p.beta, rng) {
            Some(g) => p.gamma = g,
            None => gamma_kept += 1,
        }
        let step = mh_step_beta(&coeffs[span.range()], p.gamma, p.beta, rng);
        beta_accepted.push(step.accepted);
        p.beta = step.beta;
        *energy = step.energy;
    }
    HyperUpdateOutcome {
        beta_accepted,
        gamma_kept,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{FrameOperator, Shape};
    use crate::inference::ks_statistic;
    use crate::wavelet::{WaveletFilter, WaveletSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn single_group_layout(n: usize) -> GroupLayout {
        GroupLayout::from_sizes([("g", n)]).unwrap()
    }

    #[test]
    fn log_prior_closed_form_values() {
        // Laplace at zero: beta = 1, gamma = 1 -> log(1/2).
        let layout = single_group_layout(1);
        let theta = HyperParams::constant(layout.group_count(), 1.0, 1.0).unwrap();
        let lp = log_prior(&[0.0], &layout, &theta);
        assert!((lp - (-std::f64::consts::LN_2)).abs() < 1e-12);

        // Gaussian-shape at zero: beta = 2, gamma = 1 -> log(1/sqrt(pi)).
        let theta2 = HyperParams::constant(layout.group_count(), 1.0, 2.0).unwrap();
        let lp2 = log_prior(&[0.0], &layout, &theta2);
        assert!((lp2 - (-0.5723649429247001)).abs() < 1e-12);
    }

    #[test]
    fn unit_energy_coefficient_costs_exactly_one() {
        // Moving a slot from 0 to gamma^(1/beta) changes the log prior by -1.
        let layout = single_group_layout(2);
        for &(gamma, beta) in &[(1.0, 1.0), (2.5, 1.5), (0.3, 2.0)] {
            let theta = HyperParams::constant(layout.group_count(), gamma, beta).unwrap();
            let base = log_prior(&[0.0, 0.0], &layout, &theta);
            let bumped = log_prior(&[0.0, gamma.powf(1.0 / beta)], &layout, &theta);
            assert!((bumped - base + 1.0).abs() < 1e-12, "gamma={gamma} beta={beta}");
        }
    }

    #[test]
    fn log_posterior_constraint_and_jeffreys_terms() {
        let frame = FrameOperator::orthonormal_basis(
            WaveletSpec::new(WaveletFilter::Haar, 1).unwrap(),
            Shape::new(1, 4),
        )
        .unwrap();
        let y = vec![1.0, 0.0, -1.0, 0.5];
        let obs = Observation::new(y.clone(), LpNorm::Finite(2.0), 0.1).unwrap();
        let x_ok = frame.analyze(&y).unwrap();
        let theta = HyperParams::constant(frame.layout().group_count(), 1.0, 1.0).unwrap();
        assert!(log_posterior(&x_ok, &theta, &obs, &frame).is_finite());

        // Any violation of the ball gives -inf.
        let mut x_bad = x_ok.clone();
        x_bad[0] += 10.0;
        assert_eq!(
            log_posterior(&x_bad, &theta, &obs, &frame),
            f64::NEG_INFINITY
        );

        // Doubling every gamma with x = 0 shifts the log posterior by
        // -(n/beta + 1) ln 2 per group.
        let zero = vec![0.0; frame.coeff_len()];
        let obs_loose = Observation::new(y, LpNorm::Finite(2.0), 100.0).unwrap();
        let beta = 1.5;
        let theta1 = HyperParams::constant(frame.layout().group_count(), 1.0, beta).unwrap();
        let theta2 = HyperParams::constant(frame.layout().group_count(), 2.0, beta).unwrap();
        let l1 = log_posterior(&zero, &theta1, &obs_loose, &frame);
        let l2 = log_posterior(&zero, &theta2, &obs_loose, &frame);
        let expected: f64 = frame
            .layout()
            .spans()
            .iter()
            .map(|s| -(s.len as f64 / beta + 1.0) * std::f64::consts::LN_2)
            .sum();
        assert!((l2 - l1 - expected).abs() < 1e-10);
    }

    #[test]
    fn null_space_moves_leave_the_likelihood_flat() {
        // Inside the ball, posterior differences reduce to prior differences:
        // perturbing x in Null(F*) must not change the residual norm.
        let frame = FrameOperator::union_of_bases(
            vec![
                WaveletSpec::new(WaveletFilter::Haar, 1).unwrap(),
                WaveletSpec::new(WaveletFilter::Daubechies4Shifted, 1).unwrap(),
            ],
            Shape::new(4, 4),
        )
        .unwrap();
        let mut r = rng(31);
        let y: Vec<f64> = (0..16).map(|_| r.random_range(-1.0..1.0)).collect();
        let obs = Observation::new(y.clone(), LpNorm::Finite(2.0), 0.0).unwrap();
        let x = frame
            .analyze(&y)
            .unwrap()
            .iter()
            .map(|v| v / 2.0)
            .collect::<Vec<_>>();
        assert!(in_constraint(&x, &obs, &frame));

        let noise: Vec<f64> = (0..frame.coeff_len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let null_vec = frame.project_nullspace(&noise).unwrap();
        let x_shift: Vec<f64> = x.iter().zip(&null_vec).map(|(a, b)| a + b).collect();
        let before = obs.residual_norm(&frame, &x);
        let after = obs.residual_norm(&frame, &x_shift);
        assert!((before - after).abs() < 1e-10);
        assert!(in_constraint(&x_shift, &obs, &frame));
    }

    #[test]
    fn linf_constraint_rejects_out_of_band_synthesis() {
        let frame = FrameOperator::orthonormal_basis(
            WaveletSpec::new(WaveletFilter::Haar, 1).unwrap(),
            Shape::new(1, 4),
        )
        .unwrap();
        let delta = 0.5;
        let obs = Observation::new(vec![0.0; 4], LpNorm::Infinity, delta).unwrap();
        let x = frame.analyze(&[delta + 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(!in_constraint(&x, &obs, &frame));
    }

    #[test]
    fn inverse_gamma_conditional_moments() {
        // Group values [1, -1, 2] with beta = 1 give IG(3, 4): mean b/(a-1) = 2.
        let mut r = rng(32);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let g = sample_gamma_conditional(&[1.0, -1.0, 2.0], 1.0, &mut r).unwrap();
            assert!(g > 0.0);
            acc += g;
        }
        assert!((acc / n as f64 - 2.0).abs() < 0.05);

        // IG(4, 6) via energies directly: mean 6/3 = 2.
        let mut acc2 = 0.0;
        for _ in 0..n {
            acc2 += sample_gamma_conditional_from_energy(4, 6.0, 1.0, &mut r).unwrap();
        }
        assert!((acc2 / n as f64 - 2.0).abs() < 0.05);

        // Zero-energy group: the draw is declined.
        assert!(sample_gamma_conditional(&[0.0, 0.0], 1.5, &mut r).is_none());
    }

    #[test]
    fn gg_sampler_matches_known_moments() {
        let mut r = rng(33);
        let n = 100_000;

        // beta = 2, gamma = 2 is the standard normal.
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = sample_gg(2.0, 2.0, &mut r);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);

        // E|X|^beta = gamma / beta: for beta = 1, gamma = 3, E|X| = 3.
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_gg(3.0, 1.0, &mut r).abs();
        }
        assert!((acc / n as f64 - 3.0).abs() < 0.05);
    }

    #[test]
    fn beta_step_stays_in_support_and_tracks_truth() {
        let mut r = rng(34);
        // Coefficients from GG(gamma = 1, beta = 1.5).
        let n_g = 4096;
        let values: Vec<f64> = (0..n_g).map(|_| sample_gg(1.0, 1.5, &mut r)).collect();
        let mut beta = 0.8;
        let mut acc = 0.0;
        let steps = 20_000;
        for _ in 0..steps {
            let step = mh_step_beta(&values, 1.0, beta, &mut r);
            beta = step.beta;
            assert!(beta > 0.0 && beta <= BETA_MAX);
            acc += beta;
        }
        let avg = acc / steps as f64;
        assert!((1.4..=1.6).contains(&avg), "posterior mean of beta: {avg}");
    }

    #[test]
    fn beta_chain_matches_grid_normalized_conditional() {
        // Invariance check: the empirical CDF of a long beta chain stays
        // within 0.02 of the grid-integrated conditional CDF.
        let mut r = rng(35);
        let n_g = 64;
        let values: Vec<f64> = (0..n_g).map(|_| sample_gg(1.0, 1.2, &mut r)).collect();
        let gamma = 1.0;

        // Grid oracle over [BETA_MIN, BETA_MAX], trapezoid-normalized.
        let grid_n = 3000;
        let step = (BETA_MAX - BETA_MIN) / grid_n as f64;
        let xs: Vec<f64> = (0..=grid_n).map(|i| BETA_MIN + i as f64 * step).collect();
        let log_f: Vec<f64> = xs
            .iter()
            .map(|&b| log_beta_conditional(&values, gamma, b))
            .collect();
        let max_lf = log_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = log_f.iter().map(|&l| (l - max_lf).exp()).collect();
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * step;
        }
        let total = *cdf.last().unwrap();
        for c in &mut cdf {
            *c /= total;
        }
        let grid_cdf = |b: f64| -> f64 {
            if b <= xs[0] {
                return 0.0;
            }
            if b >= *xs.last().unwrap() {
                return 1.0;
            }
            let idx = ((b - BETA_MIN) / step) as usize;
            let frac = (b - xs[idx]) / step;
            cdf[idx] * (1.0 - frac) + cdf[idx + 1] * frac
        };

        // Two dispersed starts pooled.
        let mut samples = Vec::with_capacity(100_000);
        for &start in &[0.3f64, 2.7] {
            let mut beta = start;
            for i in 0..52_000 {
                beta = mh_step_beta(&values, gamma, beta, &mut r).beta;
                if i >= 2_000 {
                    samples.push(beta);
                }
            }
        }
        let d = ks_statistic(&mut samples, grid_cdf);
        assert!(d < 0.02, "KS vs grid CDF: {d}");
    }

    #[test]
    fn log_densities_finite_over_extreme_hyperparameters() {
        let layout = single_group_layout(2);
        let x = [0.7, -1.3];
        for &beta in &[BETA_MIN, 0.1, 0.5, 1.0, 2.0, 3.0] {
            for &gamma in &[1e-8, 1e-3, 1.0, 1e3, 1e8] {
                let theta = HyperParams::constant(layout.group_count(), gamma, beta).unwrap();
                let lp = log_prior(&x, &layout, &theta);
                assert!(lp.is_finite(), "gamma={gamma} beta={beta} -> {lp}");
                assert!(log_beta_conditional(&x, gamma, beta).is_finite());
            }
        }
    }

    #[test]
    fn update_hyperparams_runs_all_groups() {
        let frame = FrameOperator::orthonormal_basis(
            WaveletSpec::new(WaveletFilter::Haar, 2).unwrap(),
            Shape::new(8, 8),
        )
        .unwrap();
        let mut r = rng(36);
        let coeffs: Vec<f64> = (0..frame.coeff_len()).map(|_| sample_gg(1.0, 1.0, &mut r)).collect();
        let mut theta = HyperParams::constant(frame.layout().group_count(), 1.0, 1.0).unwrap();
        let outcome = update_hyperparams(&coeffs, frame.layout(), &mut theta, &mut r);
        assert_eq!(outcome.beta_accepted.len(), frame.layout().group_count());
        assert_eq!(outcome.gamma_kept, 0);
        assert!(theta.is_valid());
    }
}
