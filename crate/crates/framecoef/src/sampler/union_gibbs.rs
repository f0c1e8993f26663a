//! Hybrid Gibbs sampler for frames that are unions of `M` orthonormal bases
//! under the Euclidean constraint norm, plus the naive rejection sampler used
//! as a small-scale oracle.
//!
//! Writing `x = [x_1; ...; x_M]`, the constraint `||y - F* x|| <= delta` is
//! equivalent, for each block, to `||x_n - c_n|| <= delta` with
//! `c_n = F_n (y - sum_{m != n} F*_m x_m)`. Each block is refreshed with a
//! Metropolis-Hastings move proposed uniformly on a radius-`eta` ball whose
//! center is pulled back into the radius-`delta - eta` ball around `c_n`, so
//! every candidate keeps the chain inside the constraint set by construction.

use rand::Rng;

use crate::error::{Error, Result};
use crate::frame::{FrameKind, FrameOperator};
use crate::lp_ball::{log_ball_density, project_to_ball, sample_lp_ball, LpNorm};
use crate::model::{
    group_energy, in_constraint, sample_gg, update_hyperparams_cached, HyperParams, Observation,
};
use crate::sampler::{
    auto_eta, default_theta, IterationOutcome, SamplerSettings, CONSTRAINT_SLACK,
};
use crate::trace::AcceptStats;

const L2: LpNorm = LpNorm::Finite(2.0);
/// Interval (in sweeps) at which the cached synthesis sum is recomputed from
/// scratch to cancel floating-point drift.
const RESYNC_INTERVAL: u64 = 512;

/// Center of the block-`n` constraint ball:
/// `c_n = F_n (y - sum_{m != n} F*_m x_m)`.
pub fn block_center(
    frame: &FrameOperator,
    y: &[f64],
    coeffs: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    let FrameKind::UnionOfBases(_) = frame.kind() else {
        return Err(Error::NotUnionFrame);
    };
    let l = frame.signal_len();
    let mut residual = y.to_vec();
    for m in 0..frame.num_blocks() {
        if m == n {
            continue;
        }
        let part = frame.synthesize_block(m, &coeffs[m * l..(m + 1) * l])?;
        for (r, p) in residual.iter_mut().zip(&part) {
            *r -= p;
        }
    }
    frame.analyze_block(n, &residual)
}

fn propose_block_parts(
    x_prev: &[f64],
    center: &[f64],
    delta: f64,
    eta: f64,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let shifted: Vec<f64> = x_prev.iter().zip(center).map(|(x, c)| x - c).collect();
    let mut anchor = project_to_ball(&shifted, L2, delta - eta);
    for (a, c) in anchor.iter_mut().zip(center) {
        *a += c;
    }
    let jump = sample_lp_ball(x_prev.len(), L2, eta, rng).expect("valid ball parameters");
    let candidate: Vec<f64> = anchor.iter().zip(&jump).map(|(a, w)| a + w).collect();
    (candidate, jump)
}

/// Draws a block candidate on the ball `B(anchor, eta)` with
/// `anchor = P(x_prev - c_n) + c_n`; the candidate satisfies
/// `||cand - c_n|| <= delta` by the nesting of the two balls.
pub fn propose_block(
    x_prev: &[f64],
    center: &[f64],
    delta: f64,
    eta: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    propose_block_parts(x_prev, center, delta, eta, rng).0
}

/// Draws the coefficient conditional exactly by rejection: propose from the
/// unconstrained grouped GG prior and accept once the synthesis lands inside
/// `C_delta`. Returns the draw and the number of attempts used.
///
/// Practical only when `delta` is loose or the problem is tiny; used as the
/// equilibrium oracle for the Gibbs sampler.
pub fn naive_rejection_sample(
    theta: &HyperParams,
    obs: &Observation,
    frame: &FrameOperator,
    rng: &mut impl Rng,
    max_tries: u64,
) -> Result<(Vec<f64>, u64)> {
    if !(obs.delta() > 0.0) {
        return Err(Error::InvalidParameter(
            "rejection sampling needs delta > 0 (the constraint has measure zero otherwise)"
                .into(),
        ));
    }
    let layout = frame.layout();
    let mut x = vec![0.0; frame.coeff_len()];
    for attempt in 1..=max_tries {
        for (span, p) in layout.spans().iter().zip(&theta.groups) {
            for v in &mut x[span.range()] {
                *v = sample_gg(p.gamma, p.beta, rng);
            }
        }
        if in_constraint(&x, obs, frame) {
            return Ok((x, attempt));
        }
    }
    Err(Error::RejectionExhausted(max_tries))
}

/// Chain state of the hybrid Gibbs sampler.
pub struct UnionGibbsSampler<'a> {
    frame: &'a FrameOperator,
    obs: &'a Observation,
    eta: f64,
    update_hyperparams: bool,
    x: Vec<f64>,
    /// Cached synthesis `F* x`, updated incrementally per accepted block.
    synth: Vec<f64>,
    /// Cached residual `y - F* x`.
    residual: Vec<f64>,
    /// Per-group energies at the current `beta`.
    energies: Vec<f64>,
    theta: HyperParams,
    /// Group indices owned by each block.
    block_groups: Vec<Vec<usize>>,
    accept: AcceptStats,
    iteration: u64,
}

impl<'a> UnionGibbsSampler<'a> {
    pub fn new(
        frame: &'a FrameOperator,
        obs: &'a Observation,
        settings: &SamplerSettings,
    ) -> Result<Self> {
        let FrameKind::UnionOfBases(_) = frame.kind() else {
            return Err(Error::NotUnionFrame);
        };
        if obs.norm() != L2 {
            return Err(Error::Config(
                "the union Gibbs sampler requires the Euclidean constraint norm (p = 2)".into(),
            ));
        }
        let delta = obs.delta();
        if !(delta > 0.0) {
            return Err(Error::Config("the Gibbs sampler requires delta > 0".into()));
        }
        let l = frame.signal_len();
        let eta = settings.eta.unwrap_or_else(|| auto_eta(delta, l));
        if !(eta > 0.0 && eta < delta) {
            return Err(Error::Config(format!(
                "eta must satisfy 0 < eta < delta, got eta={eta}, delta={delta}"
            )));
        }

        // x0 = F y / mu lies in C_delta with zero residual for tight frames.
        let mu = frame.mu().expect("union frames are tight");
        let mut x = frame.analyze(obs.signal())?;
        for v in &mut x {
            *v /= mu;
        }
        let synth = frame.synthesize(&x)?;
        let residual: Vec<f64> = obs.signal().iter().zip(&synth).map(|(y, s)| y - s).collect();

        let theta = match &settings.initial_theta {
            Some(t) => {
                if t.len() != frame.layout().group_count() {
                    return Err(Error::Config(format!(
                        "initial theta has {} groups, frame has {}",
                        t.len(),
                        frame.layout().group_count()
                    )));
                }
                t.clone()
            }
            None => default_theta(&x, frame),
        };
        let energies: Vec<f64> = frame
            .layout()
            .spans()
            .iter()
            .zip(&theta.groups)
            .map(|(span, p)| group_energy(&x[span.range()], p.beta))
            .collect();

        let blocks = frame.num_blocks();
        let mut block_groups = vec![Vec::new(); blocks];
        for (g, span) in frame.layout().spans().iter().enumerate() {
            block_groups[span.start / l].push(g);
        }

        Ok(Self {
            frame,
            obs,
            eta,
            update_hyperparams: settings.update_hyperparams,
            x,
            synth,
            residual,
            energies,
            theta,
            block_groups,
            accept: AcceptStats::new(blocks, frame.layout().group_count()),
            iteration: 0,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.x
    }

    pub fn theta(&self) -> &HyperParams {
        &self.theta
    }

    pub fn accept_stats(&self) -> &AcceptStats {
        &self.accept
    }

    /// `||y - F* x||_2` from the cached residual.
    pub fn residual_norm(&self) -> f64 {
        L2.norm(&self.residual)
    }

    /// One full sweep: an MH refresh of every block followed by the
    /// hyperparameter updates. The constraint holds at exit (hard assert).
    pub fn sweep(&mut self, rng: &mut impl Rng) -> Result<IterationOutcome> {
        let l = self.frame.signal_len();
        let delta = self.obs.delta();
        let mut coeff_accepts = 0u32;

        for n in 0..self.frame.num_blocks() {
            self.accept.block_proposals[n] += 1;
            self.accept.coeff_proposals += 1;

            // c_n = F_n(y - sum_{m != n} F*_m x_m) = F_n(residual) + x_n,
            // using F_n F*_n = I to reuse the cached full residual.
            let mut center = self.frame.analyze_block(n, &self.residual)?;
            let block = n * l..(n + 1) * l;
            for (c, xv) in center.iter_mut().zip(&self.x[block.clone()]) {
                *c += xv;
            }

            let (candidate, jump) =
                propose_block_parts(&self.x[block.clone()], &center, delta, self.eta, rng);

            // Prior ratio over this block's groups.
            let mut log_r = 0.0;
            let mut cand_energies = Vec::with_capacity(self.block_groups[n].len());
            for &g in &self.block_groups[n] {
                let span = self.frame.layout().span(g);
                let rel = span.start - n * l;
                let p = &self.theta.groups[g];
                let e_new = group_energy(&candidate[rel..rel + span.len], p.beta);
                log_r += (self.energies[g] - e_new) / p.gamma;
                cand_energies.push((g, e_new));
            }

            // Proposal correction with the reverse move re-anchored at the
            // candidate's pullback; for the uniform ball law the two terms
            // cancel whenever the reverse jump stays inside its support.
            let forward = log_ball_density(&jump, L2, self.eta);
            let shifted: Vec<f64> = candidate.iter().zip(&center).map(|(x, c)| x - c).collect();
            let mut rev_anchor = project_to_ball(&shifted, L2, delta - self.eta);
            for (a, c) in rev_anchor.iter_mut().zip(&center) {
                *a += c;
            }
            let rev_jump: Vec<f64> = self.x[block.clone()]
                .iter()
                .zip(&rev_anchor)
                .map(|(x, a)| x - a)
                .collect();
            let reverse = log_ball_density(&rev_jump, L2, self.eta);
            log_r += reverse - forward;
            debug_assert!(!log_r.is_nan());

            if log_r >= 0.0 || rng.random::<f64>().ln() < log_r {
                let step: Vec<f64> = candidate
                    .iter()
                    .zip(&self.x[block.clone()])
                    .map(|(c, x)| c - x)
                    .collect();
                let delta_synth = self.frame.synthesize_block(n, &step)?;
                for ((s, r), d) in self
                    .synth
                    .iter_mut()
                    .zip(self.residual.iter_mut())
                    .zip(&delta_synth)
                {
                    *s += d;
                    *r -= d;
                }
                self.x[block].copy_from_slice(&candidate);
                for (g, e) in cand_energies {
                    self.energies[g] = e;
                }
                self.accept.block_accepts[n] += 1;
                self.accept.coeff_accepts += 1;
                coeff_accepts += 1;
            }
        }

        self.iteration += 1;
        if self.iteration % RESYNC_INTERVAL == 0 {
            self.resync();
        }

        let resid = self.residual_norm();
        assert!(
            resid <= delta + CONSTRAINT_SLACK,
            "constraint violated at iteration {}: residual {resid} > delta {delta}",
            self.iteration
        );

        let beta_accepted = if self.update_hyperparams {
            let outcome = update_hyperparams_cached(
                &self.x,
                self.frame.layout(),
                &mut self.theta,
                &mut self.energies,
                rng,
            );
            self.accept.gamma_kept += u64::from(outcome.gamma_kept);
            for (g, &acc) in outcome.beta_accepted.iter().enumerate() {
                self.accept.beta_proposals[g] += 1;
                self.accept.beta_accepts[g] += u64::from(acc);
            }
            outcome.beta_accepted
        } else {
            Vec::new()
        };

        Ok(IterationOutcome {
            beta_accepted,
            coeff_accepts,
        })
    }

    fn resync(&mut self) {
        self.frame.synthesize_into(&self.x, &mut self.synth);
        for ((r, y), s) in self
            .residual
            .iter_mut()
            .zip(self.obs.signal())
            .zip(&self.synth)
        {
            *r = y - s;
        }
    }
}
