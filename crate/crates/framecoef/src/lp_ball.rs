//! Exact sampling on `l_p` spheres and balls, the corresponding densities,
//! and the radial ball projection used by the samplers' proposal moves.
//!
//! Sphere sampling normalizes a vector of i.i.d. generalized-Gaussian
//! variates; keeping the first `L` coordinates of a sphere sample in
//! dimension `L' = L + p` yields the uniform distribution on the unit ball
//! when `p` is a positive integer. For non-integer finite `p` the same
//! construction with `L' = L + ceil(p)` is used: the draw is then not
//! uniform, but its density is known in closed form, so Metropolis-Hastings
//! ratios remain exact.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::sample_gg;

/// Norm order `p` in `[1, inf]` (finite orders below 1 are accepted by the
/// sampling routines for completeness, but not as constraint norms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpNorm {
    Finite(f64),
    Infinity,
}

impl LpNorm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match *self {
            LpNorm::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            LpNorm::Finite(p) if p == 1.0 => v.iter().map(|x| x.abs()).sum(),
            LpNorm::Finite(p) if p == 2.0 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            LpNorm::Finite(p) => v
                .iter()
                .map(|x| x.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }

    pub fn is_integer(&self) -> bool {
        match *self {
            LpNorm::Infinity => false,
            LpNorm::Finite(p) => p.fract() == 0.0,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") || t == "∞" {
            return Ok(LpNorm::Infinity);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("invalid norm order {t:?}")))?;
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "constraint norm order must satisfy p >= 1, got {p}"
            )));
        }
        Ok(LpNorm::Finite(p))
    }
}

impl std::fmt::Display for LpNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpNorm::Finite(p) => write!(f, "{p}"),
            LpNorm::Infinity => write!(f, "inf"),
        }
    }
}

/// A ball `{v : N(v - center) <= radius}` in the `l_p` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstraint {
    pub p: LpNorm,
    pub radius: f64,
    pub center: Vec<f64>,
}

impl BallConstraint {
    pub fn new(p: LpNorm, radius: f64, center: Vec<f64>) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be nonnegative, got {radius}"
            )));
        }
        Ok(Self { p, radius, center })
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        debug_assert_eq!(v.len(), self.center.len());
        let diff: Vec<f64> = v.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.p.norm(&diff) <= self.radius
    }
}

/// Draws a point uniformly distributed on the surface of the unit `l_p`
/// sphere in dimension `dim`: normalize i.i.d. GG(p^{1/p}, p) components.
pub fn sample_lp_sphere(dim: usize, p: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("sphere dimension must be >= 1".into()));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sphere sampling requires finite p > 0, got {p}"
        )));
    }
    let mut a: Vec<f64> = (0..dim).map(|_| sample_gg(p, p, rng)).collect();
    let norm = LpNorm::Finite(p).norm(&a);
    // A zero norm has probability zero; guard against pathological rounding.
    if norm == 0.0 {
        a[0] = 1.0;
        return Ok(a);
    }
    for v in &mut a {
        *v /= norm;
    }
    Ok(a)
}

/// Extended dimension `L'` used for ball sampling: `L + p` for integer `p`
/// (exact uniformity), `L + ceil(p)` otherwise.
fn extended_dim(dim: usize, p: f64) -> usize {
    dim + p.ceil() as usize
}

/// Draws a point of the `l_p` ball of the given radius in dimension `dim`.
///
/// For `p = inf` the coordinates are i.i.d. uniform on `[-radius, radius]`.
/// For positive integer `p` the draw is exactly uniform on the ball. For
/// non-integer `p` the draw follows the closed-form density returned by
/// [`ball_density`].
pub fn sample_lp_ball(
    dim: usize,
    p: LpNorm,
    radius: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("ball dimension must be >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    match p {
        LpNorm::Infinity => Ok((0..dim).map(|_| rng.random_range(-radius..=radius)).collect()),
        LpNorm::Finite(pf) => {
            if !(pf > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ball norm order must be positive, got {pf}"
                )));
            }
            let sphere = sample_lp_sphere(extended_dim(dim, pf), pf, rng)?;
            Ok(sphere[..dim].iter().map(|v| v * radius).collect())
        }
    }
}

/// Log-density of [`sample_lp_ball`] at `v` (natural log; `-inf` outside the
/// ball). Stays finite for dimensions where the linear-scale density under-
/// or overflows.
pub fn log_ball_density(v: &[f64], p: LpNorm, radius: f64) -> f64 {
    let dim = v.len();
    match p {
        LpNorm::Infinity => {
            if v.iter().all(|x| x.abs() <= radius) {
                -(dim as f64) * (2.0 * radius).ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        LpNorm::Finite(pf) => {
            let lp = extended_dim(dim, pf) as f64;
            let l = dim as f64;
            let s: f64 = v.iter().map(|x| (x.abs() / radius).powf(pf)).sum();
            if s >= 1.0 {
                return f64::NEG_INFINITY;
            }
            let log_norm = l * pf.ln() + ln_gamma(lp / pf)
                - l * (2.0f64).ln()
                - l * ln_gamma(1.0 / pf)
                - ln_gamma((lp - l) / pf);
            let exponent = (lp - l) / pf - 1.0;
            let log_shape = if exponent == 0.0 {
                0.0
            } else {
                exponent * (1.0 - s).ln()
            };
            log_norm + log_shape - l * radius.ln()
        }
    }
}

/// Density of [`sample_lp_ball`] at `v`; zero outside the ball.
pub fn ball_density(v: &[f64], p: LpNorm, radius: f64) -> f64 {
    log_ball_density(v, p, radius).exp()
}

/// Radial projection onto the `l_p` ball of radius `r` centered at the
/// origin: `a` unchanged if `N(a) <= r`, else `a * r / N(a)`.
///
/// Radial scaling is used for every norm order, including `p = inf`, where
/// it differs from the Euclidean nearest-point projection.
pub fn project_to_ball(a: &[f64], p: LpNorm, r: f64) -> Vec<f64> {
    let n = p.norm(a);
    if n <= r {
        return a.to_vec();
    }
    let scale = r / n;
    a.iter().map(|x| x * scale).collect()
}
