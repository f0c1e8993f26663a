//! Run configuration: a plain-text `key = value` file with CLI flag
//! overrides, validated before any computation starts.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{FrameOperator, Shape};
use crate::lp_ball::LpNorm;
use crate::sampler::{SamplerKind, SamplerSettings};
use crate::wavelet::{WaveletFilter, WaveletSpec};

/// Frame family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameChoice {
    /// Union of orthonormal wavelet bases (one per filter).
    Union,
    /// Translation-invariant tight frame (single filter).
    Tiwt,
    /// Single orthonormal basis (single filter).
    Basis,
}

impl FrameChoice {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "union" => Ok(FrameChoice::Union),
            "tiwt" => Ok(FrameChoice::Tiwt),
            "basis" => Ok(FrameChoice::Basis),
            other => Err(Error::Config(format!(
                "unknown frame kind {other:?} (expected union, tiwt or basis)"
            ))),
        }
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub frame: FrameChoice,
    pub filters: Vec<WaveletFilter>,
    pub levels: usize,
    pub rows: usize,
    pub cols: usize,
    pub p: LpNorm,
    /// Error bound of the observation model.
    pub delta: f64,
    /// Constraint radius used by the sampler when it should differ from the
    /// noise bound (denoising); defaults to `delta`.
    pub model_delta: Option<f64>,
    pub sampler: SamplerKind,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub eta: Option<f64>,
    pub sigma_x: Option<f64>,
    pub seed: u64,
    pub chains: usize,
    /// Monte Carlo repetitions of the validation experiment.
    pub runs: usize,
    /// Range the synthetic shape parameters are drawn from (uniformly).
    pub beta_range: (f64, f64),
    /// Range the synthetic scale parameters are drawn from (log-uniformly).
    pub gamma_range: (f64, f64),
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            frame: FrameChoice::Union,
            filters: vec![
                WaveletFilter::Daubechies8,
                WaveletFilter::Daubechies4Shifted,
            ],
            levels: 2,
            rows: 64,
            cols: 64,
            p: LpNorm::Finite(2.0),
            delta: 1e-4,
            model_delta: None,
            sampler: SamplerKind::AlgebraicMh,
            iterations: 20_000,
            burn_in: 10_000,
            thin: 100,
            eta: None,
            sigma_x: None,
            seed: 42,
            chains: 1,
            runs: 5,
            beta_range: (0.5, 2.5),
            gamma_range: (10.0, 200.0),
        }
    }
}

impl RunConfig {
    /// Parses a `key = value` file. Lines starting with `#` are comments.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                ))
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(config)
    }

    /// Applies one `key = value` assignment (shared by file parsing and flag
    /// overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid number {v:?} for {key}")))
        };
        let parse_u64 = |v: &str| -> Result<u64> {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid integer {v:?} for {key}")))
        };
        let parse_opt = |v: &str| -> Result<Option<f64>> {
            if v.eq_ignore_ascii_case("auto") {
                Ok(None)
            } else {
                Ok(Some(v.parse().map_err(|_| {
                    Error::Config(format!("invalid number {v:?} for {key}"))
                })?))
            }
        };
        match key {
            "frame" => self.frame = FrameChoice::parse(value)?,
            "filters" => {
                self.filters = value
                    .split(',')
                    .map(WaveletFilter::parse)
                    .collect::<Result<Vec<_>>>()?;
            }
            "levels" => self.levels = parse_u64(value)? as usize,
            "rows" => self.rows = parse_u64(value)? as usize,
            "cols" => self.cols = parse_u64(value)? as usize,
            "p" => self.p = LpNorm::parse(value)?,
            "delta" => self.delta = parse_f64(value)?,
            "model_delta" => self.model_delta = parse_opt(value)?,
            "sampler" => self.sampler = SamplerKind::parse(value)?,
            "iterations" => self.iterations = parse_u64(value)?,
            "burn_in" => self.burn_in = parse_u64(value)?,
            "thin" => self.thin = parse_u64(value)?,
            "eta" => self.eta = parse_opt(value)?,
            "sigma_x" => self.sigma_x = parse_opt(value)?,
            "seed" => self.seed = parse_u64(value)?,
            "chains" => self.chains = parse_u64(value)? as usize,
            "runs" => self.runs = parse_u64(value)? as usize,
            "beta_min" => self.beta_range.0 = parse_f64(value)?,
            "beta_max" => self.beta_range.1 = parse_f64(value)?,
            "gamma_min" => self.gamma_range.0 = parse_f64(value)?,
            "gamma_max" => self.gamma_range.1 = parse_f64(value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// The constraint radius the sampler actually uses.
    pub fn effective_delta(&self) -> f64 {
        self.model_delta.unwrap_or(self.delta)
    }

    /// Cross-field validation; call after all overrides are applied.
    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty() {
            return Err(Error::Config("at least one filter is required".into()));
        }
        if self.frame != FrameChoice::Union && self.filters.len() != 1 {
            return Err(Error::Config(
                "tiwt and basis frames take exactly one filter".into(),
            ));
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be positive".into()));
        }
        if !(self.effective_delta() > 0.0) {
            return Err(Error::Config(
                "delta must be positive for the samplers".into(),
            ));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta < self.effective_delta()) {
                return Err(Error::Config(format!(
                    "eta ({eta}) must satisfy 0 < eta < delta ({})",
                    self.effective_delta()
                )));
            }
        }
        if let Some(s) = self.sigma_x {
            if !(s > 0.0) {
                return Err(Error::Config("sigma_x must be positive".into()));
            }
        }
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.sampler == SamplerKind::UnionGibbs {
            if self.p != LpNorm::Finite(2.0) {
                return Err(Error::Config(
                    "sampler 1 (union-gibbs) requires the Euclidean norm: set p = 2".into(),
                ));
            }
            if self.frame != FrameChoice::Union {
                return Err(Error::Config(
                    "sampler 1 (union-gibbs) requires a union-of-bases frame: set frame = union"
                        .into(),
                ));
            }
        }
        let (b0, b1) = self.beta_range;
        if !(b0 > 0.0 && b0 <= b1 && b1 <= 3.0) {
            return Err(Error::Config(format!(
                "beta range must satisfy 0 < min <= max <= 3, got [{b0}, {b1}]"
            )));
        }
        let (g0, g1) = self.gamma_range;
        if !(g0 > 0.0 && g0 <= g1) {
            return Err(Error::Config(format!(
                "gamma range must satisfy 0 < min <= max, got [{g0}, {g1}]"
            )));
        }
        Ok(())
    }

    /// Builds the configured frame for the given image shape.
    pub fn build_frame_for(&self, rows: usize, cols: usize) -> Result<FrameOperator> {
        let shape = Shape::new(rows, cols);
        match self.frame {
            FrameChoice::Union => {
                let specs = self
                    .filters
                    .iter()
                    .map(|&f| WaveletSpec::new(f, self.levels))
                    .collect::<Result<Vec<_>>>()?;
                FrameOperator::union_of_bases(specs, shape)
            }
            FrameChoice::Tiwt => FrameOperator::translation_invariant(
                WaveletSpec::new(self.filters[0], self.levels)?,
                shape,
            ),
            FrameChoice::Basis => FrameOperator::orthonormal_basis(
                WaveletSpec::new(self.filters[0], self.levels)?,
                shape,
            ),
        }
    }

    /// Builds the frame on the configured `rows x cols` shape.
    pub fn build_frame(&self) -> Result<FrameOperator> {
        self.build_frame_for(self.rows, self.cols)
    }

    /// Sampler settings for one chain (`stream` distinguishes parallel
    /// chains and Monte Carlo runs).
    pub fn settings(&self, stream: u64) -> SamplerSettings {
        SamplerSettings {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            eta: self.eta,
            sigma_x: self.sigma_x,
            seed: self.seed,
            stream,
            update_hyperparams: true,
            initial_theta: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# synthetic validation\nframe = union\nfilters = db8, db4-shifted\nlevels = 1\n\
             rows = 64\ncols = 64\np = 2\ndelta = 1e-4\nsampler = 2\niterations = 1000\n\
             burn_in = 500\nthin = 10\neta = auto\nseed = 7\nchains = 2\nruns = 3\n",
        )
        .unwrap();
        let mut c = RunConfig::from_file(&path).unwrap();
        assert_eq!(c.levels, 1);
        assert_eq!(c.chains, 2);
        assert_eq!(c.seed, 7);
        assert!(c.eta.is_none());
        c.set("iterations", "2000").unwrap();
        assert_eq!(c.iterations, 2000);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_sampler1_with_wrong_norm_or_frame() {
        let mut c = RunConfig {
            sampler: SamplerKind::UnionGibbs,
            p: LpNorm::Infinity,
            ..Default::default()
        };
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("p = 2"));

        c.p = LpNorm::Finite(2.0);
        c.frame = FrameChoice::Tiwt;
        c.filters = vec![WaveletFilter::Symmlet8];
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("union"));
    }

    #[test]
    fn rejects_inconsistent_windows() {
        let mut c = RunConfig::default();
        c.burn_in = c.iterations;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.eta = Some(c.delta * 2.0);
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.beta_range = (0.0, 2.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_reported_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "frame = union\nbogus = 1\n").unwrap();
        let err = RunConfig::from_file(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("bogus"), "{msg}");
    }
}
