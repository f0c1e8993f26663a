//! Chain traces and their on-disk representation.
//!
//! A persisted trace is three sibling files sharing one stem:
//!
//! * `<stem>.csv` — hyperparameter history, header
//!   `iteration,group,beta,gamma,accepted`, one row per iteration and group;
//! * `<stem>.bin` — thinned coefficient snapshots: magic `FMC1`, then
//!   little-endian `u64` coefficient count, snapshot count and thinning
//!   stride, followed by the snapshots as little-endian `f64`;
//! * `<stem>.meta.json` — the configuration echo.
//!
//! Floats in the CSV are written in shortest round-trip form, so
//! `read_trace(write_trace(t)) == t` holds bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::HyperParams;
use crate::sampler::SamplerKind;

const SNAPSHOT_MAGIC: &[u8; 4] = b"FMC1";

/// Configuration echo stored alongside every trace.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceMeta {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub stream: u64,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub eta: f64,
    pub sigma_x: f64,
    pub delta: f64,
    /// Norm order as text (`"2"`, `"inf"`, ...).
    pub p: String,
    pub coeff_len: usize,
    pub group_labels: Vec<String>,
    pub frame: String,
}

impl TraceMeta {
    pub fn group_count(&self) -> usize {
        self.group_labels.len()
    }

    /// Fields that must agree for chains to be PSRF-comparable.
    pub fn compatible_with(&self, other: &TraceMeta) -> bool {
        self.sampler == other.sampler
            && self.iterations == other.iterations
            && self.thin == other.thin
            && self.delta == other.delta
            && self.p == other.p
            && self.coeff_len == other.coeff_len
            && self.group_labels == other.group_labels
            && self.frame == other.frame
    }
}

/// Acceptance counters per move type.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AcceptStats {
    pub coeff_proposals: u64,
    pub coeff_accepts: u64,
    /// Per-block counters (length `M` for the union Gibbs sampler, 1 for the
    /// global MH sampler).
    pub block_proposals: Vec<u64>,
    pub block_accepts: Vec<u64>,
    /// Per-group counters for the `beta` Metropolis moves.
    pub beta_proposals: Vec<u64>,
    pub beta_accepts: Vec<u64>,
    /// Inverse-gamma draws skipped because a group energy was zero.
    pub gamma_kept: u64,
}

impl AcceptStats {
    pub fn new(blocks: usize, groups: usize) -> Self {
        Self {
            block_proposals: vec![0; blocks],
            block_accepts: vec![0; blocks],
            beta_proposals: vec![0; groups],
            beta_accepts: vec![0; groups],
            ..Default::default()
        }
    }

    pub fn coeff_acceptance_rate(&self) -> f64 {
        if self.coeff_proposals == 0 {
            0.0
        } else {
            self.coeff_accepts as f64 / self.coeff_proposals as f64
        }
    }
}

/// Record of one chain: hyperparameter history every iteration, thinned
/// coefficient snapshots, and acceptance counters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub meta: TraceMeta,
    /// Iteration-major, group-minor; length `iterations * G`.
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta_accepted: Vec<bool>,
    /// Thinned coefficient snapshots, each of length `meta.coeff_len`.
    pub snapshots: Vec<Vec<f64>>,
    pub accept: AcceptStats,
}

impl ChainTrace {
    pub fn new(meta: TraceMeta, blocks: usize) -> Self {
        let groups = meta.group_count();
        let capacity = (meta.iterations as usize) * groups;
        Self {
            meta,
            beta: Vec::with_capacity(capacity),
            gamma: Vec::with_capacity(capacity),
            beta_accepted: Vec::with_capacity(capacity),
            snapshots: Vec::new(),
            accept: AcceptStats::new(blocks, groups),
        }
    }

    pub fn group_count(&self) -> usize {
        self.meta.group_count()
    }

    /// Number of recorded iterations.
    pub fn len(&self) -> usize {
        let g = self.group_count();
        if g == 0 {
            0
        } else {
            self.beta.len() / g
        }
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn record_iteration(&mut self, theta: &HyperParams, beta_accepted: &[bool]) {
        debug_assert_eq!(theta.len(), self.group_count());
        for p in &theta.groups {
            self.beta.push(p.beta);
            self.gamma.push(p.gamma);
        }
        if beta_accepted.is_empty() {
            self.beta_accepted
                .extend(std::iter::repeat(false).take(theta.len()));
        } else {
            self.beta_accepted.extend_from_slice(beta_accepted);
        }
    }

    pub fn record_snapshot(&mut self, coeffs: &[f64]) {
        debug_assert_eq!(coeffs.len(), self.meta.coeff_len);
        self.snapshots.push(coeffs.to_vec());
    }

    /// The `beta` history of one group.
    pub fn beta_series(&self, group: usize) -> Vec<f64> {
        self.series(&self.beta, group)
    }

    /// The `gamma` history of one group.
    pub fn gamma_series(&self, group: usize) -> Vec<f64> {
        self.series(&self.gamma, group)
    }

    fn series(&self, flat: &[f64], group: usize) -> Vec<f64> {
        let g = self.group_count();
        flat.iter().skip(group).step_by(g).copied().collect()
    }
}

fn csv_path(stem: &Path) -> PathBuf {
    stem.with_extension("csv")
}

fn bin_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

fn meta_path(stem: &Path) -> PathBuf {
    stem.with_extension("meta.json")
}

/// Persists a trace as `<stem>.csv`, `<stem>.bin` and `<stem>.meta.json`.
pub fn write_trace(trace: &ChainTrace, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();

    let mut csv = String::with_capacity(32 * trace.beta.len() + 64);
    csv.push_str("iteration,group,beta,gamma,accepted\n");
    let g = trace.group_count();
    for (row, ((beta, gamma), accepted)) in trace
        .beta
        .iter()
        .zip(&trace.gamma)
        .zip(&trace.beta_accepted)
        .enumerate()
    {
        let iteration = row / g + 1;
        let group = row % g;
        csv.push_str(&format!(
            "{iteration},{group},{beta},{gamma},{}\n",
            u8::from(*accepted)
        ));
    }
    fs::write(csv_path(stem), csv)?;

    let mut bin = Vec::with_capacity(
        4 + 3 * 8 + trace.snapshots.len() * trace.meta.coeff_len * 8,
    );
    bin.extend_from_slice(SNAPSHOT_MAGIC);
    bin.extend_from_slice(&(trace.meta.coeff_len as u64).to_le_bytes());
    bin.extend_from_slice(&(trace.snapshots.len() as u64).to_le_bytes());
    bin.extend_from_slice(&trace.meta.thin.to_le_bytes());
    for snap in &trace.snapshots {
        for v in snap {
            bin.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(bin_path(stem))?;
    f.write_all(&bin)?;

    let meta_json = serde_json::to_string_pretty(&trace.meta)
        .map_err(|e| Error::TraceFormat(e.to_string()))?;
    fs::write(meta_path(stem), meta_json)?;
    Ok(())
}

/// Reads a trace previously written by [`write_trace`].
pub fn read_trace(stem: impl AsRef<Path>) -> Result<ChainTrace> {
    let stem = stem.as_ref();

    let meta: TraceMeta = serde_json::from_str(&fs::read_to_string(meta_path(stem))?)
        .map_err(|e| Error::TraceFormat(format!("bad meta json: {e}")))?;

    let csv = fs::read_to_string(csv_path(stem))?;
    let mut lines = csv.lines();
    match lines.next() {
        Some("iteration,group,beta,gamma,accepted") => {}
        other => {
            return Err(Error::TraceFormat(format!(
                "unexpected csv header {other:?}"
            )))
        }
    }
    let mut beta = Vec::new();
    let mut gamma = Vec::new();
    let mut beta_accepted = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = || {
            fields
                .next()
                .ok_or_else(|| Error::TraceFormat(format!("short csv row {}", lineno + 2)))
        };
        let _iteration = next()?;
        let _group = next()?;
        let b: f64 = next()?
            .parse()
            .map_err(|e| Error::TraceFormat(format!("row {}: {e}", lineno + 2)))?;
        let ga: f64 = next()?
            .parse()
            .map_err(|e| Error::TraceFormat(format!("row {}: {e}", lineno + 2)))?;
        let acc = next()? == "1";
        beta.push(b);
        gamma.push(ga);
        beta_accepted.push(acc);
    }

    let bin = fs::read(bin_path(stem))?;
    if bin.len() < 4 + 24 || &bin[..4] != SNAPSHOT_MAGIC {
        return Err(Error::TraceFormat(
            "snapshot file: bad or missing FMC1 magic".into(),
        ));
    }
    let u64_at = |off: usize| -> u64 {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bin[off..off + 8]);
        u64::from_le_bytes(b)
    };
    let coeff_len = u64_at(4) as usize;
    let count = u64_at(12) as usize;
    let thin = u64_at(20);
    if coeff_len != meta.coeff_len || thin != meta.thin {
        return Err(Error::TraceFormat(
            "snapshot header disagrees with trace metadata".into(),
        ));
    }
    let payload = &bin[28..];
    let expected = count * coeff_len * 8;
    if payload.len() != expected {
        return Err(Error::TraceFormat(format!(
            "snapshot payload has {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut snapshots = Vec::with_capacity(count);
    for s in 0..count {
        let mut snap = Vec::with_capacity(coeff_len);
        for i in 0..coeff_len {
            let off = (s * coeff_len + i) * 8;
            let mut b = [0u8; 8];
            b.copy_from_slice(&payload[off..off + 8]);
            snap.push(f64::from_le_bytes(b));
        }
        snapshots.push(snap);
    }

    let groups = meta.group_count();
    let blocks = 1;
    let mut trace = ChainTrace::new(meta, blocks);
    trace.accept = AcceptStats::new(0, groups);
    trace.beta = beta;
    trace.gamma = gamma;
    trace.beta_accepted = beta_accepted;
    trace.snapshots = snapshots;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GgParams;
    use proptest::prelude::*;

    fn meta(iterations: u64, thin: u64, coeff_len: usize, groups: usize) -> TraceMeta {
        TraceMeta {
            sampler: SamplerKind::AlgebraicMh,
            seed: 7,
            stream: 0,
            iterations,
            burn_in: iterations / 2,
            thin,
            eta: 0.01,
            sigma_x: 0.1,
            delta: 1e-4,
            p: "2".into(),
            coeff_len,
            group_labels: (0..groups).map(|g| format!("g{g}")).collect(),
            frame: "test".into(),
        }
    }

    fn sample_trace() -> ChainTrace {
        let mut t = ChainTrace::new(meta(3, 2, 4, 2), 1);
        for i in 0..3 {
            let theta = HyperParams::new(vec![
                GgParams::new(1.5 + i as f64, 1.1).unwrap(),
                GgParams::new(0.25, 2.9).unwrap(),
            ]);
            t.record_iteration(&theta, &[i % 2 == 0, false]);
        }
        t.record_snapshot(&[0.5, -1.25, 3.0, f64::MIN_POSITIVE]);
        t
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("chain0");
        let t = sample_trace();
        write_trace(&t, &stem).unwrap();
        let mut back = read_trace(&stem).unwrap();
        // Acceptance counters are not persisted; compare the rest.
        back.accept = t.accept.clone();
        assert_eq!(back, t);

        // Writing the read-back trace reproduces identical bytes.
        let stem2 = dir.path().join("chain1");
        write_trace(&back, &stem2).unwrap();
        for ext in ["csv", "bin", "meta.json"] {
            let a = std::fs::read(stem.with_extension(ext)).unwrap();
            let b = std::fs::read(stem2.with_extension(ext)).unwrap();
            assert_eq!(a, b, "{ext} differs");
        }
    }

    #[test]
    fn csv_row_count_is_iterations_times_groups() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("t");
        let t = sample_trace();
        write_trace(&t, &stem).unwrap();
        let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
        let rows = csv.lines().count() - 1;
        assert_eq!(rows, 3 * 2);
    }

    #[test]
    fn truncated_snapshot_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("t");
        let t = sample_trace();
        write_trace(&t, &stem).unwrap();
        let bin = stem.with_extension("bin");
        let bytes = std::fs::read(&bin).unwrap();
        std::fs::write(&bin, &bytes[..bytes.len() - 5]).unwrap();
        let err = read_trace(&stem).unwrap_err();
        assert!(matches!(err, Error::TraceFormat(ref m) if m.contains("payload")));

        std::fs::write(&bin, b"GARBAGE!").unwrap();
        let err = read_trace(&stem).unwrap_err();
        assert!(matches!(err, Error::TraceFormat(ref m) if m.contains("magic")));
    }

    proptest! {
        #[test]
        fn round_trip_arbitrary_values(
            betas in proptest::collection::vec(0.01f64..3.0, 4),
            gammas in proptest::collection::vec(1e-6f64..1e6, 4),
            snap in proptest::collection::vec(-1e12f64..1e12, 3),
        ) {
            let dir = tempfile::tempdir().unwrap();
            let stem = dir.path().join("p");
            let mut t = ChainTrace::new(meta(2, 1, 3, 2), 1);
            for i in 0..2 {
                let theta = HyperParams::new(vec![
                    GgParams::new(gammas[2 * i], betas[2 * i]).unwrap(),
                    GgParams::new(gammas[2 * i + 1], betas[2 * i + 1]).unwrap(),
                ]);
                t.record_iteration(&theta, &[true, false]);
            }
            t.record_snapshot(&snap);
            write_trace(&t, &stem).unwrap();
            let mut back = read_trace(&stem).unwrap();
            back.accept = t.accept.clone();
            prop_assert_eq!(back, t);
        }
    }
}
