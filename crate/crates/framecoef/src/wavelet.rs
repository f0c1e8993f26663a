//! Orthonormal wavelet filters and the 1D periodic filter-bank steps that the
//! frame operators are built from.
//!
//! All transforms use circular (periodic) convolution, which preserves exact
//! orthonormality on dyadic lengths. High-pass filters are derived from the
//! scaling filter through the conjugate-quadrature relation
//! `g[n] = (-1)^n h[D-1-n]`.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Haar scaling filter, `1/sqrt(2)` twice.
pub const HAAR: [f64; 2] = [0.7071067811865476, 0.7071067811865476];

/// Daubechies scaling filter with 4 taps. Closed form `(1±sqrt(3))/(4 sqrt(2))`,
/// `(3±sqrt(3))/(4 sqrt(2))`; taps are the nearest doubles.
pub const DAUBECHIES_4: [f64; 4] = [
    0.48296291314453416,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126037,
];

/// Daubechies scaling filter with 8 taps (extremal phase), from the spectral
/// factorization of the order-4 half-band polynomial, rounded to doubles.
pub const DAUBECHIES_8: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

/// Symmlet (least-asymmetric Daubechies) scaling filter with 8 taps, from the
/// same factorization with the phase-minimizing root selection.
pub const SYMMLET_8: [f64; 8] = [
    0.032223100604051466,
    -0.012603967262031304,
    -0.09921954357663353,
    0.29785779560530606,
    0.8037387518051321,
    0.497618667632775,
    -0.029635527646002493,
    -0.07576571478950221,
];

/// Named scaling filters available to frame constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WaveletFilter {
    Haar,
    /// Daubechies, 4 taps.
    Daubechies4,
    /// Daubechies, 4 taps, with the taps circularly shifted by one sample.
    /// Yields an orthonormal basis distinct from [`WaveletFilter::Daubechies4`],
    /// suitable as the second basis of a union frame.
    Daubechies4Shifted,
    /// Daubechies, 8 taps.
    Daubechies8,
    /// Symmlet, 8 taps.
    Symmlet8,
}

impl WaveletFilter {
    /// The low-pass (scaling) taps.
    pub fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFilter::Haar => HAAR.to_vec(),
            WaveletFilter::Daubechies4 => DAUBECHIES_4.to_vec(),
            WaveletFilter::Daubechies4Shifted => {
                let h = DAUBECHIES_4;
                // One-sample circular shift within the tap window.
                vec![h[3], h[0], h[1], h[2]]
            }
            WaveletFilter::Daubechies8 => DAUBECHIES_8.to_vec(),
            WaveletFilter::Symmlet8 => SYMMLET_8.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveletFilter::Haar => "haar",
            WaveletFilter::Daubechies4 => "db4",
            WaveletFilter::Daubechies4Shifted => "db4-shifted",
            WaveletFilter::Daubechies8 => "db8",
            WaveletFilter::Symmlet8 => "sym8",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "haar" => Ok(WaveletFilter::Haar),
            "db4" => Ok(WaveletFilter::Daubechies4),
            "db4-shifted" => Ok(WaveletFilter::Daubechies4Shifted),
            "db8" => Ok(WaveletFilter::Daubechies8),
            "sym8" => Ok(WaveletFilter::Symmlet8),
            other => Err(Error::InvalidParameter(format!(
                "unknown wavelet filter {other:?} (expected haar, db4, db4-shifted, db8 or sym8)"
            ))),
        }
    }
}

/// A wavelet filter bank together with a resolution depth.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub filter: WaveletFilter,
    pub levels: usize,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletSpec {
    pub fn new(filter: WaveletFilter, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter(
                "resolution level count must be at least 1".into(),
            ));
        }
        let lowpass = filter.lowpass();
        let highpass = quadrature_mirror(&lowpass);
        let spec = Self {
            filter,
            levels,
            lowpass,
            highpass,
        };
        spec.check_conjugate_quadrature()?;
        Ok(spec)
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Verifies the orthonormal filter-bank conditions: unit energy,
    /// vanishing autocorrelation at even lags and a `sqrt(2)` DC gain.
    fn check_conjugate_quadrature(&self) -> Result<()> {
        let h = &self.lowpass;
        let energy: f64 = h.iter().map(|v| v * v).sum();
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "filter {} has energy {energy}, expected 1",
                self.filter.name()
            )));
        }
        for lag in (2..h.len()).step_by(2) {
            let r: f64 = (0..h.len() - lag).map(|n| h[n] * h[n + lag]).sum();
            if r.abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "filter {} violates shift-2 orthogonality at lag {lag}: {r}",
                    self.filter.name()
                )));
            }
        }
        let dc: f64 = h.iter().sum();
        if (dc - SQRT_2).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "filter {} has DC gain {dc}, expected sqrt(2)",
                self.filter.name()
            )));
        }
        Ok(())
    }
}

/// High-pass taps from the scaling taps: `g[n] = (-1)^n h[D-1-n]`.
fn quadrature_mirror(lowpass: &[f64]) -> Vec<f64> {
    let d = lowpass.len();
    (0..d)
        .map(|n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[d - 1 - n]
        })
        .collect()
}

/// One decimated analysis step with periodic boundary:
/// `approx[i] = sum_n h[n] s[(2i+n) mod N]` and likewise for the detail.
/// `signal.len()` must be even.
pub(crate) fn dwt_step(
    signal: &[f64],
    lowpass: &[f64],
    highpass: &[f64],
    approx: &mut [f64],
    detail: &mut [f64],
) {
    let n = signal.len();
    let half = n / 2;
    debug_assert_eq!(approx.len(), half);
    debug_assert_eq!(detail.len(), half);
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&h, &g)) in lowpass.iter().zip(highpass).enumerate() {
            let s = signal[(2 * i + k) % n];
            a += h * s;
            d += g * s;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

/// Adjoint (= inverse, for orthonormal filters) of [`dwt_step`]:
/// scatters `h[n] a[i] + g[n] d[i]` back onto position `(2i+n) mod N`.
pub(crate) fn idwt_step(
    approx: &[f64],
    detail: &[f64],
    lowpass: &[f64],
    highpass: &[f64],
    signal: &mut [f64],
) {
    let half = approx.len();
    let n = 2 * half;
    debug_assert_eq!(signal.len(), n);
    signal.fill(0.0);
    for i in 0..half {
        let a = approx[i];
        let d = detail[i];
        for (k, (&h, &g)) in lowpass.iter().zip(highpass).enumerate() {
            signal[(2 * i + k) % n] += h * a + g * d;
        }
    }
}

/// One undecimated analysis step with the taps spaced `stride` apart and
/// scaled by `1/sqrt(2)`, so that the adjoint pair reconstructs exactly.
pub(crate) fn swt_step(
    signal: &[f64],
    lowpass: &[f64],
    highpass: &[f64],
    stride: usize,
    approx: &mut [f64],
    detail: &mut [f64],
) {
    let n = signal.len();
    debug_assert_eq!(approx.len(), n);
    debug_assert_eq!(detail.len(), n);
    let scale = 1.0 / SQRT_2;
    for i in 0..n {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&h, &g)) in lowpass.iter().zip(highpass).enumerate() {
            let s = signal[(i + k * stride) % n];
            a += h * s;
            d += g * s;
        }
        approx[i] = a * scale;
        detail[i] = d * scale;
    }
}

/// Adjoint of [`swt_step`]; accumulates into `signal`.
pub(crate) fn iswt_step(
    approx: &[f64],
    detail: &[f64],
    lowpass: &[f64],
    highpass: &[f64],
    stride: usize,
    signal: &mut [f64],
) {
    let n = approx.len();
    debug_assert_eq!(signal.len(), n);
    signal.fill(0.0);
    let scale = 1.0 / SQRT_2;
    for i in 0..n {
        let a = approx[i] * scale;
        let d = detail[i] * scale;
        for (k, (&h, &g)) in lowpass.iter().zip(highpass).enumerate() {
            signal[(i + k * stride) % n] += h * a + g * d;
        }
    }
}
