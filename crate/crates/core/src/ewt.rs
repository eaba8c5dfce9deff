//! Empirical wavelet transform.
//!
//! The filter bank is derived from the signal itself: local maxima of the
//! one-sided magnitude spectrum are located, band edges are placed halfway
//! between consecutive maxima, and a Meyer-type scaling filter plus one
//! band-pass wavelet filter per remaining band are built around those
//! edges. The squared responses sum to one on `[0, pi]`, so the bank is a
//! tight frame and the components returned by [`decompose`] add back up to
//! the input.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EwtError {
    #[error("series too short for a spectrum: need at least 4 values, got {0}")]
    TooShort(usize),
    #[error("spectrum is flat away from DC; no maxima to build bands on")]
    NoPeaks,
    #[error("requested {requested} spectral maxima but only {found} exist")]
    InsufficientPeaks { requested: usize, found: usize },
    #[error("gamma {gamma} violates the tight-frame bound {bound}")]
    InadmissibleGamma { gamma: f64, bound: f64 },
    #[error("maxima must be strictly ascending within (0, pi]: {0:?}")]
    InvalidMaxima(Vec<f64>),
    #[error("invalid EWT configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

pub type Result<T> = std::result::Result<T, EwtError>;

/// Decomposition settings. `None` means automatic selection for both the
/// component count and the transition width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EwtConfig {
    pub num_components: Option<usize>,
    pub gamma: Option<f64>,
    /// Minimum peak prominence as a fraction of the largest non-DC magnitude.
    pub min_peak_prominence: f64,
    pub max_auto_components: usize,
}

impl Default for EwtConfig {
    fn default() -> Self {
        Self { num_components: None, gamma: None, min_peak_prominence: 0.1, max_auto_components: 6 }
    }
}

impl EwtConfig {
    pub fn with_components(n: usize) -> Self {
        Self { num_components: Some(n), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_components == Some(0) {
            return Err(EwtError::InvalidConfig("num_components must be >= 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(EwtError::InvalidConfig(format!("gamma {g} outside (0, 1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.min_peak_prominence) {
            return Err(EwtError::InvalidConfig("min_peak_prominence outside [0, 1]".into()));
        }
        if self.max_auto_components == 0 {
            return Err(EwtError::InvalidConfig("max_auto_components must be >= 1".into()));
        }
        Ok(())
    }
}

/// One-sided DFT of a real series: bins `0..=len/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub len: usize,
    pub bins: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.len as f64
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm()).collect()
    }
}

fn fft(values: &[Complex<f64>], inverse: bool) -> Vec<Complex<f64>> {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(values.len()) } else { planner.plan_fft_forward(values.len()) };
    let mut buf = values.to_vec();
    plan.process(&mut buf);
    buf
}

fn full_spectrum(series: &[f64]) -> Result<Vec<Complex<f64>>> {
    if series.len() < 4 {
        return Err(EwtError::TooShort(series.len()));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(EwtError::NonFinite(i));
    }
    let input: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
    Ok(fft(&input, false))
}

pub fn compute_spectrum(series: &[f64]) -> Result<Spectrum> {
    let full = full_spectrum(series)?;
    let half = series.len() / 2;
    Ok(Spectrum { len: series.len(), bins: full[..=half].to_vec() })
}

/// Indices of local maxima of `m`, excluding the DC bin.
fn local_maxima(m: &[f64]) -> Vec<usize> {
    let last = m.len() - 1;
    (1..=last)
        .filter(|&k| m[k] > m[k - 1] && (k == last || m[k] >= m[k + 1]))
        .collect()
}

/// Topographic prominence of the peak at `k`.
fn prominence(m: &[f64], k: usize) -> f64 {
    let h = m[k];
    let mut left_min = h;
    for j in (0..k).rev() {
        if m[j] > h {
            break;
        }
        left_min = left_min.min(m[j]);
    }
    let mut right_min = h;
    for &v in &m[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Frequencies (radians, ascending) of the dominant spectral maxima.
pub fn detect_maxima(spectrum: &Spectrum, config: &EwtConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut m = spectrum.magnitudes();
    if m.len() < 2 {
        return Err(EwtError::NoPeaks);
    }
    let top = m[1..].iter().copied().fold(0.0, f64::max);
    if top == 0.0 || top <= 1e-10 * (m[0] + top) {
        return Err(EwtError::NoPeaks);
    }
    // Round-off ripple must not register as peaks.
    let floor = 1e-10 * top;
    m.iter_mut().skip(1).filter(|v| **v < floor).for_each(|v| *v = 0.0);
    let mut peaks = local_maxima(&m);
    if peaks.is_empty() {
        return Err(EwtError::NoPeaks);
    }
    let wanted = match config.num_components {
        Some(h) => {
            if peaks.len() < h {
                return Err(EwtError::InsufficientPeaks { requested: h, found: peaks.len() });
            }
            h
        }
        None => {
            let floor = config.min_peak_prominence * top;
            peaks.retain(|&k| prominence(&m, k) >= floor);
            if peaks.is_empty() {
                return Err(EwtError::NoPeaks);
            }
            peaks.len().min(config.max_auto_components)
        }
    };
    // Rank by magnitude (ties broken by lower frequency), keep the top ones.
    peaks.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));
    peaks.truncate(wanted);
    peaks.sort_unstable();
    Ok(peaks.into_iter().map(|k| spectrum.frequency(k)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBoundaries {
    pub omega_maxima: Vec<f64>,
    /// Midpoint boundaries followed by the terminal boundary at pi.
    pub delta: Vec<f64>,
    pub gamma_used: f64,
}

impl SpectralBoundaries {
    pub fn num_bands(&self) -> usize {
        self.delta.len()
    }
}

/// Largest transition half-width ratio for which neighbouring transition
/// regions `[(1-g)D_k, (1+g)D_k]` do not overlap. Returns 1 when there is
/// only the terminal boundary.
pub fn admissible_gamma_bound(delta: &[f64]) -> f64 {
    delta
        .windows(2)
        .map(|w| (w[1] - w[0]) / (w[1] + w[0]))
        .fold(1.0, f64::min)
}

pub fn compute_boundaries(maxima: &[f64], config: &EwtConfig) -> Result<SpectralBoundaries> {
    config.validate()?;
    let valid = !maxima.is_empty()
        && maxima.iter().all(|&w| w > 0.0 && w <= PI)
        && maxima.windows(2).all(|w| w[0] < w[1]);
    if !valid {
        return Err(EwtError::InvalidMaxima(maxima.to_vec()));
    }
    let mut delta: Vec<f64> = maxima.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    delta.push(PI);
    let bound = admissible_gamma_bound(&delta);
    let gamma_used = match config.gamma {
        Some(g) if g < bound => g,
        Some(g) => return Err(EwtError::InadmissibleGamma { gamma: g, bound }),
        None => 0.9 * bound,
    };
    Ok(SpectralBoundaries { omega_maxima: maxima.to_vec(), delta, gamma_used })
}

/// Meyer transition polynomial, clamped to `[0, 1]`.
pub fn beta(theta: f64) -> f64 {
    if theta <= 0.0 {
        0.0
    } else if theta >= 1.0 {
        1.0
    } else {
        let t = theta;
        t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t)
    }
}

fn transition_arg(w: f64, gamma: f64, d: f64) -> f64 {
    (w - (1.0 - gamma) * d) / (2.0 * gamma * d)
}

/// Continuous frequency responses of the filters defined by a set of
/// boundaries. Band 0 is the scaling (low-pass) filter; band `k >= 1` is
/// the wavelet filter between `delta[k-1]` and `delta[k]`.
#[derive(Debug, Clone, Copy)]
pub struct FilterResponses<'a> {
    boundaries: &'a SpectralBoundaries,
}

impl<'a> FilterResponses<'a> {
    pub fn new(boundaries: &'a SpectralBoundaries) -> Self {
        Self { boundaries }
    }

    pub fn num_bands(&self) -> usize {
        self.boundaries.num_bands()
    }

    pub fn phi1(&self, omega: f64) -> f64 {
        let delta = &self.boundaries.delta;
        if delta.len() == 1 {
            return 1.0;
        }
        let g = self.boundaries.gamma_used;
        let w = omega.abs();
        let d = delta[0];
        if w < (1.0 - g) * d {
            1.0
        } else if w <= (1.0 + g) * d {
            (PI / 2.0 * beta(transition_arg(w, g, d))).cos()
        } else {
            0.0
        }
    }

    /// Wavelet filter for band `k` in `1..num_bands()`.
    pub fn psi(&self, k: usize, omega: f64) -> f64 {
        let delta = &self.boundaries.delta;
        assert!(k >= 1 && k < delta.len(), "band {k} out of range");
        let g = self.boundaries.gamma_used;
        let w = omega.abs();
        let lo = delta[k - 1];
        let hi = delta[k];
        let terminal = k == delta.len() - 1;
        if w < (1.0 - g) * lo {
            0.0
        } else if w <= (1.0 + g) * lo {
            (PI / 2.0 * beta(transition_arg(w, g, lo))).sin()
        } else if terminal || w < (1.0 - g) * hi {
            1.0
        } else if w <= (1.0 + g) * hi {
            (PI / 2.0 * beta(transition_arg(w, g, hi))).cos()
        } else {
            0.0
        }
    }

    pub fn response(&self, band: usize, omega: f64) -> f64 {
        if band == 0 {
            self.phi1(omega)
        } else {
            self.psi(band, omega)
        }
    }
}

/// Filter responses sampled on a length-`grid_size` DFT grid. Entry `k`
/// holds the response at the absolute frequency of bin `k`, so negative
/// frequencies mirror positive ones.
#[derive(Debug, Clone, PartialEq)]
pub struct EwtFilterBank {
    pub phi1: Vec<f64>,
    pub psis: Vec<Vec<f64>>,
    pub grid_size: usize,
}

fn bin_frequency(k: usize, n: usize) -> f64 {
    let k = if k <= n / 2 { k } else { n - k };
    2.0 * PI * k as f64 / n as f64
}

pub fn build_filter_bank(boundaries: &SpectralBoundaries, grid_size: usize) -> EwtFilterBank {
    let resp = FilterResponses::new(boundaries);
    let sample = |band: usize| (0..grid_size).map(|k| resp.response(band, bin_frequency(k, grid_size))).collect::<Vec<_>>();
    EwtFilterBank {
        phi1: sample(0),
        psis: (1..resp.num_bands()).map(sample).collect(),
        grid_size,
    }
}

impl EwtFilterBank {
    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.phi1.as_slice()).chain(self.psis.iter().map(Vec::as_slice))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwtDecomposition {
    /// Low-pass approximation first, then the band-pass details in order of
    /// increasing frequency.
    pub components: Vec<Vec<f64>>,
    pub boundaries: SpectralBoundaries,
    pub original_length: usize,
}

/// Detects maxima, builds the bank and splits `series` into components.
pub fn decompose(series: &[f64], config: &EwtConfig) -> Result<EwtDecomposition> {
    let spectrum = compute_spectrum(series)?;
    let maxima = detect_maxima(&spectrum, config)?;
    let boundaries = compute_boundaries(&maxima, config)?;
    decompose_with_boundaries(series, &boundaries)
}

/// Filters `series` through the bank defined by previously fitted
/// boundaries. Each component is the analysis-then-synthesis projection
/// `IFFT(X * F^2)`; with the squared responses summing to one, the
/// components add back up to the input.
pub fn decompose_with_boundaries(series: &[f64], boundaries: &SpectralBoundaries) -> Result<EwtDecomposition> {
    let spectrum = full_spectrum(series)?;
    let n = series.len();
    let bank = build_filter_bank(boundaries, n);
    let scale = 1.0 / n as f64;
    let components = bank
        .bands()
        .map(|resp| {
            let filtered: Vec<Complex<f64>> = spectrum.iter().zip(resp).map(|(x, &f)| x * (f * f)).collect();
            let back = fft(&filtered, true);
            debug_assert!(back.iter().all(|c| (c.im * scale).abs() < 1e-9 * (1.0 + c.re.abs() * scale)));
            back.into_iter().map(|c| c.re * scale).collect()
        })
        .collect();
    Ok(EwtDecomposition { components, boundaries: boundaries.clone(), original_length: n })
}

pub fn reconstruct(decomposition: &EwtDecomposition) -> Vec<f64> {
    let mut out = vec![0.0; decomposition.original_length];
    for comp in &decomposition.components {
        for (o, &c) in out.iter_mut().zip(comp) {
            *o += c;
        }
    }
    out
}
