//! Signal cleaning and physiological decomposition.
//!
//! Butterworth filters are designed as cascaded second-order sections
//! (analog prototype poles, band transform, bilinear mapping) and always
//! applied forward-backward so the net phase shift is zero. Edge transients
//! are suppressed by odd-reflect padding of 3x the filter order plus
//! steady-state initial conditions, so a constant input passes through
//! unchanged.

mod eda;
mod heart_rate;
mod peaks;

pub use eda::{decompose_eda, EdaDecomposition, ScrEvent};
pub use heart_rate::{extract_heart_rate, HeartRateSeries};

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::datamodel::{Channel, SensorStream};
use crate::{Error, Result};

/// Filter family selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    Lowpass,
    Bandpass,
}

/// Specification of a Butterworth filter to design.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub order: usize,
    /// One cutoff for low-pass, two (low, high) for band-pass, in Hz.
    pub cutoffs_hz: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl FilterSpec {
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        Self { kind: FilterKind::Lowpass, order, cutoffs_hz: vec![cutoff_hz], sample_rate_hz }
    }

    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Self {
        Self { kind: FilterKind::Bandpass, order, cutoffs_hz: vec![low_hz, high_hz], sample_rate_hz }
    }

    fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz / 2.0;
        if self.order == 0 {
            return Err(Error::FilterDesign("order must be >= 1".into()));
        }
        if self.sample_rate_hz <= 0.0 {
            return Err(Error::FilterDesign("sample rate must be positive".into()));
        }
        let expected = match self.kind {
            FilterKind::Lowpass => 1,
            FilterKind::Bandpass => 2,
        };
        if self.cutoffs_hz.len() != expected {
            return Err(Error::FilterDesign(format!(
                "{:?} needs {} cutoff(s), got {}",
                self.kind,
                expected,
                self.cutoffs_hz.len()
            )));
        }
        for &c in &self.cutoffs_hz {
            if c <= 0.0 {
                return Err(Error::FilterDesign(format!("cutoff {} Hz must be positive", c)));
            }
            if c >= nyquist {
                return Err(Error::FilterDesign(format!(
                    "cutoff {} Hz >= Nyquist {} Hz",
                    c, nyquist
                )));
            }
        }
        if self.kind == FilterKind::Bandpass && self.cutoffs_hz[0] >= self.cutoffs_hz[1] {
            return Err(Error::FilterDesign("band-pass low cutoff must be below high".into()));
        }
        Ok(())
    }
}

/// One digital biquad, denominator normalized to `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

/// Cascaded second-order sections realizing a Butterworth response.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    pub sections: Vec<Biquad>,
    /// Effective transfer-function order (prototype order for low-pass,
    /// twice that for band-pass).
    pub order: usize,
    pub sample_rate_hz: f64,
}

impl FilterCoefficients {
    /// Complex single-pass response at frequency `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex<f64> {
        let w = 2.0 * PI * f_hz / self.sample_rate_hz;
        let zinv = Complex::new(w.cos(), -w.sin());
        let zinv2 = zinv * zinv;
        let mut h = Complex::new(1.0, 0.0);
        for s in &self.sections {
            let num = Complex::new(s.b0, 0.0) + zinv * s.b1 + zinv2 * s.b2;
            let den = Complex::new(1.0, 0.0) + zinv * s.a1 + zinv2 * s.a2;
            h *= num / den;
        }
        h
    }

    /// Single-pass magnitude response at `f_hz`.
    pub fn gain(&self, f_hz: f64) -> f64 {
        self.response(f_hz).norm()
    }

    /// Effective magnitude after the forward-backward pass.
    pub fn zero_phase_gain(&self, f_hz: f64) -> f64 {
        let g = self.gain(f_hz);
        g * g
    }
}

/// Left-half-plane poles of the unit-cutoff analog Butterworth prototype.
fn prototype_poles(order: usize) -> Vec<Complex<f64>> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// Bilinear transform of an analog biquad `(B2 s^2 + B1 s + B0) / (s^2 + A1 s + A0)`.
fn bilinear_biquad(b: [f64; 3], a1: f64, a0: f64, fs: f64) -> Biquad {
    let k = 2.0 * fs;
    let k2 = k * k;
    let d0 = k2 + a1 * k + a0;
    Biquad {
        b0: (b[2] * k2 + b[1] * k + b[0]) / d0,
        b1: (-2.0 * b[2] * k2 + 2.0 * b[0]) / d0,
        b2: (b[2] * k2 - b[1] * k + b[0]) / d0,
        a1: (-2.0 * k2 + 2.0 * a0) / d0,
        a2: (k2 - a1 * k + a0) / d0,
    }
}

/// Bilinear transform of an analog first-order low-pass `wc / (s + wc)`.
fn bilinear_first_order_lowpass(wc: f64, fs: f64) -> Biquad {
    let k = 2.0 * fs;
    let d0 = k + wc;
    Biquad { b0: wc / d0, b1: wc / d0, b2: 0.0, a1: (wc - k) / d0, a2: 0.0 }
}

/// Designs cascaded second-order sections realizing the Butterworth
/// magnitude response for `spec`.
pub fn design_butterworth(spec: &FilterSpec) -> Result<FilterCoefficients> {
    spec.validate()?;
    let fs = spec.sample_rate_hz;
    let n = spec.order;
    let warp = |f_hz: f64| 2.0 * fs * (PI * f_hz / fs).tan();

    let mut sections = Vec::new();
    let order;
    match spec.kind {
        FilterKind::Lowpass => {
            order = n;
            let wc = warp(spec.cutoffs_hz[0]);
            for p in prototype_poles(n) {
                if p.im > 1e-12 {
                    let q = p * wc;
                    let a1 = -2.0 * q.re;
                    let a0 = q.norm_sqr();
                    sections.push(bilinear_biquad([a0, 0.0, 0.0], a1, a0, fs));
                } else if p.im.abs() <= 1e-12 {
                    sections.push(bilinear_first_order_lowpass(wc, fs));
                }
            }
        }
        FilterKind::Bandpass => {
            order = 2 * n;
            let wl = warp(spec.cutoffs_hz[0]);
            let wh = warp(spec.cutoffs_hz[1]);
            let w0 = (wl * wh).sqrt();
            let bw = wh - wl;
            // Band transform s_lp = (s^2 + w0^2) / (bw * s): every prototype
            // pole p yields the two roots of s^2 - (p bw) s + w0^2 = 0.
            let mut poles: Vec<Complex<f64>> = Vec::with_capacity(2 * n);
            for p in prototype_poles(n) {
                let pb = p * bw;
                let disc = (pb * pb - Complex::new(4.0 * w0 * w0, 0.0)).sqrt();
                poles.push((pb + disc) * 0.5);
                poles.push((pb - disc) * 0.5);
            }
            // Pair complex poles with their conjugates; pair real poles up.
            let mut upper: Vec<Complex<f64>> =
                poles.iter().copied().filter(|p| p.im > 1e-9).collect();
            let mut reals: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= 1e-9).map(|p| p.re).collect();
            upper.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
            reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut analog: Vec<(f64, f64)> = Vec::new();
            for q in upper {
                analog.push((-2.0 * q.re, q.norm_sqr()));
            }
            for pair in reals.chunks(2) {
                if let [r1, r2] = pair {
                    analog.push((-(r1 + r2), r1 * r2));
                }
            }
            for (a1, a0) in analog {
                // One zero at s=0 per section; gain pinned to 1 at the
                // analog center frequency w0.
                let num_mag = ((a0 - w0 * w0).powi(2) + (a1 * w0).powi(2)).sqrt();
                let g = num_mag / w0;
                sections.push(bilinear_biquad([0.0, g, 0.0], a1, a0, fs));
            }
        }
    }

    Ok(FilterCoefficients { sections, order, sample_rate_hz: fs })
}

/// Steady-state (unit-step) internal state of a transposed direct-form II
/// biquad; scaling by the first input sample removes startup transients.
fn section_step_state(s: &Biquad) -> (f64, f64) {
    let y_dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    let z2 = s.b2 - s.a2 * y_dc;
    let z1 = s.b1 - s.a1 * y_dc + z2;
    (z1, z2)
}

fn section_dc_gain(s: &Biquad) -> f64 {
    (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2)
}

/// Single forward pass of the cascade with steady-state initial conditions
/// scaled to the first sample.
fn sosfilt(coeffs: &FilterCoefficients, x: &[f64]) -> Vec<f64> {
    let mut data = x.to_vec();
    let x0 = x.first().copied().unwrap_or(0.0);
    let mut dc_in = x0;
    for s in &coeffs.sections {
        let (zi1, zi2) = section_step_state(s);
        let mut z1 = zi1 * dc_in;
        let mut z2 = zi2 * dc_in;
        for v in data.iter_mut() {
            let xin = *v;
            let y = s.b0 * xin + z1;
            z1 = s.b1 * xin - s.a1 * y + z2;
            z2 = s.b2 * xin - s.a2 * y;
            *v = y;
        }
        dc_in *= section_dc_gain(s);
    }
    data
}

/// Zero-phase (forward-backward) filtering with odd-reflect padding of
/// 3x the filter order at both ends.
pub fn filtfilt(coeffs: &FilterCoefficients, x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let pad = (3 * coeffs.order).min(x.len() - 1);
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut y = sosfilt(coeffs, &ext);
    y.reverse();
    let mut y = sosfilt(coeffs, &y);
    y.reverse();
    y[pad..pad + n].to_vec()
}

const BVP_BAND_HZ: (f64, f64) = (0.5, 3.0);
const BVP_FILTER_ORDER: usize = 2;
const EDA_CUTOFF_HZ: f64 = 0.8;
const EDA_FILTER_ORDER: usize = 8;

/// Band-pass cleaning of a blood volume pulse stream (0.5-3 Hz, covering
/// heart rates up to 180 bpm).
pub fn filter_bvp(stream: &SensorStream) -> Result<SensorStream> {
    if stream.channel != Channel::Bvp {
        return Err(Error::invalid(format!(
            "filter_bvp expects bvp, got {}",
            stream.channel.as_str()
        )));
    }
    let spec =
        FilterSpec::bandpass(BVP_FILTER_ORDER, BVP_BAND_HZ.0, BVP_BAND_HZ.1, stream.rate_hz);
    let coeffs = design_butterworth(&spec)?;
    Ok(SensorStream::new(stream.channel, stream.rate_hz, stream.t0_us, filtfilt(&coeffs, &stream.values)))
}

/// Low-pass cleaning of an electrodermal activity stream (8th order, 0.8 Hz).
pub fn filter_eda(stream: &SensorStream) -> Result<SensorStream> {
    if stream.channel != Channel::Eda {
        return Err(Error::invalid(format!(
            "filter_eda expects eda, got {}",
            stream.channel.as_str()
        )));
    }
    let spec = FilterSpec::lowpass(EDA_FILTER_ORDER, EDA_CUTOFF_HZ, stream.rate_hz);
    let coeffs = design_butterworth(&spec)?;
    Ok(SensorStream::new(stream.channel, stream.rate_hz, stream.t0_us, filtfilt(&coeffs, &stream.values)))
}
