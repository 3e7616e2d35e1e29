//! Tonic/phasic decomposition of a cleaned electrodermal activity stream.
//!
//! The tonic skin-conductance level is a zero-phase first-order low-pass at
//! 0.05 Hz; the phasic component is the residual, so tonic + phasic
//! reconstructs the input sample-exactly. Skin conductance responses are
//! phasic local maxima above 0.01 uS with at least 0.005 uS prominence and
//! 1 s separation.

use crate::datamodel::{Channel, SensorStream};
use crate::{Error, Result};

use super::peaks::{detect_peaks, PeakParams};
use super::{design_butterworth, filtfilt, FilterSpec};

const TONIC_CUTOFF_HZ: f64 = 0.05;
const SCR_MIN_AMPLITUDE_US: f64 = 0.01;
const SCR_MIN_PROMINENCE_US: f64 = 0.005;
const SCR_REFRACTORY_S: f64 = 1.0;

/// One detected skin conductance response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrEvent {
    /// Seconds from the stream start.
    pub time_s: f64,
    /// Phasic amplitude at the peak, uS.
    pub amplitude_us: f64,
}

#[derive(Debug, Clone)]
pub struct EdaDecomposition {
    /// Tonic trace at the input rate, clamped to >= 0.
    pub scl_series: SensorStream,
    /// Phasic residual (input - unclamped tonic).
    pub phasic: Vec<f64>,
    pub scr_events: Vec<ScrEvent>,
}

/// Splits a cleaned EDA stream into tonic and phasic components and counts
/// SCR events.
pub fn decompose_eda(eda: &SensorStream) -> Result<EdaDecomposition> {
    if eda.channel != Channel::Eda {
        return Err(Error::invalid(format!(
            "decompose_eda expects eda, got {}",
            eda.channel.as_str()
        )));
    }
    if eda.values.is_empty() {
        return Err(Error::invalid("empty EDA stream"));
    }

    let spec = FilterSpec::lowpass(1, TONIC_CUTOFF_HZ, eda.rate_hz);
    let coeffs = design_butterworth(&spec)?;
    let tonic = filtfilt(&coeffs, &eda.values);
    let phasic: Vec<f64> = eda.values.iter().zip(&tonic).map(|(x, t)| x - t).collect();

    let refractory = (SCR_REFRACTORY_S * eda.rate_hz).round().max(1.0) as usize;
    let peak_idx = detect_peaks(
        &phasic,
        &PeakParams {
            min_height: SCR_MIN_AMPLITUDE_US,
            min_prominence: SCR_MIN_PROMINENCE_US,
            min_distance: refractory,
        },
    );
    let scr_events = peak_idx
        .iter()
        .map(|&i| ScrEvent { time_s: i as f64 / eda.rate_hz, amplitude_us: phasic[i] })
        .collect();

    let clamped: Vec<f64> = tonic.iter().map(|v| v.max(0.0)).collect();
    Ok(EdaDecomposition {
        scl_series: SensorStream::new(Channel::Eda, eda.rate_hz, eda.t0_us, clamped),
        phasic,
        scr_events,
    })
}
