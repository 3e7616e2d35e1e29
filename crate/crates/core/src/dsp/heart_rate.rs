//! Heart-rate extraction from a band-passed blood volume pulse stream.
//!
//! Sliding 10-second windows on a 1-second stride; within each window,
//! systolic peaks are local maxima above the window's 60th percentile with a
//! 0.33 s refractory (180 bpm ceiling). A window needs at least three peaks
//! to yield a sample; estimates outside the plausible 30-220 bpm range are
//! discarded as artifacts.

use crate::datamodel::SensorStream;
use crate::{Error, Result};

use super::peaks::{detect_peaks, percentile, PeakParams};

const PEAK_PERCENTILE: f64 = 60.0;
const REFRACTORY_S: f64 = 0.33;
const HR_PLAUSIBLE_BPM: (f64, f64) = (30.0, 220.0);

/// Heart-rate estimates on a one-second stride grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeartRateSeries {
    /// Window start times, seconds from the stream start.
    pub times_s: Vec<f64>,
    pub hr_bpm: Vec<f64>,
}

impl HeartRateSeries {
    pub fn len(&self) -> usize {
        self.hr_bpm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hr_bpm.is_empty()
    }

    /// Mean of samples with time in `[start_s, end_s)`.
    pub fn mean_in(&self, start_s: f64, end_s: f64) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, hr) in self.times_s.iter().zip(&self.hr_bpm) {
            if *t >= start_s && *t < end_s {
                sum += hr;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Estimates heart rate from a filtered BVP stream.
///
/// Per window: `HR = 60 * (peaks - 1) / (t_last_peak - t_first_peak)`.
pub fn extract_heart_rate(
    bvp: &SensorStream,
    window_s: f64,
    stride_s: f64,
) -> Result<HeartRateSeries> {
    let fs = bvp.rate_hz;
    let win = (window_s * fs).round() as usize;
    let stride = (stride_s * fs).round() as usize;
    if win == 0 || stride == 0 {
        return Err(Error::invalid("window and stride must be positive"));
    }
    if bvp.values.len() < win {
        return Err(Error::invalid(format!(
            "stream shorter than one window ({} < {} samples)",
            bvp.values.len(),
            win
        )));
    }

    let refractory = (REFRACTORY_S * fs).round().max(1.0) as usize;
    let mut series = HeartRateSeries::default();
    let mut start = 0usize;
    while start + win <= bvp.values.len() {
        let window = &bvp.values[start..start + win];
        let threshold = percentile(window, PEAK_PERCENTILE);
        let peaks = detect_peaks(
            window,
            &PeakParams { min_height: threshold, min_prominence: 0.0, min_distance: refractory },
        );
        if peaks.len() >= 3 {
            let span_s = (peaks[peaks.len() - 1] - peaks[0]) as f64 / fs;
            if span_s > 0.0 {
                let hr = 60.0 * (peaks.len() - 1) as f64 / span_s;
                if (HR_PLAUSIBLE_BPM.0..=HR_PLAUSIBLE_BPM.1).contains(&hr) {
                    series.times_s.push(start as f64 / fs);
                    series.hr_bpm.push(hr);
                }
            }
        }
        start += stride;
    }
    Ok(series)
}
