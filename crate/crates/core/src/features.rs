//! One-minute windowed feature extraction: the wet bulb globe temperature
//! chain, cardiac cost, electrodermal summaries, and GPS/accelerometer
//! activity features.
//!
//! Windows are non-overlapping one-minute intervals over the ride phase;
//! `t_drive` for window k is k+1 minutes and cardiac cost is cumulative from
//! ride start through the window end.

use std::f64::consts::PI;

use crate::datamodel::{
    Channel, FeatureRow, FeatureTable, Phase, RowContext, SensorStream, TripRecord,
    MICROS_PER_SEC,
};
use crate::dsp::{self, HeartRateSeries};
use crate::{Error, Result};

/// Globe temperature coefficients: T_g as an affine function of solar
/// radiation, air temperature and relative humidity.
pub const GLOBE_SR_COEF: f64 = 0.009624;
pub const GLOBE_TAIR_COEF: f64 = 1.102;
pub const GLOBE_RH_COEF: f64 = -0.00404;
pub const GLOBE_INTERCEPT: f64 = -2.2776;

/// WBGT weights over (natural wet bulb, air, globe) temperatures.
pub const WBGT_WEIGHTS: (f64, f64, f64) = (0.7, 0.1, 0.2);

/// Mean Earth radius used for haversine distances, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Estimated globe temperature in degrees C.
pub fn globe_temperature(sr_wm2: f64, t_air_c: f64, r_h_pct: f64) -> f64 {
    GLOBE_SR_COEF * sr_wm2 + GLOBE_TAIR_COEF * t_air_c + GLOBE_RH_COEF * r_h_pct + GLOBE_INTERCEPT
}

/// Validity box of the Stull (2011) wet-bulb approximation.
const STULL_T_RANGE_C: (f64, f64) = (-20.0, 50.0);
const STULL_RH_RANGE_PCT: (f64, f64) = (5.0, 99.0);

/// Natural wet bulb temperature from air temperature and relative humidity,
/// via Stull's empirical fit. Inputs outside the fit's validity range are
/// clamped; the returned flag reports whether clamping occurred.
pub fn natural_wet_bulb_checked(t_air_c: f64, r_h_pct: f64) -> (f64, bool) {
    let t = t_air_c.clamp(STULL_T_RANGE_C.0, STULL_T_RANGE_C.1);
    let rh = r_h_pct.clamp(STULL_RH_RANGE_PCT.0, STULL_RH_RANGE_PCT.1);
    let clamped = t != t_air_c || rh != r_h_pct;
    let tw = t * (0.151977 * (rh + 8.313659).sqrt()).atan() + (t + rh).atan()
        - (rh - 1.676331).atan()
        + 0.00391838 * rh.powf(1.5) * (0.023101 * rh).atan()
        - 4.686035;
    // The wet bulb cannot exceed the dry bulb for r_h <= 100.
    (tw.min(t_air_c), clamped)
}

/// Natural wet bulb temperature; see [`natural_wet_bulb_checked`].
pub fn natural_wet_bulb(t_air_c: f64, r_h_pct: f64) -> f64 {
    natural_wet_bulb_checked(t_air_c, r_h_pct).0
}

/// Wet bulb globe temperature as the weighted sum of its components.
pub fn wbgt(t_w_c: f64, t_air_c: f64, t_g_c: f64) -> f64 {
    WBGT_WEIGHTS.0 * t_w_c + WBGT_WEIGHTS.1 * t_air_c + WBGT_WEIGHTS.2 * t_g_c
}

/// Full WBGT chain from the raw weather inputs.
pub fn wbgt_from_weather(sr_wm2: f64, t_air_c: f64, r_h_pct: f64) -> f64 {
    let t_g = globe_temperature(sr_wm2, t_air_c, r_h_pct);
    let t_w = natural_wet_bulb(t_air_c, r_h_pct);
    wbgt(t_w, t_air_c, t_g)
}

/// One window's weather summary with the derived temperature chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherSample {
    pub t_air_c: f64,
    pub r_h_pct: f64,
    pub sr_wm2: f64,
    pub t_w_c: f64,
    pub t_g_c: f64,
    pub t_wbgt_c: f64,
}

impl WeatherSample {
    pub fn from_inputs(t_air_c: f64, r_h_pct: f64, sr_wm2: f64) -> Self {
        let t_g_c = globe_temperature(sr_wm2, t_air_c, r_h_pct);
        let t_w_c = natural_wet_bulb(t_air_c, r_h_pct);
        let t_wbgt_c = wbgt(t_w_c, t_air_c, t_g_c);
        Self { t_air_c, r_h_pct, sr_wm2, t_w_c, t_g_c, t_wbgt_c }
    }
}

/// Net cardiac cost in beats: working beats summed per minute minus the
/// resting rate over the same period.
pub fn ncc(hr_series: &HeartRateSeries, hr_rest_bpm: f64, period_min: u32) -> Result<f64> {
    if period_min == 0 {
        return Err(Error::invalid("period must be positive"));
    }
    if hr_series.is_empty() {
        return Err(Error::invalid("empty heart-rate series"));
    }
    let mut working = 0.0;
    for m in 0..period_min {
        let start = m as f64 * 60.0;
        let mean = hr_series.mean_in(start, start + 60.0).ok_or_else(|| {
            Error::invalid(format!("no heart-rate samples in minute {}", m + 1))
        })?;
        working += mean;
    }
    Ok(working - hr_rest_bpm * period_min as f64)
}

/// Relative cardiac cost: percentage of the heart-rate reserve consumed.
pub fn rcc(ncc_beats: f64, hr_max_bpm: f64, hr_rest_bpm: f64, period_min: u32) -> Result<f64> {
    if hr_max_bpm <= hr_rest_bpm {
        return Err(Error::invalid(format!(
            "hr_max {} must exceed hr_rest {}",
            hr_max_bpm, hr_rest_bpm
        )));
    }
    if period_min == 0 {
        return Err(Error::invalid("period must be positive"));
    }
    Ok(ncc_beats / ((hr_max_bpm - hr_rest_bpm) * period_min as f64) * 100.0)
}

/// Age-predicted maximum heart rate.
pub fn hr_max_for_age(age_years: f64) -> f64 {
    220.0 - age_years
}

/// Great-circle distance between two lat/lon points, km.
pub fn haversine_km(lat1_deg: f64, lon1_deg: f64, lat2_deg: f64, lon2_deg: f64) -> f64 {
    let to_rad = PI / 180.0;
    let phi1 = lat1_deg * to_rad;
    let phi2 = lat2_deg * to_rad;
    let dphi = (lat2_deg - lat1_deg) * to_rad;
    let dlambda = (lon2_deg - lon1_deg) * to_rad;
    let a = (dphi / 2.0).sin().powi(2)
        + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Activity features of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityWindow {
    /// Mean speed within the window, km/h; `None` with fewer than 2 fixes.
    pub speed_kmh: Option<f64>,
    /// Cumulative distance from ride start through the window end, km.
    pub dst_c_km: f64,
    /// Mean acceleration magnitude, m/s^2.
    pub acc_m_ms2: f64,
    /// Minutes elapsed since ride start at the window end.
    pub t_drive_min: f64,
}

/// Cumulative per-second haversine distances over a GPS track, km.
///
/// `cum[k]` is the distance covered through fix `k`.
pub fn cumulative_distance_km(lat: &[f64], lon: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(lat.len());
    let mut acc = 0.0;
    for k in 0..lat.len() {
        if k > 0 {
            acc += haversine_km(lat[k - 1], lon[k - 1], lat[k], lon[k]);
        }
        cum.push(acc);
    }
    cum
}

/// Mean magnitude of the 3-axis acceleration over aligned samples.
pub fn mean_accel_magnitude(x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let n = x.len().min(y.len()).min(z.len());
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = (0..n)
        .map(|k| (x[k] * x[k] + y[k] * y[k] + z[k] * z[k]).sqrt())
        .sum();
    sum / n as f64
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Intermediate per-trip signals shared by all windows.
struct RideSignals {
    hr: HeartRateSeries,
    tonic: SensorStream,
    scr_times_s: Vec<f64>,
    skin: SensorStream,
    air: SensorStream,
    hum: SensorStream,
    lat: SensorStream,
    accel: [SensorStream; 3],
    cum_dist_km: Vec<f64>,
    hr_rest_bpm: f64,
    ride_t0_us: i64,
}

fn require<'a>(
    trip: &'a TripRecord,
    phase: Phase,
    channel: Channel,
) -> Result<&'a SensorStream> {
    trip.stream(phase, channel).ok_or_else(|| {
        Error::invalid(format!("{}: missing {} stream", phase.as_str(), channel.as_str()))
    })
}

/// Resting heart rate: mean extracted HR over the rest phase when a rest
/// BVP recording exists, otherwise the value recorded in demographics.
fn resting_heart_rate(trip: &TripRecord) -> Result<f64> {
    if let Some(rest_bvp) = trip.stream(Phase::Rest, Channel::Bvp) {
        let filtered = dsp::filter_bvp(rest_bvp)?;
        if let Ok(hr) = dsp::extract_heart_rate(&filtered, 10.0, 1.0) {
            if !hr.is_empty() {
                return Ok(hr.hr_bpm.iter().sum::<f64>() / hr.len() as f64);
            }
        }
        log::warn!(
            "{}: rest BVP yielded no heart-rate samples; using demographics hr_rest",
            trip.participant_id
        );
    }
    Ok(trip.demographics.hr_rest)
}

fn prepare_signals(trip: &TripRecord) -> Result<RideSignals> {
    let bvp = require(trip, Phase::Ride, Channel::Bvp)?;
    let eda = require(trip, Phase::Ride, Channel::Eda)?;
    let filtered_bvp = dsp::filter_bvp(bvp)?;
    let filtered_eda = dsp::filter_eda(eda)?;
    let hr = dsp::extract_heart_rate(&filtered_bvp, 10.0, 1.0)?;
    let decomposition = dsp::decompose_eda(&filtered_eda)?;

    let lat = require(trip, Phase::Ride, Channel::GpsLat)?.clone();
    let lon = require(trip, Phase::Ride, Channel::GpsLon)?;
    let cum_dist_km = cumulative_distance_km(&lat.values, &lon.values);

    Ok(RideSignals {
        hr,
        scr_times_s: decomposition.scr_events.iter().map(|e| e.time_s).collect(),
        tonic: decomposition.scl_series,
        skin: require(trip, Phase::Ride, Channel::SkinTemp)?.clone(),
        air: require(trip, Phase::Ride, Channel::AirTemp)?.clone(),
        hum: require(trip, Phase::Ride, Channel::RelHumidity)?.clone(),
        accel: [
            require(trip, Phase::Ride, Channel::AccelX)?.clone(),
            require(trip, Phase::Ride, Channel::AccelY)?.clone(),
            require(trip, Phase::Ride, Channel::AccelZ)?.clone(),
        ],
        ride_t0_us: bvp.t0_us,
        lat,
        cum_dist_km,
        hr_rest_bpm: resting_heart_rate(trip)?,
    })
}

/// Extracts one [`FeatureRow`] per complete ride minute.
///
/// Windows missing a mandatory signal (heart rate, GPS speed) are dropped
/// with a warning. Cardiac cost uses the cumulative interval from ride start
/// through the window end.
pub fn window_features(trip: &TripRecord) -> Result<FeatureTable> {
    let signals = prepare_signals(trip)?;
    let d = &trip.demographics;
    let hr_max = hr_max_for_age(d.age);
    if hr_max <= signals.hr_rest_bpm {
        return Err(Error::invalid(format!(
            "{}: hr_max {} not above hr_rest {}",
            trip.participant_id, hr_max, signals.hr_rest_bpm
        )));
    }

    let ride_minutes = (signals.skin.duration_s() / 60.0).floor() as u32;
    let mut rows = Vec::new();
    let mut context = Vec::new();
    let mut cumulative_working_hr = 0.0;

    for w in 0..ride_minutes {
        let start_s = w as f64 * 60.0;
        let end_s = start_s + 60.0;

        let hr_mean = match signals.hr.mean_in(start_s, end_s) {
            Some(v) => v,
            None => {
                log::warn!(
                    "{}: window {} dropped (no heart-rate samples)",
                    trip.participant_id,
                    w
                );
                continue;
            }
        };
        cumulative_working_hr += hr_mean;

        let period_min = w + 1;
        let ncc_beats = cumulative_working_hr - signals.hr_rest_bpm * period_min as f64;
        let rcc_pct = rcc(ncc_beats, hr_max, signals.hr_rest_bpm, period_min)?;

        let t_air = match mean(signals.air.window(start_s, end_s)) {
            Some(v) => v,
            None => {
                log::warn!("{}: window {} dropped (no air temp)", trip.participant_id, w);
                continue;
            }
        };
        let r_h = match mean(signals.hum.window(start_s, end_s)) {
            Some(v) => v,
            None => {
                log::warn!("{}: window {} dropped (no humidity)", trip.participant_id, w);
                continue;
            }
        };
        let t_skin = match mean(signals.skin.window(start_s, end_s)) {
            Some(v) => v,
            None => {
                log::warn!("{}: window {} dropped (no skin temp)", trip.participant_id, w);
                continue;
            }
        };

        // Solar radiation: reanalysis value of the hour containing the
        // window start, held constant within the hour.
        let window_t_us = signals.ride_t0_us + (start_s * MICROS_PER_SEC as f64) as i64;
        let sr = match trip.solar_at(window_t_us) {
            Some(v) => v,
            None => {
                log::warn!("{}: window {} dropped (no solar hour)", trip.participant_id, w);
                continue;
            }
        };
        let weather = WeatherSample::from_inputs(t_air, r_h, sr);

        // GPS fixes in the window; cumulative distance through the last fix.
        let fs_gps = signals.lat.rate_hz;
        let lo = (start_s * fs_gps).ceil() as usize;
        let hi = ((end_s * fs_gps).ceil() as usize).min(signals.lat.values.len());
        if hi.saturating_sub(lo) < 2 {
            log::warn!(
                "{}: window {} dropped (fewer than 2 GPS fixes)",
                trip.participant_id,
                w
            );
            continue;
        }
        let window_km = signals.cum_dist_km[hi - 1] - signals.cum_dist_km[lo];
        let window_hours = (hi - 1 - lo) as f64 / fs_gps / 3600.0;
        let speed_kmh = if window_hours > 0.0 { window_km / window_hours } else { 0.0 };
        let dst_c = signals.cum_dist_km[hi - 1];

        let acc_m = mean_accel_magnitude(
            signals.accel[0].window(start_s, end_s),
            signals.accel[1].window(start_s, end_s),
            signals.accel[2].window(start_s, end_s),
        );

        let scr_in_window =
            signals.scr_times_s.iter().filter(|t| **t >= start_s && **t < end_s).count();
        let scl = match mean(signals.tonic.window(start_s, end_s)) {
            Some(v) => v,
            None => {
                log::warn!("{}: window {} dropped (no EDA)", trip.participant_id, w);
                continue;
            }
        };

        rows.push(FeatureRow {
            participant_id: trip.participant_id.clone(),
            window_index: w,
            t_air: weather.t_air_c,
            r_h: weather.r_h_pct,
            t_wbgt: weather.t_wbgt_c,
            t_skin,
            rcc: rcc_pct,
            scr_n: scr_in_window as f64,
            scl,
            speed: speed_kmh,
            dst_c,
            acc_m,
            t_drive: period_min as f64,
            age: d.age,
            bmi: d.bmi,
            sleep: d.sleep,
            t_work: d.t_work,
        });
        context.push(RowContext {
            participant_id: trip.participant_id.clone(),
            window_index: w,
            trip_month: trip.trip_month,
            sr_wm2: sr,
            season: d.season,
        });
    }

    FeatureTable::new(rows, context)
}

/// Runs [`window_features`] over many trips, in parallel, with a
/// deterministic (participant, window) output ordering.
pub fn extract_features(trips: &[TripRecord]) -> Result<FeatureTable> {
    use rayon::prelude::*;
    let tables: Vec<Result<FeatureTable>> =
        trips.par_iter().map(window_features).collect();
    let mut rows = Vec::new();
    let mut context = Vec::new();
    for t in tables {
        let t = t?;
        rows.extend(t.rows);
        context.extend(t.context);
    }
    let mut table = FeatureTable::new(rows, context)?;
    table.sort();
    Ok(table)
}
