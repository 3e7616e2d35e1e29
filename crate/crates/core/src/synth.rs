//! Deterministic synthetic-cohort generator with known ground truth.
//!
//! Trips are synthesized from per-minute profiles: a raised-cosine pulse
//! train for BVP, a slowly varying conductance baseline with planted SCR
//! bumps for EDA, piecewise-constant weather, a constant-heading GPS track,
//! and a planted linear model linking cohort-standardized weather/activity
//! drivers to the biomarkers. Everything derives from ChaCha streams seeded
//! per (cohort seed, subject), so a fixed seed reproduces byte-identical
//! output.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    Channel, Demographics, Phase, Season, SensorStream, SolarSample, TripRecord,
    MICROS_PER_SEC,
};
use crate::features::{hr_max_for_age, wbgt_from_weather};
use crate::{Error, Result};

/// Sensor noise levels (standard deviations in channel units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    pub bvp: f64,
    pub eda_us: f64,
    pub skin_c: f64,
    pub accel_ms2: f64,
    pub weather: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        // EDA noise stays well below the 0.01 uS SCR amplitude threshold so
        // planted event counts survive the round trip exactly.
        Self { bvp: 0.02, eda_us: 0.002, skin_c: 0.05, accel_ms2: 0.05, weather: 0.1 }
    }
}

/// Amplitude and width of planted skin conductance responses.
const SCR_BUMP_AMPLITUDE_US: f64 = 0.3;
const SCR_BUMP_SIGMA_S: f64 = 0.5;

/// Fully specified synthetic trip: one entry per ride minute in each
/// profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripSpec {
    pub participant_id: String,
    pub demographics: Demographics,
    pub start_year: i32,
    pub trip_month: u8,
    pub rest_minutes: u32,
    pub recovery_minutes: u32,
    /// Mean heart rate per ride minute, bpm.
    pub hr_profile_bpm: Vec<f64>,
    /// SCR events to plant per ride minute.
    pub scr_counts: Vec<u32>,
    /// Tonic conductance target per ride minute, uS.
    pub scl_profile_us: Vec<f64>,
    /// Skin temperature per ride minute, degrees C.
    pub skin_profile_c: Vec<f64>,
    pub t_air_profile_c: Vec<f64>,
    pub r_h_profile_pct: Vec<f64>,
    pub speed_profile_kmh: Vec<f64>,
    pub accel_profile_ms2: Vec<f64>,
    /// Hourly solar radiation over the trip, W/m^2.
    pub sr_wm2: f64,
    pub noise: NoiseLevels,
    pub seed: u64,
}

impl TripSpec {
    pub fn ride_minutes(&self) -> usize {
        self.hr_profile_bpm.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.hr_profile_bpm.len();
        let lens = [
            self.scr_counts.len(),
            self.scl_profile_us.len(),
            self.skin_profile_c.len(),
            self.t_air_profile_c.len(),
            self.r_h_profile_pct.len(),
            self.speed_profile_kmh.len(),
            self.accel_profile_ms2.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::invalid(format!(
                "inconsistent profile lengths: hr has {}, others {:?}",
                n, lens
            )));
        }
        if n == 0 {
            return Err(Error::invalid("empty ride profile"));
        }
        if !(1..=12).contains(&self.trip_month) {
            return Err(Error::invalid("trip_month out of range"));
        }
        Ok(())
    }
}

fn gauss(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).unwrap().sample(rng)
}

/// Raised-cosine pulse train following a per-minute rate profile.
fn synth_bvp(
    rng: &mut ChaCha8Rng,
    minute_rates_bpm: &[f64],
    fs: f64,
    noise: f64,
) -> Vec<f64> {
    let total_s = minute_rates_bpm.len() as f64 * 60.0;
    let n = (total_s * fs) as usize;
    let mut out = vec![0.0; n];
    let mut t_beat = 0.25;
    while t_beat < total_s {
        let minute = ((t_beat / 60.0) as usize).min(minute_rates_bpm.len() - 1);
        let period = 60.0 / minute_rates_bpm[minute];
        let width = 0.4 * period;
        let lo = ((t_beat - width / 2.0) * fs).floor().max(0.0) as usize;
        let hi = (((t_beat + width / 2.0) * fs).ceil() as usize).min(n);
        for k in lo..hi {
            let u = (k as f64 / fs - t_beat) / width;
            if u.abs() <= 0.5 {
                out[k] += 0.5 * (1.0 + (2.0 * PI * u).cos());
            }
        }
        t_beat += period;
    }
    for v in out.iter_mut() {
        *v += gauss(rng, noise);
    }
    out
}

/// Piecewise-linear interpolation through per-minute values placed at
/// minute centers.
fn interp_minutes(profile: &[f64], t_s: f64) -> f64 {
    let m = profile.len();
    let pos = t_s / 60.0 - 0.5;
    if pos <= 0.0 {
        return profile[0];
    }
    let idx = pos.floor() as usize;
    if idx + 1 >= m {
        return profile[m - 1];
    }
    let frac = pos - idx as f64;
    profile[idx] * (1.0 - frac) + profile[idx + 1] * frac
}

fn synth_eda(
    rng: &mut ChaCha8Rng,
    scl_profile: &[f64],
    scr_counts: &[u32],
    fs: f64,
    noise: f64,
) -> Vec<f64> {
    let minutes = scl_profile.len();
    let total_s = minutes as f64 * 60.0;
    let n = (total_s * fs) as usize;

    // Event times: evenly spaced inside each minute, away from the window
    // edges so zero-phase filtering cannot move a peak across a boundary.
    let mut events = Vec::new();
    for (m, &count) in scr_counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let usable = 50.0;
        let step = usable / count as f64;
        for k in 0..count {
            events.push(m as f64 * 60.0 + 5.0 + step * (k as f64 + 0.5));
        }
    }

    (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            let mut v = interp_minutes(scl_profile, t);
            for &e in &events {
                let d = t - e;
                if d.abs() < 4.0 * SCR_BUMP_SIGMA_S {
                    v += SCR_BUMP_AMPLITUDE_US
                        * (-d * d / (2.0 * SCR_BUMP_SIGMA_S * SCR_BUMP_SIGMA_S)).exp();
                }
            }
            v + gauss(rng, noise)
        })
        .collect()
}

fn piecewise_constant(
    rng: &mut ChaCha8Rng,
    profile: &[f64],
    fs: f64,
    noise: f64,
) -> Vec<f64> {
    let n = (profile.len() as f64 * 60.0 * fs) as usize;
    (0..n)
        .map(|k| {
            let minute = ((k as f64 / fs / 60.0) as usize).min(profile.len() - 1);
            profile[minute] + gauss(rng, noise)
        })
        .collect()
}

/// Degrees of latitude per km along a meridian.
const DEG_PER_KM: f64 = 1.0 / 111.194926644559;

fn synth_gps(speed_profile_kmh: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = (speed_profile_kmh.len() as f64 * 60.0 * fs) as usize;
    let mut lat = Vec::with_capacity(n);
    let mut lon = Vec::with_capacity(n);
    let mut cur = 23.75;
    for k in 0..n {
        lat.push(cur);
        lon.push(90.39);
        let minute = ((k as f64 / fs / 60.0) as usize).min(speed_profile_kmh.len() - 1);
        let km_per_step = speed_profile_kmh[minute] / 3600.0 / fs;
        cur += km_per_step * DEG_PER_KM;
    }
    (lat, lon)
}

/// Generates one synthetic trip with rest, ride, and recovery phases.
pub fn generate_trip(spec: &TripSpec) -> Result<TripRecord> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Mid-month morning start keeps the whole session in the target month.
    let month_start =
        crate::datamodel::us_of_year_month(spec.start_year as i64, spec.trip_month);
    let base_us = month_start + (13 * 24 + 9) * 3_600 * MICROS_PER_SEC;
    let rest_t0 = base_us;
    let ride_t0 = rest_t0 + spec.rest_minutes as i64 * 60 * MICROS_PER_SEC;
    let ride_minutes = spec.ride_minutes();
    let recovery_t0 = ride_t0 + ride_minutes as i64 * 60 * MICROS_PER_SEC;
    let end_us = recovery_t0 + spec.recovery_minutes as i64 * 60 * MICROS_PER_SEC;

    let hr_rest = spec.demographics.hr_rest;

    let mut phases = BTreeMap::new();

    // Rest and recovery: flat physiology around the resting baseline.
    for (phase, t0, minutes, hr) in [
        (Phase::Rest, rest_t0, spec.rest_minutes as usize, hr_rest),
        (Phase::Recovery, recovery_t0, spec.recovery_minutes as usize, hr_rest + 8.0),
    ] {
        if minutes == 0 {
            continue;
        }
        let hr_profile = vec![hr; minutes];
        let scl = vec![spec.scl_profile_us[0]; minutes];
        let skin = vec![spec.skin_profile_c[0]; minutes];
        let mut streams = BTreeMap::new();
        streams.insert(
            Channel::Bvp,
            SensorStream::new(Channel::Bvp, 64.0, t0, synth_bvp(&mut rng, &hr_profile, 64.0, spec.noise.bvp)),
        );
        streams.insert(
            Channel::Eda,
            SensorStream::new(
                Channel::Eda,
                4.0,
                t0,
                synth_eda(&mut rng, &scl, &vec![0; minutes], 4.0, spec.noise.eda_us),
            ),
        );
        streams.insert(
            Channel::SkinTemp,
            SensorStream::new(
                Channel::SkinTemp,
                1.0,
                t0,
                piecewise_constant(&mut rng, &skin, 1.0, spec.noise.skin_c),
            ),
        );
        phases.insert(phase, streams);
    }

    // Ride: every channel.
    let mut ride = BTreeMap::new();
    ride.insert(
        Channel::Bvp,
        SensorStream::new(
            Channel::Bvp,
            64.0,
            ride_t0,
            synth_bvp(&mut rng, &spec.hr_profile_bpm, 64.0, spec.noise.bvp),
        ),
    );
    ride.insert(
        Channel::Eda,
        SensorStream::new(
            Channel::Eda,
            4.0,
            ride_t0,
            synth_eda(&mut rng, &spec.scl_profile_us, &spec.scr_counts, 4.0, spec.noise.eda_us),
        ),
    );
    ride.insert(
        Channel::SkinTemp,
        SensorStream::new(
            Channel::SkinTemp,
            1.0,
            ride_t0,
            piecewise_constant(&mut rng, &spec.skin_profile_c, 1.0, spec.noise.skin_c),
        ),
    );
    ride.insert(
        Channel::AirTemp,
        SensorStream::new(
            Channel::AirTemp,
            1.0,
            ride_t0,
            piecewise_constant(&mut rng, &spec.t_air_profile_c, 1.0, spec.noise.weather),
        ),
    );
    ride.insert(
        Channel::RelHumidity,
        SensorStream::new(
            Channel::RelHumidity,
            1.0,
            ride_t0,
            piecewise_constant(&mut rng, &spec.r_h_profile_pct, 1.0, spec.noise.weather)
                .into_iter()
                .map(|v| v.clamp(0.0, 100.0))
                .collect(),
        ),
    );
    for (channel, profile) in [
        (Channel::AccelX, Some(&spec.accel_profile_ms2)),
        (Channel::AccelY, None),
        (Channel::AccelZ, None),
    ] {
        let values = match profile {
            Some(p) => piecewise_constant(&mut rng, p, 64.0, spec.noise.accel_ms2),
            None => {
                let n = (ride_minutes as f64 * 60.0 * 64.0) as usize;
                (0..n).map(|_| gauss(&mut rng, spec.noise.accel_ms2)).collect()
            }
        };
        ride.insert(channel, SensorStream::new(channel, 64.0, ride_t0, values));
    }
    let (lat, lon) = synth_gps(&spec.speed_profile_kmh, 1.0);
    ride.insert(Channel::GpsLat, SensorStream::new(Channel::GpsLat, 1.0, ride_t0, lat));
    ride.insert(Channel::GpsLon, SensorStream::new(Channel::GpsLon, 1.0, ride_t0, lon));
    phases.insert(Phase::Ride, ride);

    let first_hour = (rest_t0 - 3_600 * MICROS_PER_SEC).div_euclid(3_600 * MICROS_PER_SEC);
    let last_hour = (end_us + 3_600 * MICROS_PER_SEC).div_euclid(3_600 * MICROS_PER_SEC);
    let solar_radiation_wm2 = (first_hour..=last_hour)
        .map(|hour_utc| SolarSample { hour_utc, sr_wm2: spec.sr_wm2 })
        .collect();

    Ok(TripRecord {
        participant_id: spec.participant_id.clone(),
        demographics: spec.demographics.clone(),
        phases,
        trip_month: spec.trip_month,
        solar_radiation_wm2,
    })
}

/// One standardized planted coefficient: driver feature -> weight.
pub type PlantedEdge = (String, f64);

/// Planted linear model on cohort-standardized drivers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedModel {
    pub t_skin: Vec<PlantedEdge>,
    pub rcc: Vec<PlantedEdge>,
    pub scr_n: Vec<PlantedEdge>,
    pub scl: Vec<PlantedEdge>,
    /// Residual std on the standardized scale. The cardiac-cost residual is
    /// drawn once per subject (cumulative cardiac cost cannot absorb
    /// window-to-window white noise), the rest per window.
    pub noise_std: f64,
}

impl Default for PlantedModel {
    fn default() -> Self {
        Self {
            t_skin: vec![("t_wbgt".into(), 0.8), ("acc_m".into(), 0.2)],
            rcc: vec![("t_wbgt".into(), 0.35), ("age".into(), 0.3)],
            scr_n: vec![("t_wbgt".into(), 0.5), ("dst_c".into(), 0.3)],
            scl: vec![("t_wbgt".into(), 0.6), ("bmi".into(), 0.2)],
            noise_std: 0.5,
        }
    }
}

/// Output scale (mean, std) of each biomarker in original units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiomarkerScales {
    pub t_skin: (f64, f64),
    pub rcc: (f64, f64),
    pub scr_n: (f64, f64),
    pub scl: (f64, f64),
}

impl Default for BiomarkerScales {
    fn default() -> Self {
        Self {
            t_skin: (33.2, 1.2),
            rcc: (27.5, 7.0),
            scr_n: (10.0, 4.0),
            scl: (18.0, 5.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n: usize,
    pub seed: u64,
    pub start_year: i32,
    pub planted: PlantedModel,
    pub scales: BiomarkerScales,
    pub noise: NoiseLevels,
    /// Ride length range in minutes, inclusive.
    pub ride_minutes: (u32, u32),
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n: 100,
            seed: 7,
            start_year: 2024,
            planted: PlantedModel::default(),
            scales: BiomarkerScales::default(),
            noise: NoiseLevels::default(),
            ride_minutes: (12, 20),
        }
    }
}

/// Planted per-window values of one trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowTruth {
    pub window_index: u32,
    pub t_air: f64,
    pub r_h: f64,
    pub sr: f64,
    pub t_wbgt: f64,
    pub hr_bpm: f64,
    pub t_skin: f64,
    pub rcc: f64,
    pub scr_n: u32,
    pub scl: f64,
    pub speed: f64,
    pub acc_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripGroundTruth {
    pub participant_id: String,
    pub hr_rest: f64,
    pub hr_max: f64,
    pub trip_month: u8,
    pub windows: Vec<WindowTruth>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortGroundTruth {
    pub seed: u64,
    pub planted: PlantedModel,
    /// Cohort mean/std per driver used for the standardized planting.
    pub driver_stats: BTreeMap<String, (f64, f64)>,
    pub trips: Vec<TripGroundTruth>,
}

fn season_of_month(month: u8) -> Season {
    match month {
        3..=6 => Season::Summer,
        7..=10 => Season::Monsoon,
        _ => Season::Winter,
    }
}

fn derive_seed(seed: u64, lane: u64, index: u64) -> u64 {
    let mut z = seed ^ lane.rotate_left(17) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct SubjectDraft {
    id: String,
    demographics: Demographics,
    trip_month: u8,
    minutes: usize,
    t_air: Vec<f64>,
    r_h: Vec<f64>,
    sr: f64,
    speed: Vec<f64>,
    accel: Vec<f64>,
    // Derived drivers per window.
    t_wbgt: Vec<f64>,
    dst_c: Vec<f64>,
}

fn draw_subject(spec: &CohortSpec, i: usize) -> SubjectDraft {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 1, i as u64));
    let month = rng.random_range(1..=12u8);
    let season = season_of_month(month);
    let demographics = Demographics {
        age: (48.0 + gauss(&mut rng, 13.0)).clamp(25.0, 75.0),
        bmi: (20.6 + gauss(&mut rng, 2.8)).clamp(14.0, 32.0),
        sleep: (6.8 + gauss(&mut rng, 1.1)).clamp(3.0, 11.0),
        t_work: (10.0 + gauss(&mut rng, 2.0)).clamp(4.0, 16.0),
        hr_rest: (72.0 + gauss(&mut rng, 6.0)).clamp(55.0, 95.0),
        season,
    };
    let minutes = rng.random_range(spec.ride_minutes.0..=spec.ride_minutes.1) as usize;

    let (t_base, rh_base, sr_lo, sr_hi) = match season {
        Season::Summer => (33.0, 62.0, 350.0, 900.0),
        Season::Monsoon => (31.0, 80.0, 150.0, 650.0),
        Season::Winter => (24.0, 58.0, 250.0, 750.0),
    };
    let t0 = t_base + gauss(&mut rng, 3.0);
    let rh0 = (rh_base + gauss(&mut rng, 8.0)).clamp(35.0, 97.0);
    let t_slope = gauss(&mut rng, 0.03);
    let rh_slope = gauss(&mut rng, 0.08);
    let sr = rng.random_range(sr_lo..sr_hi);

    let mut t_air = Vec::with_capacity(minutes);
    let mut r_h = Vec::with_capacity(minutes);
    for k in 0..minutes {
        t_air.push(t0 + t_slope * k as f64 + gauss(&mut rng, 0.08));
        r_h.push((rh0 + rh_slope * k as f64 + gauss(&mut rng, 0.3)).clamp(30.0, 98.0));
    }

    let speed_base = (10.0 + gauss(&mut rng, 1.5)).clamp(5.0, 15.0);
    let speed: Vec<f64> = (0..minutes)
        .map(|_| (speed_base + gauss(&mut rng, 1.0)).clamp(3.0, 18.0))
        .collect();
    let accel_base = (5.0 + gauss(&mut rng, 1.0)).clamp(2.0, 9.0);
    let accel: Vec<f64> = (0..minutes)
        .map(|_| (accel_base + gauss(&mut rng, 0.3)).clamp(1.0, 10.0))
        .collect();

    let t_wbgt: Vec<f64> =
        (0..minutes).map(|k| wbgt_from_weather(sr, t_air[k], r_h[k])).collect();
    let mut dst_c = Vec::with_capacity(minutes);
    let mut acc = 0.0;
    for s in &speed {
        acc += s / 60.0;
        dst_c.push(acc);
    }

    SubjectDraft {
        id: format!("p{:03}", i),
        demographics,
        trip_month: month,
        minutes,
        t_air,
        r_h,
        sr,
        speed,
        accel,
        t_wbgt,
        dst_c,
    }
}

fn driver_value(draft: &SubjectDraft, name: &str, window: usize) -> Result<f64> {
    Ok(match name {
        "t_wbgt" => draft.t_wbgt[window],
        "t_air" => draft.t_air[window],
        "r_h" => draft.r_h[window],
        "speed" => draft.speed[window],
        "dst_c" => draft.dst_c[window],
        "acc_m" => draft.accel[window],
        "t_drive" => (window + 1) as f64,
        "age" => draft.demographics.age,
        "bmi" => draft.demographics.bmi,
        "sleep" => draft.demographics.sleep,
        "t_work" => draft.demographics.t_work,
        other => return Err(Error::invalid(format!("unknown planted driver {:?}", other))),
    })
}

/// Generates `n` trips with a planted weather/activity -> biomarker model
/// and returns the ground truth alongside.
pub fn generate_cohort(spec: &CohortSpec) -> Result<(Vec<TripRecord>, CohortGroundTruth)> {
    if spec.n < 4 {
        return Err(Error::invalid("cohort needs at least 4 subjects"));
    }

    let drafts: Vec<SubjectDraft> = (0..spec.n).map(|i| draw_subject(spec, i)).collect();

    // Cohort statistics of every driver the planted model references.
    let mut driver_names: Vec<String> = Vec::new();
    for edges in [&spec.planted.t_skin, &spec.planted.rcc, &spec.planted.scr_n, &spec.planted.scl]
    {
        for (name, _) in edges {
            if !driver_names.contains(name) {
                driver_names.push(name.clone());
            }
        }
    }
    let mut driver_stats: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for name in &driver_names {
        let mut values = Vec::new();
        for d in &drafts {
            for w in 0..d.minutes {
                values.push(driver_value(d, name, w)?);
            }
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        driver_stats.insert(name.clone(), (mean, std));
    }

    let planted_z = |draft: &SubjectDraft,
                     edges: &[PlantedEdge],
                     window: usize|
     -> Result<f64> {
        let mut z = 0.0;
        for (name, beta) in edges {
            let (mean, std) = driver_stats[name];
            z += beta * (driver_value(draft, name, window)? - mean) / std;
        }
        Ok(z)
    };

    let mut trips = Vec::with_capacity(spec.n);
    let mut truths = Vec::with_capacity(spec.n);

    for (i, draft) in drafts.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 2, i as u64));
        let hr_rest = draft.demographics.hr_rest;
        let hr_max = hr_max_for_age(draft.demographics.age);
        let reserve = hr_max - hr_rest;

        let rcc_subject_noise = gauss(&mut rng, spec.planted.noise_std);

        let mut windows = Vec::with_capacity(draft.minutes);
        let mut hr_profile = Vec::with_capacity(draft.minutes);
        let mut skin_profile = Vec::with_capacity(draft.minutes);
        let mut scl_profile = Vec::with_capacity(draft.minutes);
        let mut scr_counts = Vec::with_capacity(draft.minutes);
        let mut prev_cumulative = 0.0;

        for w in 0..draft.minutes {
            let z_skin = planted_z(draft, &spec.planted.t_skin, w)?
                + gauss(&mut rng, spec.planted.noise_std);
            let t_skin = spec.scales.t_skin.0 + spec.scales.t_skin.1 * z_skin;

            let z_rcc = planted_z(draft, &spec.planted.rcc, w)? + rcc_subject_noise;
            let rcc = (spec.scales.rcc.0 + spec.scales.rcc.1 * z_rcc).clamp(2.0, 70.0);

            let z_scr = planted_z(draft, &spec.planted.scr_n, w)?
                + gauss(&mut rng, spec.planted.noise_std);
            let scr =
                (spec.scales.scr_n.0 + spec.scales.scr_n.1 * z_scr).round().clamp(0.0, 18.0)
                    as u32;

            let z_scl = planted_z(draft, &spec.planted.scl, w)?
                + gauss(&mut rng, spec.planted.noise_std);
            let scl = (spec.scales.scl.0 + spec.scales.scl.1 * z_scl).clamp(1.0, 60.0);

            // Invert the cumulative cardiac-cost definition to a per-minute
            // heart rate.
            let cumulative = (w + 1) as f64 * (hr_rest + rcc / 100.0 * reserve);
            let hr = (cumulative - prev_cumulative).clamp(58.0, 172.0);
            prev_cumulative += hr;

            hr_profile.push(hr);
            skin_profile.push(t_skin);
            scl_profile.push(scl);
            scr_counts.push(scr);
            windows.push(WindowTruth {
                window_index: w as u32,
                t_air: draft.t_air[w],
                r_h: draft.r_h[w],
                sr: draft.sr,
                t_wbgt: draft.t_wbgt[w],
                hr_bpm: hr,
                t_skin,
                // The achieved cumulative cost after clamping.
                rcc: (prev_cumulative / (w + 1) as f64 - hr_rest) / reserve * 100.0,
                scr_n: scr,
                scl,
                speed: draft.speed[w],
                acc_m: draft.accel[w],
            });
        }

        let trip_spec = TripSpec {
            participant_id: draft.id.clone(),
            demographics: draft.demographics.clone(),
            start_year: spec.start_year,
            trip_month: draft.trip_month,
            rest_minutes: 6,
            recovery_minutes: 5,
            hr_profile_bpm: hr_profile,
            scr_counts,
            scl_profile_us: scl_profile,
            skin_profile_c: skin_profile,
            t_air_profile_c: draft.t_air.clone(),
            r_h_profile_pct: draft.r_h.clone(),
            speed_profile_kmh: draft.speed.clone(),
            accel_profile_ms2: draft.accel.clone(),
            sr_wm2: draft.sr,
            noise: spec.noise,
            seed: derive_seed(spec.seed, 3, i as u64),
        };
        trips.push(generate_trip(&trip_spec)?);
        truths.push(TripGroundTruth {
            participant_id: draft.id.clone(),
            hr_rest,
            hr_max,
            trip_month: draft.trip_month,
            windows,
        });
    }

    Ok((
        trips,
        CohortGroundTruth {
            seed: spec.seed,
            planted: spec.planted.clone(),
            driver_stats,
            trips: truths,
        },
    ))
}

/// Synthetic climate-ensemble fixture: seasonal cycle plus per-scenario
/// linear warming and per-model offsets, monthly 2023..=2100.
pub fn generate_ensemble_fixture(
    models: &[&str],
    seed: u64,
) -> crate::climate::ClimateEnsemble {
    use crate::climate::{ClimateRecord, Ssp};
    let mut records = Vec::new();
    for (mi, model) in models.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4, mi as u64));
        let model_offset = gauss(&mut rng, 0.4);
        let model_rate_scale = 1.0 + gauss(&mut rng, 0.2);
        for ssp in Ssp::all() {
            let per_century = match ssp {
                Ssp::Ssp126 => 1.2,
                Ssp::Ssp245 => 2.5,
                Ssp::Ssp370 => 4.0,
                Ssp::Ssp585 => 5.5,
            } * model_rate_scale;
            for year in 2023..=2100 {
                for month in 1..=12u8 {
                    let seasonal = 4.0 * ((month as f64 - 1.0) / 12.0 * 2.0 * PI - 1.0).sin();
                    let warming = per_century * (year - 2023) as f64 / 77.0;
                    records.push(ClimateRecord {
                        model: model.to_string(),
                        ssp,
                        year,
                        month,
                        tas_c: 26.0 + model_offset + seasonal + warming,
                        hurs_pct: (72.0 - 0.02 * (year - 2023) as f64
                            + 6.0 * ((month as f64) / 12.0 * 2.0 * PI).cos())
                        .clamp(0.0, 100.0),
                        rsds_wm2: 470.0
                            + 40.0 * ((month as f64 - 0.5) / 12.0 * 2.0 * PI).sin()
                            + 0.05 * (year - 2023) as f64,
                    });
                }
            }
        }
    }
    crate::climate::ClimateEnsemble::from_records(records).expect("fixture is valid")
}
