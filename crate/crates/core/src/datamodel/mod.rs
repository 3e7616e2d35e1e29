//! Canonical in-memory representation of sensor streams, trips, feature
//! tables and subject splits, with physical-plausibility validation.
//!
//! Timestamps are integer microseconds since the Unix epoch; per-channel
//! sample times derive as `t0 + k / rate_hz`, which avoids float drift over
//! hour-long sessions. All types are immutable after validation and safe to
//! share read-only across workers.

mod io;

pub use io::{
    load_feature_table, load_trip, load_trips, store_trip, write_feature_table, GPS_HEADER,
    STREAM_HEADER,
};
pub(crate) use io::us_of_year_month;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MICROS_PER_SEC: i64 = 1_000_000;

/// One physical sensor channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Bvp,
    Eda,
    SkinTemp,
    AccelX,
    AccelY,
    AccelZ,
    GpsLat,
    GpsLon,
    AirTemp,
    RelHumidity,
}

impl Channel {
    /// Nominal sampling rate in Hz for this channel.
    pub fn nominal_rate_hz(self) -> f64 {
        match self {
            Channel::Bvp | Channel::AccelX | Channel::AccelY | Channel::AccelZ => 64.0,
            Channel::Eda => 4.0,
            Channel::SkinTemp
            | Channel::GpsLat
            | Channel::GpsLon
            | Channel::AirTemp
            | Channel::RelHumidity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Bvp => "bvp",
            Channel::Eda => "eda",
            Channel::SkinTemp => "skin_temp",
            Channel::AccelX => "accel_x",
            Channel::AccelY => "accel_y",
            Channel::AccelZ => "accel_z",
            Channel::GpsLat => "gps_lat",
            Channel::GpsLon => "gps_lon",
            Channel::AirTemp => "air_temp",
            Channel::RelHumidity => "rel_humidity",
        }
    }

    pub fn all() -> [Channel; 10] {
        [
            Channel::Bvp,
            Channel::Eda,
            Channel::SkinTemp,
            Channel::AccelX,
            Channel::AccelY,
            Channel::AccelZ,
            Channel::GpsLat,
            Channel::GpsLon,
            Channel::AirTemp,
            Channel::RelHumidity,
        ]
    }
}

/// One channel of timestamped samples at a fixed nominal rate.
///
/// Sample `k` is located at `t0_us + round(k / rate_hz * 1e6)` microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStream {
    pub channel: Channel,
    pub rate_hz: f64,
    /// UTC timestamp of the first sample, microseconds since epoch.
    pub t0_us: i64,
    pub values: Vec<f64>,
}

impl SensorStream {
    pub fn new(channel: Channel, rate_hz: f64, t0_us: i64, values: Vec<f64>) -> Self {
        Self { channel, rate_hz, t0_us, values }
    }

    /// Duration covered by the samples, in seconds.
    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.rate_hz
    }

    /// Time of sample `k` in seconds relative to `t0_us`.
    pub fn sample_time_s(&self, k: usize) -> f64 {
        k as f64 / self.rate_hz
    }

    /// End timestamp (exclusive) in microseconds since epoch.
    pub fn end_us(&self) -> i64 {
        self.t0_us + (self.values.len() as f64 / self.rate_hz * MICROS_PER_SEC as f64) as i64
    }

    /// Slice of samples falling in `[start_s, end_s)` relative to t0.
    pub fn window(&self, start_s: f64, end_s: f64) -> &[f64] {
        let lo = (start_s * self.rate_hz).ceil().max(0.0) as usize;
        let hi = ((end_s * self.rate_hz).ceil() as usize).min(self.values.len());
        if lo >= hi {
            &[]
        } else {
            &self.values[lo..hi]
        }
    }
}

/// Trip phase within a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Rest,
    Ride,
    Recovery,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Rest => "rest",
            Phase::Ride => "ride",
            Phase::Recovery => "recovery",
        }
    }

    pub fn all() -> [Phase; 3] {
        [Phase::Rest, Phase::Ride, Phase::Recovery]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Summer,
    Winter,
    Monsoon,
}

impl Season {
    pub fn as_str(self) -> &'static str {
        match self {
            Season::Summer => "summer",
            Season::Winter => "winter",
            Season::Monsoon => "monsoon",
        }
    }
}

/// Static participant characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    /// Age in years.
    pub age: f64,
    /// Body mass index, kg/m^2.
    pub bmi: f64,
    /// Daily sleep duration, hours.
    pub sleep: f64,
    /// Daily outdoor work hours.
    pub t_work: f64,
    /// Resting heart rate measured during the pre-trip rest, beats/min.
    pub hr_rest: f64,
    pub season: Season,
}

/// One hourly solar radiation sample from the reanalysis input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarSample {
    /// Hours since the Unix epoch.
    pub hour_utc: i64,
    /// Downward shortwave radiation, W/m^2.
    pub sr_wm2: f64,
}

/// One participant's session: demographics plus phase-labeled streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripRecord {
    pub participant_id: String,
    pub demographics: Demographics,
    pub phases: BTreeMap<Phase, BTreeMap<Channel, SensorStream>>,
    /// Calendar month of the trip, 1-12.
    pub trip_month: u8,
    /// Hourly solar radiation aligned to the trip.
    pub solar_radiation_wm2: Vec<SolarSample>,
}

impl TripRecord {
    pub fn stream(&self, phase: Phase, channel: Channel) -> Option<&SensorStream> {
        self.phases.get(&phase).and_then(|m| m.get(&channel))
    }

    /// Solar radiation for the hour containing `t_us`, if covered.
    pub fn solar_at(&self, t_us: i64) -> Option<f64> {
        let hour = t_us.div_euclid(3_600 * MICROS_PER_SEC);
        self.solar_radiation_wm2
            .iter()
            .find(|s| s.hour_utc == hour)
            .map(|s| s.sr_wm2)
    }
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fatal,
    Violation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

/// Result of [`validate_trip`]: the trip is accepted iff the report is empty.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_fatal(&self) -> bool {
        self.violations.iter().any(|v| v.severity == Severity::Fatal)
    }

    fn push(&mut self, severity: Severity, message: impl Into<String>) {
        self.violations.push(Violation { severity, message: message.into() });
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| v.message.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

const MIN_RIDE_S: f64 = 5.0 * 60.0;
const PHASE_ALIGN_TOL_US: i64 = 2 * MICROS_PER_SEC;

/// Checks every datamodel invariant and lists each violation found.
pub fn validate_trip(trip: &TripRecord) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = &trip.demographics;

    if !(18.0..=100.0).contains(&d.age) {
        report.push(Severity::Violation, format!("age {} out of [18,100]", d.age));
    }
    if !(10.0..=60.0).contains(&d.bmi) {
        report.push(Severity::Violation, format!("bmi {} out of [10,60]", d.bmi));
    }
    if !(0.0..=16.0).contains(&d.sleep) {
        report.push(Severity::Violation, format!("sleep {} out of [0,16]", d.sleep));
    }
    if !(0.0..=24.0).contains(&d.t_work) {
        report.push(Severity::Violation, format!("t_work {} out of [0,24]", d.t_work));
    }
    if !(30.0..=140.0).contains(&d.hr_rest) {
        report.push(Severity::Violation, format!("hr_rest {} out of [30,140]", d.hr_rest));
    }
    if !(1..=12).contains(&trip.trip_month) {
        report.push(Severity::Violation, format!("trip_month {} out of [1,12]", trip.trip_month));
    }

    for (phase, streams) in &trip.phases {
        for (channel, s) in streams {
            if *channel != s.channel {
                report.push(
                    Severity::Violation,
                    format!("{}/{}: channel label mismatch", phase.as_str(), channel.as_str()),
                );
            }
            let nominal = s.channel.nominal_rate_hz();
            if (s.rate_hz - nominal).abs() > 0.01 * nominal {
                report.push(
                    Severity::Violation,
                    format!(
                        "{}/{}: rate {} Hz deviates >1% from nominal {} Hz",
                        phase.as_str(),
                        channel.as_str(),
                        s.rate_hz,
                        nominal
                    ),
                );
            }
            if let Some(idx) = s.values.iter().position(|v| !v.is_finite()) {
                report.push(
                    Severity::Fatal,
                    format!(
                        "{}/{}: non-finite sample at index {}",
                        phase.as_str(),
                        channel.as_str(),
                        idx
                    ),
                );
            }
            if (s.values.len() as f64) < s.rate_hz * 60.0 {
                report.push(
                    Severity::Violation,
                    format!(
                        "{}/{}: only {} samples, below one analysis window",
                        phase.as_str(),
                        channel.as_str(),
                        s.values.len()
                    ),
                );
            }
            if s.channel == Channel::RelHumidity {
                if let Some(idx) =
                    s.values.iter().position(|v| v.is_finite() && !(0.0..=100.0).contains(v))
                {
                    report.push(
                        Severity::Violation,
                        format!(
                            "{}: r_h out of [0,100] at index {} (value {})",
                            phase.as_str(),
                            idx,
                            s.values[idx]
                        ),
                    );
                }
            }
        }

        // All streams in a phase must cover the same wall-clock interval.
        let mut starts: Vec<i64> = streams.values().map(|s| s.t0_us).collect();
        let mut ends: Vec<i64> = streams.values().map(|s| s.end_us()).collect();
        starts.sort_unstable();
        ends.sort_unstable();
        if let (Some(&s0), Some(&s1)) = (starts.first(), starts.last()) {
            if s1 - s0 > PHASE_ALIGN_TOL_US {
                report.push(
                    Severity::Violation,
                    format!("{}: stream starts differ by more than 2 s", phase.as_str()),
                );
            }
        }
        if let (Some(&e0), Some(&e1)) = (ends.first(), ends.last()) {
            if e1 - e0 > PHASE_ALIGN_TOL_US {
                report.push(
                    Severity::Violation,
                    format!("{}: stream ends differ by more than 2 s", phase.as_str()),
                );
            }
        }
    }

    match trip.phases.get(&Phase::Ride) {
        None => report.push(Severity::Fatal, "missing ride phase".to_string()),
        Some(streams) => {
            let dur = streams.values().map(|s| s.duration_s()).fold(f64::INFINITY, f64::min);
            if streams.is_empty() {
                report.push(Severity::Fatal, "ride phase has no streams".to_string());
            } else if dur < MIN_RIDE_S {
                report.push(
                    Severity::Violation,
                    format!("ride < 5 min ({:.1} s)", dur),
                );
            }
        }
    }

    if let Some(s) = trip.solar_radiation_wm2.iter().find(|s| !(s.sr_wm2 >= 0.0)) {
        report.push(
            Severity::Violation,
            format!("solar radiation negative at hour {} ({})", s.hour_utc, s.sr_wm2),
        );
    }

    report
}

/// Disjoint train/validation/test participant sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectSplit {
    pub train_ids: BTreeSet<String>,
    pub valid_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

impl SubjectSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train_ids.len(), self.valid_ids.len(), self.test_ids.len())
    }
}

/// Largest-remainder apportionment of `total` into parts proportional to `ratios`.
fn largest_remainder(total: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    // Ties go to the earlier set (train before valid before test).
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in 0..(total - assigned) {
        counts[order[i % ratios.len()]] += 1;
    }
    counts
}

/// Deterministic subject-wise split into train/validation/test.
///
/// Ids are shuffled with a ChaCha stream seeded by `seed`, then sliced by
/// largest-remainder counts from `ratios`.
pub fn split_subjects(ids: &[String], ratios: (f64, f64, f64), seed: u64) -> Result<SubjectSplit> {
    if ids.len() < 4 {
        return Err(Error::invalid(format!("too few subjects: {} < 4", ids.len())));
    }
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(Error::invalid("duplicate participant ids"));
    }
    let (r1, r2, r3) = ratios;
    if r1 <= 0.0 || r2 <= 0.0 || r3 <= 0.0 || (r1 + r2 + r3 - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("ratios must be positive and sum to 1"));
    }

    // Sort before shuffling so the outcome does not depend on input order.
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);

    let counts = largest_remainder(sorted.len(), &[r1, r2, r3]);
    let train_ids: BTreeSet<String> = sorted[..counts[0]].iter().cloned().collect();
    let valid_ids: BTreeSet<String> =
        sorted[counts[0]..counts[0] + counts[1]].iter().cloned().collect();
    let test_ids: BTreeSet<String> =
        sorted[counts[0] + counts[1]..].iter().cloned().collect();

    Ok(SubjectSplit { train_ids, valid_ids, test_ids })
}

/// Names of the 15 model features, in canonical column order.
pub const FEATURE_NAMES: [&str; 15] = [
    "t_air", "r_h", "t_wbgt", "t_skin", "rcc", "scr_n", "scl", "speed", "dst_c", "acc_m",
    "t_drive", "age", "bmi", "sleep", "t_work",
];

/// The four predicted physiological biomarkers.
pub const BIOMARKER_NAMES: [&str; 4] = ["t_skin", "rcc", "scr_n", "scl"];

/// One one-minute window of extracted features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub participant_id: String,
    /// Zero-based index of the ride minute.
    pub window_index: u32,
    pub t_air: f64,
    pub r_h: f64,
    pub t_wbgt: f64,
    pub t_skin: f64,
    pub rcc: f64,
    pub scr_n: f64,
    pub scl: f64,
    pub speed: f64,
    pub dst_c: f64,
    pub acc_m: f64,
    pub t_drive: f64,
    pub age: f64,
    pub bmi: f64,
    pub sleep: f64,
    pub t_work: f64,
}

impl FeatureRow {
    /// Value of the named feature, by canonical name.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "t_air" => self.t_air,
            "r_h" => self.r_h,
            "t_wbgt" => self.t_wbgt,
            "t_skin" => self.t_skin,
            "rcc" => self.rcc,
            "scr_n" => self.scr_n,
            "scl" => self.scl,
            "speed" => self.speed,
            "dst_c" => self.dst_c,
            "acc_m" => self.acc_m,
            "t_drive" => self.t_drive,
            "age" => self.age,
            "bmi" => self.bmi,
            "sleep" => self.sleep,
            "t_work" => self.t_work,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match name {
            "t_air" => self.t_air = value,
            "r_h" => self.r_h = value,
            "t_wbgt" => self.t_wbgt = value,
            "t_skin" => self.t_skin = value,
            "rcc" => self.rcc = value,
            "scr_n" => self.scr_n = value,
            "scl" => self.scl = value,
            "speed" => self.speed = value,
            "dst_c" => self.dst_c = value,
            "acc_m" => self.acc_m = value,
            "t_drive" => self.t_drive = value,
            "age" => self.age = value,
            "bmi" => self.bmi = value,
            "sleep" => self.sleep = value,
            "t_work" => self.t_work = value,
            _ => return false,
        }
        true
    }

    pub fn values(&self) -> [f64; 15] {
        [
            self.t_air, self.r_h, self.t_wbgt, self.t_skin, self.rcc, self.scr_n, self.scl,
            self.speed, self.dst_c, self.acc_m, self.t_drive, self.age, self.bmi, self.sleep,
            self.t_work,
        ]
    }
}

/// Per-row context the 15-column feature export does not carry but the
/// climate stages need: the trip month, the solar radiation driving t_wbgt,
/// and the season for correlation encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowContext {
    pub participant_id: String,
    pub window_index: u32,
    pub trip_month: u8,
    pub sr_wm2: f64,
    pub season: Season,
}

/// A feature table with aligned per-row context.
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub context: Vec<RowContext>,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureRow>, context: Vec<RowContext>) -> Result<Self> {
        if rows.len() != context.len() {
            return Err(Error::invalid(format!(
                "feature rows ({}) and context rows ({}) differ",
                rows.len(),
                context.len()
            )));
        }
        for (r, c) in rows.iter().zip(&context) {
            if r.participant_id != c.participant_id || r.window_index != c.window_index {
                return Err(Error::invalid(format!(
                    "context misaligned at {}[{}]",
                    r.participant_id, r.window_index
                )));
            }
        }
        Ok(Self { rows, context })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column of the named feature over all rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if !FEATURE_NAMES.contains(&name) {
            return None;
        }
        Some(self.rows.iter().map(|r| r.get(name).unwrap()).collect())
    }

    pub fn participant_ids(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.rows.iter().map(|r| &r.participant_id).collect();
        set.into_iter().cloned().collect()
    }

    /// Sub-table restricted to the given participants, preserving row order.
    pub fn subset(&self, ids: &BTreeSet<String>) -> FeatureTable {
        let mut rows = Vec::new();
        let mut context = Vec::new();
        for (r, c) in self.rows.iter().zip(&self.context) {
            if ids.contains(&r.participant_id) {
                rows.push(r.clone());
                context.push(c.clone());
            }
        }
        FeatureTable { rows, context }
    }

    /// Deterministic ordering by (participant_id, window_index).
    pub fn sort(&mut self) {
        let mut pairs: Vec<(FeatureRow, RowContext)> =
            self.rows.drain(..).zip(self.context.drain(..)).collect();
        pairs.sort_by(|a, b| {
            (&a.0.participant_id, a.0.window_index).cmp(&(&b.0.participant_id, b.0.window_index))
        });
        for (r, c) in pairs {
            self.rows.push(r);
            self.context.push(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(channel: Channel, secs: f64, value: f64) -> SensorStream {
        let rate = channel.nominal_rate_hz();
        let n = (rate * secs) as usize;
        SensorStream::new(channel, rate, 0, vec![value; n])
    }

    pub(crate) fn minimal_trip(ride_secs: f64) -> TripRecord {
        let mut ride = BTreeMap::new();
        for ch in Channel::all() {
            ride.insert(ch, stream(ch, ride_secs, 1.0));
        }
        let mut phases = BTreeMap::new();
        phases.insert(Phase::Ride, ride);
        TripRecord {
            participant_id: "p001".into(),
            demographics: Demographics {
                age: 48.0,
                bmi: 20.6,
                sleep: 6.8,
                t_work: 10.0,
                hr_rest: 72.0,
                season: Season::Summer,
            },
            phases,
            trip_month: 6,
            solar_radiation_wm2: vec![SolarSample { hour_utc: 0, sr_wm2: 500.0 }],
        }
    }

    #[test]
    fn well_formed_trip_passes() {
        let trip = minimal_trip(600.0);
        let report = validate_trip(&trip);
        assert!(report.is_empty(), "unexpected violations: {}", report.summary());
    }

    #[test]
    fn humidity_out_of_range_flagged() {
        let mut trip = minimal_trip(600.0);
        let s = trip
            .phases
            .get_mut(&Phase::Ride)
            .unwrap()
            .get_mut(&Channel::RelHumidity)
            .unwrap();
        s.values[10] = 130.0;
        let report = validate_trip(&trip);
        assert!(report.violations.iter().any(|v| v.message.contains("r_h out of [0,100]")));
    }

    #[test]
    fn short_ride_flagged() {
        let trip = minimal_trip(180.0);
        let report = validate_trip(&trip);
        assert!(report.violations.iter().any(|v| v.message.contains("ride < 5 min")));
    }

    #[test]
    fn missing_ride_is_fatal() {
        let mut trip = minimal_trip(600.0);
        trip.phases.clear();
        let report = validate_trip(&trip);
        assert!(report.has_fatal());
        assert!(report.violations.iter().any(|v| v.message.contains("missing ride phase")));
    }

    #[test]
    fn nan_sample_is_fatal_with_channel_and_index() {
        let mut trip = minimal_trip(600.0);
        trip.phases.get_mut(&Phase::Ride).unwrap().get_mut(&Channel::Eda).unwrap().values[7] =
            f64::NAN;
        let report = validate_trip(&trip);
        assert!(report.has_fatal());
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("eda") && v.message.contains("index 7")));
    }

    #[test]
    fn split_100_seed_7_gives_paper_sizes() {
        let ids: Vec<String> = (0..100).map(|i| format!("p{:03}", i)).collect();
        let split = split_subjects(&ids, (0.5, 0.25, 0.25), 7).unwrap();
        assert_eq!(split.sizes(), (50, 25, 25));
    }

    #[test]
    fn split_4_rounds_to_2_1_1() {
        let ids: Vec<String> = (0..4).map(|i| format!("p{}", i)).collect();
        let split = split_subjects(&ids, (0.5, 0.25, 0.25), 0).unwrap();
        assert_eq!(split.sizes(), (2, 1, 1));
    }

    #[test]
    fn split_is_deterministic() {
        let ids: Vec<String> = (0..37).map(|i| format!("p{}", i)).collect();
        let a = split_subjects(&ids, (0.5, 0.25, 0.25), 42).unwrap();
        let b = split_subjects(&ids, (0.5, 0.25, 0.25), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_too_few_subjects() {
        let ids: Vec<String> = (0..3).map(|i| format!("p{}", i)).collect();
        let err = split_subjects(&ids, (0.5, 0.25, 0.25), 0).unwrap_err();
        assert!(err.to_string().contains("too few subjects"));
    }

    proptest! {
        // Every id lands in exactly one set, for any seed and cohort size.
        #[test]
        fn split_is_a_partition(n in 4usize..60, seed in any::<u64>()) {
            let ids: Vec<String> = (0..n).map(|i| format!("s{}", i)).collect();
            let split = split_subjects(&ids, (0.5, 0.25, 0.25), seed).unwrap();
            let mut all = BTreeSet::new();
            for id in split.train_ids.iter().chain(&split.valid_ids).chain(&split.test_ids) {
                prop_assert!(all.insert(id.clone()), "id {} appears twice", id);
            }
            prop_assert_eq!(all.len(), n);
            let (a, b, c) = split.sizes();
            prop_assert_eq!(a + b + c, n);
        }
    }
}
