//! On-disk layout: one directory per participant, one CSV per channel inside
//! per-phase subdirectories, `demographics.json` and `solar.csv` at the
//! participant level.
//!
//! ```text
//! <data_dir>/<participant_id>/
//!   demographics.json
//!   solar.csv                  hour_utc,sr_wm2
//!   <rest|ride|recovery>/
//!     bvp.csv eda.csv skin_temp.csv accel_{x,y,z}.csv
//!     air_temp.csv rel_humidity.csv      timestamp_us,value
//!     gps.csv                            timestamp_us,lat,lon
//! ```
//!
//! Numbers are written with the shortest representation that parses back to
//! the same f64, so store/load round-trips are bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{
    Channel, Demographics, FeatureRow, FeatureTable, Phase, RowContext, Season, SensorStream,
    SolarSample, TripRecord, FEATURE_NAMES, MICROS_PER_SEC,
};
use crate::{Error, Result};

pub const STREAM_HEADER: &str = "timestamp_us,value";
pub const GPS_HEADER: &str = "timestamp_us,lat,lon";

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::io(path.display().to_string(), e)
}

/// Calendar month (1-12) of a microseconds-since-epoch timestamp, UTC.
///
/// Civil-from-days conversion after Howard Hinnant's algorithm.
pub(crate) fn month_of_us(t_us: i64) -> u8 {
    let days = t_us.div_euclid(86_400 * MICROS_PER_SEC);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    m as u8
}

/// Microseconds since epoch for midnight UTC on the first day of
/// `(year, month)`; inverse direction of [`month_of_us`], used by fixtures.
pub(crate) fn us_of_year_month(year: i64, month: u8) -> i64 {
    let m = month as i64;
    let y = if m <= 2 { year - 1 } else { year };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = if m > 2 { m - 3 } else { m + 9 };
    let doy = (153 * mp + 2) / 5;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    let days = era * 146_097 + doe - 719_468;
    days * 86_400 * MICROS_PER_SEC
}

fn parse_f64(path: &Path, row: usize, field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Csv {
        path: path.display().to_string(),
        row,
        msg: format!("bad number {:?}", field),
    })
}

fn parse_i64(path: &Path, row: usize, field: &str) -> Result<i64> {
    field.trim().parse::<i64>().map_err(|_| Error::Csv {
        path: path.display().to_string(),
        row,
        msg: format!("bad integer {:?}", field),
    })
}

/// Reads a `timestamp_us,value` channel CSV; the sample rate is inferred
/// from the first/last timestamps.
fn load_stream(path: &Path, channel: Channel) -> Result<SensorStream> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        path: path.display().to_string(),
        row: 1,
        msg: "empty file".into(),
    })?;
    if header.trim() != STREAM_HEADER {
        return Err(Error::Csv {
            path: path.display().to_string(),
            row: 1,
            msg: format!("expected header {:?}", STREAM_HEADER),
        });
    }
    let mut t_first = None;
    let mut t_last = 0i64;
    let mut values = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        let (ts, val) = match (fields.next(), fields.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Csv {
                    path: path.display().to_string(),
                    row: i + 1,
                    msg: "expected 2 fields".into(),
                })
            }
        };
        let t = parse_i64(path, i + 1, ts)?;
        if t_first.is_none() {
            t_first = Some(t);
        }
        t_last = t;
        values.push(parse_f64(path, i + 1, val)?);
    }
    let t0 = t_first.ok_or_else(|| Error::Csv {
        path: path.display().to_string(),
        row: 2,
        msg: "no samples".into(),
    })?;
    let rate_hz = if values.len() > 1 {
        (values.len() - 1) as f64 / ((t_last - t0) as f64 / MICROS_PER_SEC as f64)
    } else {
        channel.nominal_rate_hz()
    };
    Ok(SensorStream::new(channel, rate_hz, t0, values))
}

/// Reads `gps.csv` into the lat/lon channel pair.
fn load_gps(path: &Path) -> Result<(SensorStream, SensorStream)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        path: path.display().to_string(),
        row: 1,
        msg: "empty file".into(),
    })?;
    if header.trim() != GPS_HEADER {
        return Err(Error::Csv {
            path: path.display().to_string(),
            row: 1,
            msg: format!("expected header {:?}", GPS_HEADER),
        });
    }
    let mut t_first = None;
    let mut t_last = 0i64;
    let mut lats = Vec::new();
    let mut lons = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Csv {
                path: path.display().to_string(),
                row: i + 1,
                msg: "expected 3 fields".into(),
            });
        }
        let t = parse_i64(path, i + 1, fields[0])?;
        if t_first.is_none() {
            t_first = Some(t);
        }
        t_last = t;
        lats.push(parse_f64(path, i + 1, fields[1])?);
        lons.push(parse_f64(path, i + 1, fields[2])?);
    }
    let t0 = t_first.ok_or_else(|| Error::Csv {
        path: path.display().to_string(),
        row: 2,
        msg: "no samples".into(),
    })?;
    let rate = if lats.len() > 1 {
        (lats.len() - 1) as f64 / ((t_last - t0) as f64 / MICROS_PER_SEC as f64)
    } else {
        1.0
    };
    Ok((
        SensorStream::new(Channel::GpsLat, rate, t0, lats),
        SensorStream::new(Channel::GpsLon, rate, t0, lons),
    ))
}

fn load_solar(path: &Path) -> Result<Vec<SolarSample>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        path: path.display().to_string(),
        row: 1,
        msg: "empty file".into(),
    })?;
    if header.trim() != "hour_utc,sr_wm2" {
        return Err(Error::Csv {
            path: path.display().to_string(),
            row: 1,
            msg: "expected header \"hour_utc,sr_wm2\"".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        let (h, sr) = match (fields.next(), fields.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Csv {
                    path: path.display().to_string(),
                    row: i + 1,
                    msg: "expected 2 fields".into(),
                })
            }
        };
        out.push(SolarSample {
            hour_utc: parse_i64(path, i + 1, h)?,
            sr_wm2: parse_f64(path, i + 1, sr)?,
        });
    }
    Ok(out)
}

/// Loads one participant directory into a [`TripRecord`].
///
/// The trip month is derived from the ride phase's start timestamp.
pub fn load_trip(dir: &Path) -> Result<TripRecord> {
    let participant_id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::invalid(format!("bad participant dir {}", dir.display())))?
        .to_string();

    let demo_path = dir.join("demographics.json");
    let demo_text = fs::read_to_string(&demo_path).map_err(|e| io_err(&demo_path, e))?;
    let demographics: Demographics = serde_json::from_str(&demo_text)
        .map_err(|e| Error::Json { path: demo_path.display().to_string(), source: e })?;

    let solar_radiation_wm2 = load_solar(&dir.join("solar.csv"))?;

    let mut phases = BTreeMap::new();
    for phase in Phase::all() {
        let pdir = dir.join(phase.as_str());
        if !pdir.is_dir() {
            continue;
        }
        let mut streams = BTreeMap::new();
        for channel in Channel::all() {
            match channel {
                Channel::GpsLat | Channel::GpsLon => continue,
                _ => {}
            }
            let cpath = pdir.join(format!("{}.csv", channel.as_str()));
            if cpath.is_file() {
                streams.insert(channel, load_stream(&cpath, channel)?);
            }
        }
        let gps_path = pdir.join("gps.csv");
        if gps_path.is_file() {
            let (lat, lon) = load_gps(&gps_path)?;
            streams.insert(Channel::GpsLat, lat);
            streams.insert(Channel::GpsLon, lon);
        }
        if !streams.is_empty() {
            phases.insert(phase, streams);
        }
    }

    let trip_month = phases
        .get(&Phase::Ride)
        .and_then(|m| m.values().next())
        .map(|s| month_of_us(s.t0_us))
        .unwrap_or(1);

    Ok(TripRecord { participant_id, demographics, phases, trip_month, solar_radiation_wm2 })
}

/// Loads every participant directory under `data_dir`, sorted by id.
pub fn load_trips(data_dir: &Path) -> Result<Vec<TripRecord>> {
    let mut dirs: Vec<_> = fs::read_dir(data_dir)
        .map_err(|e| io_err(data_dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_trip(d)).collect()
}

fn timestamp_of(stream: &SensorStream, k: usize) -> i64 {
    stream.t0_us + ((k as f64 / stream.rate_hz) * MICROS_PER_SEC as f64).round() as i64
}

/// Writes one participant directory in the canonical layout.
pub fn store_trip(data_dir: &Path, trip: &TripRecord) -> Result<()> {
    let dir = data_dir.join(&trip.participant_id);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let demo_path = dir.join("demographics.json");
    let json = serde_json::to_string_pretty(&trip.demographics)
        .map_err(|e| Error::Json { path: demo_path.display().to_string(), source: e })?;
    fs::write(&demo_path, json).map_err(|e| io_err(&demo_path, e))?;

    let solar_path = dir.join("solar.csv");
    let mut out = String::from("hour_utc,sr_wm2\n");
    for s in &trip.solar_radiation_wm2 {
        out.push_str(&format!("{},{}\n", s.hour_utc, s.sr_wm2));
    }
    fs::write(&solar_path, out).map_err(|e| io_err(&solar_path, e))?;

    for (phase, streams) in &trip.phases {
        let pdir = dir.join(phase.as_str());
        fs::create_dir_all(&pdir).map_err(|e| io_err(&pdir, e))?;
        for (channel, stream) in streams {
            match channel {
                Channel::GpsLat | Channel::GpsLon => continue,
                _ => {}
            }
            let cpath = pdir.join(format!("{}.csv", channel.as_str()));
            let file = fs::File::create(&cpath).map_err(|e| io_err(&cpath, e))?;
            let mut w = std::io::BufWriter::new(file);
            writeln!(w, "{}", STREAM_HEADER).map_err(|e| io_err(&cpath, e))?;
            for (k, v) in stream.values.iter().enumerate() {
                writeln!(w, "{},{}", timestamp_of(stream, k), v).map_err(|e| io_err(&cpath, e))?;
            }
        }
        if let (Some(lat), Some(lon)) =
            (streams.get(&Channel::GpsLat), streams.get(&Channel::GpsLon))
        {
            let gpath = pdir.join("gps.csv");
            let file = fs::File::create(&gpath).map_err(|e| io_err(&gpath, e))?;
            let mut w = std::io::BufWriter::new(file);
            writeln!(w, "{}", GPS_HEADER).map_err(|e| io_err(&gpath, e))?;
            for k in 0..lat.values.len() {
                writeln!(w, "{},{},{}", timestamp_of(lat, k), lat.values[k], lon.values[k])
                    .map_err(|e| io_err(&gpath, e))?;
            }
        }
    }
    Ok(())
}

fn season_from_str(s: &str) -> Result<Season> {
    match s {
        "summer" => Ok(Season::Summer),
        "winter" => Ok(Season::Winter),
        "monsoon" => Ok(Season::Monsoon),
        other => Err(Error::invalid(format!("unknown season {:?}", other))),
    }
}

/// Writes the feature table export (exactly the 15 feature columns plus
/// identifiers) and the aligned context sidecar.
///
/// `manifest_hash`, when given, is recorded as a leading `#` comment on both
/// files; readers skip comment lines.
pub fn write_feature_table(
    features_path: &Path,
    context_path: &Path,
    table: &FeatureTable,
    manifest_hash: Option<&str>,
) -> Result<()> {
    let file = fs::File::create(features_path).map_err(|e| io_err(features_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    if let Some(h) = manifest_hash {
        writeln!(w, "# manifest_hash={}", h).map_err(|e| io_err(features_path, e))?;
    }
    writeln!(w, "participant_id,window_index,{}", FEATURE_NAMES.join(","))
        .map_err(|e| io_err(features_path, e))?;
    for r in &table.rows {
        let vals: Vec<String> = r.values().iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{},{}", r.participant_id, r.window_index, vals.join(","))
            .map_err(|e| io_err(features_path, e))?;
    }

    let file = fs::File::create(context_path).map_err(|e| io_err(context_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    if let Some(h) = manifest_hash {
        writeln!(w, "# manifest_hash={}", h).map_err(|e| io_err(context_path, e))?;
    }
    writeln!(w, "participant_id,window_index,trip_month,sr_wm2,season")
        .map_err(|e| io_err(context_path, e))?;
    for c in &table.context {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.participant_id,
            c.window_index,
            c.trip_month,
            c.sr_wm2,
            c.season.as_str()
        )
        .map_err(|e| io_err(context_path, e))?;
    }
    Ok(())
}

/// Loads a feature table and its context sidecar written by
/// [`write_feature_table`].
pub fn load_feature_table(features_path: &Path, context_path: &Path) -> Result<FeatureTable> {
    let text = fs::read_to_string(features_path).map_err(|e| io_err(features_path, e))?;
    let mut lines =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        path: features_path.display().to_string(),
        row: 1,
        msg: "empty file".into(),
    })?;
    let expected = format!("participant_id,window_index,{}", FEATURE_NAMES.join(","));
    if header.trim() != expected {
        return Err(Error::Csv {
            path: features_path.display().to_string(),
            row: 1,
            msg: format!("unexpected header; want {:?}", expected),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(Error::Csv {
                path: features_path.display().to_string(),
                row: i + 1,
                msg: format!("expected 17 fields, got {}", fields.len()),
            });
        }
        let mut row = FeatureRow {
            participant_id: fields[0].to_string(),
            window_index: fields[1].trim().parse().map_err(|_| Error::Csv {
                path: features_path.display().to_string(),
                row: i + 1,
                msg: "bad window_index".into(),
            })?,
            t_air: 0.0,
            r_h: 0.0,
            t_wbgt: 0.0,
            t_skin: 0.0,
            rcc: 0.0,
            scr_n: 0.0,
            scl: 0.0,
            speed: 0.0,
            dst_c: 0.0,
            acc_m: 0.0,
            t_drive: 0.0,
            age: 0.0,
            bmi: 0.0,
            sleep: 0.0,
            t_work: 0.0,
        };
        for (j, name) in FEATURE_NAMES.iter().enumerate() {
            row.set(name, parse_f64(features_path, i + 1, fields[j + 2])?);
        }
        rows.push(row);
    }

    let text = fs::read_to_string(context_path).map_err(|e| io_err(context_path, e))?;
    let mut lines =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        path: context_path.display().to_string(),
        row: 1,
        msg: "empty file".into(),
    })?;
    if header.trim() != "participant_id,window_index,trip_month,sr_wm2,season" {
        return Err(Error::Csv {
            path: context_path.display().to_string(),
            row: 1,
            msg: "unexpected context header".into(),
        });
    }
    let mut context = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Csv {
                path: context_path.display().to_string(),
                row: i + 1,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        context.push(RowContext {
            participant_id: fields[0].to_string(),
            window_index: fields[1].trim().parse().map_err(|_| Error::Csv {
                path: context_path.display().to_string(),
                row: i + 1,
                msg: "bad window_index".into(),
            })?,
            trip_month: parse_i64(context_path, i + 1, fields[2])? as u8,
            sr_wm2: parse_f64(context_path, i + 1, fields[3])?,
            season: season_from_str(fields[4].trim())?,
        });
    }

    FeatureTable::new(rows, context)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn month_of_us_matches_known_dates() {
        // 2024-01-01T00:00:00Z = 1704067200 s
        assert_eq!(month_of_us(1_704_067_200 * MICROS_PER_SEC), 1);
        // 2024-06-15T12:00:00Z = 1718452800 s
        assert_eq!(month_of_us(1_718_452_800 * MICROS_PER_SEC), 6);
        // 2024-12-31T23:59:59Z
        assert_eq!(month_of_us(1_735_689_599 * MICROS_PER_SEC), 12);
        assert_eq!(month_of_us(0), 1);
    }

    #[test]
    fn us_of_year_month_round_trips() {
        for year in [1999, 2024, 2025, 2100] {
            for month in 1..=12u8 {
                let t = us_of_year_month(year, month);
                assert_eq!(month_of_us(t), month, "year {} month {}", year, month);
            }
        }
    }

    #[test]
    fn trip_store_load_round_trip_is_bit_exact() {
        let trip = crate::datamodel::tests::minimal_trip(600.0);
        let tmp = tempfile::tempdir().unwrap();
        store_trip(tmp.path(), &trip).unwrap();
        let loaded = load_trip(&tmp.path().join("p001")).unwrap();
        assert_eq!(loaded.participant_id, trip.participant_id);
        assert_eq!(loaded.demographics, trip.demographics);
        for (phase, streams) in &trip.phases {
            for (ch, s) in streams {
                let l = loaded.stream(*phase, *ch).unwrap();
                assert_eq!(l.values, s.values, "{:?}/{:?}", phase, ch);
                assert_eq!(l.t0_us, s.t0_us);
            }
        }
        assert_eq!(loaded.solar_radiation_wm2, trip.solar_radiation_wm2);
    }

    proptest! {
        // Values written at finite decimal precision survive a store/load cycle.
        #[test]
        fn stream_values_round_trip(raw in proptest::collection::vec(-1000i64..1000, 64..256)) {
            let values: Vec<f64> = raw.iter().map(|v| *v as f64 / 64.0).collect();
            let tmp = tempfile::tempdir().unwrap();
            let mut trip = crate::datamodel::tests::minimal_trip(600.0);
            let s = trip
                .phases
                .get_mut(&Phase::Ride)
                .unwrap()
                .get_mut(&Channel::SkinTemp)
                .unwrap();
            let n = values.len();
            s.values = values.clone();
            s.rate_hz = 1.0;
            let _ = n;
            store_trip(tmp.path(), &trip).unwrap();
            let loaded = load_trip(&tmp.path().join("p001")).unwrap();
            let l = loaded.stream(Phase::Ride, Channel::SkinTemp).unwrap();
            prop_assert_eq!(&l.values, &values);
        }
    }

    #[test]
    fn feature_table_round_trip() {
        let rows = vec![FeatureRow {
            participant_id: "p1".into(),
            window_index: 0,
            t_air: 33.25,
            r_h: 70.0,
            t_wbgt: 31.125,
            t_skin: 34.5,
            rcc: 28.75,
            scr_n: 12.0,
            scl: 18.5,
            speed: 10.25,
            dst_c: 0.171875,
            acc_m: 5.0,
            t_drive: 1.0,
            age: 48.0,
            bmi: 20.6015625,
            sleep: 6.75,
            t_work: 10.0,
        }];
        let context = vec![RowContext {
            participant_id: "p1".into(),
            window_index: 0,
            trip_month: 6,
            sr_wm2: 512.5,
            season: Season::Monsoon,
        }];
        let table = FeatureTable::new(rows, context).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let fpath = tmp.path().join("features.csv");
        let cpath = tmp.path().join("context.csv");
        write_feature_table(&fpath, &cpath, &table, Some("abc123")).unwrap();
        let text = fs::read_to_string(&fpath).unwrap();
        assert!(text.starts_with("# manifest_hash=abc123\n"));
        assert!(text.contains("participant_id,window_index,t_air,r_h,t_wbgt"));
        let loaded = load_feature_table(&fpath, &cpath).unwrap();
        assert_eq!(loaded.rows, table.rows);
        assert_eq!(loaded.context, table.context);
    }
}
