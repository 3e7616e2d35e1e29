//! Climate-delta forecasting: ingest monthly regional climate-model series,
//! difference future windows against a baseline climatology, perturb the
//! observed weather, and re-infer biomarkers with a fitted network.
//!
//! Deltas are monthly-climatology differences per (model, scenario): the
//! perturbation only shifts weather columns; activity and demographic
//! columns pass through untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::FeatureTable;
use crate::features::{natural_wet_bulb, wbgt_from_weather};
use crate::lgbn::{predict_biomarkers, GaussianNetwork};
use crate::{Error, Result};

/// Shared Socioeconomic Pathway scenarios (Tier 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ssp {
    Ssp126,
    Ssp245,
    Ssp370,
    Ssp585,
}

impl Ssp {
    pub fn as_str(self) -> &'static str {
        match self {
            Ssp::Ssp126 => "ssp126",
            Ssp::Ssp245 => "ssp245",
            Ssp::Ssp370 => "ssp370",
            Ssp::Ssp585 => "ssp585",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ssp126" => Ok(Ssp::Ssp126),
            "ssp245" => Ok(Ssp::Ssp245),
            "ssp370" => Ok(Ssp::Ssp370),
            "ssp585" => Ok(Ssp::Ssp585),
            other => Err(Error::invalid(format!("unknown ssp {:?}", other))),
        }
    }

    pub fn all() -> [Ssp; 4] {
        [Ssp::Ssp126, Ssp::Ssp245, Ssp::Ssp370, Ssp::Ssp585]
    }
}

impl fmt::Display for Ssp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One monthly record of one (model, scenario) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimateRecord {
    pub model: String,
    pub ssp: Ssp,
    pub year: i32,
    pub month: u8,
    /// Surface air temperature, degrees C.
    pub tas_c: f64,
    /// Near-surface relative humidity, percent.
    pub hurs_pct: f64,
    /// Downward shortwave radiation, W/m^2.
    pub rsds_wm2: f64,
}

/// Validated multi-model, multi-scenario monthly ensemble.
#[derive(Debug, Clone, Default)]
pub struct ClimateEnsemble {
    records: Vec<ClimateRecord>,
    index: BTreeMap<(String, Ssp, i32, u8), usize>,
}

impl ClimateEnsemble {
    pub fn from_records(records: Vec<ClimateRecord>) -> Result<Self> {
        let mut ensemble = ClimateEnsemble::default();
        for (i, r) in records.iter().enumerate() {
            ensemble.check(r, i + 1)?;
            let key = (r.model.clone(), r.ssp, r.year, r.month);
            if ensemble.index.insert(key, i).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate key ({}, {}, {}, {})",
                    r.model, r.ssp, r.year, r.month
                )));
            }
        }
        ensemble.records = records;
        Ok(ensemble)
    }

    fn check(&self, r: &ClimateRecord, row: usize) -> Result<()> {
        if !(1..=12).contains(&r.month) {
            return Err(Error::invalid(format!("row {}: month {} out of [1,12]", row, r.month)));
        }
        if !(0.0..=100.0).contains(&r.hurs_pct) {
            return Err(Error::invalid(format!(
                "row {}: hurs {} out of [0,100]",
                row, r.hurs_pct
            )));
        }
        if !r.tas_c.is_finite() || !r.rsds_wm2.is_finite() || !r.hurs_pct.is_finite() {
            return Err(Error::invalid(format!("row {}: non-finite value", row)));
        }
        Ok(())
    }

    pub fn records(&self) -> &[ClimateRecord] {
        &self.records
    }

    pub fn models(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.records.iter().map(|r| &r.model).collect();
        set.into_iter().cloned().collect()
    }

    pub fn get(&self, model: &str, ssp: Ssp, year: i32, month: u8) -> Option<&ClimateRecord> {
        self.index
            .get(&(model.to_string(), ssp, year, month))
            .map(|&i| &self.records[i])
    }
}

/// Loads an ensemble CSV with header `model,ssp,year,month,tas_c,hurs_pct,rsds_wm2`.
pub fn load_ensemble(path: &Path) -> Result<ClimateEnsemble> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_ensemble_csv(&text, &path.display().to_string())
}

pub const ENSEMBLE_HEADER: &str = "model,ssp,year,month,tas_c,hurs_pct,rsds_wm2";

pub fn parse_ensemble_csv(text: &str, path: &str) -> Result<ClimateEnsemble> {
    let mut lines =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv { path: path.into(), row: 1, msg: "empty file".into() })?;
    if header.trim() != ENSEMBLE_HEADER {
        return Err(Error::Csv {
            path: path.into(),
            row: 1,
            msg: format!("expected header {:?}", ENSEMBLE_HEADER),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Csv {
                path: path.into(),
                row: i + 1,
                msg: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Csv {
                path: path.into(),
                row: i + 1,
                msg: format!("bad {} {:?}", what, s),
            })
        };
        records.push(ClimateRecord {
            model: fields[0].trim().to_string(),
            ssp: Ssp::parse(fields[1].trim()).map_err(|e| Error::Csv {
                path: path.into(),
                row: i + 1,
                msg: e.to_string(),
            })?,
            year: num(fields[2], "year")? as i32,
            month: num(fields[3], "month")? as u8,
            tas_c: num(fields[4], "tas_c")?,
            hurs_pct: num(fields[5], "hurs_pct")?,
            rsds_wm2: num(fields[6], "rsds_wm2")?,
        });
    }
    ClimateEnsemble::from_records(records).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Csv { path: path.into(), row: 0, msg },
        other => other,
    })
}

/// An inclusive year window.
pub type YearWindow = (i32, i32);

/// Formats a window the way output files name it, e.g. `2026-2030`.
pub fn window_label(w: YearWindow) -> String {
    format!("{}-{}", w.0, w.1)
}

/// Per-calendar-month deltas of one (model, ssp, future window) against a
/// baseline window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyDeltas {
    pub model: String,
    pub ssp: Ssp,
    pub future_years: YearWindow,
    pub baseline_years: YearWindow,
    /// Index 0 = January. Degrees C.
    pub d_tas_c: [f64; 12],
    /// Percentage points.
    pub d_hurs_pct: [f64; 12],
    /// W/m^2.
    pub d_rsds_wm2: [f64; 12],
}

impl MonthlyDeltas {
    pub fn zero(model: &str, ssp: Ssp) -> Self {
        Self {
            model: model.to_string(),
            ssp,
            future_years: (0, 0),
            baseline_years: (0, 0),
            d_tas_c: [0.0; 12],
            d_hurs_pct: [0.0; 12],
            d_rsds_wm2: [0.0; 12],
        }
    }
}

fn window_monthly_means(
    ens: &ClimateEnsemble,
    model: &str,
    ssp: Ssp,
    years: YearWindow,
) -> Result<[(f64, f64, f64); 12]> {
    let mut sums = [(0.0f64, 0.0f64, 0.0f64); 12];
    let mut counts = [0usize; 12];
    let mut missing = Vec::new();
    for year in years.0..=years.1 {
        for month in 1..=12u8 {
            match ens.get(model, ssp, year, month) {
                Some(r) => {
                    let m = (month - 1) as usize;
                    sums[m].0 += r.tas_c;
                    sums[m].1 += r.hurs_pct;
                    sums[m].2 += r.rsds_wm2;
                    counts[m] += 1;
                }
                None => missing.push((year, month)),
            }
        }
    }
    if !missing.is_empty() {
        let shown: Vec<String> =
            missing.iter().take(6).map(|(y, m)| format!("({}, {})", y, m)).collect();
        return Err(Error::invalid(format!(
            "coverage gap for {} {} over {}-{}: missing {}{}",
            model,
            ssp,
            years.0,
            years.1,
            shown.join(", "),
            if missing.len() > 6 { ", ..." } else { "" }
        )));
    }
    let mut out = [(0.0, 0.0, 0.0); 12];
    for m in 0..12 {
        let n = counts[m] as f64;
        out[m] = (sums[m].0 / n, sums[m].1 / n, sums[m].2 / n);
    }
    Ok(out)
}

/// Monthly climatology difference: future-window mean minus baseline-window
/// mean, per calendar month.
pub fn monthly_delta(
    ens: &ClimateEnsemble,
    model: &str,
    ssp: Ssp,
    future_years: YearWindow,
    baseline_years: YearWindow,
) -> Result<MonthlyDeltas> {
    let future = window_monthly_means(ens, model, ssp, future_years)?;
    let base = window_monthly_means(ens, model, ssp, baseline_years)?;
    let mut deltas = MonthlyDeltas {
        model: model.to_string(),
        ssp,
        future_years,
        baseline_years,
        d_tas_c: [0.0; 12],
        d_hurs_pct: [0.0; 12],
        d_rsds_wm2: [0.0; 12],
    };
    for m in 0..12 {
        deltas.d_tas_c[m] = future[m].0 - base[m].0;
        deltas.d_hurs_pct[m] = future[m].1 - base[m].1;
        deltas.d_rsds_wm2[m] = future[m].2 - base[m].2;
    }
    Ok(deltas)
}

/// Applies monthly deltas to each row's weather (by its trip month) and
/// recomputes the derived temperature chain. Activity and demographic
/// columns are byte-identical to the input.
pub fn apply_deltas(table: &FeatureTable, deltas: &MonthlyDeltas) -> FeatureTable {
    let mut out = table.clone();
    for (row, ctx) in out.rows.iter_mut().zip(out.context.iter_mut()) {
        let m = (ctx.trip_month.clamp(1, 12) - 1) as usize;
        row.t_air += deltas.d_tas_c[m];
        row.r_h = (row.r_h + deltas.d_hurs_pct[m]).clamp(0.0, 100.0);
        ctx.sr_wm2 = (ctx.sr_wm2 + deltas.d_rsds_wm2[m]).max(0.0);
        row.t_wbgt = wbgt_from_weather(ctx.sr_wm2, row.t_air, row.r_h);
    }
    out
}

/// Biomarker forecasts for a perturbed table: conditional-Gaussian
/// prediction with the perturbed weather plus unchanged activity and
/// demographics as evidence.
pub fn forecast_biomarkers(
    net: &GaussianNetwork,
    perturbed: &FeatureTable,
) -> Result<BTreeMap<String, Vec<f64>>> {
    predict_biomarkers(net, perturbed)
}

/// Analytic sensitivity of t_wbgt to a pure air-temperature shift at fixed
/// humidity and solar radiation: the affine globe/air terms plus the change
/// of the wet-bulb fit.
pub fn wbgt_tas_sensitivity(t_air: f64, r_h: f64, d_tas: f64) -> f64 {
    use crate::features::{GLOBE_TAIR_COEF, WBGT_WEIGHTS};
    let stull_change = natural_wet_bulb(t_air + d_tas, r_h) - natural_wet_bulb(t_air, r_h);
    WBGT_WEIGHTS.1 * d_tas + WBGT_WEIGHTS.2 * GLOBE_TAIR_COEF * d_tas + WBGT_WEIGHTS.0 * stull_change
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{FeatureRow, RowContext, Season};

    fn record(model: &str, ssp: Ssp, year: i32, month: u8, tas: f64) -> ClimateRecord {
        ClimateRecord { model: model.into(), ssp, year, month, tas_c: tas, hurs_pct: 70.0, rsds_wm2: 450.0 }
    }

    fn toy_ensemble(models: &[&str], warming: &[f64]) -> ClimateEnsemble {
        let mut records = Vec::new();
        for (model, dw) in models.iter().zip(warming) {
            for year in 2023..=2035 {
                for month in 1..=12u8 {
                    let future = year >= 2026;
                    records.push(record(
                        model,
                        Ssp::Ssp245,
                        year,
                        month,
                        25.0 + month as f64 * 0.5 + if future { *dw } else { 0.0 },
                    ));
                }
            }
        }
        ClimateEnsemble::from_records(records).unwrap()
    }

    pub(crate) fn toy_table() -> FeatureTable {
        let mut rows = Vec::new();
        let mut context = Vec::new();
        for w in 0..3u32 {
            rows.push(FeatureRow {
                participant_id: "p1".into(),
                window_index: w,
                t_air: 30.0,
                r_h: 70.0,
                t_wbgt: wbgt_from_weather(500.0, 30.0, 70.0),
                t_skin: 34.0,
                rcc: 25.0,
                scr_n: 10.0,
                scl: 15.0,
                speed: 10.0,
                dst_c: 0.5 * (w + 1) as f64,
                acc_m: 5.0,
                t_drive: (w + 1) as f64,
                age: 48.0,
                bmi: 20.6,
                sleep: 6.8,
                t_work: 10.0,
            });
            context.push(RowContext {
                participant_id: "p1".into(),
                window_index: w,
                trip_month: 6,
                sr_wm2: 500.0,
                season: Season::Summer,
            });
        }
        FeatureTable::new(rows, context).unwrap()
    }

    #[test]
    fn duplicate_key_rejected() {
        let records = vec![
            record("m1", Ssp::Ssp245, 2030, 6, 25.0),
            record("m1", Ssp::Ssp245, 2030, 6, 26.0),
        ];
        let err = ClimateEnsemble::from_records(records).unwrap_err();
        assert!(err.to_string().contains("duplicate key (m1, ssp245, 2030, 6)"));
    }

    #[test]
    fn humidity_bound_rejected() {
        let mut r = record("m1", Ssp::Ssp245, 2030, 6, 25.0);
        r.hurs_pct = 130.0;
        assert!(ClimateEnsemble::from_records(vec![r]).is_err());
    }

    #[test]
    fn csv_parses_and_counts_models() {
        let csv = format!(
            "{}\nm1,ssp245,2023,1,25.0,70.0,450.0\nm2,ssp245,2023,1,26.0,71.0,455.0\n",
            ENSEMBLE_HEADER
        );
        let ens = parse_ensemble_csv(&csv, "test.csv").unwrap();
        assert_eq!(ens.models(), vec!["m1".to_string(), "m2".to_string()]);
    }

    #[test]
    fn csv_bad_month_reports_row() {
        let csv = format!("{}\nm1,ssp245,2023,13,25.0,70.0,450.0\n", ENSEMBLE_HEADER);
        let err = parse_ensemble_csv(&csv, "test.csv").unwrap_err();
        assert!(err.to_string().contains("month 13"), "{}", err);
    }

    #[test]
    fn identical_windows_give_zero_deltas() {
        let ens = toy_ensemble(&["m1"], &[1.5]);
        let d = monthly_delta(&ens, "m1", Ssp::Ssp245, (2023, 2025), (2023, 2025)).unwrap();
        assert!(d.d_tas_c.iter().all(|v| v.abs() < 1e-12));
        assert!(d.d_hurs_pct.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constructed_warming_recovered_exactly() {
        let ens = toy_ensemble(&["m1"], &[1.5]);
        let d = monthly_delta(&ens, "m1", Ssp::Ssp245, (2026, 2030), (2023, 2025)).unwrap();
        for m in 0..12 {
            assert!((d.d_tas_c[m] - 1.5).abs() < 1e-12, "month {}: {}", m, d.d_tas_c[m]);
        }
    }

    #[test]
    fn per_model_deltas_differ() {
        let ens = toy_ensemble(&["m1", "m2"], &[1.0, 2.0]);
        let d1 = monthly_delta(&ens, "m1", Ssp::Ssp245, (2026, 2030), (2023, 2025)).unwrap();
        let d2 = monthly_delta(&ens, "m2", Ssp::Ssp245, (2026, 2030), (2023, 2025)).unwrap();
        assert!(d1 != d2);
        assert!((d2.d_tas_c[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_gap_lists_missing_cells() {
        let mut records = Vec::new();
        for year in 2023..=2030 {
            for month in 1..=12u8 {
                if year == 2027 && month == 7 {
                    continue;
                }
                records.push(record("m1", Ssp::Ssp245, year, month, 25.0));
            }
        }
        let ens = ClimateEnsemble::from_records(records).unwrap();
        let err = monthly_delta(&ens, "m1", Ssp::Ssp245, (2026, 2030), (2023, 2025)).unwrap_err();
        assert!(err.to_string().contains("(2027, 7)"), "{}", err);
    }

    #[test]
    fn zero_deltas_are_identity() {
        let table = toy_table();
        let out = apply_deltas(&table, &MonthlyDeltas::zero("m1", Ssp::Ssp245));
        assert_eq!(out.rows, table.rows);
        assert_eq!(out.context, table.context);
    }

    #[test]
    fn tas_delta_shifts_globe_linearly() {
        let table = toy_table();
        let mut deltas = MonthlyDeltas::zero("m1", Ssp::Ssp245);
        deltas.d_tas_c = [2.0; 12];
        let out = apply_deltas(&table, &deltas);
        assert!((out.rows[0].t_air - 32.0).abs() < 1e-12);
        // t_wbgt change must equal the closed-form affine terms plus the
        // re-evaluated wet-bulb difference.
        let expected = wbgt_tas_sensitivity(30.0, 70.0, 2.0);
        let got = out.rows[0].t_wbgt - table.rows[0].t_wbgt;
        assert!((got - expected).abs() < 1e-6, "got {} expected {}", got, expected);
        // Activity and demographics untouched.
        assert_eq!(out.rows[0].speed, table.rows[0].speed);
        assert_eq!(out.rows[0].dst_c, table.rows[0].dst_c);
        assert_eq!(out.rows[0].age, table.rows[0].age);
    }

    #[test]
    fn humidity_clamps_at_100() {
        let mut table = toy_table();
        table.rows[0].r_h = 99.0;
        let mut deltas = MonthlyDeltas::zero("m1", Ssp::Ssp245);
        deltas.d_hurs_pct = [5.0; 12];
        let out = apply_deltas(&table, &deltas);
        assert_eq!(out.rows[0].r_h, 100.0);
    }

    #[test]
    fn tas_deltas_compose_additively() {
        let table = toy_table();
        let mut d1 = MonthlyDeltas::zero("m1", Ssp::Ssp245);
        d1.d_tas_c = [1.0; 12];
        let mut d2 = MonthlyDeltas::zero("m1", Ssp::Ssp245);
        d2.d_tas_c = [2.0; 12];
        let mut d12 = MonthlyDeltas::zero("m1", Ssp::Ssp245);
        d12.d_tas_c = [3.0; 12];
        let sequential = apply_deltas(&apply_deltas(&table, &d1), &d2);
        let joint = apply_deltas(&table, &d12);
        for (a, b) in sequential.rows.iter().zip(&joint.rows) {
            assert!((a.t_air - b.t_air).abs() < 1e-12);
            assert!((a.t_wbgt - b.t_wbgt).abs() < 1e-9);
        }
    }
}
