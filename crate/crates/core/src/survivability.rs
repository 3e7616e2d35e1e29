//! WBGT risk bands, exposure metrics, and bootstrap Monte Carlo uncertainty
//! over the (ensemble member x resample) grid.
//!
//! A participant counts as exposed when at least one of their ride minutes
//! exceeds the criterion threshold; duration and %-of-trip are averaged over
//! exposed participants (per-participant ratios, then the mean).

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::climate::{
    apply_deltas, monthly_delta, window_label, ClimateEnsemble, Ssp, YearWindow,
};
use crate::datamodel::{FeatureTable, RowContext};
use crate::lgbn::{fit_lgbn, predict_biomarkers, Dag, GaussianNetwork, StandardizedTable};
use crate::{Error, Result};

/// Heat-stress band over wet bulb globe temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskBand {
    NoStress,
    Mild,
    Moderate,
    High,
    Extreme,
}

impl RiskBand {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskBand::NoStress => "no_stress",
            RiskBand::Mild => "mild",
            RiskBand::Moderate => "moderate",
            RiskBand::High => "high",
            RiskBand::Extreme => "extreme",
        }
    }
}

/// Band boundaries in degrees C; intervals are half-open `[lo, hi)` and
/// everything below the first boundary is no-stress.
pub const WBGT_BAND_BOUNDS_C: [f64; 4] = [27.8, 29.4, 31.1, 32.2];

/// Classifies a WBGT value into its risk band.
pub fn classify_wbgt(t_wbgt_c: f64) -> RiskBand {
    if t_wbgt_c < WBGT_BAND_BOUNDS_C[0] {
        RiskBand::NoStress
    } else if t_wbgt_c < WBGT_BAND_BOUNDS_C[1] {
        RiskBand::Mild
    } else if t_wbgt_c < WBGT_BAND_BOUNDS_C[2] {
        RiskBand::Moderate
    } else if t_wbgt_c < WBGT_BAND_BOUNDS_C[3] {
        RiskBand::High
    } else {
        RiskBand::Extreme
    }
}

/// Exposure criterion: which per-minute value is compared to which
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureCriterion {
    /// High risk or worse: WBGT above 31.1 C.
    WbgtGt31_1,
    /// Skin temperature above 35 C.
    TskinGt35,
}

impl ExposureCriterion {
    pub fn threshold_c(self) -> f64 {
        match self {
            ExposureCriterion::WbgtGt31_1 => 31.1,
            ExposureCriterion::TskinGt35 => 35.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExposureCriterion::WbgtGt31_1 => "wbgt_gt_31_1",
            ExposureCriterion::TskinGt35 => "tskin_gt_35",
        }
    }

    pub fn all() -> [ExposureCriterion; 2] {
        [ExposureCriterion::WbgtGt31_1, ExposureCriterion::TskinGt35]
    }
}

/// Exposure statistics of one cohort pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureSummary {
    /// Share of participants with at least one exceeding minute, percent.
    pub pct_participants: f64,
    /// Mean exceeding minutes over exposed participants; missing when no
    /// participant is exposed.
    pub mean_duration_min: Option<f64>,
    /// Mean per-participant share of the trip spent above threshold,
    /// percent of trip minutes.
    pub mean_pct_of_trip: Option<f64>,
}

/// Computes exposure metrics from per-minute values grouped by participant.
pub fn exposure_metrics(
    per_participant: &BTreeMap<String, Vec<f64>>,
    threshold: f64,
) -> Result<ExposureSummary> {
    if per_participant.is_empty() {
        return Err(Error::invalid("no participants"));
    }
    let mut exposed = 0usize;
    let mut durations = Vec::new();
    let mut trip_shares = Vec::new();
    for minutes in per_participant.values() {
        if minutes.is_empty() {
            continue;
        }
        let exceeding = minutes.iter().filter(|v| **v > threshold).count();
        if exceeding > 0 {
            exposed += 1;
            durations.push(exceeding as f64);
            trip_shares.push(exceeding as f64 / minutes.len() as f64 * 100.0);
        }
    }
    let total = per_participant.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ExposureSummary {
        pct_participants: exposed as f64 / total as f64 * 100.0,
        mean_duration_min: (!durations.is_empty()).then(|| mean(&durations)),
        mean_pct_of_trip: (!trip_shares.is_empty()).then(|| mean(&trip_shares)),
    })
}

/// Groups an aligned per-row value vector by participant.
pub fn group_rows_by_participant(
    context: &[RowContext],
    values: &[f64],
) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (c, v) in context.iter().zip(values) {
        out.entry(c.participant_id.clone()).or_default().push(*v);
    }
    out
}

/// Mean and population standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub std: f64,
}

fn summarize(values: &[f64]) -> Option<SummaryStat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some(SummaryStat { mean, std: var.sqrt() })
}

/// Pooled (member x bootstrap) summary of one (criterion, window) cell set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSummary {
    pub criterion: ExposureCriterion,
    pub ssp: Ssp,
    pub window: String,
    pub pct_participants: SummaryStat,
    pub duration_min: Option<SummaryStat>,
    pub pct_trip: Option<SummaryStat>,
    /// Number of grid cells pooled.
    pub cells: usize,
    pub failed_draws: usize,
    /// Per-member mean exposure share, for the per-source diagnostic
    /// breakdown.
    pub per_member_pct: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    /// Number of bootstrap resamples.
    pub b: usize,
    pub seed: u64,
    pub ssp: Ssp,
    pub baseline_years: YearWindow,
    pub windows: Vec<YearWindow>,
    pub criteria: Vec<ExposureCriterion>,
}

fn derive_seed(seed: u64, draw: u64) -> u64 {
    // splitmix64 over (seed, draw) so the per-draw streams are independent
    // of scheduling.
    let mut z = seed ^ draw.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Resamples subjects with replacement and stacks their rows.
fn resample_table(table: &FeatureTable, ids: &[String], rng: &mut ChaCha8Rng) -> FeatureTable {
    let mut rows = Vec::new();
    let mut context = Vec::new();
    for _ in 0..ids.len() {
        let pick = &ids[rng.random_range(0..ids.len())];
        for (r, c) in table.rows.iter().zip(&table.context) {
            if &r.participant_id == pick {
                rows.push(r.clone());
                context.push(c.clone());
            }
        }
    }
    FeatureTable { rows, context }
}

/// One bootstrap refit: resample the fit subjects with the (seed, draw)
/// stream and fit the fixed structure. This is exactly what each grid draw
/// of [`bootstrap_uncertainty`] does, exposed so the two-draw identity can
/// be checked externally.
pub fn single_bootstrap_draw(
    table: &FeatureTable,
    fit_ids: &BTreeSet<String>,
    structure: &Dag,
    seed: u64,
    draw: u64,
) -> Result<GaussianNetwork> {
    let ids: Vec<String> = fit_ids.iter().cloned().collect();
    if ids.is_empty() {
        return Err(Error::invalid("no fit subjects"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, draw));
    let boot = resample_table(table, &ids, &mut rng);
    let std_table = StandardizedTable::from_table(&boot)?;
    fit_lgbn(structure, &std_table, "bootstrap", seed)
}

struct CellMetrics {
    member: String,
    window: String,
    criterion: ExposureCriterion,
    summary: ExposureSummary,
}

fn criterion_values(
    criterion: ExposureCriterion,
    perturbed: &FeatureTable,
    predictions: &BTreeMap<String, Vec<f64>>,
) -> Vec<f64> {
    match criterion {
        ExposureCriterion::WbgtGt31_1 => perturbed.rows.iter().map(|r| r.t_wbgt).collect(),
        ExposureCriterion::TskinGt35 => predictions["t_skin"].clone(),
    }
}

/// Bootstrap Monte Carlo over (ensemble member x resample): refit the fixed
/// structure on resampled subjects, forecast under every member and window,
/// and pool exposure metrics with mean +/- std per (criterion, window).
pub fn bootstrap_uncertainty(
    table: &FeatureTable,
    fit_ids: &BTreeSet<String>,
    structure: &Dag,
    ensemble: &ClimateEnsemble,
    config: &BootstrapConfig,
) -> Result<Vec<GridSummary>> {
    if config.b < 2 {
        return Err(Error::invalid("need at least 2 bootstrap draws"));
    }
    if config.windows.is_empty() || config.criteria.is_empty() {
        return Err(Error::invalid("need at least one window and criterion"));
    }
    let ids: Vec<String> = fit_ids.iter().cloned().collect();
    if ids.is_empty() {
        return Err(Error::invalid("no fit subjects"));
    }

    // The perturbed tables are draw-independent: compute once per
    // (member, window).
    let models = ensemble.models();
    let mut perturbed: BTreeMap<(String, String), FeatureTable> = BTreeMap::new();
    for model in &models {
        for &window in &config.windows {
            let deltas =
                monthly_delta(ensemble, model, config.ssp, window, config.baseline_years)?;
            perturbed
                .insert((model.clone(), window_label(window)), apply_deltas(table, &deltas));
        }
    }

    let draws: Vec<std::result::Result<Vec<CellMetrics>, String>> = (0..config.b as u64)
        .into_par_iter()
        .map(|draw| {
            let net = single_bootstrap_draw(table, fit_ids, structure, config.seed, draw)
                .map_err(|e| e.to_string())?;
            let mut cells = Vec::new();
            for ((model, window), ptable) in &perturbed {
                let predictions = predict_biomarkers(&net, ptable).map_err(|e| e.to_string())?;
                for &criterion in &config.criteria {
                    let values = criterion_values(criterion, ptable, &predictions);
                    let grouped = group_rows_by_participant(&ptable.context, &values);
                    let summary = exposure_metrics(&grouped, criterion.threshold_c())
                        .map_err(|e| e.to_string())?;
                    cells.push(CellMetrics {
                        member: model.clone(),
                        window: window.clone(),
                        criterion,
                        summary,
                    });
                }
            }
            Ok(cells)
        })
        .collect();

    let failed = draws.iter().filter(|d| d.is_err()).count();
    for d in draws.iter().filter_map(|d| d.as_ref().err()) {
        log::warn!("bootstrap draw failed: {}", d);
    }
    if failed * 10 > config.b {
        return Err(Error::invalid(format!(
            "{} of {} bootstrap draws failed (> 10%)",
            failed, config.b
        )));
    }

    let mut grid: BTreeMap<(ExposureCriterion, String), Vec<CellMetrics>> = BTreeMap::new();
    for draw in draws.into_iter().flatten() {
        for cell in draw {
            grid.entry((cell.criterion, cell.window.clone())).or_default().push(cell);
        }
    }

    let mut out = Vec::new();
    for ((criterion, window), cells) in grid {
        let pct: Vec<f64> = cells.iter().map(|c| c.summary.pct_participants).collect();
        let durations: Vec<f64> =
            cells.iter().filter_map(|c| c.summary.mean_duration_min).collect();
        let shares: Vec<f64> =
            cells.iter().filter_map(|c| c.summary.mean_pct_of_trip).collect();

        let mut per_member: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for c in &cells {
            per_member.entry(c.member.clone()).or_default().push(c.summary.pct_participants);
        }
        let per_member_pct = per_member
            .into_iter()
            .map(|(m, v)| {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (m, mean)
            })
            .collect();

        out.push(GridSummary {
            criterion,
            ssp: config.ssp,
            window,
            pct_participants: summarize(&pct).expect("cells present"),
            duration_min: summarize(&durations),
            pct_trip: summarize(&shares),
            cells: cells.len(),
            failed_draws: failed,
            per_member_pct,
        });
    }
    Ok(out)
}

/// Present-day exposure rows: the WBGT criterion over measured weather and
/// the skin-temperature criterion over both measured and model-predicted
/// values, labeled by basis.
pub fn present_exposure(
    table: &FeatureTable,
    net: &GaussianNetwork,
) -> Result<Vec<(ExposureCriterion, String, ExposureSummary)>> {
    let mut out = Vec::new();

    let wbgt_values: Vec<f64> = table.rows.iter().map(|r| r.t_wbgt).collect();
    let grouped = group_rows_by_participant(&table.context, &wbgt_values);
    out.push((
        ExposureCriterion::WbgtGt31_1,
        "present_measured".to_string(),
        exposure_metrics(&grouped, ExposureCriterion::WbgtGt31_1.threshold_c())?,
    ));

    let measured_skin: Vec<f64> = table.rows.iter().map(|r| r.t_skin).collect();
    let grouped = group_rows_by_participant(&table.context, &measured_skin);
    out.push((
        ExposureCriterion::TskinGt35,
        "present_measured".to_string(),
        exposure_metrics(&grouped, ExposureCriterion::TskinGt35.threshold_c())?,
    ));

    let predictions = predict_biomarkers(net, table)?;
    let grouped = group_rows_by_participant(&table.context, &predictions["t_skin"]);
    out.push((
        ExposureCriterion::TskinGt35,
        "present_predicted".to_string(),
        exposure_metrics(&grouped, ExposureCriterion::TskinGt35.threshold_c())?,
    ));

    Ok(out)
}
