//! NMAE evaluation, candidate scoring and selection, the linear-regression
//! baseline, and the end-to-end training pipeline.

use std::collections::BTreeMap;

use crate::datamodel::{FeatureTable, SubjectSplit, BIOMARKER_NAMES, FEATURE_NAMES};
use crate::stats::pearson_r;
use crate::{Error, Result};

use super::notears::{notears_weights, threshold_dag, NotearsOptions};
use super::score::{ols_fit, StandardizedTable, Standardizer};
use super::{fit_lgbn, learn_structure_hillclimb, Dag, GaussianNetwork};

/// Per-target error metrics (Table-4 style).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalMetrics {
    pub mae: f64,
    /// MAE over the observed truth range in the evaluation split; missing
    /// when the range is zero.
    pub nmae: Option<f64>,
    /// Pearson correlation between predictions and truth; missing when
    /// either side is constant.
    pub r: Option<f64>,
}

/// Computes MAE, range-normalized MAE, and the prediction/truth correlation.
pub fn evaluate(pred: &[f64], truth: &[f64]) -> Result<EvalMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::invalid("prediction/truth lengths differ"));
    }
    if pred.len() < 3 {
        return Err(Error::invalid("need at least 3 points"));
    }
    let mae =
        pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64;
    let (min, max) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let range = max - min;
    let nmae = if range > 0.0 {
        Some(mae / range)
    } else {
        log::warn!("NMAE undefined: zero truth range");
        None
    };
    let r = pearson_r(pred, truth).ok();
    Ok(EvalMetrics { mae, nmae, r })
}

/// A structure candidate with its provenance tag.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub dag: Dag,
    pub provenance: String,
}

/// A candidate scored on the validation split.
#[derive(Debug, Clone)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    pub per_target_nmae: BTreeMap<String, f64>,
    pub mean_nmae: f64,
}

/// Argmin of mean NMAE; ties prefer fewer edges, then the lexicographically
/// smaller provenance tag.
pub fn select_model(scored: &[ScoredCandidate]) -> Result<usize> {
    if scored.is_empty() {
        return Err(Error::invalid("no candidates to select from"));
    }
    let mut best = 0usize;
    for i in 1..scored.len() {
        let (a, b) = (&scored[i], &scored[best]);
        let ord = a
            .mean_nmae
            .partial_cmp(&b.mean_nmae)
            .unwrap()
            .then(a.candidate.dag.edge_count().cmp(&b.candidate.dag.edge_count()))
            .then(a.candidate.provenance.cmp(&b.candidate.provenance));
        if ord == std::cmp::Ordering::Less {
            best = i;
        }
    }
    Ok(best)
}

/// The non-biomarker features used as prediction evidence.
pub fn evidence_names() -> Vec<String> {
    FEATURE_NAMES
        .iter()
        .filter(|n| !BIOMARKER_NAMES.contains(n))
        .map(|s| s.to_string())
        .collect()
}

/// Predicts the four biomarkers for every row of a table, conditioning on
/// the weather/activity/demographic evidence.
pub fn predict_biomarkers(
    net: &GaussianNetwork,
    table: &FeatureTable,
) -> Result<BTreeMap<String, Vec<f64>>> {
    let evidence = evidence_names();
    let targets: Vec<String> = BIOMARKER_NAMES.iter().map(|s| s.to_string()).collect();
    let predictor = net.predictor(&evidence, &targets)?;

    let mut out: BTreeMap<String, Vec<f64>> =
        targets.iter().map(|t| (t.clone(), Vec::with_capacity(table.len()))).collect();
    let mut values = vec![0.0; evidence.len()];
    for row in &table.rows {
        for (k, name) in evidence.iter().enumerate() {
            values[k] = row.get(name).expect("evidence names are canonical");
        }
        let means = predictor.predict(&values);
        for (t, m) in targets.iter().zip(means) {
            out.get_mut(t).unwrap().push(m);
        }
    }
    Ok(out)
}

fn score_candidate(
    candidate: Candidate,
    train: &StandardizedTable,
    valid: &FeatureTable,
    seed: u64,
) -> Result<ScoredCandidate> {
    let net = fit_lgbn(&candidate.dag, train, candidate.provenance.clone(), seed)?;
    let predictions = predict_biomarkers(&net, valid)?;
    let mut per_target_nmae = BTreeMap::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for target in BIOMARKER_NAMES {
        let truth = valid.column(target).unwrap();
        let metrics = evaluate(&predictions[target], &truth)?;
        if let Some(nmae) = metrics.nmae {
            per_target_nmae.insert(target.to_string(), nmae);
            sum += nmae;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("no target had a defined NMAE"));
    }
    Ok(ScoredCandidate { candidate, per_target_nmae, mean_nmae: sum / count as f64 })
}

/// Linear-regression baseline: one target regressed on all other features.
/// Coefficients are stored on the z-scale together with the standardizer.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LinearModel {
    pub target: String,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub target_index: usize,
    pub feature_indices: Vec<usize>,
    pub intercept_z: f64,
    pub coefficients_z: Vec<f64>,
}

impl LinearModel {
    pub fn predict_values(&self, values: &[f64]) -> f64 {
        let mut z = self.intercept_z;
        for (k, &j) in self.feature_indices.iter().enumerate() {
            z += self.coefficients_z[k] * self.standardizer.z(j, values[j]);
        }
        self.standardizer.un_z(self.target_index, z)
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Vec<f64> {
        table.rows.iter().map(|r| self.predict_values(&r.values())).collect()
    }
}

/// Ordinary least squares of `target` on all other canonical features.
pub fn fit_linear_baseline(table: &FeatureTable, target: &str) -> Result<LinearModel> {
    let target_index = FEATURE_NAMES
        .iter()
        .position(|n| *n == target)
        .ok_or_else(|| Error::invalid(format!("unknown target {}", target)))?;
    if table.len() < FEATURE_NAMES.len() + 2 {
        return Err(Error::invalid("too few rows for the linear baseline"));
    }
    let data = StandardizedTable::matrix_from_table(table);
    let standardizer = Standardizer::fit(&data);
    let z = standardizer.transform(&data);
    let feature_indices: Vec<usize> =
        (0..FEATURE_NAMES.len()).filter(|&j| j != target_index).collect();
    let fit = ols_fit(&z, target_index, &feature_indices)?;
    Ok(LinearModel {
        target: target.to_string(),
        feature_names: feature_indices.iter().map(|&j| FEATURE_NAMES[j].to_string()).collect(),
        standardizer,
        target_index,
        feature_indices,
        intercept_z: fit.intercept,
        coefficients_z: fit.coefficients,
    })
}

/// Knobs of the structure-learning stage.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub seed: u64,
    pub notears_lambda1: f64,
    pub notears_omegas: Vec<f64>,
    pub hillclimb_max_iters: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            notears_lambda1: 0.1,
            notears_omegas: vec![0.05, 0.1, 0.2],
            hillclimb_max_iters: 400,
        }
    }
}

/// Everything the training stage produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub scored: Vec<ScoredCandidate>,
    pub selected: usize,
    /// Winning structure refit on train+validation.
    pub network: GaussianNetwork,
    /// Per-target metrics of the refit network on the held-out test split.
    pub test_metrics: BTreeMap<String, EvalMetrics>,
    /// Per-target metrics of the linear baseline on the same split.
    pub baseline_metrics: BTreeMap<String, EvalMetrics>,
}

/// Candidate search, validation scoring, selection, refit on
/// train+validation, and held-out evaluation.
pub fn train_pipeline(
    table: &FeatureTable,
    split: &SubjectSplit,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    let train_table = table.subset(&split.train_ids);
    let valid_table = table.subset(&split.valid_ids);
    let test_table = table.subset(&split.test_ids);
    if train_table.is_empty() || valid_table.is_empty() || test_table.is_empty() {
        return Err(Error::invalid("a split has no feature rows"));
    }

    let train_std = StandardizedTable::from_table(&train_table)?;

    let mut candidates = Vec::new();
    candidates.push(Candidate {
        dag: learn_structure_hillclimb(&train_std, opts.hillclimb_max_iters, opts.seed)?,
        provenance: "hillclimb".to_string(),
    });
    let notears_opts = NotearsOptions {
        lambda1: opts.notears_lambda1,
        seed: opts.seed,
        ..NotearsOptions::default()
    };
    // One continuous optimization shared by all thresholds, so the edge
    // sets are nested across omegas by construction.
    let weights = notears_weights(&train_std, &notears_opts)?;
    for &omega in &opts.notears_omegas {
        candidates.push(Candidate {
            dag: threshold_dag(&weights, omega),
            provenance: format!("notears({})", omega),
        });
    }

    let scored: Vec<ScoredCandidate> = candidates
        .into_iter()
        .map(|c| score_candidate(c, &train_std, &valid_table, opts.seed))
        .collect::<Result<_>>()?;
    let selected = select_model(&scored)?;

    // Refit the winner on train+validation.
    let mut refit_ids = split.train_ids.clone();
    refit_ids.extend(split.valid_ids.iter().cloned());
    let refit_table = table.subset(&refit_ids);
    let refit_std = StandardizedTable::from_table(&refit_table)?;
    let network = fit_lgbn(
        &scored[selected].candidate.dag,
        &refit_std,
        scored[selected].candidate.provenance.clone(),
        opts.seed,
    )?;

    let predictions = predict_biomarkers(&network, &test_table)?;
    let mut test_metrics = BTreeMap::new();
    let mut baseline_metrics = BTreeMap::new();
    for target in BIOMARKER_NAMES {
        let truth = test_table.column(target).unwrap();
        test_metrics.insert(target.to_string(), evaluate(&predictions[target], &truth)?);
        let baseline = fit_linear_baseline(&refit_table, target)?;
        let base_pred = baseline.predict_table(&test_table);
        baseline_metrics.insert(target.to_string(), evaluate(&base_pred, &truth)?);
    }

    Ok(TrainOutcome { scored, selected, network, test_metrics, baseline_metrics })
}
