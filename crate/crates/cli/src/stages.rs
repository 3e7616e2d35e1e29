//! The seven pipeline stages behind the subcommands.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};

use heatcast_core::climate::{
    apply_deltas, load_ensemble, monthly_delta, window_label, Ssp, ENSEMBLE_HEADER,
};
use heatcast_core::datamodel::{
    load_feature_table, load_trips, split_subjects, store_trip, validate_trip,
    write_feature_table, FeatureTable, SubjectSplit, BIOMARKER_NAMES,
};
use heatcast_core::features::extract_features;
use heatcast_core::lgbn::{train_pipeline, GaussianNetwork, TrainOptions};
use heatcast_core::stats::{correlation_network, PairPolicy};
use heatcast_core::survivability::{
    bootstrap_uncertainty, present_exposure, BootstrapConfig, ExposureCriterion,
};
use heatcast_core::synth::{generate_cohort, generate_ensemble_fixture, CohortSpec};

use crate::config::RunConfig;
use crate::manifest::{file_hash, Manifest};

fn write_with_hash(path: &Path, hash: &str, body: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# manifest_hash={}", hash)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{:.6}", x)).unwrap_or_default()
}

/// `synth`: generate the cohort, its ground truth, and the climate-ensemble
/// fixture.
pub fn run_synth(config: &RunConfig) -> anyhow::Result<()> {
    let hash = config.manifest_hash();
    let seed = config.effective_seed();
    let spec = CohortSpec {
        n: config.synth.subjects,
        seed,
        start_year: config.synth.start_year,
        ride_minutes: (config.synth.ride_minutes_min, config.synth.ride_minutes_max),
        ..CohortSpec::default()
    };
    let (trips, truth) = generate_cohort(&spec)?;

    let data_dir = &config.paths.data_dir;
    fs::create_dir_all(data_dir)?;
    for (trip, trip_truth) in trips.iter().zip(&truth.trips) {
        store_trip(data_dir, trip)?;
        let gt_path = data_dir.join(&trip.participant_id).join("ground_truth.json");
        fs::write(&gt_path, serde_json::to_string_pretty(trip_truth)?)?;
    }
    let cohort_truth = serde_json::json!({
        "manifest_hash": hash,
        "seed": truth.seed,
        "planted": truth.planted,
        "driver_stats": truth.driver_stats,
    });
    fs::write(
        data_dir.join("cohort_ground_truth.json"),
        serde_json::to_string_pretty(&cohort_truth)?,
    )?;

    let models: Vec<&str> =
        config.synth.ensemble_models.iter().map(|s| s.as_str()).collect();
    let ensemble = generate_ensemble_fixture(&models, seed);
    let mut body = String::from(ENSEMBLE_HEADER);
    body.push('\n');
    for r in ensemble.records() {
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.model, r.ssp, r.year, r.month, r.tas_c, r.hurs_pct, r.rsds_wm2
        ));
    }
    write_with_hash(&config.paths.ensemble_csv, &hash, &body)?;

    Manifest::new("synth", &hash, seed).write(&config.paths.out_dir)?;
    log::info!("synth: {} trips -> {}", trips.len(), data_dir.display());
    Ok(())
}

/// `features`: streams to the one-minute feature table.
pub fn run_features(config: &RunConfig) -> anyhow::Result<()> {
    let hash = config.manifest_hash();
    let trips = load_trips(&config.paths.data_dir)?;
    if trips.is_empty() {
        bail!("no participant directories under {}", config.paths.data_dir.display());
    }
    for trip in &trips {
        let report = validate_trip(trip);
        if !report.is_empty() {
            bail!("{} failed validation: {}", trip.participant_id, report.summary());
        }
    }
    let table = extract_features(&trips)?;
    let out = &config.paths.out_dir;
    fs::create_dir_all(out)?;
    write_feature_table(
        &out.join("features.csv"),
        &out.join("context.csv"),
        &table,
        Some(&hash),
    )?;
    Manifest::new("features", &hash, config.effective_seed()).write(out)?;
    log::info!("features: {} rows from {} trips", table.len(), trips.len());
    Ok(())
}

fn load_features(config: &RunConfig) -> anyhow::Result<FeatureTable> {
    let out = &config.paths.out_dir;
    let table = load_feature_table(&out.join("features.csv"), &out.join("context.csv"))?;
    Ok(table)
}

/// `correlate`: restricted Pearson network with BH-adjusted significance.
pub fn run_correlate(config: &RunConfig) -> anyhow::Result<()> {
    let hash = config.manifest_hash();
    let table = load_features(config)?;
    let network = correlation_network(&table, &PairPolicy::biomarker_centred())?;

    let mut body = String::from("a,b,r,p,p_adj,retained\n");
    for pair in &network.all_pairs {
        body.push_str(&format!(
            "{},{},{:.6},{:.6e},{:.6e},{}\n",
            pair.a, pair.b, pair.r, pair.p, pair.p_adj, pair.retained
        ));
    }
    let out = &config.paths.out_dir;
    write_with_hash(&out.join("correlations.csv"), &hash, &body)?;

    let mut json = serde_json::to_value(&network)?;
    json["manifest_hash"] = serde_json::Value::String(hash.clone());
    fs::write(out.join("network.json"), serde_json::to_string_pretty(&json)?)?;

    Manifest::new("correlate", &hash, config.effective_seed()).write(out)?;
    log::info!(
        "correlate: {} of {} pairs retained",
        network.edges.len(),
        network.family_size
    );
    Ok(())
}

fn compute_split(config: &RunConfig, table: &FeatureTable) -> anyhow::Result<SubjectSplit> {
    let ids = table.participant_ids();
    Ok(split_subjects(
        &ids,
        (config.split.train, config.split.valid, config.split.test),
        config.effective_seed(),
    )?)
}

/// `train`: candidate structures, validation NMAE, selection, refit, and
/// held-out metrics.
pub fn run_train(config: &RunConfig) -> anyhow::Result<()> {
    let hash = config.manifest_hash();
    let seed = config.effective_seed();
    let table = load_features(config)?;
    let split = compute_split(config, &table)?;
    let opts = TrainOptions {
        seed,
        notears_lambda1: config.train.notears_lambda1,
        notears_omegas: config.train.notears_omegas.clone(),
        hillclimb_max_iters: config.train.hillclimb_max_iters,
    };
    let outcome = train_pipeline(&table, &split, &opts)?;

    let out = &config.paths.out_dir;
    fs::create_dir_all(out)?;

    let mut model_json = outcome.network.to_json();
    model_json["manifest_hash"] = serde_json::Value::String(hash.clone());
    model_json["split"] = serde_json::json!({
        "train": split.train_ids,
        "valid": split.valid_ids,
        "test": split.test_ids,
    });
    fs::write(out.join("model.json"), serde_json::to_string_pretty(&model_json)?)?;

    let mut body = String::from("target,model,mae,nmae,r\n");
    for target in BIOMARKER_NAMES {
        let lin = &outcome.baseline_metrics[target];
        body.push_str(&format!(
            "{},linear,{:.6},{},{}\n",
            target,
            lin.mae,
            fmt_opt(lin.nmae),
            fmt_opt(lin.r)
        ));
        let lgbn = &outcome.test_metrics[target];
        body.push_str(&format!(
            "{},lgbn[{}],{:.6},{},{}\n",
            target,
            outcome.network.provenance,
            lgbn.mae,
            fmt_opt(lgbn.nmae),
            fmt_opt(lgbn.r)
        ));
    }
    write_with_hash(&out.join("metrics.csv"), &hash, &body)?;

    let mut body = String::from("provenance,edges,mean_valid_nmae,selected\n");
    for (i, cand) in outcome.scored.iter().enumerate() {
        body.push_str(&format!(
            "{},{},{:.6},{}\n",
            cand.candidate.provenance,
            cand.candidate.dag.edge_count(),
            cand.mean_nmae,
            i == outcome.selected
        ));
    }
    write_with_hash(&out.join("candidates.csv"), &hash, &body)?;

    Manifest::new("train", &hash, seed).write(out)?;
    log::info!(
        "train: selected {} (validation NMAE {:.4})",
        outcome.network.provenance,
        outcome.scored[outcome.selected].mean_nmae
    );
    Ok(())
}

fn load_model(config: &RunConfig) -> anyhow::Result<GaussianNetwork> {
    let path = config.paths.out_dir.join("model.json");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(GaussianNetwork::from_json(&value)?)
}

fn config_ssps(config: &RunConfig) -> anyhow::Result<Vec<Ssp>> {
    config
        .forecast
        .ssps
        .iter()
        .map(|s| Ssp::parse(s).map_err(Into::into))
        .collect()
}

/// `forecast`: per-(member, scenario, window) biomarker forecasts under the
/// monthly delta perturbation.
pub fn run_forecast(config: &RunConfig) -> anyhow::Result<()> {
    let hash = config.manifest_hash();
    let table = load_features(config)?;
    let net = load_model(config)?;
    let ensemble = load_ensemble(&config.paths.ensemble_csv)?;
    let baseline = (config.forecast.baseline_start, config.forecast.baseline_end);

    let mut body = String::from(
        "model,ssp,window,participant_id,window_index,t_air,r_h,t_wbgt,pred_t_skin,pred_rcc,pred_scr_n,pred_scl\n",
    );
    for model in ensemble.models() {
        for &ssp in &config_ssps(config)? {
            for &window in &config.forecast.windows {
                let deltas = monthly_delta(&ensemble, &model, ssp, window, baseline)?;
                let perturbed = apply_deltas(&table, &deltas);
                let predictions =
                    heatcast_core::climate::forecast_biomarkers(&net, &perturbed)?;
                for (i, row) in perturbed.rows.iter().enumerate() {
                    body.push_str(&format!(
                        "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                        model,
                        ssp,
                        window_label(window),
                        row.participant_id,
                        row.window_index,
                        row.t_air,
                        row.r_h,
                        row.t_wbgt,
                        predictions["t_skin"][i],
                        predictions["rcc"][i],
                        predictions["scr_n"][i],
                        predictions["scl"][i],
                    ));
                }
            }
        }
    }
    let out = &config.paths.out_dir;
    write_with_hash(&out.join("forecast.csv"), &hash, &body)?;
    Manifest::new("forecast", &hash, config.effective_seed()).write(out)?;
    Ok(())
}

/// `survive`: present-day exposure plus the bootstrapped forecast grid.
pub fn run_survive(config: &RunConfig) -> anyhow::Result<()> {
    let hash = config.manifest_hash();
    let seed = config.effective_seed();
    let table = load_features(config)?;
    let net = load_model(config)?;
    let ensemble = load_ensemble(&config.paths.ensemble_csv)?;
    let split = compute_split(config, &table)?;
    let mut fit_ids: BTreeSet<String> = split.train_ids.clone();
    fit_ids.extend(split.valid_ids.iter().cloned());

    let mut body = String::from(
        "criterion,ssp,window,pct_participants_mean,pct_participants_std,duration_min_mean,duration_min_std,pct_trip_mean,pct_trip_std\n",
    );
    for (criterion, basis, summary) in present_exposure(&table, &net)? {
        body.push_str(&format!(
            "{},present,{},{:.6},,{},,{},\n",
            criterion.as_str(),
            basis,
            summary.pct_participants,
            fmt_opt(summary.mean_duration_min),
            fmt_opt(summary.mean_pct_of_trip),
        ));
    }

    let mut member_body = String::from("criterion,ssp,window,member,pct_participants_mean\n");
    for &ssp in &config_ssps(config)? {
        let bootstrap_config = BootstrapConfig {
            b: config.survive.bootstrap_draws,
            seed,
            ssp,
            baseline_years: (config.forecast.baseline_start, config.forecast.baseline_end),
            windows: config.forecast.windows.clone(),
            criteria: ExposureCriterion::all().to_vec(),
        };
        let summaries =
            bootstrap_uncertainty(&table, &fit_ids, &net.dag, &ensemble, &bootstrap_config)?;
        for s in &summaries {
            body.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{},{},{}\n",
                s.criterion.as_str(),
                s.ssp,
                s.window,
                s.pct_participants.mean,
                s.pct_participants.std,
                fmt_opt(s.duration_min.map(|d| d.mean)),
                fmt_opt(s.duration_min.map(|d| d.std)),
                fmt_opt(s.pct_trip.map(|d| d.mean)),
                fmt_opt(s.pct_trip.map(|d| d.std)),
            ));
            for (member, pct) in &s.per_member_pct {
                member_body.push_str(&format!(
                    "{},{},{},{},{:.6}\n",
                    s.criterion.as_str(),
                    s.ssp,
                    s.window,
                    member,
                    pct
                ));
            }
        }
    }

    let out = &config.paths.out_dir;
    write_with_hash(&out.join("survivability.csv"), &hash, &body)?;
    write_with_hash(&out.join("survivability_members.csv"), &hash, &member_body)?;
    Manifest::new("survive", &hash, seed).write(out)?;
    Ok(())
}

/// `report`: aggregate stage outputs into one JSON plus plot-ready CSVs,
/// refusing mismatched manifests.
pub fn run_report(config: &RunConfig) -> anyhow::Result<()> {
    let out = &config.paths.out_dir;
    let mut hashes: BTreeSet<String> = BTreeSet::new();
    let mut files_seen = Vec::new();
    for name in [
        "features.csv",
        "context.csv",
        "correlations.csv",
        "metrics.csv",
        "candidates.csv",
        "forecast.csv",
        "survivability.csv",
        "survivability_members.csv",
    ] {
        let path = out.join(name);
        if path.is_file() {
            if let Some(h) = file_hash(&path)? {
                hashes.insert(h);
                files_seen.push(name.to_string());
            }
        }
    }
    if files_seen.is_empty() {
        bail!("no stage outputs found under {}", out.display());
    }
    if hashes.len() > 1 {
        bail!(
            "manifest hashes disagree across outputs ({:?}); refusing to aggregate",
            hashes
        );
    }
    let hash = hashes.into_iter().next().unwrap();

    let mut report = serde_json::json!({
        "manifest_hash": hash,
        "files": files_seen,
    });
    for stage in ["synth", "features", "correlate", "train", "forecast", "survive"] {
        if let Ok(manifest) = Manifest::read(out, stage) {
            if manifest.manifest_hash != hash {
                bail!(
                    "stage {} ran under manifest {} but outputs carry {}",
                    stage,
                    manifest.manifest_hash,
                    hash
                );
            }
            report["stages"][stage] = serde_json::to_value(&manifest)?;
        }
    }

    let model_path = out.join("model.json");
    if model_path.is_file() {
        let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model_path)?)?;
        report["model"] = serde_json::json!({
            "provenance": model.get("provenance"),
            "edges": model.get("edges").and_then(|e| e.as_array()).map(|e| e.len()),
        });
    }

    // Plot-ready: per-(criterion, window) exposure trajectory.
    let surv_path = out.join("survivability.csv");
    if surv_path.is_file() {
        let text = fs::read_to_string(&surv_path)?;
        let mut body = String::from("criterion,window,pct_mean,pct_std\n");
        for line in text.lines().skip(2) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() >= 5 && fields[1] != "present" {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    fields[0], fields[2], fields[3], fields[4]
                ));
            }
        }
        write_with_hash(&out.join("exposure_trajectory.csv"), &hash, &body)?;
    }

    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Manifest::new("report", &hash, config.effective_seed()).write(out)?;
    Ok(())
}
