//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them
//! on success). Tolerances are pinned in code next to each assertion.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heatcast_core::climate::{apply_deltas, forecast_biomarkers, MonthlyDeltas, Ssp};
use heatcast_core::datamodel::{split_subjects, Channel, FeatureTable, Phase};
use heatcast_core::dsp;
use heatcast_core::features::{globe_temperature, rcc, wbgt, window_features};
use heatcast_core::lgbn::{
    fit_lgbn, joint_gaussian, learn_structure_hillclimb, notears_weights, select_model,
    threshold_dag, train_pipeline, Candidate, Dag, GaussianNetwork, NodeParams,
    NotearsOptions, ScoredCandidate, StandardizedTable, TrainOptions,
};
use heatcast_core::stats::bh_adjust;
use heatcast_core::survivability::{
    bootstrap_uncertainty, exposure_metrics, group_rows_by_participant,
    single_bootstrap_draw, BootstrapConfig, ExposureCriterion,
};
use heatcast_core::synth::{
    generate_cohort, generate_ensemble_fixture, generate_trip, CohortSpec, NoiseLevels,
    TripSpec,
};

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn assert_runtime(start: Instant, budget: Duration, criterion: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{}: took {:?}, budget {:?}",
        criterion,
        elapsed,
        budget
    );
}

#[test]
fn acceptance_01_equation_oracles() {
    let start = Instant::now();

    let tg = globe_temperature(500.0, 33.0, 70.0);
    assert!((tg - 38.6176).abs() <= 1e-9, "globe temperature {}", tg);

    let w = wbgt(25.0, 30.0, 40.0);
    assert!((w - 28.5).abs() <= 1e-9, "wbgt {}", w);

    let r = rcc(500.0, 180.0, 70.0, 10).unwrap();
    assert!((r - 45.4545).abs() <= 1e-3, "rcc {}", r);

    assert_runtime(start, Duration::from_secs(1), "criterion 1");
    println!(
        "criterion 1: PASS - equation oracles (T_g {:.4}, WBGT {:.1}, RCC {:.4})",
        tg, w, r
    );
}

#[test]
fn acceptance_02_filter_contracts() {
    let start = Instant::now();

    // Effective (forward-backward) response of the EDA low-pass.
    let eda = dsp::design_butterworth(&dsp::FilterSpec::lowpass(8, 0.8, 4.0)).unwrap();
    let dc = eda.zero_phase_gain(0.0);
    assert!((dc - 1.0).abs() <= 1e-6, "EDA DC gain {}", dc);
    let g19 = eda.zero_phase_gain(1.9);
    assert!(g19 <= 0.05, "EDA gain at 1.9 Hz {}", g19);

    let bvp = dsp::design_butterworth(&dsp::FilterSpec::bandpass(2, 0.5, 3.0, 64.0)).unwrap();
    let g005 = bvp.zero_phase_gain(0.05);
    assert!(g005 <= 0.01, "BVP gain at 0.05 Hz {}", g005);
    let g15 = bvp.zero_phase_gain(1.5);
    assert!(g15 >= 0.95, "BVP gain at 1.5 Hz {}", g15);

    assert_runtime(start, Duration::from_secs(5), "criterion 2");
    println!(
        "criterion 2: PASS - filter contracts (EDA DC {:.8}, 1.9 Hz {:.2e}; BVP 0.05 Hz {:.2e}, 1.5 Hz {:.5})",
        dc, g19, g005, g15
    );
}

fn round_trip_spec(hr: f64, scr: Vec<u32>, seed: u64) -> TripSpec {
    let minutes = scr.len();
    TripSpec {
        participant_id: "rt".into(),
        demographics: heatcast_core::datamodel::Demographics {
            age: 48.0,
            bmi: 20.6,
            sleep: 6.8,
            t_work: 10.0,
            hr_rest: 70.0,
            season: heatcast_core::datamodel::Season::Summer,
        },
        start_year: 2024,
        trip_month: 6,
        rest_minutes: 6,
        recovery_minutes: 5,
        hr_profile_bpm: vec![hr; minutes],
        scr_counts: scr,
        scl_profile_us: vec![14.0; minutes],
        skin_profile_c: vec![34.0; minutes],
        t_air_profile_c: vec![33.0; minutes],
        r_h_profile_pct: vec![70.0; minutes],
        speed_profile_kmh: vec![10.0; minutes],
        accel_profile_ms2: vec![5.0; minutes],
        sr_wm2: 500.0,
        // Criterion bound is sigma <= 0.01 uS on the conductance channel.
        noise: NoiseLevels { eda_us: 0.002, ..NoiseLevels::default() },
        seed,
    }
}

#[test]
fn acceptance_03_round_trip_recovery() {
    let start = Instant::now();

    let mut recovered = Vec::new();
    for (hr, seed) in [(60.0, 11u64), (90.0, 12), (150.0, 13)] {
        let trip = generate_trip(&round_trip_spec(hr, vec![3; 6], seed)).unwrap();
        let bvp = trip.stream(Phase::Ride, Channel::Bvp).unwrap();
        let filtered = dsp::filter_bvp(bvp).unwrap();
        let series = dsp::extract_heart_rate(&filtered, 10.0, 1.0).unwrap();
        assert!(!series.is_empty(), "no samples at {} bpm", hr);
        let mean = series.hr_bpm.iter().sum::<f64>() / series.len() as f64;
        assert!((mean - hr).abs() <= 2.0, "planted {} bpm, recovered {}", hr, mean);
        recovered.push(mean);
    }

    let counts = vec![5, 0, 9, 2, 13, 1, 7, 4];
    let trip = generate_trip(&round_trip_spec(90.0, counts.clone(), 21)).unwrap();
    let eda = trip.stream(Phase::Ride, Channel::Eda).unwrap();
    let filtered = dsp::filter_eda(eda).unwrap();
    let decomposition = dsp::decompose_eda(&filtered).unwrap();
    for (m, &expected) in counts.iter().enumerate() {
        let lo = m as f64 * 60.0;
        let got = decomposition
            .scr_events
            .iter()
            .filter(|e| e.time_s >= lo && e.time_s < lo + 60.0)
            .count() as u32;
        assert_eq!(got, expected, "SCR count in minute {}", m);
    }

    assert_runtime(start, Duration::from_secs(10), "criterion 3");
    println!(
        "criterion 3: PASS - round trips (HR {:.2}/{:.2}/{:.2} bpm for 60/90/150; SCR counts exact)",
        recovered[0], recovered[1], recovered[2]
    );
}

#[test]
fn acceptance_04_benjamini_hochberg_oracle() {
    let adj = bh_adjust(&[0.005, 0.03, 0.04]).unwrap();
    assert!((adj[0] - 0.015).abs() < 1e-12, "adjusted {:?}", adj);
    assert!((adj[1] - 0.04).abs() < 1e-12, "adjusted {:?}", adj);
    assert!((adj[2] - 0.04).abs() < 1e-12, "adjusted {:?}", adj);

    // Property over random p-vectors: adjusted >= raw, and sorted inputs
    // yield monotone outputs.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let m = rng.random_range(1..40);
        let mut ps: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let adjusted = bh_adjust(&ps).unwrap();
        for (p, a) in ps.iter().zip(&adjusted) {
            assert!(*a >= *p - 1e-12 && *a <= 1.0 + 1e-12);
        }
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sorted_adj = bh_adjust(&ps).unwrap();
        for w in sorted_adj.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }
    println!("criterion 4: PASS - BH oracle [0.015, 0.04, 0.04] and step-up properties");
}

fn chain_table(n: usize, seed: u64) -> StandardizedTable {
    // x1 -> x2 -> x3 with standardized edge weights 0.85.
    let beta = 0.85f64;
    let noise = (1.0 - beta * beta).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = DMatrix::zeros(n, 3);
    for i in 0..n {
        let x1 = gauss(&mut rng);
        let x2 = beta * x1 + noise * gauss(&mut rng);
        let x3 = beta * x2 + noise * gauss(&mut rng);
        data[(i, 0)] = x1;
        data[(i, 1)] = x2;
        data[(i, 2)] = x3;
    }
    StandardizedTable::from_matrix(vec!["x1".into(), "x2".into(), "x3".into()], &data).unwrap()
}

#[test]
fn acceptance_05_structure_learning_recovery() {
    let start = Instant::now();
    let truth = vec![(0usize, 1usize), (1, 2)];

    let mut hillclimb_hits = 0;
    let mut notears_hits = 0;
    let mut nested = 0;
    let seeds = 20u64;
    for seed in 0..seeds {
        let table = chain_table(1000, 500 + seed);

        let dag = learn_structure_hillclimb(&table, 200, seed).unwrap();
        if dag.skeleton() == truth {
            hillclimb_hits += 1;
        }

        let opts = NotearsOptions { lambda1: 0.1, seed, ..NotearsOptions::default() };
        let weights = notears_weights(&table, &opts).unwrap();
        if threshold_dag(&weights, 0.1).skeleton() == truth {
            notears_hits += 1;
        }

        let mut prev: Option<Vec<(usize, usize)>> = None;
        let mut ok = true;
        for omega in [0.05, 0.1, 0.2] {
            let edges = threshold_dag(&weights, omega).edges();
            if let Some(p) = &prev {
                ok &= edges.iter().all(|e| p.contains(e));
            }
            prev = Some(edges);
        }
        if ok {
            nested += 1;
        }
    }

    assert!(hillclimb_hits * 10 >= seeds * 9, "hill-climb skeleton {}/{}", hillclimb_hits, seeds);
    assert!(notears_hits * 10 >= seeds * 9, "continuous skeleton {}/{}", notears_hits, seeds);
    assert_eq!(nested, seeds, "nesting held in {}/{}", nested, seeds);

    assert_runtime(start, Duration::from_secs(120), "criterion 5");
    println!(
        "criterion 5: PASS - chain recovery (hill-climb {}/20, continuous {}/20, nesting 20/20)",
        hillclimb_hits, notears_hits
    );
}

fn random_network(rng: &mut ChaCha8Rng, d: usize) -> GaussianNetwork {
    // Random DAG via a random topological order and edge probability 0.4.
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut dag = Dag::empty(d);
    for i in 0..d {
        for j in (i + 1)..d {
            if rng.random_range(0.0..1.0) < 0.4 {
                dag.add_edge(order[i], order[j]).unwrap();
            }
        }
    }
    let params: Vec<NodeParams> = (0..d)
        .map(|node| NodeParams {
            intercept: rng.random_range(-1.0..1.0),
            coefficients: dag
                .parents(node)
                .iter()
                .map(|_| rng.random_range(-1.5..1.5))
                .collect(),
            residual_variance: rng.random_range(0.1..2.0),
        })
        .collect();
    GaussianNetwork {
        nodes: (0..d).map(|i| format!("n{}", i)).collect(),
        dag,
        params,
        means: (0..d).map(|_| rng.random_range(-5.0..5.0)).collect(),
        stds: (0..d).map(|_| rng.random_range(0.5..3.0)).collect(),
        provenance: "random".into(),
        seed: 0,
    }
}

#[test]
fn acceptance_06_inference_identity_and_psd() {
    // Conditional prediction equals the node's own regression when the
    // Markov blanket is observed (sink node, all parents in evidence).
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..40 {
        let d = 6;
        let n = 400;
        let mut data = DMatrix::zeros(n, d);
        for i in 0..n {
            for j in 0..(d - 1) {
                data[(i, j)] = gauss(&mut rng);
            }
            let y = 0.9 * data[(i, 0)] - 0.6 * data[(i, 2)] + 0.4 * gauss(&mut rng);
            data[(i, d - 1)] = y;
        }
        let names: Vec<String> = (0..d).map(|j| format!("v{}", j)).collect();
        let table = StandardizedTable::from_matrix(names.clone(), &data).unwrap();
        let dag = Dag::from_edges(d, &[(0, d - 1), (2, d - 1)]).unwrap();
        let net = fit_lgbn(&dag, &table, "test", 0).unwrap();

        let evidence: Vec<(String, f64)> = (0..(d - 1))
            .map(|j| (names[j].clone(), rng.random_range(-2.0..2.0)))
            .collect();
        let pred = net.predict(&evidence, &[names[d - 1].clone()]).unwrap();

        let p = &net.params[d - 1];
        let z0 = (evidence[0].1 - net.means[0]) / net.stds[0];
        let z2 = (evidence[2].1 - net.means[2]) / net.stds[2];
        let zy = p.intercept + p.coefficients[0] * z0 + p.coefficients[1] * z2;
        let local = net.means[d - 1] + zy * net.stds[d - 1];
        let got_z = (pred.means[0] - net.means[d - 1]) / net.stds[d - 1];
        let want_z = zy;
        assert!(
            (got_z - want_z).abs() <= 1e-6,
            "trial {}: standardized prediction {} vs local regression {}",
            trial,
            got_z,
            want_z
        );
        let _ = local;
    }

    // Joint covariance is symmetric PSD on 100 random networks.
    let mut min_eigenvalue = f64::INFINITY;
    for _ in 0..100 {
        let d = rng.random_range(2..10);
        let net = random_network(&mut rng, d);
        let (_, cov) = joint_gaussian(&net);
        let asym = (&cov - cov.transpose()).abs().max();
        assert!(asym <= 1e-9, "asymmetry {}", asym);
        let eig = cov.clone().symmetric_eigen();
        for ev in eig.eigenvalues.iter() {
            min_eigenvalue = min_eigenvalue.min(*ev);
            assert!(*ev >= -1e-9, "negative eigenvalue {}", ev);
        }
    }
    println!(
        "criterion 6: PASS - Markov-blanket identity (40 trials, 1e-6) and PSD joints (min eigenvalue {:.2e})",
        min_eigenvalue
    );
}

#[test]
fn acceptance_07_model_selection_fixture() {
    // Validation NMAEs of the five candidates; the continuous structure at
    // threshold 0.1 (0.1502) must be selected.
    let fixture = [
        ("hillclimb", 0.1547),
        ("ges", 0.1547),
        ("notears(0.05)", 0.1532),
        ("notears(0.1)", 0.1502),
        ("notears(0.2)", 0.1545),
    ];
    let scored: Vec<ScoredCandidate> = fixture
        .iter()
        .enumerate()
        .map(|(i, (tag, nmae))| ScoredCandidate {
            candidate: Candidate {
                dag: Dag::from_edges(6, &[(0, 1 + (i % 4))]).unwrap(),
                provenance: tag.to_string(),
            },
            per_target_nmae: BTreeMap::new(),
            mean_nmae: *nmae,
        })
        .collect();
    let idx = select_model(&scored).unwrap();
    assert_eq!(scored[idx].candidate.provenance, "notears(0.1)");
    assert!((scored[idx].mean_nmae - 0.1502).abs() < 1e-12);
    println!("criterion 7: PASS - selector picks notears(0.1) at NMAE 0.1502");
}

/// Small trained pipeline shared by criteria 8.
fn trained_fixture() -> (FeatureTable, GaussianNetwork) {
    let spec = CohortSpec { n: 16, seed: 42, ..CohortSpec::default() };
    let (trips, _) = generate_cohort(&spec).unwrap();
    let mut table = FeatureTable::default();
    for trip in &trips {
        let t = window_features(trip).unwrap();
        table.rows.extend(t.rows);
        table.context.extend(t.context);
    }
    let ids = table.participant_ids();
    let split = split_subjects(&ids, (0.5, 0.25, 0.25), 42).unwrap();
    let outcome = train_pipeline(&table, &split, &TrainOptions::default()).unwrap();
    (table, outcome.network)
}

#[test]
fn acceptance_08_forecast_identity_and_monotonicity() {
    let (table, net) = trained_fixture();

    // Zero-delta forecast equals present-day predictions exactly.
    let zero = MonthlyDeltas::zero("member", Ssp::Ssp245);
    let perturbed = apply_deltas(&table, &zero);
    let forecast = forecast_biomarkers(&net, &perturbed).unwrap();
    let present = forecast_biomarkers(&net, &table).unwrap();
    for target in ["t_skin", "rcc", "scr_n", "scl"] {
        assert_eq!(forecast[target], present[target], "{} differs under zero delta", target);
    }

    // Warming fixture: the composite weather -> t_skin effect is positive,
    // so mean predicted skin temperature rises strictly with the delta.
    let wbgt_idx = net.node_index("t_wbgt").unwrap();
    let tskin_idx = net.node_index("t_skin").unwrap();
    let effect = net.total_effect(wbgt_idx, tskin_idx);
    assert!(effect > 0.0, "fixture lost its positive weather path ({})", effect);

    let mut means = Vec::new();
    for dtas in [1.0, 2.0, 3.0] {
        let mut deltas = MonthlyDeltas::zero("member", Ssp::Ssp245);
        deltas.d_tas_c = [dtas; 12];
        let warmed = apply_deltas(&table, &deltas);
        let predictions = forecast_biomarkers(&net, &warmed).unwrap();
        let m =
            predictions["t_skin"].iter().sum::<f64>() / predictions["t_skin"].len() as f64;
        means.push(m);
    }
    assert!(
        means[0] < means[1] && means[1] < means[2],
        "mean predicted t_skin not strictly increasing: {:?}",
        means
    );
    println!(
        "criterion 8: PASS - zero-delta identity; t_skin means {:.4} < {:.4} < {:.4} under +1/+2/+3 C",
        means[0], means[1], means[2]
    );
}

#[test]
fn acceptance_09_exposure_oracle_and_bootstrap_identity() {
    // Hand-computed fixture: one of four participants exceeds in 5 of 10
    // minutes -> 25%, 5.0 min, 50% of trip.
    let mut cohort: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    cohort.insert("p1".into(), vec![30.0; 10]);
    cohort.insert("p2".into(), vec![30.0; 10]);
    cohort.insert("p3".into(), vec![30.0; 10]);
    cohort.insert(
        "p4".into(),
        vec![32.0, 32.0, 32.0, 32.0, 32.0, 30.0, 30.0, 30.0, 30.0, 30.0],
    );
    let summary = exposure_metrics(&cohort, 31.1).unwrap();
    assert_eq!(summary.pct_participants, 25.0);
    assert_eq!(summary.mean_duration_min, Some(5.0));
    assert_eq!(summary.mean_pct_of_trip, Some(50.0));

    // Threshold monotonicity on 100 random cohorts.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let subjects = rng.random_range(2..15);
        let mut c: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for s in 0..subjects {
            let minutes = rng.random_range(3..25);
            c.insert(
                format!("s{}", s),
                (0..minutes).map(|_| rng.random_range(25.0..40.0)).collect(),
            );
        }
        let t = rng.random_range(28.0..36.0);
        let bump = rng.random_range(0.1..4.0);
        let lo = exposure_metrics(&c, t).unwrap();
        let hi = exposure_metrics(&c, t + bump).unwrap();
        assert!(hi.pct_participants <= lo.pct_participants);
    }

    // Bootstrap with B = 2 on a zero-delta single-member ensemble: the
    // pooled mean/std reproduce the two independent refits exactly.
    let (table, net) = trained_fixture();
    let ensemble = generate_ensemble_fixture(&["solo"], 3);
    let fit_ids: BTreeSet<String> = table.participant_ids().into_iter().collect();
    let config = BootstrapConfig {
        b: 2,
        seed: 99,
        ssp: Ssp::Ssp245,
        // Future window identical to the baseline window: zero deltas.
        baseline_years: (2023, 2025),
        windows: vec![(2023, 2025)],
        criteria: vec![ExposureCriterion::TskinGt35],
    };
    let summaries =
        bootstrap_uncertainty(&table, &fit_ids, &net.dag, &ensemble, &config).unwrap();
    assert_eq!(summaries.len(), 1);
    let s = &summaries[0];
    assert_eq!(s.cells, 2);

    // Recompute the two refits through the same public draw API.
    let mut draw_pcts = Vec::new();
    for draw in 0..2u64 {
        let boot_net =
            single_bootstrap_draw(&table, &fit_ids, &net.dag, config.seed, draw).unwrap();
        let predictions =
            heatcast_core::lgbn::predict_biomarkers(&boot_net, &table).unwrap();
        let grouped = group_rows_by_participant(&table.context, &predictions["t_skin"]);
        draw_pcts.push(exposure_metrics(&grouped, 35.0).unwrap().pct_participants);
    }
    let mean = (draw_pcts[0] + draw_pcts[1]) / 2.0;
    let std = (draw_pcts[0] - draw_pcts[1]).abs() / 2.0;
    assert!(
        (s.pct_participants.mean - mean).abs() < 1e-9,
        "pooled mean {} vs two-refit mean {}",
        s.pct_participants.mean,
        mean
    );
    assert!(
        (s.pct_participants.std - std).abs() < 1e-9,
        "pooled std {} vs half-gap {}",
        s.pct_participants.std,
        std
    );
    println!(
        "criterion 9: PASS - exposure fixture (25%, 5.0 min, 50%); monotonicity x100; B=2 identity (mean {:.3}, std {:.3})",
        mean, std
    );
}

#[test]
fn acceptance_10_end_to_end_planted_pipeline() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    // Default pipeline settings: 100 subjects, B = 200, three ensemble
    // members, ssp245, the eight future windows.
    std::fs::write(
        &config_path,
        format!(
            "seed = 7\n[paths]\ndata_dir = {:?}\nensemble_csv = {:?}\nout_dir = {:?}\n",
            dir.path().join("data"),
            dir.path().join("ensemble.csv"),
            dir.path().join("out"),
        ),
    )
    .unwrap();

    let binary = env!("CARGO_BIN_EXE_heatcast");
    for stage in ["synth", "features", "train", "forecast", "survive"] {
        let status = std::process::Command::new(binary)
            .arg("--config")
            .arg(&config_path)
            .arg(stage)
            .status()
            .unwrap();
        assert!(status.success(), "stage {} failed", stage);
    }

    // Planted composite coefficient recovered within 15%.
    let truth: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("data/cohort_ground_truth.json")).unwrap(),
    )
    .unwrap();
    let planted = truth["planted"]["t_skin"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e[0] == "t_wbgt")
        .unwrap()[1]
        .as_f64()
        .unwrap();

    let model: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/model.json")).unwrap(),
    )
    .unwrap();
    let net = GaussianNetwork::from_json(&model).unwrap();
    let effect = net.total_effect(
        net.node_index("t_wbgt").unwrap(),
        net.node_index("t_skin").unwrap(),
    );
    assert!(
        (effect - planted).abs() <= 0.15 * planted.abs(),
        "recovered composite coefficient {} vs planted {}",
        effect,
        planted
    );

    // Survivability CSV exists with the Table-6 shape and non-empty std
    // columns on forecast rows.
    let surv = std::fs::read_to_string(dir.path().join("out/survivability.csv")).unwrap();
    let mut lines = surv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest_hash="));
    assert_eq!(
        lines.next().unwrap(),
        "criterion,ssp,window,pct_participants_mean,pct_participants_std,duration_min_mean,duration_min_std,pct_trip_mean,pct_trip_std"
    );
    let mut forecast_rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 9, "row shape: {}", line);
        if fields[1] != "present" {
            forecast_rows += 1;
            assert!(!fields[4].is_empty(), "empty pct std in {}", line);
        }
    }
    // 2 criteria x 8 windows.
    assert_eq!(forecast_rows, 16, "forecast row count");

    let elapsed = start.elapsed();
    assert_runtime(start, Duration::from_secs(600), "criterion 10");
    println!(
        "criterion 10: PASS - full pipeline in {:?}; composite t_wbgt->t_skin {:.4} vs planted {:.1}",
        elapsed, effect, planted
    );
}
