//! Pairwise Pearson correlation with Benjamini-Hochberg adjustment and the
//! restricted correlation network between feature categories.
//!
//! The BH family is exactly the policy-allowed pair set, mirroring the
//! restriction to biomarker-centred pairs; the family size is recorded in
//! the network metadata. Season enters as one-hot indicator columns.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::datamodel::{FeatureTable, Season, FEATURE_NAMES};
use crate::{Error, Result};

/// Category of a correlation-network node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureCategory {
    Physiological,
    Activity,
    Weather,
    Demographic,
    Season,
}

/// Category of a canonical feature or season indicator column.
pub fn category_of(name: &str) -> Option<FeatureCategory> {
    match name {
        "t_skin" | "rcc" | "scr_n" | "scl" => Some(FeatureCategory::Physiological),
        "speed" | "dst_c" | "acc_m" | "t_drive" => Some(FeatureCategory::Activity),
        "t_air" | "r_h" | "t_wbgt" => Some(FeatureCategory::Weather),
        "age" | "bmi" | "sleep" | "t_work" => Some(FeatureCategory::Demographic),
        "season_summer" | "season_winter" | "season_monsoon" => Some(FeatureCategory::Season),
        _ => None,
    }
}

/// Which category pairs the network retains edges between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPolicy {
    pub allowed: BTreeSet<(FeatureCategory, FeatureCategory)>,
}

impl PairPolicy {
    /// Biomarker-centred default: physiological against activity, season,
    /// weather and demographics, plus physiological-physiological pairs.
    pub fn biomarker_centred() -> Self {
        use FeatureCategory::*;
        let mut allowed = BTreeSet::new();
        for other in [Activity, Season, Weather, Demographic, Physiological] {
            allowed.insert(Self::key(Physiological, other));
        }
        Self { allowed }
    }

    fn key(a: FeatureCategory, b: FeatureCategory) -> (FeatureCategory, FeatureCategory) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn allows(&self, a: FeatureCategory, b: FeatureCategory) -> bool {
        self.allowed.contains(&Self::key(a, b))
    }
}

/// Pearson product-moment correlation with a two-sided p-value from the
/// t-distribution with n-2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid("series lengths differ"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid("need at least 3 points"));
    }
    let r = pearson_r(x, y)?;
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r.abs() * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok((r, p.clamp(0.0, 1.0)))
}

/// Correlation coefficient alone; errors on zero variance.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Benjamini-Hochberg step-up adjustment: monotone-enforced, clipped at 1,
/// returned in the input order.
pub fn bh_adjust(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value {} out of [0,1]", p)));
    }
    let m = pvals.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].partial_cmp(&pvals[b]).unwrap());

    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let scaled = pvals[idx] * m as f64 / (rank + 1) as f64;
        running_min = running_min.min(scaled).min(1.0);
        adjusted[idx] = running_min;
    }
    Ok(adjusted)
}

/// One tested feature pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairResult {
    pub a: String,
    pub b: String,
    pub r: f64,
    pub p: f64,
    pub p_adj: f64,
    pub retained: bool,
}

/// The pruned network plus the full tested-pair matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationNetwork {
    pub nodes: Vec<String>,
    /// Pairs passing both thresholds.
    pub edges: Vec<PairResult>,
    /// Every policy-allowed pair with its statistics.
    pub all_pairs: Vec<PairResult>,
    /// Number of tests the BH family comprised.
    pub family_size: usize,
    /// Pairs skipped because one column was constant.
    pub skipped: Vec<(String, String)>,
    pub r_threshold: f64,
    pub alpha: f64,
}

pub const EDGE_R_THRESHOLD: f64 = 0.1;
pub const EDGE_ALPHA: f64 = 0.05;

fn season_indicator(table: &FeatureTable, season: Season) -> Vec<f64> {
    table
        .context
        .iter()
        .map(|c| if c.season == season { 1.0 } else { 0.0 })
        .collect()
}

/// Builds the restricted correlation network over a feature table.
///
/// Edges are retained when `|r| > 0.1` and the BH-adjusted p-value is below
/// 0.05; the adjustment runs over exactly the policy-allowed pair family.
pub fn correlation_network(
    table: &FeatureTable,
    policy: &PairPolicy,
) -> Result<CorrelationNetwork> {
    if table.len() < 3 {
        return Err(Error::invalid("need at least 3 rows"));
    }

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for name in FEATURE_NAMES {
        columns.push((name.to_string(), table.column(name).unwrap()));
    }
    for (season, label) in [
        (Season::Summer, "season_summer"),
        (Season::Winter, "season_winter"),
        (Season::Monsoon, "season_monsoon"),
    ] {
        columns.push((label.to_string(), season_indicator(table, season)));
    }

    let mut tested: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            let ca = category_of(&columns[i].0).expect("known column");
            let cb = category_of(&columns[j].0).expect("known column");
            if !policy.allows(ca, cb) {
                continue;
            }
            match pearson(&columns[i].1, &columns[j].1) {
                Ok((r, p)) => tested.push((i, j, r, p)),
                Err(Error::DegenerateSeries(_)) => {
                    log::warn!(
                        "correlation pair ({}, {}) skipped: constant column",
                        columns[i].0,
                        columns[j].0
                    );
                    skipped.push((columns[i].0.clone(), columns[j].0.clone()));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let pvals: Vec<f64> = tested.iter().map(|t| t.3).collect();
    let adjusted = bh_adjust(&pvals)?;

    let mut all_pairs = Vec::with_capacity(tested.len());
    let mut edges = Vec::new();
    for ((i, j, r, p), p_adj) in tested.into_iter().zip(adjusted) {
        let retained = r.abs() > EDGE_R_THRESHOLD && p_adj < EDGE_ALPHA;
        let pair = PairResult {
            a: columns[i].0.clone(),
            b: columns[j].0.clone(),
            r,
            p,
            p_adj,
            retained,
        };
        if retained {
            edges.push(pair.clone());
        }
        all_pairs.push(pair);
    }

    Ok(CorrelationNetwork {
        nodes: columns.iter().map(|(n, _)| n.clone()).collect(),
        family_size: all_pairs.len(),
        edges,
        all_pairs,
        skipped,
        r_threshold: EDGE_R_THRESHOLD,
        alpha: EDGE_ALPHA,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_correlation_is_one() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let (r, p) = pearson(&x, &x).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(p < 1e-10);
    }

    #[test]
    fn exact_anticorrelation() {
        let x = [1.0, 2.0, 3.0];
        let y = [6.0, 4.0, 2.0];
        let (r, _) = pearson(&x, &y).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let x = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        let err = pearson(&x, &y).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn independent_gaussians_rarely_exceed_point_one() {
        let mut hits = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (r, _) = pearson(&x, &y).unwrap();
            if r.abs() < 0.1 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {}/100 seeds below 0.1", hits);
    }

    #[test]
    fn bh_step_up_oracle() {
        let adj = bh_adjust(&[0.005, 0.03, 0.04]).unwrap();
        assert!((adj[0] - 0.015).abs() < 1e-12);
        assert!((adj[1] - 0.04).abs() < 1e-12);
        assert!((adj[2] - 0.04).abs() < 1e-12);
    }

    #[test]
    fn bh_single_test_unchanged() {
        assert_eq!(bh_adjust(&[0.5]).unwrap(), vec![0.5]);
    }

    #[test]
    fn bh_equal_pvalues_stay_equal() {
        let adj = bh_adjust(&[0.02, 0.02]).unwrap();
        assert!((adj[0] - 0.02).abs() < 1e-12);
        assert!((adj[1] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn bh_rejects_out_of_range() {
        assert!(bh_adjust(&[0.5, 1.5]).is_err());
        assert!(bh_adjust(&[-0.1]).is_err());
    }

    proptest! {
        // Adjusted values are >= raw, <= 1, and sorted inputs map to
        // monotone outputs.
        #[test]
        fn bh_monotone_and_dominating(mut ps in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
            let adj = bh_adjust(&ps).unwrap();
            for (p, a) in ps.iter().zip(&adj) {
                prop_assert!(*a >= *p - 1e-12);
                prop_assert!(*a <= 1.0 + 1e-12);
            }
            ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let adj_sorted = bh_adjust(&ps).unwrap();
            for w in adj_sorted.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }

        // pearson(a*x + b, c*y + d) = sign(a*c) * pearson(x, y)
        #[test]
        fn pearson_affine_invariance(
            seed in any::<u64>(),
            a in prop::sample::select(vec![-2.5f64, -1.0, 0.5, 3.0]),
            c in prop::sample::select(vec![-1.5f64, -0.25, 1.0, 2.0]),
            b in -10.0f64..10.0,
            d in -10.0f64..10.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..200)
                .map(|i| 0.4 * x[i] + rng.random_range(-1.0..1.0))
                .collect();
            let (r0, _) = pearson(&x, &y).unwrap();
            let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let yt: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let (r1, _) = pearson(&xt, &yt).unwrap();
            let sign = (a * c).signum();
            prop_assert!((r1 - sign * r0).abs() < 1e-9, "r0={} r1={}", r0, r1);
        }
    }
}
