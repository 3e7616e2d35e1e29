//! Standardization, per-node least-squares fits, and the Gaussian BIC score.

use nalgebra::{DMatrix, DVector};

use crate::datamodel::{FeatureTable, FEATURE_NAMES};
use crate::{Error, Result};

use super::Dag;

const RIDGE_LAMBDA: f64 = 1e-6;
/// Floor on the residual variance, keeping log-likelihoods finite for
/// deterministic relations.
const VAR_FLOOR: f64 = 1e-12;

/// Per-column mean/std pairs for z-scoring (population statistics).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &DMatrix<f64>) -> Self {
        let n = data.nrows() as f64;
        let mut means = Vec::with_capacity(data.ncols());
        let mut stds = Vec::with_capacity(data.ncols());
        for j in 0..data.ncols() {
            let col = data.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            means.push(mean);
            // Constant columns map to z = 0 rather than dividing by zero.
            stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { means, stds }
    }

    pub fn transform(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = data.clone();
        for j in 0..z.ncols() {
            let m = self.means[j];
            let s = self.stds[j];
            for v in z.column_mut(j).iter_mut() {
                *v = (*v - m) / s;
            }
        }
        z
    }

    pub fn z(&self, col: usize, value: f64) -> f64 {
        (value - self.means[col]) / self.stds[col]
    }

    pub fn un_z(&self, col: usize, z: f64) -> f64 {
        self.means[col] + z * self.stds[col]
    }
}

/// A named data matrix with its z-scored view.
#[derive(Debug, Clone)]
pub struct StandardizedTable {
    pub names: Vec<String>,
    /// Standardized values, rows = observations.
    pub z: DMatrix<f64>,
    pub standardizer: Standardizer,
}

impl StandardizedTable {
    /// Standardizes `data` with its own statistics.
    pub fn from_matrix(names: Vec<String>, data: &DMatrix<f64>) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(Error::invalid("name/column count mismatch"));
        }
        if data.nrows() == 0 {
            return Err(Error::invalid("empty data matrix"));
        }
        let standardizer = Standardizer::fit(data);
        let z = standardizer.transform(data);
        Ok(Self { names, z, standardizer })
    }

    /// Standardizes `data` with previously fitted statistics (e.g. apply
    /// training statistics to a validation split).
    pub fn with_standardizer(
        names: Vec<String>,
        data: &DMatrix<f64>,
        standardizer: Standardizer,
    ) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(Error::invalid("name/column count mismatch"));
        }
        let z = standardizer.transform(data);
        Ok(Self { names, z, standardizer })
    }

    /// The 15 canonical features of a [`FeatureTable`] as a raw matrix.
    pub fn matrix_from_table(table: &FeatureTable) -> DMatrix<f64> {
        DMatrix::from_fn(table.len(), FEATURE_NAMES.len(), |i, j| table.rows[i].values()[j])
    }

    pub fn from_table(table: &FeatureTable) -> Result<Self> {
        let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        Self::from_matrix(names, &Self::matrix_from_table(table))
    }

    pub fn nrows(&self) -> usize {
        self.z.nrows()
    }
}

/// Result of one node's least-squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Maximum-likelihood residual variance (divisor n).
    pub residual_variance: f64,
    /// Gaussian log-likelihood of the fit at the MLE.
    pub log_likelihood: f64,
}

/// Least squares of column `node` on `parents` (plus intercept) over the
/// standardized matrix. A singular normal system falls back to a small
/// ridge and logs a warning.
pub fn ols_fit(z: &DMatrix<f64>, node: usize, parents: &[usize]) -> Result<OlsFit> {
    let n = z.nrows();
    if n < 2 {
        return Err(Error::invalid("need at least 2 rows"));
    }
    let k = parents.len();
    let y = z.column(node).into_owned();

    let beta = if k == 0 {
        DVector::from_vec(vec![y.sum() / n as f64])
    } else {
        let mut x = DMatrix::zeros(n, k + 1);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for (jj, &p) in parents.iter().enumerate() {
                x[(i, jj + 1)] = z[(i, p)];
            }
        }
        let xtx = x.transpose() * &x;
        let xty = x.transpose() * &y;
        match xtx.clone().cholesky() {
            Some(chol) => chol.solve(&xty),
            None => {
                log::warn!(
                    "singular design for node {} ({} parents); ridge fallback",
                    node,
                    k
                );
                let mut ridged = xtx;
                for i in 0..ridged.nrows() {
                    ridged[(i, i)] += RIDGE_LAMBDA;
                }
                ridged
                    .cholesky()
                    .ok_or_else(|| Error::invalid("ridge-regularized system still singular"))?
                    .solve(&xty)
            }
        }
    };

    let mut ssr = 0.0;
    for i in 0..n {
        let mut pred = beta[0];
        for (jj, &p) in parents.iter().enumerate() {
            pred += beta[jj + 1] * z[(i, p)];
        }
        let e = y[i] - pred;
        ssr += e * e;
    }
    let variance = (ssr / n as f64).max(VAR_FLOOR);
    let log_likelihood =
        -(n as f64) / 2.0 * ((2.0 * std::f64::consts::PI * variance).ln() + 1.0);

    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        residual_variance: variance,
        log_likelihood,
    })
}

/// Per-node decomposed BIC term: log-likelihood minus the local parameter
/// penalty (coefficients + intercept + variance).
pub fn node_bic(z: &DMatrix<f64>, node: usize, parents: &[usize]) -> Result<f64> {
    let n = z.nrows() as f64;
    let fit = ols_fit(z, node, parents)?;
    let k = parents.len() as f64 + 2.0;
    Ok(fit.log_likelihood - k / 2.0 * n.ln())
}

/// Convenience wrapper returning only the log-likelihood.
pub fn node_log_likelihood(z: &DMatrix<f64>, node: usize, parents: &[usize]) -> Result<f64> {
    Ok(ols_fit(z, node, parents)?.log_likelihood)
}

/// Gaussian BIC of a structure: summed node log-likelihoods minus
/// `(k/2) log n` with `k` the total number of free parameters.
pub fn gaussian_bic(structure: &Dag, table: &StandardizedTable) -> Result<f64> {
    let d = table.names.len();
    if structure.node_count() != d {
        return Err(Error::invalid("structure and table dimensions differ"));
    }
    if table.nrows() < d + 2 {
        return Err(Error::invalid(format!(
            "need at least {} rows, got {}",
            d + 2,
            table.nrows()
        )));
    }
    let mut total = 0.0;
    for node in 0..d {
        total += node_bic(&table.z, node, structure.parents(node))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller is plenty for test fixtures.
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn chain_data(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = DMatrix::zeros(n, 2);
        for i in 0..n {
            let x1 = gaussian(&mut rng);
            let x2 = 2.0 * x1 + gaussian(&mut rng);
            data[(i, 0)] = x1;
            data[(i, 1)] = x2;
        }
        data
    }

    #[test]
    fn parentless_node_fits_mean_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = DMatrix::from_fn(400, 1, |_, _| 5.0 + 2.0 * gaussian(&mut rng));
        let n = data.nrows() as f64;
        let mean = data.column(0).sum() / n;
        let var = data.column(0).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let fit = ols_fit(&data, 0, &[]).unwrap();
        assert!((fit.intercept - mean).abs() < 1e-12);
        assert!((fit.residual_variance - var).abs() < 1e-12);
    }

    #[test]
    fn deterministic_relation_recovers_exact_coefficient() {
        let mut data = DMatrix::zeros(100, 2);
        for i in 0..100 {
            let x = i as f64 / 10.0 - 5.0;
            data[(i, 0)] = x;
            data[(i, 1)] = 2.0 * x;
        }
        let fit = ols_fit(&data, 1, &[0]).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-9);
        assert!(fit.residual_variance <= 1e-10);
    }

    #[test]
    fn duplicated_column_takes_ridge_fallback() {
        let mut data = DMatrix::zeros(50, 3);
        for i in 0..50 {
            let x = i as f64;
            data[(i, 0)] = x;
            data[(i, 1)] = x; // exact duplicate
            data[(i, 2)] = 3.0 * x + 1.0;
        }
        let fit = ols_fit(&data, 2, &[0, 1]).unwrap();
        // The two coefficients split the effect; their sum is identified.
        assert!((fit.coefficients[0] + fit.coefficients[1] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn true_chain_outscores_empty_graph() {
        let data = chain_data(500, 11);
        let table = StandardizedTable::from_matrix(vec!["x1".into(), "x2".into()], &data).unwrap();
        let chain = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let empty = Dag::empty(2);
        let s_chain = gaussian_bic(&chain, &table).unwrap();
        let s_empty = gaussian_bic(&empty, &table).unwrap();
        assert!(s_chain > s_empty, "chain {} empty {}", s_chain, s_empty);
    }

    #[test]
    fn spurious_edge_usually_lowers_bic() {
        let mut wins = 0;
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let data = DMatrix::from_fn(500, 2, |_, _| gaussian(&mut rng));
            let table =
                StandardizedTable::from_matrix(vec!["a".into(), "b".into()], &data).unwrap();
            let with_edge = Dag::from_edges(2, &[(0, 1)]).unwrap();
            let empty = Dag::empty(2);
            if gaussian_bic(&empty, &table).unwrap() > gaussian_bic(&with_edge, &table).unwrap() {
                wins += 1;
            }
        }
        assert!(wins >= 38, "independent columns favored the edge too often: {}/40", wins);
    }

    #[test]
    fn bic_is_deterministic() {
        let data = chain_data(200, 5);
        let table = StandardizedTable::from_matrix(vec!["x1".into(), "x2".into()], &data).unwrap();
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let a = gaussian_bic(&dag, &table).unwrap();
        let b = gaussian_bic(&dag, &table).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bic_requires_enough_rows() {
        let data = DMatrix::zeros(3, 2);
        let table = StandardizedTable::from_matrix(vec!["a".into(), "b".into()], &data);
        // 3 rows < 2 + 2
        assert!(gaussian_bic(&Dag::empty(2), &table.unwrap()).is_err());
    }
}
