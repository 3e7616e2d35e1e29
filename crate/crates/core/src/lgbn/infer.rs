//! Joint-Gaussian conversion of a fitted network and conditional-Gaussian
//! prediction of target nodes given evidence.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

use super::GaussianNetwork;

/// Mean vector and covariance matrix of the network's joint distribution on
/// the standardized scale, computed by a topological forward pass.
pub fn joint_gaussian(net: &GaussianNetwork) -> (DVector<f64>, DMatrix<f64>) {
    let d = net.nodes.len();
    let order = net.dag.topological_order().expect("network DAG is acyclic");

    let mut mean = DVector::zeros(d);
    let mut cov = DMatrix::zeros(d, d);

    for &node in &order {
        let params = &net.params[node];
        let parents = net.dag.parents(node);

        let mut mu = params.intercept;
        for (k, &p) in parents.iter().enumerate() {
            mu += params.coefficients[k] * mean[p];
        }
        mean[node] = mu;

        // Cross-covariances with every other node processed so far, then
        // the node's own variance.
        for other in 0..d {
            if other == node {
                continue;
            }
            let mut c = 0.0;
            for (k, &p) in parents.iter().enumerate() {
                c += params.coefficients[k] * cov[(p, other)];
            }
            cov[(node, other)] = c;
            cov[(other, node)] = c;
        }
        let mut var = params.residual_variance;
        for (k, &p) in parents.iter().enumerate() {
            for (l, &q) in parents.iter().enumerate() {
                var += params.coefficients[k] * params.coefficients[l] * cov[(p, q)];
            }
        }
        cov[(node, node)] = var;
    }

    (mean, cov)
}

/// Precomputed conditional-Gaussian map for a fixed evidence/target node
/// split; applying it to a row is a single small mat-vec.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub evidence_nodes: Vec<usize>,
    pub target_nodes: Vec<usize>,
    evidence_means: Vec<f64>,
    evidence_stds: Vec<f64>,
    target_means: Vec<f64>,
    target_stds: Vec<f64>,
    /// Conditional mean prior (standardized): mu_t - K mu_e.
    bias: DVector<f64>,
    /// Gain K = Sigma_te Sigma_ee^-1.
    gain: DMatrix<f64>,
    /// Conditional variances (standardized scale).
    cond_var_z: Vec<f64>,
}

impl Predictor {
    /// Conditional means in original units for one evidence row (values
    /// aligned with `evidence_nodes`).
    pub fn predict(&self, evidence: &[f64]) -> Vec<f64> {
        let z = DVector::from_fn(evidence.len(), |i, _| {
            (evidence[i] - self.evidence_means[i]) / self.evidence_stds[i]
        });
        let cond = &self.bias + &self.gain * z;
        cond.iter()
            .enumerate()
            .map(|(t, zv)| self.target_means[t] + zv * self.target_stds[t])
            .collect()
    }

    /// Conditional variances in original units (constant across rows).
    pub fn variances(&self) -> Vec<f64> {
        self.cond_var_z
            .iter()
            .enumerate()
            .map(|(t, v)| v * self.target_stds[t] * self.target_stds[t])
            .collect()
    }
}

/// Prediction for one evidence row: conditional means and variances in
/// original units, ordered like the requested targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub targets: Vec<String>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GaussianNetwork {
    /// Builds the conditional map `targets | evidence`.
    pub fn predictor(&self, evidence: &[String], targets: &[String]) -> Result<Predictor> {
        let index = |name: &String| {
            self.node_index(name)
                .ok_or_else(|| Error::invalid(format!("unknown node {}", name)))
        };
        let evidence_nodes: Vec<usize> = evidence.iter().map(index).collect::<Result<_>>()?;
        let target_nodes: Vec<usize> = targets.iter().map(index).collect::<Result<_>>()?;
        for t in &target_nodes {
            if evidence_nodes.contains(t) {
                return Err(Error::invalid(format!(
                    "node {} is both evidence and target",
                    self.nodes[*t]
                )));
            }
        }

        let (mean, cov) = joint_gaussian(self);
        let ne = evidence_nodes.len();
        let nt = target_nodes.len();

        let mu_e = DVector::from_fn(ne, |i, _| mean[evidence_nodes[i]]);
        let mu_t = DVector::from_fn(nt, |i, _| mean[target_nodes[i]]);
        let sigma_tt =
            DMatrix::from_fn(nt, nt, |i, j| cov[(target_nodes[i], target_nodes[j])]);

        let (gain, cond_cov) = if ne == 0 {
            (DMatrix::zeros(nt, 0), sigma_tt)
        } else {
            let sigma_ee =
                DMatrix::from_fn(ne, ne, |i, j| cov[(evidence_nodes[i], evidence_nodes[j])]);
            let sigma_te =
                DMatrix::from_fn(nt, ne, |i, j| cov[(target_nodes[i], evidence_nodes[j])]);
            let gain = match sigma_ee.clone().cholesky() {
                Some(chol) => {
                    // K = Sigma_te Sigma_ee^-1 via solving Sigma_ee K^T = Sigma_et.
                    let kt = chol.solve(&sigma_te.transpose());
                    kt.transpose()
                }
                None => {
                    log::warn!("evidence covariance singular; using pseudo-inverse");
                    let pinv = sigma_ee
                        .clone()
                        .pseudo_inverse(1e-12)
                        .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {}", e)))?;
                    &sigma_te * pinv
                }
            };
            let cond_cov = &sigma_tt - &gain * sigma_te.transpose();
            (gain, cond_cov)
        };

        let bias = &mu_t - &gain * &mu_e;
        let cond_var_z: Vec<f64> =
            (0..nt).map(|i| cond_cov[(i, i)].max(0.0)).collect();

        Ok(Predictor {
            evidence_means: evidence_nodes.iter().map(|&i| self.means[i]).collect(),
            evidence_stds: evidence_nodes.iter().map(|&i| self.stds[i]).collect(),
            target_means: target_nodes.iter().map(|&i| self.means[i]).collect(),
            target_stds: target_nodes.iter().map(|&i| self.stds[i]).collect(),
            evidence_nodes,
            target_nodes,
            bias,
            gain,
            cond_var_z,
        })
    }

    /// One-shot conditional prediction; evidence values are in original
    /// units, keyed by node name.
    pub fn predict(
        &self,
        evidence: &[(String, f64)],
        targets: &[String],
    ) -> Result<Prediction> {
        let names: Vec<String> = evidence.iter().map(|(n, _)| n.clone()).collect();
        let predictor = self.predictor(&names, targets)?;
        let values: Vec<f64> = evidence.iter().map(|(_, v)| *v).collect();
        Ok(Prediction {
            targets: targets.to_vec(),
            means: predictor.predict(&values),
            variances: predictor.variances(),
        })
    }
}
