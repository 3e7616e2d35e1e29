//! Linear Gaussian Bayesian networks: structure learning (BIC hill-climb
//! and continuous acyclicity-penalized search), maximum-likelihood parameter
//! fitting, conditional-Gaussian prediction, and NMAE-based model selection.
//!
//! All structure learning operates on z-scored variables; the weight
//! thresholds applied to continuously-learned adjacency matrices are only
//! meaningful on the standardized scale.

mod eval;
mod hillclimb;
mod infer;
mod notears;
mod score;

pub use eval::{
    evaluate, evidence_names, fit_linear_baseline, predict_biomarkers, select_model,
    train_pipeline, Candidate, EvalMetrics, LinearModel, ScoredCandidate, TrainOptions,
    TrainOutcome,
};
pub use hillclimb::learn_structure_hillclimb;
pub use infer::{joint_gaussian, Predictor};
pub use notears::{
    learn_structure_notears, notears_weights, threshold_dag, NotearsOptions,
};
pub use score::{gaussian_bic, node_log_likelihood, ols_fit, StandardizedTable, Standardizer};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Directed acyclic graph over an indexed node set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Self { n, parents: vec![Vec::new(); n] }
    }

    /// Builds a DAG from an edge list, rejecting cycles.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut dag = Self::empty(n);
        for &(from, to) in edges {
            dag.add_edge(from, to)?;
        }
        Ok(dag)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(&from)
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    /// Edges as (parent, child) pairs in deterministic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((p, child));
            }
        }
        out.sort_unstable();
        out
    }

    /// True if a directed path `from -> ... -> to` exists.
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        // DFS backwards over parent lists.
        let mut stack = vec![to];
        let mut seen = vec![false; self.n];
        while let Some(node) = stack.pop() {
            for &p in &self.parents[node] {
                if p == from {
                    return true;
                }
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        false
    }

    /// Adds `from -> to`, failing if it would create a cycle or duplicate.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if from >= self.n || to >= self.n {
            return Err(Error::invalid("edge endpoint out of range"));
        }
        if from == to {
            return Err(Error::invalid("self-loop"));
        }
        if self.has_edge(from, to) {
            return Err(Error::invalid("duplicate edge"));
        }
        if self.has_path(to, from) {
            return Err(Error::invalid(format!("edge {} -> {} would close a cycle", from, to)));
        }
        self.parents[to].push(from);
        self.parents[to].sort_unstable();
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> bool {
        let before = self.parents[to].len();
        self.parents[to].retain(|&p| p != from);
        self.parents[to].len() != before
    }

    /// Kahn topological order; `None` if the graph is cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree = vec![0usize; self.n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (child, ps) in self.parents.iter().enumerate() {
            indegree[child] = ps.len();
            for &p in ps {
                children[p].push(child);
            }
        }
        let mut queue: Vec<usize> = (0..self.n).filter(|&i| indegree[i] == 0).collect();
        queue.sort_unstable();
        let mut order = Vec::with_capacity(self.n);
        let mut head = 0;
        while head < queue.len() {
            let node = queue[head];
            head += 1;
            order.push(node);
            for &c in &children[node] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Undirected edge set, for skeleton comparisons.
    pub fn skeleton(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Parameters of one node's linear Gaussian conditional, standardized scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    pub intercept: f64,
    /// Coefficient per parent, keyed by parent node index (aligned with the
    /// DAG's parent list).
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
}

/// A fitted linear Gaussian Bayesian network.
///
/// Parameters live on the standardized scale; `means`/`stds` carry the
/// fitting split's statistics for converting to and from original units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianNetwork {
    pub nodes: Vec<String>,
    pub dag: Dag,
    pub params: Vec<NodeParams>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub provenance: String,
    pub seed: u64,
}

impl GaussianNetwork {
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Total (summed over directed paths) standardized effect of `from`
    /// on `to`: the product of edge coefficients along each path.
    pub fn total_effect(&self, from: usize, to: usize) -> f64 {
        // Dynamic programming in topological order.
        let order = self.dag.topological_order().expect("network DAG is acyclic");
        let mut effect = vec![0.0; self.nodes.len()];
        effect[from] = 1.0;
        for &node in &order {
            if node == from {
                continue;
            }
            let mut acc = 0.0;
            for (k, &p) in self.dag.parents(node).iter().enumerate() {
                acc += effect[p] * self.params[node].coefficients[k];
            }
            effect[node] = acc;
        }
        effect[to]
    }

    /// Serializes the model file representation.
    pub fn to_json(&self) -> serde_json::Value {
        let per_node: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let coeffs: BTreeMap<String, f64> = self
                    .dag
                    .parents(i)
                    .iter()
                    .zip(&self.params[i].coefficients)
                    .map(|(&p, &c)| (self.nodes[p].clone(), c))
                    .collect();
                serde_json::json!({
                    "node": name,
                    "intercept": self.params[i].intercept,
                    "coefficients": coeffs,
                    "residual_variance": self.params[i].residual_variance,
                    "mean": self.means[i],
                    "std": self.stds[i],
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .dag
            .edges()
            .into_iter()
            .map(|(a, b)| serde_json::json!([self.nodes[a], self.nodes[b]]))
            .collect();
        serde_json::json!({
            "nodes": self.nodes,
            "edges": edges,
            "parameters": per_node,
            "provenance": self.provenance,
            "seed": self.seed,
        })
    }

    /// Parses the model file representation written by [`Self::to_json`].
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let bad = |msg: &str| Error::invalid(format!("model json: {}", msg));
        let nodes: Vec<String> = serde_json::from_value(
            value.get("nodes").ok_or_else(|| bad("missing nodes"))?.clone(),
        )
        .map_err(|_| bad("bad nodes"))?;
        let index = |name: &str| -> Result<usize> {
            nodes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| bad(&format!("unknown node {}", name)))
        };
        let edge_vals: Vec<(String, String)> = serde_json::from_value(
            value.get("edges").ok_or_else(|| bad("missing edges"))?.clone(),
        )
        .map_err(|_| bad("bad edges"))?;
        let mut edges = Vec::new();
        for (a, b) in &edge_vals {
            edges.push((index(a)?, index(b)?));
        }
        let dag = Dag::from_edges(nodes.len(), &edges)?;

        let params_json = value
            .get("parameters")
            .and_then(|p| p.as_array())
            .ok_or_else(|| bad("missing parameters"))?;
        if params_json.len() != nodes.len() {
            return Err(bad("parameter count mismatch"));
        }
        let mut params = vec![
            NodeParams { intercept: 0.0, coefficients: Vec::new(), residual_variance: 0.0 };
            nodes.len()
        ];
        let mut means = vec![0.0; nodes.len()];
        let mut stds = vec![1.0; nodes.len()];
        for entry in params_json {
            let name = entry
                .get("node")
                .and_then(|n| n.as_str())
                .ok_or_else(|| bad("parameter missing node"))?;
            let i = index(name)?;
            let coeff_map: BTreeMap<String, f64> = serde_json::from_value(
                entry.get("coefficients").ok_or_else(|| bad("missing coefficients"))?.clone(),
            )
            .map_err(|_| bad("bad coefficients"))?;
            let mut coefficients = Vec::new();
            for &p in dag.parents(i) {
                let c = coeff_map
                    .get(&nodes[p])
                    .ok_or_else(|| bad(&format!("missing coefficient {} -> {}", nodes[p], name)))?;
                coefficients.push(*c);
            }
            params[i] = NodeParams {
                intercept: entry
                    .get("intercept")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| bad("missing intercept"))?,
                coefficients,
                residual_variance: entry
                    .get("residual_variance")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| bad("missing residual_variance"))?,
            };
            means[i] =
                entry.get("mean").and_then(|v| v.as_f64()).ok_or_else(|| bad("missing mean"))?;
            stds[i] =
                entry.get("std").and_then(|v| v.as_f64()).ok_or_else(|| bad("missing std"))?;
        }

        Ok(Self {
            nodes,
            dag,
            params,
            means,
            stds,
            provenance: value
                .get("provenance")
                .and_then(|v| v.as_str())
                .unwrap_or("unknown")
                .to_string(),
            seed: value.get("seed").and_then(|v| v.as_u64()).unwrap_or(0),
        })
    }
}

/// Fits each node's linear Gaussian conditional by least squares on the
/// standardized table; residual variance is the maximum-likelihood estimate
/// (divisor n).
pub fn fit_lgbn(
    structure: &Dag,
    table: &StandardizedTable,
    provenance: impl Into<String>,
    seed: u64,
) -> Result<GaussianNetwork> {
    if !structure.is_acyclic() {
        return Err(Error::invalid("structure has a cycle"));
    }
    if structure.node_count() != table.names.len() {
        return Err(Error::invalid("structure and table dimensions differ"));
    }
    let mut params = Vec::with_capacity(table.names.len());
    for node in 0..table.names.len() {
        let fit = ols_fit(&table.z, node, structure.parents(node))?;
        params.push(NodeParams {
            intercept: fit.intercept,
            coefficients: fit.coefficients,
            residual_variance: fit.residual_variance,
        });
    }
    Ok(GaussianNetwork {
        nodes: table.names.clone(),
        dag: structure.clone(),
        params,
        means: table.standardizer.means.clone(),
        stds: table.standardizer.stds.clone(),
        provenance: provenance.into(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_rejects_cycles() {
        let mut dag = Dag::empty(3);
        dag.add_edge(0, 1).unwrap();
        dag.add_edge(1, 2).unwrap();
        assert!(dag.add_edge(2, 0).is_err());
        assert!(dag.is_acyclic());
    }

    #[test]
    fn topological_order_is_consistent() {
        let dag = Dag::from_edges(4, &[(0, 1), (1, 2), (0, 3), (3, 2)]).unwrap();
        let order = dag.topological_order().unwrap();
        let pos: Vec<usize> = (0..4).map(|n| order.iter().position(|&o| o == n).unwrap()).collect();
        for (from, to) in dag.edges() {
            assert!(pos[from] < pos[to]);
        }
    }

    #[test]
    fn skeleton_dedups_orientation() {
        let dag = Dag::from_edges(3, &[(0, 1), (2, 1)]).unwrap();
        assert_eq!(dag.skeleton(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn model_json_round_trip() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let net = GaussianNetwork {
            nodes: vec!["x".into(), "y".into()],
            dag,
            params: vec![
                NodeParams { intercept: 0.1, coefficients: vec![], residual_variance: 1.0 },
                NodeParams { intercept: -0.2, coefficients: vec![0.9], residual_variance: 0.19 },
            ],
            means: vec![3.0, 6.0],
            stds: vec![1.5, 2.5],
            provenance: "notears(0.1)".into(),
            seed: 17,
        };
        let json = net.to_json();
        let back = GaussianNetwork::from_json(&json).unwrap();
        assert_eq!(back.nodes, net.nodes);
        assert_eq!(back.dag, net.dag);
        assert_eq!(back.params, net.params);
        assert_eq!(back.means, net.means);
        assert_eq!(back.stds, net.stds);
        assert_eq!(back.provenance, net.provenance);
        assert_eq!(back.seed, net.seed);
    }
}
