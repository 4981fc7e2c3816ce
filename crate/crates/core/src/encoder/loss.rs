//! Unsupervised training objective.
//!
//! Per node: `-log p(node in its assigned cluster)` using inverse-distance
//! memberships against the centroids of the node's role. Per graph: a
//! logistic edge-reconstruction term over real edges and as many sampled
//! non-edges. Plus `weight_decay / 2 * ||W||^2`.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{backward, forward, EncoderParams, Gradient};
use crate::clustering::{ClusterModel, COINCIDENT_EPS};
use crate::error::{Error, Result};
use crate::eventgraph::{EventGraph, NodeRole};

/// Cluster models per node role; a role with no nodes has no model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoleClusters {
    pub trigger: Option<ClusterModel>,
    pub argument: Option<ClusterModel>,
}

impl RoleClusters {
    pub fn get(&self, role: NodeRole) -> Option<&ClusterModel> {
        match role {
            NodeRole::Trigger => self.trigger.as_ref(),
            NodeRole::Argument => self.argument.as_ref(),
        }
    }

    /// Splits each model's flat assignment list back into per-graph,
    /// per-node targets. Assignments follow graph order, then node order,
    /// separately per role.
    pub fn targets_for(&self, graphs: &[&EventGraph]) -> Result<Vec<Vec<Option<usize>>>> {
        let mut cursor = [0usize; 2];
        let mut out = Vec::with_capacity(graphs.len());
        for graph in graphs {
            let mut targets = Vec::with_capacity(graph.len());
            for node in &graph.nodes {
                let slot = match node.role {
                    NodeRole::Trigger => 0,
                    NodeRole::Argument => 1,
                };
                let target = match self.get(node.role) {
                    Some(model) => {
                        let a = *model.assignments.get(cursor[slot]).ok_or_else(|| {
                            Error::Data(format!("{:?} cluster model has too few assignments", node.role))
                        })?;
                        cursor[slot] += 1;
                        Some(a)
                    }
                    None => None,
                };
                targets.push(target);
            }
            out.push(targets);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub edge_weight: f64,
    pub weight_decay: f64,
}

/// One graph with fixed cluster targets and negative pairs.
#[derive(Debug, Clone)]
pub struct TrainingExample<'a> {
    pub graph: &'a EventGraph,
    pub targets: Vec<Option<usize>>,
    pub negatives: Vec<(usize, usize)>,
}

/// One uniformly drawn non-adjacent node pair per edge (with replacement).
/// Graphs without non-edges get none.
pub fn sample_negatives(graph: &EventGraph, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for i in 0..graph.len() {
        for j in i + 1..graph.len() {
            if !graph.adjacency[i].contains(&j) {
                candidates.push((i, j));
            }
        }
    }
    if candidates.is_empty() {
        return Vec::new();
    }
    (0..graph.edges().len())
        .map(|_| *candidates.choose(rng).expect("non-empty"))
        .collect()
}

/// Numerically stable `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log p_target` and its gradient w.r.t. the point. Distances are
/// floored at [`COINCIDENT_EPS`].
fn cluster_term(point: &Array1<f64>, model: &ClusterModel, target: usize) -> (f64, Array1<f64>) {
    let diffs: Vec<Array1<f64>> = model
        .centroids
        .iter()
        .map(|c| point - &ArrayView1::from(&c[..]))
        .collect();
    let raw: Vec<f64> = diffs.iter().map(|d| d.dot(d).sqrt()).collect();
    let dist: Vec<f64> = raw.iter().map(|&d| d.max(COINCIDENT_EPS)).collect();
    let inv_sum: f64 = dist.iter().map(|d| 1.0 / d).sum();
    let loss = dist[target].ln() + inv_sum.ln();

    let mut grad = Array1::<f64>::zeros(point.len());
    if raw[target] >= COINCIDENT_EPS {
        grad.scaled_add(1.0 / (dist[target] * dist[target]), &diffs[target]);
    }
    for (j, d) in diffs.iter().enumerate() {
        if raw[j] >= COINCIDENT_EPS {
            grad.scaled_add(-1.0 / (inv_sum * dist[j].powi(3)), d);
        }
    }
    (loss, grad)
}

fn example_loss(
    params: &EncoderParams,
    example: &TrainingExample<'_>,
    clusters: &RoleClusters,
    edge_weight: f64,
) -> Result<(f64, Gradient)> {
    let graph = example.graph;
    let cache = forward(params, graph)?;
    let h = &cache.output;
    let mut loss = 0.0;
    let mut d_out = vec![Array1::<f64>::zeros(params.output_dim()); graph.len()];

    for (i, node) in graph.nodes.iter().enumerate() {
        if let (Some(target), Some(model)) = (example.targets[i], clusters.get(node.role)) {
            let (l, g) = cluster_term(&h[i], model, target);
            loss += l;
            d_out[i] += &g;
        }
    }

    if edge_weight != 0.0 {
        let positives = graph.edges().into_iter().map(|(i, j, _)| (i, j, true));
        let negatives = example.negatives.iter().map(|&(i, j)| (i, j, false));
        for (i, j, is_edge) in positives.chain(negatives) {
            let s = h[i].dot(&h[j]);
            let (l, ds) = if is_edge {
                (softplus(-s), sigmoid(s) - 1.0)
            } else {
                (softplus(s), sigmoid(s))
            };
            loss += edge_weight * l;
            let (hi, hj) = (h[i].clone(), h[j].clone());
            d_out[i].scaled_add(edge_weight * ds, &hj);
            d_out[j].scaled_add(edge_weight * ds, &hi);
        }
    }

    Ok((loss, backward(params, graph, &cache, &d_out)))
}

/// Loss and gradient without the weight-decay term, reduced in example
/// order.
pub(crate) fn data_loss_and_gradient(
    params: &EncoderParams,
    examples: &[TrainingExample<'_>],
    clusters: &RoleClusters,
    edge_weight: f64,
) -> Result<(f64, Gradient)> {
    let parts = examples
        .par_iter()
        .map(|ex| example_loss(params, ex, clusters, edge_weight))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    let mut grad = Gradient::zeros_like(params);
    for (l, g) in &parts {
        total += l;
        grad.add_assign(g);
    }
    Ok((total, grad))
}

/// Full objective and its analytic gradient.
pub fn loss_and_gradient(
    params: &EncoderParams,
    examples: &[TrainingExample<'_>],
    clusters: &RoleClusters,
    weights: &LossWeights,
) -> Result<(f64, Gradient)> {
    let (mut loss, mut grad) = data_loss_and_gradient(params, examples, clusters, weights.edge_weight)?;
    loss += 0.5 * weights.weight_decay * params.squared_norm();
    grad.add_scaled_params(weights.weight_decay, params);
    Ok((loss, grad))
}

/// Objective over whole graphs: targets come from the cluster models'
/// assignments and negatives are drawn with `seed`.
pub fn training_loss(
    params: &EncoderParams,
    graphs: &[EventGraph],
    clusters: &RoleClusters,
    weights: &LossWeights,
    seed: u64,
) -> Result<f64> {
    let refs: Vec<&EventGraph> = graphs.iter().collect();
    let targets = clusters.targets_for(&refs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples: Vec<TrainingExample<'_>> = graphs
        .iter()
        .zip(targets)
        .map(|(graph, targets)| TrainingExample {
            graph,
            targets,
            negatives: sample_negatives(graph, &mut rng),
        })
        .collect();
    loss_and_gradient(params, &examples, clusters, weights).map(|(l, _)| l)
}
