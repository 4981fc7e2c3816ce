//! Role-typed multi-head graph attention.
//!
//! For every head, node `i` is projected with the matrix of its role
//! (`z_i = W_role(i) h_i`), edges are scored by `e_ij = <z_i, z_j>`, scores
//! pass through LeakyReLU and a softmax over the neighbourhood, and the new
//! representation is `sigma(sum_j alpha_ij z_j)`. Heads are averaged after
//! the activation.

mod checkpoint;
mod loss;
mod train;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventgraph::{EventGraph, Node, NodeRole};

pub use checkpoint::EncoderCheckpoint;
pub use loss::{loss_and_gradient, sample_negatives, training_loss, LossWeights, RoleClusters, TrainingExample};
pub(crate) use train::fit_role_clusters;
pub use train::{train, AdamW, ClusterSchedule, EpochStats, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Elu,
    LeakyRelu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64, slope: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::LeakyRelu => leaky_relu(x, slope),
            Activation::Identity => x,
        }
    }

    fn derivative(self, x: f64, slope: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::LeakyRelu => leaky_relu_derivative(x, slope),
            Activation::Identity => 1.0,
        }
    }
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn leaky_relu_derivative(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// `d' x d` projection for trigger nodes.
    pub w_trig: Array2<f64>,
    /// `d' x d` projection for argument nodes.
    pub w_arg: Array2<f64>,
}

impl HeadParams {
    pub fn for_role(&self, role: NodeRole) -> &Array2<f64> {
        match role {
            NodeRole::Trigger => &self.w_trig,
            NodeRole::Argument => &self.w_arg,
        }
    }

    fn for_role_mut(&mut self, role: NodeRole) -> &mut Array2<f64> {
        match role {
            NodeRole::Trigger => &mut self.w_trig,
            NodeRole::Argument => &mut self.w_arg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub heads: Vec<HeadParams>,
    pub leaky_slope: f64,
    pub activation: Activation,
}

impl EncoderParams {
    /// Gaussian initialization with standard deviation `1/sqrt(d)`.
    pub fn random(
        num_heads: usize,
        input_dim: usize,
        output_dim: usize,
        leaky_slope: f64,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        validate_shape(num_heads, input_dim, output_dim, leaky_slope)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (input_dim as f64).sqrt()).expect("positive std");
        let mut matrix = || Array2::from_shape_simple_fn((output_dim, input_dim), || normal.sample(&mut rng));
        let heads = (0..num_heads)
            .map(|_| HeadParams {
                w_trig: matrix(),
                w_arg: matrix(),
            })
            .collect();
        Ok(EncoderParams {
            heads,
            leaky_slope,
            activation,
        })
    }

    /// Every head uses the given matrices.
    pub fn from_heads(heads: Vec<HeadParams>, leaky_slope: f64, activation: Activation) -> Result<Self> {
        let first = heads
            .first()
            .ok_or_else(|| Error::Config("encoder needs at least one head".into()))?;
        let shape = first.w_trig.dim();
        validate_shape(heads.len(), shape.1, shape.0, leaky_slope)?;
        for h in &heads {
            for w in [&h.w_trig, &h.w_arg] {
                if w.dim() != shape {
                    return Err(Error::DimensionMismatch {
                        expected: shape.0 * shape.1,
                        actual: w.len(),
                    });
                }
            }
        }
        Ok(EncoderParams {
            heads,
            leaky_slope,
            activation,
        })
    }

    pub fn num_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn input_dim(&self) -> usize {
        self.heads[0].w_trig.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.heads[0].w_trig.nrows()
    }

    pub fn num_parameters(&self) -> usize {
        self.heads.len() * 2 * self.input_dim() * self.output_dim()
    }

    /// All weights in a fixed order: head by head, `w_trig` then `w_arg`,
    /// row-major.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.heads.iter().flat_map(|h| h.w_trig.iter().chain(h.w_arg.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.heads
            .iter_mut()
            .flat_map(|h| h.w_trig.iter_mut().chain(h.w_arg.iter_mut()))
    }

    pub fn squared_norm(&self) -> f64 {
        self.values().map(|v| v * v).sum()
    }
}

fn validate_shape(num_heads: usize, input_dim: usize, output_dim: usize, slope: f64) -> Result<()> {
    if num_heads == 0 || input_dim == 0 || output_dim == 0 {
        return Err(Error::Config(format!(
            "encoder shape must be positive (K={num_heads}, d={input_dim}, d'={output_dim})"
        )));
    }
    if !(slope > 0.0 && slope < 1.0) {
        return Err(Error::Config(format!("LeakyReLU slope {slope} outside (0, 1)")));
    }
    Ok(())
}

fn check_node(params: &EncoderParams, node: &Node) -> Result<()> {
    if node.embedding.len() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            actual: node.embedding.len(),
        });
    }
    Ok(())
}

fn project(params: &EncoderParams, head: usize, node: &Node) -> Array1<f64> {
    params.heads[head]
        .for_role(node.role)
        .dot(&ArrayView1::from(&node.embedding[..]))
}

/// `e_ij = <W_role(i) h_i, W_role(j) h_j>` for one head.
pub fn score_edge(params: &EncoderParams, head: usize, node_i: &Node, node_j: &Node) -> Result<f64> {
    if head >= params.num_heads() {
        return Err(Error::Config(format!("head {head} out of range")));
    }
    check_node(params, node_i)?;
    check_node(params, node_j)?;
    Ok(project(params, head, node_i).dot(&project(params, head, node_j)))
}

/// Softmax of `LeakyReLU(e)` over one neighbourhood, shifted by the max.
pub fn normalize_attention(scores: &[f64], slope: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyNeighbourhood);
    }
    let activated: Vec<f64> = scores.iter().map(|&e| leaky_relu(e, slope)).collect();
    Ok(softmax(&activated))
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|v| v / total).collect()
}

/// Per-head attention scores and coefficients, plus the head average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    /// `heads[l][i]` lists `(j, e_ij, alpha_ij)` over `N_i` in index order.
    pub heads: Vec<Vec<Vec<(usize, f64, f64)>>>,
    /// `averaged[i]` lists `(j, mean_l alpha_ij)`.
    pub averaged: Vec<Vec<(usize, f64)>>,
}

impl AttentionRecord {
    pub fn averaged_alpha(&self, i: usize, j: usize) -> Option<f64> {
        self.averaged[i].iter().find(|(n, _)| *n == j).map(|(_, a)| *a)
    }
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub(crate) struct HeadCache {
    pub z: Vec<Array1<f64>>,
    pub e: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub m: Vec<Array1<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    pub neighbors: Vec<Vec<usize>>,
    pub heads: Vec<HeadCache>,
    pub output: Vec<Array1<f64>>,
}

pub(crate) fn forward(params: &EncoderParams, graph: &EventGraph) -> Result<ForwardCache> {
    for node in &graph.nodes {
        check_node(params, node)?;
    }
    let n = graph.len();
    let k = params.num_heads();
    let d_out = params.output_dim();
    let neighbors: Vec<Vec<usize>> = graph.adjacency.iter().map(|s| s.iter().copied().collect()).collect();
    let mut output = vec![Array1::<f64>::zeros(d_out); n];
    let mut heads = Vec::with_capacity(k);
    for head in 0..k {
        let z: Vec<Array1<f64>> = graph.nodes.iter().map(|node| project(params, head, node)).collect();
        let mut e = Vec::with_capacity(n);
        let mut alpha = Vec::with_capacity(n);
        let mut m = Vec::with_capacity(n);
        for i in 0..n {
            let scores: Vec<f64> = neighbors[i].iter().map(|&j| z[i].dot(&z[j])).collect();
            let coeffs = if scores.is_empty() {
                Vec::new()
            } else {
                normalize_attention(&scores, params.leaky_slope)?
            };
            let mut agg = Array1::<f64>::zeros(d_out);
            for (&j, &a) in neighbors[i].iter().zip(&coeffs) {
                agg.scaled_add(a, &z[j]);
            }
            let activated = agg.mapv(|x| params.activation.apply(x, params.leaky_slope));
            output[i].scaled_add(1.0 / k as f64, &activated);
            e.push(scores);
            alpha.push(coeffs);
            m.push(agg);
        }
        heads.push(HeadCache { z, e, alpha, m });
    }
    Ok(ForwardCache {
        neighbors,
        heads,
        output,
    })
}

impl ForwardCache {
    pub(crate) fn attention(&self) -> AttentionRecord {
        let k = self.heads.len() as f64;
        let heads = self
            .heads
            .iter()
            .map(|h| {
                self.neighbors
                    .iter()
                    .enumerate()
                    .map(|(i, nbrs)| {
                        nbrs.iter()
                            .enumerate()
                            .map(|(p, &j)| (j, h.e[i][p], h.alpha[i][p]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let averaged = self
            .neighbors
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                nbrs.iter()
                    .enumerate()
                    .map(|(p, &j)| (j, self.heads.iter().map(|h| h.alpha[i][p]).sum::<f64>() / k))
                    .collect()
            })
            .collect();
        AttentionRecord { heads, averaged }
    }
}

/// One head's representation of node `i`; isolated nodes get `sigma(0)`.
pub fn encode_node(params: &EncoderParams, head: usize, i: usize, graph: &EventGraph) -> Result<Vec<f64>> {
    if head >= params.num_heads() {
        return Err(Error::Config(format!("head {head} out of range")));
    }
    let node_i = &graph.nodes[i];
    let nbrs: Vec<usize> = graph.neighbors(i).iter().copied().collect();
    let mut agg = Array1::<f64>::zeros(params.output_dim());
    if !nbrs.is_empty() {
        let scores = nbrs
            .iter()
            .map(|&j| score_edge(params, head, node_i, &graph.nodes[j]))
            .collect::<Result<Vec<_>>>()?;
        let alpha = normalize_attention(&scores, params.leaky_slope)?;
        for (&j, a) in nbrs.iter().zip(alpha) {
            agg.scaled_add(a, &project(params, head, &graph.nodes[j]));
        }
    } else {
        check_node(params, node_i)?;
    }
    Ok(agg
        .iter()
        .map(|&x| params.activation.apply(x, params.leaky_slope))
        .collect())
}

/// Head-averaged representations of every node, written into
/// `Node::encoded`, with the attention coefficients that produced them.
pub fn encode_graph(params: &EncoderParams, graph: &mut EventGraph) -> Result<AttentionRecord> {
    let cache = forward(params, graph)?;
    for (node, out) in graph.nodes.iter_mut().zip(&cache.output) {
        node.encoded = Some(out.to_vec());
    }
    Ok(cache.attention())
}

/// Gradient with the same layout as [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub heads: Vec<HeadParams>,
}

impl Gradient {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        let shape = (params.output_dim(), params.input_dim());
        Gradient {
            heads: (0..params.num_heads())
                .map(|_| HeadParams {
                    w_trig: Array2::zeros(shape),
                    w_arg: Array2::zeros(shape),
                })
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.heads.iter().flat_map(|h| h.w_trig.iter().chain(h.w_arg.iter()))
    }

    pub(crate) fn add_assign(&mut self, other: &Gradient) {
        for (a, b) in self.heads.iter_mut().zip(&other.heads) {
            a.w_trig += &b.w_trig;
            a.w_arg += &b.w_arg;
        }
    }

    pub(crate) fn add_scaled_params(&mut self, scale: f64, params: &EncoderParams) {
        for (g, p) in self.heads.iter_mut().zip(&params.heads) {
            g.w_trig.scaled_add(scale, &p.w_trig);
            g.w_arg.scaled_add(scale, &p.w_arg);
        }
    }
}

/// Backpropagates `d_output[i] = dL/dh'_i` through one forward pass.
pub(crate) fn backward(
    params: &EncoderParams,
    graph: &EventGraph,
    cache: &ForwardCache,
    d_output: &[Array1<f64>],
) -> Gradient {
    let k = params.num_heads() as f64;
    let slope = params.leaky_slope;
    let mut grad = Gradient::zeros_like(params);
    let n = graph.len();
    for (head, hc) in cache.heads.iter().enumerate() {
        let mut dz = vec![Array1::<f64>::zeros(params.output_dim()); n];
        for i in 0..n {
            let nbrs = &cache.neighbors[i];
            if nbrs.is_empty() {
                continue;
            }
            let dm: Array1<f64> = ndarray::Zip::from(&d_output[i])
                .and(&hc.m[i])
                .map_collect(|&g, &m| g / k * params.activation.derivative(m, slope));
            let alpha = &hc.alpha[i];
            let d_alpha: Vec<f64> = nbrs.iter().map(|&j| dm.dot(&hc.z[j])).collect();
            let weighted: f64 = alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
            for (p, &j) in nbrs.iter().enumerate() {
                dz[j].scaled_add(alpha[p], &dm);
                let ds = alpha[p] * (d_alpha[p] - weighted);
                let de = ds * leaky_relu_derivative(hc.e[i][p], slope);
                if de != 0.0 {
                    dz[i].scaled_add(de, &hc.z[j]);
                    dz[j].scaled_add(de, &hc.z[i]);
                }
            }
        }
        for (i, node) in graph.nodes.iter().enumerate() {
            let h = ArrayView1::from(&node.embedding[..]);
            let w = grad.heads[head].for_role_mut(node.role);
            let outer = dz[i]
                .view()
                .insert_axis(ndarray::Axis(1))
                .dot(&h.insert_axis(ndarray::Axis(0)));
            *w += &outer;
        }
    }
    grad
}
