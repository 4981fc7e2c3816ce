use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{data_loss_and_gradient, sample_negatives, RoleClusters, TrainingExample};
use super::{forward, EncoderParams, Gradient};
use crate::clustering::{minibatch_kmeans, KMeansParams};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::eventgraph::{EventGraph, NodeRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Set by the caller; not part of the serialized configuration.
    #[serde(skip)]
    pub seed: u64,
    /// Weight of the edge-reconstruction term.
    pub edge_loss_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            batch_size: 16,
            seed: 0,
            edge_loss_weight: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        let non_negative = |x: f64| x >= 0.0;
        if ![self.learning_rate, self.weight_decay, self.edge_loss_weight]
            .into_iter()
            .all(non_negative)
        {
            return Err(Error::Config("rates and weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// The k-means run inside every epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSchedule {
    pub k_trigger: usize,
    pub k_argument: usize,
    pub iterations: usize,
    pub batch_size: usize,
}

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamW {
    pub fn new(num_parameters: usize, learning_rate: f64, weight_decay: f64) -> Self {
        AdamW {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_parameters],
            v: vec![0.0; num_parameters],
        }
    }

    pub fn step(&mut self, params: &mut EncoderParams, grad: &Gradient) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for (((p, &g), m), v) in params
            .values_mut()
            .zip(grad.values())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let update = (*m / bc1) / ((*v / bc2).sqrt() + self.eps) + self.weight_decay * *p;
            *p -= self.learning_rate * update;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sum of the batch objectives (weight decay included) over the epoch.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub history: Vec<EpochStats>,
    pub clusters: RoleClusters,
}

fn encode_all(params: &EncoderParams, graphs: &[EventGraph]) -> Result<Vec<Vec<Vec<f64>>>> {
    graphs
        .par_iter()
        .map(|g| forward(params, g).map(|c| c.output.iter().map(|v| v.to_vec()).collect()))
        .collect()
}

/// Fits one k-means model per role over encoded nodes (graph order, then
/// node order). Roles without nodes get no model.
pub(crate) fn fit_role_clusters(
    graphs: &[EventGraph],
    encoded: &[Vec<Vec<f64>>],
    schedule: &ClusterSchedule,
    seed: u64,
) -> Result<RoleClusters> {
    let mut clusters = RoleClusters::default();
    for (role, k, tag) in [
        (NodeRole::Trigger, schedule.k_trigger, 1),
        (NodeRole::Argument, schedule.k_argument, 2),
    ] {
        let points: Vec<Vec<f64>> = graphs
            .iter()
            .zip(encoded)
            .flat_map(|(g, enc)| g.nodes_with_role(role).map(|i| enc[i].clone()).collect::<Vec<_>>())
            .collect();
        if points.is_empty() {
            continue;
        }
        let params = KMeansParams {
            k,
            iterations: schedule.iterations,
            batch_size: schedule.batch_size,
            seed: derive_seed(seed, tag),
        };
        let model = minibatch_kmeans(role, &points, &params)?;
        match role {
            NodeRole::Trigger => clusters.trigger = Some(model),
            NodeRole::Argument => clusters.argument = Some(model),
        }
    }
    Ok(clusters)
}

/// Alternates, once per epoch: encode every graph, refit the per-role
/// k-means models, then one shuffled pass of AdamW steps over mini-batches
/// of graphs with the cluster targets held fixed.
pub fn train(
    params: &EncoderParams,
    graphs: &[EventGraph],
    config: &TrainConfig,
    schedule: &ClusterSchedule,
) -> Result<TrainOutcome> {
    config.validate()?;
    if graphs.is_empty() {
        return Err(Error::Data("no graphs to train on".into()));
    }
    let mut params = params.clone();
    let mut optimizer = AdamW::new(params.num_parameters(), config.learning_rate, config.weight_decay);
    let mut history = Vec::with_capacity(config.epochs);
    let mut clusters = RoleClusters::default();

    for epoch in 0..config.epochs {
        let epoch_seed = derive_seed(config.seed, 1000 + epoch as u64);
        let encoded = encode_all(&params, graphs)?;
        clusters = fit_role_clusters(graphs, &encoded, schedule, epoch_seed)?;
        let refs: Vec<&EventGraph> = graphs.iter().collect();
        let targets = clusters.targets_for(&refs)?;

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(epoch_seed, 3));
        let mut examples: Vec<TrainingExample<'_>> = graphs
            .iter()
            .zip(targets)
            .map(|(graph, targets)| TrainingExample {
                graph,
                targets,
                negatives: sample_negatives(graph, &mut rng),
            })
            .collect();
        examples.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in examples.chunks(config.batch_size).enumerate() {
            let (data_loss, grad) = data_loss_and_gradient(&params, batch, &clusters, config.edge_loss_weight)?;
            let loss = data_loss + 0.5 * config.weight_decay * params.squared_norm();
            if !loss.is_finite() || grad.values().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    loss,
                });
            }
            epoch_loss += loss;
            optimizer.step(&mut params, &grad);
        }
        log::debug!("epoch {epoch}: loss {epoch_loss:.6}");
        history.push(EpochStats {
            epoch,
            loss: epoch_loss,
        });
    }

    Ok(TrainOutcome {
        params,
        history,
        clusters,
    })
}
