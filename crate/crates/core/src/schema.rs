//! Cluster naming, attention-thresholded schema induction, mapping clusters
//! onto gold labels, and micro-averaged extraction scores.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pathfinding::prelude::{kuhn_munkres, Matrix};
use serde::{Deserialize, Serialize};

use crate::clustering::{euclidean, ClusterModel};
use crate::corpus::{GoldEvent, Span};
use crate::encoder::AttentionRecord;
use crate::eventgraph::{EventGraph, NodeRole};

/// Label for a cluster that is not mapped to any gold label.
pub const UNMAPPED_LABEL: &str = "other";
const MAX_EXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub theta: f64,
    /// Manual names for argument clusters; others are called `role-{index}`.
    #[serde(default)]
    pub argument_name_map: BTreeMap<usize, String>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            theta: 0.3,
            argument_name_map: BTreeMap::new(),
        }
    }
}

impl SchemaConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(crate::Error::Config(format!("theta {} outside (0, 1)", self.theta)));
        }
        Ok(())
    }

    pub fn role_label(&self, cluster: usize) -> String {
        self.argument_name_map
            .get(&cluster)
            .cloned()
            .unwrap_or_else(|| format!("role-{cluster}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRole {
    pub role_label: String,
    pub cluster: usize,
    /// Trigger–argument edges at or above the threshold.
    pub support: usize,
    pub peak_attention: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSchema {
    pub event_type_label: String,
    pub cluster: usize,
    pub argument_roles: Vec<SchemaRole>,
    /// Up to five sentence ids whose triggers fall in this cluster.
    pub example_sentences: Vec<String>,
}

/// Names each cluster after the member text nearest its centroid
/// (lexicographically smallest text on exact ties). `nodes` pairs a text
/// with the vector the model assigned, in assignment order.
pub fn name_trigger_clusters(model: &ClusterModel, nodes: &[(String, Vec<f64>)]) -> BTreeMap<usize, String> {
    let mut best: BTreeMap<usize, (f64, &str)> = BTreeMap::new();
    for ((text, vector), &cluster) in nodes.iter().zip(&model.assignments) {
        let d = euclidean(vector, &model.centroids[cluster]);
        let entry = best.entry(cluster).or_insert((d, text.as_str()));
        if d < entry.0 || (d == entry.0 && text.as_str() < entry.1) {
            *entry = (d, text.as_str());
        }
    }
    (0..model.k)
        .map(|c| match best.get(&c) {
            Some((_, text)) => (c, (*text).to_owned()),
            None => {
                log::warn!("trigger cluster {c} is empty");
                (c, format!("cluster-{c}"))
            }
        })
        .collect()
}

/// A graph after encoding: attention plus the cluster of every node within
/// its role's model.
#[derive(Debug, Clone, Copy)]
pub struct ClusteredGraph<'a> {
    pub graph: &'a EventGraph,
    pub attention: &'a AttentionRecord,
    pub clusters: &'a [usize],
}

/// One schema per non-empty trigger cluster. An argument cluster joins the
/// schema when any trigger–argument edge from a member trigger has
/// head-averaged, trigger-side attention of at least `theta`.
pub fn induce_schemas(
    graphs: &[ClusteredGraph<'_>],
    trigger_names: &BTreeMap<usize, String>,
    config: &SchemaConfig,
) -> Vec<EventSchema> {
    struct Acc {
        roles: BTreeMap<usize, (usize, f64)>,
        examples: Vec<String>,
    }
    let mut acc: BTreeMap<usize, Acc> = BTreeMap::new();
    for cg in graphs {
        let g = cg.graph;
        for i in g.nodes_with_role(NodeRole::Trigger) {
            let t = cg.clusters[i];
            let entry = acc.entry(t).or_insert_with(|| Acc {
                roles: BTreeMap::new(),
                examples: Vec::new(),
            });
            let sid = &g.sentence_ids[g.nodes[i].sentence];
            if entry.examples.len() < MAX_EXAMPLES && !entry.examples.contains(sid) {
                entry.examples.push(sid.clone());
            }
            for &j in g.neighbors(i) {
                if g.nodes[j].role != NodeRole::Argument {
                    continue;
                }
                let Some(alpha) = cg.attention.averaged_alpha(i, j) else {
                    continue;
                };
                if alpha >= config.theta {
                    let role = entry.roles.entry(cg.clusters[j]).or_insert((0, f64::NEG_INFINITY));
                    role.0 += 1;
                    role.1 = role.1.max(alpha);
                }
            }
        }
    }
    acc.into_iter()
        .map(|(cluster, a)| {
            let mut argument_roles: Vec<SchemaRole> = a
                .roles
                .into_iter()
                .map(|(c, (support, peak))| SchemaRole {
                    role_label: config.role_label(c),
                    cluster: c,
                    support,
                    peak_attention: peak,
                })
                .collect();
            argument_roles.sort_by(|x, y| y.support.cmp(&x.support).then(x.cluster.cmp(&y.cluster)));
            EventSchema {
                event_type_label: trigger_names
                    .get(&cluster)
                    .cloned()
                    .unwrap_or_else(|| format!("cluster-{cluster}")),
                cluster,
                argument_roles,
                example_sentences: a.examples,
            }
        })
        .collect()
}

/// One-to-one cluster → gold label mapping maximizing the total overlap
/// (Hungarian algorithm on the contingency table). Clusters left without a
/// label, or matched with zero overlap, are absent from the result.
pub fn map_clusters_to_gold(assignments: &[usize], gold: &[Option<String>]) -> BTreeMap<usize, String> {
    let mut table: BTreeMap<(usize, &str), i64> = BTreeMap::new();
    for (&c, g) in assignments.iter().zip(gold) {
        if let Some(label) = g {
            *table.entry((c, label.as_str())).or_default() += 1;
        }
    }
    let clusters: Vec<usize> = table.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
    let labels: Vec<&str> = table.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
    if clusters.is_empty() {
        return BTreeMap::new();
    }
    let weight = |c: usize, l: &str| table.get(&(c, l)).copied().unwrap_or(0);

    let pairs: Vec<(usize, &str)> = if clusters.len() <= labels.len() {
        let m = Matrix::from_fn(clusters.len(), labels.len(), |(r, col)| {
            weight(clusters[r], labels[col])
        });
        let (_, cols) = kuhn_munkres(&m);
        cols.iter()
            .enumerate()
            .map(|(r, &col)| (clusters[r], labels[col]))
            .collect()
    } else {
        let m = Matrix::from_fn(labels.len(), clusters.len(), |(r, col)| {
            weight(clusters[col], labels[r])
        });
        let (_, cols) = kuhn_munkres(&m);
        cols.iter()
            .enumerate()
            .map(|(r, &col)| (clusters[col], labels[r]))
            .collect()
    };
    pairs
        .into_iter()
        .filter(|&(c, l)| weight(c, l) > 0)
        .map(|(c, l)| (c, l.to_owned()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub trigger: BTreeMap<usize, String>,
    pub argument: BTreeMap<usize, String>,
}

impl LabelMapping {
    fn trigger_label(&self, cluster: usize) -> &str {
        self.trigger.get(&cluster).map_or(UNMAPPED_LABEL, String::as_str)
    }

    fn argument_label(&self, cluster: usize) -> &str {
        self.argument.get(&cluster).map_or(UNMAPPED_LABEL, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedArgument {
    pub span: Option<Span>,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedEvent {
    pub trigger_span: Option<Span>,
    pub cluster: usize,
    pub arguments: Vec<PredictedArgument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePrediction {
    pub sent_id: String,
    pub events: Vec<PredictedEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldSentence {
    pub sent_id: String,
    pub events: Vec<GoldEvent>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubtaskScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SubtaskScore {
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        SubtaskScore {
            tp,
            fp: predicted - tp,
            fn_: gold - tp,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "Trig-I")]
    pub trig_i: SubtaskScore,
    #[serde(rename = "Trig-C")]
    pub trig_c: SubtaskScore,
    #[serde(rename = "Arg-I")]
    pub arg_i: SubtaskScore,
    #[serde(rename = "Arg-C")]
    pub arg_c: SubtaskScore,
}

/// Micro-averaged scores with exact span matching.
///
/// Triggers are deduplicated by span and arguments by (trigger span,
/// argument span) on both sides, so identification and classification
/// are scored over the same items. Mentions without a span never match.
pub fn evaluate(predictions: &[SentencePrediction], gold: &[GoldSentence], mapping: &LabelMapping) -> EvalReport {
    type GoldIndex<'a> = (BTreeMap<Span, &'a str>, BTreeMap<(Span, Span), &'a str>);
    let mut gold_by_sentence: HashMap<&str, GoldIndex<'_>> = HashMap::new();
    let mut gold_triggers = 0;
    let mut gold_args = 0;
    for s in gold {
        let entry = gold_by_sentence.entry(s.sent_id.as_str()).or_default();
        for e in &s.events {
            if let std::collections::btree_map::Entry::Vacant(v) = entry.0.entry(e.trigger_span) {
                v.insert(e.event_type.as_str());
                gold_triggers += 1;
            }
            for a in &e.arguments {
                if let std::collections::btree_map::Entry::Vacant(v) = entry.1.entry((e.trigger_span, a.span)) {
                    v.insert(a.role.as_str());
                    gold_args += 1;
                }
            }
        }
    }

    let (mut pred_triggers, mut trig_i, mut trig_c) = (0, 0, 0);
    let (mut pred_args, mut arg_i, mut arg_c) = (0, 0, 0);
    let empty = (BTreeMap::new(), BTreeMap::new());
    for s in predictions {
        let (g_trig, g_arg) = gold_by_sentence.get(s.sent_id.as_str()).unwrap_or(&empty);
        let mut seen_triggers = BTreeSet::new();
        let mut seen_args = BTreeSet::new();
        for e in &s.events {
            let fresh = match e.trigger_span {
                Some(span) => seen_triggers.insert(span),
                None => true,
            };
            if fresh {
                pred_triggers += 1;
                if let Some(gold_type) = e.trigger_span.and_then(|sp| g_trig.get(&sp)) {
                    trig_i += 1;
                    if mapping.trigger_label(e.cluster) == *gold_type {
                        trig_c += 1;
                    }
                }
            }
            for a in &e.arguments {
                let key = e.trigger_span.zip(a.span);
                let fresh = match key {
                    Some(k) => seen_args.insert(k),
                    None => true,
                };
                if !fresh {
                    continue;
                }
                pred_args += 1;
                if let Some(gold_role) = key.and_then(|k| g_arg.get(&k)) {
                    arg_i += 1;
                    if mapping.argument_label(a.cluster) == *gold_role {
                        arg_c += 1;
                    }
                }
            }
        }
    }

    EvalReport {
        trig_i: SubtaskScore::from_counts(trig_i, pred_triggers, gold_triggers),
        trig_c: SubtaskScore::from_counts(trig_c, pred_triggers, gold_triggers),
        arg_i: SubtaskScore::from_counts(arg_i, pred_args, gold_args),
        arg_c: SubtaskScore::from_counts(arg_c, pred_args, gold_args),
    }
}
