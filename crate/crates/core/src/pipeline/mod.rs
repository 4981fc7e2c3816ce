//! End-to-end orchestration behind the `evschema` subcommands.

mod config;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{sweep_k, SweepResult};
use crate::corpus::{load_corpus, Document, EmbeddingTable, Lexicon, Sentence, Span};
use crate::derive_seed;
use crate::encoder::{
    encode_graph, fit_role_clusters, train, AttentionRecord, ClusterSchedule, EncoderCheckpoint, EncoderParams,
    EpochStats, RoleClusters,
};
use crate::error::{Error, Result};
use crate::eventgraph::{build_graph, build_scope_graph, EventGraph, NodeRole};
use crate::io::{write_bytes_atomic, write_json_atomic};
use crate::promptgen::{build_prompt, generate_rule_based, parse_candidates, CandidateEvent, GeneratorClient};
use crate::schema::{
    evaluate, induce_schemas, map_clusters_to_gold, name_trigger_clusters, ClusteredGraph, EvalReport, EventSchema,
    GoldSentence, LabelMapping, PredictedArgument, PredictedEvent, SentencePrediction,
};

pub use config::{
    Backend, ClusteringConfig, EmbeddingConfig, EncoderConfig, KChoice, LexiconPaths, Paths, PipelineConfig, Scope,
    SweepTag,
};

pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const ENCODER_FILE: &str = "encoder.json";
pub const TRIGGER_CLUSTERS_FILE: &str = "clusters_trigger.json";
pub const ARGUMENT_CLUSTERS_FILE: &str = "clusters_argument.json";
pub const SCHEMAS_FILE: &str = "schemas.json";
pub const SWEEP_FILE: &str = "sweep.json";
pub const EVAL_FILE: &str = "eval.json";
pub const MANIFEST_FILE: &str = "manifest.json";

// Tags for `derive_seed`, one per stochastic component.
const SEED_INIT: u64 = 1;
const SEED_TRAIN: u64 = 2;
const SEED_FINAL_CLUSTERS: u64 = 3;
const SEED_OOV: u64 = 4;
const SEED_SWEEP: u64 = 5;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Backend(_) => 4,
        Error::Divergence { .. } => 5,
        _ => 3,
    }
}

/// Unique id of a sentence across the corpus.
pub fn sentence_key(doc_id: &str, sent_id: &str) -> String {
    format!("{doc_id}/{sent_id}")
}

/// One line of the candidate file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceCandidates {
    pub doc_id: String,
    pub sent_id: String,
    pub events: Vec<CandidateEvent>,
}

impl SentenceCandidates {
    pub fn key(&self) -> String {
        sentence_key(&self.doc_id, &self.sent_id)
    }
}

struct Inputs {
    docs: Vec<Document>,
    lexicon: Lexicon,
    table: EmbeddingTable,
}

fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    config.validate()?;
    let docs = load_corpus(&config.paths.corpus).map_err(|e| with_path(e, &config.paths.corpus))?;
    let lexicon = match &config.paths.lexicon {
        Some(l) => Lexicon::load(&l.verbs, &l.nouns, &l.gazetteer).map_err(|e| with_path(e, &l.verbs))?,
        None => {
            log::warn!("no lexicon configured; prompts and rule candidates will be empty");
            Lexicon::new(Vec::<String>::new(), Vec::<String>::new(), Vec::<String>::new())
        }
    };
    let oov_seed = derive_seed(config.seed, SEED_OOV);
    let table = match &config.paths.embeddings {
        Some(p) => EmbeddingTable::load(p, oov_seed).map_err(|e| with_path(e, p))?,
        None => EmbeddingTable::new(config.embeddings.dimension, oov_seed)?,
    };
    Ok(Inputs { docs, lexicon, table })
}

fn with_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Io(e) => Error::Data(format!("{}: {e}", path.display())),
        other => other,
    }
}

/// Candidate events for every sentence, in corpus order.
pub fn extract_candidates(docs: &[Document], lexicon: &Lexicon, backend: &Backend) -> Result<Vec<SentenceCandidates>> {
    let sentences: Vec<(&Document, &Sentence)> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(move |s| (d, s)))
        .collect();
    let wrap = |doc: &Document, s: &Sentence, events| SentenceCandidates {
        doc_id: doc.doc_id.clone(),
        sent_id: s.sent_id.clone(),
        events,
    };
    match backend {
        Backend::Rule => Ok(sentences
            .par_iter()
            .map(|(d, s)| wrap(d, s, generate_rule_based(s, lexicon)))
            .collect()),
        Backend::External {
            url,
            timeout_secs,
            fallback,
        } => {
            let client = GeneratorClient::new(url, Duration::from_secs_f64(*timeout_secs))?;
            sentences
                .iter()
                .map(|(d, s)| {
                    let key = sentence_key(&d.doc_id, &s.sent_id);
                    let events = match client.generate(&build_prompt(s, lexicon)) {
                        Ok(output) => {
                            let (events, diag) = parse_candidates(&output, s);
                            for line in &diag.skipped {
                                log::warn!("{key}: skipped unparseable output line `{line}`");
                            }
                            events
                        }
                        Err(e) if *fallback => {
                            log::warn!("{key}: generation service failed ({e}); using rule backend");
                            generate_rule_based(s, lexicon)
                        }
                        Err(e) => return Err(e.into()),
                    };
                    Ok(wrap(d, s, events))
                })
                .collect()
        }
    }
}

pub fn write_candidates(path: impl AsRef<Path>, candidates: &[SentenceCandidates]) -> Result<()> {
    let mut bytes = Vec::new();
    for c in candidates {
        serde_json::to_writer(&mut bytes, c)?;
        bytes.push(b'\n');
    }
    write_bytes_atomic(path, &bytes)
}

pub fn read_candidates(path: impl AsRef<Path>) -> Result<Vec<SentenceCandidates>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_trigger: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_argument: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    training_loss: Option<Vec<f64>>,
    artifacts: Vec<&'a str>,
    config: &'a PipelineConfig,
}

impl<'a> Manifest<'a> {
    fn new(command: &'a str, config: &'a PipelineConfig, artifacts: Vec<&'a str>) -> Self {
        Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            k_trigger: None,
            k_argument: None,
            training_loss: None,
            artifacts,
            config,
        }
    }

    fn with_induction(mut self, ind: &Induction) -> Self {
        self.k_trigger = Some(ind.k_trigger);
        self.k_argument = Some(ind.k_argument);
        self.training_loss = Some(ind.history.iter().map(|h| h.loss).collect());
        self
    }

    fn write(&self, out: &Path) -> Result<()> {
        write_json_atomic(out.join(MANIFEST_FILE), self)
    }
}

/// `extract`: writes the candidate file and returns its path.
pub fn cmd_extract(config: &PipelineConfig) -> Result<PathBuf> {
    let inputs = load_inputs(config)?;
    let candidates = extract_candidates(&inputs.docs, &inputs.lexicon, &config.backend)?;
    let out = &config.paths.output_dir;
    let path = out.join(CANDIDATES_FILE);
    write_candidates(&path, &candidates)?;
    Manifest::new("extract", config, vec![CANDIDATES_FILE]).write(out)?;
    log::info!("wrote {} sentences to {}", candidates.len(), path.display());
    Ok(path)
}

fn candidates_for(config: &PipelineConfig, inputs: &Inputs) -> Result<Vec<SentenceCandidates>> {
    match &config.paths.candidates {
        Some(p) => read_candidates(p),
        None => {
            let c = extract_candidates(&inputs.docs, &inputs.lexicon, &config.backend)?;
            write_candidates(config.paths.output_dir.join(CANDIDATES_FILE), &c)?;
            Ok(c)
        }
    }
}

/// One graph per sentence or per document; scopes without events are
/// dropped.
pub fn build_graphs(candidates: &[SentenceCandidates], table: &EmbeddingTable, scope: Scope) -> Vec<EventGraph> {
    let graphs: Vec<EventGraph> = match scope {
        Scope::Sentence => candidates
            .par_iter()
            .map(|c| build_graph(&c.events, table, &c.key()))
            .collect(),
        Scope::Document => {
            type Members<'a> = Vec<(String, &'a [CandidateEvent])>;
            let mut groups: Vec<(&str, Members<'_>)> = Vec::new();
            for c in candidates {
                match groups.last_mut() {
                    Some((doc, members)) if *doc == c.doc_id => members.push((c.key(), &c.events)),
                    _ => groups.push((&c.doc_id, vec![(c.key(), &c.events)])),
                }
            }
            groups
                .par_iter()
                .map(|(doc, members)| build_scope_graph(doc, members, table))
                .collect()
        }
    };
    graphs.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Everything `induce` computes.
#[derive(Debug, Clone)]
pub struct Induction {
    /// Graphs with `Node::encoded` filled by the trained encoder.
    pub graphs: Vec<EventGraph>,
    pub attention: Vec<AttentionRecord>,
    pub params: EncoderParams,
    pub history: Vec<EpochStats>,
    pub clusters: RoleClusters,
    /// Cluster of every node within its role's model.
    pub node_clusters: Vec<Vec<usize>>,
    pub k_trigger: usize,
    pub k_argument: usize,
    pub trigger_names: BTreeMap<usize, String>,
    pub schemas: Vec<EventSchema>,
}

fn role_points(graphs: &[EventGraph], role: NodeRole) -> Vec<Vec<f64>> {
    graphs
        .iter()
        .flat_map(|g| {
            g.nodes_with_role(role)
                .map(|i| g.nodes[i].encoded.clone().expect("graph encoded"))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn encode_graphs(params: &EncoderParams, graphs: &mut [EventGraph]) -> Result<Vec<AttentionRecord>> {
    graphs.par_iter_mut().map(|g| encode_graph(params, g)).collect()
}

fn resolve_k(
    choice: KChoice,
    role: NodeRole,
    points: &[Vec<f64>],
    clustering: &ClusteringConfig,
    seed: u64,
) -> Result<usize> {
    let n = points.len();
    if n == 0 {
        return Ok(0);
    }
    match choice {
        KChoice::Fixed(k) => {
            if k > n {
                log::warn!("{role:?} k = {k} exceeds {n} nodes; using {n}");
            }
            Ok(k.min(n))
        }
        KChoice::Sweep(_) => {
            let result = sweep_role(role, points, clustering, seed)?;
            log::info!("{role:?} sweep selected k = {}", result.best_k);
            Ok(result.best_k)
        }
    }
}

fn sweep_role(role: NodeRole, points: &[Vec<f64>], c: &ClusteringConfig, seed: u64) -> Result<SweepResult> {
    c.validate_sweep_range()?;
    if points.len() < c.sweep_min {
        return Err(Error::Data(format!(
            "{role:?} has {} nodes, fewer than sweep_min = {}",
            points.len(),
            c.sweep_min
        )));
    }
    let k_max = c.sweep_max.min(points.len());
    sweep_k(role, points, c.sweep_min, k_max, c.iterations, c.batch, seed)
}

fn initial_params(config: &PipelineConfig, input_dim: usize) -> Result<EncoderParams> {
    let e = &config.encoder;
    EncoderParams::random(
        e.heads,
        input_dim,
        e.output_dim.unwrap_or(input_dim),
        e.leaky_slope,
        e.activation,
        derive_seed(config.seed, SEED_INIT),
    )
}

/// Graph building, training, final clustering, naming and schema
/// induction. `k_override` replaces the configured cluster counts.
pub fn run_induction(
    config: &PipelineConfig,
    candidates: &[SentenceCandidates],
    table: &EmbeddingTable,
    k_override: Option<(usize, usize)>,
) -> Result<Induction> {
    config.validate()?;
    let mut graphs = build_graphs(candidates, table, config.scope);
    if graphs.is_empty() {
        return Err(Error::Data("no candidate events to induce schemas from".into()));
    }
    let params = initial_params(config, table.dimension())?;
    let c = &config.clustering;

    // Sweeps, when requested, run on the untrained encoder's output.
    encode_graphs(&params, &mut graphs)?;
    let (choice_t, choice_a) = match k_override {
        Some((kt, ka)) => (KChoice::Fixed(kt), KChoice::Fixed(ka)),
        None => (c.k_trig, c.k_arg),
    };
    let sweep_seed = derive_seed(config.seed, SEED_SWEEP);
    let k_trigger = resolve_k(
        choice_t,
        NodeRole::Trigger,
        &role_points(&graphs, NodeRole::Trigger),
        c,
        sweep_seed,
    )?;
    let k_argument = resolve_k(
        choice_a,
        NodeRole::Argument,
        &role_points(&graphs, NodeRole::Argument),
        c,
        sweep_seed,
    )?;
    let schedule = ClusterSchedule {
        k_trigger,
        k_argument,
        iterations: c.iterations,
        batch_size: c.batch,
    };

    let mut train_config = config.train.clone();
    train_config.seed = derive_seed(config.seed, SEED_TRAIN);
    let outcome = train(&params, &graphs, &train_config, &schedule)?;

    let attention = encode_graphs(&outcome.params, &mut graphs)?;
    let encoded: Vec<Vec<Vec<f64>>> = graphs
        .iter()
        .map(|g| {
            g.nodes
                .iter()
                .map(|n| n.encoded.clone().expect("graph encoded"))
                .collect()
        })
        .collect();
    let clusters = fit_role_clusters(
        &graphs,
        &encoded,
        &schedule,
        derive_seed(config.seed, SEED_FINAL_CLUSTERS),
    )?;
    let refs: Vec<&EventGraph> = graphs.iter().collect();
    let node_clusters: Vec<Vec<usize>> = clusters
        .targets_for(&refs)?
        .into_iter()
        .map(|t| {
            t.into_iter()
                .map(|c| c.expect("every role with nodes is clustered"))
                .collect()
        })
        .collect();

    let trigger_names = match &clusters.trigger {
        Some(model) => {
            let nodes: Vec<(String, Vec<f64>)> = graphs
                .iter()
                .flat_map(|g| {
                    g.nodes_with_role(NodeRole::Trigger)
                        .map(|i| (g.nodes[i].text.clone(), encoded_of(g, i)))
                        .collect::<Vec<_>>()
                })
                .collect();
            name_trigger_clusters(model, &nodes)
        }
        None => BTreeMap::new(),
    };
    let clustered: Vec<ClusteredGraph<'_>> = graphs
        .iter()
        .zip(&attention)
        .zip(&node_clusters)
        .map(|((graph, attention), clusters)| ClusteredGraph {
            graph,
            attention,
            clusters,
        })
        .collect();
    let schemas = induce_schemas(&clustered, &trigger_names, &config.schema);

    Ok(Induction {
        graphs,
        attention,
        params: outcome.params,
        history: outcome.history,
        clusters,
        node_clusters,
        k_trigger,
        k_argument,
        trigger_names,
        schemas,
    })
}

fn encoded_of(g: &EventGraph, i: usize) -> Vec<f64> {
    g.nodes[i].encoded.clone().expect("graph encoded")
}

fn write_induction(config: &PipelineConfig, ind: &Induction) -> Result<Vec<&'static str>> {
    let out = &config.paths.output_dir;
    let mut artifacts = vec![CANDIDATES_FILE, ENCODER_FILE];
    EncoderCheckpoint::save(&ind.params, out.join(ENCODER_FILE))?;
    for (model, file) in [
        (&ind.clusters.trigger, TRIGGER_CLUSTERS_FILE),
        (&ind.clusters.argument, ARGUMENT_CLUSTERS_FILE),
    ] {
        if let Some(m) = model {
            write_json_atomic(out.join(file), m)?;
            artifacts.push(file);
        }
    }
    write_json_atomic(out.join(SCHEMAS_FILE), &ind.schemas)?;
    artifacts.push(SCHEMAS_FILE);
    Ok(artifacts)
}

/// `induce`: trains the encoder and writes checkpoint, cluster models,
/// schemas and manifest. Returns the schemas path.
pub fn cmd_induce(config: &PipelineConfig) -> Result<PathBuf> {
    let inputs = load_inputs(config)?;
    let candidates = candidates_for(config, &inputs)?;
    let ind = run_induction(config, &candidates, &inputs.table, None)?;
    let artifacts = write_induction(config, &ind)?;
    let out = &config.paths.output_dir;
    Manifest::new("induce", config, artifacts)
        .with_induction(&ind)
        .write(out)?;
    log::info!("induced {} schemas", ind.schemas.len());
    Ok(out.join(SCHEMAS_FILE))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub trigger: Option<SweepResult>,
    pub argument: Option<SweepResult>,
}

/// `sweep`: silhouette over the configured k range for both roles, using
/// the encoder in the output directory or a fresh inline run.
pub fn cmd_sweep(config: &PipelineConfig) -> Result<PathBuf> {
    config.clustering.validate_sweep_range()?;
    let inputs = load_inputs(config)?;
    let candidates = candidates_for(config, &inputs)?;
    let out = &config.paths.output_dir;
    let checkpoint = out.join(ENCODER_FILE);
    let mut graphs = build_graphs(&candidates, &inputs.table, config.scope);
    if graphs.is_empty() {
        return Err(Error::Data("no candidate events to sweep over".into()));
    }
    let params = if checkpoint.exists() {
        EncoderCheckpoint::load(&checkpoint)?
    } else {
        run_induction(config, &candidates, &inputs.table, None)?.params
    };
    encode_graphs(&params, &mut graphs)?;
    let seed = derive_seed(config.seed, SEED_SWEEP);
    let mut report = SweepReport {
        trigger: None,
        argument: None,
    };
    for role in [NodeRole::Trigger, NodeRole::Argument] {
        let points = role_points(&graphs, role);
        let result = if points.len() < config.clustering.sweep_min {
            log::warn!("{role:?}: only {} nodes, skipping sweep", points.len());
            None
        } else {
            Some(sweep_role(role, &points, &config.clustering, seed)?)
        };
        match role {
            NodeRole::Trigger => report.trigger = result,
            NodeRole::Argument => report.argument = result,
        }
    }
    let path = out.join(SWEEP_FILE);
    write_json_atomic(&path, &report)?;
    Manifest::new("sweep", config, vec![SWEEP_FILE]).write(out)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub k_trigger: usize,
    pub k_argument: usize,
    pub mapping: LabelMapping,
    pub report: EvalReport,
}

/// Scores an induction against the corpus's gold events, with k fixed to
/// the gold label counts and clusters mapped to labels one-to-one.
pub fn run_evaluation(
    config: &PipelineConfig,
    docs: &[Document],
    candidates: &[SentenceCandidates],
    table: &EmbeddingTable,
) -> Result<(Induction, EvalOutput)> {
    let mut gold: Vec<GoldSentence> = Vec::new();
    for d in docs {
        for s in &d.sentences {
            if let Some(events) = &s.gold_events {
                gold.push(GoldSentence {
                    sent_id: sentence_key(&d.doc_id, &s.sent_id),
                    events: events.clone(),
                });
            }
        }
    }
    let types: BTreeSet<&str> = gold
        .iter()
        .flat_map(|s| &s.events)
        .map(|e| e.event_type.as_str())
        .collect();
    if types.is_empty() {
        return Err(Error::Data("corpus has no gold events".into()));
    }
    let roles: BTreeSet<&str> = gold
        .iter()
        .flat_map(|s| &s.events)
        .flat_map(|e| &e.arguments)
        .map(|a| a.role.as_str())
        .collect();
    let ind = run_induction(config, candidates, table, Some((types.len(), roles.len().max(1))))?;

    let gold_by_key: HashMap<&str, &GoldSentence> = gold.iter().map(|s| (s.sent_id.as_str(), s)).collect();
    let label_of = |g: &EventGraph, i: usize| -> Option<String> {
        let node = &g.nodes[i];
        let span = node.span?;
        let sentence = gold_by_key.get(g.sentence_ids[node.sentence].as_str())?;
        match node.role {
            NodeRole::Trigger => sentence
                .events
                .iter()
                .find(|e| e.trigger_span == span)
                .map(|e| e.event_type.clone()),
            NodeRole::Argument => sentence
                .events
                .iter()
                .flat_map(|e| &e.arguments)
                .find(|a| a.span == span)
                .map(|a| a.role.clone()),
        }
    };
    let mut mapping = LabelMapping::default();
    for role in [NodeRole::Trigger, NodeRole::Argument] {
        let mut assignments = Vec::new();
        let mut labels = Vec::new();
        for (g, clusters) in ind.graphs.iter().zip(&ind.node_clusters) {
            for i in g.nodes_with_role(role) {
                assignments.push(clusters[i]);
                labels.push(label_of(g, i));
            }
        }
        let m = map_clusters_to_gold(&assignments, &labels);
        match role {
            NodeRole::Trigger => mapping.trigger = m,
            NodeRole::Argument => mapping.argument = m,
        }
    }

    // Where each sentence's nodes live: graph index and local sentence index.
    let mut location: HashMap<&str, (usize, usize)> = HashMap::new();
    for (gi, g) in ind.graphs.iter().enumerate() {
        for (si, id) in g.sentence_ids.iter().enumerate() {
            location.insert(id.as_str(), (gi, si));
        }
    }
    type NodeKey<'a> = (NodeRole, &'a str, Option<Span>, usize);
    let node_index: Vec<HashMap<NodeKey<'_>, usize>> = ind
        .graphs
        .iter()
        .map(|g| {
            g.nodes
                .iter()
                .enumerate()
                .map(|(i, n)| ((n.role, n.text.as_str(), n.span, n.sentence), i))
                .collect()
        })
        .collect();
    let mut predictions = Vec::new();
    for c in candidates {
        let key = c.key();
        if !gold_by_key.contains_key(key.as_str()) {
            continue;
        }
        let Some(&(gi, si)) = location.get(key.as_str()) else {
            continue;
        };
        let cluster = |role, text: &str, span| node_index[gi][&(role, text, span, si)];
        let events = c
            .events
            .iter()
            .map(|e| PredictedEvent {
                trigger_span: e.trigger_span,
                cluster: ind.node_clusters[gi][cluster(NodeRole::Trigger, &e.trigger_text, e.trigger_span)],
                arguments: e
                    .arguments
                    .iter()
                    .map(|a| PredictedArgument {
                        span: a.span,
                        cluster: ind.node_clusters[gi][cluster(NodeRole::Argument, &a.text, a.span)],
                    })
                    .collect(),
            })
            .collect();
        predictions.push(SentencePrediction { sent_id: key, events });
    }
    let report = evaluate(&predictions, &gold, &mapping);
    let output = EvalOutput {
        k_trigger: ind.k_trigger,
        k_argument: ind.k_argument,
        mapping,
        report,
    };
    Ok((ind, output))
}

/// `eval`: supervised-mode scores written to `eval.json`.
pub fn cmd_eval(config: &PipelineConfig) -> Result<PathBuf> {
    let inputs = load_inputs(config)?;
    if !inputs
        .docs
        .iter()
        .flat_map(|d| &d.sentences)
        .any(|s| s.gold_events.as_ref().is_some_and(|g| !g.is_empty()))
    {
        return Err(Error::Data("corpus has no gold events".into()));
    }
    let candidates = candidates_for(config, &inputs)?;
    let (ind, output) = run_evaluation(config, &inputs.docs, &candidates, &inputs.table)?;
    let out = &config.paths.output_dir;
    let path = out.join(EVAL_FILE);
    write_json_atomic(&path, &output)?;
    Manifest::new("eval", config, vec![CANDIDATES_FILE, EVAL_FILE])
        .with_induction(&ind)
        .write(out)?;
    Ok(path)
}
