//! Synthetic corpora shared by the integration tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DIM: usize = 16;
pub const SCHEMAS: usize = 4;
pub const ROLES_PER_SCHEMA: usize = 2;
const TRIGGERS_PER_SCHEMA: usize = 3;
const WORDS_PER_ROLE: usize = 4;

/// A corpus generated from planted schemas, written to disk with its
/// lexicon, embeddings and a pipeline config.
pub struct Planted {
    pub dir: PathBuf,
    pub config: PathBuf,
    /// Planted schema of each sentence, in corpus order.
    pub schema_of_sentence: Vec<usize>,
}

pub fn trigger_word(schema: usize, i: usize) -> String {
    format!("trig{schema}x{i}")
}

pub fn role_word(schema: usize, role: usize, i: usize) -> String {
    format!("arg{schema}r{role}x{i}")
}

/// Planted role id (`schema * ROLES_PER_SCHEMA + role`) of an argument word.
pub fn planted_role(word: &str) -> Option<usize> {
    let rest = word.strip_prefix("arg")?;
    let (schema, rest) = rest.split_once('r')?;
    let (role, _) = rest.split_once('x')?;
    Some(schema.parse::<usize>().ok()? * ROLES_PER_SCHEMA + role.parse::<usize>().ok()?)
}

fn signature(rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..DIM).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| scale * x / norm).collect()
}

fn jitter(base: &[f64], rng: &mut ChaCha8Rng, noise: f64) -> Vec<f64> {
    base.iter()
        .map(|x| x + noise * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `sentences` sentences, each `"the <arg> <trigger> near <arg> ."` with
/// both arguments drawn from the two roles of one planted schema, annotated
/// with the planted event as gold.
pub fn write_planted(dir: &Path, sentences: usize, seed: u64, extra_config: &str) -> Planted {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut vectors = String::new();
    let mut verbs = String::new();
    let mut gazetteer = String::new();
    for s in 0..SCHEMAS {
        let sig = signature(&mut rng, 0.5);
        for i in 0..TRIGGERS_PER_SCHEMA {
            let w = trigger_word(s, i);
            writeln!(verbs, "{w}").unwrap();
            write_vector(&mut vectors, &w, &jitter(&sig, &mut rng, 0.01));
        }
        for r in 0..ROLES_PER_SCHEMA {
            let sig = signature(&mut rng, 0.5);
            for i in 0..WORDS_PER_ROLE {
                let w = role_word(s, r, i);
                writeln!(gazetteer, "{w}").unwrap();
                write_vector(&mut vectors, &w, &jitter(&sig, &mut rng, 0.01));
            }
        }
    }

    let mut corpus = String::new();
    let mut schema_of_sentence = Vec::with_capacity(sentences);
    let per_doc = 10;
    for d in 0..sentences.div_ceil(per_doc) {
        let mut sents = Vec::new();
        for k in 0..per_doc.min(sentences - d * per_doc) {
            let s = rng.gen_range(0..SCHEMAS);
            schema_of_sentence.push(s);
            let t = trigger_word(s, rng.gen_range(0..TRIGGERS_PER_SCHEMA));
            let a = role_word(s, 0, rng.gen_range(0..WORDS_PER_ROLE));
            let b = role_word(s, 1, rng.gen_range(0..WORDS_PER_ROLE));
            let (first, second) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            let text = format!("the {first} {t} near {second} .");
            let at = |w: &str| {
                let start = text.find(&format!(" {w} ")).unwrap() + 1;
                [start, start + w.len()]
            };
            let role_label = |w: &str| format!("R{}", planted_role(w).unwrap());
            sents.push(serde_json::json!({
                "sent_id": format!("s{k}"),
                "text": text,
                "gold_events": [{
                    "trigger": at(&t),
                    "type": format!("S{s}"),
                    "args": [[at(&first), role_label(&first)], [at(&second), role_label(&second)]],
                }],
            }));
        }
        let doc = serde_json::json!({"doc_id": format!("d{d}"), "sentences": sents});
        writeln!(corpus, "{doc}").unwrap();
    }

    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();
    fs::write(dir.join("vectors.txt"), vectors).unwrap();
    fs::write(dir.join("verbs.txt"), verbs).unwrap();
    fs::write(dir.join("nouns.txt"), "").unwrap();
    fs::write(dir.join("gazetteer.txt"), gazetteer).unwrap();
    let config = dir.join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{
  "paths": {{
    "corpus": "corpus.jsonl",
    "embeddings": "vectors.txt",
    "lexicon": {{"verbs": "verbs.txt", "nouns": "nouns.txt", "gazetteer": "gazetteer.txt"}},
    "output_dir": "out"
  }},
  "clustering": {{"k_trig": {SCHEMAS}, "k_arg": {roles}}},
  "seed": 7{extra_config}
}}
"#,
            roles = SCHEMAS * ROLES_PER_SCHEMA
        ),
    )
    .unwrap();
    Planted {
        dir: dir.to_path_buf(),
        config,
        schema_of_sentence,
    }
}

fn write_vector(out: &mut String, word: &str, v: &[f64]) {
    write!(out, "{word}").unwrap();
    for x in v {
        write!(out, " {x}").unwrap();
    }
    out.push('\n');
}
