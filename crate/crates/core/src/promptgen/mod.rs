//! Candidate event generation: the prompt built from a sentence, the
//! semi-structured output grammar shared by every backend, a deterministic
//! rule backend and a client for an external generation service.

mod external;
mod grammar;
mod rule;

use serde::{Deserialize, Serialize};

use crate::corpus::{Lexicon, Sentence, Span};

pub use external::{GenerateRequest, GenerateResponse, GeneratorClient};
pub use grammar::{parse_candidates, serialize_candidates, ParseDiagnostics};
pub use rule::generate_rule_based;

pub const DEFAULT_SOFT_TOKENS: usize = 20;

/// The `[x], prompt(x), [y]` template inputs for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub input_text: String,
    pub prompt_text: String,
    pub soft_token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateArgument {
    pub text: String,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEvent {
    pub trigger_text: String,
    pub trigger_span: Option<Span>,
    #[serde(default)]
    pub arguments: Vec<CandidateArgument>,
}

impl CandidateEvent {
    /// Event with no span information, as produced by text-only sources.
    pub fn from_texts(trigger: impl Into<String>, arguments: impl IntoIterator<Item = impl Into<String>>) -> Self {
        CandidateEvent {
            trigger_text: trigger.into(),
            trigger_span: None,
            arguments: arguments
                .into_iter()
                .map(|a| CandidateArgument {
                    text: a.into(),
                    span: None,
                })
                .collect(),
        }
    }
}

const TERMINAL_PUNCTUATION: [&str; 3] = [".", "!", "?"];

/// Keeps the sentence's nouns, verbs and gazetteer entities in their
/// original order (repeats included). A sentence-final `.`/`!`/`?` is
/// attached to the end of a non-empty prompt.
pub fn build_prompt(sentence: &Sentence, lexicon: &Lexicon) -> PromptInstance {
    let tokens = &sentence.tokens;
    let mut keep = vec![false; tokens.len()];
    for (i, tok) in tokens.iter().enumerate() {
        if lexicon.is_verb(&tok.text) || lexicon.is_noun(&tok.text) {
            keep[i] = true;
        }
    }
    for (first, last) in lexicon.entity_matches(tokens) {
        keep[first..=last].iter_mut().for_each(|k| *k = true);
    }
    let mut prompt_text = tokens
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(t, _)| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    if let (Some(last), Some(false)) = (tokens.last(), keep.last()) {
        if !prompt_text.is_empty() && TERMINAL_PUNCTUATION.contains(&last.text.as_str()) {
            prompt_text.push_str(&last.text);
        }
    }
    PromptInstance {
        input_text: sentence.text.clone(),
        prompt_text,
        soft_token_count: DEFAULT_SOFT_TOKENS,
    }
}
