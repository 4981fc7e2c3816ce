//! The output grammar:
//!
//! ```text
//! Event war has arguments: Iraqi dictator; Event kill has arguments: children, women.
//! ```
//!
//! Events are joined by `"; "`, the list ends with `"."`, and an event
//! without arguments is written `has arguments: none`.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CandidateArgument, CandidateEvent};
use crate::corpus::{tokenize, Sentence, Span};

pub fn serialize_candidates(events: &[CandidateEvent]) -> String {
    if events.is_empty() {
        return String::new();
    }
    let mut out = events
        .iter()
        .map(|e| {
            let args = if e.arguments.is_empty() {
                "none".to_owned()
            } else {
                e.arguments
                    .iter()
                    .map(|a| a.text.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            format!("Event {} has arguments: {}", e.trigger_text, args)
        })
        .collect::<Vec<_>>()
        .join("; ");
    out.push('.');
    out
}

/// Fragments of generated text that did not match the grammar.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub skipped: Vec<String>,
}

impl ParseDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.skipped.is_empty()
    }
}

fn event_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?is)^event\s+(.+?)\s+has\s+arguments?\s*:\s*(.*)$").expect("valid pattern"))
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses generated text into candidate events and aligns every mention to
/// the earliest unused matching token span of `sentence`.
///
/// Events may be separated by `;` or newlines. Trigger alignments are
/// consumed across the whole output, argument alignments within one event.
pub fn parse_candidates(y_text: &str, sentence: &Sentence) -> (Vec<CandidateEvent>, ParseDiagnostics) {
    let mut events = Vec::new();
    let mut diagnostics = ParseDiagnostics::default();
    let mut used_triggers = HashSet::new();

    for line in y_text.lines() {
        let line = line.trim();
        let line = line.strip_suffix('.').unwrap_or(line);
        for fragment in line.split(';') {
            let fragment = fragment.trim();
            if fragment.is_empty() {
                continue;
            }
            let Some(caps) = event_pattern().captures(fragment) else {
                diagnostics.skipped.push(fragment.to_owned());
                continue;
            };
            let trigger_text = collapse_whitespace(&caps[1]);
            if trigger_text.is_empty() {
                diagnostics.skipped.push(fragment.to_owned());
                continue;
            }
            let arg_list = caps[2].trim();
            let arg_texts: Vec<String> = if arg_list.eq_ignore_ascii_case("none") {
                Vec::new()
            } else {
                arg_list
                    .split(',')
                    .map(collapse_whitespace)
                    .filter(|a| !a.is_empty())
                    .collect()
            };

            let trigger_span = align(sentence, &trigger_text, &mut used_triggers);
            let mut used_args = HashSet::new();
            let arguments = arg_texts
                .into_iter()
                .map(|text| {
                    let span = align(sentence, &text, &mut used_args);
                    CandidateArgument { text, span }
                })
                .collect();
            events.push(CandidateEvent {
                trigger_text,
                trigger_span,
                arguments,
            });
        }
    }
    (events, diagnostics)
}

/// Earliest case-insensitive token-sequence match of `mention` whose tokens
/// are not in `used`; marks the tokens used.
fn align(sentence: &Sentence, mention: &str, used: &mut HashSet<usize>) -> Option<Span> {
    let needle: Vec<String> = tokenize(mention).iter().map(|t| t.text.to_lowercase()).collect();
    let n = needle.len();
    if n == 0 || n > sentence.tokens.len() {
        return None;
    }
    let hay: Vec<String> = sentence.tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let start = (0..=hay.len() - n).find(|&i| hay[i..i + n] == needle[..] && (i..i + n).all(|k| !used.contains(&k)))?;
    used.extend(start..start + n);
    Some(sentence.token_range_span(start, start + n - 1))
}
