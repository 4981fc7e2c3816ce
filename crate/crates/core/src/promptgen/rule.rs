use super::{CandidateArgument, CandidateEvent};
use crate::corpus::{Lexicon, Sentence};

/// Deterministic local backend.
///
/// Triggers are single tokens found in the verb list. Arguments are maximal
/// gazetteer matches that do not contain a trigger token; each one goes to
/// the trigger with the smallest token gap, the preceding trigger on ties.
/// Sentences without triggers yield no events.
pub fn generate_rule_based(sentence: &Sentence, lexicon: &Lexicon) -> Vec<CandidateEvent> {
    let tokens = &sentence.tokens;
    let triggers: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.is_verb(&t.text))
        .map(|(i, _)| i)
        .collect();
    if triggers.is_empty() {
        return Vec::new();
    }

    let mut events: Vec<CandidateEvent> = triggers
        .iter()
        .map(|&i| CandidateEvent {
            trigger_text: tokens[i].text.clone(),
            trigger_span: Some(tokens[i].span()),
            arguments: Vec::new(),
        })
        .collect();

    for (first, last) in lexicon.entity_matches(tokens) {
        if triggers.iter().any(|&t| (first..=last).contains(&t)) {
            continue;
        }
        let owner = nearest_trigger(&triggers, first, last);
        events[owner].arguments.push(CandidateArgument {
            text: sentence.token_range_text(first, last),
            span: Some(sentence.token_range_span(first, last)),
        });
    }
    events
}

/// Index into `triggers` (sorted token positions) of the trigger closest to
/// the token range `first..=last`. Strict `<` keeps the earlier one on ties.
pub(crate) fn nearest_trigger(triggers: &[usize], first: usize, last: usize) -> usize {
    let gap = |t: usize| if t < first { first - t } else { t - last };
    let mut best = 0;
    for (k, &t) in triggers.iter().enumerate().skip(1) {
        if gap(t) < gap(triggers[best]) {
            best = k;
        }
    }
    best
}
