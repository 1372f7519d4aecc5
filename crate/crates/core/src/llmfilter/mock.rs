//! Deterministic providers for offline runs and tests.

use std::collections::BTreeMap;

use super::prompts::{blocks, keyword_line, PromptSet};
use super::provider::{CompletionProvider, CompletionRequest, ProviderError};
use super::text::{contains_phrase, tokenize};

/// Transportation nouns recognised by [`RuleMock`].
pub const TRANSPORT_VOCABULARY: &[&str] = &[
    "airport",
    "bicycle",
    "bus",
    "buses",
    "commuter",
    "freight",
    "fuel",
    "highway",
    "lane",
    "lanes",
    "logistics",
    "mobility",
    "pedestrian",
    "port",
    "railway",
    "road",
    "roads",
    "scooter",
    "subway",
    "taxi",
    "track",
    "traffic",
    "trains",
    "transit",
    "vehicles",
];

/// Figurative phrases whose transport words do not count as transport content.
pub const IDIOMS: &[&str] = &["road to recovery", "on the right track", "in the fast lane"];

fn instruction(prompt: &str) -> &str {
    prompt.split("\n\n").next().unwrap_or("")
}

fn split_sentences(text: &str) -> Vec<&str> {
    text.split_inclusive(['.', '!', '?']).map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn strip_idioms(sentence: &str) -> String {
    let mut s = sentence.to_lowercase();
    for idiom in IDIOMS {
        s = s.replace(idiom, " ");
    }
    s
}

fn has_vocabulary(text: &str) -> bool {
    tokenize(text).iter().any(|t| TRANSPORT_VOCABULARY.contains(&t.as_str()))
}

/// Whether a sentence carries literal transport content.
pub fn transport_sentence(sentence: &str) -> bool {
    has_vocabulary(&strip_idioms(sentence))
}

/// Rule-based oracle for the synthetic templates.
///
/// * translation echoes the text;
/// * keyword extraction counts vocabulary tokens, idioms included;
/// * sentence selection is RELEVANT when any sentence has literal transport content;
/// * context selection is RELEVANT when more than half of the sentences do.
pub struct RuleMock {
    prompts: PromptSet,
}

impl RuleMock {
    pub fn new(prompts: PromptSet) -> Self {
        Self { prompts }
    }

    fn verdict(relevant: bool, why: &str) -> String {
        format!("{} {why}", if relevant { "RELEVANT" } else { "IRRELEVANT" })
    }
}

impl CompletionProvider for RuleMock {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let inst = instruction(&request.prompt);
        let texts = blocks(&request.prompt);
        let text = texts.first().copied().unwrap_or("");
        let p = &self.prompts;
        if inst == p.translate {
            return Ok(text.to_string());
        }
        if inst == p.extract_keywords {
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            for t in &texts {
                for tok in tokenize(t) {
                    if TRANSPORT_VOCABULARY.contains(&tok.as_str()) {
                        *counts.entry(tok).or_default() += 1;
                    }
                }
            }
            if counts.is_empty() {
                return Ok("NONE".into());
            }
            return Ok(counts.iter().map(|(k, c)| format!("{k}:{c}")).collect::<Vec<_>>().join(", "));
        }
        if inst == p.keyword_select {
            let keywords: Vec<&str> = keyword_line(&request.prompt)
                .unwrap_or("")
                .split(',')
                .map(str::trim)
                .filter(|k| !k.is_empty())
                .collect();
            let tokens = tokenize(text);
            let hit = keywords.iter().find(|k| contains_phrase(&tokens, &tokenize(k)));
            return Ok(match hit {
                Some(k) => Self::verdict(true, &format!("mentions \"{k}\".")),
                None => Self::verdict(false, "no keyword present."),
            });
        }
        let sentences = split_sentences(text);
        let n_transport = sentences.iter().filter(|s| transport_sentence(s)).count();
        if inst == p.sentence_select {
            let why = format!("{n_transport} of {} sentences concern transportation.", sentences.len());
            return Ok(Self::verdict(n_transport > 0, &why));
        }
        if inst == p.context_select {
            let why = format!("{n_transport} of {} sentences concern transportation.", sentences.len());
            return Ok(Self::verdict(2 * n_transport > sentences.len(), &why));
        }
        Err(ProviderError::fatal(format!("rule mock does not recognise instruction {inst:?}")))
    }

    fn name(&self) -> &str {
        "rule-mock"
    }
}

/// Judges RELEVANT exactly when the text contains a marker string; echoes translations and
/// reports no keywords.
pub struct MarkerMock {
    pub marker: String,
    prompts: PromptSet,
}

impl MarkerMock {
    pub fn new(marker: impl Into<String>, prompts: PromptSet) -> Self {
        Self { marker: marker.into(), prompts }
    }
}

impl CompletionProvider for MarkerMock {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let inst = instruction(&request.prompt);
        let text = blocks(&request.prompt).first().copied().unwrap_or("").to_string();
        if inst == self.prompts.translate {
            return Ok(text);
        }
        if inst == self.prompts.extract_keywords {
            return Ok("NONE".into());
        }
        Ok(if text.contains(&self.marker) {
            "RELEVANT marker present".into()
        } else {
            "IRRELEVANT marker absent".into()
        })
    }

    fn name(&self) -> &str {
        "marker-mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth_pools;

    #[test]
    fn vocabulary_agrees_with_synthetic_templates() {
        for s in synth_pools::TRANSPORT_SENTENCES {
            assert!(transport_sentence(s), "{s}");
        }
        for s in synth_pools::INCIDENTAL_SENTENCES {
            assert!(transport_sentence(s), "{s}");
        }
        for s in synth_pools::IDIOM_SENTENCES {
            assert!(has_vocabulary(s), "{s}");
            assert!(!transport_sentence(s), "{s}");
        }
        for pool in [synth_pools::TAX_SENTENCES, synth_pools::ECONOMY_SENTENCES, synth_pools::UNRELATED_SENTENCES] {
            for s in pool {
                assert!(!has_vocabulary(s), "{s}");
            }
        }
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(split_sentences("One. Two!  Three"), vec!["One.", "Two!", "Three"]);
    }
}
