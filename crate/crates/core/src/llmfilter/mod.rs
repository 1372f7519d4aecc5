//! Staged narrowing of a bill corpus to transportation bills.
//!
//! Summaries are translated, a keyword lexicon is extracted, and three selection stages
//! follow: deterministic keyword matching, then per-bill provider judgments on sentence-level
//! and primary-topic relevance. Every stage output is a subset of its input in input order.

pub mod mock;
pub mod prompts;
pub mod provider;
pub mod remote;
pub mod report;
pub mod stages;
pub mod text;
pub mod transcript;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::table::Table;

pub use mock::{MarkerMock, RuleMock, TRANSPORT_VOCABULARY};
pub use prompts::PromptSet;
pub use provider::{CompletionProvider, CompletionRequest, FnProvider, ProviderError, RequestParams, RetryPolicy};
pub use remote::{RemoteProvider, RemoteSettings, API_KEY_ENV};
pub use report::{
    audit_worksheet, draw_audit_sample, funnel_report, keyword_frequency_table, AuditSample, FrequencyRow, FunnelReport,
};
pub use stages::{
    context_select, extract_keywords, keyword_select, keyword_select_with_provider, run_pipeline, sentence_select,
    translate_summaries, FilterContext, KeywordModeAudit, PipelineOptions, PipelineOutput,
};
pub use transcript::{RecordingProvider, ReplayProvider, TranscriptRecord, TranscriptWriter};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LlmError {
    #[error("{stage} stage failed on bill {bill_id} after {attempts} attempt(s) (request {request_hash}): {reason}")]
    StageFailed { stage: String, bill_id: String, attempts: usize, request_hash: String, reason: String },
    #[error("unparseable response for {context}: {reason}; response was {response:?}")]
    Unparseable { context: String, reason: String, response: String },
    #[error("keyword extraction batch {batch} failed after {attempts} attempt(s): {reason}")]
    ExtractionFailed { batch: usize, attempts: usize, reason: String },
    #[error("bill {0} from the previous stage is not in the corpus")]
    UnknownBill(String),
    #[error("stage counts must be non-increasing: {stage} has {count} after {previous}")]
    IncreasingCount { stage: String, previous: usize, count: usize },
    #[error("initial corpus count must be positive")]
    EmptyCorpus,
    #[error("the keyword lexicon is empty")]
    EmptyLexicon,
    #[error("sample fraction {0} must lie in (0, 1]")]
    InvalidFraction(f64),
    #[error("invalid request parameters: {0}")]
    InvalidParams(String),
    #[error("transcript {path}: {message}")]
    Transcript { path: String, message: String },
    #[error("environment variable LEGIGPT_API_KEY is not set")]
    MissingApiKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Keyword,
    Sentence,
    Context,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Keyword => "keyword",
            Stage::Sentence => "sentence",
            Stage::Context => "context",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub keyword: String,
    pub frequency: u64,
}

/// Case-folded keywords with corpus frequencies, sorted by frequency then keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordLexicon {
    pub entries: Vec<LexiconEntry>,
    pub language: String,
}

impl KeywordLexicon {
    /// Merges case-insensitively equal keywords and sorts.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>, language: &str) -> Self {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (k, c) in counts {
            let k = k.trim().to_lowercase();
            if !k.is_empty() && c > 0 {
                *merged.entry(k).or_default() += c;
            }
        }
        let mut entries: Vec<LexiconEntry> =
            merged.into_iter().map(|(keyword, frequency)| LexiconEntry { keyword, frequency }).collect();
        entries.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.keyword.cmp(&b.keyword)));
        Self { entries, language: language.to_string() }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.keyword.as_str())
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["keyword", "frequency"]);
        for e in &self.entries {
            t.push([e.keyword.clone(), e.frequency.to_string()]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStageResult {
    pub stage: Stage,
    pub input_count: usize,
    pub retained_bill_ids: Vec<String>,
    /// Provider rationale per judged bill; empty for the deterministic keyword stage.
    pub rationale: BTreeMap<String, String>,
    pub prompt_template_used: String,
}

impl FilterStageResult {
    pub fn len(&self) -> usize {
        self.retained_bill_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained_bill_ids.is_empty()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["bill_id", "rationale"]);
        for id in &self.retained_bill_ids {
            t.push([id.clone(), self.rationale.get(id).cloned().unwrap_or_default()]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_merges_case_and_sorts() {
        let l = KeywordLexicon::from_counts(
            [("Road".to_string(), 3), ("transit".to_string(), 1), ("road".to_string(), 2), ("bus".to_string(), 1)],
            "en",
        );
        let got: Vec<(&str, u64)> = l.entries.iter().map(|e| (e.keyword.as_str(), e.frequency)).collect();
        assert_eq!(got, vec![("road", 5), ("bus", 1), ("transit", 1)]);
    }
}
