//! Funnel summary, audit sampling and keyword frequency output.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FilterStageResult, KeywordLexicon, LlmError, Stage};
use crate::corpus::Bill;
use crate::table::{fmt_f64, Table};

pub const FUNNEL_STAGES: [&str; 4] = ["corpus", "keyword", "sentence", "context"];

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub stage_counts: Vec<(String, usize)>,
    /// Percent of the initial corpus retained after each filter stage, one decimal.
    pub retention_pct: Vec<f64>,
    pub total_reduction_pct: f64,
}

impl FunnelReport {
    /// `counts[0]` is the corpus size, followed by one count per stage.
    pub fn from_counts(counts: &[usize]) -> Result<Self, LlmError> {
        let initial = *counts.first().ok_or(LlmError::EmptyCorpus)?;
        if initial == 0 {
            return Err(LlmError::EmptyCorpus);
        }
        let name = |i: usize| FUNNEL_STAGES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("stage{i}"));
        for (i, w) in counts.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(LlmError::IncreasingCount { stage: name(i + 1), previous: w[0], count: w[1] });
            }
        }
        let pct = |c: usize| 100.0 * c as f64 / initial as f64;
        let last = *counts.last().expect("non-empty");
        Ok(Self {
            stage_counts: counts.iter().enumerate().map(|(i, &c)| (name(i), c)).collect(),
            retention_pct: counts[1..].iter().map(|&c| round1(pct(c))).collect(),
            total_reduction_pct: round1(100.0 - pct(last)),
        })
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["stage", "count", "retention_pct"]);
        for (i, (name, count)) in self.stage_counts.iter().enumerate() {
            let r = if i == 0 { 100.0 } else { self.retention_pct[i - 1] };
            t.push([name.clone(), count.to_string(), format!("{r:.1}")]);
        }
        t.push(["total_reduction".to_string(), String::new(), format!("{:.1}", self.total_reduction_pct)]);
        t
    }
}

pub fn funnel_report(initial: usize, stages: &[&FilterStageResult]) -> Result<FunnelReport, LlmError> {
    let mut counts = vec![initial];
    counts.extend(stages.iter().map(|s| s.len()));
    FunnelReport::from_counts(&counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSample {
    pub stage: Stage,
    pub sampled_bill_ids: Vec<String>,
    pub sample_seed: u64,
    pub fraction: f64,
}

/// Sample size for a stage output of `n` bills.
pub fn audit_sample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Seeded sample of the retained bills, listed in stage output order.
pub fn draw_audit_sample(result: &FilterStageResult, fraction: f64, seed: u64) -> Result<AuditSample, LlmError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LlmError::InvalidFraction(fraction));
    }
    let n = result.len();
    let k = audit_sample_size(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(AuditSample {
        stage: result.stage,
        sampled_bill_ids: idx.into_iter().map(|i| result.retained_bill_ids[i].clone()).collect(),
        sample_seed: seed,
        fraction,
    })
}

/// Review sheet with an empty verdict column for the human reviewer.
pub fn audit_worksheet(sample: &AuditSample, result: &FilterStageResult, bills: &[Bill]) -> Result<Table, LlmError> {
    let by_id: HashMap<&str, &Bill> = bills.iter().map(|b| (b.bill_id.as_str(), b)).collect();
    let mut t = Table::new(["stage", "bill_id", "title", "summary", "rationale", "reviewer_verdict"]);
    for id in &sample.sampled_bill_ids {
        let b = by_id.get(id.as_str()).ok_or_else(|| LlmError::UnknownBill(id.clone()))?;
        t.push([
            sample.stage.as_str().to_string(),
            id.clone(),
            b.title.clone(),
            b.working_summary().to_string(),
            result.rationale.get(id).cloned().unwrap_or_default(),
            String::new(),
        ]);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub keyword: String,
    pub count: u64,
    /// Count relative to the most frequent keyword.
    pub weight: f64,
}

pub fn keyword_frequency_table(lexicon: &KeywordLexicon) -> Result<Vec<FrequencyRow>, LlmError> {
    let max = lexicon.entries.iter().map(|e| e.frequency).max().ok_or(LlmError::EmptyLexicon)?;
    Ok(lexicon
        .entries
        .iter()
        .map(|e| FrequencyRow {
            keyword: e.keyword.clone(),
            count: e.frequency,
            weight: e.frequency as f64 / max as f64,
        })
        .collect())
}

pub fn frequency_rows_table(rows: &[FrequencyRow]) -> Table {
    let mut t = Table::new(["keyword", "count", "weight"]);
    for r in rows {
        t.push([r.keyword.clone(), r.count.to_string(), fmt_f64(r.weight)]);
    }
    t
}
