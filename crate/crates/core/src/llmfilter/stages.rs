//! Translation, keyword extraction and the three selection stages.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::prompts::{
    frame, parse_keyword_counts, parse_translation, parse_verdict, PromptSet, KEYWORDS_PREFIX, KEYWORD_FORMAT,
    TRANSLATE_FORMAT, VERDICT_FORMAT,
};
use super::provider::{complete_with_retry, parallel_map, CompletionProvider, Failure, RequestParams, RetryPolicy};
use super::report::{funnel_report, FunnelReport};
use super::text::{contains_phrase, tokenize};
use super::{FilterStageResult, KeywordLexicon, LlmError, Stage};
use crate::corpus::Bill;

/// Largest number of summaries sent in one keyword-extraction request.
pub const MAX_KEYWORD_BATCH: usize = 20;

const DETERMINISTIC_TEMPLATE: &str = "whole-token keyword match (no provider call)";

pub struct FilterContext<'a> {
    pub provider: &'a dyn CompletionProvider,
    pub prompts: PromptSet,
    pub params: RequestParams,
    pub retry: RetryPolicy,
    pub concurrency: usize,
    /// Judge translated summaries (when present) rather than the originals.
    pub use_translated: bool,
}

impl<'a> FilterContext<'a> {
    pub fn new(provider: &'a dyn CompletionProvider) -> Self {
        Self {
            provider,
            prompts: PromptSet::default(),
            params: RequestParams::default(),
            retry: RetryPolicy::default(),
            concurrency: 4,
            use_translated: true,
        }
    }

    fn text<'b>(&self, bill: &'b Bill) -> &'b str {
        if self.use_translated {
            bill.working_summary()
        } else {
            &bill.summary
        }
    }
}

/// Fills `summary_translated` for bills that lack one; others are returned unchanged.
pub fn translate_summaries(bills: &[Bill], ctx: &FilterContext) -> Result<Vec<Bill>, LlmError> {
    ctx.params.validate().map_err(LlmError::InvalidParams)?;
    let results = parallel_map(bills, ctx.concurrency, |b| {
        if b.summary_translated.as_deref().is_some_and(|t| !t.trim().is_empty()) {
            return Ok(b.clone());
        }
        let req = ctx.params.request(frame(&ctx.prompts.translate, None, TRANSLATE_FORMAT, &[&b.summary]));
        match complete_with_retry(ctx.provider, &req, &ctx.retry, parse_translation) {
            Ok(t) => Ok(Bill { summary_translated: Some(t), ..b.clone() }),
            Err(e) => Err(LlmError::StageFailed {
                stage: "translation".into(),
                bill_id: b.bill_id.clone(),
                attempts: e.attempts,
                request_hash: req.hash(),
                reason: e.last.to_string(),
            }),
        }
    });
    results.into_iter().collect()
}

/// Builds the lexicon from provider keyword counts over batches of summaries.
pub fn extract_keywords(bills: &[Bill], ctx: &FilterContext, batch_size: usize) -> Result<KeywordLexicon, LlmError> {
    ctx.params.validate().map_err(LlmError::InvalidParams)?;
    let batch_size = batch_size.clamp(1, MAX_KEYWORD_BATCH);
    let batches: Vec<&[Bill]> = bills.chunks(batch_size).collect();
    let results = parallel_map(&batches, ctx.concurrency, |batch| {
        let texts: Vec<&str> = batch.iter().map(|b| b.working_summary()).collect();
        let req = ctx.params.request(frame(&ctx.prompts.extract_keywords, None, KEYWORD_FORMAT, &texts));
        complete_with_retry(ctx.provider, &req, &ctx.retry, parse_keyword_counts)
    });
    let mut counts = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => counts.extend(c),
            Err(e) => {
                return Err(match e.last {
                    Failure::Parse { response, reason } => {
                        LlmError::Unparseable { context: format!("keyword extraction batch {i}"), reason, response }
                    }
                    Failure::Provider(p) => {
                        LlmError::ExtractionFailed { batch: i, attempts: e.attempts, reason: p.message }
                    }
                })
            }
        }
    }
    Ok(KeywordLexicon::from_counts(counts, "en"))
}

fn lexicon_tokens(lexicon: &KeywordLexicon) -> Vec<Vec<String>> {
    lexicon.keywords().map(tokenize).filter(|t| !t.is_empty()).collect()
}

/// Whether `text` contains any lexicon keyword as a whole-token run (case-folded).
pub fn matches_lexicon(text: &str, keyword_tokens: &[Vec<String>]) -> bool {
    let tokens = tokenize(text);
    keyword_tokens.iter().any(|k| contains_phrase(&tokens, k))
}

/// Keeps bills whose working summary contains at least one lexicon keyword.
pub fn keyword_select(bills: &[Bill], lexicon: &KeywordLexicon) -> FilterStageResult {
    let kw = lexicon_tokens(lexicon);
    FilterStageResult {
        stage: Stage::Keyword,
        input_count: bills.len(),
        retained_bill_ids: bills
            .iter()
            .filter(|b| matches_lexicon(b.working_summary(), &kw))
            .map(|b| b.bill_id.clone())
            .collect(),
        rationale: BTreeMap::new(),
        prompt_template_used: DETERMINISTIC_TEMPLATE.into(),
    }
}

/// Disagreements between provider-judged and deterministic keyword selection.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeywordModeAudit {
    /// Retained by the provider although no keyword token is present.
    pub provider_only: Vec<String>,
    /// Containing a keyword token but rejected by the provider.
    pub deterministic_only: Vec<String>,
}

impl KeywordModeAudit {
    pub fn agrees(&self) -> bool {
        self.provider_only.is_empty() && self.deterministic_only.is_empty()
    }
}

type Judgments = Vec<(String, bool, String)>;

fn judge_all(
    stage: Stage,
    instruction: &str,
    extra: Option<&str>,
    bills: &[&Bill],
    ctx: &FilterContext,
) -> Result<Judgments, LlmError> {
    ctx.params.validate().map_err(LlmError::InvalidParams)?;
    let results = parallel_map(bills, ctx.concurrency, |b| {
        let req = ctx.params.request(frame(instruction, extra, VERDICT_FORMAT, &[ctx.text(b)]));
        complete_with_retry(ctx.provider, &req, &ctx.retry, parse_verdict)
            .map(|v| (b.bill_id.clone(), v.relevant, v.rationale))
            .map_err(|e| LlmError::StageFailed {
                stage: stage.as_str().into(),
                bill_id: b.bill_id.clone(),
                attempts: e.attempts,
                request_hash: req.hash(),
                reason: e.last.to_string(),
            })
    });
    results.into_iter().collect()
}

fn to_result(stage: Stage, instruction: &str, input_count: usize, judged: Judgments) -> FilterStageResult {
    let mut retained = Vec::new();
    let mut rationale = BTreeMap::new();
    for (id, keep, why) in judged {
        if keep {
            retained.push(id.clone());
        }
        rationale.insert(id, why);
    }
    FilterStageResult {
        stage,
        input_count,
        retained_bill_ids: retained,
        rationale,
        prompt_template_used: instruction.to_string(),
    }
}

/// Provider-judged keyword selection, audited against the deterministic rule.
pub fn keyword_select_with_provider(
    bills: &[Bill],
    lexicon: &KeywordLexicon,
    ctx: &FilterContext,
) -> Result<(FilterStageResult, KeywordModeAudit), LlmError> {
    let line = format!("{KEYWORDS_PREFIX}{}", lexicon.keywords().collect::<Vec<_>>().join(", "));
    let refs: Vec<&Bill> = bills.iter().collect();
    let judged = judge_all(Stage::Keyword, &ctx.prompts.keyword_select, Some(&line), &refs, ctx)?;
    let result = to_result(Stage::Keyword, &ctx.prompts.keyword_select, bills.len(), judged);
    let det = keyword_select(bills, lexicon);
    let audit = KeywordModeAudit {
        provider_only: result
            .retained_bill_ids
            .iter()
            .filter(|id| !det.retained_bill_ids.contains(id))
            .cloned()
            .collect(),
        deterministic_only: det
            .retained_bill_ids
            .iter()
            .filter(|id| !result.retained_bill_ids.contains(id))
            .cloned()
            .collect(),
    };
    Ok((result, audit))
}

fn resolve<'b>(previous: &FilterStageResult, bills: &'b [Bill]) -> Result<Vec<&'b Bill>, LlmError> {
    let by_id: HashMap<&str, &Bill> = bills.iter().map(|b| (b.bill_id.as_str(), b)).collect();
    previous
        .retained_bill_ids
        .iter()
        .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| LlmError::UnknownBill(id.clone())))
        .collect()
}

/// Keeps bills with at least one sentence directly about transportation.
pub fn sentence_select(
    previous: &FilterStageResult,
    bills: &[Bill],
    ctx: &FilterContext,
) -> Result<FilterStageResult, LlmError> {
    let input = resolve(previous, bills)?;
    let judged = judge_all(Stage::Sentence, &ctx.prompts.sentence_select, None, &input, ctx)?;
    Ok(to_result(Stage::Sentence, &ctx.prompts.sentence_select, input.len(), judged))
}

/// Keeps bills whose primary subject is transportation.
pub fn context_select(
    previous: &FilterStageResult,
    bills: &[Bill],
    ctx: &FilterContext,
) -> Result<FilterStageResult, LlmError> {
    let input = resolve(previous, bills)?;
    let judged = judge_all(Stage::Context, &ctx.prompts.context_select, None, &input, ctx)?;
    Ok(to_result(Stage::Context, &ctx.prompts.context_select, input.len(), judged))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Use summaries as they are; for corpora already in the target language.
    pub skip_translation: bool,
    pub keyword_batch_size: usize,
    /// Ask the provider for keyword selection instead of matching tokens.
    pub provider_keyword_mode: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { skip_translation: false, keyword_batch_size: MAX_KEYWORD_BATCH, provider_keyword_mode: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub bills: Vec<Bill>,
    pub lexicon: KeywordLexicon,
    pub keyword: FilterStageResult,
    pub sentence: FilterStageResult,
    pub context: FilterStageResult,
    pub keyword_audit: Option<KeywordModeAudit>,
    pub funnel: FunnelReport,
}

pub fn run_pipeline(
    bills: &[Bill],
    ctx: &FilterContext,
    options: &PipelineOptions,
) -> Result<PipelineOutput, LlmError> {
    let bills = if options.skip_translation { bills.to_vec() } else { translate_summaries(bills, ctx)? };
    let lexicon = extract_keywords(&bills, ctx, options.keyword_batch_size)?;
    log::info!("lexicon: {} keywords", lexicon.len());
    let (keyword, keyword_audit) = if options.provider_keyword_mode {
        let (r, a) = keyword_select_with_provider(&bills, &lexicon, ctx)?;
        (r, Some(a))
    } else {
        (keyword_select(&bills, &lexicon), None)
    };
    let sentence = sentence_select(&keyword, &bills, ctx)?;
    let context = context_select(&sentence, &bills, ctx)?;
    let funnel = funnel_report(bills.len(), &[&keyword, &sentence, &context])?;
    Ok(PipelineOutput { bills, lexicon, keyword, sentence, context, keyword_audit, funnel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::StageOutcome;
    use crate::llmfilter::mock::{MarkerMock, RuleMock};
    use crate::llmfilter::prompts::blocks;
    use crate::llmfilter::provider::{CompletionRequest, FnProvider, ProviderError};

    fn bill(id: &str, summary: &str) -> Bill {
        Bill {
            bill_id: id.into(),
            title: format!("Title {id}"),
            summary: summary.into(),
            summary_translated: None,
            sponsor_id: "L1".into(),
            cosponsor_ids: vec![],
            committee_outcome: StageOutcome::Passed,
            ljc_outcome: StageOutcome::Passed,
            plenary_outcome: StageOutcome::Passed,
        }
    }

    fn ctx(p: &dyn CompletionProvider) -> FilterContext<'_> {
        FilterContext { retry: RetryPolicy::no_delay(), ..FilterContext::new(p) }
    }

    fn lexicon(words: &[&str]) -> KeywordLexicon {
        KeywordLexicon::from_counts(words.iter().map(|w| (w.to_string(), 1)), "en")
    }

    #[test]
    fn translation_echo_and_idempotence() {
        let p = FnProvider::new("echo", |r: &CompletionRequest| Ok(format!("EN:{}", blocks(&r.prompt)[0])));
        let mut done = bill("B2", "second");
        done.summary_translated = Some("already".into());
        let out = translate_summaries(&[bill("B1", "first"), done.clone()], &ctx(&p)).unwrap();
        assert_eq!(out[0].summary_translated.as_deref(), Some("EN:first"));
        assert_eq!(out[1], done);
    }

    #[test]
    fn empty_translation_names_the_bill() {
        let p = FnProvider::new("empty", |_: &CompletionRequest| Ok(String::new()));
        match translate_summaries(&[bill("B9", "x")], &ctx(&p)) {
            Err(LlmError::StageFailed { bill_id, attempts, .. }) => assert_eq!((bill_id.as_str(), attempts), ("B9", 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keyword_counts_are_summed_across_requests() {
        let p = FnProvider::new("kw", |r: &CompletionRequest| {
            Ok(if blocks(&r.prompt)[0].contains("one") { "road:3, transit:1".into() } else { "road:2".into() })
        });
        let lex = extract_keywords(&[bill("B1", "one"), bill("B2", "two")], &ctx(&p), 1).unwrap();
        let got: Vec<(&str, u64)> = lex.entries.iter().map(|e| (e.keyword.as_str(), e.frequency)).collect();
        assert_eq!(got, vec![("road", 5), ("transit", 1)]);
        assert!(extract_keywords(&[], &ctx(&p), 20).unwrap().is_empty());
    }

    #[test]
    fn unparseable_keyword_reply_is_carried_verbatim() {
        let p = FnProvider::new("bad", |_: &CompletionRequest| Ok("road=3".into()));
        match extract_keywords(&[bill("B1", "x")], &ctx(&p), 20) {
            Err(LlmError::Unparseable { response, .. }) => assert_eq!(response, "road=3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keyword_select_uses_whole_tokens() {
        let bills = [bill("B1", "the road act"), bill("B2", "tax reform"), bill("B3", "broadcast reform")];
        assert_eq!(keyword_select(&bills, &lexicon(&["road"])).retained_bill_ids, vec!["B1"]);
        assert!(keyword_select(&bills, &lexicon(&[])).is_empty());
    }

    #[test]
    fn marker_mock_retains_marked_bills() {
        let m = MarkerMock::new("TRANSPORT-CORE", PromptSet::default());
        let bills = [bill("B1", "TRANSPORT-CORE road"), bill("B2", "road"), bill("B3", "x TRANSPORT-CORE")];
        let all = FilterStageResult {
            stage: Stage::Keyword,
            input_count: 3,
            retained_bill_ids: vec!["B1".into(), "B2".into(), "B3".into()],
            rationale: BTreeMap::new(),
            prompt_template_used: String::new(),
        };
        let c = ctx(&m);
        let s = sentence_select(&all, &bills, &c).unwrap();
        assert_eq!(s.retained_bill_ids, vec!["B1", "B3"]);
        assert_eq!(s.rationale.len(), 3);
        let empty = FilterStageResult { retained_bill_ids: vec![], ..all.clone() };
        assert!(sentence_select(&empty, &bills, &c).unwrap().is_empty());
        assert!(context_select(&empty, &bills, &c).unwrap().is_empty());
    }

    #[test]
    fn rule_mock_layers() {
        let m = RuleMock::new(PromptSet::default());
        let c = ctx(&m);
        let bills = [
            bill("core", "The bill funds new subway stations. It improves airport access roads."),
            bill("tax", "It revises the income tax schedule. It extends a deduction. A clause exempts fuel used by public buses."),
            bill("idiom", "This bill puts the economy on the road to recovery. It sets debt targets."),
            bill("other", "It requires annual audits of public broadcasting budgets."),
        ];
        let out = run_pipeline(&bills, &c, &PipelineOptions::default()).unwrap();
        assert_eq!(out.keyword.retained_bill_ids, vec!["core", "tax", "idiom"]);
        assert_eq!(out.sentence.retained_bill_ids, vec!["core", "tax"]);
        assert_eq!(out.context.retained_bill_ids, vec!["core"]);
        assert!(out.bills.iter().all(|b| b.summary_translated.as_deref() == Some(b.summary.as_str())));

        let provider_mode = PipelineOptions { provider_keyword_mode: true, ..Default::default() };
        let out2 = run_pipeline(&bills, &c, &provider_mode).unwrap();
        assert!(out2.keyword_audit.unwrap().agrees());
        assert_eq!(out2.context, out.context);
    }

    #[test]
    fn garbage_verdicts_fail_with_request_reference() {
        let p = FnProvider::new("garbage", |_: &CompletionRequest| Ok("perhaps".into()));
        let prev = keyword_select(&[bill("B1", "road")], &lexicon(&["road"]));
        match sentence_select(&prev, &[bill("B1", "road")], &ctx(&p)) {
            Err(LlmError::StageFailed { request_hash, stage, .. }) => {
                assert_eq!(stage, "sentence");
                assert_eq!(request_hash.len(), 64);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_bill_from_previous_stage() {
        let m = RuleMock::new(PromptSet::default());
        let prev = keyword_select(&[bill("B1", "road")], &lexicon(&["road"]));
        assert_eq!(sentence_select(&prev, &[], &ctx(&m)), Err(LlmError::UnknownBill("B1".into())));
    }

    #[test]
    fn results_do_not_depend_on_concurrency() {
        let m = RuleMock::new(PromptSet::default());
        let bills: Vec<Bill> = (0..40)
            .map(|i| {
                bill(
                    &format!("B{i:02}"),
                    if i % 3 == 0 { "Bus lanes. Railway lines." } else { "Road to recovery. Tax." },
                )
            })
            .collect();
        let serial =
            run_pipeline(&bills, &FilterContext { concurrency: 1, ..ctx(&m) }, &PipelineOptions::default()).unwrap();
        let parallel =
            run_pipeline(&bills, &FilterContext { concurrency: 8, ..ctx(&m) }, &PipelineOptions::default()).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn fatal_provider_errors_are_not_retried() {
        let p = FnProvider::new("down", |_: &CompletionRequest| Err(ProviderError::fatal("nope")));
        match translate_summaries(&[bill("B1", "x")], &ctx(&p)) {
            Err(LlmError::StageFailed { attempts, .. }) => assert_eq!(attempts, 1),
            other => panic!("{other:?}"),
        }
    }
}
