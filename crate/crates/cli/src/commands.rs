//! Subcommand implementations. Each command reads its predecessor's files from the output
//! directory, writes into its own folder and records the file hashes in the manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use legis_core::attribution::{dependence_series, importance_ranking, shap_correlation, shap_matrix};
use legis_core::corpus::{
    generate_synthetic_corpus, load_bills, load_constituencies, load_legislators, validate_corpus, write_bills,
    write_constituencies, write_legislators, Bill,
};
use legis_core::features::{
    build_feature_matrix, build_participation, describe, feature_index, participation_table, FeatureOptions,
    LabeledMatrix,
};
use legis_core::llmfilter::report::frequency_rows_table;
use legis_core::llmfilter::{
    audit_worksheet, draw_audit_sample, keyword_frequency_table, run_pipeline, CompletionProvider, FilterContext,
    PipelineOptions, PromptSet, RecordingProvider, RemoteProvider, RemoteSettings, ReplayProvider, RequestParams,
    RetryPolicy, RuleMock, TranscriptWriter,
};
use legis_core::metrics::{confusion, ConfusionMatrix};
use legis_core::models::{
    kfold_grid_search, repeated_evaluate, split_train_test, train, CvResult, Model, RunAggregate, TrainConfig,
    TrainTestSplit,
};
use legis_core::table::{fmt_f64, fmt_opt, Table};
use serde::{Deserialize, Serialize};

use crate::config::{ExplainDataset, ProviderMode, RunConfig};
use crate::error::CliError;
use crate::workspace::{Fingerprint, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Ingest,
    Filter,
    Features,
    Train,
    Explain,
    Report,
}

impl Command {
    pub const PIPELINE: [Command; 6] =
        [Command::Ingest, Command::Filter, Command::Features, Command::Train, Command::Explain, Command::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Filter => "filter",
            Command::Features => "features",
            Command::Train => "train",
            Command::Explain => "explain",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ran,
    CacheHit,
}

pub struct Runner {
    cfg: RunConfig,
    offline: bool,
    ws: Workspace,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

fn model_file(label: &str) -> String {
    format!("model_{label}.txt")
}

impl Runner {
    pub fn new(cfg: RunConfig, output: PathBuf, offline: bool) -> Result<Self, CliError> {
        cfg.validate()?;
        if offline && cfg.provider.mode == ProviderMode::Remote {
            return Err(CliError::Config("the remote provider needs network access, which --offline forbids".into()));
        }
        let ws = Workspace::open(&output)?;
        Ok(Self { cfg, offline, ws })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn offline(&self) -> bool {
        self.offline
    }

    pub fn run(&mut self, command: Command) -> Result<Status, CliError> {
        match command {
            Command::Ingest => self.ingest(),
            Command::Filter => self.filter(),
            Command::Features => self.features(),
            Command::Train => self.train(),
            Command::Explain => self.explain(),
            Command::Report => self.report(),
        }
    }

    pub fn run_all(&mut self) -> Result<Vec<Status>, CliError> {
        Command::PIPELINE.iter().map(|&c| self.run(c)).collect()
    }

    fn cached(&self, command: &str, input_hash: &str) -> bool {
        if self.ws.is_current(command, input_hash) {
            log::info!("{command}: cache hit, outputs unchanged");
            true
        } else {
            false
        }
    }

    pub fn ingest(&mut self) -> Result<Status, CliError> {
        let inp = &self.cfg.input;
        let hash = Fingerprint::default()
            .file("bills", &inp.bills)?
            .file("legislators", &inp.legislators)?
            .file("constituencies", &inp.constituencies)?
            .finish();
        if self.cached("ingest", &hash) {
            return Ok(Status::CacheHit);
        }
        let bills = load_bills(&inp.bills)?;
        let legislators = load_legislators(&inp.legislators)?;
        let constituencies = load_constituencies(&inp.constituencies)?;
        let report = validate_corpus(&bills, &legislators, &constituencies);
        let mut out = self.ws.begin("ingest")?;
        out.write("validation.txt", report.to_text())?;
        out.table("validation.csv", &report.to_table())?;
        if !report.is_admissible() {
            return Err(CliError::Inadmissible(report.errors.len()));
        }
        write_bills(out.path("bills.csv"), &bills)?;
        write_legislators(out.path("legislators.csv"), &legislators)?;
        write_constituencies(out.path("constituencies.csv"), &constituencies)?;
        for f in ["bills.csv", "legislators.csv", "constituencies.csv"] {
            out.record(f)?;
        }
        log::info!(
            "ingest: {} bills, {} legislators, {} constituencies",
            bills.len(),
            legislators.len(),
            constituencies.len()
        );
        self.ws.commit(out, hash)?;
        Ok(Status::Ran)
    }

    fn transcript_path(&self) -> PathBuf {
        self.cfg.provider.transcript.clone().unwrap_or_else(|| self.ws.path("transcript.jsonl"))
    }

    fn prompts(&self) -> Result<PromptSet, CliError> {
        match &self.cfg.filter.prompts_dir {
            Some(dir) => PromptSet::from_dir(dir).map_err(|e| CliError::io(dir, e)),
            None => Ok(PromptSet::default()),
        }
    }

    fn provider(&self, prompts: &PromptSet) -> Result<Box<dyn CompletionProvider>, CliError> {
        let p = &self.cfg.provider;
        match p.mode {
            ProviderMode::Mock => Ok(Box::new(RuleMock::new(prompts.clone()))),
            ProviderMode::Replay => {
                let path = self.transcript_path();
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "replay mode needs an existing transcript at {}",
                        path.display()
                    )));
                }
                Ok(Box::new(ReplayProvider::open(&path)?))
            }
            ProviderMode::Remote => {
                let settings = RemoteSettings {
                    base_url: p.endpoint.clone(),
                    model: p.model.clone(),
                    timeout: Duration::from_secs(p.timeout_secs),
                };
                let remote = RemoteProvider::from_env(settings)?;
                Ok(Box::new(RecordingProvider::new(remote, TranscriptWriter::open(self.transcript_path())?)))
            }
        }
    }

    pub fn filter(&mut self) -> Result<Status, CliError> {
        let upstream = self.ws.require("filter", "ingest")?;
        let prompts = self.prompts()?;
        let p = &self.cfg.provider;
        let params = RequestParams { temperature: p.temperature, max_tokens: p.max_tokens, top_p: p.top_p };
        let mut fp = Fingerprint::default()
            .part("ingest", upstream.as_bytes())
            .json("filter", &self.cfg.filter)
            .json("mode", &p.mode)
            .json("endpoint", &(&p.endpoint, &p.model))
            .json("params", &params)
            .json("prompts", &prompts)
            .json("audit_seed", &self.cfg.seeds.audit);
        if p.mode == ProviderMode::Replay && self.transcript_path().exists() {
            fp = fp.file("transcript", &self.transcript_path())?;
        }
        let hash = fp.finish();
        if self.cached("filter", &hash) {
            return Ok(Status::CacheHit);
        }

        let bills = load_bills(self.ws.path("ingest/bills.csv"))?;
        let provider = self.provider(&prompts)?;
        let ctx = FilterContext {
            provider: provider.as_ref(),
            prompts,
            params,
            retry: RetryPolicy { max_attempts: p.max_attempts, base_delay: Duration::from_millis(p.base_delay_ms) },
            concurrency: p.concurrency,
            use_translated: self.cfg.filter.use_translated,
        };
        let options = PipelineOptions {
            skip_translation: !self.cfg.filter.translate,
            keyword_batch_size: self.cfg.filter.keyword_batch_size,
            provider_keyword_mode: self.cfg.filter.provider_keyword_mode,
        };
        let result = run_pipeline(&bills, &ctx, &options)?;
        let frequencies = keyword_frequency_table(&result.lexicon)?;

        let mut out = self.ws.begin("filter")?;
        write_bills(out.path("bills_translated.csv"), &result.bills)?;
        out.record("bills_translated.csv")?;
        let keep: std::collections::HashSet<&str> =
            result.context.retained_bill_ids.iter().map(String::as_str).collect();
        let transport: Vec<Bill> = result.bills.iter().filter(|b| keep.contains(b.bill_id.as_str())).cloned().collect();
        write_bills(out.path("transport_bills.csv"), &transport)?;
        out.record("transport_bills.csv")?;
        out.table("lexicon.csv", &result.lexicon.to_table())?;
        out.table("keyword_frequency.csv", &frequency_rows_table(&frequencies))?;
        for stage in [&result.keyword, &result.sentence, &result.context] {
            let name = stage.stage.as_str();
            out.table(&format!("stage_{name}.csv"), &stage.to_table())?;
            let sample = draw_audit_sample(stage, self.cfg.filter.audit_fraction, self.cfg.seeds.audit)?;
            out.table(&format!("audit_{name}.csv"), &audit_worksheet(&sample, stage, &result.bills)?)?;
        }
        out.json("stages.json", &[&result.keyword, &result.sentence, &result.context])?;
        out.table("funnel.csv", &result.funnel.to_table())?;
        out.json("funnel.json", &result.funnel)?;
        if let Some(audit) = &result.keyword_audit {
            if !audit.agrees() {
                log::warn!(
                    "provider keyword mode disagrees with token matching: {} provider-only, {} token-only",
                    audit.provider_only.len(),
                    audit.deterministic_only.len()
                );
            }
            out.json("keyword_mode_audit.json", audit)?;
        }
        let counts: Vec<String> = result.funnel.stage_counts.iter().map(|(s, c)| format!("{s}={c}")).collect();
        log::info!("filter: {}", counts.join(", "));
        self.ws.commit(out, hash)?;
        Ok(Status::Ran)
    }

    pub fn features(&mut self) -> Result<Status, CliError> {
        let ingest = self.ws.require("features", "ingest")?;
        let filter = self.ws.require("features", "filter")?;
        let hash = Fingerprint::default()
            .part("ingest", ingest.as_bytes())
            .part("filter", filter.as_bytes())
            .json("features", &self.cfg.features)
            .finish();
        if self.cached("features", &hash) {
            return Ok(Status::CacheHit);
        }
        let bills = load_bills(self.ws.path("filter/transport_bills.csv"))?;
        let legislators = load_legislators(self.ws.path("ingest/legislators.csv"))?;
        let constituencies = load_constituencies(self.ws.path("ingest/constituencies.csv"))?;
        let records = build_participation(&bills, &legislators)?;
        let options = FeatureOptions { include_approval: self.cfg.features.include_approval };
        let matrix = build_feature_matrix(&records, &bills, &legislators, &constituencies, options)?;
        let stats = describe(&records, &bills, &legislators, &constituencies)?;
        let mut out = self.ws.begin("features")?;
        out.table("participation.csv", &participation_table(&records))?;
        out.table("matrix.csv", &matrix.to_table())?;
        out.table("descriptive_stats.csv", &stats.to_table())?;
        out.json("descriptive_stats.json", &stats)?;
        log::info!("features: {} rows x {} columns", matrix.len(), matrix.x.n_cols());
        self.ws.commit(out, hash)?;
        Ok(Status::Ran)
    }

    fn seeded_grid(&self) -> Vec<(String, Vec<TrainConfig>)> {
        let mut groups: Vec<(String, Vec<TrainConfig>)> = Vec::new();
        for c in &self.cfg.train.grid {
            let c = TrainConfig { seed: self.cfg.seeds.training, ..c.clone() };
            match groups.iter_mut().find(|(l, _)| l == c.label()) {
                Some((_, v)) => v.push(c),
                None => groups.push((c.label().to_string(), vec![c])),
            }
        }
        groups
    }

    pub fn train(&mut self) -> Result<Status, CliError> {
        let upstream = self.ws.require("train", "features")?;
        let hash = Fingerprint::default()
            .part("features", upstream.as_bytes())
            .json("train", &self.cfg.train)
            .json("seeds", &(self.cfg.seeds.split, self.cfg.seeds.cv, self.cfg.seeds.training))
            .finish();
        if self.cached("train", &hash) {
            return Ok(Status::CacheHit);
        }
        let lm = LabeledMatrix::read_csv(self.ws.path("features/matrix.csv"))?;
        let data = lm.dataset();
        let t = &self.cfg.train;
        let split = split_train_test(data.len(), t.test_fraction, self.cfg.seeds.split)?;
        let (train_set, test_set) = (data.subset(&split.train), data.subset(&split.test));

        let mut out = self.ws.begin("train")?;
        let mut results = Vec::new();
        for (label, configs) in self.seeded_grid() {
            log::info!("train: {label} ({} config(s), {}-fold CV)", configs.len(), t.cv_folds);
            let cv = kfold_grid_search(&train_set, &configs, t.cv_folds, self.cfg.seeds.cv)?;
            let best = cv.best_config().clone();
            let model = train(&train_set, &best)?;
            let cm = confusion(&test_set.y, &model.classify(&test_set.x, 0.5)?)
                .map_err(legis_core::models::ModelError::from)?;
            let runs = repeated_evaluate(&data, &best, t.n_runs, self.cfg.seeds.split, t.test_fraction)?;
            out.write(&model_file(&label), model.to_text())?;
            results.push(ModelResult { label, cv, best, test_confusion: cm, runs, loss: LossTrace::of(&model) });
        }

        out.json(
            "split.json",
            &SplitRecord { seed: self.cfg.seeds.split, test_fraction: t.test_fraction, split: split.clone() },
        )?;
        out.table("cv_results.csv", &cv_table(&results))?;
        out.table("metrics.csv", &metrics_table(&results))?;
        out.table("test_confusion.csv", &confusion_table(&results))?;
        out.table("runs.csv", &runs_table(&results))?;
        for r in &results {
            if let Some(table) = r.loss.to_table() {
                out.table(&format!("loss_{}.csv", r.label), &table)?;
            }
        }
        let metric_rows: Vec<MetricRow> = results.iter().map(MetricRow::of).collect();
        out.json("metrics.json", &metric_rows)?;
        out.json(
            "run_manifest.json",
            &TrainManifest {
                seeds: self.cfg.seeds.clone(),
                test_fraction: t.test_fraction,
                cv_folds: t.cv_folds,
                n_runs: t.n_runs,
                models: results.iter().map(ModelSummary::of).collect(),
                metrics: metric_rows,
            },
        )?;
        self.ws.commit(out, hash)?;
        Ok(Status::Ran)
    }

    pub fn explain(&mut self) -> Result<Status, CliError> {
        let features = self.ws.require("explain", "features")?;
        let trained = self.ws.require("explain", "train")?;
        let e = &self.cfg.explain;
        let hash = Fingerprint::default()
            .part("features", features.as_bytes())
            .part("train", trained.as_bytes())
            .json("explain", e)
            .finish();
        if self.cached("explain", &hash) {
            return Ok(Status::CacheHit);
        }
        let path = self.ws.path(&format!("train/{}", model_file(&e.model)));
        if !path.exists() {
            return Err(CliError::Config(format!(
                "explain.model `{}` was not trained (no {})",
                e.model,
                path.display()
            )));
        }
        let text = std::fs::read_to_string(&path).map_err(|err| CliError::io(&path, err))?;
        let model = Model::from_text(&text)?;
        let Some(ensemble) = model.as_trees() else {
            return Err(CliError::Config(format!("explain.model `{}` is not a tree model", e.model)));
        };
        let lm = LabeledMatrix::read_csv(self.ws.path("features/matrix.csv"))?;
        let split: SplitRecord = read_json(&self.ws.path("train/split.json"))?;
        let rows = match e.dataset {
            ExplainDataset::Train => lm.subset(&split.split.train),
            ExplainDataset::Test => lm.subset(&split.split.test),
            ExplainDataset::All => lm,
        };
        let shap = shap_matrix(ensemble, &rows.x, &rows.row_id_strings(), &rows.feature_names)?;
        let accuracy = shap.local_accuracy_error(ensemble, &rows.x);
        let ranking = importance_ranking(&shap);
        let corr = shap_correlation(&shap);

        let mut out = self.ws.begin("explain")?;
        out.table("shap_values.csv", &shap.to_table())?;
        out.table("importance.csv", &ranking.to_table())?;
        out.table("shap_correlation.csv", &corr.to_table())?;
        let mut pairs = Table::new(["feature_a", "feature_b", "pearson_r"]);
        for (i, j, r) in corr.strong_pairs(e.correlation_threshold) {
            pairs.push([shap.feature_names[i].clone(), shap.feature_names[j].clone(), fmt_f64(r)]);
        }
        out.table("strong_pairs.csv", &pairs)?;
        for name in &e.dependence_features {
            let Some(j) = rows
                .feature_names
                .iter()
                .position(|n| n == name)
                .or_else(|| feature_index(name).filter(|&j| j < rows.x.n_cols()))
            else {
                log::warn!("explain: dependence feature `{name}` is not in the matrix, skipped");
                continue;
            };
            let series = dependence_series(&shap, &rows.x, j, None)?;
            out.table(&format!("dependence_{name}.csv"), &series.to_table())?;
            let mut buckets = Table::new(["lo", "hi", "count", "mean_shap"]);
            for b in series.bucket_means(e.dependence_buckets) {
                buckets.push([fmt_f64(b.lo), fmt_f64(b.hi), b.count.to_string(), fmt_f64(b.mean_shap)]);
            }
            out.table(&format!("dependence_{name}_buckets.csv"), &buckets)?;
        }
        out.json(
            "summary.json",
            &ExplainSummary {
                model: e.model.clone(),
                n_rows: shap.n_rows(),
                base_value: shap.base_value,
                max_local_accuracy_error: accuracy,
                top_features: ranking.entries.iter().take(5).map(|x| x.feature.clone()).collect(),
            },
        )?;
        log::info!(
            "explain: {} rows, top feature {}",
            shap.n_rows(),
            ranking.top().map_or("-", |t| t.feature.as_str())
        );
        self.ws.commit(out, hash)?;
        Ok(Status::Ran)
    }

    pub fn report(&mut self) -> Result<Status, CliError> {
        let mut fp = Fingerprint::default();
        for c in ["ingest", "filter", "features", "train", "explain"] {
            fp = fp.part(c, self.ws.require("report", c)?.as_bytes());
        }
        let hash = fp.finish();
        if self.cached("report", &hash) {
            return Ok(Status::CacheHit);
        }
        let summary = RunReport {
            funnel: read_json(&self.ws.path("filter/funnel.json"))?,
            metrics: read_json(&self.ws.path("train/metrics.json"))?,
            explain: read_json(&self.ws.path("explain/summary.json"))?,
            outputs: self
                .ws
                .manifest()
                .commands
                .iter()
                .filter(|(c, _)| c.as_str() != "report")
                .map(|(c, e)| (c.clone(), e.outputs.clone()))
                .collect(),
        };
        let mut out = self.ws.begin("report")?;
        out.json("run_manifest.json", &summary)?;
        self.ws.commit(out, hash)?;
        Ok(Status::Ran)
    }
}

/// Writes a synthetic corpus to the configured input paths, plus its transport labels.
pub fn synthesize(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let corpus = generate_synthetic_corpus(&cfg.synth_params())?;
    for p in [&cfg.input.bills, &cfg.input.legislators, &cfg.input.constituencies] {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    write_bills(&cfg.input.bills, &corpus.bills)?;
    write_legislators(&cfg.input.legislators, &corpus.legislators)?;
    write_constituencies(&cfg.input.constituencies, &corpus.constituencies)?;
    let labels = cfg.input.bills.with_file_name("transport_labels.csv");
    let mut t = Table::new(["bill_id", "transport"]);
    for (b, l) in corpus.bills.iter().zip(&corpus.transport_labels) {
        t.push([b.bill_id.clone(), u8::from(*l).to_string()]);
    }
    t.write(&labels).map_err(|e| CliError::io(&labels, e))?;
    Ok(labels)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitRecord {
    seed: u64,
    test_fraction: f64,
    #[serde(flatten)]
    split: TrainTestSplit,
}

#[derive(Debug, Clone, Default, Serialize)]
struct LossTrace {
    train: Vec<f64>,
    validation: Vec<f64>,
}

impl LossTrace {
    fn of(model: &Model) -> Self {
        match model {
            Model::Trees(e) => Self { train: e.train_loss.clone(), validation: Vec::new() },
            Model::Mlp { net, .. } => Self { train: net.train_loss.clone(), validation: net.val_loss.clone() },
        }
    }

    fn to_table(&self) -> Option<Table> {
        if self.train.is_empty() {
            return None;
        }
        let mut t = Table::new(["step", "train_loss", "validation_loss"]);
        for (i, l) in self.train.iter().enumerate() {
            t.push([i.to_string(), fmt_f64(*l), self.validation.get(i).map_or_else(String::new, |v| fmt_f64(*v))]);
        }
        Some(t)
    }
}

struct ModelResult {
    label: String,
    cv: CvResult,
    best: TrainConfig,
    test_confusion: ConfusionMatrix,
    runs: RunAggregate,
    loss: LossTrace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub precision: String,
    pub recall: String,
    pub f1: String,
    pub f1_mean: f64,
}

impl MetricRow {
    fn of(r: &ModelResult) -> Self {
        let a = &r.runs.aggregate;
        Self {
            model: r.label.clone(),
            precision: a.precision.display(),
            recall: a.recall.display(),
            f1: a.f1.display(),
            f1_mean: a.f1.mean,
        }
    }
}

#[derive(Serialize)]
struct ModelSummary {
    label: String,
    selected_config: TrainConfig,
    cv_mean_f1: Vec<f64>,
    fold_assignments: Vec<usize>,
    run_seeds: Vec<u64>,
    loss: LossTrace,
}

impl ModelSummary {
    fn of(r: &ModelResult) -> Self {
        Self {
            label: r.label.clone(),
            selected_config: r.best.clone(),
            cv_mean_f1: r.cv.scores.iter().map(|s| s.mean_f1).collect(),
            fold_assignments: r.cv.folds.clone(),
            run_seeds: r.runs.seeds(),
            loss: r.loss.clone(),
        }
    }
}

#[derive(Serialize)]
struct TrainManifest {
    seeds: crate::config::Seeds,
    test_fraction: f64,
    cv_folds: usize,
    n_runs: usize,
    models: Vec<ModelSummary>,
    metrics: Vec<MetricRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExplainSummary {
    model: String,
    n_rows: usize,
    base_value: f64,
    max_local_accuracy_error: f64,
    top_features: Vec<String>,
}

#[derive(Serialize)]
struct RunReport {
    funnel: serde_json::Value,
    metrics: serde_json::Value,
    explain: serde_json::Value,
    outputs: BTreeMap<String, BTreeMap<String, String>>,
}

fn cv_table(results: &[ModelResult]) -> Table {
    let mut t = Table::new(["model", "config_index", "fold", "f1", "mean_f1", "selected"]);
    for r in results {
        for (c, s) in r.cv.scores.iter().enumerate() {
            for (f, v) in s.fold_f1.iter().enumerate() {
                t.push([
                    r.label.clone(),
                    c.to_string(),
                    f.to_string(),
                    fmt_opt(*v),
                    fmt_f64(s.mean_f1),
                    (c == r.cv.selected).to_string(),
                ]);
            }
        }
    }
    t
}

fn metrics_table(results: &[ModelResult]) -> Table {
    let mut t = Table::new(["model", "precision", "recall", "f1"]);
    for r in results {
        let m = MetricRow::of(r);
        t.push([m.model, m.precision, m.recall, m.f1]);
    }
    t
}

fn confusion_row(cm: &ConfusionMatrix) -> [String; 7] {
    let rep = cm.report();
    [
        cm.tp.to_string(),
        cm.fp.to_string(),
        cm.fn_.to_string(),
        cm.tn.to_string(),
        fmt_opt(rep.precision),
        fmt_opt(rep.recall),
        fmt_opt(rep.f1),
    ]
}

fn confusion_table(results: &[ModelResult]) -> Table {
    let mut t = Table::new(["model", "tp", "fp", "fn", "tn", "precision", "recall", "f1"]);
    for r in results {
        let mut row = vec![r.label.clone()];
        row.extend(confusion_row(&r.test_confusion));
        t.push(row);
    }
    t
}

fn runs_table(results: &[ModelResult]) -> Table {
    let mut t = Table::new(["model", "seed", "tp", "fp", "fn", "tn", "precision", "recall", "f1"]);
    for r in results {
        for run in &r.runs.runs {
            let mut row = vec![r.label.clone(), run.seed.to_string()];
            row.extend(confusion_row(&run.confusion));
            t.push(row);
        }
    }
    t
}

/// Grid configuration labels in the order the train command reports them.
pub fn grid_labels(cfg: &RunConfig) -> Vec<&'static str> {
    let mut out: Vec<&'static str> = Vec::new();
    for c in &cfg.train.grid {
        if !out.contains(&c.label()) {
            out.push(c.label());
        }
    }
    out
}
