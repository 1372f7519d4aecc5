use std::path::{Path, PathBuf};
use std::time::Duration;

use legis_cli::config::ProviderMode;
use legis_cli::workspace::MANIFEST_FILE;
use legis_cli::{synthesize, CliError, Command, RunConfig, Runner, Status};
use legis_core::corpus::load_bills;
use legis_core::llmfilter::{
    run_pipeline, FilterContext, PipelineOptions, PromptSet, RecordingProvider, RequestParams, RetryPolicy, RuleMock,
    TranscriptWriter,
};
use legis_core::models::TrainConfig;

fn corpus(dir: &Path, n_bills: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.input.bills = dir.join("data/bills.csv");
    cfg.input.legislators = dir.join("data/legislators.csv");
    cfg.input.constituencies = dir.join("data/constituencies.csv");
    cfg.synth.n_bills = n_bills;
    synthesize(&cfg).unwrap();
    cfg
}

fn small_grid(cfg: &mut RunConfig) {
    cfg.train.cv_folds = 3;
    cfg.train.n_runs = 2;
    cfg.train.grid = vec![
        TrainConfig { max_epochs: 5, patience: 2, hidden_units: 4, ..TrainConfig::mlp() },
        TrainConfig { n_estimators: 10, ..TrainConfig::rf() },
        TrainConfig { n_estimators: 10, ..TrainConfig::gbdt_leaf_wise() },
        TrainConfig { n_estimators: 10, ..TrainConfig::gbdt_level_wise() },
    ];
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn full_run_writes_every_stage_and_rerun_hits_the_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = corpus(tmp.path(), 80);
    small_grid(&mut cfg);
    let out = tmp.path().join("out");
    let mut runner = Runner::new(cfg.clone(), out.clone(), true).unwrap();
    assert!(runner.run_all().unwrap().iter().all(|s| *s == Status::Ran));
    drop(runner);

    let metrics = read(out.join("train/metrics.csv"));
    assert_eq!(metrics.lines().count(), 5, "{metrics}");
    for label in ["mlp", "rf", "gbdt-leafwise", "gbdt-levelwise"] {
        assert!(metrics.contains(label));
        assert!(out.join(format!("train/model_{label}.txt")).exists());
    }
    assert!(read(out.join("explain/importance.csv")).starts_with("rank,feature"));
    assert!(out.join("report/run_manifest.json").exists());

    let manifest = read(out.join(MANIFEST_FILE));
    let mut runner = Runner::new(cfg.clone(), out.clone(), true).unwrap();
    assert!(runner.run_all().unwrap().iter().all(|s| *s == Status::CacheHit));
    drop(runner);

    std::fs::remove_dir_all(out.join("explain")).unwrap();
    let mut runner = Runner::new(cfg, out.clone(), true).unwrap();
    let statuses = runner.run_all().unwrap();
    assert_eq!(statuses[..4], [Status::CacheHit; 4]);
    assert_eq!(statuses[4], Status::Ran);
    drop(runner);
    assert_eq!(read(out.join(MANIFEST_FILE)), manifest);
}

#[test]
fn commands_refuse_to_run_without_their_predecessor() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path(), 30);
    let mut runner = Runner::new(cfg, tmp.path().join("out"), true).unwrap();
    for c in [Command::Filter, Command::Features, Command::Train, Command::Explain, Command::Report] {
        match runner.run(c) {
            Err(e @ CliError::MissingPredecessor { .. }) => assert_eq!(e.exit_code(), 3),
            other => panic!("{}: {other:?}", c.as_str()),
        }
    }
}

#[test]
fn tampered_outputs_invalidate_downstream_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path(), 30);
    let out = tmp.path().join("out");
    let mut runner = Runner::new(cfg.clone(), out.clone(), true).unwrap();
    runner.run(Command::Ingest).unwrap();
    runner.run(Command::Filter).unwrap();
    drop(runner);

    let manifest: serde_json::Value = serde_json::from_str(&read(out.join(MANIFEST_FILE))).unwrap();
    assert!(manifest["commands"]["filter"]["outputs"]["filter/funnel.json"].is_string());

    std::fs::write(out.join("ingest/bills.csv"), "bill_id\n").unwrap();
    let mut runner = Runner::new(cfg, out, true).unwrap();
    match runner.run(Command::Filter) {
        Err(CliError::MissingPredecessor { reason, .. }) => assert!(reason.contains("bills.csv")),
        other => panic!("{other:?}"),
    }
    assert_eq!(runner.run(Command::Ingest).unwrap(), Status::Ran);
    assert_eq!(runner.run(Command::Filter).unwrap(), Status::CacheHit);
}

#[test]
fn replayed_transcript_reproduces_the_mock_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corpus(tmp.path(), 40);
    let mock_out = tmp.path().join("mock");
    let mut runner = Runner::new(cfg.clone(), mock_out.clone(), true).unwrap();
    runner.run(Command::Ingest).unwrap();
    runner.run(Command::Filter).unwrap();
    drop(runner);

    let transcript = tmp.path().join("transcript.jsonl");
    let bills = load_bills(mock_out.join("ingest/bills.csv")).unwrap();
    let recorder =
        RecordingProvider::new(RuleMock::new(PromptSet::default()), TranscriptWriter::open(&transcript).unwrap());
    let p = &cfg.provider;
    let ctx = FilterContext {
        params: RequestParams { temperature: p.temperature, max_tokens: p.max_tokens, top_p: p.top_p },
        retry: RetryPolicy { max_attempts: 1, base_delay: Duration::ZERO },
        ..FilterContext::new(&recorder)
    };
    run_pipeline(&bills, &ctx, &PipelineOptions::default()).unwrap();

    let mut replay = cfg.clone();
    replay.provider.mode = ProviderMode::Replay;
    replay.provider.transcript = Some(transcript);
    let replay_out = tmp.path().join("replay");
    let mut runner = Runner::new(replay, replay_out.clone(), true).unwrap();
    runner.run(Command::Ingest).unwrap();
    assert_eq!(runner.run(Command::Filter).unwrap(), Status::Ran);
    assert_eq!(runner.run(Command::Filter).unwrap(), Status::CacheHit);
    for name in ["transport_bills.csv", "stages.json", "funnel.json", "lexicon.csv", "audit_context.csv"] {
        assert_eq!(read(mock_out.join("filter").join(name)), read(replay_out.join("filter").join(name)), "{name}");
    }
}

#[test]
fn replay_without_a_transcript_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = corpus(tmp.path(), 20);
    cfg.provider.mode = ProviderMode::Replay;
    let mut runner = Runner::new(cfg, tmp.path().join("out"), true).unwrap();
    runner.run(Command::Ingest).unwrap();
    match runner.run(Command::Filter) {
        Err(CliError::Config(m)) => assert!(m.contains("transcript")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn offline_remote_runs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.provider.mode = ProviderMode::Remote;
    assert!(matches!(Runner::new(cfg, tmp.path().join("out"), true), Err(CliError::Config(_))));
}

#[test]
fn second_runner_on_the_same_directory_is_locked_out() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let _held = Runner::new(RunConfig::default(), out.clone(), true).unwrap();
    match Runner::new(RunConfig::default(), out, true) {
        Err(e @ CliError::Locked(_)) => assert_eq!(e.exit_code(), 4),
        other => panic!("{:?}", other.err()),
    }
}
