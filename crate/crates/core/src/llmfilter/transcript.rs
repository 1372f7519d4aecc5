//! Append-only JSONL transcript of provider exchanges, and replay from it.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::provider::{CompletionProvider, CompletionRequest, ProviderError};
use super::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub request_hash: String,
    pub request: CompletionRequest,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub struct TranscriptWriter {
    path: PathBuf,
    file: Mutex<File>,
}

impl TranscriptWriter {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LlmError::Transcript { path: path.display().to_string(), message: e.to_string() })?;
        Ok(Self { path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one record as a single line; concurrent callers are serialized.
    pub fn append(&self, record: &TranscriptRecord) -> std::io::Result<()> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        let mut f = self.file.lock().expect("transcript lock");
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, LlmError> {
    let err = |m: String| LlmError::Transcript { path: path.display().to_string(), message: m };
    let f = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Records every successful response before handing it back.
pub struct RecordingProvider<P> {
    inner: P,
    writer: TranscriptWriter,
}

impl<P: CompletionProvider> RecordingProvider<P> {
    pub fn new(inner: P, writer: TranscriptWriter) -> Self {
        Self { inner, writer }
    }
}

impl<P: CompletionProvider> CompletionProvider for RecordingProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let response = self.inner.complete(request)?;
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let record = TranscriptRecord {
            request_hash: request.hash(),
            request: request.clone(),
            response: response.clone(),
            timestamp,
        };
        self.writer
            .append(&record)
            .map_err(|e| ProviderError::fatal(format!("cannot append to {}: {e}", self.writer.path().display())))?;
        Ok(response)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

/// Answers from a transcript; a request not in the transcript is a fatal error.
pub struct ReplayProvider {
    responses: HashMap<String, String>,
}

impl ReplayProvider {
    /// Later records for the same request replace earlier ones.
    pub fn from_records(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        Self { responses: records.into_iter().map(|r| (r.request_hash, r.response)).collect() }
    }

    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::from_records(read_transcript(path)?))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl CompletionProvider for ReplayProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let h = request.hash();
        self.responses
            .get(&h)
            .cloned()
            .ok_or_else(|| ProviderError::fatal(format!("replay cache miss for request {h}")))
    }

    fn name(&self) -> &str {
        "replay"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmfilter::provider::{FnProvider, RequestParams};

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let upstream = FnProvider::new("up", |r: &CompletionRequest| Ok(format!("echo {}", r.prompt)));
        let rec = RecordingProvider::new(upstream, TranscriptWriter::open(&path).unwrap());
        let params = RequestParams::default();
        let a = rec.complete(&params.request("a".into())).unwrap();
        rec.complete(&params.request("b".into())).unwrap();
        let records = read_transcript(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].request_hash, params.request("a".into()).hash());
        let replay = ReplayProvider::open(&path).unwrap();
        assert_eq!(replay.complete(&params.request("a".into())).unwrap(), a);
        let miss = replay.complete(&params.request("c".into())).unwrap_err();
        assert!(!miss.retryable);
    }

    #[test]
    fn concurrent_appends_stay_line_delimited() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let rec = RecordingProvider::new(
            FnProvider::new("up", |r: &CompletionRequest| Ok(r.prompt.repeat(50))),
            TranscriptWriter::open(&path).unwrap(),
        );
        let prompts: Vec<String> = (0..64).map(|i| format!("p{i}")).collect();
        crate::llmfilter::provider::parallel_map(&prompts, 8, |p| {
            rec.complete(&RequestParams::default().request(p.clone())).unwrap()
        });
        assert_eq!(read_transcript(&path).unwrap().len(), 64);
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(ReplayProvider::open(&path), Err(LlmError::Transcript { .. })));
    }
}
