//! Completion requests, the provider interface and bounded retries.

use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
}

/// Sampling parameters shared by every request of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
}

impl Default for RequestParams {
    fn default() -> Self {
        Self { temperature: 0.2, max_tokens: 256, top_p: 1.0 }
    }
}

impl RequestParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be at least 1".into());
        }
        Ok(())
    }

    pub fn request(&self, prompt: String) -> CompletionRequest {
        CompletionRequest { prompt, temperature: self.temperature, max_tokens: self.max_tokens, top_p: self.top_p }
    }
}

impl CompletionRequest {
    /// Hex SHA-256 of the request's JSON form; the transcript cache key.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("request serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ProviderError {
    pub message: String,
    /// False for failures that repeating the request cannot fix, such as a replay miss.
    pub retryable: bool,
}

impl ProviderError {
    pub fn retryable(message: impl Into<String>) -> Self {
        Self { message: message.into(), retryable: true }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        Self { message: message.into(), retryable: false }
    }
}

pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;

    fn name(&self) -> &str;
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Box<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Provider backed by a closure, for scripted fixtures.
pub struct FnProvider<F> {
    name: String,
    f: F,
}

impl<F> FnProvider<F>
where
    F: Fn(&CompletionRequest) -> Result<String, ProviderError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> CompletionProvider for FnProvider<F>
where
    F: Fn(&CompletionRequest) -> Result<String, ProviderError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        (self.f)(request)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    /// Delay before the second attempt; doubles for each later attempt.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        Self { base_delay: Duration::ZERO, ..Self::default() }
    }

    pub fn delay_before(&self, attempt: usize) -> Duration {
        if attempt <= 1 {
            Duration::ZERO
        } else {
            self.base_delay.saturating_mul(1 << (attempt - 2).min(16))
        }
    }
}

/// Why the last attempt of a request failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Provider(ProviderError),
    Parse { response: String, reason: String },
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Provider(e) => write!(f, "provider error: {e}"),
            Failure::Parse { response, reason } => write!(f, "unparseable response ({reason}): {response:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exhausted {
    pub attempts: usize,
    pub last: Failure,
}

/// Sends `request` until `parse` accepts a response, up to the policy's attempt limit.
pub fn complete_with_retry<T>(
    provider: &dyn CompletionProvider,
    request: &CompletionRequest,
    policy: &RetryPolicy,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, Exhausted> {
    let max = policy.max_attempts.max(1);
    let mut last = None;
    for attempt in 1..=max {
        let wait = policy.delay_before(attempt);
        if !wait.is_zero() {
            thread::sleep(wait);
        }
        match provider.complete(request) {
            Ok(text) => match parse(&text) {
                Ok(v) => return Ok(v),
                Err(reason) => last = Some(Failure::Parse { response: text, reason }),
            },
            Err(e) => {
                let fatal = !e.retryable;
                last = Some(Failure::Provider(e));
                if fatal {
                    return Err(Exhausted { attempts: attempt, last: last.expect("just set") });
                }
            }
        }
        log::debug!("{}: attempt {attempt}/{max} failed", provider.name());
    }
    Err(Exhausted { attempts: max, last: last.expect("at least one attempt") })
}

/// Applies `f` to every item with at most `limit` concurrent workers; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], limit: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = limit.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn request_defaults_and_validation() {
        let p = RequestParams::default();
        assert_eq!((p.temperature, p.max_tokens, p.top_p), (0.2, 256, 1.0));
        assert!(p.validate().is_ok());
        assert!(RequestParams { top_p: 0.0, ..p }.validate().is_err());
        assert!(RequestParams { temperature: 2.5, ..p }.validate().is_err());
        assert!(RequestParams { max_tokens: 0, ..p }.validate().is_err());
    }

    #[test]
    fn hash_depends_on_every_field() {
        let a = RequestParams::default().request("x".into());
        let b = CompletionRequest { temperature: 0.3, ..a.clone() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn backoff_doubles_from_base() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay_before(1), Duration::ZERO);
        assert_eq!(p.delay_before(2), Duration::from_secs(1));
        assert_eq!(p.delay_before(3), Duration::from_secs(2));
    }

    #[test]
    fn retries_until_parse_succeeds() {
        let calls = AtomicUsize::new(0);
        let p = FnProvider::new("flaky", |_: &CompletionRequest| {
            let n = calls.fetch_add(1, Ordering::SeqCst);
            Ok(if n < 2 { "garbage".to_string() } else { "42".to_string() })
        });
        let req = RequestParams::default().request("q".into());
        let v =
            complete_with_retry(&p, &req, &RetryPolicy::no_delay(), |s| s.parse::<u32>().map_err(|e| e.to_string()));
        assert_eq!(v, Ok(42));
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_attempts_and_on_fatal_errors() {
        let p = FnProvider::new("bad", |_: &CompletionRequest| Ok("nope".to_string()));
        let req = RequestParams::default().request("q".into());
        let e =
            complete_with_retry(&p, &req, &RetryPolicy::no_delay(), |s| s.parse::<u32>().map_err(|e| e.to_string()))
                .unwrap_err();
        assert_eq!(e.attempts, 3);
        assert!(matches!(e.last, Failure::Parse { ref response, .. } if response == "nope"));

        let calls = AtomicUsize::new(0);
        let p = FnProvider::new("miss", |_: &CompletionRequest| {
            calls.fetch_add(1, Ordering::SeqCst);
            Err(ProviderError::fatal("cache miss"))
        });
        let e = complete_with_retry(&p, &req, &RetryPolicy::no_delay(), |s| Ok(s.to_string())).unwrap_err();
        assert_eq!((e.attempts, calls.load(Ordering::SeqCst)), (1, 1));
    }

    #[test]
    fn parallel_map_preserves_order() {
        let items: Vec<usize> = (0..100).collect();
        let out = parallel_map(&items, 8, |&i| {
            if i % 7 == 0 {
                thread::sleep(Duration::from_millis(1));
            }
            i * 2
        });
        assert_eq!(out, items.iter().map(|i| i * 2).collect::<Vec<_>>());
        assert!(parallel_map(&[] as &[u8], 4, |&b| b).is_empty());
    }
}
