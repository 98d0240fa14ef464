//! Chat-completions client with retries, usage accounting, a replay cache and
//! the prompt templates.

mod cache;
mod decide;
mod templates;
mod transport;

pub use cache::{request_key, CacheMode, ReplayCache};
pub use decide::{classify_llm, parse_decision, LlmClassifier, LlmPolicy};
pub use templates::{decision_bindings, persona_bindings, render_template, template_placeholders, TemplateId};
pub use transport::{HttpTransport, Transport, TransportError};

use std::collections::BTreeMap;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_API_KEY_ENV: &str = "PEBA_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResponseFormat {
    Json,
    #[default]
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default)]
    pub format: ResponseFormat,
}

impl ChatRequest {
    /// Wire body in the common chat-completions shape.
    pub fn body(&self) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": self.user},
            ],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        });
        if self.format == ResponseFormat::Json {
            body["response_format"] = serde_json::json!({"type": "json_object"});
        }
        body
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub model: String,
    pub latency_ms: u64,
    #[serde(default = "one")]
    pub attempts: u32,
}

fn one() -> u32 {
    1
}

/// USD per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Price {
    pub prompt: f64,
    pub completion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    pub inflight_limit: usize,
    pub timeout_s: f64,
    pub max_attempts: u32,
    pub backoff_base_s: f64,
    pub backoff_factor: f64,
    pub max_tokens: u32,
    pub prices: BTreeMap<String, Price>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            inflight_limit: 8,
            timeout_s: 60.0,
            max_attempts: 5,
            backoff_base_s: 1.0,
            backoff_factor: 2.0,
            max_tokens: 1024,
            prices: BTreeMap::from([(
                "gpt-4o-mini".to_string(),
                Price {
                    prompt: 0.15,
                    completion: 0.60,
                },
            )]),
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inflight_limit == 0 {
            return Err(Error::GatewayConfig("inflight_limit must be at least 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::GatewayConfig("max_attempts must be at least 1".into()));
        }
        if !(self.timeout_s > 0.0) || self.backoff_base_s < 0.0 || self.backoff_factor < 1.0 {
            return Err(Error::GatewayConfig("timeout/backoff settings out of range".into()));
        }
        if self.model.trim().is_empty() {
            return Err(Error::GatewayConfig("empty model id".into()));
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_base_s * self.backoff_factor.powi(retry as i32 - 1))
    }

    /// Credential from the configured environment variable.
    pub fn api_key(&self) -> Result<String> {
        match std::env::var(&self.api_key_env) {
            Ok(k) if !k.trim().is_empty() => Ok(k),
            _ => Err(Error::GatewayConfig(format!("credential not set: ${}", self.api_key_env))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageEntry {
    pub model: String,
    pub purpose: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    #[serde(default)]
    pub replayed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UsageTotals {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl UsageTotals {
    pub fn add(&mut self, other: &UsageTotals) {
        self.calls += other.calls;
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<UsageEntry>,
}

impl CostLedger {
    pub fn record(&mut self, entry: UsageEntry) {
        self.entries.push(entry);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn totals(&self) -> UsageTotals {
        totals_of(&self.entries)
    }

    pub fn cost(&self, prices: &BTreeMap<String, Price>) -> Result<f64> {
        self.entries.iter().try_fold(0.0, |acc, e| Ok(acc + entry_cost(e, prices)?))
    }
}

pub fn totals_of(entries: &[UsageEntry]) -> UsageTotals {
    let mut t = UsageTotals::default();
    for e in entries {
        t.calls += 1;
        t.prompt_tokens += e.prompt_tokens;
        t.completion_tokens += e.completion_tokens;
    }
    t
}

pub fn entry_cost(e: &UsageEntry, prices: &BTreeMap<String, Price>) -> Result<f64> {
    let p = prices.get(&e.model).ok_or_else(|| Error::MissingPrice(e.model.clone()))?;
    Ok((e.prompt_tokens as f64 * p.prompt + e.completion_tokens as f64 * p.completion) / 1e6)
}

/// Counting semaphore bounding in-flight requests.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct Gateway {
    config: GatewayConfig,
    api_key: String,
    transport: Box<dyn Transport>,
    cache: Option<ReplayCache>,
    ledger: Mutex<CostLedger>,
    slots: Slots,
    sleeper: Sleeper,
}

impl Gateway {
    pub fn new(config: GatewayConfig, api_key: impl Into<String>, transport: Box<dyn Transport>) -> Result<Self> {
        config.validate()?;
        let slots = Slots {
            free: Mutex::new(config.inflight_limit),
            cv: Condvar::new(),
        };
        Ok(Self {
            config,
            api_key: api_key.into(),
            transport,
            cache: None,
            ledger: Mutex::new(CostLedger::default()),
            slots,
            sleeper: Box::new(std::thread::sleep),
        })
    }

    /// HTTP gateway using the credential from the environment.
    pub fn from_env(config: GatewayConfig) -> Result<Self> {
        let key = config.api_key()?;
        let transport = HttpTransport::new(Duration::from_secs_f64(config.timeout_s))?;
        Self::new(config, key, Box::new(transport))
    }

    /// Gateway answering only from a replay file; no credential needed.
    pub fn replay_only(config: GatewayConfig, cache: ReplayCache) -> Result<Self> {
        let gw = Self::new(config, "", Box::new(transport::Offline))?;
        Ok(gw.with_cache(cache))
    }

    pub fn with_cache(mut self, cache: ReplayCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn cache(&self) -> Option<&ReplayCache> {
        self.cache.as_ref()
    }

    pub fn ledger(&self) -> CostLedger {
        self.ledger.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Entries recorded so far; pass to `ledger_since` to slice later calls.
    pub fn ledger_len(&self) -> usize {
        self.ledger.lock().unwrap_or_else(|e| e.into_inner()).entries.len()
    }

    pub fn ledger_since(&self, start: usize) -> Vec<UsageEntry> {
        let l = self.ledger.lock().unwrap_or_else(|e| e.into_inner());
        l.entries.get(start..).map(<[_]>::to_vec).unwrap_or_default()
    }

    /// Request with the configured model and token budget.
    pub fn request(&self, system: String, user: String, temperature: f64, format: ResponseFormat) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            system,
            user,
            temperature,
            max_tokens: self.config.max_tokens,
            format,
        }
    }

    pub fn chat(&self, request: &ChatRequest, purpose: &str) -> Result<ChatResponse> {
        let key = request_key(request);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lookup(&key) {
                self.record(request, &hit, purpose, true);
                return Ok(hit);
            }
            if cache.mode() == CacheMode::Replay {
                return Err(Error::ReplayMiss(key));
            }
        }
        let response = {
            let _slot = self.slots.acquire();
            self.send_with_retries(request)?
        };
        self.record(request, &response, purpose, false);
        if let Some(cache) = &self.cache {
            cache.store(&key, &response)?;
        }
        Ok(response)
    }

    fn record(&self, request: &ChatRequest, response: &ChatResponse, purpose: &str, replayed: bool) {
        let entry = UsageEntry {
            model: request.model.clone(),
            purpose: purpose.to_string(),
            prompt_tokens: response.prompt_tokens,
            completion_tokens: response.completion_tokens,
            replayed,
        };
        self.ledger.lock().unwrap_or_else(|e| e.into_inner()).record(entry);
    }

    fn send_with_retries(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = request.body();
        let mut last_status = None;
        let mut last_message = String::new();
        for attempt in 1..=self.config.max_attempts {
            if attempt > 1 {
                (self.sleeper)(self.config.backoff(attempt - 1));
            }
            let started = Instant::now();
            match self.transport.post(&url, &self.api_key, &body) {
                Ok((status, text)) if (200..300).contains(&status) => {
                    let mut resp = parse_completion(&text, &request.model)?;
                    resp.latency_ms = started.elapsed().as_millis() as u64;
                    resp.attempts = attempt;
                    if attempt > 1 {
                        log::info!("chat succeeded after {attempt} attempts");
                    }
                    return Ok(resp);
                }
                Ok((status, text)) => {
                    last_status = Some(status);
                    last_message = text;
                    if status != 429 && status < 500 {
                        return Err(Error::ChatFailed {
                            attempts: attempt,
                            status: last_status,
                            message: last_message,
                        });
                    }
                    log::warn!("chat attempt {attempt} got status {status}");
                }
                Err(TransportError::Timeout(m)) | Err(TransportError::Connect(m)) => {
                    log::warn!("chat attempt {attempt} failed: {m}");
                    last_message = m;
                }
                Err(TransportError::Fatal(m)) => {
                    return Err(Error::ChatFailed {
                        attempts: attempt,
                        status: None,
                        message: m,
                    })
                }
            }
        }
        Err(Error::ChatFailed {
            attempts: self.config.max_attempts,
            status: last_status,
            message: last_message,
        })
    }
}

fn parse_completion(text: &str, model: &str) -> Result<ChatResponse> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("completion body: {e}")))?;
    let content = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| Error::Parse("completion has no choices[0].message.content".into()))?;
    Ok(ChatResponse {
        content: content.to_string(),
        prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        model: v["model"].as_str().unwrap_or(model).to_string(),
        latency_ms: 0,
        attempts: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Scripted {
        replies: Mutex<Vec<std::result::Result<(u16, String), TransportError>>>,
        calls: Arc<AtomicUsize>,
    }

    impl Transport for Scripted {
        fn post(&self, _url: &str, _key: &str, _body: &serde_json::Value) -> std::result::Result<(u16, String), TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn ok_body(content: &str) -> String {
        serde_json::json!({
            "model": "m",
            "choices": [{"message": {"role": "assistant", "content": content}}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 3}
        })
        .to_string()
    }

    fn gateway(replies: Vec<std::result::Result<(u16, String), TransportError>>) -> (Gateway, Arc<AtomicUsize>, Arc<Mutex<Vec<Duration>>>) {
        let calls = Arc::new(AtomicUsize::new(0));
        let slept = Arc::new(Mutex::new(Vec::new()));
        let s2 = slept.clone();
        let config = GatewayConfig {
            model: "m".into(),
            ..GatewayConfig::default()
        };
        let gw = Gateway::new(
            config,
            "k",
            Box::new(Scripted {
                replies: Mutex::new(replies),
                calls: calls.clone(),
            }),
        )
        .unwrap()
        .with_sleeper(move |d| s2.lock().unwrap().push(d));
        (gw, calls, slept)
    }

    fn req(gw: &Gateway) -> ChatRequest {
        gw.request("sys".into(), "user".into(), 0.0, ResponseFormat::Text)
    }

    #[test]
    fn retries_429_with_doubling_backoff() {
        let (gw, calls, slept) = gateway(vec![Ok((429, "slow".into())), Ok((429, "slow".into())), Ok((200, ok_body("hi")))]);
        let r = gw.chat(&req(&gw), "test").unwrap();
        assert_eq!(r.content, "hi");
        assert_eq!(r.attempts, 3);
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(*slept.lock().unwrap(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn exhausted_retries_carry_last_status() {
        let (gw, calls, _) = gateway((0..5).map(|_| Ok((503, "down".into()))).collect());
        match gw.chat(&req(&gw), "test") {
            Err(Error::ChatFailed { attempts, status, .. }) => {
                assert_eq!(attempts, 5);
                assert_eq!(status, Some(503));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(calls.load(Ordering::SeqCst), 5);
        assert!(gw.ledger().is_empty());
    }

    #[test]
    fn client_error_is_not_retried_and_surfaces_body() {
        let (gw, calls, _) = gateway(vec![Ok((400, "max_tokens must be positive".into()))]);
        let err = gw.chat(&req(&gw), "test").unwrap_err();
        assert!(err.to_string().contains("max_tokens must be positive"));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn timeouts_are_retried() {
        let (gw, _, _) = gateway(vec![Err(TransportError::Timeout("t".into())), Ok((200, ok_body("x")))]);
        assert_eq!(gw.chat(&req(&gw), "test").unwrap().attempts, 2);
    }

    #[test]
    fn ledger_sums_usage() {
        let (gw, _, _) = gateway(vec![Ok((200, ok_body("a"))), Ok((200, ok_body("b")))]);
        gw.chat(&req(&gw), "x").unwrap();
        gw.chat(&req(&gw), "y").unwrap();
        let t = gw.ledger().totals();
        assert_eq!((t.calls, t.prompt_tokens, t.completion_tokens), (2, 24, 6));
        assert_eq!(gw.ledger_since(1).len(), 1);
    }

    #[test]
    fn cost_needs_price_entry() {
        let mut ledger = CostLedger::default();
        ledger.record(UsageEntry {
            model: "m".into(),
            purpose: "p".into(),
            prompt_tokens: 1_000_000,
            completion_tokens: 10_000,
            replayed: false,
        });
        let prices = BTreeMap::from([("m".to_string(), Price { prompt: 2.5, completion: 10.0 })]);
        assert!((ledger.cost(&prices).unwrap() - 2.6).abs() < 1e-12);
        assert!(matches!(ledger.cost(&BTreeMap::new()), Err(Error::MissingPrice(_))));
    }

    #[test]
    fn json_format_sets_response_format() {
        let r = ChatRequest {
            model: "m".into(),
            system: "s".into(),
            user: "u".into(),
            temperature: 1.0,
            max_tokens: 5,
            format: ResponseFormat::Json,
        };
        assert_eq!(r.body()["response_format"]["type"], "json_object");
        assert_eq!(r.body()["messages"][1]["content"], "u");
    }

    #[test]
    fn config_validation() {
        assert!(GatewayConfig { inflight_limit: 0, ..Default::default() }.validate().is_err());
        assert!(GatewayConfig { max_attempts: 0, ..Default::default() }.validate().is_err());
        assert!(GatewayConfig::default().validate().is_ok());
    }

    #[test]
    fn missing_credential_is_config_error() {
        let cfg = GatewayConfig {
            api_key_env: "PEBA_TEST_SURELY_UNSET_KEY".into(),
            ..Default::default()
        };
        assert!(matches!(Gateway::from_env(cfg), Err(Error::GatewayConfig(_))));
    }
}
