use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    /// Retryable.
    Timeout(String),
    /// Retryable.
    Connect(String),
    Fatal(String),
}

/// One POST of a JSON body; returns the status code and raw response text.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, api_key: &str, body: &serde_json::Value) -> std::result::Result<(u16, String), TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::GatewayConfig(format!("http client: {e}")))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, api_key: &str, body: &serde_json::Value) -> std::result::Result<(u16, String), TransportError> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportError::Timeout(e.to_string())
                } else if e.is_connect() || e.is_request() {
                    TransportError::Connect(e.to_string())
                } else {
                    TransportError::Fatal(e.to_string())
                }
            })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| TransportError::Timeout(e.to_string()))?;
        Ok((status, text))
    }
}

/// Refuses every request; used behind a replay-only cache.
pub(crate) struct Offline;

impl Transport for Offline {
    fn post(&self, url: &str, _api_key: &str, _body: &serde_json::Value) -> std::result::Result<(u16, String), TransportError> {
        Err(TransportError::Fatal(format!("offline gateway cannot reach {url}")))
    }
}
