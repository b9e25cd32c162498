//! HTTP client for the inference sidecar.
//!
//! Wire protocol:
//!
//! - `POST /nli`: `{"pairs": [{"premise", "hypothesis"}]}` ->
//!   `{"results": [{"entailment", "contradiction", "neutral"}]}`
//! - `POST /embed`: `{"texts": [..]}` -> `{"vectors": [[..]]}`
//! - `GET /info`: `{"nli_model", "embed_model", "embed_dim"}`
//! - `GET /health`: status 200
//!
//! Errors come back with status >= 400 and `{"error": message}`.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::nli::{NliDistribution, NliRequest, NliScorer};

#[derive(Debug, Serialize)]
struct NliBody<'a> {
    pairs: &'a [NliRequest],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NliResponse {
    results: Vec<NliDistribution>,
}

#[derive(Debug, Serialize)]
struct EmbedBody<'a> {
    texts: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct ErrorResponse {
    error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarInfo {
    pub nli_model: String,
    pub embed_model: String,
    pub embed_dim: usize,
}

#[derive(Debug, Clone)]
pub struct SidecarClient {
    base_url: String,
    agent: ureq::Agent,
    max_attempts: u32,
    backoff: Duration,
}

impl SidecarClient {
    pub const DEFAULT_ATTEMPTS: u32 = 3;

    pub fn new(endpoint: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build();
        Self {
            base_url: endpoint.trim_end_matches('/').to_string(),
            agent: config.into(),
            max_attempts: Self::DEFAULT_ATTEMPTS,
            backoff: Duration::from_millis(100),
        }
    }

    /// Initial delay between attempts; it doubles after every failure.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.base_url
    }

    /// Sends a request, retrying transport failures with exponential backoff.
    /// Returns the status code and the raw body.
    fn send(&self, path: &str, body: Option<&serde_json::Value>) -> Result<(u16, String)> {
        let url = format!("{}{}", self.base_url, path);
        let mut delay = self.backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.max_attempts {
            let result = match body {
                Some(b) => self.agent.post(&url).send_json(b),
                None => self.agent.get(&url).call(),
            };
            match result {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| Error::Protocol(format!("unreadable body: {e}")))?;
                    return Ok((status, text));
                }
                Err(e) => {
                    last_error = e.to_string();
                    if attempt < self.max_attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(Error::Transport { attempts: self.max_attempts, message: last_error })
    }

    fn call<T: DeserializeOwned>(&self, path: &str, body: Option<serde_json::Value>) -> Result<T> {
        let (status, text) = self.send(path, body.as_ref())?;
        if status >= 400 {
            let message = serde_json::from_str::<ErrorResponse>(&text)
                .map(|e| e.error)
                .unwrap_or(text);
            return Err(Error::Server { status, message });
        }
        if status != 200 {
            return Err(Error::Protocol(format!("unexpected status {status}")));
        }
        serde_json::from_str(&text).map_err(|e| Error::Protocol(e.to_string()))
    }

    pub fn health(&self) -> Result<()> {
        let (status, _) = self.send("/health", None)?;
        if status == 200 {
            Ok(())
        } else {
            Err(Error::Server { status, message: "unhealthy".into() })
        }
    }

    pub fn info(&self) -> Result<SidecarInfo> {
        self.call("/info", None)
    }

    /// Order-preserving remote classification. An empty batch makes no request.
    pub fn classify(&self, batch: &[NliRequest]) -> Result<Vec<NliDistribution>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let body = serde_json::to_value(NliBody { pairs: batch })?;
        let resp: NliResponse = self.call("/nli", Some(body))?;
        if resp.results.len() != batch.len() {
            return Err(Error::Protocol(format!(
                "expected {} results, got {}",
                batch.len(),
                resp.results.len()
            )));
        }
        for d in &resp.results {
            d.validate().map_err(|e| Error::Protocol(e.to_string()))?;
        }
        Ok(resp.results)
    }

    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = serde_json::to_value(EmbedBody { texts })?;
        let resp: EmbedResponse = self.call("/embed", Some(body))?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Protocol(format!(
                "expected {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        Ok(resp.vectors)
    }
}

pub fn remote_classify(batch: &[NliRequest], client: &SidecarClient) -> Result<Vec<NliDistribution>> {
    client.classify(batch)
}

/// Entailment scorer backed by the sidecar.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    client: SidecarClient,
}

impl RemoteScorer {
    pub fn new(client: SidecarClient) -> Self {
        Self { client }
    }
}

impl NliScorer for RemoteScorer {
    fn classify(&self, batch: &[NliRequest]) -> Result<Vec<NliDistribution>> {
        self.client.classify(batch)
    }
}

/// Embedding provider backed by the sidecar; the dimension is read from `/info`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    client: SidecarClient,
    id: String,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn connect(client: SidecarClient) -> Result<Self> {
        let info = client.info()?;
        Ok(Self { id: format!("remote:{}", info.embed_model), dim: info.embed_dim, client })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let vectors = self.client.embed(texts)?;
        if let Some(v) = vectors.iter().find(|v| v.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: v.len() });
        }
        Ok(vectors)
    }
}
