//! Live chat-completion client speaking the OpenAI-compatible wire protocol.

use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, Semaphore};

use super::transcript::{prompt_hash, Transcript, TranscriptWriter};
use super::{ChatClient, GenerationConfig};
use crate::{Error, Result};

/// Bounded exponential backoff for 429s, 5xx responses, and transport errors.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_secs(1),
            jitter: true,
        }
    }
}

impl RetryPolicy {
    fn delay_for(&self, attempt: u32) -> Duration {
        let base = self.base_delay.saturating_mul(1u32 << attempt.min(16));
        if !self.jitter {
            return base;
        }
        // cheap jitter: up to +50% from the clock's subsecond noise
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos() as u64)
            .unwrap_or(0);
        base + Duration::from_nanos(nanos % (base.as_nanos().max(2) as u64 / 2))
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

/// HTTP client with a global concurrency limit, an optional per-endpoint
/// request spacing, bounded retries, and optional transcript recording.
pub struct HttpChatClient {
    client: reqwest::Client,
    api_key: Option<String>,
    retry: RetryPolicy,
    permits: Semaphore,
    min_interval: Option<Duration>,
    last_request: Mutex<Option<Instant>>,
    recorder: Option<Arc<TranscriptWriter>>,
}

impl HttpChatClient {
    pub fn new() -> HttpChatClient {
        HttpChatClient {
            client: reqwest::Client::new(),
            api_key: None,
            retry: RetryPolicy::default(),
            permits: Semaphore::new(4),
            min_interval: None,
            last_request: Mutex::new(None),
            recorder: None,
        }
    }

    /// Bearer token sent with every request. Callers usually pull this from
    /// an environment variable.
    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key.filter(|k| !k.is_empty());
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.permits = Semaphore::new(limit.max(1));
        self
    }

    /// Enforce a minimum spacing between request starts.
    pub fn with_min_interval(mut self, interval: Option<Duration>) -> Self {
        self.min_interval = interval;
        self
    }

    /// Record every successful call to a transcript store.
    pub fn with_recorder(mut self, recorder: Arc<TranscriptWriter>) -> Self {
        self.recorder = Some(recorder);
        self
    }

    async fn pace(&self) {
        let Some(interval) = self.min_interval else {
            return;
        };
        let mut last = self.last_request.lock().await;
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < interval {
                tokio::time::sleep(interval - elapsed).await;
            }
        }
        *last = Some(Instant::now());
    }

    async fn send_once(
        &self,
        system: &str,
        user: &str,
        config: &GenerationConfig,
    ) -> Result<(String, Option<WireUsage>)> {
        let request = WireRequest {
            model: &config.model_name,
            messages: vec![
                WireMessage {
                    role: "system",
                    content: system,
                },
                WireMessage {
                    role: "user",
                    content: user,
                },
            ],
            temperature: config.temperature,
            max_tokens: config.max_tokens,
        };
        let mut builder = self.client.post(&config.endpoint_url).json(&request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().await?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::HttpStatus {
                status: status.as_u16(),
                body: response.text().await.unwrap_or_default(),
            });
        }
        let body: WireResponse = response.json().await?;
        let text = body
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::InvalidParam("chat response contained no choices".into()))?;
        Ok((text, body.usage))
    }

    fn is_retryable(error: &Error) -> bool {
        match error {
            Error::HttpStatus { status, .. } => *status == 429 || *status >= 500,
            Error::Transport(_) => true,
            _ => false,
        }
    }
}

impl Default for HttpChatClient {
    fn default() -> Self {
        HttpChatClient::new()
    }
}

#[async_trait]
impl ChatClient for HttpChatClient {
    fn name(&self) -> &str {
        "http"
    }

    async fn generate(&self, system: &str, user: &str, config: &GenerationConfig) -> Result<String> {
        let _permit = self.permits.acquire().await.expect("semaphore closed");
        let started = Instant::now();
        let mut attempt: u32 = 0;
        let (text, usage) = loop {
            self.pace().await;
            match self.send_once(system, user, config).await {
                Ok(out) => break out,
                Err(e) if Self::is_retryable(&e) && attempt < self.retry.max_retries => {
                    tokio::time::sleep(self.retry.delay_for(attempt)).await;
                    attempt += 1;
                }
                Err(e) if Self::is_retryable(&e) => {
                    return Err(Error::RetriesExhausted {
                        attempts: attempt + 1,
                        last: e.to_string(),
                    })
                }
                Err(e) => return Err(e),
            }
        };
        if let Some(recorder) = &self.recorder {
            let usage = usage.unwrap_or_default();
            recorder.append(&Transcript {
                hash: prompt_hash(config, system, user),
                model: config.model_name.clone(),
                temperature: config.temperature,
                max_tokens: config.max_tokens,
                system: system.to_string(),
                user: user.to_string(),
                response: text.clone(),
                latency_ms: started.elapsed().as_millis() as u64,
                prompt_tokens: usage.prompt_tokens,
                completion_tokens: usage.completion_tokens,
            })?;
        }
        Ok(text)
    }
}
