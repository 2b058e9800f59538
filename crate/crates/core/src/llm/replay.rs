//! Replay and recording clients.
//!
//! With a replay client every pipeline run is fully offline and
//! deterministic: identical inputs hash to identical prompts, which look up
//! identical recorded responses.

use std::sync::Arc;

use async_trait::async_trait;

use super::transcript::{prompt_hash, Transcript, TranscriptStore, TranscriptWriter};
use super::{ChatClient, GenerationConfig};
use crate::{Error, Result};

/// Serves recorded responses by prompt hash; a miss is an error that names
/// the hash so the gap can be recorded.
pub struct ReplayChatClient {
    store: TranscriptStore,
}

impl ReplayChatClient {
    pub fn new(store: TranscriptStore) -> ReplayChatClient {
        ReplayChatClient { store }
    }

    pub fn load(path: &std::path::Path) -> Result<ReplayChatClient> {
        Ok(ReplayChatClient {
            store: TranscriptStore::load(path)?,
        })
    }
}

#[async_trait]
impl ChatClient for ReplayChatClient {
    fn name(&self) -> &str {
        "replay"
    }

    async fn generate(&self, system: &str, user: &str, config: &GenerationConfig) -> Result<String> {
        let hash = prompt_hash(config, system, user);
        match self.store.get(&hash) {
            Some(t) => Ok(t.response.clone()),
            None => Err(Error::ReplayMiss { hash }),
        }
    }
}

/// Wraps any client and records every successful exchange. Useful both for
/// capturing live runs and for building replay fixtures from scripted
/// backends.
pub struct RecordingChatClient {
    inner: Arc<dyn ChatClient>,
    writer: Arc<TranscriptWriter>,
}

impl RecordingChatClient {
    pub fn new(inner: Arc<dyn ChatClient>, writer: Arc<TranscriptWriter>) -> RecordingChatClient {
        RecordingChatClient { inner, writer }
    }
}

#[async_trait]
impl ChatClient for RecordingChatClient {
    fn name(&self) -> &str {
        "recording"
    }

    async fn generate(&self, system: &str, user: &str, config: &GenerationConfig) -> Result<String> {
        let started = std::time::Instant::now();
        let response = self.inner.generate(system, user, config).await?;
        self.writer.append(&Transcript {
            hash: prompt_hash(config, system, user),
            model: config.model_name.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            system: system.to_string(),
            user: user.to_string(),
            response: response.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
            prompt_tokens: None,
            completion_tokens: None,
        })?;
        Ok(response)
    }
}
