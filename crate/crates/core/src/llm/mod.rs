//! Chat-completion clients with deterministic decoding, retries, and
//! record/replay transcripts.

mod http;
mod replay;
mod template;
mod transcript;

pub use http::{HttpChatClient, RetryPolicy};
pub use replay::{RecordingChatClient, ReplayChatClient};
pub use template::{bindings, format_document_block, names, PromptSet, PromptTemplate};
pub use transcript::{prompt_hash, Transcript, TranscriptStore, TranscriptWriter};

use std::collections::BTreeMap;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::Result;

/// Decoding and endpoint settings for one model role. Evaluation runs keep
/// temperature at 0 so outputs are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub model_name: String,
    /// Full chat-completions URL, e.g. `http://host:8000/v1/chat/completions`.
    pub endpoint_url: String,
    #[serde(default)]
    pub temperature: f64,
    pub max_tokens: u32,
}

impl GenerationConfig {
    pub fn new(model_name: impl Into<String>, endpoint_url: impl Into<String>, max_tokens: u32) -> Self {
        GenerationConfig {
            model_name: model_name.into(),
            endpoint_url: endpoint_url.into(),
            temperature: 0.0,
            max_tokens,
        }
    }
}

/// A chat-completion backend: live HTTP, replay, or scripted for tests.
#[async_trait]
pub trait ChatClient: Send + Sync {
    fn name(&self) -> &str;

    async fn generate(&self, system: &str, user: &str, config: &GenerationConfig) -> Result<String>;
}

/// Render a document-grounded prompt, dropping documents from the tail of the
/// shortlist until the user prompt fits `max_prompt_chars`. Returns the
/// rendered (system, user) pair and the number of documents actually shown;
/// marker indices in the model output refer to exactly those documents.
pub fn render_with_budget(
    template: &PromptTemplate,
    extra_bindings: &BTreeMap<String, String>,
    docs: &[Document],
    max_prompt_chars: Option<usize>,
) -> Result<(String, String, usize)> {
    let mut used = docs.len();
    loop {
        let mut b = extra_bindings.clone();
        b.insert("documents".into(), format_document_block(&docs[..used]));
        let (system, user) = template.render(&b)?;
        let fits = max_prompt_chars.is_none_or(|limit| user.chars().count() <= limit);
        if fits || used == 0 {
            return Ok((system, user, used));
        }
        used -= 1;
    }
}
