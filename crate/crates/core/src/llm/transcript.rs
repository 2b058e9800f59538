//! Line-delimited transcript store keyed by prompt hash.
//!
//! The hash covers everything that determines a model response under greedy
//! decoding: model name, temperature, max_tokens, system text, and user text.
//! Replaying a store therefore reproduces a run byte-for-byte.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GenerationConfig;
use crate::Result;

/// Content hash of a chat request. Stable across runs and platforms.
pub fn prompt_hash(config: &GenerationConfig, system: &str, user: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config.model_name.as_bytes());
    hasher.update([0x1f]);
    hasher.update(format!("{}", config.temperature).as_bytes());
    hasher.update([0x1f]);
    hasher.update(format!("{}", config.max_tokens).as_bytes());
    hasher.update([0x1f]);
    hasher.update(system.as_bytes());
    hasher.update([0x1f]);
    hasher.update(user.as_bytes());
    format!("{:x}", hasher.finalize())
}

/// One recorded request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub hash: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub system: String,
    pub user: String,
    pub response: String,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
}

/// Read-only transcript map for replay. Duplicate hashes keep the first
/// occurrence, matching the corpus duplicate policy.
pub struct TranscriptStore {
    entries: HashMap<String, Transcript>,
}

impl TranscriptStore {
    pub fn load(path: &Path) -> Result<TranscriptStore> {
        let content = std::fs::read_to_string(path)?;
        let mut entries = HashMap::new();
        for line in content.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let t: Transcript = serde_json::from_str(line)?;
            entries.entry(t.hash.clone()).or_insert(t);
        }
        Ok(TranscriptStore { entries })
    }

    pub fn empty() -> TranscriptStore {
        TranscriptStore {
            entries: HashMap::new(),
        }
    }

    pub fn get(&self, hash: &str) -> Option<&Transcript> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Append-only transcript writer. Appends are serialized so concurrent
/// pipeline workers can share one writer.
pub struct TranscriptWriter {
    file: Mutex<File>,
}

impl TranscriptWriter {
    pub fn open(path: &Path) -> Result<TranscriptWriter> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(TranscriptWriter {
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, transcript: &Transcript) -> Result<()> {
        let mut line = serde_json::to_vec(transcript)?;
        line.push(b'\n');
        let mut file = self.file.lock().expect("transcript writer lock poisoned");
        file.write_all(&line)?;
        Ok(())
    }
}
