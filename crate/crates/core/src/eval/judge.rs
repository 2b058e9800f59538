//! Attribution judges: does this evidence support this statement?

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::llm::{bindings, names, ChatClient, GenerationConfig, PromptSet};
use crate::text::tokenize;
use crate::{Error, Result};

/// Tri-valued attribution outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionLabel {
    Full,
    Partial,
    None,
}

impl AttributionLabel {
    pub fn value(self) -> f64 {
        match self {
            AttributionLabel::Full => 1.0,
            AttributionLabel::Partial => 0.5,
            AttributionLabel::None => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttributionLabel::Full => "full",
            AttributionLabel::Partial => "partial",
            AttributionLabel::None => "none",
        }
    }
}

/// Classifies a (statement, evidence) pair. Implementations must be safe to
/// call concurrently.
#[async_trait]
pub trait AttributionJudge: Send + Sync {
    /// Identity string recorded in reports.
    fn name(&self) -> &str;

    async fn judge(&self, statement: &str, evidence: &str) -> Result<AttributionLabel>;

    /// Responses that failed to parse and defaulted to `None`.
    fn warning_count(&self) -> usize {
        0
    }
}

/// Parse a judge response by keyword precedence fully > partially > not, with
/// a negation guard so "does not fully support" never reads as Full. Returns
/// the label and whether any rule matched.
pub fn parse_judge_response(response: &str) -> (AttributionLabel, bool) {
    let lower = response.to_lowercase();
    let negated_full = ["not fully", "n't fully", "cannot fully", "can not fully", "not be fully"]
        .iter()
        .any(|p| lower.contains(p));
    if !negated_full && (lower.contains("fully support") || lower.contains("full support") || lower.contains("fully attribut")) {
        return (AttributionLabel::Full, true);
    }
    if lower.contains("partially support")
        || lower.contains("partial support")
        || lower.contains("partially attribut")
    {
        return (AttributionLabel::Partial, true);
    }
    if lower.contains("does not support")
        || lower.contains("not supported")
        || lower.contains("no support")
        || lower.contains("doesn't support")
        || negated_full
    {
        return (AttributionLabel::None, true);
    }
    (AttributionLabel::None, false)
}

/// LLM-backed judge using the attribution rubric template.
pub struct LlmJudge {
    client: Arc<dyn ChatClient>,
    prompts: Arc<PromptSet>,
    config: GenerationConfig,
    warnings: AtomicUsize,
}

impl LlmJudge {
    pub fn new(client: Arc<dyn ChatClient>, prompts: Arc<PromptSet>, config: GenerationConfig) -> LlmJudge {
        LlmJudge {
            client,
            prompts,
            config,
            warnings: AtomicUsize::new(0),
        }
    }
}

#[async_trait]
impl AttributionJudge for LlmJudge {
    fn name(&self) -> &str {
        "llm"
    }

    async fn judge(&self, statement: &str, evidence: &str) -> Result<AttributionLabel> {
        let template = self.prompts.get(names::ATTRIBUTION_JUDGE)?;
        let (system, user) =
            template.render(&bindings([("statement", statement), ("evidence", evidence)]))?;
        let response = self.client.generate(&system, &user, &self.config).await?;
        let (label, parsed) = parse_judge_response(&response);
        if !parsed {
            self.warnings.fetch_add(1, Ordering::Relaxed);
        }
        Ok(label)
    }

    fn warning_count(&self) -> usize {
        self.warnings.load(Ordering::Relaxed)
    }
}

/// Fixed (statement, evidence) -> label map for tests and fixtures. Lookups
/// miss to the configured default.
pub struct ScriptedJudge {
    map: HashMap<(String, String), AttributionLabel>,
    default: AttributionLabel,
}

impl ScriptedJudge {
    pub fn new(default: AttributionLabel) -> ScriptedJudge {
        ScriptedJudge {
            map: HashMap::new(),
            default,
        }
    }

    pub fn insert(&mut self, statement: &str, evidence: &str, label: AttributionLabel) {
        self.map
            .insert((statement.to_string(), evidence.to_string()), label);
    }

    /// Load a scripted map from line-delimited records
    /// `{statement, evidence, label}`.
    pub fn load(path: &std::path::Path, default: AttributionLabel) -> Result<ScriptedJudge> {
        #[derive(Deserialize)]
        struct Row {
            statement: String,
            evidence: String,
            label: AttributionLabel,
        }
        let mut judge = ScriptedJudge::new(default);
        let content = std::fs::read_to_string(path)?;
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(line).map_err(|e| Error::Annotation {
                line: i + 1,
                message: e.to_string(),
            })?;
            judge.map.insert((row.statement, row.evidence), row.label);
        }
        Ok(judge)
    }
}

#[async_trait]
impl AttributionJudge for ScriptedJudge {
    fn name(&self) -> &str {
        "scripted"
    }

    async fn judge(&self, statement: &str, evidence: &str) -> Result<AttributionLabel> {
        Ok(self
            .map
            .get(&(statement.to_string(), evidence.to_string()))
            .copied()
            .unwrap_or(self.default))
    }
}

/// Deterministic offline judge based on token coverage: Full when every
/// statement token appears in the evidence, Partial when at least the
/// threshold fraction does, None otherwise. Evidence can only gain tokens as
/// citations are added, so Full judgments are monotone under evidence union.
pub struct LexicalOverlapJudge {
    pub partial_threshold: f64,
}

impl Default for LexicalOverlapJudge {
    fn default() -> Self {
        LexicalOverlapJudge {
            partial_threshold: 0.5,
        }
    }
}

#[async_trait]
impl AttributionJudge for LexicalOverlapJudge {
    fn name(&self) -> &str {
        "lexical"
    }

    async fn judge(&self, statement: &str, evidence: &str) -> Result<AttributionLabel> {
        let statement_tokens = tokenize(statement);
        if statement_tokens.is_empty() {
            return Ok(AttributionLabel::None);
        }
        let evidence_tokens: std::collections::HashSet<String> =
            tokenize(evidence).into_iter().collect();
        let covered = statement_tokens
            .iter()
            .filter(|t| evidence_tokens.contains(*t))
            .count();
        let coverage = covered as f64 / statement_tokens.len() as f64;
        Ok(if covered == statement_tokens.len() {
            AttributionLabel::Full
        } else if coverage >= self.partial_threshold {
            AttributionLabel::Partial
        } else {
            AttributionLabel::None
        })
    }
}
