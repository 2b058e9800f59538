//! Pipeline configuration and the named strategy presets.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the answer text is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// Chain-of-thought prompting, no retrieved context, empty shortlist.
    Cot,
    /// Retrieved shortlist injected into the prompt.
    Rag,
    /// Gold supporting documents injected instead of retrieval output.
    RagOracle,
}

/// How citations are sought.
///
/// The four seeker variants run a single post-hoc pass per statement with no
/// inline citations requested at generation time. `InlineOnly` requests
/// inline citations and stops there. `MultiPass` requests inline citations
/// and follows with the configured second-pass seeker, merging both passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeekStrategy {
    /// No citations at all; output has empty citation sets.
    None,
    /// Inline `[n]` citations from generation only (no second pass).
    InlineOnly,
    /// Model selects per statement from the pre-generation shortlist.
    PreGenShortlistLlmRerank,
    /// Per-statement re-retrieval; the retrieved top-k become the citations.
    ReRetrievalOnly,
    /// Per-statement re-retrieval filtered by an entailment-style scorer.
    ReRetrievalNliRerank,
    /// Per-statement re-retrieval with model selection over the pool.
    ReRetrievalLlmRerank,
    /// Inline pass plus second-pass seeking, deduplicated and merged.
    MultiPass,
}

/// Second-pass seeker used by [`SeekStrategy::MultiPass`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondPassSeeker {
    PreGenShortlistLlmRerank,
    ReRetrievalOnly,
    ReRetrievalNliRerank,
    ReRetrievalLlmRerank,
}

impl SeekStrategy {
    /// Whether the generation prompt asks for inline `[n]` markers.
    pub fn requests_inline(self) -> bool {
        matches!(self, SeekStrategy::InlineOnly | SeekStrategy::MultiPass)
    }

    /// The per-statement seeker this strategy runs, if any.
    pub fn second_pass(self, multi_pass_seeker: SecondPassSeeker) -> Option<SecondPassSeeker> {
        match self {
            SeekStrategy::None | SeekStrategy::InlineOnly => None,
            SeekStrategy::PreGenShortlistLlmRerank => Some(SecondPassSeeker::PreGenShortlistLlmRerank),
            SeekStrategy::ReRetrievalOnly => Some(SecondPassSeeker::ReRetrievalOnly),
            SeekStrategy::ReRetrievalNliRerank => Some(SecondPassSeeker::ReRetrievalNliRerank),
            SeekStrategy::ReRetrievalLlmRerank => Some(SecondPassSeeker::ReRetrievalLlmRerank),
            SeekStrategy::MultiPass => Some(multi_pass_seeker),
        }
    }
}

/// Everything that selects and parameterizes a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub generation_mode: GenerationMode,
    pub seek_strategy: SeekStrategy,
    /// Seeker used when `seek_strategy` is `multi_pass`.
    #[serde(default = "default_multi_pass_seeker")]
    pub multi_pass_seeker: SecondPassSeeker,
    /// Documents retrieved for answer generation.
    #[serde(default = "default_shortlist_k")]
    pub shortlist_k: usize,
    /// Documents retrieved per statement when seeking citations.
    #[serde(default = "default_per_statement_k")]
    pub per_statement_k: usize,
    /// Acceptance threshold on the [0,1] entailment score for NLI filtering.
    #[serde(default = "default_nli_threshold")]
    pub nli_threshold: f64,
    /// Drop shortlist documents from the tail until the prompt fits.
    #[serde(default)]
    pub max_prompt_chars: Option<usize>,
    /// Abort the dataset run on the first per-question failure.
    #[serde(default)]
    pub fail_fast: bool,
    /// Bounded worker pool size for dataset runs.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_multi_pass_seeker() -> SecondPassSeeker {
    SecondPassSeeker::ReRetrievalLlmRerank
}
fn default_shortlist_k() -> usize {
    32
}
fn default_per_statement_k() -> usize {
    3
}
fn default_nli_threshold() -> f64 {
    0.5
}
fn default_parallelism() -> usize {
    4
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            generation_mode: GenerationMode::Rag,
            seek_strategy: SeekStrategy::MultiPass,
            multi_pass_seeker: default_multi_pass_seeker(),
            shortlist_k: default_shortlist_k(),
            per_statement_k: default_per_statement_k(),
            nli_threshold: default_nli_threshold(),
            max_prompt_chars: None,
            fail_fast: false,
            parallelism: default_parallelism(),
        }
    }
}

impl PipelineConfig {
    /// Named presets for the studied end-to-end methods:
    /// `medrag` (RAG answer, no citations), `prg` (RAG with inline citations
    /// only), `pgc` (chain-of-thought answer with post-hoc re-retrieval +
    /// model selection), and `multipass` (the full two-pass method).
    pub fn preset(name: &str) -> Result<PipelineConfig> {
        let base = PipelineConfig::default();
        match name {
            "medrag" => Ok(PipelineConfig {
                generation_mode: GenerationMode::Rag,
                seek_strategy: SeekStrategy::None,
                ..base
            }),
            "prg" => Ok(PipelineConfig {
                generation_mode: GenerationMode::Rag,
                seek_strategy: SeekStrategy::InlineOnly,
                ..base
            }),
            "pgc" => Ok(PipelineConfig {
                generation_mode: GenerationMode::Cot,
                seek_strategy: SeekStrategy::ReRetrievalLlmRerank,
                ..base
            }),
            "multipass" => Ok(PipelineConfig {
                generation_mode: GenerationMode::Rag,
                seek_strategy: SeekStrategy::MultiPass,
                ..base
            }),
            other => Err(Error::Config(format!(
                "unknown strategy preset `{other}` (expected medrag, prg, pgc, or multipass)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.generation_mode != GenerationMode::Cot && self.shortlist_k == 0 {
            return Err(Error::Config("shortlist_k must be >= 1 for grounded generation".into()));
        }
        let second_pass = self.seek_strategy.second_pass(self.multi_pass_seeker);
        if second_pass.is_some() && self.per_statement_k == 0 {
            return Err(Error::Config("per_statement_k must be >= 1 when seeking citations".into()));
        }
        if self.seek_strategy.requests_inline() && self.generation_mode == GenerationMode::Cot {
            return Err(Error::Config(
                "inline citations require documents in the prompt; use a grounded generation mode"
                    .into(),
            ));
        }
        if second_pass == Some(SecondPassSeeker::PreGenShortlistLlmRerank)
            && self.generation_mode == GenerationMode::Cot
        {
            return Err(Error::Config(
                "shortlist selection needs a pre-generation shortlist; chain-of-thought has none"
                    .into(),
            ));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.nli_threshold) {
            return Err(Error::Config("nli_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}
