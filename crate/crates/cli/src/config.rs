//! Structured run configuration: one TOML file with environment-variable
//! interpolation for secrets, resolved against a work directory. Flags
//! override file values; the resolved config is snapshotted into every run
//! directory so a run can be re-executed identically.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use citedqa::eval::{
    AttributionJudge, AttributionLabel, DatasetName, LexicalOverlapJudge, LlmJudge, ScriptedJudge,
};
use citedqa::llm::{
    ChatClient, GenerationConfig, HttpChatClient, PromptSet, ReplayChatClient, RetryPolicy,
    TranscriptWriter,
};
use citedqa::pipeline::{
    GenerationMode, PipelineConfig, PipelineServices, SecondPassSeeker, SeekStrategy,
};
use citedqa::retrieval::{
    Bm25Params, HttpRerankScorer, IndexConfig, InvertedIndex, JaccardScorer, RerankScorer,
    ReplayRerankScorer, Retriever, RetrieverKind,
};

pub const INDEX_FILE: &str = "index.json";
pub const CORPUS_DIR: &str = "corpus";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    /// Root for all relative paths.
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub retriever: RetrieverSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub judge: JudgeSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub run: RunSection,
}

fn default_workdir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    #[serde(default = "default_endpoint")]
    pub endpoint_url: String,
    #[serde(default = "default_model")]
    pub model_name: String,
    /// Interpolated from the environment, e.g. "${CITEDQA_API_KEY}".
    #[serde(default)]
    pub api_key: Option<String>,
    /// live | record | replay
    #[serde(default = "default_llm_mode")]
    pub mode: String,
    #[serde(default = "default_transcripts")]
    pub transcripts: PathBuf,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_judge_max_tokens")]
    pub judge_max_tokens: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub min_interval_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
}

fn default_endpoint() -> String {
    "http://127.0.0.1:8000/v1/chat/completions".into()
}
fn default_model() -> String {
    "local-model".into()
}
fn default_llm_mode() -> String {
    "replay".into()
}
fn default_transcripts() -> PathBuf {
    PathBuf::from("transcripts.jsonl")
}
fn default_max_tokens() -> u32 {
    512
}
fn default_judge_max_tokens() -> u32 {
    64
}
fn default_concurrency() -> usize {
    4
}
fn default_max_retries() -> u32 {
    5
}
fn default_retry_base_ms() -> u64 {
    1000
}

impl Default for LlmSection {
    fn default() -> Self {
        toml::from_str("").expect("empty llm section has defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieverSection {
    /// lexical | semantic | hierarchical | rrf
    #[serde(default = "default_retriever_kind")]
    pub kind: String,
    #[serde(default = "default_first_stage_depth")]
    pub first_stage_depth: usize,
    #[serde(default = "default_first_stage_depth")]
    pub pool_depth: usize,
    #[serde(default = "default_k_rrf")]
    pub k_rrf: usize,
    #[serde(default = "default_k1")]
    pub k1: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_true")]
    pub include_title: bool,
    #[serde(default)]
    pub stem: bool,
    /// jaccard | http | replay
    #[serde(default = "default_scorer")]
    pub scorer: String,
    #[serde(default)]
    pub scorer_url: Option<String>,
    /// Record (http) or replay source for scorer calls.
    #[serde(default)]
    pub scorer_log: Option<PathBuf>,
}

fn default_retriever_kind() -> String {
    "hierarchical".into()
}
fn default_first_stage_depth() -> usize {
    100
}
fn default_k_rrf() -> usize {
    60
}
fn default_k1() -> f64 {
    Bm25Params::default().k1
}
fn default_b() -> f64 {
    Bm25Params::default().b
}
fn default_true() -> bool {
    true
}
fn default_scorer() -> String {
    "jaccard".into()
}

impl Default for RetrieverSection {
    fn default() -> Self {
        toml::from_str("").expect("empty retriever section has defaults")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    /// Preset: medrag | prg | pgc | multipass. Explicit fields below override
    /// the preset.
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default)]
    pub generation_mode: Option<GenerationMode>,
    #[serde(default)]
    pub seek_strategy: Option<SeekStrategy>,
    #[serde(default)]
    pub multi_pass_seeker: Option<SecondPassSeeker>,
    #[serde(default)]
    pub shortlist_k: Option<usize>,
    #[serde(default)]
    pub per_statement_k: Option<usize>,
    #[serde(default)]
    pub nli_threshold: Option<f64>,
    #[serde(default)]
    pub max_prompt_chars: Option<usize>,
    #[serde(default)]
    pub fail_fast: Option<bool>,
    #[serde(default)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    /// lexical | llm | scripted
    #[serde(default = "default_judge_kind")]
    pub kind: String,
    #[serde(default)]
    pub scripted_path: Option<PathBuf>,
    /// Overrides for the judge model; fall back to the [llm] section.
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(default)]
    pub endpoint_url: Option<String>,
}

fn default_judge_kind() -> String {
    "lexical".into()
}

impl Default for JudgeSection {
    fn default() -> Self {
        toml::from_str("").expect("empty judge section has defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    #[serde(default = "default_dataset_name")]
    pub name: String,
    #[serde(default = "default_dataset_path")]
    pub path: PathBuf,
}

fn default_dataset_name() -> String {
    "bioasq_yn".into()
}
fn default_dataset_path() -> PathBuf {
    PathBuf::from("questions.jsonl")
}

impl Default for DatasetSection {
    fn default() -> Self {
        toml::from_str("").expect("empty dataset section has defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Run directory name; deterministic so reruns land in a known place.
    #[serde(default = "default_run_name")]
    pub name: String,
    /// Optional directory of template overrides.
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_run_name() -> String {
    "run".into()
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("empty run section has defaults")
    }
}

/// Replace `${VAR}` with the environment value; a missing variable is an
/// error naming it.
pub fn interpolate_env(raw: &str) -> Result<String> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find('}') else {
            bail!("unterminated ${{ in config");
        };
        let name = &after[..end];
        let value =
            std::env::var(name).with_context(|| format!("environment variable {name} is not set"))?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<AppConfig> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let interpolated = interpolate_env(&raw)?;
        let config: AppConfig = toml::from_str(&interpolated)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    /// Resolve a configured path against the work directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.workdir.join(path)
        }
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.workdir.join(CORPUS_DIR)
    }

    pub fn index_path(&self) -> PathBuf {
        self.workdir.join(INDEX_FILE)
    }

    pub fn dataset_name(&self) -> Result<DatasetName> {
        Ok(self.dataset.name.parse::<DatasetName>()?)
    }

    /// Serialized snapshot with the API key redacted.
    pub fn snapshot_toml(&self) -> Result<String> {
        let mut copy = self.clone();
        if copy.llm.api_key.is_some() {
            copy.llm.api_key = Some("<redacted>".into());
        }
        Ok(toml::to_string_pretty(&copy)?)
    }

    /// Resolved config as a JSON value for embedding into reports.
    pub fn snapshot_json(&self) -> Result<serde_json::Value> {
        let mut copy = self.clone();
        if copy.llm.api_key.is_some() {
            copy.llm.api_key = Some("<redacted>".into());
        }
        Ok(serde_json::to_value(&copy)?)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        let mut config = match &p.strategy {
            Some(name) => PipelineConfig::preset(name)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = p.generation_mode {
            config.generation_mode = v;
        }
        if let Some(v) = p.seek_strategy {
            config.seek_strategy = v;
        }
        if let Some(v) = p.multi_pass_seeker {
            config.multi_pass_seeker = v;
        }
        if let Some(v) = p.shortlist_k {
            config.shortlist_k = v;
        }
        if let Some(v) = p.per_statement_k {
            config.per_statement_k = v;
        }
        if let Some(v) = p.nli_threshold {
            config.nli_threshold = v;
        }
        if let Some(v) = p.max_prompt_chars {
            config.max_prompt_chars = Some(v);
        }
        if let Some(v) = p.fail_fast {
            config.fail_fast = v;
        }
        if let Some(v) = p.parallelism {
            config.parallelism = v;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn bm25_params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.retriever.k1,
            b: self.retriever.b,
        }
    }

    pub fn index_config(&self) -> IndexConfig {
        IndexConfig {
            include_title: self.retriever.include_title,
            stem: self.retriever.stem,
        }
    }

    pub fn retriever_kind(&self) -> Result<RetrieverKind> {
        let r = &self.retriever;
        Ok(match r.kind.as_str() {
            "lexical" => RetrieverKind::Lexical,
            "semantic" => RetrieverKind::Semantic {
                pool_depth: r.pool_depth,
            },
            "hierarchical" => RetrieverKind::Hierarchical {
                first_stage_depth: r.first_stage_depth,
            },
            "rrf" => RetrieverKind::RrfFusion {
                pool_depth: r.pool_depth,
                k_rrf: r.k_rrf,
            },
            other => bail!("unknown retriever kind `{other}` (expected lexical, semantic, hierarchical, or rrf)"),
        })
    }

    pub fn build_scorer(&self) -> Result<Arc<dyn RerankScorer>> {
        let r = &self.retriever;
        Ok(match r.scorer.as_str() {
            "jaccard" => Arc::new(JaccardScorer),
            "http" => {
                let url = r
                    .scorer_url
                    .clone()
                    .context("retriever.scorer_url is required for the http scorer")?;
                let mut scorer = HttpRerankScorer::new(url);
                if let Some(log) = &r.scorer_log {
                    scorer = scorer.with_log(self.resolve(log));
                }
                Arc::new(scorer)
            }
            "replay" => {
                let log = r
                    .scorer_log
                    .as_ref()
                    .context("retriever.scorer_log is required for the replay scorer")?;
                Arc::new(ReplayRerankScorer::load(&self.resolve(log))?)
            }
            other => bail!("unknown scorer `{other}` (expected jaccard, http, or replay)"),
        })
    }

    pub fn build_chat_client(&self) -> Result<Arc<dyn ChatClient>> {
        let l = &self.llm;
        let transcripts = self.resolve(&l.transcripts);
        Ok(match l.mode.as_str() {
            "replay" => Arc::new(ReplayChatClient::load(&transcripts).with_context(|| {
                format!("loading replay transcripts from {}", transcripts.display())
            })?),
            "live" | "record" => {
                let mut client = HttpChatClient::new()
                    .with_api_key(l.api_key.clone())
                    .with_concurrency(l.concurrency)
                    .with_retry(RetryPolicy {
                        max_retries: l.max_retries,
                        base_delay: Duration::from_millis(l.retry_base_ms),
                        jitter: true,
                    });
                if l.min_interval_ms > 0 {
                    client = client
                        .with_min_interval(Some(Duration::from_millis(l.min_interval_ms)));
                }
                if l.mode == "record" {
                    client = client.with_recorder(Arc::new(TranscriptWriter::open(&transcripts)?));
                }
                Arc::new(client)
            }
            other => bail!("unknown llm mode `{other}` (expected live, record, or replay)"),
        })
    }

    pub fn generation_config(&self) -> GenerationConfig {
        GenerationConfig {
            model_name: self.llm.model_name.clone(),
            endpoint_url: self.llm.endpoint_url.clone(),
            temperature: 0.0,
            max_tokens: self.llm.max_tokens,
        }
    }

    pub fn judge_generation_config(&self) -> GenerationConfig {
        GenerationConfig {
            model_name: self
                .judge
                .model_name
                .clone()
                .unwrap_or_else(|| self.llm.model_name.clone()),
            endpoint_url: self
                .judge
                .endpoint_url
                .clone()
                .unwrap_or_else(|| self.llm.endpoint_url.clone()),
            temperature: 0.0,
            max_tokens: self.llm.judge_max_tokens,
        }
    }

    pub fn build_prompts(&self) -> Result<Arc<PromptSet>> {
        Ok(match &self.run.prompts_dir {
            Some(dir) => Arc::new(PromptSet::with_overrides(&self.resolve(dir))?),
            None => Arc::new(PromptSet::builtin()),
        })
    }

    /// Open the corpus and index and assemble the shared pipeline services.
    pub fn build_services(&self) -> Result<PipelineServices> {
        let corpus_dir = self.corpus_dir();
        let corpus = Arc::new(
            citedqa::corpus::CorpusStore::open(&corpus_dir).with_context(|| {
                format!("opening corpus at {} (run `ingest` first)", corpus_dir.display())
            })?,
        );
        let index_path = self.index_path();
        let index = InvertedIndex::load(&index_path).with_context(|| {
            format!("loading index at {} (run `index` first)", index_path.display())
        })?;
        let retriever = Retriever::new(
            Arc::clone(&corpus),
            index,
            self.bm25_params(),
            self.build_scorer()?,
            self.retriever_kind()?,
        )?;
        Ok(PipelineServices {
            corpus,
            retriever: Arc::new(retriever),
            chat: self.build_chat_client()?,
            prompts: self.build_prompts()?,
            generation: self.generation_config(),
            nli_scorer: Arc::new(JaccardScorer),
        })
    }

    pub fn build_judge(&self) -> Result<Arc<dyn AttributionJudge>> {
        Ok(match self.judge.kind.as_str() {
            "lexical" => Arc::new(LexicalOverlapJudge::default()),
            "scripted" => {
                let path = self
                    .judge
                    .scripted_path
                    .as_ref()
                    .context("judge.scripted_path is required for the scripted judge")?;
                Arc::new(ScriptedJudge::load(&self.resolve(path), AttributionLabel::None)?)
            }
            "llm" => Arc::new(LlmJudge::new(
                self.build_chat_client()?,
                self.build_prompts()?,
                self.judge_generation_config(),
            )),
            other => bail!("unknown judge kind `{other}` (expected lexical, llm, or scripted)"),
        })
    }

    /// Directory for a named run.
    pub fn run_dir(&self, name_override: Option<&str>) -> PathBuf {
        let name = name_override.unwrap_or(&self.run.name);
        self.resolve(&self.run.out_dir).join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: AppConfig = toml::from_str("").unwrap();
        assert_eq!(config.llm.max_tokens, 512);
        assert_eq!(config.llm.judge_max_tokens, 64);
        assert_eq!(config.retriever.first_stage_depth, 100);
        assert_eq!(config.retriever.k1, 0.9);
        assert_eq!(config.retriever.b, 0.4);
        let p = config.pipeline_config().unwrap();
        assert_eq!(p.shortlist_k, 32);
        assert_eq!(p.per_statement_k, 3);
    }

    #[test]
    fn strategy_preset_with_overrides() {
        let config: AppConfig = toml::from_str(
            "[pipeline]\nstrategy = \"prg\"\nshortlist_k = 8\n",
        )
        .unwrap();
        let p = config.pipeline_config().unwrap();
        assert_eq!(p.seek_strategy, SeekStrategy::InlineOnly);
        assert_eq!(p.shortlist_k, 8);
    }

    #[test]
    fn env_interpolation_resolves_and_reports_missing() {
        std::env::set_var("CITEDQA_TEST_KEY", "sekrit");
        let out = interpolate_env("api_key = \"${CITEDQA_TEST_KEY}\"").unwrap();
        assert_eq!(out, "api_key = \"sekrit\"");
        let err = interpolate_env("x = \"${CITEDQA_DEFINITELY_UNSET}\"").unwrap_err();
        assert!(err.to_string().contains("CITEDQA_DEFINITELY_UNSET"));
    }

    #[test]
    fn snapshot_redacts_api_key() {
        let mut config: AppConfig = toml::from_str("").unwrap();
        config.llm.api_key = Some("supersecret".into());
        let snapshot = config.snapshot_toml().unwrap();
        assert!(!snapshot.contains("supersecret"));
        assert!(snapshot.contains("<redacted>"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let result: std::result::Result<AppConfig, _> = toml::from_str("krrf = 60");
        assert!(result.is_err());
    }

    #[test]
    fn retriever_kind_parsing() {
        let config: AppConfig =
            toml::from_str("[retriever]\nkind = \"rrf\"\npool_depth = 50\nk_rrf = 10\n").unwrap();
        assert_eq!(
            config.retriever_kind().unwrap(),
            RetrieverKind::RrfFusion {
                pool_depth: 50,
                k_rrf: 10
            }
        );
        let bad: AppConfig = toml::from_str("[retriever]\nkind = \"quantum\"\n").unwrap();
        assert!(bad.retriever_kind().is_err());
    }
}
