//! Shared offline fixture for end-to-end tests.
//!
//! The fixture is a 20-question world where every question `i` has two
//! relevant documents: `A{i}` covers the topic loosely (partial support for
//! the answer claim) and `B{i}` embeds the claim sentence verbatim (full
//! support). Inline citations in the canned answers point at `A{i}` for most
//! questions, so a first-pass-only run earns no recall while per-statement
//! re-retrieval finds `B{i}`. Transcripts are produced by recording real
//! pipeline runs against a scripted backend, which keeps prompt hashes
//! consistent with replay by construction.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use async_trait::async_trait;

use citedqa::corpus::{ingest_documents, CorpusStore};
use citedqa::eval::{load_dataset, DatasetItem, DatasetName};
use citedqa::llm::{
    ChatClient, GenerationConfig, PromptSet, RecordingChatClient, ReplayChatClient,
    TranscriptWriter,
};
use citedqa::pipeline::{Pipeline, PipelineConfig, PipelineServices, SecondPassSeeker};
use citedqa::retrieval::{
    Bm25Params, IndexConfig, InvertedIndex, JaccardScorer, Retriever, RetrieverKind,
};

pub const N_QUESTIONS: usize = 20;
pub const SHORTLIST_K: usize = 4;
pub const PER_STATEMENT_K: usize = 3;
pub const MODEL_NAME: &str = "fixture-model";
pub const ENDPOINT: &str = "http://offline.invalid/v1/chat/completions";
pub const MAX_TOKENS: u32 = 512;

pub struct FixtureQuestion {
    pub id: String,
    pub question: String,
    pub gold_polar: &'static str,
    pub claim: String,
    pub a_id: String,
    pub b_id: String,
}

pub struct Fixture {
    pub workdir: tempfile::TempDir,
    pub questions: Vec<FixtureQuestion>,
}

fn is_yes(i: usize) -> bool {
    i % 2 == 1
}

/// Questions where the canned inline citation already points at the fully
/// supportive document (pass 1 is enough, so double-pass ties instead of
/// winning).
fn inline_cites_b(i: usize) -> bool {
    i == 7 || i == 14
}

/// Questions where the canned answer carries two inline markers (A and B).
fn inline_cites_both(i: usize) -> bool {
    i == 10
}

fn question_text(i: usize) -> String {
    format!("Is drugx{i:02} beneficial for cond{i:02}?")
}

fn claim_text(i: usize) -> String {
    if is_yes(i) {
        format!("Drugx{i:02} improves recovery outcomes in cond{i:02} patients")
    } else {
        format!("Drugx{i:02} shows no measurable benefit in cond{i:02} patients")
    }
}

fn polar_word(i: usize) -> &'static str {
    if is_yes(i) {
        "Yes"
    } else {
        "No"
    }
}

fn corpus_lines() -> Vec<String> {
    let mut lines = Vec::new();
    for i in 1..=N_QUESTIONS {
        let claim_lower = claim_text(i).to_lowercase();
        lines.push(
            serde_json::json!({
                "doc_id": format!("A{i:02}"),
                "title": format!("drugx{i:02} and cond{i:02} overview"),
                "abstract": format!(
                    "drugx{i:02} has been studied in cond{i:02} patients for several years."
                ),
            })
            .to_string(),
        );
        lines.push(
            serde_json::json!({
                "doc_id": format!("B{i:02}"),
                "title": format!("randomized trial of drugx{i:02}"),
                "abstract": format!(
                    "in a controlled study, {claim_lower} when compared against standard care."
                ),
            })
            .to_string(),
        );
    }
    for (j, topic) in ["metabolic pathways", "imaging artifacts", "survey methodology"]
        .iter()
        .enumerate()
    {
        lines.push(
            serde_json::json!({
                "doc_id": format!("Z{j:02}"),
                "title": format!("unrelated notes on {topic}"),
                "abstract": format!("general background material about {topic} only."),
            })
            .to_string(),
        );
    }
    lines
}

fn dataset_lines() -> Vec<String> {
    (1..=N_QUESTIONS)
        .map(|i| {
            serde_json::json!({
                "question_id": format!("q{i:02}"),
                "question": question_text(i),
                "gold_polar": if is_yes(i) { "yes" } else { "no" },
                "gold_doc_ids": [format!("A{i:02}"), format!("B{i:02}")],
                "gold_long_answer": claim_text(i),
            })
            .to_string()
        })
        .collect()
}

/// Scripted model used only while recording fixture transcripts. It reads the
/// question number out of the prompt, finds the document numbers assigned to
/// A/B in the rendered document block, and emits the canned answer.
struct FixtureChat;

fn question_number(text: &str) -> Option<usize> {
    let lower = text.to_lowercase();
    let pos = lower.find("drugx")?;
    lower[pos + 5..pos + 7].parse().ok()
}

/// Find the `Document [n]` number carrying the given PMID in a prompt.
fn doc_number_for(user: &str, doc_id: &str) -> Option<usize> {
    let needle = format!("PMID: {doc_id})");
    for line in user.lines() {
        if line.starts_with("Document [") && line.contains(&needle) {
            let close = line.find(']')?;
            return line["Document [".len()..close].parse().ok();
        }
    }
    None
}

#[async_trait]
impl ChatClient for FixtureChat {
    fn name(&self) -> &str {
        "fixture"
    }

    async fn generate(
        &self,
        _system: &str,
        user: &str,
        _config: &GenerationConfig,
    ) -> citedqa::Result<String> {
        let i = question_number(user)
            .ok_or_else(|| citedqa::Error::Config(format!("unscripted prompt: {user}")))?;
        if user.starts_with("Statement:") {
            // citation selection: prefer the fully supportive document
            let number = doc_number_for(user, &format!("B{i:02}"))
                .or_else(|| doc_number_for(user, &format!("A{i:02}")))
                .unwrap_or(1);
            return Ok(format!("[{number}]"));
        }
        let claim = claim_text(i);
        let polar = polar_word(i);
        if user.contains("inline citations") {
            let a = doc_number_for(user, &format!("A{i:02}"));
            let b = doc_number_for(user, &format!("B{i:02}"));
            let markers = if inline_cites_both(i) {
                match (a, b) {
                    (Some(a), Some(b)) => format!("[{a}][{b}]"),
                    _ => "[1]".into(),
                }
            } else if inline_cites_b(i) {
                format!("[{}]", b.unwrap_or(1))
            } else {
                format!("[{}]", a.unwrap_or(1))
            };
            return Ok(format!("{polar}. {claim} {markers}."));
        }
        // grounded or chain-of-thought answer without citation instructions
        Ok(format!("{polar}. {claim}."))
    }
}

fn base_pipeline_config(strategy: &str) -> PipelineConfig {
    let mut config = PipelineConfig::preset(strategy).unwrap();
    config.shortlist_k = SHORTLIST_K;
    config.per_statement_k = PER_STATEMENT_K;
    config.multi_pass_seeker = SecondPassSeeker::ReRetrievalOnly;
    config.parallelism = 2;
    config
}

fn build_retriever(corpus: &Arc<CorpusStore>) -> Arc<Retriever> {
    let index = InvertedIndex::build(corpus, IndexConfig::default()).unwrap();
    Arc::new(
        Retriever::new(
            Arc::clone(corpus),
            index,
            Bm25Params::default(),
            Arc::new(JaccardScorer),
            RetrieverKind::Hierarchical {
                first_stage_depth: 10,
            },
        )
        .unwrap(),
    )
}

fn services_with_chat(corpus: &Arc<CorpusStore>, chat: Arc<dyn ChatClient>) -> PipelineServices {
    PipelineServices {
        corpus: Arc::clone(corpus),
        retriever: build_retriever(corpus),
        chat,
        prompts: Arc::new(PromptSet::builtin()),
        generation: GenerationConfig::new(MODEL_NAME, ENDPOINT, MAX_TOKENS),
        nli_scorer: Arc::new(JaccardScorer),
    }
}

fn config_toml(workdir: &Path, strategy: &str) -> String {
    format!(
        r#"workdir = "{workdir}"

[llm]
mode = "replay"
transcripts = "transcripts.jsonl"
model_name = "{MODEL_NAME}"
endpoint_url = "{ENDPOINT}"
max_tokens = {MAX_TOKENS}

[retriever]
kind = "hierarchical"
first_stage_depth = 10
scorer = "jaccard"

[pipeline]
strategy = "{strategy}"
shortlist_k = {SHORTLIST_K}
per_statement_k = {PER_STATEMENT_K}
multi_pass_seeker = "re_retrieval_only"
parallelism = 2

[judge]
kind = "lexical"

[dataset]
name = "bioasq_yn"
path = "questions.jsonl"

[run]
out_dir = "runs"
name = "{strategy}"
"#,
        workdir = workdir.display(),
    )
}

impl Fixture {
    /// Build the complete offline world: corpus store, index, dataset,
    /// recorded transcripts, and one replay config per strategy preset.
    pub async fn build() -> Fixture {
        let workdir = tempfile::tempdir().unwrap();
        let root = workdir.path();

        std::fs::write(root.join("corpus_source.jsonl"), corpus_lines().join("\n")).unwrap();
        let source = std::io::BufReader::new(std::fs::File::open(root.join("corpus_source.jsonl")).unwrap());
        let stats = ingest_documents(source, &root.join("corpus")).unwrap();
        assert_eq!(stats.rejected_count, 0);

        let corpus = Arc::new(CorpusStore::open(&root.join("corpus")).unwrap());
        let index = InvertedIndex::build(&corpus, IndexConfig::default()).unwrap();
        index.save(&root.join("index.json")).unwrap();

        std::fs::write(root.join("questions.jsonl"), dataset_lines().join("\n")).unwrap();
        let items = load_dataset(DatasetName::BioasqYn, &root.join("questions.jsonl")).unwrap();

        // record transcripts by running the real pipeline over a scripted model
        let writer = Arc::new(TranscriptWriter::open(&root.join("transcripts.jsonl")).unwrap());
        let recording: Arc<dyn ChatClient> =
            Arc::new(RecordingChatClient::new(Arc::new(FixtureChat), writer));
        for strategy in ["multipass", "medrag", "pgc"] {
            let services = services_with_chat(&corpus, Arc::clone(&recording));
            let pipeline = Pipeline::new(services, base_pipeline_config(strategy)).unwrap();
            let outcome = pipeline.run_dataset(&items).await.unwrap();
            assert!(
                outcome.failures.is_empty(),
                "fixture recording failed for {strategy}: {:?}",
                outcome.failures
            );
        }

        for strategy in ["multipass", "prg", "medrag", "pgc"] {
            std::fs::write(
                root.join(format!("config_{strategy}.toml")),
                config_toml(root, strategy),
            )
            .unwrap();
        }

        let questions = (1..=N_QUESTIONS)
            .map(|i| FixtureQuestion {
                id: format!("q{i:02}"),
                question: question_text(i),
                gold_polar: if is_yes(i) { "yes" } else { "no" },
                claim: claim_text(i),
                a_id: format!("A{i:02}"),
                b_id: format!("B{i:02}"),
            })
            .collect();
        Fixture { workdir, questions }
    }

    pub fn build_blocking() -> Fixture {
        tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .unwrap()
            .block_on(Fixture::build())
    }

    pub fn root(&self) -> &Path {
        self.workdir.path()
    }

    pub fn config_path(&self, strategy: &str) -> PathBuf {
        self.root().join(format!("config_{strategy}.toml"))
    }

    pub fn run_dir(&self, name: &str) -> PathBuf {
        self.root().join("runs").join(name)
    }

    pub fn dataset_items(&self) -> Vec<DatasetItem> {
        load_dataset(DatasetName::BioasqYn, &self.root().join("questions.jsonl")).unwrap()
    }

    pub fn corpus(&self) -> Arc<CorpusStore> {
        Arc::new(CorpusStore::open(&self.root().join("corpus")).unwrap())
    }

    /// Library-level pipeline with the replay client, mirroring the CLI
    /// configuration for `strategy`.
    pub fn replay_pipeline(&self, strategy: &str) -> Pipeline {
        let corpus = self.corpus();
        let chat: Arc<dyn ChatClient> =
            Arc::new(ReplayChatClient::load(&self.root().join("transcripts.jsonl")).unwrap());
        let services = services_with_chat(&corpus, chat);
        Pipeline::new(services, base_pipeline_config(strategy)).unwrap()
    }

    pub fn binary() -> &'static str {
        env!("CARGO_BIN_EXE_citedqa")
    }
}
