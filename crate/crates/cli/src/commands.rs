//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use citedqa::answer::{read_cited_answers, write_cited_answers};
use citedqa::corpus::{ingest_documents, CorpusStore};
use citedqa::eval::{
    aggregate, annotation_export, annotation_import, kappa_against_report, load_dataset,
    score_answer, EvalReport, QuestionDetail,
};
use citedqa::pipeline::{Pipeline, RunOutcome};
use citedqa::retrieval::{
    Bm25Params, IndexConfig, InvertedIndex, JaccardScorer, Retriever, RetrieverKind,
};

use crate::config::{AppConfig, CORPUS_DIR, INDEX_FILE};

pub fn ingest(input: &Path, workdir: &Path) -> Result<()> {
    let file = std::fs::File::open(input)
        .with_context(|| format!("opening corpus source {}", input.display()))?;
    let reader = std::io::BufReader::new(file);
    let stats = ingest_documents(reader, &workdir.join(CORPUS_DIR))?;
    println!("{}", serde_json::to_string(&stats)?);
    Ok(())
}

pub fn index(
    workdir: &Path,
    config_path: Option<&Path>,
    no_title: bool,
    stem: bool,
) -> Result<()> {
    // config file supplies the defaults; flags override
    let mut index_config = match config_path {
        Some(path) => AppConfig::load(path)?.index_config(),
        None => IndexConfig::default(),
    };
    if no_title {
        index_config.include_title = false;
    }
    if stem {
        index_config.stem = true;
    }
    let corpus = CorpusStore::open(&workdir.join(CORPUS_DIR)).with_context(|| {
        format!("opening corpus under {} (run `ingest` first)", workdir.display())
    })?;
    let index = InvertedIndex::build(&corpus, index_config)?;
    let path = workdir.join(INDEX_FILE);
    index.save(&path)?;
    println!(
        "{}",
        serde_json::json!({
            "index": path.display().to_string(),
            "documents": index.doc_count(),
            "avgdl": index.avgdl(),
        })
    );
    Ok(())
}

pub async fn search(
    workdir: &Path,
    query: &str,
    limit: usize,
    mode: &str,
    depth: usize,
) -> Result<()> {
    let corpus = Arc::new(CorpusStore::open(&workdir.join(CORPUS_DIR))?);
    let index = InvertedIndex::load(&workdir.join(INDEX_FILE))?;
    let kind = match mode {
        "lexical" => RetrieverKind::Lexical,
        "semantic" => RetrieverKind::Semantic { pool_depth: depth },
        "hierarchical" => RetrieverKind::Hierarchical {
            first_stage_depth: depth,
        },
        "rrf" => RetrieverKind::RrfFusion {
            pool_depth: depth,
            k_rrf: 60,
        },
        other => bail!("unknown search mode `{other}`"),
    };
    let retriever = Retriever::new(
        Arc::clone(&corpus),
        index,
        Bm25Params::default(),
        Arc::new(JaccardScorer),
        kind,
    )?;
    let hits = retriever
        .retrieve(query, limit, citedqa::retrieval::RetrievalPurpose::PreGeneration)
        .await?;
    for hit in &hits {
        let doc = corpus.get(&hit.doc_id)?;
        println!("{:>3}  {:>10.4}  {}  {}", hit.rank, hit.score, hit.doc_id, doc.title);
    }
    if hits.is_empty() {
        eprintln!("no results");
    }
    Ok(())
}

pub async fn answer(config_path: &Path, question: &str, strategy: Option<&str>) -> Result<()> {
    let mut config = AppConfig::load(config_path)?;
    if let Some(s) = strategy {
        config.pipeline.strategy = Some(s.to_string());
    }
    let services = config.build_services()?;
    let pipeline = Pipeline::new(services, config.pipeline_config()?)?;
    let (answer, _log) = pipeline.run_question("cli", question, None).await?;
    println!("{}", serde_json::to_string_pretty(&answer)?);
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    run_dir: String,
    questions: usize,
    answered: usize,
    failed: usize,
    pre_generation_retrievals: usize,
    per_statement_retrievals: usize,
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Execute the configured dataset run and persist all artifacts into the run
/// directory. Returns the outcome for callers that keep going (eval, tests).
pub async fn run(
    config_path: &Path,
    strategy: Option<&str>,
    name: Option<&str>,
) -> Result<(PathBuf, RunOutcome)> {
    let mut config = AppConfig::load(config_path)?;
    if let Some(s) = strategy {
        config.pipeline.strategy = Some(s.to_string());
    }
    let pipeline_config = config.pipeline_config()?;
    let services = config.build_services()?;
    let pipeline = Pipeline::new(services, pipeline_config)?;
    let dataset = load_dataset(config.dataset_name()?, &config.resolve(&config.dataset.path))?;

    // snapshot first so even an aborted run leaves its exact configuration
    let run_dir = config.run_dir(name);
    std::fs::create_dir_all(&run_dir)?;
    std::fs::write(run_dir.join("config.toml"), config.snapshot_toml()?)?;

    let outcome = pipeline.run_dataset(&dataset).await?;
    write_cited_answers(&run_dir.join("cited_answers.jsonl"), &outcome.answers)?;
    write_jsonl(&run_dir.join("stage_logs.jsonl"), &outcome.stage_logs)?;
    if !outcome.failures.is_empty() {
        write_jsonl(&run_dir.join("failures.jsonl"), &outcome.failures)?;
    }
    let summary = RunSummary {
        run_dir: run_dir.display().to_string(),
        questions: dataset.len(),
        answered: outcome.answers.len(),
        failed: outcome.failures.len(),
        pre_generation_retrievals: outcome.pre_generation_retrievals,
        per_statement_retrievals: outcome.per_statement_retrievals,
    };
    let summary_json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(run_dir.join("run_summary.json"), format!("{summary_json}\n"))?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok((run_dir, outcome))
}

/// Score a finished run with the configured judge.
pub async fn eval(config_path: &Path, run_dir: &Path) -> Result<EvalReport> {
    let config = AppConfig::load(config_path)?;
    let corpus = CorpusStore::open(&config.corpus_dir())?;
    let judge = config.build_judge()?;
    let answers = read_cited_answers(&run_dir.join("cited_answers.jsonl"))
        .with_context(|| format!("reading answers from {}", run_dir.display()))?;
    let dataset = load_dataset(config.dataset_name()?, &config.resolve(&config.dataset.path))?;
    let gold: std::collections::HashMap<&str, &citedqa::eval::DatasetItem> = dataset
        .iter()
        .map(|item| (item.question_id.as_str(), item))
        .collect();

    let mut question_scores = Vec::with_capacity(answers.len());
    let mut details = Vec::with_capacity(answers.len());
    for answer in &answers {
        let item = gold
            .get(answer.question_id.as_str())
            .with_context(|| format!("question {} is not in the dataset", answer.question_id))?;
        let (score, judgments) = score_answer(
            answer,
            item.gold_polar,
            item.gold_long_answer.as_deref(),
            judge.as_ref(),
            &corpus,
        )
        .await?;
        question_scores.push(score);
        details.push(QuestionDetail {
            question_id: answer.question_id.clone(),
            statements: judgments,
        });
    }

    let report = EvalReport {
        judge: judge.name().to_string(),
        judge_warnings: judge.warning_count(),
        config: config.snapshot_json()?,
        aggregate: aggregate(&question_scores),
        question_scores,
        details,
    };
    report.save(&run_dir.join("eval_report.json"))?;
    std::fs::write(run_dir.join("eval_report.txt"), report.render_table())?;
    print!("{}", report.render_table());
    Ok(report)
}

pub fn kappa(annotations_path: &Path, report_path: &Path) -> Result<()> {
    let annotations = annotation_import(annotations_path)?;
    let report = EvalReport::load(report_path)?;
    let (recall_kappa, precision_kappa) = kappa_against_report(&annotations, &report)?;
    println!(
        "{}",
        serde_json::json!({
            "recall_judge_kappa": recall_kappa,
            "precision_judge_kappa": precision_kappa,
            "recall_pairs": annotations.recall.len(),
            "precision_pairs": annotations.precision.len(),
        })
    );
    Ok(())
}

pub fn annotate_export(run_dir: &Path, out: &Path) -> Result<()> {
    let answers = read_cited_answers(&run_dir.join("cited_answers.jsonl"))?;
    let rows = annotation_export(&answers, out)?;
    println!(
        "{}",
        serde_json::json!({"rows": rows, "file": out.display().to_string()})
    );
    Ok(())
}

pub fn annotate_import(file: &Path, report: Option<&Path>) -> Result<()> {
    let annotations = annotation_import(file)?;
    match report {
        Some(report_path) => kappa(file, report_path),
        None => {
            println!(
                "{}",
                serde_json::json!({
                    "recall_judgments": annotations.recall.len(),
                    "precision_judgments": annotations.precision.len(),
                })
            );
            Ok(())
        }
    }
}

pub async fn serve(config_path: &Path, addr: &str) -> Result<()> {
    let config = AppConfig::load(config_path)?;
    let services = config.build_services()?;
    let pipeline = Pipeline::new(services, config.pipeline_config()?)?;
    let state = Arc::new(crate::service::ServiceState { pipeline });
    let router = crate::service::build_router(state);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    let resolved = listener.local_addr()?;
    eprintln!("serving on http://{resolved}");
    axum::serve(listener, router).await?;
    Ok(())
}
