//! Operator CLI over the cited-answer pipeline: corpus ingest, index build,
//! retrieval debugging, single-question answering, dataset runs, evaluation,
//! annotation round trips, and the HTTP answer service.

mod commands;
mod config;
mod service;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "citedqa", version, about = "Biomedical QA with inline citations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a line-delimited corpus into a frozen store.
    Ingest {
        /// Source file: one JSON record per line with doc_id/title/abstract.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        workdir: PathBuf,
    },
    /// Build the inverted index over an ingested corpus.
    Index {
        #[arg(long, default_value = ".")]
        workdir: PathBuf,
        /// Optional config file supplying index defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Index abstracts only instead of title + abstract.
        #[arg(long)]
        no_title: bool,
        /// Apply plural stemming to document and query tokens.
        #[arg(long)]
        stem: bool,
    },
    /// Debug retrieval: print ranked hits for a query.
    Search {
        #[arg(long, default_value = ".")]
        workdir: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(short = 'n', long, default_value_t = 10)]
        limit: usize,
        /// lexical | semantic | hierarchical | rrf
        #[arg(long, default_value = "hierarchical")]
        mode: String,
        /// First-stage candidate pool size.
        #[arg(long, default_value_t = 100)]
        depth: usize,
    },
    /// Answer a single question through the configured pipeline.
    Answer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        question: String,
        /// Strategy preset override: medrag | prg | pgc | multipass.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Run the configured dataset through the pipeline into a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        strategy: Option<String>,
        /// Run directory name override.
        #[arg(long)]
        name: Option<String>,
    },
    /// Score a finished run with the configured judge.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Run directory produced by `run`.
        #[arg(long)]
        run: PathBuf,
    },
    /// Agreement between imported annotations and a machine eval report.
    Kappa {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Export statements/citations for annotation, or import judgments.
    Annotate {
        #[command(subcommand)]
        action: AnnotateAction,
    },
    /// Serve cited answers over HTTP.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Subcommand)]
enum AnnotateAction {
    Export {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Import {
        #[arg(long)]
        file: PathBuf,
        /// Pair with a machine eval report and print kappas.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

async fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { input, workdir } => commands::ingest(&input, &workdir),
        Command::Index {
            workdir,
            config,
            no_title,
            stem,
        } => commands::index(&workdir, config.as_deref(), no_title, stem),
        Command::Search {
            workdir,
            query,
            limit,
            mode,
            depth,
        } => commands::search(&workdir, &query, limit, &mode, depth).await,
        Command::Answer {
            config,
            question,
            strategy,
        } => commands::answer(&config, &question, strategy.as_deref()).await,
        Command::Run {
            config,
            strategy,
            name,
        } => commands::run(&config, strategy.as_deref(), name.as_deref())
            .await
            .map(|_| ()),
        Command::Eval { config, run } => commands::eval(&config, &run).await.map(|_| ()),
        Command::Kappa {
            annotations,
            report,
        } => commands::kappa(&annotations, &report),
        Command::Annotate { action } => match action {
            AnnotateAction::Export { run, out } => commands::annotate_export(&run, &out),
            AnnotateAction::Import { file, report } => {
                commands::annotate_import(&file, report.as_deref())
            }
        },
        Command::Serve { config, addr } => commands::serve(&config, &addr).await,
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    // clap exits 2 on usage errors and 0 on --help/--version
    let cli = Cli::parse();
    match dispatch(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({"error": format!("{e:#}")}));
            ExitCode::from(1)
        }
    }
}
