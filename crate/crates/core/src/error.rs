use crate::retrieval::RankedHit;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("document not found: {doc_id}")]
    DocumentNotFound { doc_id: String },

    #[error("corpus contains no documents")]
    EmptyCorpus,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Rerank scorer failure. Carries the candidate list untouched so the
    /// caller can fall back to the first-stage order.
    #[error("rerank scorer failed: {message}")]
    Rerank {
        message: String,
        candidates: Vec<RankedHit>,
    },

    #[error("unbound placeholder: {name}")]
    UnboundPlaceholder { name: String },

    #[error("template error: {0}")]
    Template(String),

    #[error("http transport error: {0}")]
    Transport(#[from] reqwest::Error),

    #[error("endpoint returned status {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },

    #[error("replay miss for prompt hash {hash}")]
    ReplayMiss { hash: String },

    #[error("dataset error at line {line}, field `{field}`: {message}")]
    Dataset {
        line: usize,
        field: String,
        message: String,
    },

    #[error("annotation error at line {line}: {message}")]
    Annotation { line: usize, message: String },

    #[error("label sequences have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("question {question_id}: {source}")]
    Question {
        question_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a question id to an error as it propagates out of a pipeline run.
    pub fn for_question(self, question_id: &str) -> Error {
        Error::Question {
            question_id: question_id.to_string(),
            source: Box::new(self),
        }
    }
}
