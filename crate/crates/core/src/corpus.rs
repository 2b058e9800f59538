//! Corpus ingest and serving.
//!
//! The corpus is a frozen snapshot on disk: one line-delimited document file
//! plus an offset index keyed by doc id, so retrieval indices and pipeline
//! runs can share a single immutable copy. Text is stored verbatim; citations
//! must be able to quote the source bit-exactly.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DOCUMENTS_FILE: &str = "documents.jsonl";
const OFFSETS_FILE: &str = "offsets.json";
const STATS_FILE: &str = "stats.json";

/// One corpus entry: a PubMed-style abstract. The unit of citation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    /// PMID-style identifier, unique within a corpus.
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

impl Document {
    /// The text a retriever sees: title and abstract, or abstract alone.
    pub fn indexed_text(&self, include_title: bool) -> String {
        if include_title && !self.title.is_empty() {
            format!("{} {}", self.title, self.abstract_text)
        } else {
            self.abstract_text.clone()
        }
    }
}

/// Outcome of an ingest run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Number of retrievable documents.
    pub document_count: u64,
    /// Lines skipped: malformed, empty abstract, or duplicate doc id.
    pub rejected_count: u64,
    /// Size in bytes of the persisted document file.
    pub byte_size: u64,
}

#[derive(Serialize, Deserialize)]
struct OffsetEntry {
    doc_id: String,
    offset: u64,
    len: u64,
}

/// Ingest a line-delimited record stream into `dir`, creating a corpus store.
///
/// Each input line is a JSON object with string fields `doc_id`, `title`, and
/// `abstract`; unknown fields are ignored. Malformed lines, records with an
/// empty doc id or abstract, and duplicate doc ids (first wins) are rejected
/// and counted. Every input line ends up in exactly one of the two counters.
pub fn ingest_documents(source: impl BufRead, dir: &Path) -> Result<CorpusStats> {
    std::fs::create_dir_all(dir)?;
    let doc_path = dir.join(DOCUMENTS_FILE);
    let mut writer = BufWriter::new(File::create(&doc_path)?);

    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut entries: Vec<OffsetEntry> = Vec::new();
    let mut offset: u64 = 0;
    let mut accepted: u64 = 0;
    let mut rejected: u64 = 0;

    for line in source.lines() {
        let line = line?;
        let doc = match serde_json::from_str::<Document>(&line) {
            Ok(d) => d,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        if doc.doc_id.is_empty() || doc.abstract_text.is_empty() {
            rejected += 1;
            continue;
        }
        if seen.contains_key(&doc.doc_id) {
            rejected += 1;
            continue;
        }
        let mut record = serde_json::to_vec(&doc)?;
        record.push(b'\n');
        writer.write_all(&record)?;
        entries.push(OffsetEntry {
            doc_id: doc.doc_id.clone(),
            offset,
            len: record.len() as u64,
        });
        offset += record.len() as u64;
        seen.insert(doc.doc_id, ());
        accepted += 1;
    }
    writer.flush()?;

    let stats = CorpusStats {
        document_count: accepted,
        rejected_count: rejected,
        byte_size: offset,
    };
    serde_json::to_writer(BufWriter::new(File::create(dir.join(OFFSETS_FILE))?), &entries)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join(STATS_FILE))?), &stats)?;
    Ok(stats)
}

/// Read access to an ingested corpus. Immutable once opened; reads go through
/// positioned I/O on the document file, so a store is safe to share across
/// threads without locking.
pub struct CorpusStore {
    dir: PathBuf,
    file: File,
    // ingest order preserved for deterministic iteration
    order: Vec<(String, u64, u64)>,
    lookup: HashMap<String, (u64, u64)>,
    stats: CorpusStats,
}

impl CorpusStore {
    pub fn open(dir: &Path) -> Result<CorpusStore> {
        let entries: Vec<OffsetEntry> =
            serde_json::from_reader(std::io::BufReader::new(File::open(dir.join(OFFSETS_FILE))?))?;
        let stats: CorpusStats =
            serde_json::from_reader(std::io::BufReader::new(File::open(dir.join(STATS_FILE))?))?;
        let file = File::open(dir.join(DOCUMENTS_FILE))?;
        let mut order = Vec::with_capacity(entries.len());
        let mut lookup = HashMap::with_capacity(entries.len());
        for e in entries {
            order.push((e.doc_id.clone(), e.offset, e.len));
            lookup.insert(e.doc_id, (e.offset, e.len));
        }
        Ok(CorpusStore {
            dir: dir.to_path_buf(),
            file,
            order,
            lookup,
            stats,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.lookup.contains_key(doc_id)
    }

    /// Fetch the ingested record, byte-identical in its text fields.
    pub fn get(&self, doc_id: &str) -> Result<Document> {
        let &(offset, len) = self.lookup.get(doc_id).ok_or_else(|| Error::DocumentNotFound {
            doc_id: doc_id.to_string(),
        })?;
        self.read_record(offset, len)
    }

    /// Documents in ingest order.
    pub fn iter(&self) -> impl Iterator<Item = Result<Document>> + '_ {
        self.order
            .iter()
            .map(move |(_, offset, len)| self.read_record(*offset, *len))
    }

    /// Doc ids in ingest order.
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(|(id, _, _)| id.as_str())
    }

    fn read_record(&self, offset: u64, len: u64) -> Result<Document> {
        let mut buf = vec![0u8; len as usize];
        self.file.read_exact_at(&mut buf, offset)?;
        Ok(serde_json::from_slice(&buf)?)
    }
}
