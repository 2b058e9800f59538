//! Prompt templates.
//!
//! Templates are data, not code: each one is a TOML file with a name, system
//! text, and user text containing `{placeholder}` slots. The stock set is
//! embedded from the crate's prompts/ directory and can be overridden by
//! pointing a run at another directory. Rendering is a pure function of
//! (template, bindings) and fails loudly on an unbound placeholder.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::{Error, Result};

/// Stock template names.
pub mod names {
    /// Chain-of-thought answer, no retrieved context.
    pub const COT_ANSWER: &str = "cot_answer";
    /// Retrieval-augmented answer without citation instructions.
    pub const RAG_ANSWER: &str = "rag_answer";
    /// Retrieval-augmented answer with inline `[n]` citation instructions.
    pub const RAG_CITE_ANSWER: &str = "rag_cite_answer";
    /// Per-statement supporting-document selection.
    pub const CITE_SELECT: &str = "cite_select";
    /// Attribution judgment rubric.
    pub const ATTRIBUTION_JUDGE: &str = "attribution_judge";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn from_toml(text: &str) -> Result<PromptTemplate> {
        toml::from_str(text).map_err(|e| Error::Template(e.to_string()))
    }

    /// Placeholders referenced by the user text, in order of appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut chars = self.user.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c != '{' {
                continue;
            }
            if matches!(chars.peek(), Some((_, '{'))) {
                chars.next(); // escaped brace
                continue;
            }
            if let Some(end) = self.user[i + 1..].find('}') {
                let name = &self.user[i + 1..i + 1 + end];
                if !name.is_empty()
                    && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                    && !out.contains(&name.to_string())
                {
                    out.push(name.to_string());
                }
            }
        }
        out
    }

    /// Substitute bindings into the user text. `{{` and `}}` escape literal
    /// braces. Returns (system, user).
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<(String, String)> {
        let mut out = String::with_capacity(self.user.len());
        let mut rest = self.user.as_str();
        loop {
            match rest.find(['{', '}']) {
                None => {
                    out.push_str(rest);
                    break;
                }
                Some(i) => {
                    out.push_str(&rest[..i]);
                    let c = rest.as_bytes()[i];
                    if c == b'}' {
                        if rest[i + 1..].starts_with('}') {
                            out.push('}');
                            rest = &rest[i + 2..];
                            continue;
                        }
                        return Err(Error::Template(format!(
                            "unmatched '}}' in template {}",
                            self.name
                        )));
                    }
                    if rest[i + 1..].starts_with('{') {
                        out.push('{');
                        rest = &rest[i + 2..];
                        continue;
                    }
                    let close = rest[i + 1..].find('}').ok_or_else(|| {
                        Error::Template(format!("unmatched '{{' in template {}", self.name))
                    })?;
                    let name = &rest[i + 1..i + 1 + close];
                    let value = bindings.get(name).ok_or(Error::UnboundPlaceholder {
                        name: name.to_string(),
                    })?;
                    out.push_str(value);
                    rest = &rest[i + 1 + close + 1..];
                }
            }
        }
        Ok((self.system.clone(), out))
    }
}

/// A named set of templates for one run.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptSet {
    /// The stock templates shipped with the crate.
    pub fn builtin() -> PromptSet {
        let sources = [
            include_str!("../../prompts/cot_answer.toml"),
            include_str!("../../prompts/rag_answer.toml"),
            include_str!("../../prompts/rag_cite_answer.toml"),
            include_str!("../../prompts/cite_select.toml"),
            include_str!("../../prompts/attribution_judge.toml"),
        ];
        let mut templates = BTreeMap::new();
        for src in sources {
            let t = PromptTemplate::from_toml(src).expect("builtin template parses");
            templates.insert(t.name.clone(), t);
        }
        PromptSet { templates }
    }

    /// Builtin templates with overrides loaded from `*.toml` files in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<PromptSet> {
        let mut set = PromptSet::builtin();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "toml") {
                let t = PromptTemplate::from_toml(&std::fs::read_to_string(&path)?)?;
                set.templates.insert(t.name.clone(), t);
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate> {
        self.templates
            .get(name)
            .ok_or_else(|| Error::Template(format!("unknown template: {name}")))
    }
}

/// Render retrieved documents as the numbered block injected into prompts:
/// `Document [i] (Title: ..., PMID: ...): <abstract>`, one per line, numbered
/// 1..n in input order. Marker indices in generated answers refer to these
/// numbers.
pub fn format_document_block(docs: &[Document]) -> String {
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            format!(
                "Document [{}] (Title: {}, PMID: {}): {}",
                i + 1,
                d.title,
                d.doc_id,
                d.abstract_text
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Convenience for binding maps.
pub fn bindings<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
