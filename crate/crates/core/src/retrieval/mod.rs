//! First-stage retrieval: a title corpus, an Okapi BM25 index, ingestion of
//! precomputed generative-retriever candidate lists, candidate merging and
//! training negative sampling.

mod bm25;
mod candidates;

pub use bm25::{bm25_search, build_bm25_index, Bm25Index, IndexField, Posting, BM25_B, BM25_K1};
pub use candidates::{
    merge_candidates, sample_negatives, Candidate, CandidateSource, NegativeSample,
    DEFAULT_N_GENRE_NEGATIVES, DEFAULT_N_RANDOM_NEGATIVES,
};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    #[serde(default)]
    pub text: String,
}

/// A query line: `{"qid", "query", "gold_ids", "genre_candidates"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub qid: String,
    pub query: String,
    #[serde(default)]
    pub gold_ids: Vec<String>,
    /// `None` when the field is absent from the input line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre_candidates: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.title.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "document {:?} has an empty title",
                    d.doc_id
                )));
            }
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(d.doc_id.clone()));
            }
        }
        Ok(Self { docs, by_id })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn resolve(&self, doc_id: &str) -> Result<&Document> {
        self.get(doc_id)
            .ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }
}

/// Reads a JSON-lines file; blank lines are skipped and parse failures name
/// the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    Corpus::new(read_jsonl(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Benny Hill"), vec!["benny", "hill"]);
        assert_eq!(
            tokenize("Savage (1973 TV film)"),
            vec!["savage", "1973", "tv", "film"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" -- ").is_empty());
    }

    #[test]
    fn corpus_rejects_duplicates() {
        let d = |id: &str| Document {
            doc_id: id.into(),
            title: "t".into(),
            text: String::new(),
        };
        assert!(matches!(
            Corpus::new(vec![d("a"), d("b"), d("a")]),
            Err(Error::DuplicateDocId(id)) if id == "a"
        ));
        let c = Corpus::new(vec![d("a"), d("b")]).unwrap();
        assert!(c.contains("b"));
        assert!(matches!(c.resolve("zz"), Err(Error::UnknownDocId(_))));
    }

    #[test]
    fn jsonl_errors_cite_line_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"doc_id":"a","title":"A","text":""}}"#).unwrap();
        writeln!(f, r#"{{"doc_id":"b","title":"B"}}"#).unwrap();
        writeln!(f, r#"{{"doc_id": oops"#).unwrap();
        f.flush().unwrap();
        let err = read_corpus(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
