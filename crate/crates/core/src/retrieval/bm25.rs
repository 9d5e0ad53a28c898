use std::collections::{BTreeMap, HashMap};
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{tokenize, Candidate, CandidateSource, Corpus};
use crate::error::{Error, Result};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

const MAGIC: &[u8; 8] = b"TRBM25\0\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IndexField {
    Title,
    #[default]
    TitlePlusText,
}

impl IndexField {
    fn tag(self) -> u8 {
        match self {
            IndexField::Title => 0,
            IndexField::TitlePlusText => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(IndexField::Title),
            1 => Ok(IndexField::TitlePlusText),
            t => Err(Error::Format(format!("unknown index field tag {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    pub field: IndexField,
    pub k1: f64,
    pub b: f64,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<u32>,
    pub avg_doc_length: f64,
    /// Term to postings sorted by doc ordinal.
    pub postings: BTreeMap<String, Vec<Posting>>,
}

fn field_text(doc: &super::Document, field: IndexField) -> String {
    match field {
        IndexField::Title => doc.title.clone(),
        IndexField::TitlePlusText => format!("{} {}", doc.title, doc.text),
    }
}

pub fn build_bm25_index(corpus: &Corpus, field: IndexField) -> Result<Bm25Index> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(corpus.len());
    for (ordinal, doc) in corpus.docs().iter().enumerate() {
        let tokens = tokenize(&field_text(doc, field));
        doc_lengths.push(tokens.len() as u32);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting {
                doc: ordinal as u32,
                tf: count,
            });
        }
    }
    let doc_ids = corpus.docs().iter().map(|d| d.doc_id.clone()).collect();
    Ok(Bm25Index::assemble(
        field,
        BM25_K1,
        BM25_B,
        doc_ids,
        doc_lengths,
        postings,
    ))
}

impl Bm25Index {
    fn assemble(
        field: IndexField,
        k1: f64,
        b: f64,
        doc_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Self {
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64
        };
        Self {
            field,
            k1,
            b,
            doc_ids,
            doc_lengths,
            avg_doc_length,
            postings,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`
    pub fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Saturated term-frequency factor for one document.
    pub fn tf_weight(&self, tf: u32, doc_len: u32) -> f64 {
        let tf = tf as f64;
        let norm = 1.0 - self.b + self.b * doc_len as f64 / self.avg_doc_length;
        tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
        out.write_u8(self.field.tag()).unwrap();
        out.write_f64::<LittleEndian>(self.k1).unwrap();
        out.write_f64::<LittleEndian>(self.b).unwrap();
        out.write_u32::<LittleEndian>(self.doc_count() as u32)
            .unwrap();
        for (id, &len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            write_str(&mut out, id);
            out.write_u32::<LittleEndian>(len).unwrap();
        }
        out.write_u32::<LittleEndian>(self.postings.len() as u32)
            .unwrap();
        for (term, list) in &self.postings {
            write_str(&mut out, term);
            out.write_u32::<LittleEndian>(list.len() as u32).unwrap();
            for p in list {
                out.write_u32::<LittleEndian>(p.doc).unwrap();
                out.write_u32::<LittleEndian>(p.tf).unwrap();
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a BM25 index file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported index version {version}"
            )));
        }
        let field = IndexField::from_tag(r.read_u8()?)?;
        let k1 = r.read_f64::<LittleEndian>()?;
        let b = r.read_f64::<LittleEndian>()?;
        let n_docs = r.read_u32::<LittleEndian>()? as usize;
        let mut doc_ids = Vec::with_capacity(n_docs);
        let mut doc_lengths = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            doc_ids.push(read_str(&mut r)?);
            doc_lengths.push(r.read_u32::<LittleEndian>()?);
        }
        let n_terms = r.read_u32::<LittleEndian>()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_str(&mut r)?;
            let n = r.read_u32::<LittleEndian>()? as usize;
            let mut list = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = r.read_u32::<LittleEndian>()?;
                let tf = r.read_u32::<LittleEndian>()?;
                if doc as usize >= n_docs {
                    return Err(Error::Format(format!("posting for doc {doc} of {n_docs}")));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Format("trailing bytes after index".into()));
        }
        Ok(Self::assemble(field, k1, b, doc_ids, doc_lengths, postings))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LittleEndian>(s.len() as u32).unwrap();
    out.extend_from_slice(s.as_bytes());
}

fn read_str(r: &mut Cursor<&[u8]>) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(format!("invalid utf-8 in index: {e}")))
}

/// Okapi BM25 top-`k` over the distinct query terms. Documents matching no
/// term are not returned; ties are broken by `doc_id` ascending.
pub fn bm25_search(index: &Bm25Index, query: &str, k: usize) -> Result<Vec<Candidate>> {
    if index.doc_count() == 0 {
        return Err(Error::EmptyIndex);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut terms = tokenize(query);
    terms.sort();
    terms.dedup();

    let mut scores: HashMap<u32, f64> = HashMap::new();
    for term in &terms {
        let Some(list) = index.postings.get(term) else {
            continue;
        };
        let idf = index.idf(list.len());
        for p in list {
            let len = index.doc_lengths[p.doc as usize];
            *scores.entry(p.doc).or_default() += idf * index.tf_weight(p.tf, len);
        }
    }

    let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.doc_ids[a.0 as usize].cmp(&index.doc_ids[b.0 as usize]))
    });
    ranked.truncate(k);
    Ok(ranked
        .into_iter()
        .map(|(doc, score)| Candidate {
            doc_id: index.doc_ids[doc as usize].clone(),
            source: CandidateSource::Bm25,
            first_stage_score: score,
        })
        .collect())
}
