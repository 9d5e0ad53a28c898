//! Run files: one tab-separated line per ranked document,
//! `qid <TAB> doc_id <TAB> rank <TAB> score <TAB> variant`, rank starting at 1.

use std::io::{BufRead, Write};

use super::{RankedList, RerankVariant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunLine {
    pub qid: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub variant: RerankVariant,
}

pub fn write_run<W: Write>(lists: &[RankedList], mut w: W) -> Result<()> {
    for list in lists {
        for (i, e) in list.entries.iter().enumerate() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                list.qid,
                e.doc_id,
                i + 1,
                e.score,
                list.provenance
            )?;
        }
    }
    Ok(())
}

pub fn read_run<R: BufRead>(r: R) -> Result<Vec<RunLine>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("run line {}: {what}", n + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(&format!("expected 5 fields, got {}", fields.len())));
        }
        out.push(RunLine {
            qid: fields[0].to_string(),
            doc_id: fields[1].to_string(),
            rank: fields[2]
                .parse()
                .map_err(|_| bad("rank is not an integer"))?,
            score: fields[3]
                .parse()
                .map_err(|_| bad("score is not a number"))?,
            variant: fields[4].parse().map_err(|_| bad("unknown variant"))?,
        });
    }
    Ok(out)
}
