#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const CORPUS: &str = r#"{"doc_id":"d01","title":"Benny Hill","text":"English comedian and actor"}
{"doc_id":"d02","title":"Hill Street Blues","text":"American police drama series"}
{"doc_id":"d03","title":"Benny Goodman","text":"American jazz clarinetist and bandleader"}
{"doc_id":"d04","title":"Blues Brothers","text":"American blues and soul revivalist band"}
{"doc_id":"d05","title":"Savage (1973 TV film)","text":"American television film"}
{"doc_id":"d06","title":"The Who","text":"English rock band formed in London"}
{"doc_id":"d07","title":"My Generation","text":"Song by the English rock band The Who"}
{"doc_id":"d08","title":"London","text":"Capital city of England"}
{"doc_id":"d09","title":"Jazz","text":"Music genre that originated in New Orleans"}
{"doc_id":"d10","title":"Police procedural","text":"Subgenre of detective fiction"}
{"doc_id":"d11","title":"Clarinet","text":"Woodwind instrument with a single reed"}
{"doc_id":"d12","title":"Comedy","text":"Genre of fiction intended to be humorous"}
"#;

pub const QUERIES: &str = r#"{"qid":"q1","query":"english comedian benny","gold_ids":["d01"],"genre_candidates":["d01","d03"]}
{"qid":"q2","query":"american police drama hill street","gold_ids":["d02"],"genre_candidates":["d10","d02"]}
{"qid":"q3","query":"jazz clarinetist bandleader","gold_ids":["d03"]}
{"qid":"q4","query":"rock band that wrote my generation","gold_ids":["d06","d07"],"genre_candidates":["d07"]}
{"qid":"q5","query":"television film savage 1973","gold_ids":["d05"],"genre_candidates":["d05","d12"]}
"#;

pub fn write_fixture(dir: &Path) {
    std::fs::write(dir.join("corpus.jsonl"), CORPUS).unwrap();
    std::fs::write(dir.join("queries.jsonl"), QUERIES).unwrap();
}

/// Runs the binary in `dir` with informational logging silenced.
pub fn titlerank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_titlerank"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = titlerank(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// index -> init-model -> retrieve -> rerank -> eval with default paths.
pub fn run_pipeline(dir: &Path, extra: &[&str]) {
    for cmd in ["index", "init-model", "retrieve", "rerank", "eval"] {
        let mut args = vec![cmd];
        args.extend_from_slice(extra);
        ok(dir, &args);
    }
}
