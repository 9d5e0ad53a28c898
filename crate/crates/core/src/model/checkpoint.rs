//! Checkpoint file: a single JSON document
//!
//! ```text
//! {"format": "titlerank-checkpoint", "version": 1, "params": { "config": {...}, "seed": N,
//!   "embedding": {"shape": [..], "data": [..]}, ... }}
//! ```
//!
//! Floats are written in shortest round-trip form and parsed with exact
//! round-tripping, so save followed by load reproduces every bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "titlerank-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointRef<'a> {
    format: &'a str,
    version: u32,
    params: &'a ModelParams,
}

#[derive(Deserialize)]
struct CheckpointOwned {
    format: String,
    version: u32,
    params: ModelParams,
}

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<()> {
    serde_json::to_writer(
        &mut w,
        &CheckpointRef {
            format: CHECKPOINT_FORMAT,
            version: CHECKPOINT_VERSION,
            params,
        },
    )?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let file = File::open(path)?;
    let ck: CheckpointOwned = serde_json::from_reader(BufReader::new(file))?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(Error::Format(format!(
            "expected format {CHECKPOINT_FORMAT:?}, found {:?}",
            ck.format
        )));
    }
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            ck.version
        )));
    }
    ck.params.config.validate()?;
    let reference = super::init_model(&ck.params.config, 0)?;
    let expected = reference.named_arrays();
    let found = ck.params.named_arrays();
    if expected.len() != found.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} parameter arrays, config implies {}",
            found.len(),
            expected.len()
        )));
    }
    for ((name, want), (_, got)) in expected.iter().zip(&found) {
        if want.len() != got.len() {
            return Err(Error::Format(format!(
                "{name}: {} values, config implies {}",
                got.len(),
                want.len()
            )));
        }
    }
    Ok(ck.params)
}
