//! Atomic artifact writing and provenance metadata.
//!
//! Every file the CLI produces carries the full [`RunConfig`] and seed. JSON
//! reports embed them in an envelope; other formats (index, JSONL, TSV,
//! checkpoint) get a `<path>.meta.json` sidecar. Files are written to a
//! temporary sibling and renamed into place, so a failed command never leaves
//! a partial output behind.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const TOOL: &str = concat!("titlerank ", env!("CARGO_PKG_VERSION"));

/// Provenance written next to non-JSON artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub artifact: String,
    pub tool: String,
    pub seed: u64,
    pub run_config: RunConfig,
}

/// A JSON report wrapped with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub artifact: String,
    pub tool: String,
    pub seed: u64,
    pub run_config: RunConfig,
    pub result: T,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `path` by streaming into a temporary file in the same directory and
/// renaming it over the target once `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}

fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn write_sidecar(path: &Path, artifact: &str, config: &RunConfig) -> anyhow::Result<()> {
    write_pretty_json(
        &sidecar_path(path),
        &ArtifactMeta {
            artifact: artifact.into(),
            tool: TOOL.into(),
            seed: config.seed,
            run_config: config.clone(),
        },
    )
}

pub fn write_report<T: Serialize>(
    path: &Path,
    artifact: &str,
    config: &RunConfig,
    result: &T,
) -> anyhow::Result<()> {
    write_pretty_json(
        path,
        &Envelope {
            artifact: artifact.into(),
            tool: TOOL.into(),
            seed: config.seed,
            run_config: config.clone(),
            result,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_fill_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.tsv");
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            anyhow::bail!("boom")
        });
        assert!(err.is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn successful_write_replaces_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("out.txt");
        write_atomic(&path, |w| Ok(w.write_all(b"one")?)).unwrap();
        write_atomic(&path, |w| Ok(w.write_all(b"two")?)).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
    }

    #[test]
    fn sidecar_sits_next_to_artifact() {
        assert_eq!(
            sidecar_path(Path::new("a/run.tsv")),
            PathBuf::from("a/run.tsv.meta.json")
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.tsv");
        let cfg = RunConfig {
            seed: 77,
            ..RunConfig::default()
        };
        write_sidecar(&path, "run", &cfg).unwrap();
        let meta: ArtifactMeta =
            serde_json::from_slice(&std::fs::read(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(meta.seed, 77);
        assert_eq!(meta.run_config, cfg);
    }
}
