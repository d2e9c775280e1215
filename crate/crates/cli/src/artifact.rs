//! Artifact formatting and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::LoadedConfig;

/// One output file, fully rendered in memory before anything touches disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// `# `-prefixed config echo placed at the top of every CSV.
pub fn csv_preamble(cfg: &LoadedConfig, seed: u64) -> String {
    let mut out = String::new();
    for line in cfg.source.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!("# resolved_seed = {seed}\n"));
    out
}

pub fn csv(cfg: &LoadedConfig, seed: u64, name: String, header: &str, rows: impl IntoIterator<Item = String>) -> Artifact {
    let mut text = csv_preamble(cfg, seed);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    Artifact {
        name,
        bytes: text.into_bytes(),
    }
}

#[derive(Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    seed: u64,
    config: &'a str,
    result: &'a T,
}

/// JSON with fixed key order: `schema_version, kind, seed, config, result`.
pub fn json<T: Serialize>(cfg: &LoadedConfig, seed: u64, name: String, result: &T) -> Artifact {
    let env = JsonEnvelope {
        schema_version: cfg.config.schema_version,
        kind: cfg.config.kind.name(),
        seed,
        config: &cfg.source,
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&env).expect("artifact serialization");
    bytes.push(b'\n');
    Artifact { name, bytes }
}

/// Writes each artifact to a temporary file in `dir` and renames it into
/// place, so a final path never holds a partial file.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&a.bytes)?;
        tmp.as_file().sync_all()?;
        let target = dir.join(&a.name);
        tmp.persist(&target).map_err(|e| e.error)?;
        written.push(target);
    }
    Ok(written)
}
