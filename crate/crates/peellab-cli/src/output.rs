//! Manifest, report and data files. Every file starts with a header naming the
//! schema version and the manifest hash.

use crate::config::{Format, Keys};
use anyhow::{Context, Result};
use peellab::report::sha256_hex;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct LawInfo {
    pub fingerprint: String,
    pub source: String,
    pub beta: f64,
    pub cutoff: usize,
    pub p_q: f64,
    pub c_q: f64,
}

/// The part of the manifest that identifies a run; its hash goes into every file header.
#[derive(Debug, Clone, Serialize)]
struct Identity<'a> {
    schema: u32,
    version: &'a str,
    experiment: &'a str,
    config: &'a Keys,
    law_fingerprint: Option<&'a str>,
    master_seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub version: String,
    pub experiment: String,
    /// Resolved configuration, without keys that cannot change results (`out`, `workers`, `check`).
    pub config: Keys,
    pub law: Option<LawInfo>,
    pub master_seed: u64,
    /// Replica `i` runs on stream `(master_seed, first_stream + i)`.
    pub streams: Vec<(u64, u64)>,
    pub manifest_hash: String,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(experiment: &str, resolved: &Keys, law: Option<LawInfo>, master_seed: u64) -> Manifest {
        let mut config = resolved.clone();
        config.out = None;
        config.workers = None;
        config.check = None;
        let id = Identity {
            schema: SCHEMA,
            version: VERSION,
            experiment,
            config: &config,
            law_fingerprint: law.as_ref().map(|l| l.fingerprint.as_str()),
            master_seed,
        };
        let manifest_hash = sha256_hex(serde_json::to_string(&id).expect("identity serializes").as_bytes());
        Manifest {
            schema: SCHEMA,
            version: VERSION.to_string(),
            experiment: experiment.to_string(),
            config,
            law,
            master_seed,
            streams: Vec::new(),
            manifest_hash,
            complete: false,
            error: None,
            files: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s).with_context(|| format!("writing {}", path.display()))
    }
}

/// One cell of a data row.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    I(i64),
    U(u64),
    F(f64),
    B(bool),
}

impl Cell {
    fn text(&self) -> String {
        match *self {
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::F(x) => x.to_string(),
            Cell::B(x) => x.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match *self {
            Cell::I(x) => x.into(),
            Cell::U(x) => x.into(),
            Cell::F(x) => serde_json::Number::from_f64(x).map(Into::into).unwrap_or(serde_json::Value::Null),
            Cell::B(x) => x.into(),
        }
    }
}

/// Render a table with its header.
///
/// CSV: a `#` comment line with the header fields, then the column names.
/// JSON lines: a header object, then one object per row.
pub fn render(format: Format, manifest_hash: &str, kind: &str, extra: &[(&str, String)], columns: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            let _ = write!(out, "# peellab schema={SCHEMA} manifest={manifest_hash} kind={kind}");
            for (k, v) in extra {
                let _ = write!(out, " {k}={v}");
            }
            out.push('\n');
            out.push_str(&columns.join(","));
            out.push('\n');
            for r in rows {
                let line: Vec<String> = r.iter().map(Cell::text).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        Format::Jsonl => {
            let mut head = serde_json::Map::new();
            head.insert("schema".into(), SCHEMA.into());
            head.insert("manifest".into(), manifest_hash.into());
            head.insert("kind".into(), kind.into());
            for (k, v) in extra {
                head.insert((*k).into(), v.clone().into());
            }
            out.push_str(&serde_json::Value::Object(head).to_string());
            out.push('\n');
            for r in rows {
                let obj: serde_json::Map<String, serde_json::Value> =
                    columns.iter().zip(r).map(|(c, v)| ((*c).to_string(), v.json())).collect();
                out.push_str(&serde_json::Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    out
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    }
}

/// Output directory plus the list of files written so far.
pub struct OutDir {
    pub root: PathBuf,
    pub format: Format,
    pub manifest_hash: String,
}

impl OutDir {
    pub fn create(root: &Path, format: Format, manifest_hash: &str) -> Result<OutDir> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), format, manifest_hash: manifest_hash.to_string() })
    }

    /// Write a table to `<name>.<ext>` relative to the root; returns the entry for the manifest.
    pub fn table(&self, name: &str, kind: &str, extra: &[(&str, String)], columns: &[&str], rows: &[Vec<Cell>]) -> Result<FileEntry> {
        let rel = format!("{name}.{}", extension(self.format));
        let text = render(self.format, &self.manifest_hash, kind, extra, columns, rows);
        self.raw(&rel, &text)
    }

    pub fn raw(&self, rel: &str, text: &str) -> Result<FileEntry> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(FileEntry { path: rel.to_string(), sha256: sha256_hex(text.as_bytes()) })
    }
}
