use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A TSV file waiting to be written.
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub notes: Vec<String>,
    pub body: String,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.to_vec(),
            notes: Vec::new(),
            body: String::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn row(&mut self, values: &[String]) {
        self.body.push_str(&values.join("\t"));
        self.body.push('\n');
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun an invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects parameters and tables for one run, then writes them with the manifest.
pub struct Run {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub tables: Vec<Table>,
}

impl Run {
    pub fn new(subcommand: &str, argv: Vec<String>) -> Self {
        Run {
            subcommand: subcommand.to_string(),
            argv,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            seed: None,
            tables: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Writes every table and the manifest into `dir`; returns the written paths.
    pub fn finish(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let manifest_name = format!("{}.manifest.json", self.subcommand.replace(' ', "_"));
        let manifest = RunManifest {
            tool: "tangency",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand.clone(),
            argv: self.argv,
            parameters: self.parameters,
            inputs: self.inputs,
            seed: self.seed,
            outputs: self.tables.iter().map(|t| t.name.clone()).collect(),
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        let digest = sha256_hex(json.as_bytes());
        let mut written = Vec::new();
        for table in &self.tables {
            let mut text = String::new();
            writeln!(text, "# tangency {} manifest_sha256={digest}", self.subcommand)?;
            for note in &table.notes {
                writeln!(text, "# {note}")?;
            }
            writeln!(text, "# {}", table.columns.join("\t"))?;
            text.push_str(&table.body);
            let path = dir.join(&table.name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        let path = dir.join(manifest_name);
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(written)
    }
}

/// Shortest round-trip formatting for TSV cells.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
