//! Versioned on-disk documents: solutions, the solve manifest and the
//! evaluation summary.

use std::path::{Path, PathBuf};

use lexcvar::exec::SummaryRow;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DOC_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Serialize)]
struct DocOut<'a, T> {
    version: u32,
    kind: &'a str,
    config_hash: &'a str,
    payload: &'a T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocIn<T> {
    #[allow(dead_code)]
    version: u32,
    kind: String,
    config_hash: String,
    payload: T,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

fn read_versioned(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| CliError::Document {
        path: path.into(),
        message: e.to_string(),
    })?;
    match probe.version {
        Some(DOC_VERSION) => Ok(text),
        Some(v) => Err(CliError::Document {
            path: path.into(),
            message: format!("unsupported document version {v} (expected {DOC_VERSION})"),
        }),
        None => Err(CliError::Document {
            path: path.into(),
            message: "missing document version".into(),
        }),
    }
}

fn parse_doc<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Document {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Document {
        path: path.into(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn save_solution<T: Serialize>(
    path: &Path,
    kind: &str,
    config_hash: &str,
    payload: &T,
) -> Result<(), CliError> {
    write_json(
        path,
        &DocOut {
            version: DOC_VERSION,
            kind,
            config_hash,
            payload,
        },
    )
}

/// Loads a solution document, checking version, kind and config hash.
pub fn load_solution<T: DeserializeOwned>(
    path: &Path,
    kind: &str,
    config_hash: &str,
) -> Result<T, CliError> {
    let text = read_versioned(path)?;
    let doc: DocIn<T> = parse_doc(path, &text)?;
    if doc.kind != kind {
        return Err(CliError::Document {
            path: path.into(),
            message: format!("expected a `{kind}` document, found `{}`", doc.kind),
        });
    }
    if doc.config_hash != config_hash {
        return Err(CliError::Stale {
            dir: path.parent().unwrap_or(Path::new("")).into(),
            found: doc.config_hash,
            expected: config_hash.into(),
        });
    }
    Ok(doc.payload)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexEntry {
    pub alpha: f64,
    pub file: String,
    pub seconds: f64,
    /// Optimal CVaR `V_CV(s0, α)` on the model's cost scale.
    pub optimal_cvar: f64,
    pub var: f64,
    /// Whether VaR covers the minimum worst-case cost from the initial
    /// state; when false the switch policy is only used after the first
    /// zeroed history.
    pub root_feasible: bool,
    /// `V'(s0, 0)`; absent when the root is infeasible.
    pub lex_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    pub file: String,
    pub seconds: f64,
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub config_hash: String,
    pub model_hash: String,
    pub domain: String,
    pub states: usize,
    pub actions: usize,
    pub alphas: Vec<f64>,
    pub report_offset: f64,
    pub ev_value: f64,
    pub worst_value: f64,
    pub ev: StageEntry,
    pub worst: StageEntry,
    pub cvar: StageEntry,
    pub lex: Vec<LexEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = read_versioned(&path)?;
        parse_doc(&path, &text)
    }

    pub fn lex_for(&self, alpha: f64) -> Option<&LexEntry> {
        self.lex.iter().find(|e| e.alpha == alpha)
    }
}

/// Machine-readable companion of `summary.csv`, consumed by `compare`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDoc {
    pub version: u32,
    pub domain: String,
    pub model_hash: String,
    pub config_hash: String,
    pub rows: Vec<SummaryRow>,
}

impl SummaryDoc {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_versioned(path)?;
        parse_doc(path, &text)
    }
}

pub fn lex_file_name(alpha: f64) -> String {
    format!("lex_a{alpha}.json")
}

/// Files written by a command so far; removed again if the command fails.
#[derive(Debug, Default)]
pub struct Outputs {
    paths: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
}

impl Outputs {
    pub fn prepare_dir(&mut self, dir: &Path) -> Result<(), CliError> {
        if !dir.exists() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            self.created_dir = Some(dir.into());
        }
        Ok(())
    }

    pub fn track(&mut self, path: PathBuf) -> PathBuf {
        self.paths.push(path.clone());
        path
    }

    pub fn discard(self) {
        for p in &self.paths {
            let _ = std::fs::remove_file(p);
        }
        if let Some(d) = self.created_dir {
            let _ = std::fs::remove_dir(d);
        }
    }
}
