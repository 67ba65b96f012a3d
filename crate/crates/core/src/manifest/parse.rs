use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::name::normalize_package_name;
use super::version::{Constraint, Operator};
use super::ManifestError;

/// Package ecosystems the registry knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ecosystem {
    Pypi,
    Cran,
}

impl Ecosystem {
    pub fn as_str(self) -> &'static str {
        match self {
            Ecosystem::Pypi => "pypi",
            Ecosystem::Cran => "cran",
        }
    }
}

impl fmt::Display for Ecosystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ecosystem {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pypi" => Ok(Ecosystem::Pypi),
            "cran" => Ok(Ecosystem::Cran),
            other => Err(ManifestError::UnsupportedEcosystem(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub raw_name: String,
    pub normalized_name: String,
    pub constraint: Option<Constraint>,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyManifest {
    pub ecosystem: Ecosystem,
    pub entries: Vec<ManifestEntry>,
    pub source_text: Vec<u8>,
}

impl DependencyManifest {
    pub fn normalized_names(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.normalized_name.clone())
            .collect()
    }

    /// One `name` or `nameOPversion` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.raw_name);
            if let Some(c) = &e.constraint {
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Parse a requirements-style manifest.
///
/// Blank lines and `#` comment lines are skipped; every other line is
/// `name` or `name OP version`. Extras, markers, URLs and multiple
/// clauses are rejected.
pub fn parse_manifest(text: &[u8], ecosystem: &str) -> Result<DependencyManifest, ManifestError> {
    let ecosystem: Ecosystem = ecosystem.parse()?;
    let source = std::str::from_utf8(text).map_err(|e| ManifestError::Parse {
        line_no: line_of_offset(text, e.valid_up_to()),
        reason: "not valid UTF-8".into(),
    })?;

    let mut entries = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in source.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry = parse_line(line, line_no)?;
        if let Some(first) = seen.insert(entry.normalized_name.clone(), line_no) {
            return Err(ManifestError::DuplicatePackage {
                name: entry.normalized_name,
                line_no,
                first_line_no: first,
            });
        }
        entries.push(entry);
    }
    Ok(DependencyManifest {
        ecosystem,
        entries,
        source_text: text.to_vec(),
    })
}

fn parse_line(line: &str, line_no: usize) -> Result<ManifestEntry, ManifestError> {
    let parse_err = |reason: String| ManifestError::Parse { line_no, reason };

    let name_end = line
        .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')))
        .unwrap_or(line.len());
    let raw_name = &line[..name_end];
    if raw_name.is_empty() {
        return Err(parse_err(format!("expected a package name in {line:?}")));
    }
    let normalized_name = normalize_package_name(raw_name).map_err(|e| parse_err(e.to_string()))?;

    let rest = line[name_end..].trim_start();
    let constraint = if rest.is_empty() {
        None
    } else {
        let (op, version_text) = Operator::strip_prefix(rest).ok_or_else(|| {
            parse_err(format!(
                "unexpected {:?} after package name",
                rest.chars().next().unwrap_or(' ')
            ))
        })?;
        let version_text = version_text.trim();
        if version_text.contains(|c: char| c.is_whitespace() || c == ',' || c == ';') {
            return Err(parse_err("only one version clause is allowed per line".into()));
        }
        let version = version_text
            .parse()
            .map_err(|e: ManifestError| parse_err(e.to_string()))?;
        Some(Constraint::new(op, version).map_err(|e| parse_err(e.to_string()))?)
    };

    Ok(ManifestEntry {
        raw_name: raw_name.to_string(),
        normalized_name,
        constraint,
        line_no,
    })
}

fn line_of_offset(text: &[u8], offset: usize) -> usize {
    text[..offset].iter().filter(|b| **b == b'\n').count() + 1
}
