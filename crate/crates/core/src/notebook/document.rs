use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::NotebookError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Code,
    Markdown,
    Raw,
}

impl CellKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Code => "code",
            CellKind::Markdown => "markdown",
            CellKind::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellKind,
    pub source: String,
    pub tags: Vec<String>,
}

impl Cell {
    pub fn new(kind: CellKind, source: impl Into<String>) -> Self {
        Cell {
            kind,
            source: source.into(),
            tags: Vec::new(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.push(tag.into());
        self
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

/// The subset of a v4 notebook the platform reads: cell kinds, sources
/// and tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookDocument {
    pub format_version: (u32, u32),
    pub cells: Vec<Cell>,
}

impl NotebookDocument {
    pub fn new(cells: Vec<Cell>) -> Self {
        NotebookDocument {
            format_version: (4, 5),
            cells,
        }
    }

    pub fn code_cells(&self) -> impl Iterator<Item = (usize, &Cell)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == CellKind::Code)
    }

    /// Serialize as a minimal v4 notebook with sorted keys.
    pub fn to_ipynb(&self) -> Vec<u8> {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                let mut cell = json!({
                    "cell_type": c.kind.as_str(),
                    "metadata": { "tags": c.tags },
                    "source": c.source,
                });
                if c.kind == CellKind::Code {
                    cell["execution_count"] = Value::Null;
                    cell["outputs"] = json!([]);
                }
                cell
            })
            .collect();
        let doc = json!({
            "cells": cells,
            "metadata": {},
            "nbformat": self.format_version.0,
            "nbformat_minor": self.format_version.1,
        });
        serde_json::to_vec(&doc).expect("notebook serializes")
    }
}

fn malformed(msg: impl Into<String>) -> NotebookError {
    NotebookError::MalformedDocument(msg.into())
}

pub fn parse_notebook(raw: &[u8]) -> Result<NotebookDocument, NotebookError> {
    let text = std::str::from_utf8(raw).map_err(|_| malformed("not valid UTF-8"))?;
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let obj = doc.as_object().ok_or_else(|| malformed("top level is not an object"))?;

    let major = obj
        .get("nbformat")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("missing integer nbformat"))?;
    let minor = obj
        .get("nbformat_minor")
        .and_then(Value::as_u64)
        .unwrap_or(0);
    if major != 4 {
        return Err(NotebookError::UnsupportedVersion(major as u32, minor as u32));
    }

    let cells = obj
        .get("cells")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing cells array"))?
        .iter()
        .enumerate()
        .map(|(i, c)| parse_cell(i, c))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(NotebookDocument {
        format_version: (4, minor as u32),
        cells,
    })
}

fn parse_cell(index: usize, cell: &Value) -> Result<Cell, NotebookError> {
    let kind = match cell.get("cell_type").and_then(Value::as_str) {
        Some("code") => CellKind::Code,
        Some("markdown") => CellKind::Markdown,
        Some("raw") => CellKind::Raw,
        other => return Err(malformed(format!("cell {index}: unknown cell_type {other:?}"))),
    };
    let source = match cell.get("source") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(parts)) => parts
            .iter()
            .map(|p| p.as_str().ok_or_else(|| malformed(format!("cell {index}: non-string source line"))))
            .collect::<Result<String, _>>()?,
        None => String::new(),
        Some(_) => return Err(malformed(format!("cell {index}: source must be a string or list"))),
    };
    let tags = match cell.get("metadata").and_then(|m| m.get("tags")) {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(tags)) => tags
            .iter()
            .map(|t| {
                t.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| malformed(format!("cell {index}: non-string tag")))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(malformed(format!("cell {index}: tags must be a list"))),
    };
    Ok(Cell { kind, source, tags })
}
