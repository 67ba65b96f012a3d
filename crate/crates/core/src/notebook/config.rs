use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_yaml::Value as Yaml;

use super::document::{Cell, CellKind, NotebookDocument};
use super::NotebookError;
use crate::report::{ValidationReport, Violation, ViolationKind};

pub const CONFIG_TAG: &str = "app-config";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidgetKind {
    Text,
    Dropdown,
    Slider,
    File,
}

impl WidgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WidgetKind::Text => "text",
            WidgetKind::Dropdown => "dropdown",
            WidgetKind::Slider => "slider",
            WidgetKind::File => "file",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "text" => Some(WidgetKind::Text),
            "dropdown" => Some(WidgetKind::Dropdown),
            "slider" => Some(WidgetKind::Slider),
            "file" => Some(WidgetKind::File),
            _ => None,
        }
    }
}

impl fmt::Display for WidgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parameter value: free text, a dropdown choice, a slider number, or a
/// content-store reference for file inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            ParamValue::Number(_) => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            ParamValue::Number(n) => Some(*n),
            ParamValue::Text(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Text(s) => f.write_str(s),
            ParamValue::Number(n) => f.write_str(&format_number(*n)),
        }
    }
}

/// Integral values print without a fractional part.
pub(crate) fn format_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 9.0e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub name: String,
    pub widget: WidgetKind,
    pub label: String,
    pub default: Option<ParamValue>,
    pub choices: Vec<String>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub step: Option<f64>,
    pub accept: Vec<String>,
}

impl InputSpec {
    pub fn new(name: &str, widget: WidgetKind) -> Self {
        InputSpec {
            name: name.to_string(),
            widget,
            label: name.to_string(),
            default: None,
            choices: Vec::new(),
            min: None,
            max: None,
            step: None,
            accept: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppConfig {
    pub title: String,
    pub description: Option<String>,
    pub inputs: Vec<InputSpec>,
}

impl AppConfig {
    pub fn input(&self, name: &str) -> Option<&InputSpec> {
        self.inputs.iter().find(|i| i.name == name)
    }
}

/// The config cell is the first cell, when it is a raw cell that is either
/// tagged `app-config` or starts with a `---` line.
pub fn config_cell_index(nb: &NotebookDocument) -> Option<usize> {
    let first = nb.cells.first()?;
    let starts_with_fence = first.source.lines().next().map(str::trim_end) == Some("---");
    (first.kind == CellKind::Raw && (first.has_tag(CONFIG_TAG) || starts_with_fence)).then_some(0)
}

pub fn extract_app_config(nb: &NotebookDocument) -> Result<AppConfig, NotebookError> {
    let idx = config_cell_index(nb).ok_or(NotebookError::NoConfigCell)?;
    let (body, line_offset) = yaml_body(&nb.cells[idx]);
    let doc: Yaml = serde_yaml::from_str(&body).map_err(|e| NotebookError::Yaml {
        line: e.location().map(|l| l.line() + line_offset).unwrap_or(0),
        reason: e.to_string(),
    })?;
    config_from_yaml(&doc)
}

/// Strip optional `---` fences. Returns the body and the number of source
/// lines that precede it.
fn yaml_body(cell: &Cell) -> (String, usize) {
    let lines: Vec<&str> = cell.source.lines().collect();
    let mut start = 0;
    let mut end = lines.len();
    if lines.first().map(|l| l.trim_end()) == Some("---") {
        start = 1;
        if let Some(close) = lines[1..]
            .iter()
            .position(|l| matches!(l.trim_end(), "---" | "..."))
        {
            end = close + 1;
        }
    }
    (lines[start..end].join("\n"), start)
}

fn schema_err(path: impl Into<String>, reason: impl Into<String>) -> NotebookError {
    NotebookError::Schema {
        path: path.into(),
        reason: reason.into(),
    }
}

fn config_from_yaml(doc: &Yaml) -> Result<AppConfig, NotebookError> {
    let map = doc
        .as_mapping()
        .ok_or_else(|| schema_err("$", "app config must be a mapping"))?;
    for key in map.keys() {
        match key.as_str() {
            Some("title" | "description" | "inputs") => {}
            _ => return Err(schema_err("$", format!("unknown key {}", yaml_key(key)))),
        }
    }
    let title = match map.get("title") {
        Some(v) => scalar_text(v).ok_or_else(|| schema_err("title", "must be text"))?,
        None => return Err(schema_err("title", "missing required key")),
    };
    let description = match map.get("description") {
        None | Some(Yaml::Null) => None,
        Some(v) => Some(scalar_text(v).ok_or_else(|| schema_err("description", "must be text"))?),
    };
    let inputs = match map.get("inputs") {
        None | Some(Yaml::Null) => Vec::new(),
        Some(Yaml::Sequence(items)) => items
            .iter()
            .enumerate()
            .map(|(i, item)| input_from_yaml(&format!("inputs[{i}]"), item))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(schema_err("inputs", "must be a list")),
    };
    Ok(AppConfig {
        title,
        description,
        inputs,
    })
}

fn input_from_yaml(path: &str, item: &Yaml) -> Result<InputSpec, NotebookError> {
    let map = item
        .as_mapping()
        .ok_or_else(|| schema_err(path, "input must be a mapping"))?;
    let at = |key: &str| format!("{path}.{key}");
    for key in map.keys() {
        match key.as_str() {
            Some("name" | "widget" | "label" | "default" | "choices" | "min" | "max" | "step" | "accept") => {}
            _ => return Err(schema_err(path, format!("unknown key {}", yaml_key(key)))),
        }
    }
    let name = match map.get("name") {
        Some(v) => scalar_text(v).ok_or_else(|| schema_err(at("name"), "must be text"))?,
        None => return Err(schema_err(at("name"), "missing required key")),
    };
    let widget = match map.get("widget") {
        Some(v) => {
            let s = v.as_str().ok_or_else(|| schema_err(at("widget"), "must be text"))?;
            WidgetKind::parse(s)
                .ok_or_else(|| schema_err(at("widget"), format!("unknown widget kind {s:?}")))?
        }
        None => return Err(schema_err(at("widget"), "missing required key")),
    };
    let label = match map.get("label") {
        Some(v) => scalar_text(v).ok_or_else(|| schema_err(at("label"), "must be text"))?,
        None => name.clone(),
    };
    let default = match map.get("default") {
        None | Some(Yaml::Null) => None,
        Some(Yaml::Number(n)) => Some(ParamValue::Number(
            n.as_f64().ok_or_else(|| schema_err(at("default"), "number out of range"))?,
        )),
        Some(v) => Some(ParamValue::Text(
            scalar_text(v).ok_or_else(|| schema_err(at("default"), "must be a scalar"))?,
        )),
    };
    let number = |key: &str| -> Result<Option<f64>, NotebookError> {
        match map.get(key) {
            None | Some(Yaml::Null) => Ok(None),
            Some(Yaml::Number(n)) => Ok(n.as_f64()),
            Some(_) => Err(schema_err(at(key), "must be a number")),
        }
    };
    let text_list = |key: &str| -> Result<Vec<String>, NotebookError> {
        match map.get(key) {
            None | Some(Yaml::Null) => Ok(Vec::new()),
            Some(Yaml::Sequence(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    scalar_text(v).ok_or_else(|| schema_err(format!("{path}.{key}[{i}]"), "must be text"))
                })
                .collect(),
            Some(_) => Err(schema_err(at(key), "must be a list")),
        }
    };
    Ok(InputSpec {
        name,
        widget,
        label,
        default,
        choices: text_list("choices")?,
        min: number("min")?,
        max: number("max")?,
        step: number("step")?,
        accept: text_list("accept")?,
    })
}

/// Strings, numbers and booleans all read as text.
fn scalar_text(v: &Yaml) -> Option<String> {
    match v {
        Yaml::String(s) => Some(s.clone()),
        Yaml::Number(n) => Some(n.to_string()),
        Yaml::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn yaml_key(key: &Yaml) -> String {
    scalar_text(key).map(|s| format!("{s:?}")).unwrap_or_else(|| "<non-scalar>".into())
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('a'..='z' | '_'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

/// Check every input rule. One violation per broken rule.
pub fn validate_app_config(cfg: &AppConfig) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |subject: &str, kind, detail: String| {
        out.push(Violation {
            subject: subject.to_string(),
            kind,
            detail,
        })
    };

    if cfg.title.trim().is_empty() {
        push("title", ViolationKind::EmptyTitle, "title must not be empty".into());
    }

    let mut seen = HashSet::new();
    for input in &cfg.inputs {
        let name = input.name.as_str();
        if !is_identifier(name) {
            push(name, ViolationKind::InvalidInputName, format!("{name:?} is not a valid identifier ([a-z_][a-z0-9_]*)"));
        }
        if !seen.insert(name) {
            push(name, ViolationKind::DuplicateInput, format!("input {name} is declared more than once"));
        }

        let misplaced: Vec<&str> = [
            ("choices", !input.choices.is_empty() && input.widget != WidgetKind::Dropdown),
            ("min", input.min.is_some() && input.widget != WidgetKind::Slider),
            ("max", input.max.is_some() && input.widget != WidgetKind::Slider),
            ("step", input.step.is_some() && input.widget != WidgetKind::Slider),
            ("accept", !input.accept.is_empty() && input.widget != WidgetKind::File),
        ]
        .into_iter()
        .filter_map(|(k, bad)| bad.then_some(k))
        .collect();
        if !misplaced.is_empty() {
            push(
                name,
                ViolationKind::MisplacedParameter,
                format!("{} not allowed on a {} widget", misplaced.join(", "), input.widget),
            );
        }

        match input.widget {
            WidgetKind::Text => {
                if matches!(input.default, Some(ParamValue::Number(_))) {
                    push(name, ViolationKind::InvalidDefault, "text default must be text".into());
                }
            }
            WidgetKind::Dropdown => {
                if input.choices.is_empty() {
                    push(name, ViolationKind::EmptyChoices, "dropdown needs at least one choice".into());
                }
                match &input.default {
                    Some(ParamValue::Text(d)) if !input.choices.contains(d) => {
                        push(name, ViolationKind::DefaultNotInChoices, format!("default {d:?} is not one of the choices"));
                    }
                    Some(ParamValue::Number(n)) => {
                        push(name, ViolationKind::DefaultNotInChoices, format!("default {} is not one of the choices", format_number(*n)));
                    }
                    _ => {}
                }
            }
            WidgetKind::Slider => {
                match (input.min, input.max) {
                    (Some(lo), Some(hi)) if lo < hi => {
                        if let Some(d) = &input.default {
                            match d.as_number() {
                                Some(x) if x >= lo && x <= hi => {}
                                Some(x) => push(name, ViolationKind::DefaultOutOfRange, format!("default {} outside [{}, {}]", format_number(x), format_number(lo), format_number(hi))),
                                None => push(name, ViolationKind::InvalidDefault, "slider default must be a number".into()),
                            }
                        }
                    }
                    (Some(lo), Some(hi)) => push(name, ViolationKind::InvalidRange, format!("min {} must be below max {}", format_number(lo), format_number(hi))),
                    _ => push(name, ViolationKind::InvalidRange, "slider needs both min and max".into()),
                }
                match input.step {
                    Some(s) if s > 0.0 => {}
                    Some(s) => push(name, ViolationKind::InvalidStep, format!("step {} must be positive", format_number(s))),
                    None => push(name, ViolationKind::InvalidStep, "slider needs a step".into()),
                }
            }
            WidgetKind::File => {
                if input.default.is_some() {
                    push(name, ViolationKind::FileDefault, "file inputs cannot have a default".into());
                }
            }
        }
    }
    ValidationReport::from_violations(out)
}
