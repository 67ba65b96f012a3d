use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{validate_app_config, AppConfig, ParamValue, WidgetKind};
use super::NotebookError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub name: String,
    pub kind: WidgetKind,
    pub label: String,
    pub params: BTreeMap<String, Value>,
}

/// Renderable form description compiled from an app config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetSchema {
    pub app_title: String,
    pub controls: Vec<Control>,
    pub schema_version: u32,
}

impl WidgetSchema {
    /// Compact JSON with sorted object keys. Equal schemas give equal bytes.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let value = serde_json::to_value(self).expect("schema serializes");
        serde_json::to_vec(&value).expect("value serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

fn number(n: f64) -> Value {
    if n.fract() == 0.0 && n.abs() < 9.0e15 {
        Value::from(n as i64)
    } else {
        Value::from(n)
    }
}

fn param_value(v: &ParamValue) -> Value {
    match v {
        ParamValue::Text(s) => Value::from(s.clone()),
        ParamValue::Number(n) => number(*n),
    }
}

pub fn generate_widget_schema(cfg: &AppConfig) -> Result<WidgetSchema, NotebookError> {
    let report = validate_app_config(cfg);
    if !report.passed() {
        return Err(NotebookError::InvalidConfig(report));
    }
    let controls = cfg
        .inputs
        .iter()
        .map(|input| {
            let mut params = BTreeMap::new();
            if let Some(d) = &input.default {
                params.insert("default".to_string(), param_value(d));
            }
            match input.widget {
                WidgetKind::Text => {
                    params.insert("single_line".into(), Value::Bool(true));
                }
                WidgetKind::Dropdown => {
                    params.insert("choices".into(), Value::from(input.choices.clone()));
                }
                WidgetKind::Slider => {
                    // Presence is guaranteed by validation.
                    params.insert("min".into(), number(input.min.unwrap_or_default()));
                    params.insert("max".into(), number(input.max.unwrap_or_default()));
                    params.insert("step".into(), number(input.step.unwrap_or_default()));
                }
                WidgetKind::File => {
                    params.insert("accept".into(), Value::from(input.accept.clone()));
                }
            }
            Control {
                name: input.name.clone(),
                kind: input.widget,
                label: input.label.clone(),
                params,
            }
        })
        .collect();
    Ok(WidgetSchema {
        app_title: cfg.title.clone(),
        controls,
        schema_version: SCHEMA_VERSION,
    })
}
