//! Notebook documents, the YAML app-config header, widget schemas and
//! parameter binding.

mod bind;
mod config;
mod document;
mod schema;

pub use bind::{bind_parameters, read_bindings, PARAMETERS_TAG};
pub use config::{
    config_cell_index, extract_app_config, validate_app_config, AppConfig, InputSpec, ParamValue,
    WidgetKind, CONFIG_TAG,
};
pub use document::{parse_notebook, Cell, CellKind, NotebookDocument};
pub use schema::{generate_widget_schema, Control, WidgetSchema, SCHEMA_VERSION};

use crate::report::ValidationReport;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NotebookError {
    #[error("malformed notebook: {0}")]
    MalformedDocument(String),
    #[error("unsupported notebook format {0}.{1} (need 4.x)")]
    UnsupportedVersion(u32, u32),
    #[error("the first cell is not an app-config raw cell")]
    NoConfigCell,
    #[error("app config YAML, line {line}: {reason}")]
    Yaml { line: usize, reason: String },
    #[error("app config {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("app config is invalid ({} violations)", .0.violations.len())]
    InvalidConfig(ValidationReport),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("value {value:?} is outside the domain of {name}")]
    ValueOutOfDomain { name: String, value: String },
    #[error("no value and no default for {0}")]
    MissingRequired(String),
}
