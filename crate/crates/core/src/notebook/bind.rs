use std::collections::BTreeMap;

use super::config::{config_cell_index, AppConfig, InputSpec, ParamValue, WidgetKind};
use super::document::{Cell, CellKind, NotebookDocument};
use super::NotebookError;

/// Tag carried by the generated assignment cell.
pub const PARAMETERS_TAG: &str = "injected-parameters";
const HEADER: &str = "# Parameters injected by appforge";

/// Insert one generated code cell right after the config cell that assigns
/// every declared input, in declared order. Missing values fall back to
/// defaults. Author cells are left untouched.
pub fn bind_parameters(
    nb: &NotebookDocument,
    values: &BTreeMap<String, ParamValue>,
    cfg: &AppConfig,
) -> Result<NotebookDocument, NotebookError> {
    if let Some(unknown) = values.keys().find(|k| cfg.input(k).is_none()) {
        return Err(NotebookError::UnknownParameter(unknown.clone()));
    }
    let config_idx = config_cell_index(nb).ok_or(NotebookError::NoConfigCell)?;

    let mut source = String::from(HEADER);
    for input in &cfg.inputs {
        let value = match values.get(&input.name).or(input.default.as_ref()) {
            Some(v) => v,
            None => return Err(NotebookError::MissingRequired(input.name.clone())),
        };
        check_domain(input, value)?;
        source.push('\n');
        source.push_str(&input.name);
        source.push_str(" = ");
        source.push_str(&literal(value));
    }
    source.push('\n');

    let mut out = nb.clone();
    out.cells.insert(
        config_idx + 1,
        Cell::new(CellKind::Code, source).with_tag(PARAMETERS_TAG),
    );
    Ok(out)
}

fn check_domain(input: &InputSpec, value: &ParamValue) -> Result<(), NotebookError> {
    let ok = match (input.widget, value) {
        (WidgetKind::Text, ParamValue::Text(_)) => true,
        (WidgetKind::Dropdown, ParamValue::Text(v)) => input.choices.contains(v),
        (WidgetKind::Slider, ParamValue::Number(x)) => {
            x.is_finite()
                && input.min.is_none_or(|lo| *x >= lo)
                && input.max.is_none_or(|hi| *x <= hi)
        }
        (WidgetKind::File, ParamValue::Text(r)) => is_content_ref(r),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(NotebookError::ValueOutOfDomain {
            name: input.name.clone(),
            value: value.to_string(),
        })
    }
}

/// File inputs carry the content-store address of an uploaded artifact.
fn is_content_ref(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Source literal for a value. Text uses JSON string escaping, which both
/// Python and R accept.
fn literal(value: &ParamValue) -> String {
    match value {
        ParamValue::Text(s) => serde_json::to_string(s).expect("string serializes"),
        ParamValue::Number(_) => value.to_string(),
    }
}

/// Read back the `name = literal` assignments of a generated cell.
pub fn read_bindings(cell: &Cell) -> BTreeMap<String, ParamValue> {
    cell.source
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = "))
        .filter_map(|(name, lit)| {
            let value = if lit.starts_with('"') {
                ParamValue::Text(serde_json::from_str(lit).ok()?)
            } else {
                ParamValue::Number(lit.parse().ok()?)
            };
            Some((name.to_string(), value))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notebook::config::extract_app_config;
    use proptest::prelude::*;

    fn sirak() -> NotebookDocument {
        NotebookDocument::new(vec![
            Cell::new(
                CellKind::Raw,
                "---\ntitle: Text Analysis Tool\ninputs:\n  - name: day\n    widget: dropdown\n    label: Day of Week\n    choices: [Monday, Tuesday, Wednesday, Thursday, Friday, Saturday, Sunday]\n---\n",
            ),
            Cell::new(CellKind::Code, "import pandas as pd"),
            Cell::new(CellKind::Code, "print(day)"),
        ])
    }

    fn values(pairs: &[(&str, ParamValue)]) -> BTreeMap<String, ParamValue> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn injects_assignment_after_config_cell() {
        let nb = sirak();
        let cfg = extract_app_config(&nb).unwrap();
        let bound = bind_parameters(&nb, &values(&[("day", ParamValue::Text("Monday".into()))]), &cfg).unwrap();
        assert_eq!(bound.cells.len(), nb.cells.len() + 1);
        let injected = &bound.cells[1];
        assert_eq!(injected.kind, CellKind::Code);
        assert!(injected.has_tag(PARAMETERS_TAG));
        assert!(injected.source.contains("day = \"Monday\""), "{}", injected.source);
        assert_eq!(bound.cells[0], nb.cells[0]);
        assert_eq!(&bound.cells[2..], &nb.cells[1..]);
        assert_eq!(read_bindings(injected), values(&[("day", ParamValue::Text("Monday".into()))]));
    }

    #[test]
    fn value_outside_choices() {
        let nb = sirak();
        let cfg = extract_app_config(&nb).unwrap();
        let err = bind_parameters(&nb, &values(&[("day", ParamValue::Text("Funday".into()))]), &cfg).unwrap_err();
        assert!(matches!(err, NotebookError::ValueOutOfDomain { .. }));
    }

    #[test]
    fn missing_value_without_default() {
        let nb = sirak();
        let cfg = extract_app_config(&nb).unwrap();
        assert!(matches!(
            bind_parameters(&nb, &BTreeMap::new(), &cfg),
            Err(NotebookError::MissingRequired(n)) if n == "day"
        ));
    }

    #[test]
    fn unknown_parameter() {
        let nb = sirak();
        let cfg = extract_app_config(&nb).unwrap();
        assert!(matches!(
            bind_parameters(&nb, &values(&[("week", ParamValue::Number(1.0))]), &cfg),
            Err(NotebookError::UnknownParameter(n)) if n == "week"
        ));
    }

    #[test]
    fn defaults_fill_everything() {
        let nb = NotebookDocument::new(vec![
            Cell::new(
                CellKind::Raw,
                "---\ntitle: Spreadsheets Generator\ninputs:\n  - {name: month, widget: slider, min: 1, max: 12, step: 1, default: 3}\n  - {name: county_name, widget: text, default: Fairfax}\n",
            ),
            Cell::new(CellKind::Code, "run(month, county_name)"),
        ]);
        let cfg = extract_app_config(&nb).unwrap();
        let bound = bind_parameters(&nb, &BTreeMap::new(), &cfg).unwrap();
        assert_eq!(
            bound.cells[1].source,
            "# Parameters injected by appforge\nmonth = 3\ncounty_name = \"Fairfax\"\n"
        );
    }

    #[test]
    fn slider_and_file_domains() {
        let cfg = AppConfig {
            title: "t".into(),
            description: None,
            inputs: vec![
                InputSpec { min: Some(0.0), max: Some(10.0), step: Some(1.0), ..InputSpec::new("n", WidgetKind::Slider) },
                InputSpec::new("upload", WidgetKind::File),
            ],
        };
        let nb = NotebookDocument::new(vec![Cell::new(CellKind::Raw, "---\ntitle: t\n")]);
        let good_ref = "ab".repeat(32);
        assert!(bind_parameters(&nb, &values(&[("n", ParamValue::Number(10.0)), ("upload", ParamValue::Text(good_ref.clone()))]), &cfg).is_ok());
        for bad in [
            values(&[("n", ParamValue::Number(10.5)), ("upload", ParamValue::Text(good_ref.clone()))]),
            values(&[("n", ParamValue::Text("5".into())), ("upload", ParamValue::Text(good_ref.clone()))]),
            values(&[("n", ParamValue::Number(1.0)), ("upload", ParamValue::Text("../etc/passwd".into()))]),
        ] {
            assert!(matches!(bind_parameters(&nb, &bad, &cfg), Err(NotebookError::ValueOutOfDomain { .. })));
        }
    }

    #[test]
    fn awkward_text_survives_round_trip() {
        let cfg = AppConfig { title: "t".into(), description: None, inputs: vec![InputSpec::new("q", WidgetKind::Text)] };
        let nb = NotebookDocument::new(vec![Cell::new(CellKind::Raw, "---\ntitle: t\n")]);
        let text = "a \"quoted\"\nline\\with é and = signs";
        let bound = bind_parameters(&nb, &values(&[("q", ParamValue::Text(text.into()))]), &cfg).unwrap();
        assert_eq!(read_bindings(&bound.cells[1])["q"], ParamValue::Text(text.into()));
    }

    proptest! {
        #[test]
        fn binding_adds_exactly_one_cell(extra in prop::collection::vec("[a-z =()]{0,20}", 0..6), choice in 0usize..7) {
            let mut nb = sirak();
            nb.cells.extend(extra.iter().map(|s| Cell::new(CellKind::Code, s.clone())));
            let cfg = extract_app_config(&nb).unwrap();
            let day = cfg.inputs[0].choices[choice].clone();
            let bound = bind_parameters(&nb, &values(&[("day", ParamValue::Text(day))]), &cfg).unwrap();
            prop_assert_eq!(bound.cells.len(), nb.cells.len() + 1);
            let mut without = bound.cells.clone();
            without.remove(1);
            prop_assert_eq!(without, nb.cells);
        }
    }
}
