//! Inject widget values into a notebook and show the generated cell.

use std::collections::BTreeMap;

use appforge::demo;
use appforge::notebook::{bind_parameters, extract_app_config, parse_notebook, read_bindings, ParamValue, PARAMETERS_TAG};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nb = parse_notebook(demo::BINITA_V2)?;
    let cfg = extract_app_config(&nb)?;

    let mut values = BTreeMap::new();
    values.insert("month".to_string(), ParamValue::Number(7.0));
    // county_name is left out, so its declared default is used.

    let bound = bind_parameters(&nb, &values, &cfg)?;
    let cell = bound
        .cells
        .iter()
        .find(|c| c.tags.iter().any(|t| t == PARAMETERS_TAG))
        .ok_or("no generated cell")?;
    println!("{} cells before, {} after\n", nb.cells.len(), bound.cells.len());
    println!("{}", cell.source);
    for (name, value) in read_bindings(cell) {
        println!("{name} = {value:?}");
    }
    Ok(())
}
