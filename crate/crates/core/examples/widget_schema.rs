//! Read the config cell of a notebook and print the generated widget schema.
//!
//!     cargo run --example widget_schema -- path/to/notebook.ipynb

use appforge::demo;
use appforge::notebook::{extract_app_config, generate_widget_schema, parse_notebook, validate_app_config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => demo::SIRAK_V2.to_vec(),
    };
    let nb = parse_notebook(&bytes)?;
    let cfg = extract_app_config(&nb)?;

    let report = validate_app_config(&cfg);
    for v in &report.violations {
        eprintln!("config: {} {:?} {}", v.subject, v.kind, v.detail);
    }

    let schema = generate_widget_schema(&cfg)?;
    println!("{}", String::from_utf8(schema.to_canonical_bytes())?);
    Ok(())
}
