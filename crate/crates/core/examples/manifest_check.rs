//! Check a requirements file against a registry export.
//!
//!     cargo run --example manifest_check -- [registry.tsv] [requirements.txt]

use appforge::demo;
use appforge::manifest::{parse_manifest, parse_registry_tsv, validate_manifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let registry = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => demo::REGISTRY_SEED.to_string(),
    };
    let manifest = match args.next() {
        Some(path) => std::fs::read(path)?,
        None => demo::BINITA_REQUIREMENTS.to_vec(),
    };

    let rows = parse_registry_tsv(&registry, chrono::Utc::now())?;
    let manifest = parse_manifest(&manifest, "pypi")?;
    println!("{} registry rows, {} declared packages", rows.len(), manifest.entries.len());

    let report = validate_manifest(&manifest, &rows);
    if report.passed() {
        println!("pass");
    }
    for v in &report.violations {
        println!("{:<16} {:<22} {}", v.subject, format!("{:?}", v.kind), v.detail);
    }
    Ok(())
}
