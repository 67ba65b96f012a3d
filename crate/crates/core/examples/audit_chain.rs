//! Export the audit trail, verify it, then edit one line and verify again.
//!
//!     cargo run --example audit_chain -- [export.ndjson]

use appforge::demo::{binita_scenario, memory_platform};
use appforge::workflow::{export_lines, verify_export};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let export = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => {
            let (p, cast) = memory_platform()?;
            binita_scenario(&p, &cast)?;
            export_lines(&p.all_audit_events(0))
        }
    };
    let verdict = verify_export(&export);
    println!("original: ok={} checked={}", verdict.ok, verdict.checked);

    let tampered = export.replacen("\"actor\":\"yaw\"", "\"actor\":\"ops\"", 1);
    let verdict = verify_export(&tampered);
    println!("edited:   ok={} first bad event {:?}", verdict.ok, verdict.first_bad_seq);
    Ok(())
}
