//! A blocked upload, a package request, a security decision, and the
//! same upload going through afterwards.

use appforge::demo::{self, memory_platform};
use appforge::manifest::{Decision, Ecosystem, VersionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, cast) = memory_platform()?;
    let app = p.create_app(&cast.binita, "Spreadsheets Generator")?;
    let submit = || p.submit_version(&cast.binita, &app.app_id, demo::BINITA_V1, demo::BINITA_REQUIREMENTS, Ecosystem::Pypi);

    let first = submit()?;
    println!("v{} -> {}", first.version.version_no, first.version.state);
    if let Some(report) = &first.checks.manifest {
        for v in &report.violations {
            println!("  {}: {}", v.subject, v.detail);
        }
    }

    let pending = p.request_package(&cast.binita, Ecosystem::Pypi, "spacy", "tokenizing road names")?;
    println!("requested {} ({})", pending.normalized_name, pending.status.as_str());

    // A requester may not decide their own request, even with the admin role.
    let decided = p.decide_package(&cast.security, Ecosystem::Pypi, "spacy", Decision::Approve, VersionSpec::Any)?;
    println!("{} {} by {}", decided.normalized_name, decided.status.as_str(), decided.decided_by.as_deref().unwrap_or("?"));

    let second = submit()?;
    println!("v{} -> {}", second.version.version_no, second.version.state);
    println!();
    print!("{}", p.registry_tsv());
    Ok(())
}
