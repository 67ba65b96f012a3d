//! One app from first upload to deployment, printing every lifecycle
//! transition as it lands in the audit trail.

use appforge::demo::{binita_scenario, memory_platform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, cast) = memory_platform()?;
    let run = binita_scenario(&p, &cast)?;

    for e in p.all_audit_events(0) {
        let Some(next) = e.next_state else {
            println!("{:>3}  {:<8} {}", e.seq, e.actor, e.action);
            continue;
        };
        let prev = e.prev_state.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
        println!("{:>3}  {:<8} v{} {prev} --{}--> {next}", e.seq, e.actor, e.version_no.unwrap_or(0), e.action);
    }
    println!("\npreview: {}", run.preview.url);
    println!("live:    {}", run.deployment.url);
    Ok(())
}
