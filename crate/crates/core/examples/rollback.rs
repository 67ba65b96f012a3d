//! Ship a second release, roll back to the first, scale, then retire.

use std::collections::BTreeMap;

use appforge::demo::{self, binita_scenario, memory_platform};
use appforge::manifest::Ecosystem;
use appforge::workflow::ReviewAction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, cast) = memory_platform()?;
    let run = binita_scenario(&p, &cast)?;
    let app_id = run.app.app_id.clone();
    let live = |label: &str| {
        for d in p.deployments().iter().filter(|d| d.app_id == app_id && !d.is_preview()) {
            println!("{label:<10} v{} {:?} x{} {}", d.version_no, d.status, d.replicas, d.url);
        }
    };
    live("first");

    let next = p.submit_version(&cast.binita, &app_id, demo::BINITA_V2, demo::BINITA_REQUIREMENTS, Ecosystem::Pypi)?;
    let r = next.version.version_ref();
    p.run_build_check(&r, &BTreeMap::new())?;
    p.assign_reviewer(&cast.binita, &r, &cast.yaw.user_id)?;
    p.record_review(&cast.yaw, &r, ReviewAction::Approve, "")?;
    live("second");

    let slug = p.app(&app_id)?.slug.ok_or("no slug")?;
    p.scale(&cast.ops, &slug, 3)?;
    p.rollback_to(&cast.binita, &app_id, run.revised.version.version_no)?;
    live("rollback");

    match p.rollback_to(&cast.binita, &app_id, run.blocked.version.version_no) {
        Ok(_) => println!("unexpected: rolled back to a version that was never approved"),
        Err(e) => println!("refused:   {e}"),
    }

    p.retire(&cast.binita, &slug)?;
    live("retired");
    Ok(())
}
