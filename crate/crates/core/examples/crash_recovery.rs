//! Cut the storage log after each commit in turn and reopen what survived.

use std::sync::Arc;

use appforge::demo::{self, binita_scenario, seeded_platform};
use appforge::persist::{CrashingStore, MemoryStore};
use appforge::platform::Platform;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut k = 0;
    loop {
        let store = Arc::new(CrashingStore::new(k, true));
        let finished = seeded_platform(store.clone(), 7).and_then(|(p, cast)| binita_scenario(&p, &cast)).is_ok();

        let reopened = Platform::open(Arc::new(MemoryStore::from_bytes(store.surviving_bytes())), demo::config(7))?;
        reopened.check_consistency()?;
        let verdict = reopened.verify_audit();
        println!(
            "crash after {k:>2} commits: {} apps, {:>2} audit events, chain ok={}",
            reopened.apps().len(),
            verdict.checked,
            verdict.ok
        );
        if finished {
            break;
        }
        k += 1;
    }
    Ok(())
}
