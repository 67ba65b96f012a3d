//! Crash injection over the Binita walkthrough, shared by the recovery
//! tests and the acceptance run.

use std::sync::Arc;

use appforge::clock::SteppingClock;
use appforge::demo::{self, seeded_platform};
use appforge::persist::{decode_frames, BatchStore, CrashingStore, MemoryStore};
use appforge::platform::{NewUser, Platform, Role};
use appforge::workflow::AuditEvent;

pub const SEED: u64 = 7;

/// Run the walkthrough to the end on `store`; stops at the first failed commit.
pub fn walkthrough(store: Arc<dyn BatchStore>) -> Result<(), String> {
    let (p, cast) = seeded_platform(store, SEED).map_err(|e| e.to_string())?;
    demo::binita_scenario(&p, &cast).map_err(|e| e.to_string())?;
    Ok(())
}

pub fn reopen(bytes: Vec<u8>) -> Result<Platform, String> {
    Platform::open(Arc::new(MemoryStore::from_bytes(bytes)), demo::config(SEED))
        .map(|p| p.with_clock(Arc::new(SteppingClock::default())))
        .map_err(|e| format!("reopen: {e}"))
}

/// The uninterrupted run: its log bytes and audit trail.
pub fn reference() -> (Vec<u8>, Vec<AuditEvent>) {
    let store = Arc::new(MemoryStore::new());
    walkthrough(store.clone()).expect("uninterrupted walkthrough");
    let bytes = store.bytes();
    let events = reopen(bytes.clone()).unwrap().all_audit_events(0);
    (bytes, events)
}

/// Crash after `k` commits, recover from what reached the log, and check
/// the recovered platform. Returns the number of batches recovered.
pub fn crash_and_recover(k: usize, torn: bool, full_events: &[AuditEvent]) -> Result<usize, String> {
    let store = Arc::new(CrashingStore::new(k, torn));
    if walkthrough(store.clone()).is_ok() {
        return Err(format!("no crash after {k} commits"));
    }
    let bytes = store.surviving_bytes();
    let (frames, _) = decode_frames(&bytes);
    if frames.len() != k {
        return Err(format!("expected {k} intact batches, found {}", frames.len()));
    }
    let p = reopen(bytes)?;
    p.check_consistency().map_err(|e| format!("after {k} commits: {e}"))?;
    if !p.verify_audit().ok {
        return Err(format!("after {k} commits: audit chain broken"));
    }
    let events = p.all_audit_events(0);
    if events.as_slice() != &full_events[..events.len()] {
        return Err(format!("after {k} commits: audit trail is not a prefix of the full run"));
    }
    // The recovered platform keeps working.
    p.register_user(NewUser::new("late-arrival", &[Role::Author], "late-arrival-token"))
        .map_err(|e| format!("after {k} commits: write failed: {e}"))?;
    p.check_consistency().map_err(|e| format!("after {k} commits, one more write: {e}"))?;
    Ok(frames.len())
}

/// Every crash point, clean and torn. Returns the number of points checked.
pub fn crash_sweep() -> Result<usize, String> {
    let (bytes, events) = reference();
    let total = decode_frames(&bytes).0.len();
    let mut checked = 0;
    for k in 0..total {
        for torn in [false, true] {
            crash_and_recover(k, torn, &events)?;
            checked += 1;
        }
    }
    Ok(checked)
}
