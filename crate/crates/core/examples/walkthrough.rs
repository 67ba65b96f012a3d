//! Both demo apps end to end on a write-ahead log in a temp directory,
//! then reopened from disk.

use std::sync::Arc;

use appforge::demo::{self, binita_scenario, seeded_platform, sirak_scenario};
use appforge::persist::WalStore;
use appforge::platform::Platform;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("appforge-walkthrough-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("platform.log");

    {
        let (p, cast) = seeded_platform(Arc::new(WalStore::open(&path)?), 7)?;
        let binita = binita_scenario(&p, &cast)?;
        let sirak = sirak_scenario(&p, &cast)?;
        println!("{} -> {}", binita.app.title, binita.deployment.url);
        println!("{} -> {}", sirak.app.title, sirak.deployment.url);
    }

    let p = Platform::open(Arc::new(WalStore::open(&path)?), demo::config(7))?;
    println!("\nreopened {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    for app in p.apps() {
        println!("  {:<24} {:?}", app.app.title, app.url);
    }
    let verdict = p.verify_audit();
    println!("audit: {} events, ok={}", verdict.checked, verdict.ok);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
