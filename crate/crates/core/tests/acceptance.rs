//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use appforge::demo::{self, memory_platform, Cast};
use appforge::deploy::{is_valid_slug, make_slug};
use appforge::hash::content_hash;
use appforge::manifest::Ecosystem;
use appforge::notebook::{extract_app_config, generate_widget_schema, parse_notebook, WidgetKind};
use appforge::persist::{decode_frames, encode_frame, MemoryStore};
use appforge::platform::{Platform, PlatformError};
use appforge::report::ViolationKind;
use appforge::workflow::{
    export_lines, next_state, replay_states, verify_export, AuditEvent, LifecycleEvent as E, LifecycleState as S, ReviewAction,
    VersionRef, WorkflowError,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pe(e: PlatformError) -> String {
    e.to_string()
}

fn transitions_of(events: &[AuditEvent], app: &str, n: u32) -> Vec<S> {
    events
        .iter()
        .filter(|e| e.is_transition() && e.app_id.as_deref() == Some(app) && e.version_no == Some(n))
        .filter_map(|e| e.next_state)
        .collect()
}

fn binita_replay() -> Outcome {
    let started = Instant::now();
    let (p, cast) = memory_platform().map_err(pe)?;
    let run = demo::binita_scenario(&p, &cast).map_err(pe)?;
    let elapsed = started.elapsed();

    ensure(run.blocked.version.state == S::ValidationFailed, || "first upload was not blocked".into())?;
    let report = run.blocked.checks.manifest.as_ref().ok_or("no manifest report")?;
    let found: Vec<(&str, ViolationKind)> = report.violations.iter().map(|v| (v.subject.as_str(), v.kind)).collect();
    ensure(found == [("spacy", ViolationKind::NotInRegistry)], || format!("violations {found:?}"))?;

    let events = p.all_audit_events(0);
    let app = &run.app.app_id;
    let v2 = transitions_of(&events, app, 2);
    let want = [S::Submitted, S::Validated, S::SandboxRunning, S::SandboxPassed, S::InReview, S::ChangesRequested];
    ensure(v2 == want, || format!("resubmission went {v2:?}"))?;
    ensure(run.resubmitted.reviewer.as_deref() == Some("yaw"), || "Yaw was not the reviewer".into())?;
    let v3 = transitions_of(&events, app, 3);
    ensure(v3.last() == Some(&S::Deployed), || format!("revision went {v3:?}"))?;
    let url = format!("{}/internal/spreadsheets-generator", demo::BASE_URL);
    ensure(run.deployment.url == url, || format!("deployed at {}", run.deployment.url))?;
    let verdict = p.verify_audit();
    ensure(verdict.ok, || format!("audit chain broken at {:?}", verdict.first_bad_seq))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{} audit events, {:.0} ms", verdict.checked, elapsed.as_secs_f64() * 1000.0))
}

fn sirak_replay() -> Outcome {
    let (p, cast) = memory_platform().map_err(pe)?;
    demo::binita_scenario(&p, &cast).map_err(pe)?;
    let run = demo::sirak_scenario(&p, &cast).map_err(pe)?;
    let report = run.first.checks.manifest.as_ref().ok_or("no manifest report")?;
    ensure(report.violations.is_empty(), || format!("violations {:?}", report.violations))?;
    let first = transitions_of(&p.all_audit_events(0), &run.app.app_id, 1);
    ensure(first.get(1) == Some(&S::Validated), || format!("first version went {first:?}"))?;

    let shell = p.app_shell(&run.deployment.url, Some(&cast.binita)).map_err(pe)?;
    let [control] = shell.schema.controls.as_slice() else {
        return Err(format!("{} controls", shell.schema.controls.len()));
    };
    let choices = control.params.get("choices").and_then(|c| c.as_array()).map_or(0, Vec::len);
    ensure(control.kind == WidgetKind::Dropdown, || format!("control is {:?}", control.kind))?;
    ensure(control.label == "Day of Week", || format!("label {:?}", control.label))?;
    ensure(choices == 7, || format!("{choices} choices"))?;
    Ok("no violations; one dropdown, 7 choices, \"Day of Week\"".into())
}

// State machine fuzz.

const FUZZ_EVENTS: [E; 12] = [
    E::Validate,
    E::ValidationFail,
    E::SandboxStart,
    E::SandboxPass,
    E::SandboxFail,
    E::AssignReviewer,
    E::Approve,
    E::ReviewRequestChanges,
    E::Reject,
    E::Deploy,
    E::Rollback,
    E::Retire,
];

struct FuzzApp {
    id: String,
    owner: &'static str,
    reviewer: &'static str,
}

fn user(p: &Platform, id: &str) -> appforge::platform::UserRecord {
    p.user(id).expect("cast member")
}

fn snapshot(p: &Platform, apps: &[FuzzApp]) -> BTreeMap<(String, u32), S> {
    let mut out = BTreeMap::new();
    for a in apps {
        for v in p.version_history(&a.id).unwrap_or_default() {
            out.insert((a.id.clone(), v.version.version_no), v.version.state);
        }
    }
    out
}

/// Drive `event` against version `r` through the operation that fires it.
fn fire(p: &Platform, app: &FuzzApp, r: &VersionRef, event: E) -> Result<(), PlatformError> {
    let owner = user(p, app.owner);
    match event {
        e if e.is_system_event() => p.system_transition(r, e).map(drop),
        E::AssignReviewer => p.assign_reviewer(&owner, r, app.reviewer).map(drop),
        E::Approve | E::ReviewRequestChanges | E::Reject => {
            let action = match event {
                E::Approve => ReviewAction::Approve,
                E::ReviewRequestChanges => ReviewAction::RequestChanges,
                _ => ReviewAction::Reject,
            };
            p.record_review(&user(p, app.reviewer), r, action, "").map(drop)
        }
        E::Deploy => p.deploy(&user(p, "ops"), r).map(drop),
        E::Rollback => p.rollback_to(&owner, &r.app_id, r.version_no).map(drop),
        E::Retire => {
            // Retiring is addressed by slug, so it acts on the live version.
            let slug = p.app(&r.app_id)?.slug.unwrap_or_default();
            p.retire(&owner, &slug).map(drop)
        }
        _ => unreachable!("supersede only happens as a side effect"),
    }
}

fn state_machine_fuzz() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xF022);
    let (mut applied, mut refused, mut transitions) = (0usize, 0usize, 0usize);
    for seq in 0..1000 {
        let store = Arc::new(MemoryStore::new());
        let config = appforge::platform::PlatformConfig {
            auto_deploy: rng.random_bool(0.5),
            ..demo::config(seq)
        };
        let p = Platform::open(store, config).map_err(pe)?;
        let cast = Cast::register(&p).map_err(pe)?;
        p.seed_registry(demo::REGISTRY_SEED).map_err(pe)?;
        let apps = [
            FuzzApp {
                id: p.create_app(&cast.binita, "Fuzz Alpha").map_err(pe)?.app_id,
                owner: "binita",
                reviewer: "yaw",
            },
            FuzzApp {
                id: p.create_app(&cast.sirak, "Fuzz Beta").map_err(pe)?.app_id,
                owner: "sirak",
                reviewer: "marina",
            },
        ];
        let mut versions: Vec<(usize, VersionRef)> = Vec::new();
        let steps = rng.random_range(1..=30);
        for _ in 0..steps {
            let before = snapshot(&p, &apps);
            let audit_before = p.all_audit_events(0).len();
            let result = if versions.is_empty() || rng.random_bool(0.15) {
                let a = rng.random_range(0..apps.len());
                let manifest = if rng.random_bool(0.2) { demo::BINITA_REQUIREMENTS } else { demo::STATIC_REQUIREMENTS };
                let owner = user(&p, apps[a].owner);
                p.submit_version(&owner, &apps[a].id, demo::STATIC_NOTEBOOK, manifest, Ecosystem::Pypi)
                    .map(|rec| versions.push((a, rec.version.version_ref())))
            } else if rng.random_bool(0.1) {
                let (_, r) = &versions[rng.random_range(0..versions.len())];
                p.run_build_check(r, &BTreeMap::new()).map(drop)
            } else {
                let (a, r) = &versions[rng.random_range(0..versions.len())];
                let event = FUZZ_EVENTS[rng.random_range(0..FUZZ_EVENTS.len())];
                if event == E::Retire && p.app(&r.app_id).map_err(pe)?.slug.is_none() {
                    continue;
                }
                fire(&p, &apps[*a], r, event)
            };
            match result {
                Ok(()) => applied += 1,
                Err(PlatformError::Workflow(
                    WorkflowError::IllegalTransition { .. } | WorkflowError::WrongState { .. } | WorkflowError::NeverApproved(_),
                )) => {
                    refused += 1;
                    ensure(snapshot(&p, &apps) == before, || format!("sequence {seq}: a refused event changed state"))?;
                    ensure(p.all_audit_events(0).len() == audit_before, || {
                        format!("sequence {seq}: a refused event was audited")
                    })?;
                }
                Err(PlatformError::UnknownSlug(_)) => refused += 1,
                Err(e) => return Err(format!("sequence {seq}: unexpected refusal {e}")),
            }
        }

        let events = p.all_audit_events(0);
        for e in events.iter().filter(|e| e.is_transition()) {
            transitions += 1;
            let next = e.next_state.expect("transition");
            match e.prev_state {
                None => ensure(e.action == "submit" && next == S::Submitted, || format!("seq {}: bad initial event", e.seq))?,
                Some(prev) => {
                    let event: E = e.action.parse().map_err(|m: String| format!("seq {}: {m}", e.seq))?;
                    ensure(next_state(prev, event) == Some(next), || {
                        format!("sequence {seq}: {prev} --{event}--> {next} is not in the table")
                    })?;
                }
            }
        }
        let replayed = replay_states(&events).map_err(|m| format!("sequence {seq}: replay failed at {}", m.seq))?;
        ensure(replayed == snapshot(&p, &apps), || format!("sequence {seq}: replay disagrees with stored states"))?;
        p.check_consistency().map_err(|m| format!("sequence {seq}: {m}"))?;
    }
    Ok(format!("{applied} applied, {refused} refused, {transitions} audited transitions replayed"))
}

// Whitelist gate fuzz. Registries and manifests are drawn from a small
// space where the expected verdict can be worked out by hand: versions are
// whole majors, registry ranges are `any` or `>=A.0,<B.0`.

#[derive(Clone, Copy)]
enum Row {
    Approved(Option<(u32, u32)>),
    Pending,
    Rejected,
}

#[derive(Clone, Copy)]
enum Constraint {
    None,
    Eq(u32),
    Ge(u32),
    Lt(u32),
}

const POOL: [&str; 8] = ["pandas", "numpy", "geo-pandas", "spacy", "scikit-learn", "plotly", "requests", "pyyaml"];

fn spelled(name: &str, rng: &mut StdRng) -> String {
    // Equivalent spellings normalize to the same package.
    match rng.random_range(0..3) {
        0 => name.to_string(),
        1 => name.to_ascii_uppercase(),
        _ => name.replace('-', "_"),
    }
}

fn expected(row: Option<Row>, c: Constraint) -> Option<ViolationKind> {
    match row {
        None => Some(ViolationKind::NotInRegistry),
        Some(Row::Pending) => Some(ViolationKind::PendingApproval),
        Some(Row::Rejected) => Some(ViolationKind::Rejected),
        Some(Row::Approved(None)) => None,
        Some(Row::Approved(Some((lo, hi)))) => {
            let fits = match c {
                Constraint::None => true,
                Constraint::Eq(x) => lo <= x && x < hi,
                Constraint::Ge(x) => x < hi,
                Constraint::Lt(x) => lo < x,
            };
            (!fits).then_some(ViolationKind::VersionOutsideRange)
        }
    }
}

fn whitelist_fuzz() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x6A7E);
    let (mut passing, mut failing) = (0, 0);
    for pair in 0..500 {
        let mut registry: BTreeMap<&str, Row> = BTreeMap::new();
        let mut tsv = String::new();
        for name in POOL {
            let row = match rng.random_range(0..6) {
                0 => continue,
                1 => Row::Pending,
                2 => Row::Rejected,
                3 => Row::Approved(None),
                _ => {
                    let lo = rng.random_range(1..4);
                    Row::Approved(Some((lo, rng.random_range(lo + 1..7))))
                }
            };
            let (status, spec, by, at) = match row {
                Row::Pending => ("pending", "any".to_string(), "", ""),
                Row::Rejected => ("rejected", "any".to_string(), "security", "2025-02-01T00:00:00+00:00"),
                Row::Approved(None) => ("approved", "any".to_string(), "security", "2025-02-01T00:00:00+00:00"),
                Row::Approved(Some((lo, hi))) => ("approved", format!(">={lo}.0,<{hi}.0"), "security", "2025-02-01T00:00:00+00:00"),
            };
            tsv.push_str(&format!("pypi\t{name}\t{status}\t{spec}\t{by}\t{at}\n"));
            registry.insert(name, row);
        }

        let count = rng.random_range(1..=5);
        let mut names: Vec<&str> = POOL.to_vec();
        let mut manifest = String::new();
        let mut want: Vec<(String, ViolationKind)> = Vec::new();
        for _ in 0..count {
            let name = names.remove(rng.random_range(0..names.len()));
            let x = rng.random_range(1..7);
            let c = match rng.random_range(0..4) {
                0 => Constraint::None,
                1 => Constraint::Eq(x),
                2 => Constraint::Ge(x),
                _ => Constraint::Lt(x),
            };
            let written = spelled(name, &mut rng);
            manifest.push_str(&match c {
                Constraint::None => format!("{written}\n"),
                Constraint::Eq(x) => format!("{written}=={x}.0\n"),
                Constraint::Ge(x) => format!("{written} >= {x}.0\n"),
                Constraint::Lt(x) => format!("{written}<{x}.0\n"),
            });
            if rng.random_bool(0.2) {
                manifest.push_str("# pinned by the analyst\n\n");
            }
            if let Some(kind) = expected(registry.get(name).copied(), c) {
                want.push((name.to_string(), kind));
            }
        }

        let p = Platform::open(Arc::new(MemoryStore::new()), demo::config(pair)).map_err(pe)?;
        let cast = Cast::register(&p).map_err(pe)?;
        if !tsv.is_empty() {
            p.import_registry(&cast.security, &tsv).map_err(|e| format!("pair {pair}: import: {e}"))?;
        }
        let app = p.create_app(&cast.binita, "Gate").map_err(pe)?;
        let rec = p
            .submit_version(&cast.binita, &app.app_id, demo::STATIC_NOTEBOOK, manifest.as_bytes(), Ecosystem::Pypi)
            .map_err(pe)?;
        let report = rec.checks.manifest.as_ref().ok_or_else(|| format!("pair {pair}: no report"))?;
        let got: Vec<(String, ViolationKind)> = report.violations.iter().map(|v| (v.subject.clone(), v.kind)).collect();
        ensure(got == want, || format!("pair {pair}: manifest\n{manifest}expected {want:?}, got {got:?}"))?;

        let r = rec.version.version_ref();
        if report.passed() {
            passing += 1;
            ensure(rec.version.state == S::Validated, || format!("pair {pair}: clean manifest ended {}", rec.version.state))?;
            continue;
        }
        failing += 1;
        // Try every way forward; none may lift the version past the gate.
        let _ = p.system_transition(&r, E::Validate);
        let _ = p.system_transition(&r, E::SandboxStart);
        let _ = p.run_build_check(&r, &BTreeMap::new());
        let _ = p.run_version(&cast.binita, &r, &BTreeMap::new());
        let _ = p.assign_reviewer(&cast.binita, &r, "yaw");
        let _ = p.record_review(&cast.yaw, &r, ReviewAction::Approve, "");
        let _ = p.deploy(&cast.ops, &r);
        let _ = p.rollback_to(&cast.binita, &app.app_id, 1);
        let state = p.version(&r).map_err(pe)?.version.state;
        ensure(state == S::ValidationFailed, || format!("pair {pair}: failing manifest reached {state}"))?;
        let reached = transitions_of(&p.all_audit_events(0), &app.app_id, 1);
        ensure(reached == [S::Submitted, S::ValidationFailed], || format!("pair {pair}: went {reached:?}"))?;
    }
    Ok(format!("{passing} clean, {failing} blocked, all blocked versions stayed ValidationFailed"))
}

// Audit tamper.

fn scenario_log() -> Result<(Platform, Vec<u8>), String> {
    let store = Arc::new(MemoryStore::new());
    let (p, cast) = demo::seeded_platform(store.clone(), common::SEED).map_err(pe)?;
    demo::binita_scenario(&p, &cast).map_err(pe)?;
    demo::sirak_scenario(&p, &cast).map_err(pe)?;
    Ok((p, store.bytes()))
}

fn audit_tamper() -> Outcome {
    let (p, log) = scenario_log()?;
    let export = export_lines(&p.all_audit_events(0));
    let lines: Vec<&str> = export.lines().collect();
    let mut rng = StdRng::seed_from_u64(0x7A4D);

    // Exported lines: flip a byte anywhere in one event.
    for trial in 0..100 {
        let i = rng.random_range(0..lines.len());
        let mut bytes = lines[i].as_bytes().to_vec();
        let at = rng.random_range(0..bytes.len());
        bytes[at] ^= rng.random_range(1..=255u8);
        let mut text = String::new();
        for (j, line) in lines.iter().enumerate() {
            if j == i {
                text.push_str(&String::from_utf8_lossy(&bytes));
            } else {
                text.push_str(line);
            }
            text.push('\n');
        }
        let seq = i as u64 + 1;
        let v = verify_export(&text);
        ensure(!v.ok && v.first_bad_seq.is_some_and(|b| b <= seq), || {
            format!("trial {trial}: flip at byte {at} of event {seq} reported {v:?}")
        })?;
    }

    // The persisted log: rewrite one event inside a batch and re-frame it
    // with a valid checksum, so only the hash chain can catch it.
    let (frames, _) = decode_frames(&log);
    let mut located = Vec::new();
    for (f, frame) in frames.iter().enumerate() {
        let batch: serde_json::Value = serde_json::from_slice(frame).map_err(|e| e.to_string())?;
        for (r, rec) in batch["records"].as_array().into_iter().flatten().enumerate() {
            if rec["record"] == "audit" {
                located.push((f, r, rec["seq"].as_u64().unwrap_or(0)));
            }
        }
    }
    let mut detected_on_open = 0;
    for trial in 0..100 {
        let (f, r, seq) = located[rng.random_range(0..located.len())];
        let mut batch: serde_json::Value = serde_json::from_slice(&frames[f]).map_err(|e| e.to_string())?;
        let event = batch["records"][r].as_object_mut().ok_or("audit record")?;
        let fields: Vec<String> = event.keys().filter(|k| *k != "record").cloned().collect();
        let field = &fields[rng.random_range(0..fields.len())];
        let mut raw = event[field].to_string().into_bytes();
        let at = rng.random_range(0..raw.len());
        raw[at] ^= 1 << rng.random_range(0..7);
        match serde_json::from_slice(&raw) {
            Ok(v) if v != event[field] => event[field] = v,
            _ => event[field] = serde_json::json!(format!("{}~", event[field])),
        }
        let mut tampered = Vec::new();
        for (j, frame) in frames.iter().enumerate() {
            let payload = if j == f { serde_json::to_vec(&batch).map_err(|e| e.to_string())? } else { frame.clone() };
            tampered.extend_from_slice(&encode_frame(&payload));
        }
        match common::reopen(tampered) {
            Err(_) => detected_on_open += 1,
            Ok(q) => {
                let v = q.verify_audit();
                ensure(!v.ok && v.first_bad_seq.is_some_and(|b| b <= seq), || {
                    format!("trial {trial}: edit of {field} in persisted event {seq} reported {v:?}")
                })?;
            }
        }
    }
    Ok(format!(
        "100/100 export flips caught; 100/100 persisted edits caught ({detected_on_open} refused at load, rest by verify)"
    ))
}

fn golden_schemas() -> Outcome {
    let cases: [(&str, &[u8], &[u8]); 3] = [
        ("binita", demo::BINITA_V2, include_bytes!("../fixtures/golden/binita_schema.json")),
        ("sirak", demo::SIRAK_V2, include_bytes!("../fixtures/golden/sirak_schema.json")),
        ("static", demo::STATIC_NOTEBOOK, include_bytes!("../fixtures/golden/static_schema.json")),
    ];
    for (name, nb, golden) in cases {
        let cfg = extract_app_config(&parse_notebook(nb).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let bytes = generate_widget_schema(&cfg).map_err(|e| e.to_string())?.to_canonical_bytes();
        ensure(bytes == golden, || {
            format!("{name}: {} vs golden {}", String::from_utf8_lossy(&bytes), String::from_utf8_lossy(golden))
        })?;
    }
    Ok("3/3 byte-identical".into())
}

fn hash_contract() -> Outcome {
    let frozen = include_str!("../fixtures/golden/binita_v1_content_hash.txt").trim();
    let ours = content_hash(demo::BINITA_V1, demo::BINITA_REQUIREMENTS).to_hex();
    ensure(ours == frozen, || format!("{ours} != frozen {frozen}"))?;

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let live = std::process::Command::new("sh")
        .arg(format!("{dir}/golden/content_hash.sh"))
        .arg(format!("{dir}/binita/notebook_v1.ipynb"))
        .arg(format!("{dir}/binita/requirements.txt"))
        .output();
    match live {
        Ok(out) if out.status.success() => {
            let external = String::from_utf8_lossy(&out.stdout).trim().to_string();
            ensure(external == frozen, || format!("sha256sum framing gives {external}"))?;
            Ok(format!("{frozen} (frozen, and recomputed with sh + sha256sum)"))
        }
        _ => Ok(format!("{frozen} (frozen; sh/sha256sum not available to recompute)")),
    }
}

fn slug_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x51A6);
    const PIECES: [&str; 14] = [
        "Road", "counts", "2024", "Müller", "  ", "--", "_", "Ünïcödé", "!!", "x", "Day of Week", "東京", "a-b", "Z",
    ];
    let (mut made, mut refused) = (0, 0);
    for i in 0..1000 {
        let mut title = String::new();
        for _ in 0..rng.random_range(0..40) {
            title.push_str(PIECES[rng.random_range(0..PIECES.len())]);
            if rng.random_bool(0.5) {
                title.push(' ');
            }
        }
        let empty = BTreeSet::new();
        let slug = match make_slug(&title, &empty) {
            Ok(s) => s,
            Err(_) => {
                ensure(!title.chars().any(|c| c.is_ascii_alphanumeric()), || format!("title {i} {title:?} refused"))?;
                refused += 1;
                continue;
            }
        };
        made += 1;
        ensure(slug.len() <= 63, || format!("{slug:?} is {} chars", slug.len()))?;
        ensure(slug.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-'), || format!("{slug:?} charset"))?;
        ensure(is_valid_slug(&slug), || format!("{slug:?} not valid"))?;
        ensure(make_slug(&slug, &empty).as_deref() == Ok(slug.as_str()), || format!("{slug:?} not idempotent"))?;

        let mut taken: BTreeSet<String> = BTreeSet::new();
        taken.insert(slug.clone());
        for n in 2..=rng.random_range(2..12) {
            let next = make_slug(&title, &taken).map_err(|e| e.to_string())?;
            // A clipped base can already end in `-2`, which pushes the first free suffix higher.
            let (stem, num) = next.rsplit_once('-').ok_or_else(|| format!("{next:?} has no suffix"))?;
            let k: u64 = num.parse().map_err(|_| format!("collision {n} for {slug:?} gave {next:?}"))?;
            ensure(k >= n && next.len() <= 63, || format!("collision {n} for {slug:?} gave {next:?}"))?;
            ensure(slug.starts_with(stem), || format!("{next:?} does not extend {slug:?}"))?;
            ensure(!taken.contains(&next) && is_valid_slug(&next), || format!("{next:?} reused or invalid"))?;
            taken.insert(next);
        }
    }
    Ok(format!("{made} slugs checked, {refused} titles without ASCII letters or digits refused"))
}

fn crash_recovery() -> Outcome {
    let points = common::crash_sweep()?;
    Ok(format!("{} crash points ({} batch boundaries, clean and torn) recovered consistent", points, points / 2))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("binita-replay", binita_replay),
        ("sirak-replay", sirak_replay),
        ("state-machine-fuzz", state_machine_fuzz),
        ("whitelist-gate-fuzz", whitelist_fuzz),
        ("audit-tamper", audit_tamper),
        ("golden-schemas", golden_schemas),
        ("hash-contract", hash_contract),
        ("slug-properties", slug_properties),
        ("crash-recovery", crash_recovery),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
