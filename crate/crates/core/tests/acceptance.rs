//! Acceptance suite: one pass/fail line per criterion, full problem sizes.
//!
//! Runs without the libtest harness so the lines always reach the terminal. Criteria run on
//! separate threads; each prints its wall time next to its runtime budget.

use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use momentlab::verify::{self, run_criterion, CommandKind, CriteriaContext, CriterionOutcome, Profile, RunConfig, CRITERIA};

const SEED: u64 = 20_241_014;

/// Runtime budgets where the criterion carries one.
fn budget(id: u8) -> Option<Duration> {
    match id {
        1 | 9 => Some(Duration::from_secs(60)),
        5 => Some(Duration::from_secs(600)),
        8 => Some(Duration::from_secs(900)),
        _ => None,
    }
}

/// Two `verify-all` runs with the same seed must render to the same bytes.
fn verify_all_twice() -> momentlab::Result<(bool, usize)> {
    let mut cfg = RunConfig::new(CommandKind::VerifyAll);
    cfg.seed = SEED;
    let a = verify::run(&cfg)?.render()?;
    let b = verify::run(&cfg)?.render()?;
    Ok((a == b, a.len()))
}

struct Line {
    id: u8,
    key: &'static str,
    passed: bool,
    elapsed: Duration,
    note: String,
}

fn describe(o: &CriterionOutcome) -> String {
    let failing: Vec<_> = o.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}={:e}", a.id, a.value)).collect();
    if failing.is_empty() {
        format!("{} checks", o.assertions.len())
    } else {
        format!("failing {}", failing.join(", "))
    }
}

fn run_one(id: u8) -> Line {
    let info = CRITERIA.iter().find(|c| c.id == id).expect("known criterion");
    let ctx = CriteriaContext::new(Profile::Full, SEED);
    let start = Instant::now();
    let (mut passed, mut note) = match run_criterion(id, &ctx) {
        Ok(o) => (o.passed, describe(&o)),
        Err(e) => (false, format!("error: {e}")),
    };
    if id == 11 {
        match verify_all_twice() {
            Ok((same, bytes)) => {
                passed &= same;
                note = format!("{note}; verify-all reruns identical: {same} ({bytes} bytes)");
            }
            Err(e) => {
                passed = false;
                note = format!("{note}; verify-all error: {e}");
            }
        }
    }
    let elapsed = start.elapsed();
    if let Some(b) = budget(id) {
        if elapsed > b {
            passed = false;
        }
        note = format!("{note}; {:.1}s of {}s budget", elapsed.as_secs_f64(), b.as_secs());
    } else {
        note = format!("{note}; {:.1}s", elapsed.as_secs_f64());
    }
    Line { id, key: info.key, passed, elapsed, note }
}

fn main() -> ExitCode {
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u8> = CRITERIA.iter().map(|c| c.id).filter(|id| filter.is_empty() || filter.contains(id)).collect();
    let lines: Vec<Line> = thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|&id| s.spawn(move || run_one(id))).collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut all = true;
    for l in &lines {
        all &= l.passed;
        println!("criterion {:>2} [{}]: {} ({})", l.id, l.key, if l.passed { "PASS" } else { "FAIL" }, l.note);
    }
    let total: Duration = lines.iter().map(|l| l.elapsed).max().unwrap_or_default();
    println!("acceptance: {} ({} criteria, {:.1}s wall)", if all { "PASS" } else { "FAIL" }, lines.len(), total.as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
