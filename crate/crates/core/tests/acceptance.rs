//! Acceptance criteria 1–12, one PASS/FAIL line each.
//! Run with `cargo test --test acceptance -- --nocapture` to also see the details.

use cue_lab::selftest::{run_criterion, CriterionResult};
use std::io::Write;

#[test]
fn acceptance() {
    let results: Vec<CriterionResult> = (1..=12)
        .map(|id| {
            let r = run_criterion(id);
            println!("{}", r.line());
            for d in &r.details {
                println!("      {d}");
            }
            r
        })
        .collect();
    // written past the test harness's capture so the summary always shows
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    for r in &results {
        writeln!(err, "{} criterion {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.title).unwrap();
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
