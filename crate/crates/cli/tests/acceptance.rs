//! Runs the primary acceptance criteria at their stated scale and
//! tolerance and prints one PASS/FAIL line for each.
//!
//! Thresholds live in `noisyrank::verify` and are not relaxed here. A
//! criterion listed in `KNOWN_FAILURES` is still reported as FAIL; it just
//! does not fail the test run. Anything else failing does.

use std::io::Write;

use noisyrank::verify::{run_check, Level, DEFAULT_SEED};

const KNOWN_FAILURES: &[(u32, &str)] = &[(
    6,
    "the ensemble becomes overconfident on pairs it never measured; see README, Known limitations",
)];

#[test]
fn primary_criteria() {
    // written to the raw handle so the lines show up without --nocapture
    let mut err = std::io::stderr().lock();
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for id in 1..=10 {
        let r = run_check(id, Level::Full, DEFAULT_SEED);
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let note = match (r.passed, known) {
            (false, Some(why)) => format!(" [known failure: {why}]"),
            (true, Some(_)) => " [listed as a known failure but passed]".to_string(),
            _ => String::new(),
        };
        writeln!(err, "acceptance {}{note}", r.line()).unwrap();
        passed += r.passed as usize;
        if !r.passed && known.is_none() {
            unexpected.push(id);
        }
    }
    writeln!(err, "acceptance summary: {passed}/10 criteria pass").unwrap();
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
