//! Acceptance gate: every criterion at its stated tolerance and seed count.

use l2gdv::harness::{verify, VerifySettings, ALL_CRITERIA};

#[test]
fn acceptance() {
    let settings = VerifySettings::default();
    let report = verify(&settings, &ALL_CRITERIA);
    for r in &report.results {
        println!("{}", r.summary_line());
    }
    let failed: Vec<u8> = report.results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
