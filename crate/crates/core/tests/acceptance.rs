//! Runs every acceptance criterion and prints one PASS/FAIL line each.

use std::process::ExitCode;

use wm_core::verify::{run_suite, VerifyOptions, SUITES};

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    for suite in SUITES {
        let r = run_suite(suite, &opts).expect("known suite");
        println!(
            "{} criterion {:>2} {:<24} {:>8.1}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.suite,
            r.seconds,
            r.detail
        );
        if !r.passed {
            failed.push(r.suite);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", SUITES.len(), SUITES.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
