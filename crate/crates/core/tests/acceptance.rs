//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::io::Write;
use std::process::ExitCode;

use axifem::verify::CHECKS;

fn main() -> ExitCode {
    let mut failed = 0;
    for check in CHECKS {
        let outcome = check();
        println!("{outcome}");
        let _ = std::io::stdout().flush();
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", CHECKS.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
