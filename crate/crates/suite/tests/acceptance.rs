//! Acceptance battery: one pass/fail line per criterion followed by its checks.
//!
//! Criteria run one at a time so their runtime checks measure a quiet process.
//! Positional arguments select criteria by name substring; `--list` prints the names.

use std::process::ExitCode;

use s3flow::verify::{self, VerifyOptions};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let filters: Vec<&str> = args.iter().filter(|a| !a.starts_with('-')).map(String::as_str).collect();
    let selected: Vec<&str> =
        verify::ITEMS.iter().copied().filter(|name| filters.is_empty() || filters.iter().any(|f| name.contains(f))).collect();

    if args.iter().any(|a| a == "--list") {
        for name in &selected {
            println!("{name}: test");
        }
        return ExitCode::SUCCESS;
    }

    let mut reports = Vec::new();
    for name in &selected {
        let report = verify::run_item(name, &VerifyOptions::default());
        println!("{}", report.table());
        reports.push(report);
    }

    println!();
    println!("acceptance summary");
    for r in &reports {
        println!("{}", r.summary());
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
