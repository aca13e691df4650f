//! Acceptance gate: every verification suite must pass at its stated
//! tolerance. One line per criterion; the run fails if any line fails.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines as the suites finish.

use gec::checks::{suites, SuiteReport};

fn describe(report: &SuiteReport) -> String {
    let worst = report
        .worst()
        .map(|c| {
            format!(
                "worst check `{}`: {:.3e} vs tolerance {:.3e}",
                c.name, c.observed, c.tolerance
            )
        })
        .unwrap_or_else(|| "no checks ran".to_string());
    format!(
        "criterion {} [{}] — {}: {} ({}; {} ms)",
        report.criterion,
        report.suite,
        report.summary,
        if report.passed() { "PASS" } else { "FAIL" },
        worst,
        report.wall_ms
    )
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    let mut failures = Vec::new();

    for spec in suites() {
        let report = match spec.run() {
            Ok(report) => report,
            Err(e) => {
                let line = format!(
                    "criterion {} [{}] — {}: FAIL (suite error: {e})",
                    spec.criterion, spec.name, spec.summary
                );
                println!("{line}");
                lines.push(line.clone());
                failures.push(line);
                continue;
            }
        };
        let line = describe(&report);
        println!("{line}");
        if !report.passed() {
            for c in report.checks.iter().filter(|c| !c.passed) {
                let detail = format!(
                    "    failed check `{}`: observed {:.6e}, tolerance {:.6e} — {}",
                    c.name, c.observed, c.tolerance, c.detail
                );
                println!("{detail}");
                failures.push(format!("{line}\n{detail}"));
            }
        }
        lines.push(line);
    }

    assert!(
        failures.is_empty(),
        "acceptance failures:\n{}",
        failures.join("\n")
    );
}
