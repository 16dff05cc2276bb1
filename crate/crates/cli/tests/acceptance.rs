//! The acceptance suite: runs the `all` preset twice and prints one line
//! per criterion. Tolerances live in the experiment gates; runtime budgets
//! are checked here because runtimes are kept out of the reports.

use lognd_cli::config::parse;
use lognd_cli::{run_config, RunOptions, RunSummary};
use std::time::Duration;

/// `(criterion, experiment, runtime budget in seconds)`.
const CRITERIA: [(u32, &str, u64); 12] = [
    (1, "disk_oracle", 30),
    (2, "scaling_identity", 10),
    (3, "contour_crosscheck", 10),
    (4, "quadrature_crosscheck", 60),
    (5, "fd_check", 120),
    (6, "tau_rate", 60),
    (7, "relative_boundedness", 120),
    (8, "order_inequalities", 60),
    (9, "norm_equivalence", 60),
    (10, "dl_lipschitz", 60),
    (11, "neumann_series", 60),
    (12, "linearization_compare", 300),
];

fn run_suite(out: &std::path::Path) -> RunSummary {
    let raw = parse("experiment = \"all\"\nseed = 0\n").unwrap();
    let opts = RunOptions {
        out: Some(out.to_path_buf()),
        ..RunOptions::default()
    };
    run_config(raw, &opts, |_| {}).expect("the suite runs")
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn acceptance() {
    let first_dir = tempfile::tempdir().unwrap();
    let second_dir = tempfile::tempdir().unwrap();
    let first = run_suite(first_dir.path());

    let mut all_ok = true;
    for (criterion, name, budget) in CRITERIA {
        let run = first.find(name).unwrap_or_else(|| panic!("{name} did not run"));
        let within_budget = run.runtime < Duration::from_secs(budget);
        let ok = run.report.passed() && within_budget;
        all_ok &= ok;
        let failed: Vec<String> = run.report.failed_gates().iter().map(|g| g.describe()).collect();
        println!(
            "{} criterion {criterion:>2} {name}: {}/{} gates, {:.2} s (budget {budget} s){}",
            verdict(ok),
            run.report.gates.len() - failed.len(),
            run.report.gates.len(),
            run.runtime.as_secs_f64(),
            if failed.is_empty() { String::new() } else { format!("; {}", failed.join("; ")) }
        );
    }

    let second = run_suite(second_dir.path());
    let a = std::fs::read_to_string(&first.manifest).unwrap();
    let b = std::fs::read_to_string(&second.manifest).unwrap();
    let identical = a == b && !a.is_empty();
    all_ok &= identical;
    println!(
        "{} criterion 13 determinism: {} manifest entries, identical across two runs: {identical}",
        verdict(identical),
        a.lines().count()
    );
    assert!(all_ok, "acceptance criteria failed");
}
