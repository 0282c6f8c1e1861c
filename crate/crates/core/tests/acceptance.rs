//! Acceptance suite at the reference resolution (lmax 16, grid order 96).
//! Runs without the libtest harness so the per-criterion lines always show
//! in `cargo test` output; exits non-zero if any criterion fails.

use liquid_drop::verify::{run, VerifyOptions, CHECKS};

/// Tolerances as pinned in the checks, echoed here so a change to one shows
/// up in review of this file too.
const PINNED: [(&str, &[f64]); 10] = [
    ("ball", &[1e-8]),
    ("funk-hecke", &[1e-6, 1e-10]),
    ("spectrum", &[1e-5, 1e-6]),
    ("virial", &[1e-6]),
    ("expansions", &[2.0, 4.0]),
    ("second-variation", &[1e-4]),
    ("transversality", &[1e-3]),
    ("branch", &[2e-3, 1e-2, 2e-2]),
    ("bohr-wheeler", &[3e-2]),
    ("equilibrium", &[1e-8, 1e-7, 0.0]),
];

fn main() {
    let report = run(&VerifyOptions::default()).expect("reference options are valid");
    let mut failed = Vec::new();
    for (n, key) in CHECKS.iter().enumerate() {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.check == *key).collect();
        let pass = !rows.is_empty() && rows.iter().all(|r| r.pass);
        let worst = rows
            .iter()
            .filter(|r| r.tol > 0.0)
            .map(|r| r.deviation / r.tol)
            .fold(0.0, f64::max);
        println!(
            "criterion {:>2} {:<17} {}  ({} rows, worst deviation/tol = {:.3e})",
            n + 1,
            key,
            if pass { "PASS" } else { "FAIL" },
            rows.len(),
            worst
        );
        let pinned = PINNED[n].1;
        for r in &rows {
            assert!(
                pinned.iter().any(|t| (t - r.tol).abs() <= 1e-15 * t.max(1.0)),
                "{key}: tolerance {} of '{}' is not pinned",
                r.tol,
                r.quantity
            );
        }
        if !pass {
            failed.push(*key);
        }
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}\n{}", report.table());
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria pass", CHECKS.len());
}
