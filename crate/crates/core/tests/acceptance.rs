//! Acceptance criteria. Each test runs one criterion at its stated tolerance
//! and prints a single PASS/FAIL line; `--nocapture` shows them all.

use std::time::Instant;

use crgeom::config::RunConfig;
use crgeom::verify::{run_suite, Check};

fn criterion(n: u32, title: &str, suite: &str) {
    let cfg = RunConfig::default();
    let start = Instant::now();
    let checks = run_suite(suite, &cfg).unwrap_or_else(|e| panic!("criterion {n} ({title}): {e}"));
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    println!(
        "criterion {n:>2} {:<4} {title} ({} checks, {secs:.1}s)",
        if failed.is_empty() { "PASS" } else { "FAIL" },
        checks.len()
    );
    for c in &checks {
        println!("    {:<4} {:<58} {:.3e} vs {:.1e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.measured, c.tol);
    }
    assert!(!checks.is_empty(), "criterion {n} ran no checks");
    assert!(failed.is_empty(), "criterion {n} failed: {:?}", failed.iter().map(|c| &c.name).collect::<Vec<_>>());
}

#[test]
fn criterion_01_standard_calibration() {
    criterion(1, "standard structure calibration", "standard");
}

#[test]
fn criterion_02_transformation_law() {
    criterion(2, "Cartan tensor transformation law", "transformation-law");
}

#[test]
fn criterion_03_contact_independence() {
    criterion(3, "mu independent of the contact form", "contact-independence");
}

#[test]
fn criterion_04_cross_formula() {
    criterion(4, "trace and pseudohermitian routes agree", "cross-formula");
}

#[test]
fn criterion_05_first_variation() {
    criterion(5, "first variation gradient check", "first-variation");
}

#[test]
fn criterion_06_cartan_flow() {
    criterion(6, "Cartan flow monotonicity", "cartan-flow");
}

#[test]
fn criterion_07_yamabe_flow() {
    criterion(7, "Yamabe flow consistency", "yamabe-flow");
}

#[test]
fn criterion_08_lens_quotients() {
    criterion(8, "lens quotients divide mu", "lens");
}

#[test]
fn criterion_09_monopole_residuals() {
    criterion(9, "monopole residual checks", "monopole");
}

#[test]
fn criterion_10_rigidity() {
    criterion(10, "rigidity certificate", "rigidity");
}
