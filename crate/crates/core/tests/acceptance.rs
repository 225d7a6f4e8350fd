//! The ten acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured numbers before asserting. Lines go
//! straight to the stderr handle so they show even for passing tests.

use std::io::Write;

use quadprop::verify::{run, Suite, SuiteReport, VerifyOptions};

fn criterion(number: usize, suite: Suite) {
    let report = run(suite, &VerifyOptions::default()).expect("suite runs");
    print_line(number, &report);
    let failures: Vec<_> = report.failures().collect();
    assert!(failures.is_empty(), "criterion {number} ({suite}) failed: {failures:#?}");
}

fn print_line(number: usize, report: &SuiteReport) {
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    let values = report
        .checks
        .iter()
        .map(|c| format!("{} = {:.3e}", c.name, c.value))
        .collect::<Vec<_>>()
        .join("; ");
    let mut text = format!(
        "\n{verdict} criterion {number} [{}] ({:.1} s): {values}\n",
        report.suite,
        report.elapsed.as_secs_f64()
    );
    for note in &report.notes {
        text.push_str(&format!("    note: {note}\n"));
    }
    let _ = std::io::stderr().lock().write_all(text.as_bytes());
}

#[test]
fn criterion_01_kernel_uniqueness() {
    criterion(1, Suite::Uniqueness);
}

#[test]
fn criterion_02_schrodinger_residuals() {
    criterion(2, Suite::Residuals);
}

#[test]
fn criterion_03_spectral_sum() {
    criterion(3, Suite::Spectral);
}

#[test]
fn criterion_04_short_time_limit() {
    criterion(4, Suite::ShortTime);
}

#[test]
fn criterion_05_appendix_system() {
    criterion(5, Suite::Appendix);
}

#[test]
fn criterion_06_oracle_agreement() {
    criterion(6, Suite::Oracle);
}

#[test]
fn criterion_07_unitary_equivalence() {
    criterion(7, Suite::Unitary);
}

#[test]
fn criterion_08_uncertainty_relations() {
    criterion(8, Suite::Uncertainty);
}

#[test]
fn criterion_09_classical_layer() {
    criterion(9, Suite::Classical);
}

#[test]
fn criterion_10_orthonormality() {
    criterion(10, Suite::Orthonormality);
}
