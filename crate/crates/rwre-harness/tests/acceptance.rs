//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line. These call the same check functions as
//! `rwre verify full`.

use rwre_harness::verify::{self, CheckResult, FaultInjection};

const WORKERS: usize = 2;

fn assert_criterion(number: usize, result: CheckResult) {
    let status = if result.passed { "PASS" } else { "FAIL" };
    println!("criterion {number:02} {status} [{}]: {}", result.name, result.details);
    assert!(result.passed, "criterion {number:02} failed: {}", result.details);
}

#[test]
fn criterion_01_sublevel_exponent_closed_form() {
    assert_criterion(1, verify::c01_sublevel_exponent_closed_form());
}

#[test]
fn criterion_02_chord_identity_on_random_laws() {
    assert_criterion(2, verify::c02_chord_identity_on_random_laws());
}

#[test]
fn criterion_03_circuit_oracle_equivalence() {
    assert_criterion(3, verify::c03_circuit_oracle_equivalence(FaultInjection::None));
}

#[test]
fn criterion_04_line_tree_regimes() {
    assert_criterion(4, verify::c04_line_tree_regimes(WORKERS));
}

#[test]
fn criterion_05_regular_tree_positive_speed() {
    assert_criterion(5, verify::c05_regular_tree_positive_speed(WORKERS));
}

#[test]
fn criterion_06_zero_speed_regime() {
    assert_criterion(6, verify::c06_zero_speed_regime(WORKERS));
}

#[test]
fn criterion_07_renewal_identity() {
    assert_criterion(7, verify::c07_renewal_identity(WORKERS));
}

#[test]
fn criterion_08_visited_per_generation_bounded() {
    assert_criterion(8, verify::c08_visited_per_generation_bounded(WORKERS));
}

#[test]
fn criterion_09_projection_domination() {
    assert_criterion(9, verify::c09_projection_domination());
}

#[test]
fn criterion_10_reinforced_representation() {
    assert_criterion(10, verify::c10_reinforced_representation());
}

#[test]
fn criterion_11_reinforced_speed_and_bound() {
    assert_criterion(11, verify::c11_reinforced_speed_and_bound(WORKERS));
}

#[test]
fn criterion_12_moment_growth_rate() {
    assert_criterion(12, verify::c12_moment_growth_rate(WORKERS));
}
