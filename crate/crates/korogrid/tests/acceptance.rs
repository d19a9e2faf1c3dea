//! Acceptance suite: runs every self-test criterion at its pinned tolerance
//! and prints one pass/fail line per criterion.
//!
//! Run with `cargo test -p korogrid --test acceptance -- --nocapture` to see
//! the per-criterion lines and measured values.

use korogrid::harness::selftest;

fn check(report: selftest::CriterionReport) {
    println!("{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn criterion_01_hat_net_exactness() {
    check(selftest::hat_net_exactness());
}

#[test]
fn criterion_02_multiplication_contract() {
    check(selftest::multiplication_contract());
}

#[test]
fn criterion_03_product_net_contract() {
    check(selftest::product_net_contract());
}

#[test]
fn criterion_04_coefficient_decay() {
    check(selftest::coefficient_decay());
}

#[test]
fn criterion_05_point_counts() {
    check(selftest::point_counts());
}

#[test]
fn criterion_06_grid_convergence_rate() {
    check(selftest::grid_convergence_rate());
}

#[test]
fn criterion_07_end_to_end_accuracy() {
    check(selftest::end_to_end_accuracy());
}

#[test]
fn criterion_08_scaling_shape() {
    check(selftest::scaling_shape());
}

#[test]
fn criterion_09_oracle_equivalence() {
    check(selftest::oracle_equivalence());
}

#[test]
fn criterion_10_serialization_round_trip() {
    check(selftest::serialization_round_trip());
}
