use phasefield_core::structural;

fn assert_check(c: phasefield_core::harness::Check) {
    assert!(c.pass, "{}: {} exceeds {} ({})", c.name, c.value, c.bound, c.detail);
}

#[test]
fn change_of_variables_holds() {
    assert_check(structural::change_of_variables().unwrap());
}

#[test]
fn psi_inverse_holds() {
    assert_check(structural::psi_inverse().unwrap());
}

#[test]
fn tubular_jacobian_holds() {
    assert_check(structural::tubular_jacobian().unwrap());
}

#[test]
fn energy_report_affine_holds() {
    assert_check(structural::energy_report_affine().unwrap());
}

#[test]
fn runs_are_deterministic() {
    assert_check(structural::determinism().unwrap());
}
