mod common;

#[test]
fn moment_identities_hold_within_three_standard_errors() {
    for check in common::moment_checks(1_000_000, 2024) {
        assert!(
            check.sigmas() <= 3.0,
            "{}: {} vs {} ({:.2} se)",
            check.name,
            check.got,
            check.want,
            check.sigmas()
        );
    }
}
