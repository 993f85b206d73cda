//! Full verification suite as an integration test: one line per criterion.

use qsync_core::verify::run_all;

#[test]
fn acceptance_criteria() {
    let reports = run_all().expect("criteria must run to completion");
    let mut all_passed = true;
    for r in &reports {
        println!("{}", r.line());
        all_passed &= r.passed;
        assert!(
            r.elapsed_s < r.runtime_limit_s,
            "criterion {} exceeded its runtime budget: {:.1}s > {:.0}s",
            r.id,
            r.elapsed_s,
            r.runtime_limit_s
        );
    }
    assert!(all_passed, "at least one acceptance criterion failed (see lines above)");
}
