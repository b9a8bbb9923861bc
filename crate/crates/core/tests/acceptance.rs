use std::io::Write;

use cubetoric::acceptance::run_all;

#[test]
fn acceptance_criteria() {
    let reports = run_all();
    // straight to the stream so the lines show without --nocapture
    let mut err = std::io::stderr().lock();
    for r in &reports {
        writeln!(err, "{r}").unwrap();
    }
    assert_eq!(reports.len(), 10);
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
