//! End-to-end acceptance run: executes every numbered invariant check once
//! and asserts each passes, printing the measured one-line summary for all of
//! them first so a failure still shows the full picture.
//!
//! Run with `cargo test --release -p ks-cli --test acceptance -- --nocapture`
//! (the suite solves spectra down to ν = 1e−5 and takes a few minutes in
//! debug builds).

use ks_cli::checks::run_all;

#[test]
fn acceptance_criteria() {
    let outcomes = run_all(42);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
