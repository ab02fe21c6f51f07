//! Acceptance suite: one test per verification group, each printing one
//! pass/fail line per check. Run with `--nocapture` to see lines for
//! passing groups too.

use roadgame_cli::verify::{run, VerifyOptions};

fn run_group(filter: &str) {
    let opts = VerifyOptions { seed: 0, filter: Some(filter.to_string()) };
    let checks = run(&opts);
    assert!(!checks.is_empty(), "no checks ran for group {filter}");
    let mut failures = Vec::new();
    for check in &checks {
        println!("{}", check.render());
        if !check.passed {
            failures.push(check.render());
        }
    }
    assert!(
        failures.is_empty(),
        "{} of {} checks failed in group '{filter}':\n{}",
        failures.len(),
        checks.len(),
        failures.join("\n")
    );
}

#[test]
fn criterion_1_example1_family() {
    run_group("example1");
}

#[test]
fn criterion_2_example2_family() {
    run_group("example2");
}

#[test]
fn criterion_3_example3_family() {
    run_group("example3");
}

#[test]
fn criterion_4_bound_validity_on_random_networks() {
    run_group("bound-validity");
}

#[test]
fn criterion_5_beta_machinery() {
    run_group("beta");
}

#[test]
fn criterion_6_nonmonotone_instance() {
    run_group("nonmonotone");
}

#[test]
fn criterion_7_split_and_eta() {
    run_group("split-eta");
}

#[test]
fn criterion_8_equilibrium_correctness() {
    run_group("equilibrium");
}

#[test]
fn criterion_9_sweep_regeneration() {
    run_group("sweep");
}
