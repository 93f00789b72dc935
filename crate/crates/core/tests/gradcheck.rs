//! Reverse mode against central finite differences.

mod common;

use std::time::Instant;

use common::gradcases::{all_cases, Case, TOL};
use common::{check_inputs, random_tensor, weighted_sum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn randomized_gradient_checks() {
    let start = Instant::now();
    let cases = all_cases();
    let failures: Vec<&Case> = cases.iter().filter(|(_, r)| !(r.max_rel_err < TOL)).collect();
    for (name, r) in &failures {
        eprintln!("{name}: max rel err {:.3e} at {}", r.max_rel_err, r.worst);
    }
    assert!(cases.len() >= 100, "only {} checks", cases.len());
    assert!(cases.iter().all(|(_, r)| r.probes > 0));
    assert!(failures.is_empty(), "{} of {} gradient checks failed", failures.len(), cases.len());
    assert!(start.elapsed().as_secs() < 120);
}

#[test]
fn checker_flags_a_missing_gradient_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_tensor(&[2, 3], 0.5, 1.5, &mut rng);
    let r = check_inputs(vec![a], |t, x| {
        let d = t.detach(x[0]);
        let y = t.mul(x[0], d)?;
        weighted_sum(t, y, 1)
    });
    assert!(r.max_rel_err > 0.1, "{r:?}");
}
