use polyflow::suites::{properties, resolvent_identity, run_suite, SUITES};
use polyflow_core::formal_solver::resolvent_poly;
use polyflow_core::poly::UniPoly;

/// Resolvent with its top coefficient nudged, standing in for a broken
/// implementation.
fn perturbed_resolvent(u: f64, q: &UniPoly) -> UniPoly {
    let p = resolvent_poly(u, q);
    let mut c = p.coeffs().to_vec();
    if let Some(last) = c.last_mut() {
        *last *= 1.0 + 1e-9;
    }
    UniPoly::new(c)
}

#[test]
fn injected_resolvent_bug_is_caught() {
    let good = resolvent_identity(0, resolvent_poly);
    assert!(good.passed, "{}", good.line());
    let bad = resolvent_identity(0, perturbed_resolvent);
    assert!(!bad.passed);
    assert!(bad.counterexample.is_some());
    assert!(bad.line().contains("counterexample"));
}

#[test]
fn unknown_suite() {
    assert!(properties("nonsense").is_none());
    assert!(run_suite("nonsense", 0).is_none());
}

#[test]
fn suites_are_seed_deterministic() {
    for s in ["geometry", "series"] {
        let a: Vec<String> = run_suite(s, 3).unwrap().iter().map(|r| r.line()).collect();
        let b: Vec<String> = run_suite(s, 3).unwrap().iter().map(|r| r.line()).collect();
        assert_eq!(a, b);
    }
    assert_eq!(SUITES.len(), 5);
}
