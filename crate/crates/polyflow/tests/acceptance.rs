//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use polyflow::suites::{self, PropertyResult};
use polyflow_core::formal_solver::resolvent_poly;

const SEED: u64 = 0;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Vec<PropertyResult>,
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            name: "polytope distance sandwich, 1000 polytopes",
            budget: Some(Duration::from_secs(10)),
            run: || vec![suites::distance_sandwich(SEED, 1000)],
        },
        Criterion {
            name: "composition matches literal expansion, 200 instances",
            budget: None,
            run: || vec![suites::composition_oracle(SEED, 200)],
        },
        Criterion {
            name: "composition associativity, 100 triples",
            budget: None,
            run: || vec![suites::associativity(SEED, 100)],
        },
        Criterion {
            name: "resolvent identity to 1e-12",
            budget: None,
            run: || vec![suites::resolvent_identity(SEED, resolvent_poly)],
        },
        Criterion {
            name: "resolvent domination for u >= 2, 200 polynomials",
            budget: None,
            run: || vec![suites::domination(SEED, 200)],
        },
        Criterion {
            name: "majorant recursion matches implicit-series Newton oracle",
            budget: None,
            run: || vec![suites::majorant_matches_newton(SEED)],
        },
        Criterion {
            name: "formal solutions: residual, Bernoulli closed form, perturbation",
            budget: None,
            run: || {
                vec![
                    suites::formal_residual(SEED, 60),
                    suites::bernoulli_agreement(SEED),
                    suites::perturbation_comparison(SEED),
                ]
            },
        },
        Criterion {
            name: "switch finiteness on the 1-D and 2-D systems",
            budget: Some(Duration::from_secs(30)),
            run: || vec![suites::switch_finiteness(SEED)],
        },
        Criterion {
            name: "second-order tangency",
            budget: None,
            run: || vec![suites::tangency_order(SEED)],
        },
        Criterion {
            name: "Yamabe flow with flips on tetrahedron/octahedron/torus",
            budget: Some(Duration::from_secs(60)),
            run: || vec![suites::yamabe_regressions(SEED)],
        },
        Criterion {
            name: "spiral negative control",
            budget: None,
            run: || vec![suites::spiral_control(SEED)],
        },
    ]
}

fn main() -> ExitCode {
    let mut failed = 0;
    let all = criteria();
    for c in &all {
        let start = Instant::now();
        let results = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = c.budget.is_none_or(|b| elapsed <= b);
        let ok = in_budget && results.iter().all(|r| r.passed);
        if !ok {
            failed += 1;
        }
        let budget = c
            .budget
            .map(|b| format!(" (budget {}s)", b.as_secs()))
            .unwrap_or_default();
        println!(
            "{} {} [{:.2}s{budget}]",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64()
        );
        for r in &results {
            println!("    {}", r.line());
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        all.len() - failed,
        all.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
