//! Randomized property suites behind `polyflow verify` and the acceptance
//! tests. Every property is a function of a seed and returns a
//! [`PropertyResult`]; sizes are parameters so the acceptance run can use
//! the full instance counts.

use std::f64::consts::PI;
use std::fmt::Debug;

use polyflow_core::flow_tracer::{
    asymptotic_membership, capture_solution, check_facet_agreement, local_exit_order, trace_flow,
    ExitOrder, FlowTrace, MembershipVerdict, TraceOptions,
};
use polyflow_core::formal_solver::{
    apply_shifted_derivative, check_domination, check_formal_residual, compare_perturbed,
    construct_formal_solution, degree_report, fit_growth_rate, majorant_table, resolvent_poly,
    taylor_solution, StableSpectrum,
};
use polyflow_core::geometry::{
    check_lemma14, max_facet_distance, project_onto_polytope, validate_cover, HalfSpace, Polytope,
    DEFAULT_PROJECTION_TOL,
};
use polyflow_core::lambdaseries::{compose_with_analytic, LambdaSeries};
use polyflow_core::ode::{integrate, rk4_fixed, StepControl};
use polyflow_core::poly::{Poly, UniPoly};
use polyflow_core::powerseries::PowerSeries;
use polyflow_core::yamabe::{
    convexity_probe, curvature, flat_torus, flip_to_delaunay, octahedron, run_flow, run_flow_euler,
    tetrahedron, ConformalState, TriangulatedSurface,
};
use polyflow_core::{Error, MultiIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracles;
use crate::regression;

pub const SUITES: [&str; 5] = ["geometry", "series", "solver", "tracer", "yamabe"];

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub counterexample: Option<String>,
}

impl PropertyResult {
    fn new(suite: &'static str, name: &'static str) -> Self {
        PropertyResult {
            suite,
            name,
            passed: true,
            detail: String::new(),
            counterexample: None,
        }
    }

    /// Marks a failure, keeping the first counterexample.
    fn fail(&mut self, what: impl Debug) {
        self.passed = false;
        if self.counterexample.is_none() {
            self.counterexample = Some(format!("{what:?}"));
        }
    }

    fn check(&mut self, ok: bool, what: impl Debug) {
        if !ok {
            self.fail(what);
        }
    }

    fn detail(mut self, d: String) -> Self {
        self.detail = d;
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {}/{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name
        );
        if !self.detail.is_empty() {
            s.push_str(": ");
            s.push_str(&self.detail);
        }
        if let Some(c) = &self.counterexample {
            s.push_str("\n    counterexample: ");
            s.push_str(c);
        }
        s
    }
}

pub type Property = fn(u64) -> PropertyResult;

pub fn properties(suite: &str) -> Option<Vec<Property>> {
    Some(match suite {
        "geometry" => vec![
            |s| distance_sandwich(s, 1000),
            projection_fixes_interior,
            single_halfspace_distance,
            facet_distance_below_projection,
            regression_covers_are_complete,
        ],
        "series" => vec![
            |s| composition_oracle(s, 200),
            |s| associativity(s, 100),
            composition_evaluation,
            majorant_dominates,
            derivative_richardson,
            lambda_composition_evaluation,
            lambda_associativity,
            star_inequalities,
            dominant_term_stability,
        ],
        "solver" => vec![
            |s| resolvent_identity(s, resolvent_poly),
            |s| domination(s, 200),
            majorant_matches_newton,
            |s| formal_residual(s, 60),
            bernoulli_agreement,
            degree_bound,
            perturbation_comparison,
            taylor_accuracy,
        ],
        "tracer" => vec![
            switch_finiteness,
            tangency_order,
            single_cell_reference,
            spiral_control,
            facet_agreement,
        ],
        "yamabe" => vec![
            yamabe_regressions,
            yamabe_euler_reference,
            gauss_bonnet_through_flips,
            exp_convexity,
        ],
        _ => return None,
    })
}

/// Runs every property of `suite` on its own thread; results come back in
/// declaration order.
pub fn run_suite(suite: &str, seed: u64) -> Option<Vec<PropertyResult>> {
    let props = properties(suite)?;
    Some(std::thread::scope(|sc| {
        let handles: Vec<_> = props.iter().map(|p| sc.spawn(move || p(seed))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("property panicked"))
            .collect()
    }))
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

fn unit_vector(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Random polytope around a random interior point `p`.
pub fn random_polytope(r: &mut ChaCha8Rng, dim: usize, facets: usize) -> Polytope {
    let p: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let hs = (0..facets)
        .map(|_| {
            let a = unit_vector(r, dim);
            let margin = r.gen_range(0.05..1.0);
            let b = a.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>() - margin;
            HalfSpace::new(a, b).unwrap()
        })
        .collect();
    Polytope::new(hs, p).unwrap()
}

// ---------------------------------------------------------------- geometry

/// Distance sandwich on random polytopes in dimensions 2–5 with 3–8
/// facets; the projection distance is also checked against the brute-force
/// active-set oracle.
pub fn distance_sandwich(seed: u64, instances: usize) -> PropertyResult {
    let mut res = PropertyResult::new("geometry", "distance_sandwich");
    let mut r = rng(seed, 1);
    let mut exterior = 0;
    let mut worst_oracle = 0.0f64;
    for _ in 0..instances {
        let dim = r.gen_range(2..=5);
        let facets = r.gen_range(3..=8);
        let d = random_polytope(&mut r, dim, facets);
        let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
        let inside = d.contains(&x, 0.0);
        match check_lemma14(d.witness(), &x, &d) {
            Err(Error::InteriorPoint) if inside => {}
            Ok(b) if !inside => {
                exterior += 1;
                res.check(b.holds(1e-9), (&x, b));
                let oracle = oracles::brute_force_distance(&x, &d);
                worst_oracle = worst_oracle.max((oracle - b.upper).abs());
                res.check(
                    (oracle - b.upper).abs() <= 1e-7,
                    ("oracle", &x, oracle, b.upper, &d),
                );
            }
            other => res.fail((&x, inside, other)),
        }
    }
    res.detail(format!(
        "{instances} instances ({exterior} exterior), max |d - oracle| = {worst_oracle:.1e}"
    ))
}

pub fn projection_fixes_interior(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("geometry", "projection_fixes_interior");
    let mut r = rng(seed, 2);
    for _ in 0..200 {
        let dim = r.gen_range(2..=5);
        let facets = r.gen_range(3..=8);
        let d = random_polytope(&mut r, dim, facets);
        let w = r.gen_range(0.0..1.0);
        // points between the witness and a random direction stay inside
        let dir = unit_vector(&mut r, dim);
        let x: Vec<f64> = d
            .witness()
            .iter()
            .zip(&dir)
            .map(|(p, v)| p + w * d.interior_margin() * v)
            .collect();
        let proj = project_onto_polytope(&x, &d, DEFAULT_PROJECTION_TOL).unwrap();
        res.check(proj.closest == x && proj.distance == 0.0, (&x, proj));
    }
    res.detail("200 interior points".into())
}

pub fn single_halfspace_distance(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("geometry", "single_halfspace_distance");
    let mut r = rng(seed, 3);
    for _ in 0..300 {
        let dim = r.gen_range(1..=5);
        let a = unit_vector(&mut r, dim);
        let h = HalfSpace::new(a.clone(), r.gen_range(-1.0..1.0)).unwrap();
        let p: Vec<f64> = h
            .project(&vec![0.0; dim])
            .iter()
            .zip(&a)
            .map(|(x, y)| x + y)
            .collect();
        let d = Polytope::new(vec![h.clone()], p).unwrap();
        let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
        let proj = project_onto_polytope(&x, &d, DEFAULT_PROJECTION_TOL).unwrap();
        let ds = h.signed_distance(&x);
        res.check(
            (ds.max(0.0) - proj.distance).abs() <= 1e-10,
            (&x, ds, proj.distance),
        );
        // linearity of d_s
        let y: Vec<f64> = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
        let t = r.gen_range(0.0..1.0);
        let z: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        let lin = (1.0 - t) * ds + t * h.signed_distance(&y);
        res.check(
            (h.signed_distance(&z) - lin).abs() <= 1e-12,
            ("linearity", &x, &y, t),
        );
    }
    res.detail("300 half-spaces".into())
}

pub fn facet_distance_below_projection(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("geometry", "facet_distance_below_projection");
    let mut r = rng(seed, 4);
    for _ in 0..300 {
        let dim = r.gen_range(2..=5);
        let facets = r.gen_range(3..=8);
        let d = random_polytope(&mut r, dim, facets);
        let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
        let proj = project_onto_polytope(&x, &d, DEFAULT_PROJECTION_TOL).unwrap();
        let mid = max_facet_distance(&x, &d);
        res.check(mid <= proj.distance + 1e-9, (&x, mid, proj.distance));
    }
    res.detail("300 samples".into())
}

pub fn regression_covers_are_complete(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("geometry", "regression_covers_are_complete");
    for (name, f) in regression_systems() {
        let rep = validate_cover(f.cover(), 2000, seed);
        res.check(rep.passes(), (name, rep));
    }
    res.detail("2000 samples per cover".into())
}

fn regression_systems() -> Vec<(&'static str, polyflow_core::flow_tracer::PiecewiseField)> {
    vec![
        ("one_dim", regression::one_dim()),
        ("decoupled_plane", regression::decoupled_plane()),
        ("tangency", regression::tangency()),
        ("spiral", regression::spiral()),
        ("bernoulli_line", regression::bernoulli_line()),
    ]
}

// ---------------------------------------------------------------- series

/// Random sparse series with `terms` monomials of degree `min_deg..=order`.
/// Integer coefficients keep every later product exact.
pub fn random_series(
    r: &mut ChaCha8Rng,
    in_dim: usize,
    out_dim: usize,
    order: u32,
    terms: usize,
    min_deg: u32,
    integer: bool,
) -> PowerSeries {
    let mut s = PowerSeries::new(in_dim, out_dim, order);
    let pool = MultiIndex::all_up_to(in_dim, order);
    let pool: Vec<_> = pool.into_iter().filter(|i| i.degree() >= min_deg).collect();
    for _ in 0..terms {
        let idx = pool.choose(r).unwrap().clone();
        let b: Vec<f64> = (0..out_dim)
            .map(|_| {
                if integer {
                    r.gen_range(-3i32..=3) as f64
                } else {
                    r.gen_range(-1.0..1.0)
                }
            })
            .collect();
        s.insert(idx, b).unwrap();
    }
    s
}

/// Random centered λ-series with polynomial coefficients of degree ≤ 2.
pub fn random_lambda(
    r: &mut ChaCha8Rng,
    rates: &[f64],
    dim: usize,
    order: u32,
    terms: usize,
    integer: bool,
) -> LambdaSeries {
    let m = rates.len();
    let mut x = LambdaSeries::new(rates.to_vec(), dim, order).unwrap();
    let pool: Vec<_> = MultiIndex::all_up_to(m, order)
        .into_iter()
        .filter(|i| !i.is_zero())
        .collect();
    for _ in 0..terms {
        let j = pool.choose(r).unwrap().clone();
        let deg = r.gen_range(0..=2);
        let comps = (0..dim)
            .map(|_| {
                UniPoly::new(
                    (0..=deg)
                        .map(|_| {
                            if integer {
                                r.gen_range(-3i32..=3) as f64
                            } else {
                                r.gen_range(-1.0..1.0)
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        let p = Poly::from_components(comps);
        let merged = match x.term(&j) {
            Some(q) => q.add(&p),
            None => p,
        };
        let mut y = LambdaSeries::new(rates.to_vec(), dim, order).unwrap();
        for (k, q) in x.terms() {
            if *k != j {
                y.insert(k.clone(), q.clone()).unwrap();
            }
        }
        if !merged.is_zero() {
            y.insert(j, merged).unwrap();
        }
        x = y;
    }
    x
}

fn max_coeff_diff(a: &PowerSeries, b: &PowerSeries) -> f64 {
    let mut keys: Vec<_> = a
        .coeffs()
        .keys()
        .chain(b.coeffs().keys())
        .cloned()
        .collect();
    keys.sort();
    keys.dedup();
    let zero = vec![0.0; a.out_dim()];
    keys.iter()
        .map(|k| {
            let x = a.coeff(k).unwrap_or(&zero);
            let y = b.coeff(k).unwrap_or(&zero);
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn lambda_diff(a: &LambdaSeries, b: &LambdaSeries) -> f64 {
    a.sub(b).map(|d| d.max_abs_coeff()).unwrap_or(f64::INFINITY)
}

/// Power-series and λ-series composition against the literal expansion
/// oracle, `instances` random sparse cases each (orders ≤ 6, dims ≤ 3).
pub fn composition_oracle(seed: u64, instances: usize) -> PropertyResult {
    let mut res = PropertyResult::new("series", "composition_oracle");
    let mut r = rng(seed, 10);
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (n, m, k) = (r.gen_range(1..=3), r.gen_range(1..=3), r.gen_range(1..=3));
        let order = r.gen_range(1..=6);
        let (tf, tg) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let f = random_series(&mut r, m, k, order, tf, 0, false);
        let g = random_series(&mut r, n, m, order, tg, 1, false);
        let d = max_coeff_diff(&f.compose(&g).unwrap(), &oracles::compose_literal(&f, &g));
        worst = worst.max(d);
        if d > 1e-12 {
            mismatches += 1;
            res.fail(("power", &f, &g, d));
        }
        let rates: Vec<f64> = (0..n).map(|_| -r.gen_range(0.2..3.0)).collect();
        let tx = r.gen_range(1..=5);
        let x = random_lambda(&mut r, &rates, m, order, tx, false);
        let d = lambda_diff(
            &compose_with_analytic(&f, &x).unwrap(),
            &oracles::compose_lambda_literal(&f, &x),
        );
        worst = worst.max(d);
        if d > 1e-12 {
            mismatches += 1;
            res.fail(("lambda", &f, &x, d));
        }
    }
    res.detail(format!(
        "{instances} power + {instances} λ instances, {mismatches} mismatches, max diff {worst:.1e}"
    ))
}

/// `(f∘g)∘h = f∘(g∘h)` coefficient for coefficient with integer data.
pub fn associativity(seed: u64, instances: usize) -> PropertyResult {
    let mut res = PropertyResult::new("series", "associativity");
    let mut r = rng(seed, 11);
    for _ in 0..instances {
        let (a, b, c, d) = (
            r.gen_range(1..=3),
            r.gen_range(1..=3),
            r.gen_range(1..=3),
            r.gen_range(1..=3),
        );
        let order = r.gen_range(1..=5);
        let f = random_series(&mut r, b, a, order, 4, 0, true);
        let g = random_series(&mut r, c, b, order, 4, 1, true);
        let h = random_series(&mut r, d, c, order, 4, 1, true);
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        res.check(left == right, (&f, &g, &h));
    }
    res.detail(format!("{instances} triples"))
}

pub fn composition_evaluation(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "composition_evaluation");
    let mut r = rng(seed, 12);
    for _ in 0..100 {
        let (n, m) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let order = r.gen_range(1..=8);
        let f = random_series(&mut r, m, 2, order, 5, 0, false);
        let g = random_series(&mut r, n, m, order, 5, 1, false);
        let h = f.compose(&g).unwrap();
        let full_order = order * order;
        let full = f
            .clone()
            .with_order(full_order)
            .compose(&g.clone().with_order(full_order))
            .unwrap();
        let rho = 0.05;
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-rho..rho)).collect();
        let direct = f.evaluate(&g.evaluate(&x));
        let exact = full.evaluate(&x);
        // truncation error bound from the discarded coefficients
        let bound: f64 = full
            .coeffs()
            .iter()
            .filter(|(k, _)| k.degree() > order)
            .map(|(k, b)| {
                b.iter().fold(0.0f64, |a, v| a.max(v.abs())) * rho.powi(k.degree() as i32)
            })
            .sum();
        let got = h.evaluate(&x);
        for i in 0..2 {
            res.check((exact[i] - direct[i]).abs() <= 1e-12, ("exact", &f, &g, &x));
            res.check(
                (got[i] - direct[i]).abs() <= bound + 1e-12,
                ("truncated", &f, &g, &x, bound),
            );
        }
    }
    res.detail("100 instances, |x| ≤ 0.05".into())
}

pub fn majorant_dominates(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "majorant_dominates");
    let mut r = rng(seed, 13);
    for _ in 0..100 {
        let f = random_series(&mut r, 2, 2, 5, 6, 0, false);
        let mj = f.majorant();
        for (k, b) in f.coeffs() {
            let c = mj.coeff(k).unwrap();
            res.check(b.iter().zip(c).all(|(x, y)| *y == x.abs()), (&f, k));
        }
        res.check(mj.coeffs().len() == f.coeffs().len(), &f);
    }
    res.detail("100 series".into())
}

pub fn derivative_richardson(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "derivative_richardson");
    let mut r = rng(seed, 14);
    let mut ratios = Vec::new();
    for _ in 0..50 {
        let m = r.gen_range(1..=2);
        let rates: Vec<f64> = (0..m).map(|_| -r.gen_range(0.3..1.5)).collect();
        let x = random_lambda(&mut r, &rates, 1, 4, 4, false);
        let dx = x.formal_derivative();
        let t = r.gen_range(0.5..2.0);
        let exact = dx.evaluate(t)[0];
        let err =
            |h: f64| ((x.evaluate(t + h)[0] - x.evaluate(t - h)[0]) / (2.0 * h) - exact).abs();
        let (e3, e4) = (err(1e-3), err(1e-4));
        if e3 < 1e-9 {
            continue; // third derivative too small to resolve
        }
        let ratio = e3 / e4;
        ratios.push(ratio);
        res.check((80.0..=120.0).contains(&ratio), (&x, t, e3, e4));
    }
    res.detail(format!("{} series, Richardson ratios ≈ 100", ratios.len()))
}

pub fn lambda_composition_evaluation(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "lambda_composition_evaluation");
    let mut r = rng(seed, 15);
    for _ in 0..60 {
        let m = r.gen_range(1..=2);
        let rates: Vec<f64> = (0..m).map(|_| -r.gen_range(0.5..2.0)).collect();
        let order = r.gen_range(2..=5);
        let x = random_lambda(&mut r, &rates, 2, order, 4, false);
        let f = random_series(&mut r, 2, 1, 3, 4, 0, false);
        let y = compose_with_analytic(&f, &x).unwrap();
        let full_order = order * 3;
        let mut xf = LambdaSeries::new(rates.clone(), 2, full_order).unwrap();
        for (j, p) in x.terms() {
            xf.insert(j.clone(), p.clone()).unwrap();
        }
        let yf = compose_with_analytic(&f, &xf).unwrap();
        for &t in &[4.0, 8.0, 12.0] {
            let direct = f.evaluate(&x.evaluate(t))[0];
            res.check(
                (yf.evaluate(t)[0] - direct).abs() <= 1e-12 * (1.0 + direct.abs()),
                ("exact", &f, &x, t),
            );
            // discarded terms bound the truncation error
            let bound: f64 = yf
                .terms()
                .iter()
                .filter(|(j, _)| j.degree() > order)
                .map(|(j, p)| p.star_eval(t).unwrap() * (j.rate(&rates) * t).exp())
                .sum();
            res.check(
                (y.evaluate(t)[0] - direct).abs() <= bound + 1e-12,
                ("truncated", &f, &x, t, bound),
            );
        }
    }
    res.detail("60 instances at t ∈ {4, 8, 12}".into())
}

pub fn lambda_associativity(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "lambda_associativity");
    let mut r = rng(seed, 16);
    for _ in 0..60 {
        let m = r.gen_range(1..=2);
        let rates: Vec<f64> = (0..m).map(|_| -(r.gen_range(1..=8) as f64) / 4.0).collect();
        let order = r.gen_range(1..=4);
        let x = random_lambda(&mut r, &rates, 2, order, 3, true);
        let g = random_series(&mut r, 2, 2, order, 3, 1, true);
        let f = random_series(&mut r, 2, 1, order, 3, 0, true);
        let left = compose_with_analytic(&f, &compose_with_analytic(&g, &x).unwrap()).unwrap();
        let right = compose_with_analytic(&f.compose(&g).unwrap(), &x).unwrap();
        res.check(left == right, (&f, &g, &x));
    }
    res.detail("60 integer instances".into())
}

pub fn star_inequalities(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "star_inequalities");
    let mut r = rng(seed, 17);
    let rand_poly = |r: &mut ChaCha8Rng| {
        let d = r.gen_range(0..=6);
        UniPoly::new((0..=d).map(|_| r.gen_range(-5i32..=5) as f64).collect())
    };
    for _ in 0..300 {
        let p = rand_poly(&mut r);
        let q = rand_poly(&mut r);
        let a = [0.25, -0.5, 2.0, -4.0][r.gen_range(0..4)];
        for &t in &[0.0, 0.5, 1.0, 2.0, 3.0] {
            let s = |x: &UniPoly| x.star_eval(t).unwrap();
            res.check(s(&p.add(&q)) <= s(&p) + s(&q), ("sum", &p, &q, t));
            res.check(s(&p.scale(a)) == a.abs() * s(&p), ("scale", &p, a, t));
            res.check(s(&p.mul(&q)) <= s(&p) * s(&q), ("product", &p, &q, t));
        }
    }
    res.detail("300 integer pairs".into())
}

pub fn dominant_term_stability(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("series", "dominant_term_stability");
    let mut r = rng(seed, 18);
    for _ in 0..200 {
        let m = r.gen_range(1..=2);
        let rates: Vec<f64> = (0..m).map(|_| -r.gen_range(0.5..1.5)).collect();
        let x = random_lambda(&mut r, &rates, 1, 6, 3, false);
        let Some(d) = x.dominant_term() else { continue };
        let j = MultiIndex::unit(m, 0).plus(&MultiIndex::unit(m, 0));
        let mut far = j.clone();
        while far.rate(&rates) >= d.rate && far.degree() < 6 {
            far = far.plus(&MultiIndex::unit(m, 0));
        }
        if far.rate(&rates) >= d.rate {
            continue;
        }
        let mut y = x.clone();
        let extra = Poly::constant(&[r.gen_range(-10.0..10.0)]);
        let merged = match y.term(&far) {
            Some(p) => p.add(&extra),
            None => extra,
        };
        let mut z = LambdaSeries::new(rates.clone(), 1, 6).unwrap();
        for (k, p) in y.terms() {
            if *k != far {
                z.insert(k.clone(), p.clone()).unwrap();
            }
        }
        z.insert(far, merged).unwrap();
        y = z;
        res.check(y.dominant_term() == Some(d), (&x, d));
    }
    res.detail("200 series".into())
}

// ---------------------------------------------------------------- solver

pub type Resolvent = fn(f64, &UniPoly) -> UniPoly;

pub const RESOLVENT_RATES: [f64; 6] = [-3.0, -1.0, 0.0, 0.5, 2.0, 100.0];

/// `(d/dt - u)` applied to `resolvent(u, Q)` reproduces `Q` to 1e-12 for
/// random `Q` of degree ≤ 10 with dyadic coefficients (exactly representable,
/// so the comparison is not polluted by input rounding).
pub fn resolvent_identity(seed: u64, resolvent: Resolvent) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "resolvent_identity");
    let mut r = rng(seed, 20);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &u in &RESOLVENT_RATES {
        for _ in 0..50 {
            let deg = r.gen_range(0..=10);
            let q = UniPoly::new(
                (0..=deg)
                    .map(|_| r.gen_range(-64i32..=64) as f64 / 16.0)
                    .collect(),
            );
            let back = apply_shifted_derivative(u, &resolvent(u, &q));
            let err = back.sub(&q).max_abs_coeff();
            worst = worst.max(err);
            cases += 1;
            res.check(err <= 1e-12, (u, &q, err));
        }
    }
    res.detail(format!("{cases} polynomials, max error {worst:.1e}"))
}

/// `P*(t) ≤ Q*(t)` on a grid of `t ≥ 2 deg(Q)/u` for `P = (d/dt - u)^{-1}Q`.
pub fn domination(seed: u64, instances: usize) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "domination");
    let mut r = rng(seed, 21);
    let mut violations = 0;
    for _ in 0..instances {
        let u = if r.gen_bool(0.3) {
            2.0
        } else {
            r.gen_range(2.0..50.0)
        };
        let deg = r.gen_range(0..=10);
        let q = UniPoly::new((0..=deg).map(|_| r.gen_range(-1.0..1.0)).collect());
        let t0 = check_domination(u, &q).unwrap();
        let p = resolvent_poly(u, &q);
        for k in 0..=200 {
            let t = t0 + 0.05 * k as f64;
            let (ps, qs) = (p.star_eval(t).unwrap(), q.star_eval(t).unwrap());
            if ps > qs {
                violations += 1;
                res.fail((u, &q, t, ps, qs));
            }
        }
    }
    res.check(
        matches!(
            check_domination(1.9, &UniPoly::constant(1.0)),
            Err(Error::PreconditionU(_))
        ),
        "u < 2 accepted",
    );
    res.detail(format!(
        "{instances} polynomials × 201 grid points, {violations} violations"
    ))
}

/// Majorant recursion against Newton iteration on the implicit equation,
/// `m ≤ 2`, `n ≤ 2`, `|J| ≤ 5`, dyadic `M`.
pub fn majorant_matches_newton(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "majorant_matches_newton");
    let mut rates = Vec::new();
    for &mc in &[0.5, 1.0, 2.0] {
        for n in 1..=2 {
            for m in 1..=2 {
                let table = majorant_table(mc, n, 5, m);
                let newton = oracles::majorant_by_newton(mc, n, 5, m);
                for (j, b) in &newton {
                    res.check(table.get(j) == *b, (mc, n, m, j, table.get(j), b));
                }
                res.check(table.values.values().all(|&a| a >= 0.0), (mc, n, m));
                let r_hat = fit_growth_rate(&table);
                res.check(r_hat.is_finite(), (mc, n, m, r_hat));
                rates.push(format!("R({mc},{n},{m})={r_hat:.3}"));
            }
        }
    }
    res.detail(rates.join(" "))
}

/// Random diagonal-plus-sparse-nonlinear field with dyadic rates.
fn random_field(r: &mut ChaCha8Rng, m: usize, degree: u32) -> (PowerSeries, StableSpectrum) {
    let mut rates: Vec<f64> = (0..m)
        .map(|_| -(r.gen_range(4..=24) as f64) / 8.0)
        .collect();
    rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut v = PowerSeries::new(m, m, degree);
    for (i, &l) in rates.iter().enumerate() {
        let mut b = vec![0.0; m];
        b[i] = l;
        v.insert(MultiIndex::unit(m, i), b).unwrap();
    }
    let pool: Vec<_> = MultiIndex::all_up_to(m, degree)
        .into_iter()
        .filter(|i| i.degree() >= 2)
        .collect();
    for _ in 0..r.gen_range(1..=4) {
        let b: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        v.insert(pool.choose(r).unwrap().clone(), b).unwrap();
    }
    (v, StableSpectrum::new(rates).unwrap())
}

pub fn formal_residual(seed: u64, instances: usize) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "formal_residual");
    let mut r = rng(seed, 22);
    let mut worst = 0.0f64;
    let mut resonant = 0;
    for _ in 0..instances {
        let m = r.gen_range(1..=3);
        let degree = r.gen_range(2..=3);
        let (v, spec) = random_field(&mut r, m, degree);
        let order = r.gen_range(2..=8);
        let c: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let sol = construct_formal_solution(&v, &spec, &c, order).unwrap();
        if !sol.resonance_log.is_empty() {
            resonant += 1;
        }
        let e = check_formal_residual(&sol);
        worst = worst.max(e);
        res.check(e <= 1e-9, (&v, &c, order, e));
    }
    res.detail(format!(
        "{instances} fields (m ≤ 3, orders ≤ 8, {resonant} with resonances), max residual {worst:.1e}"
    ))
}

pub fn bernoulli_agreement(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "bernoulli_agreement");
    let spec = StableSpectrum::new(vec![-1.0]).unwrap();
    let sol = construct_formal_solution(&regression::bernoulli_field(), &spec, &[1.0], 12).unwrap();
    let mut worst = 0.0f64;
    for k in 0..=150 {
        let t = 5.0 + 0.1 * k as f64;
        let e = (sol.evaluate(t)[0] - regression::bernoulli_solution(t)).abs();
        worst = worst.max(e);
        res.check(e <= 1e-8, (t, e));
    }
    let resid = check_formal_residual(&sol);
    res.check(resid <= 1e-12, ("residual", resid));
    res.detail(format!(
        "order 12, t ∈ [5, 20], max error {worst:.1e}, residual {resid:.1e}"
    ))
}

pub fn degree_bound(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "degree_bound");
    let mut r = rng(seed, 23);
    let mut excluded = 0;
    let mut fields: Vec<(PowerSeries, StableSpectrum)> = (0..40)
        .map(|_| {
            let m = r.gen_range(1..=3);
            random_field(&mut r, m, 3)
        })
        .collect();
    fields.push((
        regression::resonant_field(),
        StableSpectrum::new(vec![-1.0, -2.0]).unwrap(),
    ));
    fields.push((
        regression::coupled_field(),
        StableSpectrum::new(vec![-0.5, -1.5]).unwrap(),
    ));
    for (v, spec) in &fields {
        let c = vec![0.7; spec.dim()];
        let sol = construct_formal_solution(v, spec, &c, 7).unwrap();
        let rep = degree_report(&sol);
        excluded += rep.excluded;
        res.check(rep.violations.is_empty(), (v, rep));
    }
    res.detail(format!(
        "{} fields, {excluded} resonance-dominated terms excluded",
        fields.len()
    ))
}

type PerturbationCase = (
    &'static str,
    PowerSeries,
    StableSpectrum,
    Vec<f64>,
    Vec<f64>,
    f64,
);

/// Leading difference of `x(t; c + C) - x(t; c)` on the regression fields.
pub fn perturbation_comparison(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "perturbation_comparison");
    let lin = PowerSeries::linear(&[vec![-1.0, 0.0], vec![0.0, -2.0]], 2, 1).unwrap();
    let s12 = StableSpectrum::new(vec![-1.0, -2.0]).unwrap();
    // (name, field, spectrum, c, C, λ0)
    let cases: Vec<PerturbationCase> = vec![
        (
            "bernoulli",
            regression::bernoulli_field(),
            StableSpectrum::new(vec![-1.0]).unwrap(),
            vec![1.0],
            vec![0.5],
            -0.5,
        ),
        (
            "decoupled",
            lin.clone(),
            s12.clone(),
            vec![1.0, 2.0],
            vec![0.0, 1.0],
            -0.5,
        ),
        (
            "decoupled_both",
            lin,
            s12.clone(),
            vec![1.0, 2.0],
            vec![0.3, -1.0],
            -0.5,
        ),
        (
            "resonant",
            regression::resonant_field(),
            s12.clone(),
            vec![0.5, 0.2],
            vec![0.0, 0.25],
            -0.5,
        ),
        (
            "resonant_x",
            regression::resonant_field(),
            s12,
            vec![0.5, 0.2],
            vec![0.25, 0.0],
            -0.5,
        ),
        (
            "coupled",
            regression::coupled_field(),
            StableSpectrum::new(vec![-0.5, -1.5]).unwrap(),
            vec![0.4, -0.3],
            vec![0.0, 0.5],
            -0.25,
        ),
        (
            "one_dim",
            regression::one_dim().recentered_field(0).unwrap(),
            StableSpectrum::new(vec![-1.0]).unwrap(),
            vec![0.5],
            vec![-0.2],
            -0.5,
        ),
    ];
    for (name, v, spec, c, cc, l0) in cases {
        match compare_perturbed(&v, &spec, &c, &cc, 8, l0) {
            Ok(rep) => {
                let i = rep.leading_component;
                let expect = (cc[i], 0usize, spec.rates()[i]);
                let got = rep.leading.map(|d| (d.coefficient, d.power, d.rate));
                let ok = got.is_some_and(|(a, q, rt)| {
                    (a - expect.0).abs() <= 1e-12 && q == 0 && rt == expect.2
                });
                res.check(ok, (name, got, expect));
                res.check(
                    rep.unchanged_mismatch <= 1e-12,
                    (name, "unchanged", rep.unchanged_mismatch),
                );
                res.check(rep.remainder_below_rate, (name, "remainder"));
            }
            Err(e) => res.fail((name, e)),
        }
    }
    res.check(
        matches!(
            compare_perturbed(
                &regression::bernoulli_field(),
                &StableSpectrum::new(vec![-1.0]).unwrap(),
                &[1.0],
                &[0.0],
                4,
                -0.5
            ),
            Err(Error::ZeroPerturbation)
        ),
        "zero perturbation accepted",
    );
    res.detail("7 regression cases".into())
}

pub fn taylor_accuracy(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("solver", "taylor_accuracy");
    let mut r = rng(seed, 24);
    let mut fields = vec![
        regression::bernoulli_field(),
        regression::coupled_field(),
        regression::resonant_field(),
    ];
    for _ in 0..5 {
        fields.push(random_field(&mut r, 2, 3).0);
    }
    let h = 0.01;
    for v in &fields {
        let m = v.in_dim();
        let x0: Vec<f64> = (0..m).map(|_| r.gen_range(-0.5..0.5)).collect();
        let ctl = StepControl {
            rtol: 1e-13,
            atol: 1e-16,
            ..StepControl::default()
        };
        let reference = integrate(
            |_, y: &[f64]| Ok(v.evaluate(y)),
            0.0,
            &x0,
            h,
            ctl,
            |_, _| {},
        )
        .unwrap();
        for k in 1..=5u32 {
            let p = taylor_solution(v, &x0, k).unwrap();
            let err = p
                .eval(h)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = 10f64.powi(-2 * (k as i32 + 1) + 1);
            res.check(err <= scale.max(1e-14), (v, &x0, k, err));
        }
    }
    res.detail(format!("{} fields, K = 1..5 at t = 0.01", fields.len()))
}

// ---------------------------------------------------------------- tracer

fn switch_times(t: &FlowTrace) -> Vec<f64> {
    t.switches.iter().map(|s| s.t).collect()
}

/// One switch at the closed-form time on the 1-D and 2-D systems, stable
/// under halving every tolerance, with the asymptotic verdict agreeing with
/// the trace's final cell.
pub fn switch_finiteness(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("tracer", "switch_finiteness");
    let cases = [
        (
            "one_dim",
            regression::one_dim(),
            vec![1.0],
            Some(regression::one_dim_switch_time()),
        ),
        (
            "decoupled_plane",
            regression::decoupled_plane(),
            vec![1.0, 2.0],
            Some(2f64.ln()),
        ),
        (
            "bernoulli_line",
            regression::bernoulli_line(),
            vec![0.5],
            None,
        ),
    ];
    let mut notes = Vec::new();
    for (name, field, x0, t_star) in cases {
        let opts = TraceOptions::default();
        let a = trace_flow(&field, &x0, 50.0, &opts);
        let b = trace_flow(&field, &x0, 50.0, &opts.scaled_tolerances(0.5));
        let (a, b) = match (a, b) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                res.fail((name, a.err(), b.err()));
                continue;
            }
        };
        let expected = usize::from(t_star.is_some());
        res.check(a.switch_count() == expected, (name, switch_times(&a)));
        res.check(
            a.switch_count() == b.switch_count(),
            (name, "halved", switch_times(&b)),
        );
        if let (Some(sa), Some(sb), Some(t_star)) = (a.switches.first(), b.switches.first(), t_star)
        {
            res.check((sa.t - t_star).abs() <= 1e-6, (name, sa.t, t_star));
            res.check((sa.t - sb.t).abs() <= 1e-8, (name, "halved", sa.t, sb.t));
            notes.push(format!(
                "{name}: t₁ = {:.9} (|Δ| = {:.1e})",
                sa.t,
                (sa.t - t_star).abs()
            ));
        }
        res.check(a.captured, (name, "not captured"));
        let times = &a.times;
        res.check(times.windows(2).all(|w| w[0] <= w[1]), (name, "time order"));
        for (x, c) in a.states.iter().zip(&a.cells) {
            res.check(
                field.cover().cells[*c].contains(x, 1e-8),
                (name, "sample outside cell", x, c),
            );
        }
        match capture_solution(&field, &a, 8) {
            Ok((cell, sol)) => match asymptotic_membership(&field, &sol, cell) {
                Ok(MembershipVerdict::EventuallyInside(j)) if j == cell => {}
                other => res.fail((name, "verdict", cell, other)),
            },
            Err(e) => res.fail((name, "capture", e)),
        }
    }
    res.detail(notes.join(", "))
}

/// Second-order tangency: exit order 2 for the cell the trajectory avoids,
/// and the trace follows the order-2 Taylor continuation with error
/// exponent ≈ 3.
pub fn tangency_order(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("tracer", "tangency_order");
    let field = regression::tangency();
    let x0 = [0.0, 0.0];
    match local_exit_order(&field, 1, &x0, 8) {
        Ok(ExitOrder::Exits { k: 2, a }) => res.check((a - 1.0).abs() < 1e-12, ("a", a)),
        other => res.fail(("cell B", other)),
    }
    match local_exit_order(&field, 0, &x0, 8) {
        Ok(ExitOrder::InsideToOrder(8)) => {}
        other => res.fail(("cell A", other)),
    }
    let exponent = continuation_exponent(&field, &x0, 2);
    match exponent {
        Some(e) => res.check(e >= 2.9, ("exponent", e)),
        None => res.fail("trace failed"),
    }
    res.detail(format!(
        "exit order 2, fitted exponent {:.3}",
        exponent.unwrap_or(f64::NAN)
    ))
}

/// Least-squares slope of `log |x(t) - y_k(t)|` against `log t` on
/// `[0.005, 0.1]`, where `y_k` is the order-`k` Taylor continuation in the
/// cell the trace starts in.
pub fn continuation_exponent(
    field: &polyflow_core::flow_tracer::PiecewiseField,
    x0: &[f64],
    k: u32,
) -> Option<f64> {
    let opts = TraceOptions {
        step: StepControl {
            max_step: 0.005,
            ..StepControl::default()
        },
        ..TraceOptions::default()
    };
    let tr = trace_flow(field, x0, 0.1, &opts).ok()?;
    let cell = tr.cells[0];
    let y = taylor_solution(&field.fields()[cell], x0, k).ok()?;
    let pts: Vec<(f64, f64)> = tr
        .times
        .iter()
        .zip(&tr.states)
        .filter(|(t, _)| **t >= 0.005)
        .map(|(t, x)| {
            let e = y
                .eval(*t)
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (t.ln(), e.ln())
        })
        .collect();
    let n = pts.len() as f64;
    if n < 5.0 {
        return None;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    Some(num / den)
}

pub fn single_cell_reference(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("tracer", "single_cell_reference");
    let field = regression::bernoulli_line();
    let t_end = 5.0;
    let opts = TraceOptions {
        capture_radius: 0.0,
        ..TraceOptions::default()
    };
    match trace_flow(&field, &[0.5], t_end, &opts) {
        Ok(tr) => {
            let x = tr.final_state()[0];
            let closed = regression::bernoulli_solution(t_end);
            let v = regression::bernoulli_field();
            let rk =
                rk4_fixed(|_, y: &[f64]| Ok(v.evaluate(y)), 0.0, &[0.5], t_end, 20_000).unwrap()[0];
            res.check(tr.switches.is_empty(), ("switches", tr.switches.len()));
            res.check(
                (tr.final_time() - t_end).abs() < 1e-12,
                ("t_end", tr.final_time()),
            );
            res.check((x - closed).abs() <= 1e-8, ("closed form", x, closed));
            res.check((x - rk).abs() <= 1e-8, ("rk4", x, rk));
            res = res.detail(format!(
                "|x - closed| = {:.1e}, |x - rk4| = {:.1e}",
                (x - closed).abs(),
                (x - rk).abs()
            ));
        }
        Err(e) => res.fail(e),
    }
    res
}

/// Switch counts of the spiral for increasing horizons, and the chattering
/// guard firing with its trace attached.
pub fn spiral_counts(t_ends: &[f64]) -> Vec<Result<usize, Error>> {
    let field = regression::spiral();
    t_ends
        .iter()
        .map(|&t| {
            trace_flow(
                &field,
                &regression::SPIRAL_START,
                t,
                &TraceOptions::default(),
            )
            .map(|tr| tr.switch_count())
        })
        .collect()
}

pub fn spiral_control(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("tracer", "spiral_control");
    let t_ends = [10.0, 20.0, 40.0];
    let counts: Vec<usize> = spiral_counts(&t_ends)
        .into_iter()
        .map(|c| c.unwrap_or(usize::MAX))
        .collect();
    res.check(
        counts.windows(2).all(|w| w[0] < w[1]) && counts[2] != usize::MAX,
        ("counts", &counts),
    );
    let opts = TraceOptions {
        chatter_cap: 5,
        ..TraceOptions::default()
    };
    match trace_flow(
        &regression::spiral(),
        &regression::SPIRAL_START,
        40.0,
        &opts,
    ) {
        Err(Error::ChatteringGuard { cap, trace }) => res.check(
            cap == 5 && trace.switch_count() == 6,
            ("guard", cap, trace.switch_count()),
        ),
        other => res.fail(("no guard", other.map(|t| t.switch_count()))),
    }
    res.detail(format!(
        "switches at t_end 10/20/40: {counts:?}; guard fires at cap 5"
    ))
}

pub fn facet_agreement(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("tracer", "facet_agreement");
    let mut checked = 0;
    for (name, f) in regression_systems() {
        let rep = check_facet_agreement(&f, 100, seed);
        checked += rep.checked;
        res.check(rep.passes(1e-8), (name, rep));
    }
    res.detail(format!("{checked} boundary points"))
}

// ---------------------------------------------------------------- yamabe

pub struct YamabeCase {
    pub name: &'static str,
    pub mesh: TriangulatedSurface,
    pub u0: Vec<f64>,
}

pub fn yamabe_cases() -> Vec<YamabeCase> {
    vec![
        YamabeCase {
            name: "tetrahedron",
            mesh: tetrahedron(),
            u0: vec![0.3, -0.3, 0.0, 0.0],
        },
        YamabeCase {
            name: "octahedron",
            mesh: octahedron(),
            u0: vec![0.35, -0.2, 0.1, -0.25, 0.3, -0.3],
        },
        YamabeCase {
            name: "torus",
            mesh: flat_torus(),
            u0: vec![0.3, -0.2, 0.15, 0.0, -0.3, 0.25, -0.1, 0.05],
        },
    ]
}

/// Conservation, convergence and flip-count stability on the regression
/// meshes, integrating to `t = 50`.
pub fn yamabe_regressions(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("yamabe", "regressions");
    let mut notes = Vec::new();
    for case in yamabe_cases() {
        let sum0: f64 = case.u0.iter().sum();
        let k_total = 2.0 * PI * case.mesh.euler_characteristic() as f64;
        let mut runs = Vec::new();
        for max_step in [0.1, 0.05] {
            let ctl = StepControl {
                max_step,
                ..StepControl::default()
            };
            let state = ConformalState::new(case.mesh.clone(), case.u0.clone()).unwrap();
            match run_flow(state, 50.0, ctl) {
                Ok(run) => runs.push(run),
                Err(e) => res.fail((case.name, max_step, e)),
            }
        }
        if runs.len() != 2 {
            continue;
        }
        let run = &runs[0];
        for s in &run.samples {
            let drift = (s.u.iter().sum::<f64>() - sum0).abs();
            res.check(drift <= 1e-9, (case.name, "Σu", s.t, drift));
        }
        let st = ConformalState::new(run.state.mesh.clone(), run.state.u.clone()).unwrap();
        let gb = (curvature(&st).unwrap().iter().sum::<f64>() - k_total).abs();
        res.check(gb <= 1e-9, (case.name, "Gauss-Bonnet", gb));
        let last = run.samples.last().unwrap();
        res.check(
            last.deviation <= 1e-6,
            (case.name, "deviation", last.deviation),
        );
        res.check(
            runs[0].flips == runs[1].flips,
            (case.name, "flips", runs[0].flips, runs[1].flips),
        );
        // no flips in the final fifth of the run
        let settled = run
            .samples
            .iter()
            .filter(|s| s.t >= 40.0)
            .all(|s| s.flips == run.flips);
        res.check(settled, (case.name, "flips not settled"));
        // squared curvature deviation never increases (to rounding)
        let mut monotone = true;
        let mut prev = f64::INFINITY;
        for s in &run.samples {
            let d2 = energy(&s.u, &run.state);
            if d2 > prev * (1.0 + 1e-9) + 1e-15 {
                monotone = false;
            }
            prev = d2;
        }
        res.check(monotone, (case.name, "descent"));
        notes.push(format!(
            "{}: {} flips, final |K-K̄|∞ {:.1e}",
            case.name, run.flips, last.deviation
        ));
    }
    res.detail(notes.join(", "))
}

/// `|K - K̄|₂²` at `u` on the Delaunay triangulation for `u`, rebuilt from
/// the final mesh of the run (the metric is the same along the run).
fn energy(u: &[f64], last: &ConformalState) -> f64 {
    let mut st = ConformalState::new(last.mesh.clone(), u.to_vec()).unwrap();
    if flip_to_delaunay(&mut st, 0.0).is_err() {
        return f64::INFINITY;
    }
    let k = curvature(&st).unwrap();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// The adaptive run against explicit Euler with step 1e-4.
pub fn yamabe_euler_reference(_seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("yamabe", "euler_reference");
    let t_end = 2.0;
    let mut notes = Vec::new();
    for case in yamabe_cases() {
        let state = ConformalState::new(case.mesh.clone(), case.u0.clone()).unwrap();
        let (a, b) = match (
            run_flow(state.clone(), t_end, StepControl::default()),
            run_flow_euler(state, t_end, 1e-4),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                res.fail((case.name, a.err(), b.err()));
                continue;
            }
        };
        let du = a
            .state
            .u
            .iter()
            .zip(&b.state.u)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        res.check(du <= 1e-3, (case.name, "u", du));
        res.check(a.flips == b.flips, (case.name, "flips", a.flips, b.flips));
        notes.push(format!(
            "{}: |Δu|∞ = {du:.1e}, flips {}/{}",
            case.name, a.flips, b.flips
        ));
    }
    res.detail(format!("t = {t_end}; {}", notes.join(", ")))
}

/// Total curvature is unchanged by flipping random states back to Delaunay.
pub fn gauss_bonnet_through_flips(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("yamabe", "gauss_bonnet_through_flips");
    let mut r = rng(seed, 40);
    let mut flips = 0;
    for case in yamabe_cases() {
        let total = 2.0 * PI * case.mesh.euler_characteristic() as f64;
        for _ in 0..40 {
            let n = case.mesh.num_vertices();
            let u: Vec<f64> = (0..n).map(|_| r.gen_range(-0.6..0.6)).collect();
            let Ok(mut st) = ConformalState::new(case.mesh.clone(), u) else {
                continue;
            };
            let Ok(before) = curvature(&st) else { continue };
            match flip_to_delaunay(&mut st, 0.0) {
                Ok(c) => flips += c,
                Err(e) => {
                    res.fail((case.name, e));
                    continue;
                }
            }
            let after = curvature(&st).unwrap();
            let (sb, sa) = (before.iter().sum::<f64>(), after.iter().sum::<f64>());
            res.check(
                (sb - total).abs() <= 1e-9 && (sa - total).abs() <= 1e-9,
                (case.name, sb, sa),
            );
            res.check(
                st.mesh.is_delaunay(&st.u).unwrap(),
                (case.name, "not Delaunay"),
            );
        }
    }
    res.detail(format!("120 random states, {flips} flips"))
}

pub fn exp_convexity(seed: u64) -> PropertyResult {
    let mut res = PropertyResult::new("yamabe", "exp_convexity");
    let mut r = rng(seed, 41);
    let mut pairs = 0;
    for case in yamabe_cases() {
        let n = case.mesh.num_vertices();
        let rep = convexity_probe(&case.mesh, &vec![0.0; n], 0.75, 100, 20, &mut r);
        pairs += rep.pairs;
        res.check(rep.pairs > 0 && rep.violations == 0, (case.name, rep));
    }
    res.detail(format!("{pairs} pairs, 20 interior points each"))
}
