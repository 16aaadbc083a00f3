use std::f64::consts::PI;

use polyflow_core::formal_solver::{
    apply_shifted_derivative, check_domination, check_formal_residual, construct_formal_solution,
    resolvent_poly, StableSpectrum,
};
use polyflow_core::geometry::{
    check_lemma14, max_facet_distance, project_onto_polytope, HalfSpace, Polytope,
    DEFAULT_PROJECTION_TOL,
};
use polyflow_core::lambdaseries::LambdaSeries;
use polyflow_core::poly::{Poly, UniPoly};
use polyflow_core::powerseries::PowerSeries;
use polyflow_core::yamabe::{curvature, flip_to_delaunay, octahedron, tetrahedron, ConformalState};
use polyflow_core::MultiIndex;
use proptest::prelude::*;

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.1).then(|| v.iter().map(|x| x / n).collect())
}

/// Polytope around `p` with facet margins in `[0.05, 1]`.
fn polytope(dim: usize) -> impl Strategy<Value = Polytope> {
    (
        prop::collection::vec(-1.0..1.0f64, dim),
        prop::collection::vec(
            (prop::collection::vec(-1.0..1.0f64, dim), 0.05..1.0f64),
            3..=8,
        ),
    )
        .prop_filter_map("degenerate normal", |(p, facets)| {
            let hs = facets
                .into_iter()
                .map(|(a, margin)| {
                    let a = unit(a)?;
                    let b = a.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>() - margin;
                    HalfSpace::new(a, b).ok()
                })
                .collect::<Option<Vec<_>>>()?;
            Polytope::new(hs, p).ok()
        })
}

fn polytope_and_point() -> impl Strategy<Value = (Polytope, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|d| (polytope(d), prop::collection::vec(-3.0..3.0f64, d)))
}

fn int_poly(max_deg: usize) -> impl Strategy<Value = UniPoly> {
    prop::collection::vec(-8i32..=8, 1..=max_deg + 1)
        .prop_map(|c| UniPoly::new(c.into_iter().map(f64::from).collect()))
}

/// Scalar series in `dim` variables with small integer coefficients.
fn int_series(dim: usize, order: u32, min_deg: u32) -> impl Strategy<Value = PowerSeries> {
    let pool: Vec<MultiIndex> = MultiIndex::all_up_to(dim, order)
        .into_iter()
        .filter(|i| i.degree() >= min_deg)
        .collect();
    prop::collection::vec((prop::sample::select(pool), -3i32..=3), 0..6).prop_map(move |terms| {
        let mut s = PowerSeries::new(dim, 1, order);
        for (i, c) in terms {
            let prev = s.coeff(&i).map_or(0.0, |b| b[0]);
            s.insert(i, vec![prev + f64::from(c)]).unwrap();
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sandwich_holds((d, x) in polytope_and_point()) {
        match check_lemma14(d.witness(), &x, &d) {
            Ok(b) => prop_assert!(b.holds(1e-9), "{b:?}"),
            Err(_) => prop_assert!(d.contains(&x, 0.0)),
        }
    }

    #[test]
    fn projection_is_feasible_and_idempotent((d, x) in polytope_and_point()) {
        let p = project_onto_polytope(&x, &d, DEFAULT_PROJECTION_TOL).unwrap();
        prop_assert!(d.max_signed_distance(&p.closest) <= 1e-9);
        prop_assert!(max_facet_distance(&x, &d) <= p.distance + 1e-9);
        let q = project_onto_polytope(&p.closest, &d, DEFAULT_PROJECTION_TOL).unwrap();
        prop_assert!(q.distance <= 1e-9);
        // no point of the segment to the witness is closer
        for k in 1..10 {
            let s = k as f64 / 10.0;
            let y: Vec<f64> = p.closest.iter().zip(d.witness()).map(|(a, w)| a + s * (w - a)).collect();
            let dy = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(dy >= p.distance - 1e-9);
        }
    }

    #[test]
    fn resolvent_inverts_shifted_derivative(u in prop::sample::select(vec![-3.0, -1.0, 0.0, 0.5, 2.0, 100.0]), q in int_poly(10)) {
        let back = apply_shifted_derivative(u, &resolvent_poly(u, &q));
        prop_assert!(back.sub(&q).max_abs_coeff() <= 1e-12);
    }

    #[test]
    fn domination_on_grid(u in 2.0..50.0f64, q in int_poly(10)) {
        let t0 = check_domination(u, &q).unwrap();
        let p = resolvent_poly(u, &q);
        for k in 0..50 {
            let t = t0 + 0.2 * k as f64;
            prop_assert!(p.star_eval(t).unwrap() <= q.star_eval(t).unwrap());
        }
    }

    #[test]
    fn star_norm_is_submultiplicative(p in int_poly(6), q in int_poly(6), t in 0.0..4.0f64) {
        let s = |x: &UniPoly| x.star_eval(t).unwrap();
        prop_assert!(s(&p.add(&q)) <= (s(&p) + s(&q)) * (1.0 + 1e-15));
        prop_assert!(s(&p.mul(&q)) <= s(&p) * s(&q) * (1.0 + 1e-15));
    }

    #[test]
    fn composing_with_identity(f in int_series(2, 5, 0)) {
        let id = PowerSeries::identity(2, 5);
        prop_assert_eq!(f.compose(&id).unwrap(), f.clone());
    }

    #[test]
    fn product_commutes_and_composition_distributes(
        f in int_series(2, 4, 0), g in int_series(2, 4, 0), h in int_series(1, 4, 1), k in int_series(1, 4, 1),
    ) {
        prop_assert_eq!(f.multiply(&g).unwrap(), g.multiply(&f).unwrap());
        let mut inner = PowerSeries::new(1, 2, 4);
        for (i, b) in h.coeffs() {
            inner.insert(i.clone(), vec![b[0], 0.0]).unwrap();
        }
        for (i, b) in k.coeffs() {
            let prev = inner.coeff(i).map_or(vec![0.0, 0.0], |v| v.to_vec());
            inner.insert(i.clone(), vec![prev[0], b[0]]).unwrap();
        }
        let left = f.multiply(&g).unwrap().compose(&inner).unwrap();
        let right = f.compose(&inner).unwrap().multiply(&g.compose(&inner).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn lambda_derivative_matches_finite_difference(
        terms in prop::collection::vec((1u32..=4, -1.0..1.0f64, -1.0..1.0f64), 1..5),
        t in 0.5..3.0f64,
    ) {
        let mut x = LambdaSeries::new(vec![-0.75], 1, 4).unwrap();
        for (k, a, b) in terms {
            let idx = MultiIndex::new(vec![k]);
            let prev = x.term(&idx).cloned().unwrap_or_else(|| Poly::zeros(1));
            let p = prev.add(&Poly::from_components(vec![UniPoly::new(vec![a, b])]));
            let mut y = LambdaSeries::new(vec![-0.75], 1, 4).unwrap();
            for (j, q) in x.terms() {
                if *j != idx {
                    y.insert(j.clone(), q.clone()).unwrap();
                }
            }
            if !p.is_zero() {
                y.insert(idx, p).unwrap();
            }
            x = y;
        }
        let h = 1e-5;
        let fd = (x.evaluate(t + h)[0] - x.evaluate(t - h)[0]) / (2.0 * h);
        prop_assert!((x.formal_derivative().evaluate(t)[0] - fd).abs() <= 1e-8);
    }

    #[test]
    fn formal_solutions_solve_random_quadratic_fields(
        l1 in 4u32..=12, l2 in 13u32..=24,
        quad in prop::collection::vec(-1.0..1.0f64, 6),
        c in prop::collection::vec(-1.0..1.0f64, 2),
        order in 2u32..=6,
    ) {
        let rates = vec![-(l1 as f64) / 8.0, -(l2 as f64) / 8.0];
        let mut v = PowerSeries::linear(&[vec![rates[0], 0.0], vec![0.0, rates[1]]], 2, 2).unwrap();
        for (n, idx) in [[2, 0], [1, 1], [0, 2]].iter().enumerate() {
            v.insert(MultiIndex::new(idx.to_vec()), vec![quad[2 * n], quad[2 * n + 1]]).unwrap();
        }
        let sol = construct_formal_solution(&v, &StableSpectrum::new(rates).unwrap(), &c, order).unwrap();
        prop_assert!(check_formal_residual(&sol) <= 1e-9);
    }

    #[test]
    fn flips_preserve_total_curvature(u in prop::collection::vec(-0.6..0.6f64, 6)) {
        for mesh in [tetrahedron(), octahedron()] {
            let n = mesh.num_vertices();
            let total = 2.0 * PI * mesh.euler_characteristic() as f64;
            let Ok(mut st) = ConformalState::new(mesh, u[..n].to_vec()) else { continue };
            if flip_to_delaunay(&mut st, 0.0).is_err() {
                continue;
            }
            let k = curvature(&st).unwrap();
            prop_assert!((k.iter().sum::<f64>() - total).abs() <= 1e-9);
            prop_assert!(st.mesh.is_delaunay(&st.u).unwrap());
        }
    }
}
