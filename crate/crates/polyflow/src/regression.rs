//! Reference systems with closed-form behaviour.

use polyflow_core::flow_tracer::{Equilibrium, PiecewiseField};
use polyflow_core::formal_solver::StableSpectrum;
use polyflow_core::geometry::{Bounds, CellCover, HalfSpace, Polytope};
use polyflow_core::powerseries::PowerSeries;

fn boxed(lo: &[f64], hi: &[f64], extra: &[(Vec<f64>, f64)], witness: Vec<f64>) -> Polytope {
    let mut hs = Vec::new();
    for i in 0..lo.len() {
        let mut e = vec![0.0; lo.len()];
        e[i] = 1.0;
        hs.push(HalfSpace::new(e.clone(), lo[i]).unwrap());
        e[i] = -1.0;
        hs.push(HalfSpace::new(e, -hi[i]).unwrap());
    }
    for (a, b) in extra {
        hs.push(HalfSpace::new(a.clone(), *b).unwrap());
    }
    Polytope::new(hs, witness).unwrap()
}

fn cover(lo: &[f64], hi: &[f64], cells: Vec<Polytope>) -> CellCover {
    CellCover::new(
        cells,
        Bounds {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        },
    )
    .unwrap()
}

fn series(dim: usize, order: u32, terms: &[(&[u32], &[f64])]) -> PowerSeries {
    PowerSeries::from_terms(
        dim,
        dim,
        order,
        terms.iter().map(|(i, b)| (i.to_vec(), b.to_vec())),
    )
    .unwrap()
}

/// `x' = -x - 1/2` on `[-2, 0]` and `x' = -x - 1/2 + x²` on `[0, 2]`;
/// stable equilibrium `-1/2` with rate `-1`.
pub fn one_dim() -> PiecewiseField {
    let (lo, hi) = ([-2.0], [2.0]);
    let left = boxed(&lo, &hi, &[(vec![-1.0], 0.0)], vec![-1.0]);
    let right = boxed(&lo, &hi, &[(vec![1.0], 0.0)], vec![1.0]);
    let v0 = series(1, 1, &[(&[0], &[-0.5]), (&[1], &[-1.0])]);
    let v1 = series(1, 2, &[(&[0], &[-0.5]), (&[1], &[-1.0]), (&[2], &[1.0])]);
    let eq = Equilibrium {
        point: vec![-0.5],
        spectrum: StableSpectrum::new(vec![-1.0]).unwrap(),
    };
    PiecewiseField::new(cover(&lo, &hi, vec![left, right]), vec![v0, v1], Some(eq)).unwrap()
}

/// Time for [`one_dim`] to reach `x = 0` from `x = 1`:
/// `x' = (x - r₊)(x - r₋)` with `r± = (1 ± √3)/2`.
pub fn one_dim_switch_time() -> f64 {
    let s3 = 3f64.sqrt();
    let (rp, rm) = ((1.0 + s3) / 2.0, (1.0 - s3) / 2.0);
    ((rp / rm.abs()).ln() - ((rp - 1.0) / (1.0 - rm)).ln()) / s3
}

/// `(x, y)' = (-x, -2y)` with cells `{y ≥ x}` and `{y ≤ x}` in `[-3, 3]²`.
pub fn decoupled_plane() -> PiecewiseField {
    let (lo, hi) = ([-3.0, -3.0], [3.0, 3.0]);
    let upper = boxed(&lo, &hi, &[(vec![-1.0, 1.0], 0.0)], vec![0.0, 1.0]);
    let lower = boxed(&lo, &hi, &[(vec![1.0, -1.0], 0.0)], vec![1.0, 0.0]);
    let v = series(2, 1, &[(&[1, 0], &[-1.0, 0.0]), (&[0, 1], &[0.0, -2.0])]);
    let eq = Equilibrium {
        point: vec![0.0, 0.0],
        spectrum: StableSpectrum::new(vec![-1.0, -2.0]).unwrap(),
    };
    PiecewiseField::new(
        cover(&lo, &hi, vec![upper, lower]),
        vec![v.clone(), v],
        Some(eq),
    )
    .unwrap()
}

/// Cell A `{y ≥ 0}` with `(1, 2x + x²)`, cell B `{y ≤ 0}` with
/// `(1, 2x + x² + y²)` in `[-1, 1]²`. From the origin the A-trajectory is
/// `(t, t² + t³/3)`, tangent to the shared facet to second order.
pub fn tangency() -> PiecewiseField {
    let (lo, hi) = ([-1.0, -1.0], [1.0, 1.0]);
    let a = boxed(&lo, &hi, &[(vec![0.0, 1.0], 0.0)], vec![0.0, 0.5]);
    let b = boxed(&lo, &hi, &[(vec![0.0, -1.0], 0.0)], vec![0.0, -0.5]);
    let va = series(
        2,
        2,
        &[
            (&[0, 0], &[1.0, 0.0]),
            (&[1, 0], &[0.0, 2.0]),
            (&[2, 0], &[0.0, 1.0]),
        ],
    );
    let vb = series(
        2,
        2,
        &[
            (&[0, 0], &[1.0, 0.0]),
            (&[1, 0], &[0.0, 2.0]),
            (&[2, 0], &[0.0, 1.0]),
            (&[0, 2], &[0.0, 1.0]),
        ],
    );
    PiecewiseField::new(cover(&lo, &hi, vec![a, b]), vec![va, vb], None).unwrap()
}

/// Weakly damped rotation `(x, y)' = (-x/100 - y, x - y/100)` over the
/// half-planes `{y ≥ 0}` and `{y ≤ 0}` in `[-2, 2]²`. Its linear part has
/// complex eigenvalues.
pub fn spiral() -> PiecewiseField {
    let (lo, hi) = ([-2.0, -2.0], [2.0, 2.0]);
    let up = boxed(&lo, &hi, &[(vec![0.0, 1.0], 0.0)], vec![0.0, 1.0]);
    let down = boxed(&lo, &hi, &[(vec![0.0, -1.0], 0.0)], vec![0.0, -1.0]);
    let v = series(2, 1, &[(&[1, 0], &[-0.01, 1.0]), (&[0, 1], &[-1.0, -0.01])]);
    PiecewiseField::new(cover(&lo, &hi, vec![up, down]), vec![v.clone(), v], None).unwrap()
}

pub const SPIRAL_START: [f64; 2] = [1.0, 0.5];

/// `x' = -x + x²`.
pub fn bernoulli_field() -> PowerSeries {
    series(1, 2, &[(&[1], &[-1.0]), (&[2], &[1.0])])
}

/// `e^{-t}/(1 + e^{-t})`, the solution of [`bernoulli_field`] with `c = 1`.
pub fn bernoulli_solution(t: f64) -> f64 {
    let e = (-t).exp();
    e / (1.0 + e)
}

/// [`bernoulli_field`] on the single cell `[-0.9, 0.9]`.
pub fn bernoulli_line() -> PiecewiseField {
    let (lo, hi) = ([-0.9], [0.9]);
    let cell = boxed(&lo, &hi, &[], vec![0.0]);
    let eq = Equilibrium {
        point: vec![0.0],
        spectrum: StableSpectrum::new(vec![-1.0]).unwrap(),
    };
    PiecewiseField::new(
        cover(&lo, &hi, vec![cell]),
        vec![bernoulli_field()],
        Some(eq),
    )
    .unwrap()
}

/// `(x, y)' = (-x, -2y + x²)`: the rates `(-1, -2)` resonate at `J = (2, 0)`.
pub fn resonant_field() -> PowerSeries {
    series(
        2,
        2,
        &[
            (&[1, 0], &[-1.0, 0.0]),
            (&[0, 1], &[0.0, -2.0]),
            (&[2, 0], &[0.0, 1.0]),
        ],
    )
}

/// `(x, y)' = (-x/2 + xy, -3y/2 + x² - y²)`, a coupled quadratic field.
pub fn coupled_field() -> PowerSeries {
    series(
        2,
        2,
        &[
            (&[1, 0], &[-0.5, 0.0]),
            (&[0, 1], &[0.0, -1.5]),
            (&[1, 1], &[1.0, 0.0]),
            (&[2, 0], &[0.0, 1.0]),
            (&[0, 2], &[0.0, -1.0]),
        ],
    )
}

/// `(x, y)' = (-x, -2y + x^{n+1})`: at truncation order `n` the `y`-part of
/// the solution with `c = (1, 0)` is invisible.
pub fn hidden_coupling_field(n: u32) -> PowerSeries {
    PowerSeries::from_terms(
        2,
        2,
        n + 1,
        [
            (vec![1, 0], vec![-1.0, 0.0]),
            (vec![0, 1], vec![0.0, -2.0]),
            (vec![n + 1, 0], vec![0.0, 1.0]),
        ],
    )
    .unwrap()
}

/// Half-planes `{y ≥ 0}`, `{y ≤ 0}` in `[-3, 3]²` carrying `v` on both cells,
/// equilibrium at the origin.
pub fn half_planes(v: PowerSeries, rates: Vec<f64>) -> PiecewiseField {
    let (lo, hi) = ([-3.0, -3.0], [3.0, 3.0]);
    let up = boxed(&lo, &hi, &[(vec![0.0, 1.0], 0.0)], vec![0.0, 1.0]);
    let down = boxed(&lo, &hi, &[(vec![0.0, -1.0], 0.0)], vec![0.0, -1.0]);
    let eq = Equilibrium {
        point: vec![0.0, 0.0],
        spectrum: StableSpectrum::new(rates).unwrap(),
    };
    PiecewiseField::new(
        cover(&lo, &hi, vec![up, down]),
        vec![v.clone(), v],
        Some(eq),
    )
    .unwrap()
}
