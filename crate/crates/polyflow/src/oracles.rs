//! Slow, literal reference computations used to cross-check the library.

use std::collections::BTreeMap;

use polyflow_core::geometry::Polytope;
use polyflow_core::lambdaseries::LambdaSeries;
use polyflow_core::math;
use polyflow_core::poly::{Poly, UniPoly};
use polyflow_core::powerseries::PowerSeries;
use polyflow_core::MultiIndex;

/// Slot list of a monomial: variable `j` repeated `I_j` times.
fn slots(i: &MultiIndex) -> Vec<usize> {
    i.exponents()
        .iter()
        .enumerate()
        .flat_map(|(j, &e)| std::iter::repeat_n(j, e as usize))
        .collect()
}

/// `f ∘ g` by expanding every `b_I Π_j g_j^{I_j}` as a sum over ordered
/// choices of one term of `g_j` per factor.
pub fn compose_literal(f: &PowerSeries, g: &PowerSeries) -> PowerSeries {
    let order = f.order().min(g.order());
    let m = g.in_dim();
    let mut acc: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
    let g_terms: Vec<Vec<(MultiIndex, f64)>> = (0..g.out_dim())
        .map(|j| {
            g.coeffs()
                .iter()
                .filter(|(k, b)| !k.is_zero() && b[j] != 0.0)
                .map(|(k, b)| (k.clone(), b[j]))
                .collect()
        })
        .collect();
    for (i, b) in f.coeffs() {
        let sl = slots(i);
        let mut stack = vec![(0usize, MultiIndex::zeros(m), 1.0f64)];
        while let Some((depth, idx, w)) = stack.pop() {
            if depth == sl.len() {
                let e = acc.entry(idx).or_insert_with(|| vec![0.0; f.out_dim()]);
                for (ek, bk) in e.iter_mut().zip(b) {
                    *ek += bk * w;
                }
                continue;
            }
            for (k, c) in &g_terms[sl[depth]] {
                let next = idx.plus(k);
                if next.degree() <= order {
                    stack.push((depth + 1, next, w * c));
                }
            }
        }
    }
    let mut out = PowerSeries::new(m, f.out_dim(), order);
    for (k, v) in acc {
        out.insert(k, v).unwrap();
    }
    out
}

/// `f ∘ x` for a centered λ-series by the same literal expansion, with
/// polynomial coefficients multiplied along each choice.
pub fn compose_lambda_literal(f: &PowerSeries, x: &LambdaSeries) -> LambdaSeries {
    let order = x.order();
    let m = x.num_rates();
    let x_terms: Vec<Vec<(MultiIndex, UniPoly)>> = (0..x.dim())
        .map(|j| {
            x.terms()
                .iter()
                .filter(|(_, p)| !p.component(j).is_zero())
                .map(|(k, p)| (k.clone(), p.component(j).clone()))
                .collect()
        })
        .collect();
    let mut acc: BTreeMap<MultiIndex, Vec<UniPoly>> = BTreeMap::new();
    for (i, b) in f.coeffs() {
        let sl = slots(i);
        let mut stack = vec![(0usize, MultiIndex::zeros(m), UniPoly::constant(1.0))];
        while let Some((depth, idx, w)) = stack.pop() {
            if depth == sl.len() {
                let e = acc
                    .entry(idx)
                    .or_insert_with(|| vec![UniPoly::zero(); f.out_dim()]);
                for (ek, &bk) in e.iter_mut().zip(b) {
                    *ek = ek.add(&w.scale(bk));
                }
                continue;
            }
            for (k, p) in &x_terms[sl[depth]] {
                let next = idx.plus(k);
                if next.degree() <= order {
                    stack.push((depth + 1, next, w.mul(p)));
                }
            }
        }
    }
    let mut out = LambdaSeries::new(x.rates().to_vec(), f.out_dim(), order).unwrap();
    for (k, v) in acc {
        let p = Poly::from_components(v);
        if !p.is_zero() {
            out.insert(k, p).unwrap();
        }
    }
    out
}

fn univariate(order: u32, coeff: impl Fn(u32) -> f64) -> PowerSeries {
    PowerSeries::scalar(1, order, (0..=order).map(|k| (vec![k], coeff(k)))).unwrap()
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients `b_J` of the solution `f` of
/// `1 - (x_1 + … + x_m) + (Mn + 1) f = (1 - M f)^{-n}`, `f(0) = 0`, by Newton
/// iteration on truncated series.
pub fn majorant_by_newton(
    m_const: f64,
    n: usize,
    up_to: u32,
    dim: usize,
) -> BTreeMap<MultiIndex, f64> {
    let nn = n as u64;
    let phi = univariate(up_to, |k| {
        binomial(nn + k as u64 - 1, k as u64) * m_const.powi(k as i32)
    });
    let dphi = univariate(up_to, |k| {
        n as f64 * m_const * binomial(nn + k as u64, k as u64) * m_const.powi(k as i32)
    });
    let lin = m_const * n as f64 + 1.0;
    let s = PowerSeries::scalar(
        dim,
        up_to,
        (0..dim).map(|i| (MultiIndex::unit(dim, i).exponents().to_vec(), 1.0)),
    )
    .unwrap();
    let mut f = PowerSeries::new(dim, 1, up_to);
    for _ in 0..(2 * up_to + 4) {
        // G(f) = φ(f) - (Mn+1) f - 1 + s
        let mut g = phi.compose(&f).unwrap();
        for (k, b) in f.coeffs() {
            g.insert(k.clone(), vec![-lin * b[0]]).unwrap();
        }
        g.insert(MultiIndex::zeros(dim), vec![-1.0]).unwrap();
        for (k, b) in s.coeffs() {
            g.insert(k.clone(), b.clone()).unwrap();
        }
        // 1 / G'(f) with G'(f) = d0 + h, h(0) = 0
        let mut dg = dphi.compose(&f).unwrap();
        dg.insert(MultiIndex::zeros(dim), vec![-lin]).unwrap();
        let d0 = dg.constant_term()[0];
        let mut h = dg.clone();
        h.insert(MultiIndex::zeros(dim), vec![-d0]).unwrap();
        let inv = univariate(up_to, |k| (-1f64).powi(k as i32) / d0.powi(k as i32 + 1))
            .compose(&h)
            .unwrap();
        let step = g.multiply(&inv).unwrap();
        let mut next = f.clone();
        for (k, b) in step.coeffs() {
            next.insert(k.clone(), vec![-b[0]]).unwrap();
        }
        if next == f {
            break;
        }
        f = next;
    }
    MultiIndex::all_up_to(dim, up_to)
        .into_iter()
        .map(|j| {
            let v = f.coeff(&j).map_or(0.0, |b| b[0]);
            (j, v)
        })
        .collect()
}

/// `d(x, D)` by enumerating active facet sets of size at most `dim`, solving
/// each equality-constrained projection and keeping feasible candidates.
pub fn brute_force_distance(x: &[f64], d: &Polytope) -> f64 {
    let hs = d.halfspaces();
    if d.contains(x, 0.0) {
        return 0.0;
    }
    let dim = x.len();
    let k = hs.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let set: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if set.len() > dim {
            continue;
        }
        // y = x + Σ μ_s a_s with a_s·y = b_s
        let gram: Vec<Vec<f64>> = set
            .iter()
            .map(|&i| {
                set.iter()
                    .map(|&j| math::dot(hs[i].normal(), hs[j].normal()))
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = set.iter().map(|&i| hs[i].signed_distance(x)).collect();
        let Some(mu) = math::solve_linear(gram, rhs) else {
            continue;
        };
        let mut y = x.to_vec();
        for (&i, m) in set.iter().zip(&mu) {
            for (yc, ac) in y.iter_mut().zip(hs[i].normal()) {
                *yc += m * ac;
            }
        }
        if d.contains(&y, 1e-9) {
            best = best.min(math::dist2(x, &y));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use polyflow_core::formal_solver::majorant_table;

    #[test]
    fn newton_majorant_small_case() {
        let b = majorant_by_newton(1.0, 1, 4, 1);
        let get = |k: u32| b[&MultiIndex::new(vec![k])];
        assert_eq!((get(0), get(1), get(2), get(3)), (0.0, 1.0, 1.0, 3.0));
        let t = majorant_table(1.0, 1, 4, 1);
        assert_eq!(get(4), t.get(&MultiIndex::new(vec![4])));
    }

    #[test]
    fn literal_composition_of_square() {
        // (y²) ∘ (x + x²) = x² + 2x³ + x⁴
        let f = PowerSeries::scalar(1, 4, [(vec![2], 1.0)]).unwrap();
        let g = PowerSeries::scalar(1, 4, [(vec![1], 1.0), (vec![2], 1.0)]).unwrap();
        let h = compose_literal(&f, &g);
        assert_eq!(h.coeff(&MultiIndex::new(vec![3])), Some(&[2.0][..]));
        assert_eq!(h.coeff(&MultiIndex::new(vec![4])), Some(&[1.0][..]));
    }

    #[test]
    fn brute_force_distance_to_square() {
        let sq = Polytope::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((brute_force_distance(&[2.0, 2.0], &sq) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(brute_force_distance(&[0.5, 0.5], &sq), 0.0);
        assert!((brute_force_distance(&[0.5, -3.0], &sq) - 3.0).abs() < 1e-14);
    }
}
