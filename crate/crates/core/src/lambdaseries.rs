//! λ-series `x(t) = Σ_J P_J(t) e^{λ·J t}` with negative rates `λ ∈ ℝ^m` and
//! `n`-dimensional polynomial coefficients, truncated at `|J| ≤ order`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
pub use crate::poly::{Poly, UniPoly};
use crate::powerseries::PowerSeries;
use crate::series::{substitute, MultiIndex, Sparse};

/// Relative tolerance under which two rates `λ·J` are treated as equal.
pub const RATE_MERGE_TOL: f64 = 1e-12;
/// Coefficients at or below this magnitude count as cancelled.
pub const LEADING_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSeries {
    rates: Vec<f64>,
    dim: usize,
    order: u32,
    terms: BTreeMap<MultiIndex, Poly>,
}

/// Leading behaviour `a t^q e^{r t}` of a scalar λ-series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantTerm {
    pub coefficient: f64,
    pub power: usize,
    pub rate: f64,
}

impl LambdaSeries {
    pub fn new(rates: Vec<f64>, dim: usize, order: u32) -> Result<Self> {
        if rates.is_empty() || rates.iter().any(|&l| !(l < 0.0)) {
            return Err(Error::InvalidRates);
        }
        Ok(LambdaSeries {
            rates,
            dim,
            order,
            terms: BTreeMap::new(),
        })
    }

    /// Adds `P e^{λ·J t}`.
    pub fn insert(&mut self, index: MultiIndex, p: Poly) -> Result<()> {
        if index.dim() != self.rates.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rates.len(),
                found: index.dim(),
            });
        }
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.dim(),
            });
        }
        if index.degree() > self.order {
            return Err(Error::BeyondOrder {
                degree: index.degree(),
                order: self.order,
            });
        }
        let sum = match self.terms.remove(&index) {
            Some(old) => old.add(&p),
            None => p,
        };
        if !sum.is_zero() {
            self.terms.insert(index, sum);
        }
        Ok(())
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Output dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of rates `m`.
    pub fn num_rates(&self) -> usize {
        self.rates.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Poly> {
        &self.terms
    }

    pub fn term(&self, index: &MultiIndex) -> Option<&Poly> {
        self.terms.get(index)
    }

    /// `P_0 = 0`.
    pub fn is_centered(&self) -> bool {
        self.term(&MultiIndex::zeros(self.rates.len())).is_none()
    }

    /// Termwise `P_J ↦ P_J' + (λ·J) P_J`.
    pub fn formal_derivative(&self) -> LambdaSeries {
        let mut out = LambdaSeries {
            rates: self.rates.clone(),
            dim: self.dim,
            order: self.order,
            terms: BTreeMap::new(),
        };
        for (j, p) in &self.terms {
            let d = p.derivative().add(&p.scale(j.rate(&self.rates)));
            if !d.is_zero() {
                out.terms.insert(j.clone(), d);
            }
        }
        out
    }

    /// `Σ_{|J| ≤ order} P_J(t) e^{λ·J t}`.
    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (j, p) in &self.terms {
            let w = math::exp(j.rate(&self.rates) * t);
            for (o, v) in out.iter_mut().zip(p.eval(t)) {
                *o += v * w;
            }
        }
        out
    }

    /// Upper bound on `Σ_{|J|_∞ > order} |P_J(t) e^{λ·J t}|` under the
    /// caller's assumption `|P_J(s)| ≤ s^{q|J|}` for `s ≥ t`:
    /// `Π_i 1/(1-ρ_i) - Π_i (1-ρ_i^{n+1})/(1-ρ_i)` with `ρ_i = t^q e^{λ_i t}`.
    pub fn tail_bound(&self, t: f64, q: f64) -> Result<f64> {
        let ratios: Vec<f64> = self
            .rates
            .iter()
            .map(|&l| math::powf(t, q) * math::exp(l * t))
            .collect();
        if let Some(&r) = ratios.iter().find(|&&r| !(r < 1.0)) {
            return Err(Error::NotInRegime { ratio: r });
        }
        let full: f64 = ratios.iter().map(|r| 1.0 / (1.0 - r)).product();
        // 1 - Π(1 - ρ_i^{n+1}) without cancellation
        let log_keep: f64 = ratios
            .iter()
            .map(|&r| math::ln1p(-math::powi(r, self.order + 1)))
            .sum();
        Ok(full * -math::expm1(log_keep))
    }

    /// Scalar series `a·x(t)`.
    pub fn dot(&self, a: &[f64]) -> LambdaSeries {
        let mut out = LambdaSeries {
            rates: self.rates.clone(),
            dim: 1,
            order: self.order,
            terms: BTreeMap::new(),
        };
        for (j, p) in &self.terms {
            let s = p.dot(a);
            if !s.is_zero() {
                out.terms.insert(j.clone(), Poly::from_components(vec![s]));
            }
        }
        out
    }

    pub fn sub(&self, other: &LambdaSeries) -> Result<LambdaSeries> {
        if other.dim != self.dim || other.rates != self.rates {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.clone();
        out.order = self.order.min(other.order);
        out.terms.retain(|j, _| j.degree() <= out.order);
        for (j, p) in &other.terms {
            if j.degree() <= out.order {
                out.insert(j.clone(), p.scale(-1.0))?;
            }
        }
        Ok(out)
    }

    /// Largest absolute polynomial coefficient over all terms.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .fold(0.0, |m, p| m.max(p.max_abs_coeff()))
    }

    /// Leading term `a t^q e^{r t}` of a scalar series; terms with equal
    /// rates are merged first, cancelled groups are skipped, and `None`
    /// means every group cancels up to truncation.
    pub fn dominant_term(&self) -> Option<DominantTerm> {
        let mut by_rate: Vec<(f64, &UniPoly)> = self
            .terms
            .iter()
            .map(|(j, p)| (j.rate(&self.rates), p.component(0)))
            .collect();
        by_rate.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut i = 0;
        while i < by_rate.len() {
            let r = by_rate[i].0;
            let mut sum = UniPoly::zero();
            while i < by_rate.len() && (by_rate[i].0 - r).abs() <= RATE_MERGE_TOL * r.abs().max(1.0)
            {
                sum = sum.add(by_rate[i].1);
                i += 1;
            }
            let sum = sum.chop(LEADING_ZERO_TOL);
            if !sum.is_zero() {
                return Some(DominantTerm {
                    coefficient: sum.leading(),
                    power: sum.degree(),
                    rate: r,
                });
            }
        }
        None
    }

    pub(crate) fn sparse_components(&self) -> Vec<Sparse<UniPoly>> {
        let m = self.rates.len();
        (0..self.dim)
            .map(|k| {
                let mut s = Sparse::zero(m);
                for (j, p) in &self.terms {
                    let c = p.component(k);
                    if !c.is_zero() {
                        s.terms.insert(j.clone(), c.clone());
                    }
                }
                s
            })
            .collect()
    }

    pub(crate) fn from_sparse_components(
        rates: Vec<f64>,
        order: u32,
        comps: Vec<Sparse<UniPoly>>,
    ) -> LambdaSeries {
        let dim = comps.len();
        let mut terms: BTreeMap<MultiIndex, Poly> = BTreeMap::new();
        for (k, c) in comps.into_iter().enumerate() {
            for (j, p) in c.terms {
                *terms
                    .entry(j)
                    .or_insert_with(|| Poly::zeros(dim))
                    .component_mut(k) = p;
            }
        }
        terms.retain(|_, p| !p.is_zero());
        LambdaSeries {
            rates,
            dim,
            order,
            terms,
        }
    }
}

/// `f ∘ x` as a λ-series through `|J| ≤ x.order`, with `Q_0 = b_0`. The
/// analytic function is taken as exact: coefficients beyond its order are 0.
pub fn compose_with_analytic(f: &PowerSeries, x: &LambdaSeries) -> Result<LambdaSeries> {
    if f.in_dim() != x.dim {
        return Err(Error::DimensionMismatch {
            expected: f.in_dim(),
            found: x.dim,
        });
    }
    if !x.is_centered() {
        return Err(Error::NotCentered);
    }
    let inner = x.sparse_components();
    let comps = substitute(f.coeffs(), f.out_dim(), &inner, x.order);
    Ok(LambdaSeries::from_sparse_components(
        x.rates.clone(),
        x.order,
        comps,
    ))
}

/// `P*(t) = max_i Σ_k |a_{ik}| t^k`.
pub fn star_eval(p: &Poly, t: f64) -> Result<f64> {
    p.star_eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(rates: &[f64], order: u32, terms: &[(&[u32], &[f64])]) -> LambdaSeries {
        let mut s = LambdaSeries::new(rates.to_vec(), 1, order).unwrap();
        for (j, p) in terms {
            s.insert(
                MultiIndex::new(j.to_vec()),
                Poly::from_components(vec![UniPoly::new(p.to_vec())]),
            )
            .unwrap();
        }
        s
    }

    #[test]
    fn rejects_nonnegative_rates() {
        assert!(LambdaSeries::new(vec![-1.0, 0.0], 1, 3).is_err());
        assert!(LambdaSeries::new(vec![], 1, 3).is_err());
    }

    #[test]
    fn derivative_examples() {
        // t e^{-t} -> (1 - t) e^{-t}
        let x = scalar(&[-1.0], 2, &[(&[1], &[0.0, 1.0])]);
        assert_eq!(
            x.formal_derivative(),
            scalar(&[-1.0], 2, &[(&[1], &[1.0, -1.0])])
        );
        // c e^{-t} -> -c e^{-t}
        let x = scalar(&[-1.0], 2, &[(&[1], &[3.0])]);
        assert_eq!(
            x.formal_derivative(),
            scalar(&[-1.0], 2, &[(&[1], &[-3.0])])
        );
        // e^{-t} + e^{-2t}, λ = (-1, -2)
        let x = scalar(&[-1.0, -2.0], 2, &[(&[1, 0], &[1.0]), (&[0, 1], &[1.0])]);
        assert_eq!(
            x.formal_derivative(),
            scalar(&[-1.0, -2.0], 2, &[(&[1, 0], &[-1.0]), (&[0, 1], &[-2.0])])
        );
    }

    #[test]
    fn evaluation_examples() {
        let x = scalar(&[-1.0], 2, &[(&[1], &[1.0])]);
        assert_eq!(x.evaluate(0.0), vec![1.0]);
        let x = scalar(&[-1.0], 2, &[(&[1], &[1.0]), (&[2], &[-1.0])]);
        assert!((x.evaluate(core::f64::consts::LN_2)[0] - 0.25).abs() < 1e-15);
        assert_eq!(
            LambdaSeries::new(vec![-1.0], 2, 3).unwrap().evaluate(4.0),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn compose_square() {
        let lam = -0.7;
        let sq = PowerSeries::scalar(1, 2, [(vec![2], 1.0)]).unwrap();
        // c e^{λt} -> c^2 e^{2λt}
        let x = scalar(&[lam], 4, &[(&[1], &[3.0])]);
        let y = compose_with_analytic(&sq, &x).unwrap();
        assert_eq!(y, scalar(&[lam], 4, &[(&[2], &[9.0])]));
        // e^{λt} + t e^{2λt} -> e^{2λt} + 2t e^{3λt} + t^2 e^{4λt}
        let x = scalar(&[lam], 4, &[(&[1], &[1.0]), (&[2], &[0.0, 1.0])]);
        let y = compose_with_analytic(&sq, &x).unwrap();
        let expect = scalar(
            &[lam],
            4,
            &[
                (&[2], &[1.0]),
                (&[3], &[0.0, 2.0]),
                (&[4], &[0.0, 0.0, 1.0]),
            ],
        );
        assert_eq!(y, expect);
        for k in 0..10 {
            let t = 0.5 * k as f64;
            let xv = x.evaluate(t)[0];
            assert!((y.evaluate(t)[0] - xv * xv).abs() < 1e-13);
        }
    }

    #[test]
    fn compose_linear_is_termwise() {
        let a = PowerSeries::linear(&[vec![1.0, 2.0], vec![0.0, -1.0]], 2, 1).unwrap();
        let mut x = LambdaSeries::new(vec![-1.0, -3.0], 2, 3).unwrap();
        let p = Poly::from_power_vectors(2, &[vec![1.0, 2.0], vec![0.5, 0.0]]).unwrap();
        x.insert(MultiIndex::new(vec![1, 1]), p.clone()).unwrap();
        let y = compose_with_analytic(&a, &x).unwrap();
        let expected = Poly::from_power_vectors(2, &[vec![5.0, -2.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(y.term(&MultiIndex::new(vec![1, 1])), Some(&expected));
    }

    #[test]
    fn compose_requires_centered_series() {
        let sq = PowerSeries::scalar(1, 2, [(vec![2], 1.0)]).unwrap();
        let x = scalar(&[-1.0], 2, &[(&[0], &[1.0])]);
        assert!(matches!(
            compose_with_analytic(&sq, &x),
            Err(Error::NotCentered)
        ));
        let id2 = PowerSeries::identity(2, 2);
        let x = scalar(&[-1.0], 2, &[(&[1], &[1.0])]);
        assert!(matches!(
            compose_with_analytic(&id2, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tail_bound_closed_form() {
        // m=1, λ=-1, q=0: e^{-(n+1)t} / (1 - e^{-t})
        for n in [1u32, 3, 6] {
            let x = LambdaSeries::new(vec![-1.0], 1, n).unwrap();
            for t in [0.5, 1.0, 4.0] {
                let got = x.tail_bound(t, 0.0).unwrap();
                let expect = math::exp(-((n + 1) as f64) * t) / (1.0 - math::exp(-t));
                assert!((got - expect).abs() <= 1e-14 * expect.max(1e-300));
                // direct summation of 10^3 tail terms
                let direct: f64 = (n + 1..n + 1001).map(|j| math::exp(-(j as f64) * t)).sum();
                assert!((got - direct).abs() <= 1e-12 * expect);
            }
        }
    }

    #[test]
    fn tail_bound_decreases_and_guards() {
        let mut prev = f64::INFINITY;
        for n in 1..30 {
            let b = LambdaSeries::new(vec![-1.0, -2.5], 1, n)
                .unwrap()
                .tail_bound(3.0, 1.0)
                .unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-9);
        let x = LambdaSeries::new(vec![-0.1], 1, 3).unwrap();
        assert!(matches!(
            x.tail_bound(10.0, 2.0),
            Err(Error::NotInRegime { .. })
        ));
    }

    #[test]
    fn dominant_term_examples() {
        // 3 t^2 e^{-t} - 5 e^{-2t}
        let s = scalar(&[-1.0], 2, &[(&[1], &[0.0, 0.0, 3.0]), (&[2], &[-5.0])]);
        assert_eq!(
            s.dominant_term(),
            Some(DominantTerm {
                coefficient: 3.0,
                power: 2,
                rate: -1.0
            })
        );
        // rate collision: J=(2,0) t e^{-2t} and J=(0,1) 4 e^{-2t} -> t + 4
        let s = scalar(
            &[-1.0, -2.0],
            2,
            &[(&[2, 0], &[0.0, 1.0]), (&[0, 1], &[4.0])],
        );
        assert_eq!(
            s.dominant_term(),
            Some(DominantTerm {
                coefficient: 1.0,
                power: 1,
                rate: -2.0
            })
        );
        assert_eq!(
            LambdaSeries::new(vec![-1.0], 1, 3).unwrap().dominant_term(),
            None
        );
        // cancelling group is skipped
        let s = scalar(
            &[-1.0, -2.0],
            2,
            &[
                (&[2, 0], &[1.0]),
                (&[0, 1], &[-1.0]),
                (&[1, 1], &[0.0, -2.0]),
            ],
        );
        assert_eq!(
            s.dominant_term(),
            Some(DominantTerm {
                coefficient: -2.0,
                power: 1,
                rate: -3.0
            })
        );
    }
}
