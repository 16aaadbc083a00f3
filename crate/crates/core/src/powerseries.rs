//! Truncated multivariate power series `f(x) = Σ_{|I| ≤ N} b_I x^I` with
//! vector coefficients `b_I ∈ ℝ^n`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::series::{substitute, MultiIndex, Sparse};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    in_dim: usize,
    out_dim: usize,
    order: u32,
    coeffs: BTreeMap<MultiIndex, Vec<f64>>,
    /// Optional constant `M` with `|b_I| ≤ M^{|I|+1}`; recorded, never inferred.
    growth_bound: Option<f64>,
}

impl PowerSeries {
    pub fn new(in_dim: usize, out_dim: usize, order: u32) -> Self {
        PowerSeries {
            in_dim,
            out_dim,
            order,
            coeffs: BTreeMap::new(),
            growth_bound: None,
        }
    }

    pub fn from_terms<I>(in_dim: usize, out_dim: usize, order: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<f64>)>,
    {
        let mut s = Self::new(in_dim, out_dim, order);
        for (idx, b) in terms {
            s.insert(MultiIndex::new(idx), b)?;
        }
        Ok(s)
    }

    /// Scalar-valued convenience constructor.
    pub fn scalar<I>(in_dim: usize, order: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        Self::from_terms(
            in_dim,
            1,
            order,
            terms.into_iter().map(|(i, b)| (i, vec![b])),
        )
    }

    pub fn identity(dim: usize, order: u32) -> Self {
        let mut s = Self::new(dim, dim, order.max(1));
        for i in 0..dim {
            let mut b = vec![0.0; dim];
            b[i] = 1.0;
            s.coeffs.insert(MultiIndex::unit(dim, i), b);
        }
        s
    }

    /// Linear map `x ↦ A x` for an `out × in` matrix.
    pub fn linear(matrix: &[Vec<f64>], in_dim: usize, order: u32) -> Result<Self> {
        let mut s = Self::new(in_dim, matrix.len(), order.max(1));
        for j in 0..in_dim {
            let col: Vec<f64> = matrix.iter().map(|row| row[j]).collect();
            s.insert(MultiIndex::unit(in_dim, j), col)?;
        }
        Ok(s)
    }

    /// Adds `b x^I` to the series.
    pub fn insert(&mut self, index: MultiIndex, b: Vec<f64>) -> Result<()> {
        if index.dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: index.dim(),
            });
        }
        if b.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: b.len(),
            });
        }
        if index.degree() > self.order {
            return Err(Error::BeyondOrder {
                degree: index.degree(),
                order: self.order,
            });
        }
        if b.iter().all(|&x| x == 0.0) {
            return Ok(());
        }
        match self.coeffs.get_mut(&index) {
            Some(slot) => {
                for (s, x) in slot.iter_mut().zip(&b) {
                    *s += x;
                }
                if slot.iter().all(|&x| x == 0.0) {
                    self.coeffs.remove(&index);
                }
            }
            None => {
                self.coeffs.insert(index, b);
            }
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn growth_bound(&self) -> Option<f64> {
        self.growth_bound
    }

    pub fn with_growth_bound(mut self, m: f64) -> Self {
        self.growth_bound = Some(m);
        self
    }

    /// Changes the truncation order; lowering it drops the excess terms,
    /// raising it declares the missing coefficients to be zero.
    pub fn with_order(mut self, order: u32) -> Self {
        self.coeffs.retain(|i, _| i.degree() <= order);
        self.order = order;
        self
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Vec<f64>> {
        &self.coeffs
    }

    pub fn coeff(&self, index: &MultiIndex) -> Option<&[f64]> {
        self.coeffs.get(index).map(Vec::as_slice)
    }

    /// Highest `|I|` actually stored.
    pub fn max_degree(&self) -> u32 {
        self.coeffs
            .keys()
            .map(MultiIndex::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn constant_term(&self) -> Vec<f64> {
        self.coeff(&MultiIndex::zeros(self.in_dim))
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.out_dim])
    }

    pub fn is_centered(&self) -> bool {
        self.constant_term().iter().all(|&x| x == 0.0)
    }

    /// Jacobian at the origin as an `out × in` matrix.
    pub fn linear_part(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.in_dim]; self.out_dim];
        for j in 0..self.in_dim {
            if let Some(col) = self.coeff(&MultiIndex::unit(self.in_dim, j)) {
                for (row, &v) in a.iter_mut().zip(col) {
                    row[j] = v;
                }
            }
        }
        a
    }

    /// Terms with `|I| ≥ 2`.
    pub fn nonlinear_part(&self) -> Self {
        let mut s = self.clone();
        s.coeffs.retain(|i, _| i.degree() >= 2);
        s
    }

    /// `Σ_{|I| ≤ N} b_I x^I`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        for (idx, b) in &self.coeffs {
            let m = idx.monomial(x);
            for (o, bk) in out.iter_mut().zip(b) {
                *o += bk * m;
            }
        }
        out
    }

    /// Component `k` of the output as a scalar series.
    pub fn component(&self, k: usize) -> Self {
        self.dot_output(&{
            let mut a = vec![0.0; self.out_dim];
            a[k] = 1.0;
            a
        })
    }

    /// Scalar series `a·f(x)`.
    pub fn dot_output(&self, a: &[f64]) -> Self {
        let mut s = Self::new(self.in_dim, 1, self.order);
        for (idx, b) in &self.coeffs {
            let v = math::dot(a, b);
            if v != 0.0 {
                s.coeffs.insert(idx.clone(), vec![v]);
            }
        }
        s
    }

    pub(crate) fn sparse_components(&self) -> Vec<Sparse<f64>> {
        let mut comps: Vec<Sparse<f64>> = (0..self.out_dim)
            .map(|_| Sparse::zero(self.in_dim))
            .collect();
        for (idx, b) in &self.coeffs {
            for (c, &v) in comps.iter_mut().zip(b) {
                if v != 0.0 {
                    c.terms.insert(idx.clone(), v);
                }
            }
        }
        comps
    }

    pub(crate) fn from_sparse_components(in_dim: usize, order: u32, comps: &[Sparse<f64>]) -> Self {
        let out_dim = comps.len();
        let mut s = Self::new(in_dim, out_dim, order);
        for (k, c) in comps.iter().enumerate() {
            for (idx, &v) in &c.terms {
                if v != 0.0 {
                    s.coeffs
                        .entry(idx.clone())
                        .or_insert_with(|| vec![0.0; out_dim])[k] += v;
                }
            }
        }
        s.coeffs.retain(|_, b| b.iter().any(|&x| x != 0.0));
        s
    }

    /// `f ∘ g`, exact through order `min(f.order, g.order)`; `g` must have
    /// no constant term, and the constant term of the result is `b_0`.
    pub fn compose(&self, g: &PowerSeries) -> Result<PowerSeries> {
        if g.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: g.out_dim,
            });
        }
        if !g.is_centered() {
            return Err(Error::NonzeroConstantTerm);
        }
        let order = self.order.min(g.order);
        let inner = g.sparse_components();
        let comps = substitute(&self.coeffs, self.out_dim, &inner, order);
        Ok(Self::from_sparse_components(g.in_dim, order, &comps))
    }

    /// Truncated Cauchy product of two scalar series.
    pub fn multiply(&self, g: &PowerSeries) -> Result<PowerSeries> {
        for s in [self, g] {
            if s.out_dim != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: s.out_dim,
                });
            }
        }
        if self.in_dim != g.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: g.in_dim,
            });
        }
        let order = self.order.min(g.order);
        let a = &self.sparse_components()[0];
        let b = &g.sparse_components()[0];
        let prod = a.mul_truncated(b, order);
        Ok(Self::from_sparse_components(self.in_dim, order, &[prod]))
    }

    /// `f_*(x) = Σ |b_I| x^I`, componentwise.
    pub fn majorant(&self) -> Self {
        let mut s = self.clone();
        for b in s.coeffs.values_mut() {
            for v in b.iter_mut() {
                *v = v.abs();
            }
        }
        s
    }

    /// `z ↦ f(x0 + z)`, expanded exactly; the order is unchanged.
    pub fn recenter(&self, x0: &[f64]) -> Self {
        let m = self.in_dim;
        let mut out = Self::new(m, self.out_dim, self.order);
        out.growth_bound = None;
        for (idx, b) in &self.coeffs {
            // Π_i Σ_k C(I_i, k) x0_i^{I_i - k} z_i^k
            let mut expansion: Sparse<f64> = Sparse::one(m);
            for (i, &e) in idx.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut factor: Sparse<f64> = Sparse::zero(m);
                for k in 0..=e {
                    let c = math::binomial(e, k) * math::powi(x0[i], e - k);
                    if c != 0.0 {
                        let mut ex = vec![0u32; m];
                        ex[i] = k;
                        factor.add_term(MultiIndex::new(ex), &c);
                    }
                }
                expansion = expansion.mul_truncated(&factor, u32::MAX);
            }
            for (j, c) in expansion.terms {
                let v: Vec<f64> = b.iter().map(|bk| bk * c).collect();
                // degree never exceeds |I| ≤ order
                let _ = out.insert(j, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(terms: &[(u32, f64)], order: u32) -> PowerSeries {
        PowerSeries::scalar(1, order, terms.iter().map(|&(e, b)| (vec![e], b))).unwrap()
    }

    #[test]
    fn compose_square_with_shifted_identity() {
        // f(x)=x^2, g(x)=x+x^2 -> x^2+2x^3+x^4
        let f = one_var(&[(2, 1.0)], 4);
        let g = one_var(&[(1, 1.0), (2, 1.0)], 4);
        let h = f.compose(&g).unwrap();
        assert_eq!(h, one_var(&[(2, 1.0), (3, 2.0), (4, 1.0)], 4));
        // evaluation oracle at sample points
        for k in 0..10 {
            let x = -0.5 + 0.1 * k as f64;
            let direct = f.evaluate(&g.evaluate(&[x]))[0];
            assert!((h.evaluate(&[x])[0] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_and_constant_composition() {
        let g = PowerSeries::from_terms(
            2,
            2,
            3,
            [
                (vec![1, 0], vec![1.0, 2.0]),
                (vec![1, 1], vec![-1.0, 0.5]),
                (vec![0, 3], vec![0.0, 4.0]),
            ],
        )
        .unwrap();
        assert_eq!(PowerSeries::identity(2, 3).compose(&g).unwrap(), g);
        let c = PowerSeries::from_terms(2, 1, 3, [(vec![0, 0], vec![7.0])]).unwrap();
        let h = c.compose(&g).unwrap();
        assert_eq!(h.coeffs().len(), 1);
        assert_eq!(h.constant_term(), vec![7.0]);
    }

    #[test]
    fn compose_errors() {
        let f = one_var(&[(2, 1.0)], 4);
        let g = one_var(&[(0, 1.0), (1, 1.0)], 4);
        assert!(matches!(f.compose(&g), Err(Error::NonzeroConstantTerm)));
        let g2 = PowerSeries::identity(2, 3);
        assert!(matches!(
            f.compose(&g2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compose_truncates_at_min_order() {
        let f = one_var(&[(1, 1.0), (3, 1.0)], 5);
        let g = one_var(&[(1, 1.0), (2, 1.0)], 2);
        let h = f.compose(&g).unwrap();
        assert_eq!(h.order(), 2);
        assert_eq!(h, one_var(&[(1, 1.0), (2, 1.0)], 2));
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(one_var(&[(2, 1.0)], 2).evaluate(&[3.0]), vec![9.0]);
        assert_eq!(PowerSeries::new(2, 1, 3).evaluate(&[1.0, 2.0]), vec![0.0]);
        let f = PowerSeries::scalar(
            2,
            2,
            [(vec![1, 0], 1.0), (vec![0, 1], 2.0), (vec![1, 1], 1.0)],
        )
        .unwrap();
        assert_eq!(f.evaluate(&[1.0, 1.0]), vec![4.0]);
    }

    #[test]
    fn majorant_examples() {
        assert_eq!(
            one_var(&[(1, 1.0), (2, -1.0)], 2).majorant(),
            one_var(&[(1, 1.0), (2, 1.0)], 2)
        );
        let pos = one_var(&[(1, 1.0), (3, 2.0)], 3);
        assert_eq!(pos.majorant(), pos);
        let v = PowerSeries::from_terms(1, 2, 1, [(vec![1], vec![1.0, -2.0])]).unwrap();
        assert_eq!(
            v.majorant().coeff(&MultiIndex::new(vec![1])).unwrap(),
            &[1.0, 2.0]
        );
    }

    #[test]
    fn multiply_examples() {
        let a = one_var(&[(0, 1.0), (1, 1.0)], 3);
        let b = one_var(&[(0, 1.0), (1, -1.0)], 3);
        assert_eq!(a.multiply(&b).unwrap(), one_var(&[(0, 1.0), (2, -1.0)], 3));
        assert!(a
            .multiply(&PowerSeries::new(1, 1, 3))
            .unwrap()
            .coeffs()
            .is_empty());
        let s = PowerSeries::scalar(2, 2, [(vec![1, 0], 1.0), (vec![0, 1], 1.0)]).unwrap();
        let sq = s.multiply(&s).unwrap();
        assert_eq!(
            sq,
            PowerSeries::scalar(
                2,
                2,
                [(vec![2, 0], 1.0), (vec![1, 1], 2.0), (vec![0, 2], 1.0)]
            )
            .unwrap()
        );
        let v = PowerSeries::identity(2, 2);
        assert!(s.multiply(&v).is_err());
    }

    #[test]
    fn recenter_expands_exactly() {
        // f(x) = x^2 + x y, recentered at (1, 2)
        let f = PowerSeries::scalar(2, 2, [(vec![2, 0], 1.0), (vec![1, 1], 1.0)]).unwrap();
        let w = f.recenter(&[1.0, 2.0]);
        for &(a, b) in &[(0.0, 0.0), (0.3, -0.2), (-1.0, 0.5)] {
            let lhs = w.evaluate(&[a, b])[0];
            let rhs = f.evaluate(&[1.0 + a, 2.0 + b])[0];
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn insert_rejects_excess_degree() {
        let mut f = PowerSeries::new(1, 1, 2);
        assert!(matches!(
            f.insert(MultiIndex::new(vec![3]), vec![1.0]),
            Err(Error::BeyondOrder { .. })
        ));
    }
}
