//! Univariate polynomials in `t`, scalar ([`UniPoly`]) and `n`-dimensional
//! ([`Poly`]), with the dominating function `P*`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::series::Coeff;

/// Scalar polynomial `Σ a_i t^i`; trailing zeros are always trimmed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UniPoly(Vec<f64>);

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        UniPoly(coeffs)
    }

    pub fn zero() -> Self {
        UniPoly(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c t^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.0.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.0.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, a| acc * t + a)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| a * i as f64)
                .collect(),
        )
    }

    /// `∫_0^t P(s) ds`.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![0.0];
        v.extend(self.0.iter().enumerate().map(|(i, a)| a / (i + 1) as f64));
        Self::new(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.0.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut v = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Self::new(v)
    }

    /// Drops coefficients with `|a_i| ≤ threshold`.
    pub fn chop(&self, threshold: f64) -> Self {
        Self::new(
            self.0
                .iter()
                .map(|&a| if a.abs() <= threshold { 0.0 } else { a })
                .collect(),
        )
    }

    /// `P*(t) = Σ |a_i t^i|`.
    pub fn star_eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.0.iter().rev().fold(0.0, |acc, a| acc * t + a.abs()))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl Coeff for UniPoly {
    fn constant(c: f64) -> Self {
        UniPoly::constant(c)
    }
    fn is_zero(&self) -> bool {
        UniPoly::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self = UniPoly::add(self, other);
    }
    fn mul(&self, other: &Self) -> Self {
        UniPoly::mul(self, other)
    }
    fn scale(&self, s: f64) -> Self {
        UniPoly::scale(self, s)
    }
}

/// `n`-dimensional polynomial, stored component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    components: Vec<UniPoly>,
}

impl Poly {
    pub fn zeros(dim: usize) -> Self {
        Poly {
            components: vec![UniPoly::zero(); dim],
        }
    }

    pub fn from_components(components: Vec<UniPoly>) -> Self {
        Poly { components }
    }

    /// Constant polynomial with value `v`.
    pub fn constant(v: &[f64]) -> Self {
        Poly {
            components: v.iter().map(|&c| UniPoly::constant(c)).collect(),
        }
    }

    /// Builds from the list of coefficient vectors of `t^0, t^1, …`.
    pub fn from_power_vectors(dim: usize, powers: &[Vec<f64>]) -> Result<Self> {
        let mut comps = vec![Vec::with_capacity(powers.len()); dim];
        for v in powers {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            for (c, &a) in comps.iter_mut().zip(v) {
                c.push(a);
            }
        }
        Ok(Poly {
            components: comps.into_iter().map(UniPoly::new).collect(),
        })
    }

    /// Coefficient vectors of `t^0 … t^deg`.
    pub fn power_vectors(&self) -> Vec<Vec<f64>> {
        let len = self
            .components
            .iter()
            .map(|c| c.coeffs().len())
            .max()
            .unwrap_or(0);
        (0..len)
            .map(|i| self.components.iter().map(|c| c.coeff(i)).collect())
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[UniPoly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &UniPoly {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut UniPoly {
        &mut self.components[i]
    }

    /// `deg(P) = max_i deg(P_i)`.
    pub fn degree(&self) -> usize {
        self.components
            .iter()
            .map(UniPoly::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(UniPoly::is_zero)
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(t)).collect()
    }

    pub fn derivative(&self) -> Self {
        Poly {
            components: self.components.iter().map(UniPoly::derivative).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Poly {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Poly {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Poly {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Scalar polynomial `a·P(t)`.
    pub fn dot(&self, a: &[f64]) -> UniPoly {
        self.components
            .iter()
            .zip(a)
            .fold(UniPoly::zero(), |acc, (c, &w)| acc.add(&c.scale(w)))
    }

    /// `P*(t) = max_i P_i*(t)`.
    pub fn star_eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let mut m = 0.0f64;
        for c in &self.components {
            m = m.max(c.star_eval(t)?);
        }
        Ok(m)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, c| m.max(c.max_abs_coeff()))
    }
}
