//! Multi-indices and the sparse truncated series engine shared by power
//! series (scalar coefficients) and λ-series (polynomial coefficients).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Exponent tuple `I = (I_1, …, I_m)` with `|I| = Σ I_k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Largest single exponent, `|J|_∞`.
    pub fn max_exponent(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when every component stays nonnegative.
    pub fn checked_minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `λ·J`.
    pub fn rate(&self, rates: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(rates)
            .map(|(&j, l)| f64::from(j) * l)
            .sum()
    }

    /// `x^I`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &v)| crate::math::powi(v, e))
            .product()
    }

    /// Every multi-index of dimension `dim` with `|I| = degree`, in
    /// lexicographic order.
    pub fn all_of_degree(dim: usize, degree: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for e in (0..=left).rev() {
                cur[pos] = e;
                rec(pos + 1, left - e, cur, out);
            }
        }
        if dim == 0 {
            if degree == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(0, degree, &mut cur, &mut out);
        out
    }

    /// Every multi-index with `|I| ≤ max_degree`, grouped by degree.
    pub fn all_up_to(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
        (0..=max_degree)
            .flat_map(|d| Self::all_of_degree(dim, d))
            .collect()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Coefficient ring for [`Sparse`] series.
pub trait Coeff: Clone {
    fn constant(c: f64) -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
}

impl Coeff for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
}

/// Scalar truncated series in `dim` variables, `Σ_J c_J w^J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparse<C> {
    pub dim: usize,
    pub terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> Sparse<C> {
    pub fn zero(dim: usize) -> Self {
        Sparse {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(dim: usize) -> Self {
        let mut s = Self::zero(dim);
        s.terms.insert(MultiIndex::zeros(dim), C::constant(1.0));
        s
    }

    pub fn add_term(&mut self, index: MultiIndex, c: &C) {
        match self.terms.get_mut(&index) {
            Some(slot) => slot.add_assign(c),
            None => {
                self.terms.insert(index, c.clone());
            }
        }
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
    }

    /// Cauchy product keeping only `|J| ≤ order`.
    pub fn mul_truncated(&self, other: &Self, order: u32) -> Self {
        let mut out = Self::zero(self.dim);
        for (i, a) in &self.terms {
            let di = i.degree();
            if di > order {
                continue;
            }
            for (j, b) in &other.terms {
                if di + j.degree() <= order {
                    out.add_term(i.plus(j), &a.mul(b));
                }
            }
        }
        out.prune();
        out
    }
}

/// Substitutes scalar inner series into the vector-coefficient power series
/// `f = Σ_I b_I x^I`, returning one series per output component of `f`
/// truncated at `order`. Inner series must have no constant term for the
/// truncation to be exact.
///
/// Powers of each inner component are built once by repeated
/// multiplication; every monomial of `f` is then a product of cached powers.
pub fn substitute<C: Coeff>(
    coeffs: &BTreeMap<MultiIndex, Vec<f64>>,
    out_dim: usize,
    inner: &[Sparse<C>],
    order: u32,
) -> Vec<Sparse<C>> {
    let dim = inner.first().map(|s| s.dim).unwrap_or(0);
    let vars = inner.len();
    let mut max_exp = vec![0u32; vars];
    for idx in coeffs.keys() {
        for (m, &e) in max_exp.iter_mut().zip(idx.exponents()) {
            *m = (*m).max(e);
        }
    }
    let powers: Vec<Vec<Sparse<C>>> = inner
        .iter()
        .zip(&max_exp)
        .map(|(g, &emax)| {
            let mut p = Vec::with_capacity(emax as usize + 1);
            p.push(Sparse::one(dim));
            for k in 1..=emax as usize {
                let next = p[k - 1].mul_truncated(g, order);
                p.push(next);
            }
            p
        })
        .collect();

    let mut out: Vec<Sparse<C>> = (0..out_dim).map(|_| Sparse::zero(dim)).collect();
    for (idx, b) in coeffs {
        if idx.degree() > order {
            continue;
        }
        let mut mono = Sparse::one(dim);
        for (var, &e) in idx.exponents().iter().enumerate() {
            if e > 0 {
                mono = mono.mul_truncated(&powers[var][e as usize], order);
                if mono.terms.is_empty() {
                    break;
                }
            }
        }
        for (k, &bk) in b.iter().enumerate() {
            if bk != 0.0 {
                for (j, c) in &mono.terms {
                    out[k].add_term(j.clone(), &c.scale(bk));
                }
            }
        }
    }
    for s in &mut out {
        s.prune();
    }
    out
}
