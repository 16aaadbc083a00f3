//! Formal λ-series solutions of `x' = V(x)` near a stable node.
//!
//! With `V(x) = Λx + Σ_{|I|≥2} b_I x^I` and `Λ = diag(λ)`, the solution
//! `x(t;c) = Σ_J P_J(t;c) e^{λ·J t}` is built level by level in `|J|`:
//! `P_0 = 0`, `P_{e_i} = c_i e_i`, and for `|J| ≥ 2`
//! `P_J = (d/dt - (Λ - λ·J))^{-1} Q_J` where `Q_J` collects the nonlinear
//! terms of `V` evaluated on strictly lower levels.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lambdaseries::{compose_with_analytic, DominantTerm, LambdaSeries};
use crate::poly::{Poly, UniPoly};
use crate::powerseries::PowerSeries;
use crate::series::MultiIndex;

/// `|λ_i - λ·J|` at or below this takes the integration branch.
pub const RESONANCE_TOL: f64 = 1e-12;
/// Nonzero `|u|` below this is reported as a near resonance.
pub const NEAR_RESONANCE_TOL: f64 = 1e-8;
/// Allowed deviation of `DV(0)` from `diag(λ)`.
pub const LINEAR_PART_TOL: f64 = 1e-12;

/// Rates `0 > λ_1 ≥ … ≥ λ_m` of a diagonal linear part.
#[derive(Debug, Clone, PartialEq)]
pub struct StableSpectrum {
    rates: Vec<f64>,
}

impl StableSpectrum {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        let negative = !rates.is_empty() && rates.iter().all(|&l| l < 0.0 && l.is_finite());
        let sorted = rates.windows(2).all(|w| w[0] >= w[1]);
        if !negative || !sorted {
            return Err(Error::InvalidRates);
        }
        Ok(StableSpectrum { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    /// `λ_1`, the slowest rate.
    pub fn slowest(&self) -> f64 {
        self.rates[0]
    }
}

/// `(d/dt - u)^{-1} Q`: the finite Neumann sum `-u^{-1} Σ_k u^{-k} Q^{(k)}`
/// for `u ≠ 0`, evaluated from the top coefficient down, and `∫_0^t Q` for
/// `u = 0`.
pub fn resolvent_poly(u: f64, q: &UniPoly) -> UniPoly {
    if u == 0.0 {
        return q.antiderivative();
    }
    let d = q.coeffs().len();
    let mut p = vec![0.0; d];
    // (i+1) p_{i+1} - u p_i = q_i
    for i in (0..d).rev() {
        let next = if i + 1 < d {
            (i + 1) as f64 * p[i + 1]
        } else {
            0.0
        };
        p[i] = (next - q.coeff(i)) / u;
    }
    UniPoly::new(p)
}

/// `(d/dt - u)P`.
pub fn apply_shifted_derivative(u: f64, p: &UniPoly) -> UniPoly {
    p.derivative().sub(&p.scale(u))
}

/// Componentwise resolvent for `U = diag(u)`.
pub fn resolvent_diag(u: &[f64], q: &Poly) -> Poly {
    Poly::from_components(
        q.components()
            .iter()
            .zip(u)
            .map(|(c, &ui)| resolvent_poly(ui, c))
            .collect(),
    )
}

/// A `(J, i)` pair where `λ_i - λ·J` vanished.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub index: MultiIndex,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormalSolution {
    pub series: LambdaSeries,
    pub params: Vec<f64>,
    pub field: PowerSeries,
    pub spectrum: StableSpectrum,
    pub resonance_log: Vec<Resonance>,
    /// `(J, i, u)` with `0 < |u| < NEAR_RESONANCE_TOL`.
    pub near_resonances: Vec<(MultiIndex, usize, f64)>,
}

impl FormalSolution {
    pub fn order(&self) -> u32 {
        self.series.order()
    }

    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        self.series.evaluate(t)
    }
}

fn validate_field(v: &PowerSeries, spectrum: &StableSpectrum) -> Result<()> {
    let m = spectrum.dim();
    for d in [v.in_dim(), v.out_dim()] {
        if d != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: d,
            });
        }
    }
    if !v.is_centered() {
        return Err(Error::NotCentered);
    }
    let a = v.linear_part();
    let mut dev = 0.0f64;
    for (i, row) in a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let target = if i == j { spectrum.rates()[i] } else { 0.0 };
            dev = dev.max((x - target).abs());
        }
    }
    if dev > LINEAR_PART_TOL {
        return Err(Error::NotDiagonalLinearPart { deviation: dev });
    }
    Ok(())
}

/// Builds `x(t;c)` through `|J| ≤ order`.
pub fn construct_formal_solution(
    v: &PowerSeries,
    spectrum: &StableSpectrum,
    c: &[f64],
    order: u32,
) -> Result<FormalSolution> {
    validate_field(v, spectrum)?;
    let m = spectrum.dim();
    if c.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: c.len(),
        });
    }
    let rates = spectrum.rates().to_vec();
    let nonlinear = v.nonlinear_part();
    let mut series = LambdaSeries::new(rates.clone(), m, order)?;
    if order >= 1 {
        for (i, &ci) in c.iter().enumerate() {
            let mut e = vec![0.0; m];
            e[i] = ci;
            series.insert(MultiIndex::unit(m, i), Poly::constant(&e))?;
        }
    }
    let mut resonance_log = Vec::new();
    let mut near_resonances = Vec::new();
    for level in 2..=order {
        // lower levels only: the level-`level` terms of the truncated series are still zero
        let mut partial = LambdaSeries::new(rates.clone(), m, level)?;
        for (j, p) in series.terms() {
            partial.insert(j.clone(), p.clone())?;
        }
        let q = compose_with_analytic(&nonlinear, &partial)?;
        for j in MultiIndex::all_of_degree(m, level) {
            let lj = j.rate(&rates);
            let u: Vec<f64> = rates
                .iter()
                .enumerate()
                .map(|(i, &li)| {
                    let ui = li - lj;
                    if ui.abs() <= RESONANCE_TOL {
                        resonance_log.push(Resonance {
                            index: j.clone(),
                            component: i,
                        });
                        0.0
                    } else {
                        if ui.abs() < NEAR_RESONANCE_TOL {
                            near_resonances.push((j.clone(), i, ui));
                        }
                        ui
                    }
                })
                .collect();
            if let Some(qj) = q.term(&j) {
                let pj = resolvent_diag(&u, qj);
                if !pj.is_zero() {
                    series.insert(j, pj)?;
                }
            }
        }
    }
    Ok(FormalSolution {
        series,
        params: c.to_vec(),
        field: v.clone(),
        spectrum: spectrum.clone(),
        resonance_log,
        near_resonances,
    })
}

/// Largest polynomial coefficient of `x' - V∘x` over `|J| ≤ order`.
pub fn check_formal_residual(sol: &FormalSolution) -> f64 {
    residual_series(sol)
        .map(|r| r.max_abs_coeff())
        .unwrap_or(f64::INFINITY)
}

/// `x'(t) - (V∘x)(t)` as a λ-series.
pub fn residual_series(sol: &FormalSolution) -> Result<LambdaSeries> {
    let lhs = sol.series.formal_derivative();
    let rhs = compose_with_analytic(&sol.field, &sol.series)?;
    lhs.sub(&rhs)
}

/// Degree-`k` Taylor polynomial of the solution of `y' = V(y)`, `y(0) = x0`,
/// by coefficient matching `(k+1) y_{k+1} = [t^k] V(y(t))`. `V` is taken as
/// an exact polynomial.
pub fn taylor_solution(v: &PowerSeries, x0: &[f64], k: u32) -> Result<Poly> {
    let m = v.in_dim();
    if v.out_dim() != m || x0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: if v.out_dim() != m {
                v.out_dim()
            } else {
                x0.len()
            },
        });
    }
    let w = v.recenter(x0);
    let order = w.order().max(k);
    let w = w.with_order(order);
    let mut z = PowerSeries::new(1, m, k);
    for deg in 0..k {
        let composed = w.compose(&z)?;
        let ck = composed
            .coeff(&MultiIndex::new(vec![deg]))
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; m]);
        let next: Vec<f64> = ck.iter().map(|x| x / f64::from(deg + 1)).collect();
        z.insert(MultiIndex::new(vec![deg + 1]), next)?;
    }
    let mut powers = vec![x0.to_vec()];
    for deg in 1..=k {
        powers.push(
            z.coeff(&MultiIndex::new(vec![deg]))
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; m]),
        );
    }
    Poly::from_power_vectors(m, &powers)
}

/// Start time `2 deg(Q)/u` from which `P* ≤ Q*` for `P = (d/dt - u)^{-1} Q`.
pub fn check_domination(u: f64, q: &UniPoly) -> Result<f64> {
    if !(u >= 2.0) {
        return Err(Error::PreconditionU(u));
    }
    Ok(2.0 * q.degree() as f64 / u)
}

/// Values `a_J` of the majorant recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantTable {
    pub m_const: f64,
    pub n: usize,
    pub dim: usize,
    pub values: BTreeMap<MultiIndex, f64>,
}

impl MajorantTable {
    pub fn get(&self, j: &MultiIndex) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }
}

/// `a_0 = 0`, `a_J = 1` for `|J| = 1`, and for `|J| ≥ 2`
/// `a_J = Σ_{I ∈ ℤ^n, |I| ≥ 2} M^{|I|} Σ_{J_{i,j}} Π a_{J_{i,j}}`, summing over
/// ordered decompositions of `J` into the `|I|` slots `(i, j)`.
pub fn majorant_table(m_const: f64, n: usize, up_to: u32, dim: usize) -> MajorantTable {
    let mut values: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    values.insert(MultiIndex::zeros(dim), 0.0);
    if up_to >= 1 {
        for i in 0..dim {
            values.insert(MultiIndex::unit(dim, i), 1.0);
        }
    }
    for level in 2..=up_to {
        for j in MultiIndex::all_of_degree(dim, level) {
            let mut a = 0.0;
            for k in 2..=level {
                // every I ∈ ℤ^n with |I| = k contributes the same slot sum
                for _i in MultiIndex::all_of_degree(n, k) {
                    a += crate::math::powi(m_const, k) * ordered_decompositions(&j, k, &values);
                }
            }
            values.insert(j, a);
        }
    }
    MajorantTable {
        m_const,
        n,
        dim,
        values,
    }
}

/// `Σ Π a_{J_s}` over ordered `slots`-tuples of nonzero multi-indices
/// summing to `target`.
fn ordered_decompositions(
    target: &MultiIndex,
    slots: u32,
    values: &BTreeMap<MultiIndex, f64>,
) -> f64 {
    if slots == 0 {
        return if target.is_zero() { 1.0 } else { 0.0 };
    }
    if target.degree() < slots {
        return 0.0;
    }
    let mut total = 0.0;
    for (part, &a) in values.iter() {
        if part.is_zero() || a == 0.0 {
            continue;
        }
        if let Some(rest) = target.checked_minus(part) {
            if rest.degree() + 1 >= slots {
                total += a * ordered_decompositions(&rest, slots - 1, values);
            }
        }
    }
    total
}

/// `max_{J ≠ 0} a_J^{1/|J|}`.
pub fn fit_growth_rate(table: &MajorantTable) -> f64 {
    table
        .values
        .iter()
        .filter(|(j, _)| !j.is_zero())
        .map(|(j, &a)| crate::math::powf(a, 1.0 / f64::from(j.degree())))
        .fold(0.0, f64::max)
}

/// Comparison of `x(t;c+C)` against `x(t;c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    /// `λ_C = max{λ_i : C_i ≠ 0}`.
    pub lambda_c: f64,
    /// Smallest `i` attaining `λ_C`.
    pub leading_component: usize,
    /// Dominant term of component `leading_component` of the difference.
    pub leading: Option<DominantTerm>,
    /// Largest coefficient mismatch over `J` with `J_i = 0` whenever `C_i ≠ 0`.
    pub unchanged_mismatch: f64,
    /// Whether the difference minus `Σ C_i e^{λ_i t} e_i` only has rates
    /// below `λ_C + λ0`.
    pub remainder_below_rate: bool,
    pub difference: LambdaSeries,
}

pub fn compare_perturbed(
    v: &PowerSeries,
    spectrum: &StableSpectrum,
    c: &[f64],
    perturbation: &[f64],
    order: u32,
    lambda0: f64,
) -> Result<PerturbationReport> {
    let m = spectrum.dim();
    if perturbation.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: perturbation.len(),
        });
    }
    if perturbation.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroPerturbation);
    }
    if !(lambda0 > spectrum.slowest() && lambda0 < 0.0) {
        return Err(Error::BadComparisonRate(lambda0));
    }
    let base = construct_formal_solution(v, spectrum, c, order)?;
    let shifted_c: Vec<f64> = c.iter().zip(perturbation).map(|(a, b)| a + b).collect();
    let shifted = construct_formal_solution(v, spectrum, &shifted_c, order)?;
    let rates = spectrum.rates();
    let (leading_component, lambda_c) = rates
        .iter()
        .enumerate()
        .filter(|(i, _)| perturbation[*i] != 0.0)
        .map(|(i, &l)| (i, l))
        .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    let difference = shifted.series.sub(&base.series)?;

    let mut unchanged_mismatch = 0.0f64;
    for j in MultiIndex::all_up_to(m, order) {
        let untouched = j
            .exponents()
            .iter()
            .zip(perturbation)
            .all(|(&e, &ci)| ci == 0.0 || e == 0);
        if untouched {
            let d = difference.term(&j).map(Poly::max_abs_coeff).unwrap_or(0.0);
            unchanged_mismatch = unchanged_mismatch.max(d);
        }
    }

    let cutoff = lambda_c + lambda0;
    let remainder_below_rate = difference.terms().iter().all(|(j, p)| {
        let mut rest = p.clone();
        if j.degree() == 1 {
            let i = j.exponents().iter().position(|&e| e == 1).unwrap_or(0);
            let mut e = vec![0.0; m];
            e[i] = perturbation[i];
            rest = rest.sub(&Poly::constant(&e));
        }
        rest.max_abs_coeff() <= 1e-12 * (1.0 + p.max_abs_coeff()) || j.rate(rates) < cutoff
    });

    let mut unit = vec![0.0; m];
    unit[leading_component] = 1.0;
    let leading = difference.dot(&unit).dominant_term();
    Ok(PerturbationReport {
        lambda_c,
        leading_component,
        leading,
        unchanged_mismatch,
        remainder_below_rate,
        difference,
    })
}

/// Growth of `deg(P_J)` against `p|J|`, with `p = max_{|J| ≤ 2} deg(P_J)/|J|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeReport {
    pub p: f64,
    /// Multi-indices violating the bound that no logged resonance explains.
    pub violations: Vec<MultiIndex>,
    /// Multi-indices skipped because they dominate a resonant index.
    pub excluded: usize,
}

pub fn degree_report(sol: &FormalSolution) -> DegreeReport {
    let terms = sol.series.terms();
    let p = terms
        .iter()
        .filter(|(j, _)| (1..=2).contains(&j.degree()))
        .map(|(j, q)| q.degree() as f64 / f64::from(j.degree()))
        .fold(0.0, f64::max);
    let mut violations = Vec::new();
    let mut excluded = 0;
    for (j, q) in terms {
        let resonant = sol
            .resonance_log
            .iter()
            .any(|r| j.checked_minus(&r.index).is_some());
        if resonant {
            excluded += 1;
            continue;
        }
        if q.degree() as f64 > p * f64::from(j.degree()) + 1e-9 {
            violations.push(j.clone());
        }
    }
    DegreeReport {
        p,
        violations,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    fn bernoulli() -> PowerSeries {
        PowerSeries::scalar(1, 2, [(vec![1], -1.0), (vec![2], 1.0)]).unwrap()
    }

    #[test]
    fn resolvent_examples() {
        // u = 2, Q = t -> -t/2 - 1/4
        let q = UniPoly::new(vec![0.0, 1.0]);
        let p = resolvent_poly(2.0, &q);
        assert_eq!(p, UniPoly::new(vec![-0.25, -0.5]));
        assert_eq!(apply_shifted_derivative(2.0, &p), q);
        assert_eq!(
            resolvent_poly(0.0, &UniPoly::constant(1.0)),
            UniPoly::new(vec![0.0, 1.0])
        );
        assert_eq!(
            resolvent_poly(1.0, &UniPoly::constant(1.0)),
            UniPoly::constant(-1.0)
        );
    }

    #[test]
    fn resolvent_matches_neumann_sum() {
        let q = UniPoly::new(vec![1.0, -2.0, 0.5, 3.0]);
        let u = -3.0;
        let mut neumann = UniPoly::zero();
        let mut d = q.clone();
        let mut w = -1.0 / u;
        while !d.is_zero() {
            neumann = neumann.add(&d.scale(w));
            d = d.derivative();
            w /= u;
        }
        let p = resolvent_poly(u, &q);
        assert!(p.sub(&neumann).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn spectrum_validation() {
        assert!(StableSpectrum::new(vec![-1.0, -2.0]).is_ok());
        assert!(StableSpectrum::new(vec![-2.0, -1.0]).is_err());
        assert!(StableSpectrum::new(vec![-1.0, 0.0]).is_err());
    }

    #[test]
    fn linear_field_gives_pure_exponential() {
        let v = PowerSeries::scalar(1, 1, [(vec![1], -0.5)]).unwrap();
        let s = StableSpectrum::new(vec![-0.5]).unwrap();
        let sol = construct_formal_solution(&v, &s, &[2.0], 6).unwrap();
        assert_eq!(sol.series.terms().len(), 1);
        assert_eq!(check_formal_residual(&sol), 0.0);
    }

    #[test]
    fn bernoulli_coefficients_follow_closed_form() {
        // coefficient of e^{kλt} is c^k / λ^{k-1}
        for &(lam, c) in &[(-1.0, 1.0), (-0.5, 0.3), (-2.0, -1.5)] {
            let v = PowerSeries::scalar(1, 2, [(vec![1], lam), (vec![2], 1.0)]).unwrap();
            let s = StableSpectrum::new(vec![lam]).unwrap();
            let sol = construct_formal_solution(&v, &s, &[c], 6).unwrap();
            for k in 1..=6u32 {
                let expect = math::powi(c, k) / math::powi(lam, k - 1);
                let got = sol
                    .series
                    .term(&MultiIndex::new(vec![k]))
                    .map(|p| p.component(0).coeff(0))
                    .unwrap_or(0.0);
                assert!(
                    (got - expect).abs() <= 1e-13 * expect.abs().max(1.0),
                    "k={k}"
                );
            }
            assert!(check_formal_residual(&sol) <= 1e-12);
        }
    }

    #[test]
    fn decoupled_linear_field() {
        let v = PowerSeries::linear(&[vec![-1.0, 0.0], vec![0.0, -2.0]], 2, 1).unwrap();
        let s = StableSpectrum::new(vec![-1.0, -2.0]).unwrap();
        let sol = construct_formal_solution(&v, &s, &[1.0, 3.0], 5).unwrap();
        let t = 0.7;
        let x = sol.evaluate(t);
        assert!((x[0] - math::exp(-t)).abs() < 1e-15);
        assert!((x[1] - 3.0 * math::exp(-2.0 * t)).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        let s = StableSpectrum::new(vec![-1.0, -2.0]).unwrap();
        let skew = PowerSeries::linear(&[vec![-1.0, 0.5], vec![0.0, -2.0]], 2, 1).unwrap();
        assert!(matches!(
            construct_formal_solution(&skew, &s, &[1.0, 1.0], 4),
            Err(Error::NotDiagonalLinearPart { .. })
        ));
        let mut shifted = PowerSeries::linear(&[vec![-1.0, 0.0], vec![0.0, -2.0]], 2, 1).unwrap();
        shifted
            .insert(MultiIndex::zeros(2), vec![0.1, 0.0])
            .unwrap();
        assert!(matches!(
            construct_formal_solution(&shifted, &s, &[1.0, 1.0], 4),
            Err(Error::NotCentered)
        ));
    }

    #[test]
    fn resonance_is_logged_and_integrated() {
        // λ = (-1, -2), y' = -2y + x^2: λ·(2,0) = λ_2
        let v = PowerSeries::from_terms(
            2,
            2,
            2,
            [
                (vec![1, 0], vec![-1.0, 0.0]),
                (vec![0, 1], vec![0.0, -2.0]),
                (vec![2, 0], vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        let s = StableSpectrum::new(vec![-1.0, -2.0]).unwrap();
        let sol = construct_formal_solution(&v, &s, &[1.5, 0.0], 6).unwrap();
        assert!(sol.resonance_log.contains(&Resonance {
            index: MultiIndex::new(vec![2, 0]),
            component: 1
        }));
        let p = sol.series.term(&MultiIndex::new(vec![2, 0])).unwrap();
        assert_eq!(p.component(1), &UniPoly::new(vec![0.0, 2.25]));
        assert!(check_formal_residual(&sol) <= 1e-12);
    }

    #[test]
    fn residual_detects_corruption() {
        let s = StableSpectrum::new(vec![-1.0]).unwrap();
        let mut sol = construct_formal_solution(&bernoulli(), &s, &[1.0], 6).unwrap();
        assert!(check_formal_residual(&sol) <= 1e-12);
        sol.series
            .insert(MultiIndex::new(vec![2]), Poly::constant(&[1e-3]))
            .unwrap();
        assert!(check_formal_residual(&sol) >= 1e-4);
    }

    #[test]
    fn taylor_examples() {
        let v = PowerSeries::scalar(1, 1, [(vec![1], -1.0)]).unwrap();
        let p = taylor_solution(&v, &[1.0], 3).unwrap();
        let expect = [1.0, -1.0, 0.5, -1.0 / 6.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((p.component(0).coeff(k) - e).abs() < 1e-15);
        }
        // y' = y^2, y(0) = 1: 1/(1-t)
        let v = PowerSeries::scalar(1, 2, [(vec![2], 1.0)]).unwrap();
        let p = taylor_solution(&v, &[1.0], 3).unwrap();
        assert_eq!(p.component(0), &UniPoly::new(vec![1.0, 1.0, 1.0, 1.0]));
        let zero = PowerSeries::new(2, 2, 2);
        let p = taylor_solution(&zero, &[0.3, -1.0], 4).unwrap();
        assert_eq!(p, Poly::constant(&[0.3, -1.0]));
    }

    #[test]
    fn domination_examples() {
        let q = UniPoly::new(vec![0.0, 1.0]);
        assert_eq!(check_domination(2.0, &q).unwrap(), 1.0);
        let p = resolvent_poly(2.0, &q);
        assert_eq!(p.star_eval(1.0).unwrap(), 0.75);
        assert_eq!(q.star_eval(1.0).unwrap(), 1.0);
        assert_eq!(
            check_domination(3.0, &UniPoly::constant(-2.0)).unwrap(),
            0.0
        );
        let q5 = UniPoly::monomial(1.0, 5);
        let t0 = check_domination(100.0, &q5).unwrap();
        assert!((t0 - 0.1).abs() < 1e-15);
        let p5 = resolvent_poly(100.0, &q5);
        for k in 0..=99 {
            let t = 0.1 + 0.1 * k as f64;
            assert!(p5.star_eval(t).unwrap() <= q5.star_eval(t).unwrap());
        }
        assert!(matches!(
            check_domination(1.5, &q),
            Err(Error::PreconditionU(_))
        ));
    }

    #[test]
    fn majorant_table_examples() {
        let t = majorant_table(1.0, 1, 6, 1);
        let a = |k: u32| t.get(&MultiIndex::new(vec![k]));
        assert_eq!((a(0), a(1), a(2), a(3)), (0.0, 1.0, 1.0, 3.0));
        let t2 = majorant_table(3.7, 2, 3, 2);
        assert_eq!(t2.get(&MultiIndex::new(vec![0, 1])), 1.0);
        assert_eq!(t2.get(&MultiIndex::new(vec![0, 0])), 0.0);
        let r = fit_growth_rate(&t);
        assert!(r >= math::powf(3.0, 1.0 / 3.0) && r.is_finite());
        assert_eq!(fit_growth_rate(&majorant_table(1.0, 1, 1, 2)), 1.0);
    }

    #[test]
    fn perturbation_examples() {
        let s = StableSpectrum::new(vec![-1.0]).unwrap();
        let r = compare_perturbed(&bernoulli(), &s, &[1.0], &[0.5], 8, -0.5).unwrap();
        let lead = r.leading.unwrap();
        assert!((lead.coefficient - 0.5).abs() < 1e-14);
        assert_eq!((lead.power, lead.rate), (0, -1.0));
        assert!(r.remainder_below_rate);

        let lin = PowerSeries::linear(&[vec![-1.0, 0.0], vec![0.0, -2.0]], 2, 1).unwrap();
        let s2 = StableSpectrum::new(vec![-1.0, -2.0]).unwrap();
        let r = compare_perturbed(&lin, &s2, &[1.0, 1.0], &[0.0, 1.0], 4, -0.5).unwrap();
        assert_eq!(r.difference.terms().len(), 1);
        assert_eq!(r.unchanged_mismatch, 0.0);
        assert_eq!(r.leading.unwrap().rate, -2.0);
        assert!(matches!(
            compare_perturbed(&lin, &s2, &[1.0, 1.0], &[0.0, 0.0], 4, -0.5),
            Err(Error::ZeroPerturbation)
        ));
        assert!(compare_perturbed(&lin, &s2, &[1.0, 1.0], &[1.0, 0.0], 4, -1.5).is_err());
    }
}
