//! Tracing trajectories of piecewise analytic fields through a cell cover.
//!
//! The active cell's field is integrated with the adaptive Dormand–Prince
//! scheme. When the largest facet signed distance of the active cell turns
//! positive the crossing is located by bisection and the next cell is chosen
//! from the Taylor expansion of each candidate's analytic continuation.
//! Near a stable equilibrium the numeric trace hands over to the formal
//! λ-series solution, whose facet distances decide eventual membership.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formal_solver::{
    construct_formal_solution, taylor_solution, FormalSolution, StableSpectrum,
};
use crate::geometry::{locate_cells, CellCover, DEFAULT_BOUNDARY_TOL};
use crate::lambdaseries::DominantTerm;
use crate::math;
use crate::ode::{dp45_step, StepControl, Stepper};
use crate::poly::UniPoly;
use crate::powerseries::PowerSeries;

/// Facets with `|d_s| ≤ ACTIVE_FACET_TOL` count as touched.
pub const ACTIVE_FACET_TOL: f64 = 1e-8;
/// Taylor coefficients at or below this magnitude count as zero.
pub const TAYLOR_ZERO_TOL: f64 = 1e-10;
pub const DEFAULT_K_MAX: u32 = 8;
pub const DEFAULT_CAPTURE_RADIUS: f64 = 1e-3;
pub const DEFAULT_CHATTER_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub point: Vec<f64>,
    pub spectrum: StableSpectrum,
}

/// One analytic field per cell of a cover.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseField {
    cover: CellCover,
    fields: Vec<PowerSeries>,
    equilibrium: Option<Equilibrium>,
}

impl PiecewiseField {
    pub fn new(
        cover: CellCover,
        fields: Vec<PowerSeries>,
        equilibrium: Option<Equilibrium>,
    ) -> Result<Self> {
        let m = cover.dim();
        if fields.len() != cover.cells.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "{} fields for {} cells",
                fields.len(),
                cover.cells.len()
            )));
        }
        for f in &fields {
            for d in [f.in_dim(), f.out_dim()] {
                if d != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: d,
                    });
                }
            }
        }
        if let Some(eq) = &equilibrium {
            if eq.point.len() != m || eq.spectrum.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: eq.point.len(),
                });
            }
        }
        Ok(PiecewiseField {
            cover,
            fields,
            equilibrium,
        })
    }

    pub fn cover(&self) -> &CellCover {
        &self.cover
    }

    pub fn fields(&self) -> &[PowerSeries] {
        &self.fields
    }

    pub fn equilibrium(&self) -> Option<&Equilibrium> {
        self.equilibrium.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.cover.dim()
    }

    pub fn num_cells(&self) -> usize {
        self.fields.len()
    }

    pub fn eval(&self, cell: usize, x: &[f64]) -> Vec<f64> {
        self.fields[cell].evaluate(x)
    }

    /// The field of `cell` in coordinates `w = x - x_eq`.
    pub fn recentered_field(&self, cell: usize) -> Option<PowerSeries> {
        self.equilibrium
            .as_ref()
            .map(|eq| self.fields[cell].recenter(&eq.point))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetAgreement {
    pub checked: usize,
    pub max_mismatch: f64,
}

impl FacetAgreement {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_mismatch <= tol
    }
}

/// Samples points on every facet hyperplane, keeps those lying in two or
/// more cells, and compares the cell fields there.
pub fn check_facet_agreement(
    field: &PiecewiseField,
    per_facet: usize,
    seed: u64,
) -> FacetAgreement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &field.cover.bounds;
    let mut checked = 0;
    let mut max_mismatch = 0.0f64;
    for cell in &field.cover.cells {
        for h in cell.halfspaces() {
            for _ in 0..per_facet {
                let x: Vec<f64> =
                    b.lo.iter()
                        .zip(&b.hi)
                        .map(|(&lo, &hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                        .collect();
                let on = h.project(&x);
                if !b.contains(&on) {
                    continue;
                }
                let cells = locate_cells(&on, &field.cover, DEFAULT_BOUNDARY_TOL);
                if cells.len() < 2 {
                    continue;
                }
                checked += 1;
                let v0 = field.eval(cells[0], &on);
                for &c in &cells[1..] {
                    let v = field.eval(c, &on);
                    let d = v0
                        .iter()
                        .zip(&v)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    max_mismatch = max_mismatch.max(d);
                }
            }
        }
    }
    FacetAgreement {
        checked,
        max_mismatch,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub step: StepControl,
    /// Bisection stops once the crossing bracket is shorter than this.
    pub event_time_tol: f64,
    pub boundary_tol: f64,
    pub capture_radius: f64,
    pub chatter_cap: usize,
    pub k_max: u32,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            step: StepControl::default(),
            event_time_tol: 1e-12,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
            chatter_cap: DEFAULT_CHATTER_CAP,
            k_max: DEFAULT_K_MAX,
        }
    }
}

impl TraceOptions {
    /// Every tolerance multiplied by `s`.
    pub fn scaled_tolerances(mut self, s: f64) -> Self {
        self.step.rtol *= s;
        self.step.atol *= s;
        self.event_time_tol *= s;
        self.boundary_tol *= s;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switch {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellInterval {
    pub start: f64,
    pub end: f64,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Active cell of each sample.
    pub cells: Vec<usize>,
    pub switches: Vec<Switch>,
    pub intervals: Vec<CellInterval>,
    /// Times at which several cells were admissible and the lowest index won.
    pub ties: Vec<f64>,
    /// Whether the trace stopped inside the equilibrium capture radius.
    pub captured: bool,
}

impl FlowTrace {
    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_cell(&self) -> Option<usize> {
        self.cells.last().copied()
    }

    pub fn switch_count(&self) -> usize {
        self.switches.len()
    }

    fn push(&mut self, t: f64, x: &[f64], cell: usize) {
        self.times.push(t);
        self.states.push(x.to_vec());
        self.cells.push(cell);
    }

    fn close(&mut self, t: f64) {
        if let Some(last) = self.intervals.last_mut() {
            last.end = t;
        }
    }
}

/// Result of expanding facet distances along an in-cell continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitOrder {
    /// Some facet distance is `a t^k + o(t^k)` with `a > 0`.
    Exits { k: u32, a: f64 },
    /// No facet distance turns positive up to `t^k`.
    InsideToOrder(u32),
}

/// Taylor coefficients `s_1, …, s_k` of every touched facet's signed
/// distance along `cell`'s continuation from `x`.
fn facet_taylor(
    field: &PiecewiseField,
    cell: usize,
    x: &[f64],
    k_max: u32,
) -> Result<Vec<UniPoly>> {
    let touched: Vec<_> = field.cover.cells[cell]
        .halfspaces()
        .iter()
        .filter(|h| h.signed_distance(x).abs() <= ACTIVE_FACET_TOL)
        .collect();
    if touched.is_empty() {
        return Ok(Vec::new());
    }
    let y = taylor_solution(&field.fields[cell], x, k_max)?;
    Ok(touched
        .iter()
        .map(|h| {
            // d_s(y(t)) - d_s(x) = -a·(y(t) - x)
            let mut p = y.dot(&h.outward_normal());
            let mut c = p.coeffs().to_vec();
            if !c.is_empty() {
                c[0] = 0.0;
            }
            p = UniPoly::new(c);
            p
        })
        .collect())
}

/// Smallest order `k ≤ k_max` at which some touched facet distance has a
/// positive leading coefficient.
pub fn local_exit_order(
    field: &PiecewiseField,
    cell: usize,
    x: &[f64],
    k_max: u32,
) -> Result<ExitOrder> {
    let mut best: Option<(u32, f64)> = None;
    for s in facet_taylor(field, cell, x, k_max)? {
        let lead = (1..=k_max as usize).find(|&k| s.coeff(k).abs() > TAYLOR_ZERO_TOL);
        if let Some(k) = lead {
            let a = s.coeff(k);
            if a > 0.0 && best.is_none_or(|(bk, _)| (k as u32) < bk) {
                best = Some((k as u32, a));
            }
        }
    }
    Ok(match best {
        Some((k, a)) => ExitOrder::Exits { k, a },
        None => ExitOrder::InsideToOrder(k_max),
    })
}

/// Cells containing `x` whose continuation from `x` stays inside to order
/// `k_max`, in increasing index order.
pub fn admissible_cells(
    field: &PiecewiseField,
    x: &[f64],
    k_max: u32,
    tol: f64,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for c in locate_cells(x, &field.cover, tol) {
        if let ExitOrder::InsideToOrder(_) = local_exit_order(field, c, x, k_max)? {
            out.push(c);
        }
    }
    Ok(out)
}

/// The cell a trajectory through boundary point `x` enters when leaving
/// `current`: the lowest-index admissible cell other than `current`.
pub fn choose_next_cell(field: &PiecewiseField, x: &[f64], current: usize) -> Result<usize> {
    choose_cell(
        field,
        x,
        Some(current),
        DEFAULT_K_MAX,
        DEFAULT_BOUNDARY_TOL,
        0.0,
    )
    .map(|(c, _)| c)
}

/// Returns the chosen cell and whether several were admissible.
fn choose_cell(
    field: &PiecewiseField,
    x: &[f64],
    current: Option<usize>,
    k_max: u32,
    tol: f64,
    t: f64,
) -> Result<(usize, bool)> {
    let candidates: Vec<usize> = locate_cells(x, &field.cover, tol)
        .into_iter()
        .filter(|&c| Some(c) != current)
        .collect();
    if candidates.is_empty() {
        return Err(Error::LeftCover { t });
    }
    let mut admissible = Vec::new();
    for &c in &candidates {
        if let ExitOrder::InsideToOrder(_) = local_exit_order(field, c, x, k_max)? {
            admissible.push(c);
        }
    }
    match admissible.first() {
        Some(&c) => Ok((c, admissible.len() > 1)),
        None => Err(Error::NoAdmissibleCell { t }),
    }
}

/// Integrates `x' = V(x)` from `x0` until `t_end`, the capture radius of the
/// equilibrium, or an error.
pub fn trace_flow(
    field: &PiecewiseField,
    x0: &[f64],
    t_end: f64,
    opts: &TraceOptions,
) -> Result<FlowTrace> {
    let m = field.dim();
    if x0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x0.len(),
        });
    }
    if !field.cover.bounds.contains(x0) {
        return Err(Error::LeftCover { t: 0.0 });
    }
    let captured = |x: &[f64]| {
        field
            .equilibrium
            .as_ref()
            .is_some_and(|eq| math::dist2(x, &eq.point) < opts.capture_radius)
    };
    let (mut cell, tie) = choose_cell(field, x0, None, opts.k_max, opts.boundary_tol, 0.0)?;
    let mut trace = FlowTrace::default();
    if tie {
        trace.ties.push(0.0);
    }
    trace.push(0.0, x0, cell);
    trace.intervals.push(CellInterval {
        start: 0.0,
        end: 0.0,
        cell,
    });
    if captured(x0) {
        trace.captured = true;
        return Ok(trace);
    }
    let mut stepper = Stepper::new(0.0, x0.to_vec(), opts.step);
    while stepper.t < t_end {
        let (t0, y0) = (stepper.t, stepper.y.clone());
        {
            let v = &field.fields[cell];
            let mut rhs = |_: f64, y: &[f64]| Ok(v.evaluate(y));
            stepper.step(&mut rhs, t_end)?;
        }
        let poly = &field.cover.cells[cell];
        if poly.max_signed_distance(&stepper.y) > opts.boundary_tol {
            let v = &field.fields[cell];
            let mut rhs = |_: f64, y: &[f64]| Ok(v.evaluate(y));
            let (mut lo, mut hi) = (0.0, stepper.t - t0);
            let mut y_hi = stepper.y.clone();
            while hi - lo > opts.event_time_tol {
                let mid = 0.5 * (lo + hi);
                let (y_mid, _) = dp45_step(&mut rhs, t0, &y0, mid)?;
                if poly.max_signed_distance(&y_mid) > 0.0 {
                    hi = mid;
                    y_hi = y_mid;
                } else {
                    lo = mid;
                }
            }
            let ts = t0 + hi;
            let (next, tie) =
                match choose_cell(field, &y_hi, Some(cell), opts.k_max, opts.boundary_tol, ts) {
                    Ok(c) => c,
                    Err(e) => {
                        trace.push(ts, &y_hi, cell);
                        trace.close(ts);
                        return Err(e);
                    }
                };
            if tie {
                trace.ties.push(ts);
            }
            trace.switches.push(Switch {
                t: ts,
                from: cell,
                to: next,
            });
            trace.close(ts);
            trace.push(ts, &y_hi, next);
            trace.intervals.push(CellInterval {
                start: ts,
                end: ts,
                cell: next,
            });
            cell = next;
            stepper.t = ts;
            stepper.y = y_hi;
            if trace.switches.len() > opts.chatter_cap {
                return Err(Error::ChatteringGuard {
                    cap: opts.chatter_cap,
                    trace: Box::new(trace),
                });
            }
        } else {
            if !field.cover.bounds.contains(&stepper.y) {
                return Err(Error::LeftCover { t: stepper.t });
            }
            trace.push(stepper.t, &stepper.y, cell);
            trace.close(stepper.t);
        }
        if captured(&stepper.y) {
            trace.captured = true;
            break;
        }
    }
    Ok(trace)
}

/// Eventual cell membership of a solution converging to the equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub enum MembershipVerdict {
    EventuallyInside(usize),
    EventuallyOutside {
        cell: usize,
        facet: usize,
        term: DominantTerm,
    },
    Undecided(String),
}

/// Decides membership of `cell` for `x(t) = x_eq + sol(t)` as `t → ∞` from
/// the dominant terms of the facet distances.
pub fn asymptotic_membership(
    field: &PiecewiseField,
    sol: &FormalSolution,
    cell: usize,
) -> Result<MembershipVerdict> {
    let eq = field.equilibrium.as_ref().ok_or(Error::NoEquilibrium)?;
    let poly = &field.cover.cells[cell];
    if !poly.contains(&eq.point, DEFAULT_BOUNDARY_TOL) {
        return Err(Error::EquilibriumNotInCell { cell });
    }
    let mut undecided = false;
    for (i, h) in poly.halfspaces().iter().enumerate() {
        if h.signed_distance(&eq.point) < -ACTIVE_FACET_TOL {
            continue;
        }
        let along = sol.series.dot(&h.outward_normal());
        match along.dominant_term() {
            Some(term) if term.coefficient > 0.0 => {
                return Ok(MembershipVerdict::EventuallyOutside {
                    cell,
                    facet: i,
                    term,
                });
            }
            Some(_) => {}
            None => {
                if !hyperplane_invariant(&sol.field, h.normal()) {
                    undecided = true;
                }
            }
        }
    }
    Ok(if undecided {
        MembershipVerdict::Undecided("truncation-limited".to_string())
    } else {
        MembershipVerdict::EventuallyInside(cell)
    })
}

/// Whether `{a·w = 0}` is invariant under `w' = V(w)`, i.e. `a·V(Πw) ≡ 0`
/// with `Π` the orthogonal projection onto the hyperplane.
fn hyperplane_invariant(v: &PowerSeries, a: &[f64]) -> bool {
    let m = a.len();
    let proj: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 1.0 } else { 0.0 } - a[i] * a[j])
                .collect()
        })
        .collect();
    let Ok(p) = PowerSeries::linear(&proj, m, v.order().max(1)) else {
        return false;
    };
    match v.compose(&p) {
        Ok(vp) => vp
            .dot_output(a)
            .coeffs()
            .values()
            .all(|b| b[0].abs() <= 1e-12),
        Err(_) => false,
    }
}

/// Fits `c` with `x(t; c) ≈ w` at time `t`: leading-order guess
/// `c_i = w_i e^{-λ_i t}` refined by one Newton step on the order-`order`
/// series.
pub fn fit_parameters(
    v: &PowerSeries,
    spectrum: &StableSpectrum,
    w: &[f64],
    t: f64,
    order: u32,
) -> Result<Vec<f64>> {
    let m = spectrum.dim();
    let rates = spectrum.rates();
    let mut c: Vec<f64> = (0..m).map(|i| w[i] * math::exp(-rates[i] * t)).collect();
    let eval = |c: &[f64]| -> Result<Vec<f64>> {
        Ok(construct_formal_solution(v, spectrum, c, order)?.evaluate(t))
    };
    let base = eval(&c)?;
    let r: Vec<f64> = base.iter().zip(w).map(|(a, b)| a - b).collect();
    let mut jac = vec![vec![0.0; m]; m];
    for j in 0..m {
        let h = 1e-7 * c[j].abs().max(1.0);
        let mut cj = c.clone();
        cj[j] += h;
        let vj = eval(&cj)?;
        for i in 0..m {
            jac[i][j] = (vj[i] - base[i]) / h;
        }
    }
    let neg: Vec<f64> = r.iter().map(|x| -x).collect();
    if let Some(dc) = math::solve_linear(jac, neg) {
        for (ci, d) in c.iter_mut().zip(dc) {
            *ci += d;
        }
    }
    Ok(c)
}

/// Formal solution matching a captured trace in its final cell.
pub fn capture_solution(
    field: &PiecewiseField,
    trace: &FlowTrace,
    order: u32,
) -> Result<(usize, FormalSolution)> {
    let eq = field.equilibrium.as_ref().ok_or(Error::NoEquilibrium)?;
    let cell = trace.final_cell().ok_or(Error::NoEquilibrium)?;
    let v = field.fields[cell].recenter(&eq.point);
    let w: Vec<f64> = trace
        .final_state()
        .iter()
        .zip(&eq.point)
        .map(|(x, e)| x - e)
        .collect();
    let c = fit_parameters(&v, &eq.spectrum, &w, trace.final_time(), order)?;
    let sol = construct_formal_solution(&v, &eq.spectrum, &c, order)?;
    Ok((cell, sol))
}
