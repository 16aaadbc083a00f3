//! Piecewise analytic flows over convex polytope covers.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! machinery:
//!
//! - [`geometry`]: half-spaces, polytopes, projections and closed cell covers.
//! - [`powerseries`]: truncated multivariate power series with vector
//!   coefficients and their composition.
//! - [`lambdaseries`]: formal sums `Σ_J P_J(t) e^{λ·J t}` with polynomial
//!   coefficients, their calculus and asymptotics.
//! - [`formal_solver`]: the resolvent `(d/dt - u)^{-1}`, formal λ-series
//!   solutions of `x' = V(x)` near a stable node and the majorant recursion.
//! - [`ode`]: an adaptive Dormand–Prince 5(4) integrator.
//! - [`flow_tracer`]: cell-switch tracing of piecewise analytic fields and
//!   asymptotic membership verdicts near the equilibrium.
//! - [`yamabe`]: discrete Yamabe flow with Delaunay edge flips.
//!
//! File formats, the property suites and the command line live in the
//! companion `polyflow` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod flow_tracer;
pub mod formal_solver;
pub mod geometry;
pub mod lambdaseries;
pub mod math;
pub mod ode;
pub mod poly;
pub mod powerseries;
pub mod series;
pub mod yamabe;

pub use error::{Error, Result};
pub use series::MultiIndex;
