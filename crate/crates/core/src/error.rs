use alloc::boxed::Box;
use alloc::string::String;

use crate::flow_tracer::FlowTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("inner series has a nonzero constant term")]
    NonzeroConstantTerm,
    #[error("series or field is not centered at the origin (nonzero constant term)")]
    NotCentered,
    #[error("multi-index degree {degree} exceeds truncation order {order}")]
    BeyondOrder { degree: u32, order: u32 },
    #[error("tail bound requested outside its regime: t^q e^(rate t) = {ratio} >= 1")]
    NotInRegime { ratio: f64 },
    #[error("dominating function evaluated at negative time {0}")]
    NegativeTime(f64),
    #[error("projection did not reach tolerance within {iterations} cycles")]
    NonConvergence { iterations: usize },
    #[error("witness is not strictly interior (facet {facet}, signed distance {signed_distance})")]
    BadWitness { facet: usize, signed_distance: f64 },
    #[error("point lies inside the polytope")]
    InteriorPoint,
    #[error("half-space normal is zero")]
    ZeroNormal,
    #[error("rates must be strictly negative and sorted descending")]
    InvalidRates,
    #[error("linear part differs from diag(rates) by {deviation}")]
    NotDiagonalLinearPart { deviation: f64 },
    #[error("domination lemma requires u >= 2, got {0}")]
    PreconditionU(f64),
    #[error("perturbation C is zero")]
    ZeroPerturbation,
    #[error("comparison rate {0} must lie strictly between the largest rate and 0")]
    BadComparisonRate(f64),
    #[error("trajectory left the cover at t = {t}")]
    LeftCover { t: f64 },
    #[error("switch count exceeded the cap of {cap}")]
    ChatteringGuard { cap: usize, trace: Box<FlowTrace> },
    #[error("no admissible continuation cell at t = {t}")]
    NoAdmissibleCell { t: f64 },
    #[error("no equilibrium attached to the field")]
    NoEquilibrium,
    #[error("equilibrium does not lie in cell {cell}")]
    EquilibriumNotInCell { cell: usize },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("degenerate triangle in face {face}")]
    DegenerateTriangle { face: usize },
    #[error("edge flips exceeded the cap of {cap}")]
    FlipLoop { cap: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
