//! Half-spaces, convex polytopes and closed finite cell covers.
//!
//! Signed distances are outward: `d_s(x, H)` is the Euclidean distance to
//! `H` when `x ∉ H`, negative in the interior and zero on `∂H`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;

pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
pub const PROJECTION_MAX_CYCLES: usize = 100_000;
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

/// `{x : a·x ≥ b}` with `|a|₂ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    /// Normalizes `(a, b)` so that the normal has unit length.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = math::norm2(&normal);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNormal);
        }
        Ok(HalfSpace {
            normal: normal.iter().map(|a| a / n).collect(),
            offset: offset / n,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        self.offset - math::dot(&self.normal, x)
    }

    /// `d(x, H)`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.signed_distance(x).max(0.0)
    }

    /// `d(x, ∂H)`.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.signed_distance(x).abs()
    }

    /// Outward unit normal, the gradient of the signed distance.
    pub fn outward_normal(&self) -> Vec<f64> {
        self.normal.iter().map(|a| -a).collect()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let s = self.signed_distance(x);
        if s <= 0.0 {
            x.to_vec()
        } else {
            x.iter()
                .zip(&self.normal)
                .map(|(xi, a)| xi + s * a)
                .collect()
        }
    }
}

/// Outward signed distance from `x` to `h`.
pub fn signed_distance(x: &[f64], h: &HalfSpace) -> f64 {
    h.signed_distance(x)
}

/// Intersection of half-spaces with a validated strictly interior witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    halfspaces: Vec<HalfSpace>,
    witness: Vec<f64>,
}

impl Polytope {
    pub fn new(halfspaces: Vec<HalfSpace>, witness: Vec<f64>) -> Result<Self> {
        for h in &halfspaces {
            if h.dim() != witness.len() {
                return Err(Error::DimensionMismatch {
                    expected: witness.len(),
                    found: h.dim(),
                });
            }
        }
        for (i, h) in halfspaces.iter().enumerate() {
            let s = h.signed_distance(&witness);
            if !(s < 0.0) {
                return Err(Error::BadWitness {
                    facet: i,
                    signed_distance: s,
                });
            }
        }
        Ok(Polytope {
            halfspaces,
            witness,
        })
    }

    /// Axis-aligned box `[lo, hi]` with its center as witness.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let m = lo.len();
        let mut hs = Vec::with_capacity(2 * m);
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            hs.push(HalfSpace::new(e.clone(), lo[i])?);
            e[i] = -1.0;
            hs.push(HalfSpace::new(e, -hi[i])?);
        }
        let c = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        Self::new(hs, c)
    }

    pub fn dim(&self) -> usize {
        self.witness.len()
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    /// `min_i d(p, ∂H_i)` at the witness.
    pub fn interior_margin(&self) -> f64 {
        margin(&self.halfspaces, &self.witness)
    }

    /// Largest facet signed distance; `≤ 0` iff `x` lies in the polytope.
    pub fn max_signed_distance(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.signed_distance(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.signed_distance(x) <= tol)
    }
}

fn margin(hs: &[HalfSpace], p: &[f64]) -> f64 {
    hs.iter()
        .map(|h| -h.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub distance: f64,
    pub closest: Vec<f64>,
    pub cycles: usize,
}

/// Euclidean projection onto `d` by cyclic Dykstra iteration over the
/// half-spaces. Every few cycles the current active set is tried for an
/// exact finish: the equality-constrained projection is accepted when its
/// multipliers are nonnegative and it is feasible, which is the KKT
/// certificate for this convex QP.
pub fn project_onto_polytope(x: &[f64], d: &Polytope, tol: f64) -> Result<Projection> {
    let hs = d.halfspaces();
    if d.contains(x, 0.0) {
        return Ok(Projection {
            distance: 0.0,
            closest: x.to_vec(),
            cycles: 0,
        });
    }
    let m = x.len();
    let mut z = x.to_vec();
    let mut incr = vec![vec![0.0; m]; hs.len()];
    for cycle in 1..=PROJECTION_MAX_CYCLES {
        let prev = z.clone();
        // z alone can stall for several cycles while the increments move
        let mut inc_change = 0.0f64;
        for (h, inc) in hs.iter().zip(incr.iter_mut()) {
            let y: Vec<f64> = z.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let p = h.project(&y);
            for k in 0..m {
                let next = y[k] - p[k];
                inc_change = inc_change.max((next - inc[k]).abs());
                inc[k] = next;
            }
            z = p;
        }
        let change = math::dist2(&z, &prev).max(inc_change);
        if cycle % 8 == 1 || change <= tol {
            let active: Vec<usize> = (0..hs.len())
                .filter(|&i| incr[i].iter().any(|&v| v != 0.0) || hs[i].signed_distance(&z) > -tol)
                .collect();
            if let Some(exact) = polish(x, hs, &active, tol) {
                return Ok(Projection {
                    distance: math::dist2(x, &exact),
                    closest: exact,
                    cycles: cycle,
                });
            }
        }
        if change <= 0.01 * tol && d.max_signed_distance(&z) <= tol {
            return Ok(Projection {
                distance: math::dist2(x, &z),
                closest: z,
                cycles: cycle,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: PROJECTION_MAX_CYCLES,
    })
}

fn polish(x: &[f64], hs: &[HalfSpace], active: &[usize], tol: f64) -> Option<Vec<f64>> {
    if active.is_empty() || active.len() > x.len() {
        return None;
    }
    // z = x + Σ μ_i a_i with a_j·z = b_j on the active set
    let gram: Vec<Vec<f64>> = active
        .iter()
        .map(|&j| {
            active
                .iter()
                .map(|&i| math::dot(hs[j].normal(), hs[i].normal()))
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = active.iter().map(|&j| hs[j].signed_distance(x)).collect();
    let mu = math::solve_linear(gram, rhs)?;
    if mu.iter().any(|&v| v < -1e-14) {
        return None;
    }
    let mut z = x.to_vec();
    for (&i, &w) in active.iter().zip(&mu) {
        for (zk, a) in z.iter_mut().zip(hs[i].normal()) {
            *zk += w * a;
        }
    }
    let scale = 1.0 + math::norm_inf(x);
    if hs
        .iter()
        .all(|h| h.signed_distance(&z) <= 1e-3 * tol * scale)
    {
        Some(z)
    } else {
        None
    }
}

/// `max_i d(x, H_i)`.
pub fn max_facet_distance(x: &[f64], d: &Polytope) -> f64 {
    d.halfspaces()
        .iter()
        .map(|h| h.distance(x))
        .fold(0.0, f64::max)
}

/// The three quantities of the polytope distance sandwich
/// `m(p)/|x-p| · d(x,D) ≤ max_i d(x,H_i) ≤ d(x,D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichBounds {
    pub lower: f64,
    pub mid: f64,
    pub upper: f64,
}

impl SandwichBounds {
    /// Both inequalities with slack `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.lower <= self.mid + tol && self.mid <= self.upper + tol
    }
}

/// Evaluates the sandwich for an interior point `p` and an exterior `x`.
pub fn check_lemma14(p: &[f64], x: &[f64], d: &Polytope) -> Result<SandwichBounds> {
    for (i, h) in d.halfspaces().iter().enumerate() {
        let s = h.signed_distance(p);
        if !(s < 0.0) {
            return Err(Error::BadWitness {
                facet: i,
                signed_distance: s,
            });
        }
    }
    if d.contains(x, 0.0) {
        return Err(Error::InteriorPoint);
    }
    let upper = project_onto_polytope(x, d, DEFAULT_PROJECTION_TOL)?.distance;
    let mid = max_facet_distance(x, d);
    let lower = margin(d.halfspaces(), p) / math::dist2(x, p) * upper;
    Ok(SandwichBounds { lower, mid, upper })
}

/// Axis-aligned box standing in for the open domain `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCover {
    pub cells: Vec<Polytope>,
    pub bounds: Bounds,
}

impl CellCover {
    pub fn new(cells: Vec<Polytope>, bounds: Bounds) -> Result<Self> {
        let m = bounds.lo.len();
        if bounds.hi.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bounds.hi.len(),
            });
        }
        if let Some(c) = cells.iter().find(|c| c.dim() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: c.dim(),
            });
        }
        Ok(CellCover { cells, bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.lo.len()
    }
}

/// Indices of the closed cells containing `x` up to `tol`.
pub fn locate_cells(x: &[f64], cover: &CellCover, tol: f64) -> Vec<usize> {
    cover
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.contains(x, tol))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub samples: usize,
    pub covered: usize,
    pub fraction: f64,
    /// First sampled point that no cell contains.
    pub uncovered_witness: Option<Vec<f64>>,
}

impl CoverReport {
    pub fn passes(&self) -> bool {
        self.samples > 0 && self.covered == self.samples
    }
}

/// Monte Carlo coverage check of `cover.bounds`; zero samples report a
/// fraction of 0 and fail.
pub fn validate_cover(cover: &CellCover, samples: usize, seed: u64) -> CoverReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut covered = 0;
    let mut witness = None;
    let b = &cover.bounds;
    for _ in 0..samples {
        let x: Vec<f64> =
            b.lo.iter()
                .zip(&b.hi)
                .map(|(&lo, &hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                .collect();
        if locate_cells(&x, cover, DEFAULT_BOUNDARY_TOL).is_empty() {
            if witness.is_none() {
                witness = Some(x);
            }
        } else {
            covered += 1;
        }
    }
    CoverReport {
        samples,
        covered,
        fraction: if samples == 0 {
            0.0
        } else {
            covered as f64 / samples as f64
        },
        uncovered_witness: witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;

    fn unit_square() -> Polytope {
        Polytope::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn signed_distance_examples() {
        let h = HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap();
        // (2,0) is inside {x1 ≥ 0} at depth 2
        assert_eq!(signed_distance(&[2.0, 0.0], &h), -2.0);
        assert_eq!(signed_distance(&[-1.0, 3.0], &h), 1.0);
        // unnormalized normal (1,1) with offset √2 is {(x1+x2)/√2 ≥ 1}
        let h = HalfSpace::new(vec![1.0, 1.0], SQRT_2).unwrap();
        assert!((math::norm2(h.normal()) - 1.0).abs() < 1e-12);
        assert!((signed_distance(&[0.0, 0.0], &h) - 1.0).abs() < 1e-15);
        assert!(HalfSpace::new(vec![0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let d = unit_square();
        let p = project_onto_polytope(&[2.0, 2.0], &d, 1e-10).unwrap();
        assert!((p.distance - SQRT_2).abs() < 1e-10);
        assert!(math::dist2(&p.closest, &[1.0, 1.0]) < 1e-10);
        let p = project_onto_polytope(&[0.5, 0.5], &d, 1e-10).unwrap();
        assert_eq!(p.distance, 0.0);
        assert_eq!(p.closest, vec![0.5, 0.5]);
        let p = project_onto_polytope(&[2.0, 0.5], &d, 1e-10).unwrap();
        assert!((p.distance - 1.0).abs() < 1e-10);
        assert!(math::dist2(&p.closest, &[1.0, 0.5]) < 1e-10);
    }

    #[test]
    fn projection_onto_acute_wedge() {
        // narrow wedge forces several Dykstra cycles before the active set settles
        let hs = vec![
            HalfSpace::new(vec![0.05, 1.0], 0.0).unwrap(),
            HalfSpace::new(vec![0.05, -1.0], 0.0).unwrap(),
        ];
        let d = Polytope::new(hs, vec![1.0, 0.0]).unwrap();
        let p = project_onto_polytope(&[-1.0, 0.3], &d, 1e-10).unwrap();
        assert!(math::dist2(&p.closest, &[0.0, 0.0]) < 1e-10);
        assert!((p.distance - math::norm2(&[1.0, 0.3])).abs() < 1e-10);
    }

    #[test]
    fn max_facet_distance_examples() {
        let d = unit_square();
        assert_eq!(max_facet_distance(&[2.0, 2.0], &d), 1.0);
        assert_eq!(max_facet_distance(&[0.5, 0.5], &d), 0.0);
        assert_eq!(max_facet_distance(&[2.0, 0.5], &d), 1.0);
    }

    #[test]
    fn sandwich_examples() {
        let d = unit_square();
        let b = check_lemma14(&[0.5, 0.5], &[2.0, 0.5], &d).unwrap();
        assert!((b.lower - 1.0 / 3.0).abs() < 1e-10);
        assert_eq!(b.mid, 1.0);
        assert!((b.upper - 1.0).abs() < 1e-10);
        // brute force: margin 0.5, |x-p| = 1.5√2, d(x,D) = √2
        let b = check_lemma14(&[0.5, 0.5], &[2.0, 2.0], &d).unwrap();
        let oracle = 0.5 / (1.5 * SQRT_2) * SQRT_2;
        assert!((b.lower - oracle).abs() < 1e-10);
        assert_eq!(b.mid, 1.0);
        assert!((b.upper - SQRT_2).abs() < 1e-10);
        assert!(b.holds(0.0));
        // collinear half-plane case: mid = upper = 1, lower = 1/2 · 1
        let hp = Polytope::new(
            vec![HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap()],
            vec![1.0, 0.0],
        )
        .unwrap();
        let b = check_lemma14(&[1.0, 0.0], &[-1.0, 0.0], &hp).unwrap();
        assert!((b.lower - 0.5).abs() < 1e-12 && b.mid == 1.0 && (b.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_errors() {
        let d = unit_square();
        assert!(matches!(
            check_lemma14(&[0.0, 0.5], &[2.0, 0.5], &d),
            Err(Error::BadWitness { .. })
        ));
        assert!(matches!(
            check_lemma14(&[0.5, 0.5], &[0.2, 0.5], &d),
            Err(Error::InteriorPoint)
        ));
    }

    #[test]
    fn witness_is_validated() {
        let hs = vec![HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap()];
        assert!(Polytope::new(hs.clone(), vec![0.0, 1.0]).is_err());
        assert!(Polytope::new(hs, vec![0.1, 1.0]).is_ok());
    }

    fn split_cover() -> CellCover {
        let left = Polytope::new(
            vec![
                HalfSpace::new(vec![-1.0, 0.0], 0.0).unwrap(),
                HalfSpace::new(vec![1.0, 0.0], -1.0).unwrap(),
                HalfSpace::new(vec![0.0, 1.0], -1.0).unwrap(),
                HalfSpace::new(vec![0.0, -1.0], -1.0).unwrap(),
            ],
            vec![-0.5, 0.0],
        )
        .unwrap();
        let right = Polytope::from_box(&[0.0, -1.0], &[1.0, 1.0]).unwrap();
        CellCover::new(
            vec![left, right],
            Bounds {
                lo: vec![-1.0, -1.0],
                hi: vec![1.0, 1.0],
            },
        )
        .unwrap()
    }

    #[test]
    fn locate_examples() {
        let cover = split_cover();
        assert_eq!(locate_cells(&[0.0, 0.3], &cover, 1e-9), vec![0, 1]);
        assert_eq!(locate_cells(&[-0.5, 0.0], &cover, 1e-9), vec![0]);
        assert!(locate_cells(&[3.0, 0.0], &cover, 1e-9).is_empty());
    }

    #[test]
    fn cover_validation() {
        let cover = split_cover();
        let r = validate_cover(&cover, 2000, 7);
        assert_eq!(r.fraction, 1.0);
        assert!(r.passes());
        let mut partial = cover.clone();
        partial.cells.truncate(1);
        let r = validate_cover(&partial, 2000, 7);
        assert!(r.fraction < 1.0 && !r.passes());
        assert!(r.uncovered_witness.as_ref().unwrap()[0] > 0.0);
        let mut empty = cover;
        empty.cells.clear();
        assert_eq!(validate_cover(&empty, 100, 1).fraction, 0.0);
    }

    #[test]
    fn stalled_iterate_is_not_accepted() {
        // the iterate sits still for a few cycles before facet 3 becomes active
        let normals = [
            [0.5815334660108703, -0.8135224815021304],
            [0.9013102177619979, 0.43317420440028515],
            [-0.6623882009920085, -0.7491607779285905],
            [0.7565848265060975, -0.6538955576395502],
            [-0.6483153842222836, 0.7613718950557034],
            [-0.45281559161864815, -0.8916041946890189],
        ];
        let offsets = [
            -0.7706135683847231,
            -1.3839808689983517,
            1.068337058016712,
            -0.5075540202501347,
            -1.1121214447705134,
            0.9834407874107189,
        ];
        let hs = normals
            .iter()
            .zip(offsets)
            .map(|(a, b)| HalfSpace::new(a.to_vec(), b).unwrap())
            .collect();
        let d = Polytope::new(hs, vec![-0.8048329182281844, -0.8339020591361019]).unwrap();
        let p = project_onto_polytope(
            &[-0.9532416034904476, 0.6360536863876374],
            &d,
            DEFAULT_PROJECTION_TOL,
        )
        .unwrap();
        assert!((p.distance - 1.1789519115139218).abs() < 1e-9, "{p:?}");
        assert!(d.halfspaces()[3].signed_distance(&p.closest).abs() < 1e-12);
    }
}
