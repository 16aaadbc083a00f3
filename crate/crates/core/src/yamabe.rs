//! Discrete Yamabe flow with Delaunay edge flips on closed triangulated
//! surfaces.
//!
//! A state assigns a conformal factor `u_i` to every vertex; edge lengths are
//! `ℓ_ij = e^{u_i+u_j} ℓ⁰_ij`, curvature is the angle defect and the flow
//! is `u' = K̄·1 − K`. After every accepted step the triangulation is flipped
//! back to Delaunay, each flipped edge getting the reference length that
//! keeps the current metric unchanged.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::ode::{StepControl, Stepper};

/// Opposite-angle sums above `π + DELAUNAY_TOL` trigger a flip.
pub const DELAUNAY_TOL: f64 = 1e-12;

/// Closed, consistently oriented triangulated surface with per-edge
/// reference lengths. Edges have ids, so parallel edges created by flips are
/// allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedSurface {
    n: usize,
    faces: Vec<[usize; 3]>,
    /// `face_edges[f][k]` is the edge opposite `faces[f][k]`.
    face_edges: Vec<[usize; 3]>,
    edge_vertices: Vec<[usize; 2]>,
    /// The two `(face, local corner)` pairs opposite each edge.
    edge_faces: Vec<[(usize, usize); 2]>,
    ref_lengths: Vec<f64>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

impl TriangulatedSurface {
    /// Builds a surface from oriented faces and a reference length for every
    /// vertex pair joined by an edge.
    pub fn new(
        n: usize,
        faces: Vec<[usize; 3]>,
        ref_lengths: &BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let mut directed = BTreeMap::new();
        let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edge_vertices = Vec::new();
        let mut lengths = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) || f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(alloc::format!("face {fi} is malformed")));
            }
            let mut fe = [0; 3];
            for k in 0..3 {
                let (a, b) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                if directed.insert((a, b), fi).is_some() {
                    return Err(Error::InvalidMesh(alloc::format!(
                        "edge {a}->{b} appears twice with the same orientation"
                    )));
                }
                let kk = key(a, b);
                let id = match ids.get(&kk) {
                    Some(&id) => id,
                    None => {
                        let l = *ref_lengths.get(&kk).ok_or_else(|| {
                            Error::InvalidMesh(alloc::format!(
                                "missing length for edge {}-{}",
                                kk.0,
                                kk.1
                            ))
                        })?;
                        if !(l > 0.0 && l.is_finite()) {
                            return Err(Error::InvalidMesh(alloc::format!(
                                "bad length for edge {}-{}",
                                kk.0,
                                kk.1
                            )));
                        }
                        let id = edge_vertices.len();
                        ids.insert(kk, id);
                        edge_vertices.push([kk.0, kk.1]);
                        lengths.push(l);
                        id
                    }
                };
                fe[k] = id;
            }
            face_edges.push(fe);
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidMesh(alloc::format!(
                    "edge {a}-{b} is on a boundary"
                )));
            }
        }
        let mut s = TriangulatedSurface {
            n,
            faces,
            face_edges,
            edge_vertices,
            edge_faces: Vec::new(),
            ref_lengths: lengths,
        };
        s.rebuild_incidence();
        for f in 0..s.faces.len() {
            let l = s.face_lengths(f, &vec![0.0; n]);
            triangle_angles(l).ok_or(Error::DegenerateTriangle { face: f })?;
        }
        Ok(s)
    }

    fn rebuild_incidence(&mut self) {
        let mut inc = vec![[(usize::MAX, 0); 2]; self.edge_vertices.len()];
        for (f, fe) in self.face_edges.iter().enumerate() {
            for (k, &e) in fe.iter().enumerate() {
                let slot = if inc[e][0].0 == usize::MAX { 0 } else { 1 };
                inc[e][slot] = (f, k);
            }
        }
        self.edge_faces = inc;
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_edges(&self) -> usize {
        self.edge_vertices.len()
    }

    pub fn edge_vertices(&self, e: usize) -> [usize; 2] {
        self.edge_vertices[e]
    }

    pub fn ref_length(&self, e: usize) -> f64 {
        self.ref_lengths[e]
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.n as i64 - self.edge_vertices.len() as i64 + self.faces.len() as i64
    }

    /// `e^{u_i+u_j} ℓ⁰_e`.
    pub fn edge_length(&self, e: usize, u: &[f64]) -> f64 {
        let [i, j] = self.edge_vertices[e];
        math::exp(u[i] + u[j]) * self.ref_lengths[e]
    }

    /// Lengths of the edges opposite the three corners of `f`.
    pub fn face_lengths(&self, f: usize, u: &[f64]) -> [f64; 3] {
        let fe = self.face_edges[f];
        [
            self.edge_length(fe[0], u),
            self.edge_length(fe[1], u),
            self.edge_length(fe[2], u),
        ]
    }

    /// Corner angles of `f`.
    pub fn face_angles(&self, f: usize, u: &[f64]) -> Result<[f64; 3]> {
        triangle_angles(self.face_lengths(f, u)).ok_or(Error::DegenerateTriangle { face: f })
    }

    /// Sum of the two angles opposite `e`.
    pub fn opposite_angle_sum(&self, e: usize, u: &[f64]) -> Result<f64> {
        let [(f1, k1), (f2, k2)] = self.edge_faces[e];
        Ok(self.face_angles(f1, u)?[k1] + self.face_angles(f2, u)?[k2])
    }

    /// Whether every edge satisfies the Delaunay condition at `u`.
    pub fn is_delaunay(&self, u: &[f64]) -> Result<bool> {
        for e in 0..self.num_edges() {
            if self.opposite_angle_sum(e, u)? > PI + DELAUNAY_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Replaces edge `e` by the other diagonal of its two faces, keeping the
    /// metric given by `u`.
    pub fn flip(&mut self, e: usize, u: &[f64]) -> Result<()> {
        let [(f1, k1), (f2, k2)] = self.edge_faces[e];
        let a1 = self.face_angles(f1, u)?;
        let a2 = self.face_angles(f2, u)?;
        let (k, i, j) = (
            self.faces[f1][k1],
            self.faces[f1][(k1 + 1) % 3],
            self.faces[f1][(k1 + 2) % 3],
        );
        let l = self.faces[f2][k2];
        debug_assert_eq!(self.faces[f2][(k2 + 1) % 3], j);
        let e_jk = self.face_edges[f1][(k1 + 1) % 3];
        let e_ki = self.face_edges[f1][(k1 + 2) % 3];
        let e_il = self.face_edges[f2][(k2 + 1) % 3];
        let e_lj = self.face_edges[f2][(k2 + 2) % 3];
        // total angle at i across the two faces
        let theta = a1[(k1 + 1) % 3] + a2[(k2 + 2) % 3];
        let (p, q) = (self.edge_length(e_ki, u), self.edge_length(e_il, u));
        let d2 = p * p + q * q - 2.0 * p * q * math::cos(theta);
        if !(d2 > 0.0) {
            return Err(Error::DegenerateTriangle { face: f1 });
        }
        self.ref_lengths[e] = math::sqrt(d2) / math::exp(u[k] + u[l]);
        self.edge_vertices[e] = [k.min(l), k.max(l)];
        self.faces[f1] = [k, i, l];
        self.face_edges[f1] = [e_il, e, e_ki];
        self.faces[f2] = [l, j, k];
        self.face_edges[f2] = [e_jk, e, e_lj];
        self.rebuild_incidence();
        Ok(())
    }
}

/// Corner angles from opposite side lengths, `None` unless every strict
/// triangle inequality holds.
pub fn triangle_angles(l: [f64; 3]) -> Option<[f64; 3]> {
    let [a, b, c] = l;
    if !(a < b + c && b < a + c && c < a + b) {
        return None;
    }
    let ang = |x: f64, y: f64, z: f64| {
        math::acos(((y * y + z * z - x * x) / (2.0 * y * z)).clamp(-1.0, 1.0))
    };
    Some([ang(a, b, c), ang(b, c, a), ang(c, a, b)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalState {
    pub u: Vec<f64>,
    pub mesh: TriangulatedSurface,
    /// `(time, edge id)` of every flip.
    pub flip_log: Vec<(f64, usize)>,
}

impl ConformalState {
    pub fn new(mesh: TriangulatedSurface, u: Vec<f64>) -> Result<Self> {
        if u.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                found: u.len(),
            });
        }
        Ok(ConformalState {
            u,
            mesh,
            flip_log: Vec::new(),
        })
    }
}

/// Angle defects `K_i = 2π − Σ angles at i` of `mesh` under `u`.
pub fn curvature_at(mesh: &TriangulatedSurface, u: &[f64]) -> Result<Vec<f64>> {
    let mut k = vec![2.0 * PI; mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let a = mesh.face_angles(f, u)?;
        for c in 0..3 {
            k[face[c]] -= a[c];
        }
    }
    Ok(k)
}

pub fn curvature(state: &ConformalState) -> Result<Vec<f64>> {
    curvature_at(&state.mesh, &state.u)
}

/// `F(u) = K̄·1 − K`.
pub fn flow_field_at(mesh: &TriangulatedSurface, u: &[f64]) -> Result<Vec<f64>> {
    let k = curvature_at(mesh, u)?;
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    Ok(k.iter().map(|ki| mean - ki).collect())
}

pub fn flow_field(state: &ConformalState) -> Result<Vec<f64>> {
    flow_field_at(&state.mesh, &state.u)
}

/// `max_i |K_i − K̄|`.
pub fn curvature_deviation(state: &ConformalState) -> Result<f64> {
    Ok(flow_field(state)?.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// Flips Delaunay-violating edges until none remains, logging each flip at
/// time `t`.
pub fn flip_to_delaunay(state: &mut ConformalState, t: f64) -> Result<usize> {
    let n = state.mesh.num_vertices();
    let cap = n * (n + 10) * (n + 10);
    let mut count = 0;
    loop {
        let mut worst: Option<(usize, f64)> = None;
        for e in 0..state.mesh.num_edges() {
            let s = state.mesh.opposite_angle_sum(e, &state.u)?;
            if s > PI + DELAUNAY_TOL && worst.is_none_or(|(_, w)| s > w) {
                worst = Some((e, s));
            }
        }
        let Some((e, _)) = worst else {
            return Ok(count);
        };
        if count >= cap {
            return Err(Error::FlipLoop { cap });
        }
        state.mesh.flip(e, &state.u)?;
        state.flip_log.push((t, e));
        count += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub u: Vec<f64>,
    /// `max_i |K_i − K̄|`.
    pub deviation: f64,
    /// Cumulative flips up to `t`.
    pub flips: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub state: ConformalState,
    pub flips: usize,
    pub samples: Vec<FlowSample>,
}

/// Integrates `u' = F(u)` to `t_end`, restoring the Delaunay property after
/// the start and after every accepted step.
pub fn run_flow(state0: ConformalState, t_end: f64, control: StepControl) -> Result<FlowRun> {
    let mut state = state0;
    let mut flips = flip_to_delaunay(&mut state, 0.0)?;
    let mut samples = vec![FlowSample {
        t: 0.0,
        u: state.u.clone(),
        deviation: curvature_deviation(&state)?,
        flips,
    }];
    let mut stepper = Stepper::new(0.0, state.u.clone(), control);
    while stepper.t < t_end {
        {
            let mesh = &state.mesh;
            let mut rhs = |_: f64, u: &[f64]| flow_field_at(mesh, u);
            stepper.step(&mut rhs, t_end)?;
        }
        state.u.clone_from(&stepper.y);
        flips += flip_to_delaunay(&mut state, stepper.t)?;
        samples.push(FlowSample {
            t: stepper.t,
            u: state.u.clone(),
            deviation: curvature_deviation(&state)?,
            flips,
        });
    }
    Ok(FlowRun {
        state,
        flips,
        samples,
    })
}

/// Explicit Euler with the same flip rule, used as a reference.
pub fn run_flow_euler(state0: ConformalState, t_end: f64, dt: f64) -> Result<FlowRun> {
    let mut state = state0;
    let mut flips = flip_to_delaunay(&mut state, 0.0)?;
    let steps = (math::ceil(t_end / dt) as usize).max(1);
    let h = t_end / steps as f64;
    for s in 1..=steps {
        let f = flow_field(&state)?;
        for (ui, fi) in state.u.iter_mut().zip(f) {
            *ui += h * fi;
        }
        flips += flip_to_delaunay(&mut state, s as f64 * h)?;
    }
    let deviation = curvature_deviation(&state)?;
    let samples = vec![FlowSample {
        t: t_end,
        u: state.u.clone(),
        deviation,
        flips,
    }];
    Ok(FlowRun {
        state,
        flips,
        samples,
    })
}

/// `u ↦ (e^{−2u_1}, …, e^{−2u_n})`.
pub fn exp_coordinates(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| math::exp(-2.0 * x)).collect()
}

/// Inverse of [`exp_coordinates`].
pub fn log_coordinates(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&x| -0.5 * math::ln(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub pairs: usize,
    pub violations: usize,
}

/// For random pairs `u_a, u_b` at which `mesh` is Delaunay, checks that the
/// pulled-back points of the segment between their exp-coordinate images
/// keep `mesh` Delaunay at `interior` evenly spaced points.
pub fn convexity_probe<R: Rng>(
    mesh: &TriangulatedSurface,
    center: &[f64],
    spread: f64,
    pairs: usize,
    interior: usize,
    rng: &mut R,
) -> ConvexityReport {
    segment_probe(
        mesh,
        center,
        spread,
        pairs,
        interior,
        rng,
        exp_coordinates,
        log_coordinates,
    )
}

/// [`convexity_probe`] with an arbitrary chart `to` and its inverse `from`.
#[allow(clippy::too_many_arguments)]
pub fn segment_probe<R: Rng>(
    mesh: &TriangulatedSurface,
    center: &[f64],
    spread: f64,
    pairs: usize,
    interior: usize,
    rng: &mut R,
    to: fn(&[f64]) -> Vec<f64>,
    from: fn(&[f64]) -> Vec<f64>,
) -> ConvexityReport {
    let n = mesh.num_vertices();
    let sample = |rng: &mut R| -> Vec<f64> {
        (0..n)
            .map(|i| center[i] + rng.gen_range(-spread..=spread))
            .collect()
    };
    let delaunay = |u: &[f64]| mesh.is_delaunay(u).unwrap_or(false);
    let mut found = 0;
    let mut violations = 0;
    let mut attempts = 0;
    while found < pairs && attempts < 1000 * pairs.max(1) {
        attempts += 1;
        let ua = sample(rng);
        let ub = sample(rng);
        if !delaunay(&ua) || !delaunay(&ub) {
            continue;
        }
        found += 1;
        let (za, zb) = (to(&ua), to(&ub));
        for s in 1..=interior {
            let w = s as f64 / (interior + 1) as f64;
            let z: Vec<f64> = za
                .iter()
                .zip(&zb)
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect();
            if !delaunay(&from(&z)) {
                violations += 1;
                break;
            }
        }
    }
    ConvexityReport {
        pairs: found,
        violations,
    }
}

/// Boundary of the regular tetrahedron with unit edges.
pub fn tetrahedron() -> TriangulatedSurface {
    unit_mesh(4, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Regular octahedron with unit edges.
pub fn octahedron() -> TriangulatedSurface {
    // 0,1 = ±x; 2,3 = ±y; 4,5 = ±z
    unit_mesh(
        6,
        vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ],
    )
}

/// Flat equilateral torus on 8 vertices: the hexagonal lattice modulo the
/// sublattice spanned by `(2,1)` and `(0,4)` in lattice coordinates.
pub fn flat_torus() -> TriangulatedSurface {
    let index = |i: i64, j: i64| -> usize {
        let k = i.div_euclid(2);
        let (i, j) = (i - 2 * k, (j - k).rem_euclid(4));
        (i * 4 + j) as usize
    };
    let mut faces = Vec::new();
    for i in 0..2 {
        for j in 0..4 {
            faces.push([index(i, j), index(i + 1, j), index(i, j + 1)]);
            faces.push([index(i + 1, j), index(i + 1, j + 1), index(i, j + 1)]);
        }
    }
    unit_mesh(8, faces)
}

fn unit_mesh(n: usize, faces: Vec<[usize; 3]>) -> TriangulatedSurface {
    let mut lengths = BTreeMap::new();
    for f in &faces {
        for k in 0..3 {
            lengths.insert(key(f[k], f[(k + 1) % 3]), 1.0);
        }
    }
    TriangulatedSurface::new(n, faces, &lengths).expect("regression mesh is valid")
}
