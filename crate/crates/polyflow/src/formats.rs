//! JSON documents and CSV writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use polyflow_core::flow_tracer::{Equilibrium, FlowTrace, PiecewiseField};
use polyflow_core::formal_solver::{FormalSolution, StableSpectrum};
use polyflow_core::geometry::{Bounds, CellCover, HalfSpace, Polytope};
use polyflow_core::lambdaseries::LambdaSeries;
use polyflow_core::poly::Poly;
use polyflow_core::powerseries::PowerSeries;
use polyflow_core::yamabe::{FlowSample, TriangulatedSurface};
use polyflow_core::MultiIndex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceDoc {
    /// `{x : a·x ≥ b}`; `a` need not be normalized.
    #[serde(rename = "a")]
    pub normal: Vec<f64>,
    #[serde(rename = "b")]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeDoc {
    pub halfspaces: Vec<HalfSpaceDoc>,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverDoc {
    pub cells: Vec<PolytopeDoc>,
    pub bounds: BoundsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    #[serde(rename = "I")]
    pub index: Vec<u32>,
    #[serde(rename = "b")]
    pub coeff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub in_dim: usize,
    pub out_dim: usize,
    pub order: u32,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDoc {
    pub point: Vec<f64>,
    pub rates: Vec<f64>,
}

/// A piecewise analytic system: a cover and one field per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDoc {
    pub cover: CoverDoc,
    pub fields: Vec<SeriesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTermDoc {
    #[serde(rename = "J")]
    pub index: Vec<u32>,
    /// One `dim`-vector per power `t^0, t^1, …`.
    pub poly: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSeriesDoc {
    pub rates: Vec<f64>,
    /// Output dimension; needed when `terms` is empty.
    pub dim: usize,
    pub order: u32,
    pub terms: Vec<LambdaTermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceDoc {
    pub index: Vec<u32>,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub params: Vec<f64>,
    pub residual: f64,
    pub resonance_log: Vec<ResonanceDoc>,
    pub series: LambdaSeriesDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDoc {
    pub vertices: usize,
    pub faces: Vec<[usize; 3]>,
    /// Keys are `"i-j"`.
    pub ref_lengths: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchDoc {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchesDoc {
    pub switches: Vec<SwitchDoc>,
}

impl CoverDoc {
    pub fn build(&self) -> Result<CellCover> {
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let hs = c
                    .halfspaces
                    .iter()
                    .map(|h| HalfSpace::new(h.normal.clone(), h.offset))
                    .collect::<Result<Vec<_>, _>>()
                    .with_context(|| format!("cell {i}"))?;
                Polytope::new(hs, c.witness.clone()).with_context(|| format!("cell {i}"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellCover::new(
            cells,
            Bounds {
                lo: self.bounds.lo.clone(),
                hi: self.bounds.hi.clone(),
            },
        )?)
    }

    pub fn from_cover(cover: &CellCover) -> Self {
        CoverDoc {
            bounds: BoundsDoc {
                lo: cover.bounds.lo.clone(),
                hi: cover.bounds.hi.clone(),
            },
            cells: cover
                .cells
                .iter()
                .map(|c| PolytopeDoc {
                    halfspaces: c
                        .halfspaces()
                        .iter()
                        .map(|h| HalfSpaceDoc {
                            normal: h.normal().to_vec(),
                            offset: h.offset(),
                        })
                        .collect(),
                    witness: c.witness().to_vec(),
                })
                .collect(),
        }
    }
}

impl SeriesDoc {
    pub fn build(&self) -> Result<PowerSeries> {
        Ok(PowerSeries::from_terms(
            self.in_dim,
            self.out_dim,
            self.order,
            self.terms
                .iter()
                .map(|t| (t.index.clone(), t.coeff.clone())),
        )?)
    }

    pub fn from_series(s: &PowerSeries) -> Self {
        SeriesDoc {
            in_dim: s.in_dim(),
            out_dim: s.out_dim(),
            order: s.order(),
            terms: s
                .coeffs()
                .iter()
                .map(|(i, b)| TermDoc {
                    index: i.exponents().to_vec(),
                    coeff: b.clone(),
                })
                .collect(),
        }
    }
}

impl SystemDoc {
    pub fn build(&self) -> Result<PiecewiseField> {
        let cover = self.cover.build()?;
        let fields = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| f.build().with_context(|| format!("field {i}")))
            .collect::<Result<Vec<_>>>()?;
        let eq = match &self.equilibrium {
            Some(e) => Some(Equilibrium {
                point: e.point.clone(),
                spectrum: StableSpectrum::new(e.rates.clone())?,
            }),
            None => None,
        };
        Ok(PiecewiseField::new(cover, fields, eq)?)
    }

    pub fn from_field(field: &PiecewiseField) -> Self {
        SystemDoc {
            cover: CoverDoc::from_cover(field.cover()),
            fields: field.fields().iter().map(SeriesDoc::from_series).collect(),
            equilibrium: field.equilibrium().map(|e| EquilibriumDoc {
                point: e.point.clone(),
                rates: e.spectrum.rates().to_vec(),
            }),
        }
    }
}

impl LambdaSeriesDoc {
    pub fn from_series(x: &LambdaSeries) -> Self {
        LambdaSeriesDoc {
            rates: x.rates().to_vec(),
            dim: x.dim(),
            order: x.order(),
            terms: x
                .terms()
                .iter()
                .map(|(j, p)| LambdaTermDoc {
                    index: j.exponents().to_vec(),
                    poly: p.power_vectors(),
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<LambdaSeries> {
        let mut x = LambdaSeries::new(self.rates.clone(), self.dim, self.order)?;
        for t in &self.terms {
            let p = Poly::from_power_vectors(self.dim, &t.poly)?;
            x.insert(MultiIndex::new(t.index.clone()), p)?;
        }
        Ok(x)
    }
}

impl SolutionDoc {
    pub fn from_solution(sol: &FormalSolution, residual: f64) -> Self {
        SolutionDoc {
            params: sol.params.clone(),
            residual,
            resonance_log: sol
                .resonance_log
                .iter()
                .map(|r| ResonanceDoc {
                    index: r.index.exponents().to_vec(),
                    component: r.component,
                })
                .collect(),
            series: LambdaSeriesDoc::from_series(&sol.series),
        }
    }
}

impl MeshDoc {
    pub fn build(&self) -> Result<TriangulatedSurface> {
        let mut lengths = BTreeMap::new();
        for (k, &l) in &self.ref_lengths {
            let (a, b) = k
                .split_once('-')
                .ok_or_else(|| anyhow!("edge key {k:?} is not of the form \"i-j\""))?;
            let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
            lengths.insert((a.min(b), a.max(b)), l);
        }
        Ok(TriangulatedSurface::new(
            self.vertices,
            self.faces.clone(),
            &lengths,
        )?)
    }

    pub fn from_mesh(mesh: &TriangulatedSurface) -> Result<Self> {
        let mut ref_lengths = BTreeMap::new();
        for e in 0..mesh.num_edges() {
            let [a, b] = mesh.edge_vertices(e);
            if ref_lengths
                .insert(format!("{a}-{b}"), mesh.ref_length(e))
                .is_some()
            {
                bail!("mesh has parallel edges {a}-{b}");
            }
        }
        Ok(MeshDoc {
            vertices: mesh.num_vertices(),
            faces: mesh.faces().to_vec(),
            ref_lengths,
        })
    }
}

impl SwitchesDoc {
    pub fn from_trace(trace: &FlowTrace) -> Self {
        SwitchesDoc {
            switches: trace
                .switches
                .iter()
                .map(|s| SwitchDoc {
                    t: s.t,
                    from: s.from,
                    to: s.to,
                })
                .collect(),
        }
    }
}

/// `t,x1,…,xm,cell` rows, one per trace sample.
pub fn trace_csv(trace: &FlowTrace) -> String {
    let m = trace.states.first().map_or(0, Vec::len);
    let mut s = String::from("t");
    for i in 1..=m {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",cell\n");
    for ((t, x), c) in trace.times.iter().zip(&trace.states).zip(&trace.cells) {
        let _ = write!(s, "{t}");
        for v in x {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{c}");
    }
    s
}

/// `t,u1,…,un,deviation,flips` rows.
pub fn yamabe_csv(samples: &[FlowSample]) -> String {
    let n = samples.first().map_or(0, |s| s.u.len());
    let mut s = String::from("t");
    for i in 1..=n {
        let _ = write!(s, ",u{i}");
    }
    s.push_str(",deviation,flips\n");
    for smp in samples {
        let _ = write!(s, "{}", smp.t);
        for v in &smp.u {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{},{}", smp.deviation, smp.flips);
    }
    s
}
