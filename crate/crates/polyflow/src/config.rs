//! Run configuration files.
//!
//! A config is a JSON object; file paths inside it are resolved relative to
//! the config's own directory. Command-line flags override the scalars.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use polyflow_core::flow_tracer::{PiecewiseField, TraceOptions};
use polyflow_core::ode::StepControl;
use polyflow_core::yamabe::TriangulatedSurface;
use serde::{Deserialize, Serialize};

use crate::formats::{MeshDoc, SystemDoc};

pub const DEFAULT_T_END: f64 = 10.0;
pub const DEFAULT_ORDER: u32 = 8;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Piecewise system (cover, fields, optional equilibrium).
    pub system: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub x0: Option<Vec<f64>>,
    pub u0: Option<Vec<f64>>,
    /// λ-series parameters.
    pub c: Option<Vec<f64>>,
    pub cell: Option<usize>,
    pub t_end: Option<f64>,
    pub order: Option<u32>,
    /// Relative integrator tolerance; the absolute one is a hundredth of it.
    pub tol: Option<f64>,
    pub capture: Option<f64>,
    pub seed: Option<u64>,
    pub chatter_cap: Option<usize>,
    pub max_step: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Scalars that may be overridden from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub t_end: Option<f64>,
    pub order: Option<u32>,
    pub tol: Option<f64>,
    pub capture: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, over: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.system, &mut cfg.mesh].into_iter().flatten() {
            *p = base.join(&*p);
        }
        if let Some(out) = &mut cfg.out {
            *out = base.join(&*out);
        }
        cfg.t_end = over.t_end.or(cfg.t_end);
        cfg.order = over.order.or(cfg.order);
        cfg.tol = over.tol.or(cfg.tol);
        cfg.capture = over.capture.or(cfg.capture);
        cfg.seed = over.seed.or(cfg.seed);
        if over.out.is_some() {
            cfg.out = over.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol", self.tol),
            ("capture", self.capture),
            ("max_step", self.max_step),
        ] {
            if let Some(v) = v {
                if v.is_nan() || v <= 0.0 {
                    bail!("{name} must be positive, got {v}");
                }
            }
        }
        if let Some(t) = self.t_end {
            if t.is_nan() || t < 0.0 {
                bail!("t_end must be non-negative, got {t}");
            }
        }
        if let Some(k) = self.order {
            if k < 2 {
                bail!("order must be at least 2, got {k}");
            }
        }
        for p in [&self.system, &self.mesh].into_iter().flatten() {
            if !p.is_file() {
                bail!("file not found: {}", p.display());
            }
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(DEFAULT_T_END)
    }

    pub fn order(&self) -> u32 {
        self.order.unwrap_or(DEFAULT_ORDER)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn step_control(&self) -> StepControl {
        let mut step = StepControl::default();
        if let Some(tol) = self.tol {
            step.rtol = tol;
            step.atol = tol * 1e-2;
        }
        if let Some(h) = self.max_step {
            step.max_step = h;
        }
        step
    }

    pub fn trace_options(&self) -> TraceOptions {
        let mut opts = TraceOptions {
            step: self.step_control(),
            ..TraceOptions::default()
        };
        if let Some(r) = self.capture {
            opts.capture_radius = r;
        }
        if let Some(cap) = self.chatter_cap {
            opts.chatter_cap = cap;
        }
        opts
    }

    pub fn load_system(&self) -> Result<PiecewiseField> {
        let path = self.system.as_ref().context("config has no \"system\"")?;
        let doc: SystemDoc = read_json(path)?;
        doc.build()
            .with_context(|| format!("invalid system {}", path.display()))
    }

    pub fn load_mesh(&self) -> Result<TriangulatedSurface> {
        let path = self.mesh.as_ref().context("config has no \"mesh\"")?;
        let doc: MeshDoc = read_json(path)?;
        doc.build()
            .with_context(|| format!("invalid mesh {}", path.display()))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}
