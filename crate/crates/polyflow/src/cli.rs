//! The `polyflow` command line.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polyflow_core::flow_tracer::{
    asymptotic_membership, capture_solution, trace_flow, FlowTrace, MembershipVerdict,
};
use polyflow_core::formal_solver::{
    check_formal_residual, construct_formal_solution, FormalSolution,
};
use polyflow_core::yamabe::{curvature_deviation, run_flow, ConformalState};
use polyflow_core::Error;

use crate::config::{Overrides, RunConfig};
use crate::formats::{trace_csv, yamabe_csv, SolutionDoc, SwitchesDoc};
use crate::suites::{run_suite, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHATTER: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "polyflow",
    version,
    about = "Trace piecewise analytic flows and their asymptotics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate across the cell cover, writing trace.csv and switches.json.
    Trace(RunArgs),
    /// Build the formal λ-series solution at the equilibrium.
    Solve(RunArgs),
    /// Decide eventual membership of a cell from the λ-series.
    Asym(RunArgs),
    /// Run the discrete Yamabe flow with Delaunay flips.
    Yamabe(RunArgs),
    /// Run a randomized property suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub capture: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// geometry, series, solver, tracer, yamabe or all.
    #[arg(conflicts_with = "suite_flag")]
    pub suite: Option<String>,
    #[arg(long = "suite", id = "suite_flag")]
    pub suite_flag: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let over = Overrides {
            t_end: self.t_end,
            order: self.order,
            tol: self.tol,
            capture: self.capture,
            seed: self.seed,
            out: self.out.clone(),
        };
        RunConfig::load(&self.config, &over)
    }
}

/// Runs a parsed command line, writing to `out`/`err`, and returns the exit
/// code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Trace(a) => cmd_trace(&a, out, err),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Asym(a) => cmd_asym(&a, out),
        Command::Yamabe(a) => cmd_yamabe(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn write_file(dir: &std::path::Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_trace(cfg: &RunConfig, trace: &FlowTrace) -> Result<()> {
    let dir = cfg.out_dir();
    write_file(&dir, "trace.csv", &trace_csv(trace))?;
    let json = serde_json::to_string_pretty(&SwitchesDoc::from_trace(trace))?;
    write_file(&dir, "switches.json", &(json + "\n"))
}

pub fn cmd_trace(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = args.load()?;
    let field = cfg.load_system()?;
    let x0 = cfg.x0.as_ref().context("config has no \"x0\"")?;
    match trace_flow(&field, x0, cfg.t_end(), &cfg.trace_options()) {
        Ok(trace) => {
            write_trace(&cfg, &trace)?;
            writeln!(out, "switches: {}", trace.switch_count())?;
            if trace.captured {
                writeln!(
                    out,
                    "captured at t = {:.6} in cell {}",
                    trace.final_time(),
                    trace.final_cell().unwrap_or(0)
                )?;
            }
            Ok(EXIT_OK)
        }
        Err(Error::ChatteringGuard { cap, trace }) => {
            write_trace(&cfg, &trace)?;
            writeln!(
                err,
                "chattering guard: more than {cap} switches by t = {:.6}; full log written",
                trace.final_time()
            )?;
            writeln!(out, "switches: {}", trace.switch_count())?;
            Ok(EXIT_CHATTER)
        }
        Err(e) => Err(e.into()),
    }
}

/// The cell whose field is expanded: the configured one, or the first cell
/// containing the equilibrium.
fn solve_cell(
    cfg: &RunConfig,
    field: &polyflow_core::flow_tracer::PiecewiseField,
) -> Result<usize> {
    let eq = field.equilibrium().context("system has no equilibrium")?;
    match cfg.cell {
        Some(c) if c < field.num_cells() => Ok(c),
        Some(c) => bail!("cell {c} out of range ({} cells)", field.num_cells()),
        None => (0..field.num_cells())
            .find(|&i| field.cover().cells[i].contains(&eq.point, 1e-9))
            .context("no cell contains the equilibrium"),
    }
}

fn build_solution(
    cfg: &RunConfig,
    field: &polyflow_core::flow_tracer::PiecewiseField,
    cell: usize,
) -> Result<FormalSolution> {
    let eq = field.equilibrium().context("system has no equilibrium")?;
    let v = field
        .recentered_field(cell)
        .context("system has no equilibrium")?;
    let c = cfg.c.as_ref().context("config has no \"c\"")?;
    Ok(construct_formal_solution(&v, &eq.spectrum, c, cfg.order())?)
}

pub fn cmd_solve(args: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.load()?;
    let field = cfg.load_system()?;
    let cell = solve_cell(&cfg, &field)?;
    let sol = build_solution(&cfg, &field, cell)?;
    let residual = check_formal_residual(&sol);
    writeln!(out, "order: {}", sol.order())?;
    writeln!(out, "residual: {residual:.3e}")?;
    if sol.resonance_log.is_empty() {
        writeln!(out, "resonances: none")?;
    } else {
        writeln!(out, "resonances: {}", sol.resonance_log.len())?;
        for r in &sol.resonance_log {
            writeln!(
                out,
                "  J = {:?}, component {}",
                r.index.exponents(),
                r.component
            )?;
        }
    }
    let json = serde_json::to_string_pretty(&SolutionDoc::from_solution(&sol, residual))?;
    write_file(&cfg.out_dir(), "solution.json", &(json + "\n"))?;
    Ok(EXIT_OK)
}

pub fn cmd_asym(args: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.load()?;
    let field = cfg.load_system()?;
    let (cell, sol) = if cfg.c.is_some() {
        let cell = solve_cell(&cfg, &field)?;
        let eq = field.equilibrium().context("system has no equilibrium")?;
        if !field.cover().cells[cell].contains(&eq.point, 1e-9) {
            return Err(Error::EquilibriumNotInCell { cell }.into());
        }
        (cell, build_solution(&cfg, &field, cell)?)
    } else {
        // no parameters given: trace from x0 into the capture ball and fit them
        let x0 = cfg.x0.as_ref().context("config needs \"c\" or \"x0\"")?;
        let trace = trace_flow(&field, x0, cfg.t_end(), &cfg.trace_options())?;
        if !trace.captured {
            bail!(
                "trace did not reach the capture radius by t = {}",
                cfg.t_end()
            );
        }
        let (final_cell, sol) = capture_solution(&field, &trace, cfg.order())?;
        (cfg.cell.unwrap_or(final_cell), sol)
    };
    match asymptotic_membership(&field, &sol, cell)? {
        MembershipVerdict::EventuallyInside(j) => {
            writeln!(out, "EventuallyInside cell {j}")?;
            Ok(EXIT_OK)
        }
        MembershipVerdict::EventuallyOutside { cell, facet, term } => {
            writeln!(
                out,
                "EventuallyOutside cell {cell}: facet {facet}, a = {}, q = {}, r = {}",
                term.coefficient, term.power, term.rate
            )?;
            Ok(EXIT_OK)
        }
        MembershipVerdict::Undecided(why) => {
            writeln!(out, "Undecided: {why}")?;
            Ok(EXIT_UNDECIDED)
        }
    }
}

pub fn cmd_yamabe(args: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.load()?;
    let mesh = cfg.load_mesh()?;
    let u0 = cfg
        .u0
        .clone()
        .unwrap_or_else(|| vec![0.0; mesh.num_vertices()]);
    let state = ConformalState::new(mesh, u0)?;
    let run = run_flow(state, cfg.t_end(), cfg.step_control())?;
    write_file(&cfg.out_dir(), "yamabe.csv", &yamabe_csv(&run.samples))?;
    writeln!(out, "flips: {}", run.flips)?;
    writeln!(
        out,
        "final deviation: {:.3e}",
        curvature_deviation(&run.state)?
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let name = args
        .suite
        .as_deref()
        .or(args.suite_flag.as_deref())
        .unwrap_or("all");
    let names: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => bail!(
            "unknown suite {s:?} (expected one of {}, all)",
            SUITES.join(", ")
        ),
    };
    let (mut passed, mut total) = (0, 0);
    for s in names {
        for r in run_suite(s, args.seed).expect("known suite") {
            writeln!(out, "{}", r.line())?;
            total += 1;
            passed += usize::from(r.passed);
        }
    }
    writeln!(
        out,
        "{passed}/{total} properties passed (seed {})",
        args.seed
    )?;
    Ok(if passed == total { EXIT_OK } else { EXIT_ERROR })
}
