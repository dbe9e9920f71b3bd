//! Command execution and exit-code mapping.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use philap_core::auxiliary::{solve_dirichlet, solve_neumann, solve_p_partial_j, AuxOptions};
use philap_core::variational::{classify_regime, default_init, solve, SolveOutcome};
use philap_core::verify::{check_solution, refine_study, CheckMode, SolveReport};
use philap_core::vecops::{dist, norm};
use philap_core::{discrete_equation, BoundaryFunctional, EnergyMode, Error, Grid, GridFunction, ProblemSpec};

use crate::config::{AuxData, ConfigError, ProblemConfig, ProblemKind, Resolved};
use crate::output::{self, RunInfo};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

/// Residual thresholds for the `accepted` flag in reports.
pub const ACCEPT_ODE: f64 = 1e-6;
pub const ACCEPT_INCLUSION: f64 = 1e-6;
const REGIME_DIRECTIONS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Regime,
    Refine,
}

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub solution: Option<PathBuf>,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Infeasible(String),
    Convergence(String),
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Failed(_) => EXIT_CONFIG,
            RunError::Infeasible(_) => EXIT_INFEASIBLE,
            RunError::Convergence(_) => EXIT_CONVERGENCE,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Infeasible(m) | RunError::Convergence(m) | RunError::Failed(m) => m,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible { .. } => RunError::Infeasible(e.to_string()),
            Error::Convergence { .. } | Error::Invariant(_) => RunError::Convergence(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}

fn io(e: impl std::fmt::Display, path: &Path) -> RunError {
    RunError::Failed(format!("{}: {e}", path.display()))
}

/// Run a command; diagnostics go to stderr, the exit code is returned.
pub fn run(args: &RunArgs) -> i32 {
    let start = Instant::now();
    match execute(args) {
        Ok(line) => {
            eprintln!("{line}");
            eprintln!("wall_time: {:.3} s", start.elapsed().as_secs_f64());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            eprintln!("wall_time: {:.3} s", start.elapsed().as_secs_f64());
            e.exit_code()
        }
    }
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ProblemConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ProblemConfig::from_toml(&text)?;
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    Ok(cfg)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| io(e, path))
}

pub fn execute(args: &RunArgs) -> Result<String, RunError> {
    let cfg = load_config(&args.config, args.seed)?;
    let resolved = cfg.resolve()?;
    fs::create_dir_all(&args.out).map_err(|e| io(e, &args.out))?;
    write(&args.out.join("resolved_config.toml"), cfg.to_toml().as_bytes())?;
    match args.command {
        Command::Solve => solve_command(&cfg, &resolved, &args.out),
        Command::Verify => verify_command(&cfg, &resolved, args),
        Command::Regime => regime_command(&resolved, &args.out),
        Command::Refine => refine_command(&cfg, &resolved, &args.out),
    }
}

fn forcing_grid(spec: &ProblemSpec, grid: &Grid) -> GridFunction {
    GridFunction::from_values(*grid, spec.dim, spec.forcing.sample(grid, spec.dim)).expect("forcing samples are finite")
}

struct Solved {
    u: GridFunction,
    converged: bool,
    iterations: usize,
    residual: f64,
    solver: &'static str,
}

fn solve_resolved(r: &Resolved, spec: &ProblemSpec) -> philap_core::Result<Solved> {
    match r.kind {
        ProblemKind::Full => {
            let out: SolveOutcome = solve(spec, &default_init(spec), &r.options)?;
            Ok(Solved {
                converged: out.converged,
                iterations: out.iterations,
                residual: out.residual,
                solver: out.what,
                u: out.u,
            })
        }
        ProblemKind::Auxiliary => {
            let h = forcing_grid(spec, &spec.grid);
            let (u, solver, iterations, residual) = match &r.aux {
                AuxData::Dirichlet(x, y) => (solve_dirichlet(&spec.phi, &h, x, y)?, "auxiliary dirichlet", 0, 0.0),
                AuxData::Neumann(x, y) => (solve_neumann(&spec.phi, &h, x, y)?, "auxiliary neumann", 0, 0.0),
                AuxData::PartialJ => {
                    let opts = AuxOptions {
                        probe_seed: r.options.seed,
                        ..AuxOptions::default()
                    };
                    let s = solve_p_partial_j(&spec.phi, &spec.boundary, &h, &opts)?;
                    let res = s.history.last().copied().unwrap_or(0.0);
                    (s.u, "auxiliary partial j", s.iterations, res)
                }
            };
            Ok(Solved {
                u,
                converged: true,
                iterations,
                residual,
                solver,
            })
        }
    }
}

/// Report for `u`; explicit auxiliary endpoint data replace the `partial j` inclusion.
fn report_for(r: &Resolved, u: &GridFunction, with_regime: bool) -> Result<SolveReport, RunError> {
    let spec = &r.spec;
    let mut report = match r.kind {
        ProblemKind::Full => check_solution(spec, u, CheckMode::Full)?,
        ProblemKind::Auxiliary => {
            let h = forcing_grid(spec, &spec.grid);
            match &r.aux {
                AuxData::PartialJ => check_solution(spec, u, CheckMode::Auxiliary(&h))?,
                data => {
                    let mut free = spec.clone();
                    free.boundary = BoundaryFunctional::neumann();
                    let mut rep = check_solution(&free, u, CheckMode::Auxiliary(&h))?;
                    rep.boundary_residual = match data {
                        AuxData::Dirichlet(x, y) => (dist(u.first(), x) + dist(u.last(), y)) / (1.0 + norm(x) + norm(y)),
                        AuxData::Neumann(x, y) if !rep.flux0.is_empty() => {
                            (dist(&rep.flux0, x) + dist(&rep.flux_t, y)) / (1.0 + norm(x) + norm(y))
                        }
                        _ => f64::INFINITY,
                    };
                    rep
                }
            }
        }
    };
    if with_regime && r.kind == ProblemKind::Full {
        report.regime = Some(classify_regime(spec, REGIME_DIRECTIONS, r.options.seed));
    }
    Ok(report)
}

fn manufactured_error(r: &Resolved, u: &GridFunction) -> Option<f64> {
    r.exact.as_ref().map(|m| {
        let g = u.grid();
        (0..g.nodes()).map(|i| dist(u.node(i), &m.value(g.t(i)))).fold(0.0, f64::max)
    })
}

fn write_solution_files(cfg: &ProblemConfig, r: &Resolved, u: &GridFunction, report: &SolveReport, info: &RunInfo<'_>, out: &Path) -> Result<(), RunError> {
    let spec = &r.spec;
    let h;
    let mode = match r.kind {
        ProblemKind::Full => EnergyMode::Full,
        ProblemKind::Auxiliary => {
            h = forcing_grid(spec, &spec.grid);
            EnergyMode::Auxiliary(h.values())
        }
    };
    let csv_path = out.join(&cfg.output.csv);
    if let Ok(eq) = discrete_equation(spec, u, mode) {
        let mut buf = Vec::new();
        output::write_solution(&mut buf, u, &eq.nodal_flux(spec.dim)).map_err(|e| io(e, &csv_path))?;
        write(&csv_path, &buf)?;
    }
    let file = output::report_file(report, info);
    let text = toml::to_string(&file).map_err(|e| RunError::Failed(e.to_string()))?;
    write(&out.join(&cfg.output.report), text.as_bytes())
}

fn solve_command(cfg: &ProblemConfig, r: &Resolved, out: &Path) -> Result<String, RunError> {
    let solved = solve_resolved(r, &r.spec)?;
    let report = report_for(r, &solved.u, true)?;
    let accepted = solved.converged && report.accepted(ACCEPT_ODE, ACCEPT_INCLUSION);
    let info = RunInfo {
        command: "solve",
        solver: solved.solver,
        converged: solved.converged,
        iterations: solved.iterations,
        solver_residual: solved.residual,
        accepted,
        manufactured_error: manufactured_error(r, &solved.u),
    };
    write_solution_files(cfg, r, &solved.u, &report, &info, out)?;
    if !solved.converged {
        return Err(RunError::Convergence(format!(
            "{} did not converge after {} iterations (residual {:.3e}); best iterate written",
            solved.solver, solved.iterations, solved.residual
        )));
    }
    Ok(format!(
        "solved: ode_residual {:.3e}, boundary_residual {:.3e}, strip gap {:.3e}, accepted {}",
        report.ode_residual, report.boundary_residual, report.strip_gap, accepted
    ))
}

fn verify_command(cfg: &ProblemConfig, r: &Resolved, args: &RunArgs) -> Result<String, RunError> {
    let path = args.solution.clone().unwrap_or_else(|| args.out.join(&cfg.output.csv));
    let file = fs::File::open(&path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let u = output::read_solution(file, r.spec.grid, r.spec.dim).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let report = report_for(r, &u, true)?;
    let accepted = report.accepted(ACCEPT_ODE, ACCEPT_INCLUSION);
    let info = RunInfo {
        command: "verify",
        solver: "none",
        converged: true,
        iterations: 0,
        solver_residual: 0.0,
        accepted,
        manufactured_error: manufactured_error(r, &u),
    };
    let text = toml::to_string(&output::report_file(&report, &info)).map_err(|e| RunError::Failed(e.to_string()))?;
    write(&args.out.join(&cfg.output.report), text.as_bytes())?;
    Ok(format!(
        "verified {}: ode_residual {:.3e}, boundary_residual {:.3e}, accepted {accepted}",
        path.display(),
        report.ode_residual,
        report.boundary_residual
    ))
}

fn regime_command(r: &Resolved, out: &Path) -> Result<String, RunError> {
    let report = classify_regime(&r.spec, REGIME_DIRECTIONS, r.options.seed);
    #[derive(serde::Serialize)]
    struct RegimeFile {
        regime: output::Regime,
    }
    let file = RegimeFile {
        regime: output::regime_section(&report),
    };
    let text = toml::to_string(&file).map_err(|e| RunError::Failed(e.to_string()))?;
    write(&out.join("regime.toml"), text.as_bytes())?;
    let flags: Vec<&str> = report.flags.iter().map(|f| f.name()).collect();
    Ok(format!("regime: {}", flags.join(", ")))
}

fn refine_command(cfg: &ProblemConfig, r: &Resolved, out: &Path) -> Result<String, RunError> {
    let m = r.spec.grid.intervals();
    let levels = cfg.output.refine_levels.clone().unwrap_or_else(|| vec![(m / 4).max(2), (m / 2).max(3), m]);
    let spec = &r.spec;
    let h_on = |g: &Grid| forcing_grid(spec, g);
    let mode_h: Option<&dyn Fn(&Grid) -> GridFunction> = match r.kind {
        ProblemKind::Full => None,
        ProblemKind::Auxiliary => Some(&h_on),
    };
    let solver = |s: &ProblemSpec| -> philap_core::Result<GridFunction> {
        let solved = solve_resolved(r, s)?;
        if !solved.converged {
            return Err(Error::Convergence {
                what: "refinement level",
                iterations: solved.iterations,
                residual: solved.residual,
            });
        }
        Ok(solved.u)
    };
    let exact = r.exact.clone().map(|m| move |t: f64| m.value(t));
    let rows = refine_study(spec, &levels, mode_h, solver, exact)?;
    let path = out.join("refine.csv");
    let mut buf = Vec::new();
    output::write_refine(&mut buf, &rows).map_err(|e| io(e, &path))?;
    write(&path, &buf)?;
    let orders: Vec<String> = rows.iter().filter_map(|r| r.order).map(|o| format!("{o:.2}")).collect();
    Ok(format!("refine: {} levels, observed orders [{}]", rows.len(), orders.join(", ")))
}
