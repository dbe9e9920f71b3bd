//! Solution CSV and report files.

use std::io::{Read, Write};

use philap_core::variational::RegimeReport;
use philap_core::verify::{BoundStatus, RefineRow, SolveReport};
use philap_core::{Grid, GridFunction};
use serde::Serialize;

/// Header `t,u_1..u_N,phi_du_1..phi_du_N`.
pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=dim).map(|k| format!("u_{k}")));
    h.extend((1..=dim).map(|k| format!("phi_du_{k}")));
    h
}

pub fn write_solution<W: Write>(out: W, u: &GridFunction, nodal_flux: &[f64]) -> csv::Result<()> {
    let n = u.dim();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n))?;
    for i in 0..u.grid().nodes() {
        let mut row = vec![u.grid().t(i)];
        row.extend_from_slice(u.node(i));
        row.extend_from_slice(&nodal_flux[i * n..(i + 1) * n]);
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read the `u_k` columns back onto `grid`.
pub fn read_solution<R: Read>(input: R, grid: Grid, dim: usize) -> Result<GridFunction, String> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let cols: Vec<usize> = (1..=dim)
        .map(|k| {
            let name = format!("u_{k}");
            header.iter().position(|h| *h == name).ok_or(format!("solution file lacks column {name}"))
        })
        .collect::<Result<_, _>>()?;
    let mut values = Vec::with_capacity(grid.nodes() * dim);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        for &c in &cols {
            let v: f64 = rec.get(c).ok_or("short row")?.trim().parse().map_err(|e| format!("row {}: {e}", rows + 1))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != grid.nodes() {
        return Err(format!("solution file has {rows} rows, grid has {} nodes", grid.nodes()));
    }
    GridFunction::from_values(grid, dim, values).map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct ReportFile {
    pub summary: Summary,
    pub residuals: Residuals,
    pub strip: Strip,
    pub energy: Energy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manufactured_error: Option<f64>,
    pub bounds: Vec<Bound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trichotomy: Option<Trichotomy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
}

#[derive(Serialize)]
pub struct Summary {
    pub command: String,
    pub accepted: bool,
    pub converged: bool,
    pub solver: String,
    pub iterations: usize,
    pub solver_residual: f64,
}

#[derive(Serialize)]
pub struct Residuals {
    pub ode_residual: f64,
    pub boundary_residual: f64,
    pub feasibility_margin: f64,
    pub flux0: Vec<f64>,
    pub flux_t: Vec<f64>,
}

#[derive(Serialize)]
pub struct Strip {
    pub ok: bool,
    pub gap: f64,
}

#[derive(Serialize)]
pub struct Energy {
    pub psi: f64,
    pub j_term: f64,
    pub f_term: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_term: Option<f64>,
    pub total: f64,
}

#[derive(Serialize)]
pub struct Bound {
    pub name: String,
    pub status: String,
    pub value: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Serialize)]
pub struct Trichotomy {
    pub sigma: f64,
    pub branches: Vec<String>,
    pub exactly_one: bool,
    pub s: f64,
    pub interior_residual: f64,
    pub boundary_residual: f64,
}

#[derive(Serialize)]
pub struct Regime {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    pub flags: Vec<String>,
    pub noise: f64,
    pub threshold: f64,
    pub phi_gap: f64,
    pub evidence: Vec<Evidence>,
}

#[derive(Serialize)]
pub struct Evidence {
    pub radius: f64,
    pub mean_integral: f64,
    pub max_value: f64,
    pub min_value: f64,
}

pub fn regime_section(r: &RegimeReport) -> Regime {
    Regime {
        lambda1: r.lambda1,
        flags: r.flags.iter().map(|f| f.name().to_string()).collect(),
        noise: r.noise,
        threshold: r.threshold,
        phi_gap: r.phi_gap,
        evidence: r
            .evidence
            .iter()
            .map(|e| Evidence {
                radius: e.radius,
                mean_integral: e.mean_integral,
                max_value: e.max_value,
                min_value: e.min_value,
            })
            .collect(),
    }
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub solver: &'a str,
    pub converged: bool,
    pub iterations: usize,
    pub solver_residual: f64,
    pub accepted: bool,
    pub manufactured_error: Option<f64>,
}

pub fn report_file(r: &SolveReport, info: &RunInfo<'_>) -> ReportFile {
    ReportFile {
        summary: Summary {
            command: info.command.into(),
            accepted: info.accepted,
            converged: info.converged,
            solver: info.solver.into(),
            iterations: info.iterations,
            solver_residual: info.solver_residual,
        },
        residuals: Residuals {
            ode_residual: r.ode_residual,
            boundary_residual: r.boundary_residual,
            feasibility_margin: r.feasibility_margin,
            flux0: r.flux0.clone(),
            flux_t: r.flux_t.clone(),
        },
        strip: Strip {
            ok: r.strip_ok,
            gap: r.strip_gap,
        },
        energy: Energy {
            psi: r.energy.psi,
            j_term: r.energy.j_term,
            f_term: r.energy.f_term,
            quad_term: r.energy.quad_term,
            total: r.energy.total,
        },
        manufactured_error: info.manufactured_error,
        bounds: r
            .apriori_checks
            .iter()
            .map(|b| {
                let (status, reason) = match &b.status {
                    BoundStatus::Pass => ("pass", None),
                    BoundStatus::Fail => ("fail", None),
                    BoundStatus::Skipped(why) => ("skipped", Some(why.clone())),
                };
                Bound {
                    name: b.name.into(),
                    status: status.into(),
                    value: b.value,
                    bound: b.bound,
                    reason,
                }
            })
            .collect(),
        trichotomy: r.trichotomy.as_ref().map(|t| Trichotomy {
            sigma: t.sigma,
            branches: t.branches.iter().map(|b| format!("{b:?}").to_lowercase()).collect(),
            exactly_one: t.exactly_one(),
            s: t.s,
            interior_residual: t.interior_residual,
            boundary_residual: t.boundary_residual,
        }),
        regime: r.regime.as_ref().map(regime_section),
    }
}

pub fn write_refine<W: Write>(out: W, rows: &[RefineRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["intervals", "ode_residual", "error", "order"])?;
    for r in rows {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        w.write_record([r.intervals.to_string(), r.ode_residual.to_string(), opt(r.error), opt(r.order)])?;
    }
    w.flush()?;
    Ok(())
}
