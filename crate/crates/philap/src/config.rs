//! TOML problem configuration.
//!
//! A file may name a `preset`; its own keys are then merged over the preset,
//! table by table.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use philap_core::potential::RadialTable;
use philap_core::variational::{SolverMode, SolverOptions};
use philap_core::{BoundaryFunctional, ConvexSetK, Forcing, Grid, PhiMap, PotentialField, ProblemSpec, SmoothPart};
use serde::{Deserialize, Serialize};

use crate::presets;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `-[phi(u')]' = grad F(t, u) + h` with the boundary functional.
    Full,
    /// `-[phi(u')]' + u = h`.
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    pub t_end: f64,
    pub intervals: usize,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSection {
    /// `relativistic` or `p_relativistic`.
    pub variant: String,
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    /// `dirichlet`, `neumann`, `periodic`, `antiperiodic`, `diagonal`,
    /// `full_space`, `point`, `subspace`, or `strip`.
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_coef: Option<f64>,
    /// `none`, `quadratic`, or `exp`.
    #[serde(default = "default_g")]
    pub g: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Auxiliary problems only: Dirichlet values or Neumann fluxes at `t = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    /// Auxiliary problems only: Dirichlet values or Neumann fluxes at `t = T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

fn default_g() -> String {
    "none".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// `zero`, `pendulum`, `pendulum_components`, `harmonic`, or `radial`.
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    /// `none`, `sine`, `cosine`, `constant`, or `manufactured`.
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Vec<f64>>,
    /// Full periods over `[0, T]` for `sine` / `cosine`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
    /// `manufactured`: exact solution `amplitude * sin(angular t) + offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default)]
    pub mean_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// `minimize`, `critical_point`, or `auto`.
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_tol")]
    pub tol_grad: f64,
    #[serde(default = "default_tol")]
    pub tol_fix: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_mode() -> String {
    "auto".into()
}
fn default_tol() -> f64 {
    1e-9
}
fn default_max_outer() -> usize {
    500
}
fn default_damping() -> f64 {
    0.5
}
fn default_margin() -> f64 {
    1e-6
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            mode: default_mode(),
            tol_grad: default_tol(),
            tol_fix: default_tol(),
            max_outer: default_max_outer(),
            damping: default_damping(),
            seed: 0,
            margin: default_margin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_report")]
    pub report: String,
    /// Grid sizes for `refine`; defaults to `M/4, M/2, M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_levels: Option<Vec<usize>>,
}

fn default_csv() -> String {
    "solution.csv".into()
}
fn default_report() -> String {
    "report.toml".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            csv: default_csv(),
            report: default_report(),
            refine_levels: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub problem: ProblemSection,
    pub phi: PhiSection,
    pub boundary: BoundarySection,
    pub potential: PotentialSection,
    pub forcing: ForcingSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Auxiliary boundary data kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum AuxData {
    Dirichlet(Vec<f64>, Vec<f64>),
    Neumann(Vec<f64>, Vec<f64>),
    /// `partial j` boundary condition of the spec's boundary functional.
    PartialJ,
}

/// Everything a run needs, built from a validated config.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub spec: ProblemSpec,
    pub options: SolverOptions,
    pub kind: ProblemKind,
    pub aux: AuxData,
    /// Exact solution for manufactured forcing.
    pub exact: Option<Manufactured>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manufactured {
    pub amplitude: Vec<f64>,
    pub angular: f64,
    pub offset: Vec<f64>,
}

impl Manufactured {
    pub fn value(&self, t: f64) -> Vec<f64> {
        let s = (self.angular * t).sin();
        self.amplitude.iter().zip(&self.offset).map(|(a, c)| a * s + c).collect()
    }

    pub fn slope(&self, t: f64) -> Vec<f64> {
        let c = self.angular * (self.angular * t).cos();
        self.amplitude.iter().map(|a| a * c).collect()
    }

    fn second(&self, t: f64) -> Vec<f64> {
        let s = -self.angular * self.angular * (self.angular * t).sin();
        self.amplitude.iter().map(|a| a * s).collect()
    }
}

fn section<T: serde::de::DeserializeOwned>(t: &toml::Table, key: &str) -> Option<String> {
    let v = t.get(key)?.clone();
    v.try_into::<T>().err().map(|e| format!("config error in [{key}]: {}", e.message().trim()))
}

/// Name the section a deserialization error came from.
fn locate(t: &toml::Table, e: toml::de::Error) -> ConfigError {
    let msg = section::<ProblemSection>(t, "problem")
        .or_else(|| section::<PhiSection>(t, "phi"))
        .or_else(|| section::<BoundarySection>(t, "boundary"))
        .or_else(|| section::<PotentialSection>(t, "potential"))
        .or_else(|| section::<ForcingSection>(t, "forcing"))
        .or_else(|| section::<SolverSection>(t, "solver"))
        .or_else(|| section::<OutputSection>(t, "output"))
        .unwrap_or_else(|| format!("config error: {}", e.message().trim()));
    ConfigError(msg)
}

impl ProblemConfig {
    /// Parse TOML text, expanding a named preset first.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(format!("config parse error: {e}")))?;
        let merged = match user.get("preset") {
            Some(toml::Value::String(name)) => {
                let base = presets::preset(name)
                    .ok_or_else(|| ConfigError(format!("preset: unknown preset \"{name}\" (see list-presets)")))?;
                let mut base = toml::Table::try_from(&base).map_err(|e| ConfigError(e.to_string()))?;
                merge(&mut base, user);
                base
            }
            Some(_) => return err("preset: expected a string"),
            None => user,
        };
        let cfg: ProblemConfig = merged.clone().try_into().map_err(|e: toml::de::Error| locate(&merged, e))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let p = &self.problem;
        let grid = Grid::new(p.t_end, p.intervals).map_err(|e| ConfigError(format!("problem: {e}")))?;
        if p.dim == 0 {
            return err("problem.dim: must be at least 1");
        }
        let phi = self.phi_map()?;
        let boundary = self.boundary_functional()?;
        let potential = self.potential_field()?;
        let (forcing, exact) = self.forcing(&phi, p.dim, p.t_end)?;
        let mut spec = ProblemSpec::new(phi, boundary, potential, forcing, p.dim, grid)
            .map_err(|e| ConfigError(format!("problem: {e}")))?;
        if let Some(periods) = &self.potential.periods {
            spec = spec.with_periods(periods.clone()).map_err(|e| ConfigError(format!("potential.periods: {e}")))?;
        }
        if self.forcing.mean_zero {
            spec = spec.with_mean_zero_forcing().map_err(|e| ConfigError(format!("forcing.mean_zero: {e}")))?;
        }
        let options = self.solver_options()?;
        let aux = self.aux_data(p.kind, p.dim, &exact, &spec)?;
        Ok(Resolved {
            spec,
            options,
            kind: p.kind,
            aux,
            exact,
        })
    }

    fn phi_map(&self) -> Result<PhiMap, ConfigError> {
        let s = &self.phi;
        let r = match s.variant.as_str() {
            "relativistic" => PhiMap::relativistic(s.a),
            "p_relativistic" => match s.p {
                Some(p) => PhiMap::p_relativistic(s.a, p),
                None => return err("phi.p: required for p_relativistic"),
            },
            v => return err(format!("phi.variant: unknown variant \"{v}\"")),
        };
        r.map_err(|e| ConfigError(format!("phi.a: {e}")))
    }

    fn boundary_functional(&self) -> Result<BoundaryFunctional, ConfigError> {
        let b = &self.boundary;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| ConfigError(format!("boundary.{name}: required for {}", b.variant)));
        let set = match b.variant.as_str() {
            "dirichlet" | "point" => ConvexSetK::Point,
            "neumann" | "full_space" => ConvexSetK::FullSpace,
            "periodic" | "diagonal" => ConvexSetK::Diagonal,
            "antiperiodic" => ConvexSetK::AntiDiagonal,
            "subspace" => ConvexSetK::Subspace {
                a: need(b.a_coef, "a_coef")?,
                b: need(b.b_coef, "b_coef")?,
            },
            "strip" => ConvexSetK::Strip { sigma: need(b.sigma, "sigma")? },
            v => return err(format!("boundary.variant: unknown variant \"{v}\"")),
        };
        let smooth = match b.g.as_str() {
            "none" => None,
            "quadratic" => Some(SmoothPart::DifferenceQuadratic { kappa: need(b.kappa, "kappa")? }),
            "exp" => Some(SmoothPart::DifferenceExp),
            v => return err(format!("boundary.g: unknown smooth part \"{v}\"")),
        };
        BoundaryFunctional::new(set, smooth).map_err(|e| ConfigError(format!("boundary: {e}")))
    }

    fn potential_field(&self) -> Result<PotentialField, ConfigError> {
        let s = &self.potential;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| ConfigError(format!("potential.{name}: required for {}", s.variant)));
        Ok(match s.variant.as_str() {
            "zero" => PotentialField::Zero,
            "pendulum" => PotentialField::Pendulum {
                rho: need(s.rho, "rho")?,
                beta: need(s.beta, "beta")?,
            },
            "pendulum_components" => PotentialField::PendulumComponents { rho: need(s.rho, "rho")? },
            "harmonic" => PotentialField::Harmonic { k: need(s.k, "k")? },
            "radial" => {
                let (Some(k), Some(v)) = (&s.knots, &s.values) else {
                    return err("potential.knots: radial potential needs knots and values");
                };
                PotentialField::Radial(RadialTable::new(k.clone(), v.clone()).map_err(|e| ConfigError(format!("potential.knots: {e}")))?)
            }
            v => return err(format!("potential.variant: unknown variant \"{v}\"")),
        })
    }

    fn vector(&self, v: &Option<Vec<f64>>, name: &str, dim: usize) -> Result<Vec<f64>, ConfigError> {
        match v {
            Some(a) if a.len() == dim => Ok(a.clone()),
            Some(a) => err(format!("{name}: expected {dim} entries, got {}", a.len())),
            None => err(format!("{name}: required for variant {}", self.forcing.variant)),
        }
    }

    fn forcing(&self, phi: &PhiMap, dim: usize, t_end: f64) -> Result<(Forcing, Option<Manufactured>), ConfigError> {
        let f = &self.forcing;
        let cycles = f.cycles.unwrap_or(1.0);
        Ok(match f.variant.as_str() {
            "none" => (Forcing::None, None),
            "sine" => (Forcing::sine_cycles(self.vector(&f.amplitude, "forcing.amplitude", dim)?, cycles, t_end), None),
            "cosine" => (Forcing::cosine_cycles(self.vector(&f.amplitude, "forcing.amplitude", dim)?, cycles, t_end), None),
            "constant" => (Forcing::Constant(self.vector(&f.value, "forcing.value", dim)?), None),
            "manufactured" => {
                if self.problem.kind != ProblemKind::Auxiliary {
                    return err("forcing.variant: manufactured forcing needs problem.kind = \"auxiliary\"");
                }
                let m = Manufactured {
                    amplitude: self.vector(&f.amplitude, "forcing.amplitude", dim)?,
                    angular: f.angular.unwrap_or(PI / t_end),
                    offset: match &f.offset {
                        Some(_) => self.vector(&f.offset, "forcing.offset", dim)?,
                        None => vec![0.0; dim],
                    },
                };
                let max_slope = (0..=200)
                    .map(|i| philap_core::vecops::norm(&m.slope(t_end * i as f64 / 200.0)))
                    .fold(0.0, f64::max);
                if max_slope >= phi.radius() {
                    return err("forcing.amplitude: manufactured solution slope must stay below phi.a");
                }
                // h = -[phi(u*')]' + u* = -J_phi(u*') u*'' + u*
                let (phi, mm) = (phi.clone(), m.clone());
                let h = move |t: f64| -> Vec<f64> {
                    let jac = phi.jacobian(&mm.slope(t));
                    let dd = nalgebra::DVector::from_vec(mm.second(t));
                    let flux_rate = jac * dd;
                    mm.value(t).iter().zip(flux_rate.iter()).map(|(u, q)| u - q).collect()
                };
                (Forcing::Custom(Arc::new(h)), Some(m))
            }
            v => return err(format!("forcing.variant: unknown variant \"{v}\"")),
        })
    }

    fn solver_options(&self) -> Result<SolverOptions, ConfigError> {
        let s = &self.solver;
        let mode = match s.mode.as_str() {
            "minimize" => SolverMode::Minimize,
            "critical_point" => SolverMode::CriticalPoint,
            "auto" => SolverMode::Auto,
            v => return err(format!("solver.mode: unknown mode \"{v}\"")),
        };
        let o = SolverOptions {
            tol_grad: s.tol_grad,
            tol_fix: s.tol_fix,
            max_outer: s.max_outer,
            damping: s.damping,
            seed: s.seed,
            margin: s.margin,
            mode,
        };
        o.validate().map_err(|e| ConfigError(format!("solver: {e}")))?;
        Ok(o)
    }

    fn aux_data(&self, kind: ProblemKind, dim: usize, exact: &Option<Manufactured>, spec: &ProblemSpec) -> Result<AuxData, ConfigError> {
        let b = &self.boundary;
        let has_data = b.x.is_some() || b.y.is_some();
        if kind == ProblemKind::Full {
            if has_data {
                return err("boundary.x: endpoint data only applies to auxiliary problems");
            }
            return Ok(AuxData::PartialJ);
        }
        let pair = |name: &str| -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
            let x = b.x.clone().ok_or_else(|| ConfigError(format!("boundary.x: required for {name} data")))?;
            let y = b.y.clone().ok_or_else(|| ConfigError(format!("boundary.y: required for {name} data")))?;
            if x.len() != dim || y.len() != dim {
                return err(format!("boundary.x: endpoint data must have {dim} entries"));
            }
            Ok((x, y))
        };
        match b.variant.as_str() {
            "dirichlet" if has_data => {
                let (x, y) = pair("dirichlet")?;
                Ok(AuxData::Dirichlet(x, y))
            }
            "neumann" if has_data => {
                let (x, y) = pair("neumann")?;
                Ok(AuxData::Neumann(x, y))
            }
            "neumann" if exact.is_some() => {
                let m = exact.as_ref().unwrap();
                let t = spec.grid.t_end();
                let fx = spec.phi.phi(&m.slope(0.0)).map_err(|e| ConfigError(format!("forcing: {e}")))?;
                let fy = spec.phi.phi(&m.slope(t)).map_err(|e| ConfigError(format!("forcing: {e}")))?;
                Ok(AuxData::Neumann(fx, fy))
            }
            _ if has_data => err(format!("boundary.x: endpoint data needs variant dirichlet or neumann, got {}", b.variant)),
            _ => Ok(AuxData::PartialJ),
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
