//! Full problem solvers: energy minimization by proximal Newton steps and the
//! critical-point iteration `u -> S(u + grad F(u))`, plus regime classification.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::auxiliary::{solve_p_partial_j_ctx, AuxContext, AuxOptions, AuxSolution};
use crate::boundary::BoundaryFunctional;
use crate::eigen::rayleigh_lambda1;
use crate::energy::{energy_eval, smooth_gradient, smooth_hessian, EnergyMode};
use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;
use crate::linalg::{BlockTridiag, EndpointReduction};
use crate::potential::ProblemSpec;
use crate::vecops::{dot, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    Minimize,
    CriticalPoint,
    Auto,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol_grad: f64,
    pub tol_fix: f64,
    pub max_outer: usize,
    /// Damping of the fixed-point step.
    pub damping: f64,
    pub seed: u64,
    /// Iterates keep `max |Du| <= a (1 - margin)`.
    pub margin: f64,
    pub mode: SolverMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_grad: 1e-9,
            tol_fix: 1e-9,
            max_outer: 500,
            damping: 0.5,
            seed: 0,
            margin: 1e-6,
            mode: SolverMode::Auto,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_grad > 0.0
            && self.tol_fix > 0.0
            && self.max_outer >= 1
            && self.damping > 0.0
            && self.damping <= 1.0
            && self.margin > 0.0
            && self.margin < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(alloc::format!("bad solver options {self:?}")))
        }
    }
}

/// Result of a solver run. A run that stalls keeps its best iterate with
/// `converged = false`; [`SolveOutcome::require`] turns that into an error.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub u: GridFunction,
    pub converged: bool,
    pub iterations: usize,
    /// Final stopping residual.
    pub residual: f64,
    /// Energy per iterate (minimization) or fixed-point residual per iterate.
    pub history: Vec<f64>,
    pub what: &'static str,
}

impl SolveOutcome {
    pub fn require(self) -> Result<SolveOutcome> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Convergence {
                what: self.what,
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

/// `u = 0`, which lies in every admissible domain.
pub fn default_init(spec: &ProblemSpec) -> GridFunction {
    GridFunction::zeros(spec.grid, spec.dim)
}

/// Project the endpoints onto `D(j)` and shrink toward zero until feasible.
pub fn project_init(spec: &ProblemSpec, init: &GridFunction, margin: f64) -> GridFunction {
    let mut u = init.clone();
    let (x, y) = spec.boundary.project(init.first(), init.last());
    let m = spec.grid.intervals();
    u.node_mut(0).copy_from_slice(&x);
    u.node_mut(m).copy_from_slice(&y);
    let cap = spec.phi.radius() * (1.0 - margin);
    let mut s = 1.0;
    for _ in 0..60 {
        let mut c = u.clone();
        c.values_mut().iter_mut().for_each(|v| *v *= s);
        if c.max_slope() < cap && spec.boundary.eval(c.first(), c.last()).is_finite() {
            return c;
        }
        s *= 0.5;
    }
    default_init(spec)
}

fn endpoints(u: &GridFunction) -> Vec<f64> {
    u.first().iter().chain(u.last()).copied().collect()
}

/// Max of the interior equation residual and the endpoint prox-gradient residual.
pub(crate) fn prox_residual(j: &BoundaryFunctional, u: &GridFunction, g: &[f64]) -> Result<f64> {
    let n = u.dim();
    let grid = u.grid();
    let m = grid.intervals();
    let mut res: f64 = 0.0;
    for i in 1..m {
        res = res.max(norm(&g[i * n..(i + 1) * n]) / grid.weight(i));
    }
    let (x, y) = (u.first(), u.last());
    let wx: Vec<f64> = (0..n).map(|k| x[k] - g[k]).collect();
    let wy: Vec<f64> = (0..n).map(|k| y[k] - g[m * n + k]).collect();
    let (px, py) = j.prox(&wx, &wy, 1.0)?;
    let d: Vec<f64> = (0..n).map(|k| x[k] - px[k]).chain((0..n).map(|k| y[k] - py[k])).collect();
    Ok(res.max(norm(&d)))
}

fn shifted_hessian(h: &BlockTridiag, weights: &[f64], mu: f64) -> BlockTridiag {
    let mut out = h.clone();
    for (d, w) in out.diag.iter_mut().zip(weights) {
        for k in 0..h.block {
            d[(k, k)] += mu * w;
        }
    }
    out
}

/// `min 1/2 d^T S d - r^T d + j(e + d)` over the endpoint step `d`.
fn endpoint_subproblem(j: &BoundaryFunctional, s: &DMatrix<f64>, r: &DVector<f64>, e: &[f64]) -> Result<Vec<f64>> {
    let n2 = e.len();
    let n = n2 / 2;
    if j.smooth().is_none() && j.set().is_affine() {
        let b = j.set().tangent_basis(&e[..n], &e[n..]);
        if b.ncols() == 0 {
            return Ok(e.iter().map(|v| -v).collect());
        }
        let bsb = b.transpose() * s * &b;
        let c = bsb
            .cholesky()
            .ok_or(Error::Convergence {
                what: "restricted endpoint system",
                iterations: 0,
                residual: f64::NAN,
            })?
            .solve(&(b.transpose() * r));
        return Ok((b * c).as_slice().to_vec());
    }
    let lip = s.clone().symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lip;
    let ev = DVector::from_column_slice(e);
    let mut w = ev.clone();
    let mut z = w.clone();
    let mut t: f64 = 1.0;
    let scale = 1.0 + r.norm();
    for _ in 0..20_000 {
        let grad = s * (&z - &ev) - r;
        let trial = &z - grad * step;
        let (px, py) = j.prox(&trial.as_slice()[..n], &trial.as_slice()[n..], step)?;
        let wn = DVector::from_iterator(n2, px.into_iter().chain(py));
        let diff = (&wn - &w).norm();
        let restart = (&z - &wn).dot(&(&wn - &w)) > 0.0;
        let tn = if restart { 1.0 } else { 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t)) };
        z = if restart { wn.clone() } else { &wn + (&wn - &w) * ((t - 1.0) / tn) };
        t = tn;
        w = wn;
        if diff * lip <= 1e-13 * scale {
            break;
        }
    }
    Ok((w - ev).as_slice().to_vec())
}

/// Proximal Newton minimization of `E = Psi + J + F` starting from `init`.
pub fn minimize_energy(spec: &ProblemSpec, init: &GridFunction, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let j = &spec.boundary;
    let n = spec.dim;
    let weights = spec.grid.weights();
    let cap = spec.phi.radius() * (1.0 - opts.margin);
    let mut u = project_init(spec, init, opts.margin);
    let mut e = energy_eval(spec, &u, EnergyMode::Full).total;
    let mut g = smooth_gradient(spec, &u, EnergyMode::Full)?;
    let mut res = prox_residual(j, &u, &g)?;
    let mut history = vec![e];
    let outcome = |u: GridFunction, converged, iterations, residual, history| SolveOutcome {
        u,
        converged,
        iterations,
        residual,
        history,
        what: "energy minimization",
    };
    for it in 0..opts.max_outer {
        if res <= opts.tol_grad {
            return Ok(outcome(u, true, it, res, history));
        }
        let h = smooth_hessian(spec, &u, EnergyMode::Full);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let ends = endpoints(&u);
        let mut mu = 0.0;
        let mut direction = None;
        for _ in 0..40 {
            let hm = shifted_hessian(&h, &weights, mu);
            if let Ok(red) = EndpointReduction::new(&hm, &rhs) {
                if red.schur.clone().cholesky().is_some() {
                    let delta = endpoint_subproblem(j, &red.schur, &red.rhs, &ends)?;
                    direction = Some((red.expand(&delta), delta));
                    break;
                }
            }
            mu = if mu == 0.0 { 1e-6 } else { mu * 10.0 };
        }
        let Some((d, delta)) = direction else {
            return Ok(outcome(u, false, it, res, history));
        };
        let target: Vec<f64> = ends.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let jdiff = j.eval(&target[..n], &target[n..]) - j.eval(&ends[..n], &ends[n..]);
        let decrease = dot(&g, &d) + jdiff;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let mut trial = u.clone();
            for (a, s) in trial.values_mut().iter_mut().zip(&d) {
                *a += alpha * s;
            }
            if trial.max_slope() < cap {
                let et = energy_eval(spec, &trial, EnergyMode::Full).total;
                if et.is_finite() {
                    let armijo = et <= e + 1e-4 * alpha * decrease.min(0.0);
                    let flat = et <= e + 1e-12 * (1.0 + e.abs());
                    if armijo || flat {
                        let gt = smooth_gradient(spec, &trial, EnergyMode::Full)?;
                        let rt = prox_residual(j, &trial, &gt)?;
                        if armijo || rt < res {
                            u = trial;
                            e = et;
                            g = gt;
                            res = rt;
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            alpha *= 0.5;
        }
        history.push(e);
        if !accepted {
            return Ok(outcome(u, false, it, res, history));
        }
    }
    let conv = res <= opts.tol_grad;
    Ok(outcome(u, conv, opts.max_outer, res, history))
}

/// `h = u + grad F_eff(u)` at the nodes.
fn shifted_forcing(spec: &ProblemSpec, u: &GridFunction) -> GridFunction {
    let grid = spec.grid;
    let mut h = u.clone();
    for i in 0..grid.nodes() {
        let gi = spec.grad_eff(grid.t(i), u.node(i));
        for (a, b) in h.node_mut(i).iter_mut().zip(gi) {
            *a += b;
        }
    }
    h
}

struct FixedPointEval {
    image: AuxSolution,
    residual: f64,
}

fn fixed_point_eval(spec: &ProblemSpec, u: &GridFunction, warm: Option<&AuxSolution>, seed: u64) -> Result<FixedPointEval> {
    let h = shifted_forcing(spec, u);
    let ctx = AuxContext::new(&spec.phi, &h)?;
    let opts = AuxOptions {
        tol: 1e-12,
        start: warm.map(|w| (w.x.clone(), w.y.clone())),
        probe_seed: seed,
        ..AuxOptions::default()
    };
    let image = solve_p_partial_j_ctx(&ctx, &spec.boundary, &opts, warm.map(|w| &w.u))?;
    let residual = image.u.sup_distance(u);
    Ok(FixedPointEval { image, residual })
}

/// Newton step on the critical-point equations with the endpoints restricted
/// to the tangent space of `D(j)` at the current endpoints.
fn critical_newton_step(spec: &ProblemSpec, u: &GridFunction) -> Option<Vec<f64>> {
    let n = spec.dim;
    let g = smooth_gradient(spec, u, EnergyMode::Full).ok()?;
    let h = smooth_hessian(spec, u, EnergyMode::Full);
    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    let red = EndpointReduction::new(&h, &rhs).ok()?;
    let (x, y) = (u.first(), u.last());
    let mut s = red.schur.clone();
    let mut r = red.rhs.clone();
    if let Some(sm) = spec.boundary.smooth() {
        s += sm.hessian(x, y);
        let (gx, gy) = sm.gradient(x, y);
        for k in 0..n {
            r[k] -= gx[k];
            r[n + k] -= gy[k];
        }
    }
    let b = spec.boundary.set().tangent_basis(x, y);
    let delta = if b.ncols() == 0 {
        DVector::zeros(2 * n)
    } else {
        let c = (b.transpose() * &s * &b).lu().solve(&(b.transpose() * r))?;
        b * c
    };
    let d = red.expand(delta.as_slice());
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Damped iteration `u <- (1 - rho) u + rho S(u + grad F(u))`, with Newton
/// steps on the critical-point equations tried first and kept when they
/// lower the fixed-point residual.
pub fn critical_point_iteration(spec: &ProblemSpec, init: &GridFunction, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let cap = spec.phi.radius() * (1.0 - opts.margin);
    let mut u = project_init(spec, init, opts.margin);
    let mut cur = fixed_point_eval(spec, &u, None, opts.seed)?;
    let mut history = vec![cur.residual];
    let mut damping = opts.damping;
    for it in 0..opts.max_outer {
        if cur.residual <= opts.tol_fix {
            return Ok(SolveOutcome {
                u: cur.image.u,
                converged: true,
                iterations: it,
                residual: cur.residual,
                history,
                what: "critical-point iteration",
            });
        }
        let mut next = None;
        if let Some(d) = critical_newton_step(spec, &u) {
            let mut alpha = 1.0;
            for _ in 0..6 {
                let mut trial = u.clone();
                for (a, s) in trial.values_mut().iter_mut().zip(&d) {
                    *a += alpha * s;
                }
                let admissible = trial.max_slope() < cap
                    && spec.boundary.eval(trial.first(), trial.last()).is_finite();
                if admissible {
                    if let Ok(ev) = fixed_point_eval(spec, &trial, Some(&cur.image), opts.seed) {
                        if ev.residual < cur.residual {
                            next = Some((trial, ev));
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
        }
        let (nu, nev) = match next {
            Some(p) => p,
            None => {
                let mut trial = u.clone();
                for (a, b) in trial.values_mut().iter_mut().zip(cur.image.u.values()) {
                    *a += damping * (b - *a);
                }
                let ev = fixed_point_eval(spec, &trial, Some(&cur.image), opts.seed)?;
                if ev.residual > cur.residual {
                    damping = (damping * 0.5).max(1.0 / 64.0);
                }
                (trial, ev)
            }
        };
        u = nu;
        cur = nev;
        history.push(cur.residual);
    }
    let converged = cur.residual <= opts.tol_fix;
    Ok(SolveOutcome {
        u: cur.image.u,
        converged,
        iterations: opts.max_outer,
        residual: cur.residual,
        history,
        what: "critical-point iteration",
    })
}

/// Dispatch on `opts.mode`; `Auto` minimizes and falls back to the
/// critical-point route when minimization stalls.
pub fn solve(spec: &ProblemSpec, init: &GridFunction, opts: &SolverOptions) -> Result<SolveOutcome> {
    match opts.mode {
        SolverMode::Minimize => minimize_energy(spec, init, opts),
        SolverMode::CriticalPoint => critical_point_iteration(spec, init, opts),
        SolverMode::Auto => {
            let first = minimize_energy(spec, init, opts)?;
            if first.converged {
                return Ok(first);
            }
            let second = critical_point_iteration(spec, &first.u, opts)?;
            Ok(if second.converged { second } else { first })
        }
    }
}

/// Shift by integer multiples of the periods so that each mean component
/// lands in `[0, omega_i)`.
pub fn reduce_periodic(spec: &ProblemSpec, u: &GridFunction) -> Result<GridFunction> {
    let periods = spec
        .periods
        .as_ref()
        .ok_or_else(|| domain("periodic reduction needs declared periods"))?;
    if !spec.boundary.shift_invariant_diagonal()? {
        return Err(domain("periodic reduction needs a diagonal-shift-invariant boundary"));
    }
    let mean = u.mean();
    let shift: Vec<f64> = mean
        .iter()
        .zip(periods)
        .map(|(m, w)| -libm::floor(m / w) * w)
        .collect();
    Ok(u.shifted(&shift))
}

#[derive(Clone, Debug)]
pub struct SaddleCertificate {
    pub is_saddle: bool,
    pub witness: Option<Vec<f64>>,
    pub solution_energy: f64,
    pub witness_energy: Option<f64>,
}

/// Search constants `x` with `(x, x) in D(j)` on a radial ladder for
/// `E(x) < E(u) - margin`.
pub fn saddle_certificate(spec: &ProblemSpec, u: &GridFunction, seed: u64) -> SaddleCertificate {
    let margin = 1e-8;
    let eu = energy_eval(spec, u, EnergyMode::Full).total;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let radii: Vec<f64> = (0..12).map(|k| 0.5 * libm::pow(2.0, k as f64)).collect();
    for d in spec.ladder_directions(16, seed) {
        for r in &radii {
            let x: Vec<f64> = d.iter().map(|v| r * v).collect();
            if !spec.boundary.eval(&x, &x).is_finite() {
                continue;
            }
            let c = GridFunction::constant(spec.grid, &x);
            let ec = energy_eval(spec, &c, EnergyMode::Full).total;
            if ec < eu - margin && best.as_ref().map_or(true, |(_, b)| ec < *b) {
                best = Some((x, ec));
            }
        }
    }
    SaddleCertificate {
        is_saddle: best.is_some(),
        witness_energy: best.as_ref().map(|b| b.1),
        witness: best.map(|b| b.0),
        solution_energy: eu,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeFlag {
    Lambda1Positive,
    ConeDiagonalTrivial,
    BoundedProjection,
    PeriodicReduction,
    AntiCoercive,
    SemiCoerciveSaddle,
    CoerciveLess,
    CoercivePlus,
    Unknown,
}

impl RegimeFlag {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeFlag::Lambda1Positive => "Lambda1Positive",
            RegimeFlag::ConeDiagonalTrivial => "ConeDiagonalTrivial",
            RegimeFlag::BoundedProjection => "BoundedProjection",
            RegimeFlag::PeriodicReduction => "PeriodicReduction",
            RegimeFlag::AntiCoercive => "AntiCoercive",
            RegimeFlag::SemiCoerciveSaddle => "SemiCoerciveSaddle",
            RegimeFlag::CoerciveLess => "CoerciveLess",
            RegimeFlag::CoercivePlus => "CoercivePlus",
            RegimeFlag::Unknown => "Unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LadderSample {
    pub radius: f64,
    /// Mean over directions of `int_0^T F(t, x) dt`.
    pub mean_integral: f64,
    /// Max over directions and nodes of `F(t, x)`.
    pub max_value: f64,
    /// Min over directions and nodes of `F(t, x)`.
    pub min_value: f64,
}

#[derive(Clone, Debug)]
pub struct RegimeReport {
    pub lambda1: Option<f64>,
    pub flags: Vec<RegimeFlag>,
    pub evidence: Vec<LadderSample>,
    /// Quadrature-noise estimate and the threshold derived from it.
    pub noise: f64,
    pub threshold: f64,
    /// `min Phi - Phi(0)` over the closed ball.
    pub phi_gap: f64,
}

impl RegimeReport {
    pub fn has(&self, f: RegimeFlag) -> bool {
        self.flags.contains(&f)
    }
}

/// Evidence-based classification of the hypotheses the existence results need.
pub fn classify_regime(spec: &ProblemSpec, radial_samples: usize, seed: u64) -> RegimeReport {
    let grid = spec.grid;
    let coarse = crate::grid::Grid::new(grid.t_end(), (grid.intervals() / 2).max(2)).unwrap_or(grid);
    let base = 10.0 * (1.0 + grid.t_end() * spec.phi.radius());
    let dirs = spec.ladder_directions(radial_samples.max(1), seed);
    let mut evidence = Vec::new();
    let mut noise: f64 = 0.0;
    for k in 0..4 {
        let r = base * libm::pow(2.0, k as f64);
        let mut sum = 0.0;
        let mut max_value = f64::NEG_INFINITY;
        let mut min_value = f64::INFINITY;
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| r * v).collect();
            let fine = spec.averaged_potential(&x);
            let rough: f64 = (0..coarse.nodes())
                .map(|i| coarse.weight(i) * spec.potential.value(coarse.t(i), &x))
                .sum();
            noise = noise.max((fine - rough).abs());
            sum += fine;
            for i in 0..grid.nodes() {
                let v = spec.potential.value(grid.t(i), &x);
                max_value = max_value.max(v);
                min_value = min_value.min(v);
            }
        }
        evidence.push(LadderSample {
            radius: r,
            mean_integral: sum / dirs.len() as f64,
            max_value,
            min_value,
        });
    }
    let scale = evidence.iter().map(|s| s.mean_integral.abs()).fold(0.0, f64::max);
    let noise = noise + 1e-14 * (1.0 + scale);
    let threshold = 10.0 * noise;
    let phi_gap = spec.phi.min_potential_gap();

    let mut flags = Vec::new();
    let lambda1 = rayleigh_lambda1(&spec.boundary, &grid, spec.dim).ok();
    if lambda1.map_or(false, |l| l > 1e-10) {
        flags.push(RegimeFlag::Lambda1Positive);
    }
    if spec.boundary.cone_diagonal_trivial() {
        flags.push(RegimeFlag::ConeDiagonalTrivial);
    }
    let (px, py) = spec.boundary.projections_bounded();
    if px || py {
        flags.push(RegimeFlag::BoundedProjection);
    }
    if spec.periods.is_some() && spec.boundary.shift_invariant_diagonal().unwrap_or(false) {
        flags.push(RegimeFlag::PeriodicReduction);
    }
    let steps: Vec<f64> = evidence.windows(2).map(|w| w[1].mean_integral - w[0].mean_integral).collect();
    let decreasing = steps.iter().all(|s| *s < -threshold) && evidence[3].mean_integral < -threshold;
    let increasing = steps.iter().all(|s| *s > threshold) && evidence[3].mean_integral > threshold;
    let j_saddle = spec.boundary.vanishes_on_diagonal() && spec.boundary.bounded_on_domain();
    if decreasing {
        flags.push(RegimeFlag::AntiCoercive);
    }
    if increasing && j_saddle {
        flags.push(RegimeFlag::SemiCoerciveSaddle);
    }
    if evidence.iter().all(|s| s.max_value < phi_gap - threshold) {
        flags.push(RegimeFlag::CoerciveLess);
    }
    let min_increasing = evidence.windows(2).all(|w| w[1].min_value - w[0].min_value > threshold);
    if min_increasing && evidence[3].min_value > threshold && j_saddle {
        flags.push(RegimeFlag::CoercivePlus);
    }
    let decisive = flags.iter().any(|f| {
        matches!(
            f,
            RegimeFlag::AntiCoercive | RegimeFlag::SemiCoerciveSaddle | RegimeFlag::CoerciveLess | RegimeFlag::CoercivePlus
        )
    });
    if !decisive {
        flags.push(RegimeFlag::Unknown);
    }
    RegimeReport {
        lambda1,
        flags,
        evidence,
        noise,
        threshold,
        phi_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::phi::PhiMap;
    use crate::potential::{Forcing, PotentialField};
    use core::f64::consts::PI;

    fn spec(boundary: BoundaryFunctional, potential: PotentialField, forcing: Forcing, m: usize) -> ProblemSpec {
        ProblemSpec::new(
            PhiMap::relativistic(1.0).unwrap(),
            boundary,
            potential,
            forcing,
            1,
            Grid::new(1.0, m).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn dirichlet_zero_potential_gives_zero() {
        let s = spec(BoundaryFunctional::dirichlet(), PotentialField::Zero, Forcing::None, 60);
        let init = GridFunction::from_fn(s.grid, 1, |t| vec![0.3 * libm::sin(PI * t)]);
        let out = minimize_energy(&s, &init, &SolverOptions::default()).unwrap().require().unwrap();
        assert!(out.u.sup_norm() < 1e-9);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn neumann_constants_are_fixed_points() {
        let s = spec(BoundaryFunctional::neumann(), PotentialField::Zero, Forcing::None, 40);
        let c = GridFunction::constant(s.grid, &[0.7]);
        let out = critical_point_iteration(&s, &c, &SolverOptions::default()).unwrap().require().unwrap();
        assert!(out.u.sup_distance(&c) < 1e-9);
    }

    #[test]
    fn pendulum_regimes() {
        let h = Forcing::sine_cycles(vec![0.5], 1.0, 1.0);
        let anti = spec(BoundaryFunctional::periodic(), PotentialField::Pendulum { rho: 1.0, beta: PI / 2.0 }, h.clone(), 100);
        assert!(classify_regime(&anti, 8, 0).has(RegimeFlag::AntiCoercive));
        let semi = spec(BoundaryFunctional::periodic(), PotentialField::Pendulum { rho: 1.0, beta: -PI / 2.0 }, h, 100);
        let r = classify_regime(&semi, 8, 0);
        assert!(r.has(RegimeFlag::SemiCoerciveSaddle) && !r.has(RegimeFlag::AntiCoercive));
        let d = spec(BoundaryFunctional::dirichlet(), PotentialField::Zero, Forcing::None, 100);
        let r = classify_regime(&d, 4, 0);
        assert!(r.has(RegimeFlag::Lambda1Positive));
        assert!((r.lambda1.unwrap() / (PI * PI) - 1.0).abs() < 0.02);
    }

    #[test]
    fn periodic_reduction_shifts_mean() {
        let s = spec(BoundaryFunctional::periodic(), PotentialField::PendulumComponents { rho: 1.0 }, Forcing::None, 40)
            .with_periods(vec![2.0 * PI])
            .unwrap();
        let u = GridFunction::from_fn(s.grid, 1, |t| vec![5.0 * PI + 0.1 * libm::cos(2.0 * PI * t)]);
        let r = reduce_periodic(&s, &u).unwrap();
        assert!((r.mean()[0] - PI).abs() < 1e-12);
        let d = spec(BoundaryFunctional::dirichlet(), PotentialField::Zero, Forcing::None, 40);
        assert!(reduce_periodic(&d, &u).is_err());
    }
}
