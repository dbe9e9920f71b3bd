//! The auxiliary problem `-[phi(u')]' + u = h` with Neumann, Dirichlet, or
//! `partial j` boundary conditions.
//!
//! Every solver works on the same discrete equations as [`crate::energy`] in
//! auxiliary mode, so the computed `theta` is the exact gradient of the convex
//! value function `V(x, y) = min { E(u) : u(0) = x, u(T) = y }`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::boundary::BoundaryFunctional;
use crate::energy::{discrete_equation, energy_eval, smooth_gradient, smooth_hessian, EnergyMode};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::BlockTridiag;
use crate::phi::PhiMap;
use crate::potential::{Forcing, PotentialField, ProblemSpec};
use crate::vecops::{dist, dot, norm};

#[derive(Clone, Debug)]
pub struct AuxOptions {
    /// Stopping tolerance of the outer splitting (gradient-mapping norm).
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Starting endpoint pair for the splitting.
    pub start: Option<(Vec<f64>, Vec<f64>)>,
    pub probe_seed: u64,
}

impl Default for AuxOptions {
    fn default() -> Self {
        AuxOptions {
            tol: 1e-10,
            max_outer: 1000,
            max_inner: 10_000,
            start: None,
            probe_seed: 0,
        }
    }
}

const INNER_TOL: f64 = 1e-11;

/// Problem data shared by all auxiliary solves: `phi`, grid, and `h` at the nodes.
pub struct AuxContext {
    spec: ProblemSpec,
    h: Vec<f64>,
}

impl AuxContext {
    pub fn new(phi: &PhiMap, h: &GridFunction) -> Result<Self> {
        let spec = ProblemSpec::new(
            phi.clone(),
            BoundaryFunctional::neumann(),
            PotentialField::Zero,
            Forcing::None,
            h.dim(),
            *h.grid(),
        )?;
        Ok(AuxContext {
            spec,
            h: h.values().to_vec(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.spec.grid
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn phi(&self) -> &PhiMap {
        &self.spec.phi
    }

    fn mode(&self) -> EnergyMode<'_> {
        EnergyMode::Auxiliary(&self.h)
    }

    fn h_sup(&self) -> f64 {
        self.h.chunks(self.dim()).map(norm).fold(0.0, f64::max)
    }

    /// `int h` by the trapezoid rule.
    pub fn h_integral(&self) -> Vec<f64> {
        let n = self.dim();
        let mut s = vec![0.0; n];
        for i in 0..self.grid().nodes() {
            let w = self.grid().weight(i);
            for k in 0..n {
                s[k] += w * self.h[i * n + k];
            }
        }
        s
    }

    /// Auxiliary energy without the boundary term.
    pub fn value(&self, u: &GridFunction) -> f64 {
        let e = energy_eval(&self.spec, u, self.mode());
        e.psi + e.quad_term.unwrap_or(0.0)
    }

    fn cap(&self) -> f64 {
        self.phi().radius() * (1.0 - self.phi().margin())
    }

    fn strip_limit(&self) -> f64 {
        self.grid().t_end() * self.cap()
    }

    /// Neumann solution with `phi(u')(0) = x`, `phi(u')(T) = y`.
    pub fn solve_neumann(&self, x: &[f64], y: &[f64], max_inner: usize) -> Result<GridFunction> {
        self.check_dims(x, y)?;
        match self.picard_neumann(x, y, max_inner) {
            Ok(u) => Ok(u),
            Err(_) => {
                let init = GridFunction::constant(*self.grid(), &self.neumann_mean(x, y));
                self.newton(Ends::Fluxes(x, y), init)
            }
        }
    }

    /// `(y - x + int h) / T`, the mean every Neumann solution must have.
    fn neumann_mean(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let t = self.grid().t_end();
        let hi = self.h_integral();
        (0..self.dim()).map(|k| (y[k] - x[k] + hi[k]) / t).collect()
    }

    /// Damped Picard iteration: rebuild the fluxes from the current curve,
    /// integrate `phi^{-1}`, then fix `u(0)` through the mean identity.
    fn picard_neumann(&self, x: &[f64], y: &[f64], cap: usize) -> Result<GridFunction> {
        let grid = *self.grid();
        let n = self.dim();
        let m = grid.intervals();
        let dt = grid.dt();
        let target = self.neumann_mean(x, y);
        let mut u = GridFunction::constant(grid, &target);
        let mut damping: f64 = 0.5;
        let mut prev = f64::INFINITY;
        let mut next = u.clone();
        for _ in 0..cap {
            let mut q = x.to_vec();
            let mut v = vec![0.0; (m + 1) * n];
            for i in 0..m {
                let w = if i == 0 { 0.5 * dt } else { dt };
                for k in 0..n {
                    q[k] += w * (u.node(i)[k] - self.h[i * n + k]);
                }
                let s = self.phi().inverse(&q)?;
                for k in 0..n {
                    v[(i + 1) * n + k] = v[i * n + k] + dt * s[k];
                }
            }
            let mut mean_v = vec![0.0; n];
            for i in 0..=m {
                let w = grid.weight(i);
                for k in 0..n {
                    mean_v[k] += w * v[i * n + k];
                }
            }
            let t = grid.t_end();
            let u0: Vec<f64> = (0..n).map(|k| target[k] - mean_v[k] / t).collect();
            for i in 0..=m {
                for k in 0..n {
                    next.node_mut(i)[k] = u0[k] + v[i * n + k];
                }
            }
            let res = next.sup_distance(&u);
            if !res.is_finite() {
                break;
            }
            if res <= 1e-13 * (1.0 + u.sup_norm()) {
                return Ok(next);
            }
            if res > prev {
                damping = (damping * 0.5).max(1.0 / 64.0);
            }
            prev = res;
            for (a, b) in u.values_mut().iter_mut().zip(next.values()) {
                *a += damping * (b - *a);
            }
        }
        Err(Error::Convergence {
            what: "Neumann Picard iteration",
            iterations: cap,
            residual: prev,
        })
    }

    /// Dirichlet solution with `u(0) = x`, `u(T) = y`.
    pub fn solve_dirichlet(
        &self,
        x: &[f64],
        y: &[f64],
        warm: Option<&GridFunction>,
    ) -> Result<GridFunction> {
        self.check_dims(x, y)?;
        let t = self.grid().t_end();
        let a = self.phi().radius();
        let gap = dist(x, y);
        if gap >= self.strip_limit() {
            return Err(Error::Infeasible { gap: gap - t * a });
        }
        let grid = *self.grid();
        let linear = GridFunction::from_fn(grid, self.dim(), |s| {
            let r = s / t;
            x.iter().zip(y).map(|(p, q)| p + r * (q - p)).collect()
        });
        let init = match warm {
            Some(w) if w.grid() == self.grid() && w.dim() == self.dim() => {
                let mut c = w.clone();
                let (w0, wm) = (w.first().to_vec(), w.last().to_vec());
                for i in 0..grid.nodes() {
                    let r = grid.t(i) / t;
                    for k in 0..self.dim() {
                        c.node_mut(i)[k] += (1.0 - r) * (x[k] - w0[k]) + r * (y[k] - wm[k]);
                    }
                }
                if c.max_slope() < self.cap() {
                    c
                } else {
                    linear
                }
            }
            _ => linear,
        };
        self.newton(Ends::Pinned, init)
    }

    /// `theta(x, y) = (-phi(u')(0), phi(u')(T))` for the Dirichlet solution.
    pub fn theta(&self, x: &[f64], y: &[f64], warm: Option<&GridFunction>) -> Result<ThetaEval> {
        let u = self.solve_dirichlet(x, y, warm)?;
        let eq = discrete_equation(&self.spec, &u, self.mode())?;
        Ok(ThetaEval {
            theta: (eq.flux0.iter().map(|v| -v).collect(), eq.flux_t.clone()),
            value: self.value(&u),
            u,
        })
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(invalid(format!(
                "endpoint data must have dimension {}, got {} and {}",
                self.dim(),
                x.len(),
                y.len()
            )));
        }
        Ok(())
    }

    fn merit(&self, u: &GridFunction, ends: &Ends<'_>) -> f64 {
        let base = self.value(u);
        match ends {
            Ends::Pinned => base,
            Ends::Fluxes(x, y) => base + dot(x, u.first()) - dot(y, u.last()),
        }
    }

    fn gradient(&self, u: &GridFunction, ends: &Ends<'_>) -> Result<Vec<f64>> {
        let n = self.dim();
        let m = self.grid().intervals();
        let mut g = smooth_gradient(&self.spec, u, self.mode())?;
        match ends {
            Ends::Pinned => {
                g[..n].iter_mut().for_each(|v| *v = 0.0);
                g[m * n..].iter_mut().for_each(|v| *v = 0.0);
            }
            Ends::Fluxes(x, y) => {
                for k in 0..n {
                    g[k] += x[k];
                    g[m * n + k] -= y[k];
                }
            }
        }
        Ok(g)
    }

    /// Residual of the discrete equations scaled to equation units.
    fn scaled_residual(&self, g: &[f64]) -> f64 {
        let n = self.dim();
        let grid = self.grid();
        g.chunks(n)
            .enumerate()
            .map(|(i, gi)| norm(gi) / grid.weight(i))
            .fold(0.0, f64::max)
    }

    /// Newton's method on the strictly convex auxiliary energy.
    fn newton(&self, ends: Ends<'_>, mut u: GridFunction) -> Result<GridFunction> {
        let n = self.dim();
        let m = self.grid().intervals();
        let scale = 1.0 + self.h_sup();
        let mut g = self.gradient(&u, &ends)?;
        let mut res = self.scaled_residual(&g);
        let mut f = self.merit(&u, &ends);
        let mut best = (u.clone(), res);
        let mut stalled = 0;
        let floor = |u: &GridFunction| 1e-8 * (scale + u.sup_norm());
        for it in 0..200 {
            let tol = INNER_TOL * (scale + u.sup_norm());
            if res <= tol {
                return Ok(u);
            }
            let h = smooth_hessian(&self.spec, &u, self.mode());
            let step = match ends {
                Ends::Pinned => {
                    let interior = BlockTridiag {
                        block: n,
                        diag: h.diag[1..m].to_vec(),
                        off: h.off[1..m - 1].to_vec(),
                    };
                    let rhs = DMatrix::from_iterator((m - 1) * n, 1, g[n..m * n].iter().map(|v| -v));
                    let s = interior.solve(&rhs)?;
                    let mut full = vec![0.0; (m + 1) * n];
                    full[n..m * n].copy_from_slice(s.as_slice());
                    full
                }
                Ends::Fluxes(..) => {
                    let rhs = DMatrix::from_iterator((m + 1) * n, 1, g.iter().map(|v| -v));
                    h.solve(&rhs)?.as_slice().to_vec()
                }
            };
            let slope = dot(&g, &step);
            let f_prev = f;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = u.clone();
                for (a, s) in trial.values_mut().iter_mut().zip(&step) {
                    *a += alpha * s;
                }
                if trial.max_slope() < self.cap() {
                    let ft = self.merit(&trial, &ends);
                    let gt = self.gradient(&trial, &ends)?;
                    let rt = self.scaled_residual(&gt);
                    let armijo = ft <= f + 1e-4 * alpha * slope;
                    let flat = ft <= f + 1e-13 * (1.0 + f.abs()) && rt < res;
                    if armijo || flat {
                        u = trial;
                        g = gt;
                        f = ft;
                        res = rt;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if res < best.1 {
                best = (u.clone(), res);
            }
            if f_prev - f <= 1e-15 * (1.0 + f.abs()) && res >= best.1 {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if !accepted || stalled >= 3 {
                // rounding floor: accept a tiny residual, otherwise report
                if best.1 <= floor(&best.0) {
                    return Ok(best.0);
                }
                return Err(Error::Convergence {
                    what: "auxiliary Newton line search",
                    iterations: it,
                    residual: res,
                });
            }
        }
        Err(Error::Convergence {
            what: "auxiliary Newton iteration",
            iterations: 200,
            residual: res,
        })
    }
}

enum Ends<'a> {
    Pinned,
    Fluxes(&'a [f64], &'a [f64]),
}

#[derive(Clone, Debug)]
pub struct ThetaEval {
    pub theta: (Vec<f64>, Vec<f64>),
    /// `V(x, y)`: auxiliary energy of the Dirichlet solution.
    pub value: f64,
    pub u: GridFunction,
}

pub fn solve_neumann(phi: &PhiMap, h: &GridFunction, x: &[f64], y: &[f64]) -> Result<GridFunction> {
    AuxContext::new(phi, h)?.solve_neumann(x, y, AuxOptions::default().max_inner)
}

pub fn solve_dirichlet(phi: &PhiMap, h: &GridFunction, x: &[f64], y: &[f64]) -> Result<GridFunction> {
    AuxContext::new(phi, h)?.solve_dirichlet(x, y, None)
}

pub fn theta_eval(phi: &PhiMap, h: &GridFunction, x: &[f64], y: &[f64]) -> Result<ThetaEval> {
    AuxContext::new(phi, h)?.theta(x, y, None)
}

#[derive(Clone, Debug)]
pub struct AuxSolution {
    pub u: GridFunction,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `phi(u')(0)` and `phi(u')(T)`.
    pub flux0: Vec<f64>,
    pub flux_t: Vec<f64>,
    pub iterations: usize,
    /// Normalized sampled subgradient violation of `(flux0, -flux_t)` at `(x, y)`.
    pub inclusion_residual: f64,
    /// Gradient-mapping norm per accepted step.
    pub history: Vec<f64>,
}

/// Forward-backward splitting on `0 in dj(x, y) + theta(x, y)`.
pub fn solve_p_partial_j(
    phi: &PhiMap,
    j: &BoundaryFunctional,
    h: &GridFunction,
    opts: &AuxOptions,
) -> Result<AuxSolution> {
    let ctx = AuxContext::new(phi, h)?;
    solve_p_partial_j_ctx(&ctx, j, opts, None)
}

pub(crate) fn solve_p_partial_j_ctx(
    ctx: &AuxContext,
    j: &BoundaryFunctional,
    opts: &AuxOptions,
    warm: Option<&GridFunction>,
) -> Result<AuxSolution> {
    let n = ctx.dim();
    let limit = ctx.strip_limit();
    let admissible = |x: &[f64], y: &[f64]| dist(x, y) < limit && j.eval(x, y).is_finite();
    let (mut x, mut y) = match &opts.start {
        Some((x0, y0)) => {
            ctx.check_dims(x0, y0)?;
            j.project(x0, y0)
        }
        None => (vec![0.0; n], vec![0.0; n]),
    };
    if !admissible(&x, &y) {
        x = vec![0.0; n];
        y = vec![0.0; n];
    }
    let mut ev = ctx.theta(&x, &y, warm)?;
    let mut lam = 1.0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_outer {
        iterations = it + 1;
        let (tx, ty) = (&ev.theta.0, &ev.theta.1);
        let mut accepted = None;
        while lam > 1e-14 {
            let wx: Vec<f64> = (0..n).map(|k| x[k] - lam * tx[k]).collect();
            let wy: Vec<f64> = (0..n).map(|k| y[k] - lam * ty[k]).collect();
            let (px, py) = j.prox(&wx, &wy, lam)?;
            if !admissible(&px, &py) {
                lam *= 0.5;
                continue;
            }
            let next = match ctx.theta(&px, &py, Some(&ev.u)) {
                Ok(e) => e,
                Err(Error::Convergence { .. }) | Err(Error::Infeasible { .. }) => {
                    lam *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let dx: Vec<f64> = (0..n).map(|k| px[k] - x[k]).collect();
            let dy: Vec<f64> = (0..n).map(|k| py[k] - y[k]).collect();
            let d2 = dot(&dx, &dx) + dot(&dy, &dy);
            let model = ev.value + dot(tx, &dx) + dot(ty, &dy) + d2 / (2.0 * lam);
            // the gradient test stays meaningful once value differences hit rounding
            let curvature = dot(&dx, &(0..n).map(|k| next.theta.0[k] - tx[k]).collect::<Vec<_>>())
                + dot(&dy, &(0..n).map(|k| next.theta.1[k] - ty[k]).collect::<Vec<_>>());
            if next.value <= model || curvature <= d2 / (2.0 * lam) {
                accepted = Some((px, py, next, libm::sqrt(d2)));
                break;
            }
            lam *= 0.5;
        }
        let Some((px, py, next, step)) = accepted else {
            return Err(Error::Convergence {
                what: "forward-backward step size",
                iterations: it,
                residual: history.last().copied().unwrap_or(f64::NAN),
            });
        };
        let gm = step / lam;
        history.push(gm);
        let theta_norm = libm::sqrt(dot(tx, tx) + dot(ty, ty));
        x = px;
        y = py;
        ev = next;
        if gm <= opts.tol * (1.0 + theta_norm) {
            converged = true;
            break;
        }
        lam = (lam * 2.0).min(1e8);
    }
    if !converged {
        return Err(Error::Convergence {
            what: "forward-backward splitting",
            iterations,
            residual: history.last().copied().unwrap_or(f64::NAN),
        });
    }
    let eq = discrete_equation(&ctx.spec, &ev.u, ctx.mode())?;
    let xi = (eq.flux0.clone(), eq.flux_t.iter().map(|v| -v).collect::<Vec<_>>());
    let scale = 1.0 + libm::sqrt(dot(&xi.0, &xi.0) + dot(&xi.1, &xi.1));
    let inclusion_residual = j
        .subdifferential_residual((&x, &y), (&xi.0, &xi.1), 1e-6, 32, opts.probe_seed)?
        / scale;
    Ok(AuxSolution {
        u: ev.u,
        x,
        y,
        flux0: eq.flux0,
        flux_t: eq.flux_t,
        iterations,
        inclusion_residual,
        history,
    })
}

#[derive(Clone, Debug)]
pub struct LambdaFixedPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Neumann solution with fluxes `(x - xi, eta - y)`.
    pub u: GridFunction,
    pub iterations: usize,
    /// `2 Q_bar(xi, eta)`.
    pub bound: f64,
}

/// Damped iteration of `Lambda(x, y) = (u(0), u(T))`, `u` the Neumann solution
/// with fluxes `(x - xi, eta - y)`.
pub fn lambda_fixed_point(
    phi: &PhiMap,
    h: &GridFunction,
    xi: &[f64],
    eta: &[f64],
    opts: &AuxOptions,
) -> Result<LambdaFixedPoint> {
    let ctx = AuxContext::new(phi, h)?;
    ctx.check_dims(xi, eta)?;
    let n = ctx.dim();
    let t = ctx.grid().t_end();
    let a = phi.radius();
    let q_bar = (norm(xi) + norm(eta) + norm(&ctx.h_integral()) + t * t * a) / t;
    let mut z = vec![0.0; 2 * n];
    let mut tau: f64 = 0.5;
    let mut prev = f64::INFINITY;
    for it in 0..opts.max_outer {
        let fx: Vec<f64> = (0..n).map(|k| z[k] - xi[k]).collect();
        let fy: Vec<f64> = (0..n).map(|k| eta[k] - z[n + k]).collect();
        let u = ctx.solve_neumann(&fx, &fy, opts.max_inner)?;
        let image: Vec<f64> = u.first().iter().chain(u.last()).copied().collect();
        let res = dist(&image, &z);
        if res <= opts.tol * (1.0 + norm(&z)) {
            let (x, y) = (image[..n].to_vec(), image[n..].to_vec());
            if norm(&x) + norm(&y) > 2.0 * q_bar * (1.0 + 1e-9) {
                return Err(Error::Invariant(format!(
                    "fixed point violates |x| + |y| <= 2 Q_bar = {:.6e}",
                    2.0 * q_bar
                )));
            }
            return Ok(LambdaFixedPoint {
                x,
                y,
                u,
                iterations: it + 1,
                bound: 2.0 * q_bar,
            });
        }
        if res > prev {
            tau = (tau * 0.5).max(1.0 / 64.0);
        }
        prev = res;
        for (zi, li) in z.iter_mut().zip(&image) {
            *zi += tau * (li - *zi);
        }
    }
    Err(Error::Convergence {
        what: "Lambda fixed-point iteration",
        iterations: opts.max_outer,
        residual: prev,
    })
}
