//! Discrete energies, their smooth gradients, and the matching discrete equations.
//!
//! With `q_i = phi(Du_i)` on midpoints and trapezoid weights `w_i`, the smooth
//! gradient is `q_{i-1} - q_i - w_i r_i`, where `r = grad F_eff` for the full
//! energy and `r = h - u` for the auxiliary one. Interior rows divided by `dt`
//! give the conservative residual; the two end rows give the endpoint fluxes.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::grid::GridFunction;
use crate::linalg::BlockTridiag;
use crate::potential::ProblemSpec;
use crate::vecops::norm;

#[derive(Clone, Copy, Debug)]
pub enum EnergyMode<'a> {
    /// `Psi + J + F`.
    Full,
    /// `Psi + J + |u|^2/2 - <h, u>` with `h` given at the nodes (row-major).
    Auxiliary(&'a [f64]),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub psi: f64,
    pub j_term: f64,
    pub f_term: f64,
    pub quad_term: Option<f64>,
    pub total: f64,
}

pub fn energy_eval(spec: &ProblemSpec, u: &GridFunction, mode: EnergyMode<'_>) -> EnergyBreakdown {
    let grid = u.grid();
    let n = u.dim();
    let dt = grid.dt();
    let a = spec.phi.radius();
    let phi0 = spec.phi.phi0_value();
    let du = u.derivative();
    let mut psi = 0.0;
    for d in du.chunks(n) {
        if norm(d) > a {
            psi = f64::INFINITY;
            break;
        }
        psi += dt * (spec.phi.potential(d).unwrap_or(f64::INFINITY) - phi0);
    }
    let j_term = spec.boundary.eval(u.first(), u.last());
    let (f_term, quad_term) = match mode {
        EnergyMode::Full => {
            let s: f64 = (0..grid.nodes())
                .map(|i| grid.weight(i) * spec.f_eff(grid.t(i), u.node(i)))
                .sum();
            (-s, None)
        }
        EnergyMode::Auxiliary(h) => {
            let mut q = 0.0;
            for i in 0..grid.nodes() {
                let ui = u.node(i);
                let hi = &h[i * n..(i + 1) * n];
                let s: f64 = ui.iter().zip(hi).map(|(x, y)| 0.5 * x * x - x * y).sum();
                q += grid.weight(i) * s;
            }
            (0.0, Some(q))
        }
    };
    let total = if psi.is_infinite() || j_term.is_infinite() {
        f64::INFINITY
    } else {
        psi + j_term + f_term + quad_term.unwrap_or(0.0)
    };
    EnergyBreakdown {
        psi,
        j_term,
        f_term,
        quad_term,
        total,
    }
}

/// Midpoint fluxes `phi(Du_i)`, row-major `M x N`.
pub fn midpoint_fluxes(spec: &ProblemSpec, u: &GridFunction) -> Result<Vec<f64>> {
    let n = u.dim();
    let mut q = Vec::with_capacity(u.grid().intervals() * n);
    for d in u.derivative().chunks(n) {
        q.extend(spec.phi.phi(d)?);
    }
    Ok(q)
}

/// Right-hand side `r_i` of the discrete equation `-(q_i - q_{i-1})/dt = r_i`.
pub fn node_forcing(spec: &ProblemSpec, u: &GridFunction, mode: EnergyMode<'_>) -> Vec<f64> {
    let grid = u.grid();
    let n = u.dim();
    let mut r = Vec::with_capacity(grid.nodes() * n);
    for i in 0..grid.nodes() {
        match mode {
            EnergyMode::Full => r.extend(spec.grad_eff(grid.t(i), u.node(i))),
            EnergyMode::Auxiliary(h) => {
                r.extend((0..n).map(|k| h[i * n + k] - u.node(i)[k]));
            }
        }
    }
    r
}

/// Gradient of the smooth part with respect to node values (J excluded).
pub fn smooth_gradient(spec: &ProblemSpec, u: &GridFunction, mode: EnergyMode<'_>) -> Result<Vec<f64>> {
    let grid = u.grid();
    let n = u.dim();
    let m = grid.intervals();
    let q = midpoint_fluxes(spec, u).map_err(|_| domain("smooth gradient at an infeasible curve"))?;
    let r = node_forcing(spec, u, mode);
    let mut g = vec![0.0; grid.nodes() * n];
    for i in 0..grid.nodes() {
        let w = grid.weight(i);
        for k in 0..n {
            let mut v = -w * r[i * n + k];
            if i >= 1 {
                v += q[(i - 1) * n + k];
            }
            if i < m {
                v -= q[i * n + k];
            }
            g[i * n + k] = v;
        }
    }
    Ok(g)
}

/// Discrete equation residual and endpoint fluxes of a feasible curve.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteEquation {
    /// `-(q_i - q_{i-1})/dt - r_i` at interior nodes, row-major.
    pub residual: Vec<f64>,
    /// `phi(u')(0)` from the half-cell balance.
    pub flux0: Vec<f64>,
    /// `phi(u')(T)` from the half-cell balance.
    pub flux_t: Vec<f64>,
    pub midpoint_flux: Vec<f64>,
}

impl DiscreteEquation {
    pub fn residual_sup(&self, dim: usize) -> f64 {
        self.residual.chunks(dim).map(norm).fold(0.0, f64::max)
    }

    /// Flux per node: endpoint fluxes at the ends, midpoint averages inside.
    pub fn nodal_flux(&self, dim: usize) -> Vec<f64> {
        let m = self.midpoint_flux.len() / dim;
        let mut out = Vec::with_capacity((m + 1) * dim);
        out.extend_from_slice(&self.flux0);
        for i in 1..m {
            for k in 0..dim {
                out.push(0.5 * (self.midpoint_flux[(i - 1) * dim + k] + self.midpoint_flux[i * dim + k]));
            }
        }
        out.extend_from_slice(&self.flux_t);
        out
    }
}

pub fn discrete_equation(
    spec: &ProblemSpec,
    u: &GridFunction,
    mode: EnergyMode<'_>,
) -> Result<DiscreteEquation> {
    let grid = u.grid();
    let n = u.dim();
    let m = grid.intervals();
    let dt = grid.dt();
    let q = midpoint_fluxes(spec, u)?;
    let r = node_forcing(spec, u, mode);
    let mut residual = Vec::with_capacity((m - 1) * n);
    for i in 1..m {
        for k in 0..n {
            residual.push(-(q[i * n + k] - q[(i - 1) * n + k]) / dt - r[i * n + k]);
        }
    }
    let flux0 = (0..n).map(|k| q[k] + 0.5 * dt * r[k]).collect();
    let flux_t = (0..n)
        .map(|k| q[(m - 1) * n + k] - 0.5 * dt * r[m * n + k])
        .collect();
    Ok(DiscreteEquation {
        residual,
        flux0,
        flux_t,
        midpoint_flux: q,
    })
}

/// Hessian of the smooth part as a node chain: `J_phi(Du_i)/dt` per edge plus
/// `-w_i D^2 F` (full) or `w_i I` (auxiliary) per node.
pub fn smooth_hessian(spec: &ProblemSpec, u: &GridFunction, mode: EnergyMode<'_>) -> BlockTridiag {
    let grid = u.grid();
    let n = u.dim();
    let m = grid.intervals();
    let dt = grid.dt();
    let du = u.derivative();
    let edges: Vec<DMatrix<f64>> = du.chunks(n).map(|d| spec.phi.jacobian(d) / dt).collect();
    let mut diag = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let w = grid.weight(i);
        let mut d = match mode {
            EnergyMode::Full => -spec.potential.hessian(grid.t(i), u.node(i)) * w,
            EnergyMode::Auxiliary(_) => DMatrix::identity(n, n) * w,
        };
        if i > 0 {
            d += &edges[i - 1];
        }
        if i < m {
            d += &edges[i];
        }
        diag.push(d);
    }
    let off = edges.into_iter().map(|e| -e).collect();
    BlockTridiag { block: n, diag, off }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryFunctional;
    use crate::grid::Grid;
    use crate::phi::PhiMap;
    use crate::potential::{Forcing, PotentialField};
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(boundary: BoundaryFunctional, potential: PotentialField, forcing: Forcing, dim: usize) -> ProblemSpec {
        ProblemSpec::new(
            PhiMap::relativistic(1.0).unwrap(),
            boundary,
            potential,
            forcing,
            dim,
            Grid::new(1.0, 40).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_curve_has_zero_energy() {
        let s = spec(BoundaryFunctional::dirichlet(), PotentialField::Pendulum { rho: 1.0, beta: 0.3 }, Forcing::None, 2);
        let u = GridFunction::zeros(s.grid, 2);
        let e = energy_eval(&s, &u, EnergyMode::Full);
        assert_eq!(e.total, 0.0);
        assert!(smooth_gradient(&s, &u, EnergyMode::Full).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn affine_psi_and_infeasibility() {
        let s = spec(BoundaryFunctional::neumann(), PotentialField::Zero, Forcing::None, 1);
        let u = GridFunction::from_fn(s.grid, 1, |t| vec![0.6 * t]);
        let e = energy_eval(&s, &u, EnergyMode::Full);
        assert!((e.psi - 0.2).abs() < 1e-14);
        let v = GridFunction::from_fn(s.grid, 1, |t| vec![1.2 * t]);
        assert_eq!(energy_eval(&s, &v, EnergyMode::Full).total, f64::INFINITY);
        assert!(smooth_gradient(&s, &v, EnergyMode::Full).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let s = spec(
            BoundaryFunctional::neumann(),
            PotentialField::Pendulum { rho: 1.0, beta: PI / 2.0 },
            Forcing::sine_cycles(vec![0.5, -0.3], 1.0, 1.0),
            2,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let c: [f64; 4] = core::array::from_fn(|_| rng.gen::<f64>() - 0.5);
            let u = GridFunction::from_fn(s.grid, 2, |t| {
                vec![c[0] + 0.2 * libm::sin(3.0 * t + c[1]), c[2] + 0.2 * libm::cos(2.0 * t + c[3])]
            });
            let dir: Vec<f64> = (0..u.values().len()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let g = smooth_gradient(&s, &u, EnergyMode::Full).unwrap();
            let eps = 1e-6;
            let mut up = u.clone();
            let mut um = u.clone();
            for (k, d) in dir.iter().enumerate() {
                up.values_mut()[k] += eps * d;
                um.values_mut()[k] -= eps * d;
            }
            let fd = (energy_eval(&s, &up, EnergyMode::Full).total
                - energy_eval(&s, &um, EnergyMode::Full).total)
                / (2.0 * eps);
            let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "{fd} vs {an}");
        }
    }

    #[test]
    fn auxiliary_gradient_at_constant() {
        let s = spec(BoundaryFunctional::neumann(), PotentialField::Zero, Forcing::None, 1);
        let u = GridFunction::constant(s.grid, &[0.7]);
        let h = vec![0.0; s.grid.nodes()];
        let g = smooth_gradient(&s, &u, EnergyMode::Auxiliary(&h)).unwrap();
        for (i, gi) in g.iter().enumerate() {
            assert!((gi - 0.7 * s.grid.weight(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn endpoint_fluxes_are_gradient_rows() {
        let s = spec(BoundaryFunctional::neumann(), PotentialField::Harmonic { k: 1.0 }, Forcing::None, 1);
        let u = GridFunction::from_fn(s.grid, 1, |t| vec![0.2 * t * t - 0.1]);
        let g = smooth_gradient(&s, &u, EnergyMode::Full).unwrap();
        let eq = discrete_equation(&s, &u, EnergyMode::Full).unwrap();
        assert!((g[0] + eq.flux0[0]).abs() < 1e-14);
        assert!((g[40] - eq.flux_t[0]).abs() < 1e-14);
    }
}
