//! Potentials `F(t, u)`, forcing terms `h(t)`, and the assembled problem.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::BoundaryFunctional;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::phi::{sample_direction, PhiMap};
use crate::vecops::{dot, norm};

pub type TimeField = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type TimeVectorField = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct CustomPotential {
    pub value: TimeField,
    pub gradient: TimeVectorField,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomPotential")
    }
}

/// Natural cubic spline `f(r)` on increasing knots with `f(0) = 0`, extended
/// linearly past the last knot.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl RadialTable {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(invalid("radial table needs at least two (r, F) pairs"));
        }
        if knots[0] != 0.0 || values[0] != 0.0 {
            return Err(invalid("radial table must start at (0, 0)"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("radial table knots must be strictly increasing"));
        }
        // tridiagonal system for the natural spline second derivatives
        let mut second = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            let rhs = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            second[i] = d[i] - c[i] * second[i + 1];
        }
        Ok(RadialTable {
            knots,
            values,
            second,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(f, f', f'')` at `r >= 0`.
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let n = self.knots.len();
        let last = self.knots[n - 1];
        if r >= last {
            let (f, df, _) = self.eval_segment(n - 2, last);
            return (f + df * (r - last), df, 0.0);
        }
        let k = match self.knots.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        self.eval_segment(k, r)
    }

    fn eval_segment(&self, k: usize, r: f64) -> (f64, f64, f64) {
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let h = x1 - x0;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.second[k], self.second[k + 1]);
        let a = (x1 - r) / h;
        let b = (r - x0) / h;
        let f = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let df = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        (f, df, d2)
    }
}

#[derive(Clone, Debug)]
pub enum PotentialField {
    Zero,
    /// `rho [cos(|u| - beta) - cos beta - sin(beta) |u|]`.
    Pendulum { rho: f64, beta: f64 },
    /// `rho sum_i (cos u_i - 1)`, `2 pi`-periodic in each component.
    PendulumComponents { rho: f64 },
    /// `k |u|^2 / 2`.
    Harmonic { k: f64 },
    Radial(RadialTable),
    Custom(CustomPotential),
}

impl PotentialField {
    pub fn value(&self, t: f64, u: &[f64]) -> f64 {
        match self {
            PotentialField::Zero => 0.0,
            PotentialField::Pendulum { rho, beta } => {
                let r = norm(u);
                rho * (libm::cos(r - beta) - libm::cos(*beta) - libm::sin(*beta) * r)
            }
            PotentialField::PendulumComponents { rho } => {
                rho * u.iter().map(|v| libm::cos(*v) - 1.0).sum::<f64>()
            }
            PotentialField::Harmonic { k } => 0.5 * k * dot(u, u),
            PotentialField::Radial(tab) => tab.eval(norm(u)).0,
            PotentialField::Custom(c) => (c.value)(t, u),
        }
    }

    pub fn gradient(&self, t: f64, u: &[f64]) -> Vec<f64> {
        match self {
            PotentialField::Zero => vec![0.0; u.len()],
            PotentialField::Pendulum { rho, beta } => {
                let r = norm(u);
                if r == 0.0 {
                    return vec![0.0; u.len()];
                }
                let s = rho * (libm::sin(beta - r) - libm::sin(*beta)) / r;
                u.iter().map(|v| s * v).collect()
            }
            PotentialField::PendulumComponents { rho } => {
                u.iter().map(|v| -rho * libm::sin(*v)).collect()
            }
            PotentialField::Harmonic { k } => u.iter().map(|v| k * v).collect(),
            PotentialField::Radial(tab) => {
                let r = norm(u);
                if r < 1e-300 {
                    return vec![0.0; u.len()];
                }
                let df = tab.eval(r).1;
                u.iter().map(|v| df * v / r).collect()
            }
            PotentialField::Custom(c) => (c.gradient)(t, u),
        }
    }

    pub fn hessian(&self, t: f64, u: &[f64]) -> DMatrix<f64> {
        let n = u.len();
        let radial = |d2: f64, d1_over_r: f64| -> DMatrix<f64> {
            let r = norm(u);
            let mut h = DMatrix::identity(n, n) * d1_over_r;
            if r > 0.0 {
                for i in 0..n {
                    for j in 0..n {
                        h[(i, j)] += (d2 - d1_over_r) * u[i] * u[j] / (r * r);
                    }
                }
            }
            h
        };
        match self {
            PotentialField::Zero => DMatrix::zeros(n, n),
            PotentialField::Pendulum { rho, beta } => {
                let r = norm(u);
                let d2 = -rho * libm::cos(beta - r);
                let d1r = if r < 1e-6 {
                    -rho * (libm::cos(*beta) + 0.5 * r * libm::sin(*beta))
                } else {
                    rho * (libm::sin(beta - r) - libm::sin(*beta)) / r
                };
                radial(d2, d1r)
            }
            PotentialField::PendulumComponents { rho } => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    u.iter().map(|v| -rho * libm::cos(*v)),
                ))
            }
            PotentialField::Harmonic { k } => DMatrix::identity(n, n) * *k,
            PotentialField::Radial(tab) => {
                let r = norm(u);
                let (_, d1, d2) = tab.eval(r);
                let d1r = if r < 1e-12 { d2 } else { d1 / r };
                radial(d2, d1r)
            }
            PotentialField::Custom(_) => {
                let h = 1e-6 * (1.0 + norm(u));
                let mut m = DMatrix::zeros(n, n);
                let mut up = u.to_vec();
                for k in 0..n {
                    up[k] = u[k] + h;
                    let gp = self.gradient(t, &up);
                    up[k] = u[k] - h;
                    let gm = self.gradient(t, &up);
                    up[k] = u[k];
                    for i in 0..n {
                        m[(i, k)] = (gp[i] - gm[i]) / (2.0 * h);
                    }
                }
                (&m + m.transpose()) * 0.5
            }
        }
    }

    /// Natural period vector when the potential is periodic in every component.
    pub fn natural_periods(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            PotentialField::Zero => None,
            PotentialField::PendulumComponents { .. } => Some(vec![2.0 * PI; dim]),
            PotentialField::Pendulum { beta, .. } if *beta == 0.0 && dim == 1 => {
                Some(vec![2.0 * PI])
            }
            _ => None,
        }
    }

    /// Known bound on `|grad F|`, if any.
    pub fn gradient_bound(&self) -> Option<f64> {
        match self {
            PotentialField::Zero => Some(0.0),
            PotentialField::Pendulum { rho, .. } => Some(2.0 * rho.abs()),
            PotentialField::PendulumComponents { rho } => Some(rho.abs()),
            _ => None,
        }
    }
}

pub type TimeVector = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Inhomogeneity `h(t)`.
#[derive(Clone)]
pub enum Forcing {
    None,
    /// `amplitude * sin(angular t)`.
    Sine { amplitude: Vec<f64>, angular: f64 },
    /// `amplitude * cos(angular t)`.
    Cosine { amplitude: Vec<f64>, angular: f64 },
    Constant(Vec<f64>),
    Custom(TimeVector),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::None => f.write_str("None"),
            Forcing::Sine { amplitude, angular } => f
                .debug_struct("Sine")
                .field("amplitude", amplitude)
                .field("angular", angular)
                .finish(),
            Forcing::Cosine { amplitude, angular } => f
                .debug_struct("Cosine")
                .field("amplitude", amplitude)
                .field("angular", angular)
                .finish(),
            Forcing::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Forcing::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Forcing {
    /// `amplitude * sin(2 pi cycles t / t_end)`.
    pub fn sine_cycles(amplitude: Vec<f64>, cycles: f64, t_end: f64) -> Self {
        Forcing::Sine {
            amplitude,
            angular: 2.0 * PI * cycles / t_end,
        }
    }

    pub fn cosine_cycles(amplitude: Vec<f64>, cycles: f64, t_end: f64) -> Self {
        Forcing::Cosine {
            amplitude,
            angular: 2.0 * PI * cycles / t_end,
        }
    }

    pub fn eval(&self, t: f64, dim: usize) -> Vec<f64> {
        match self {
            Forcing::None => vec![0.0; dim],
            Forcing::Sine { amplitude, angular } => {
                let s = libm::sin(angular * t);
                amplitude.iter().map(|a| a * s).collect()
            }
            Forcing::Cosine { amplitude, angular } => {
                let s = libm::cos(angular * t);
                amplitude.iter().map(|a| a * s).collect()
            }
            Forcing::Constant(c) => c.clone(),
            Forcing::Custom(f) => f(t),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Forcing::None)
    }

    /// Node values on a grid, row-major.
    pub fn sample(&self, grid: &Grid, dim: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.nodes() * dim);
        for i in 0..grid.nodes() {
            out.extend(self.eval(grid.t(i), dim));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub phi: PhiMap,
    pub boundary: BoundaryFunctional,
    pub potential: PotentialField,
    pub forcing: Forcing,
    pub dim: usize,
    pub grid: Grid,
    /// Declared periods `omega_i` of `F` in each component.
    pub periods: Option<Vec<f64>>,
    /// Declared `mean(h) = 0`.
    pub forcing_mean_zero: bool,
}

impl ProblemSpec {
    pub fn new(
        phi: PhiMap,
        boundary: BoundaryFunctional,
        potential: PotentialField,
        forcing: Forcing,
        dim: usize,
        grid: Grid,
    ) -> Result<Self> {
        let spec = ProblemSpec {
            phi,
            boundary,
            potential,
            forcing,
            dim,
            grid,
            periods: None,
            forcing_mean_zero: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_periods(mut self, periods: Vec<f64>) -> Result<Self> {
        self.periods = Some(periods);
        self.validate()?;
        Ok(self)
    }

    pub fn with_mean_zero_forcing(mut self) -> Result<Self> {
        self.forcing_mean_zero = true;
        self.validate()?;
        Ok(self)
    }

    /// Same problem on another grid.
    pub fn with_grid(&self, grid: Grid) -> Self {
        let mut s = self.clone();
        s.grid = grid;
        s
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let zero = vec![0.0; n];
        for k in 0..=8 {
            let t = self.grid.t_end() * k as f64 / 8.0;
            let f0 = self.potential.value(t, &zero);
            if f0.abs() > 1e-12 {
                return Err(Error::Invariant(format!("F(t, 0) = {f0} at t = {t}, expected 0")));
            }
            let h = self.forcing.eval(t, n);
            if h.len() != n {
                return Err(invalid(format!("forcing has dimension {}, expected {n}", h.len())));
            }
            if self.potential.gradient(t, &zero).len() != n {
                return Err(invalid("potential gradient has the wrong dimension"));
            }
        }
        if let Some(p) = &self.periods {
            if p.len() != n || p.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                return Err(invalid("periods must be positive, one per component"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..16 {
                let t = self.grid.t_end() * rng.gen::<f64>();
                let u: Vec<f64> = (0..n).map(|_| 10.0 * (rng.gen::<f64>() - 0.5)).collect();
                let f = self.potential.value(t, &u);
                for (i, w) in p.iter().enumerate() {
                    let mut us = u.clone();
                    us[i] += w;
                    let fs = self.potential.value(t, &us);
                    if (fs - f).abs() > 1e-9 * (1.0 + f.abs()) {
                        return Err(Error::Invariant(format!(
                            "F is not {w}-periodic in component {}",
                            i + 1
                        )));
                    }
                }
            }
        }
        if self.forcing_mean_zero {
            let h = self.forcing.sample(&self.grid, n);
            let mut integral = vec![0.0; n];
            let mut scale: f64 = 0.0;
            for i in 0..self.grid.nodes() {
                let w = self.grid.weight(i);
                for k in 0..n {
                    integral[k] += w * h[i * n + k];
                    scale = scale.max(h[i * n + k].abs());
                }
            }
            if norm(&integral) > 1e-10 * (1.0 + scale) * self.grid.t_end() {
                return Err(Error::Invariant(format!(
                    "forcing declared mean-zero but its integral is {:.3e}",
                    norm(&integral)
                )));
            }
        }
        Ok(())
    }

    /// `F(t, u) + <h(t), u>`.
    pub fn f_eff(&self, t: f64, u: &[f64]) -> f64 {
        self.potential.value(t, u) + dot(&self.forcing.eval(t, self.dim), u)
    }

    pub fn grad_eff(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut g = self.potential.gradient(t, u);
        for (gi, hi) in g.iter_mut().zip(self.forcing.eval(t, self.dim)) {
            *gi += hi;
        }
        g
    }

    /// `x -> int_0^T F(t, x) dt` by the trapezoid rule (forcing excluded).
    pub fn averaged_potential(&self, x: &[f64]) -> f64 {
        (0..self.grid.nodes())
            .map(|i| self.grid.weight(i) * self.potential.value(self.grid.t(i), x))
            .sum()
    }

    /// Deterministic unit directions used by ladder searches.
    pub fn ladder_directions(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| sample_direction(&mut rng, self.dim)).collect()
    }
}
