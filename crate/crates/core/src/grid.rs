//! Uniform grids on `[0, T]` and node-valued curves.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::phi::PhiMap;
use crate::vecops::norm;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    t_end: f64,
    intervals: usize,
}

impl Grid {
    pub fn new(t_end: f64, intervals: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(invalid(format!("interval length must be positive, got {t_end}")));
        }
        if intervals < 2 {
            return Err(invalid(format!("need at least 2 intervals, got {intervals}")));
        }
        Ok(Grid { t_end, intervals })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.intervals as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.t_end
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt()
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.intervals {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.weight(i)).collect()
    }
}

/// Node values `u(t_i)`, stored row-major as `(M + 1) x N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, dim: usize) -> Self {
        GridFunction {
            grid,
            dim,
            values: vec![0.0; grid.nodes() * dim],
        }
    }

    pub fn constant(grid: Grid, c: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.nodes() * c.len());
        for _ in 0..grid.nodes() {
            values.extend_from_slice(c);
        }
        GridFunction {
            grid,
            dim: c.len(),
            values,
        }
    }

    pub fn from_values(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != grid.nodes() * dim {
            return Err(invalid(format!(
                "expected {} values for {} nodes in dimension {dim}, got {}",
                grid.nodes() * dim,
                grid.nodes(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid function has non-finite entries"));
        }
        Ok(GridFunction { grid, dim, values })
    }

    pub fn from_fn(grid: Grid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.nodes() * dim);
        for i in 0..grid.nodes() {
            let v = f(grid.t(i));
            debug_assert_eq!(v.len(), dim);
            values.extend_from_slice(&v);
        }
        GridFunction { grid, dim, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.node(0)
    }

    pub fn last(&self) -> &[f64] {
        self.node(self.grid.intervals)
    }

    /// Midpoint differences `(u_{i+1} - u_i) / dt`, row-major `M x N`.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.dim;
        let dt = self.grid.dt();
        let m = self.grid.intervals;
        let mut du = Vec::with_capacity(m * n);
        for i in 0..m {
            for k in 0..n {
                du.push((self.values[(i + 1) * n + k] - self.values[i * n + k]) / dt);
            }
        }
        du
    }

    pub fn max_slope(&self) -> f64 {
        self.derivative()
            .chunks(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }

    /// Trapezoid mean and the zero-mean remainder.
    pub fn mean_oscillation(&self) -> (Vec<f64>, GridFunction) {
        let mean = self.mean();
        let mut osc = self.clone();
        for i in 0..self.grid.nodes() {
            for (v, m) in osc.node_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        (mean, osc)
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.dim;
        let mut s = vec![0.0; n];
        for i in 0..self.grid.nodes() {
            let w = self.grid.weight(i);
            for k in 0..n {
                s[k] += w * self.values[i * n + k];
            }
        }
        s.iter().map(|v| v / self.grid.t_end).collect()
    }

    /// `max_i |Du_i| <= a (1 - margin)`.
    pub fn feasible(&self, phi: &PhiMap, margin: f64) -> bool {
        self.max_slope() <= phi.radius() * (1.0 - margin)
    }

    /// Discrete `L^2` norm (trapezoid).
    pub fn l2_norm(&self) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..self.grid.nodes() {
            let u = &self.values[i * n..(i + 1) * n];
            s += self.grid.weight(i) * u.iter().map(|v| v * v).sum::<f64>();
        }
        libm::sqrt(s)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.nodes())
            .map(|i| norm(self.node(i)))
            .fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        let n = self.dim;
        (0..self.grid.nodes())
            .map(|i| {
                let a = &self.values[i * n..(i + 1) * n];
                let b = &other.values[i * n..(i + 1) * n];
                libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
            })
            .fold(0.0, f64::max)
    }

    pub fn shifted(&self, c: &[f64]) -> GridFunction {
        let mut out = self.clone();
        for i in 0..self.grid.nodes() {
            for (v, s) in out.node_mut(i).iter_mut().zip(c) {
                *v += s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_examples() {
        let g = Grid::new(1.0, 4).unwrap();
        let u = GridFunction::from_fn(g, 1, |t| vec![t * t]);
        assert!((u.derivative()[0] - 0.25).abs() < 1e-15);
        let aff = GridFunction::from_fn(g, 2, |t| vec![3.0 * t - 1.0, -0.5 * t]);
        for d in aff.derivative().chunks(2) {
            assert!((d[0] - 3.0).abs() < 1e-14 && (d[1] + 0.5).abs() < 1e-14);
        }
        let c = GridFunction::constant(g, &[2.0]);
        assert!(c.derivative().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_and_oscillation() {
        let g = Grid::new(2.0, 200).unwrap();
        let c = GridFunction::constant(g, &[1.5, -0.5]);
        let (m, o) = c.mean_oscillation();
        assert!((m[0] - 1.5).abs() < 1e-14 && (m[1] + 0.5).abs() < 1e-14);
        assert!(o.sup_norm() < 1e-14);
        let s = GridFunction::from_fn(g, 1, |t| vec![libm::sin(core::f64::consts::PI * t)]);
        let (m, o) = s.mean_oscillation();
        assert!(m[0].abs() <= 1e-3);
        assert!(o.mean()[0].abs() <= 1e-12);
        let back = o.shifted(&m);
        assert!(back.sup_distance(&s) < 1e-15);
    }

    #[test]
    fn feasibility() {
        let phi = PhiMap::relativistic(1.0).unwrap();
        let g = Grid::new(1.0, 10).unwrap();
        assert!(GridFunction::zeros(g, 1).feasible(&phi, 1e-6));
        assert!(!GridFunction::from_fn(g, 1, |t| vec![2.0 * t]).feasible(&phi, 0.0));
        let m = 1e-3;
        assert!(GridFunction::from_fn(g, 1, |t| vec![(1.0 - 2.0 * m) * t]).feasible(&phi, m));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 1).is_err());
        assert!(Grid::new(0.0, 10).is_err());
        let g = Grid::new(3.0, 7).unwrap();
        assert_eq!(g.t(7), 3.0);
        assert!((g.weights().iter().sum::<f64>() - 3.0).abs() < 1e-14);
    }
}
