//! Convex boundary functionals `j = g + I_K` on `R^N x R^N`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, invalid, Error, Result};
use crate::phi::{sample_ball, sample_direction};
use crate::vecops::{dot, norm};

/// Relative tolerance used when deciding membership of a computed point in `K`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

const PROX_STRUCTURED_CAP: usize = 200;
const PROX_GENERIC_CAP: usize = 10_000;
const PROX_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvexSetK {
    /// `{(0, 0)}`: homogeneous Dirichlet.
    Point,
    /// Neumann.
    FullSpace,
    /// `{x = y}`: periodic.
    Diagonal,
    /// `{x = -y}`: antiperiodic.
    AntiDiagonal,
    /// `{a x = b y}` with `|a| + |b| > 0`.
    Subspace { a: f64, b: f64 },
    /// `{|x - y| <= sigma}`; `sigma = 0` is the diagonal, `sigma = inf` the whole space.
    Strip { sigma: f64 },
}

impl ConvexSetK {
    /// Validates parameters and resolves the strip aliases.
    pub fn canonical(self) -> Result<Self> {
        match self {
            ConvexSetK::Subspace { a, b } => {
                if !(a.is_finite() && b.is_finite()) || a.abs() + b.abs() == 0.0 {
                    return Err(invalid(format!("subspace coefficients ({a}, {b}) are degenerate")));
                }
                Ok(self)
            }
            ConvexSetK::Strip { sigma } => {
                if sigma.is_nan() || sigma < 0.0 {
                    Err(invalid(format!("strip width must be nonnegative, got {sigma}")))
                } else if sigma == 0.0 {
                    Ok(ConvexSetK::Diagonal)
                } else if sigma == f64::INFINITY {
                    Ok(ConvexSetK::FullSpace)
                } else {
                    Ok(self)
                }
            }
            _ => Ok(self),
        }
    }

    /// `(a, b)` for sets of the form `{a x = b y}`.
    pub fn linear_coefficients(&self) -> Option<(f64, f64)> {
        match *self {
            ConvexSetK::Diagonal => Some((1.0, 1.0)),
            ConvexSetK::AntiDiagonal => Some((1.0, -1.0)),
            ConvexSetK::Subspace { a, b } => Some((a, b)),
            _ => None,
        }
    }

    pub fn is_affine(&self) -> bool {
        !matches!(self, ConvexSetK::Strip { .. })
    }

    pub fn contains(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        let scale = 1.0 + norm(x) + norm(y);
        match *self {
            ConvexSetK::Point => norm(x) <= tol * scale && norm(y) <= tol * scale,
            ConvexSetK::FullSpace => true,
            ConvexSetK::Strip { sigma } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                norm(&d) <= sigma + tol * scale
            }
            _ => {
                let (a, b) = self.linear_coefficients().unwrap();
                let r: Vec<f64> = x.iter().zip(y).map(|(u, v)| a * u - b * v).collect();
                norm(&r) / libm::sqrt(a * a + b * b) <= tol * scale
            }
        }
    }

    pub fn project(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = x.len();
        match *self {
            ConvexSetK::Point => (vec![0.0; n], vec![0.0; n]),
            ConvexSetK::FullSpace => (x.to_vec(), y.to_vec()),
            ConvexSetK::Strip { sigma } => {
                let s: Vec<f64> = x.iter().zip(y).map(|(u, v)| 0.5 * (u + v)).collect();
                let mut d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                let r = norm(&d);
                if r > sigma {
                    let f = sigma / r;
                    d.iter_mut().for_each(|v| *v *= f);
                }
                (
                    s.iter().zip(&d).map(|(s, d)| s + 0.5 * d).collect(),
                    s.iter().zip(&d).map(|(s, d)| s - 0.5 * d).collect(),
                )
            }
            _ => {
                let (a, b) = self.linear_coefficients().unwrap();
                let nn = a * a + b * b;
                let mut px = Vec::with_capacity(n);
                let mut py = Vec::with_capacity(n);
                for k in 0..n {
                    let c = (a * x[k] - b * y[k]) / nn;
                    px.push(x[k] - c * a);
                    py.push(y[k] + c * b);
                }
                (px, py)
            }
        }
    }

    /// Closed-form normal cone test. `z` must lie in `K` within `tol (1 + |z|)`.
    pub fn normal_cone_contains(
        &self,
        z: (&[f64], &[f64]),
        xi: (&[f64], &[f64]),
        tol: f64,
    ) -> Result<bool> {
        let (x, y) = z;
        if !self.contains(x, y, tol) {
            return Err(domain("normal cone queried at a point outside K"));
        }
        let (xx, xy) = xi;
        let xi_norm = libm::sqrt(dot(xx, xx) + dot(xy, xy));
        let zt = tol * (1.0 + xi_norm);
        Ok(match *self {
            ConvexSetK::Point => true,
            ConvexSetK::FullSpace => xi_norm <= tol,
            ConvexSetK::Strip { sigma } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                let r = norm(&d);
                if r < sigma - tol * (1.0 + norm(x) + norm(y)) {
                    xi_norm <= tol
                } else {
                    // xi = s (d, -d) with s >= 0
                    let sum: Vec<f64> = xx.iter().zip(xy).map(|(u, v)| u + v).collect();
                    let s = dot(xx, &d) / (r * r);
                    let off: f64 = libm::sqrt(
                        xx.iter()
                            .zip(&d)
                            .map(|(u, dv)| (u - s * dv) * (u - s * dv))
                            .sum::<f64>(),
                    );
                    norm(&sum) <= zt && off <= zt && s * r >= -zt
                }
            }
            _ => {
                let (a, b) = self.linear_coefficients().unwrap();
                let along: Vec<f64> = xx.iter().zip(xy).map(|(u, v)| b * u + a * v).collect();
                norm(&along) / libm::sqrt(a * a + b * b) <= zt
            }
        })
    }

    /// Orthonormal basis (columns, length `2N`) of the face of `K` containing `z`.
    pub fn tangent_basis(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        match *self {
            ConvexSetK::Point => DMatrix::zeros(2 * n, 0),
            ConvexSetK::FullSpace => DMatrix::identity(2 * n, 2 * n),
            ConvexSetK::Strip { sigma } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                let r = norm(&d);
                if r < sigma * (1.0 - 1e-9) {
                    return DMatrix::identity(2 * n, 2 * n);
                }
                // mean directions plus difference directions orthogonal to d
                let h = libm::sqrt(0.5);
                let mut cols: Vec<Vec<f64>> = Vec::new();
                for k in 0..n {
                    let mut c = vec![0.0; 2 * n];
                    c[k] = h;
                    c[n + k] = h;
                    cols.push(c);
                }
                let dhat: Vec<f64> = d.iter().map(|v| v / r).collect();
                for k in 0..n {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    let p = dot(&e, &dhat);
                    let mut t: Vec<f64> = e.iter().zip(&dhat).map(|(e, u)| e - p * u).collect();
                    for prev in cols.iter().skip(n) {
                        let pd: Vec<f64> = prev[..n].iter().map(|v| v / h).collect();
                        let q = dot(&t, &pd);
                        t.iter_mut().zip(&pd).for_each(|(a, b)| *a -= q * b);
                    }
                    let tn = norm(&t);
                    if tn > 1e-8 {
                        let mut c = vec![0.0; 2 * n];
                        for i in 0..n {
                            c[i] = h * t[i] / tn;
                            c[n + i] = -h * t[i] / tn;
                        }
                        cols.push(c);
                    }
                }
                let mut m = DMatrix::zeros(2 * n, cols.len());
                for (j, c) in cols.iter().enumerate() {
                    for i in 0..2 * n {
                        m[(i, j)] = c[i];
                    }
                }
                m
            }
            _ => {
                let (a, b) = self.linear_coefficients().unwrap();
                let nn = libm::sqrt(a * a + b * b);
                let mut m = DMatrix::zeros(2 * n, n);
                for k in 0..n {
                    m[(k, k)] = b / nn;
                    m[(n + k, k)] = a / nn;
                }
                m
            }
        }
    }
}

pub type PairScalar = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type PairGradient = Arc<dyn Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

#[derive(Clone)]
pub struct CustomSmooth {
    pub value: PairScalar,
    pub gradient: PairGradient,
    /// Declares `g(x, y) = f(x - y)`.
    pub difference: bool,
}

impl fmt::Debug for CustomSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSmooth")
            .field("difference", &self.difference)
            .finish_non_exhaustive()
    }
}

/// Convex smooth part `g` with `g(0) = 0`, `grad g(0) = 0`.
#[derive(Clone, Debug)]
pub enum SmoothPart {
    /// `g = kappa |x - y|^2 / 2`.
    DifferenceQuadratic { kappa: f64 },
    /// `g = (exp(|x - y|^2) - 1) / 2`.
    DifferenceExp,
    Custom(CustomSmooth),
}

impl SmoothPart {
    pub fn is_difference(&self) -> bool {
        match self {
            SmoothPart::Custom(c) => c.difference,
            _ => true,
        }
    }

    fn radial(&self) -> Option<RadialDifference> {
        match *self {
            SmoothPart::DifferenceQuadratic { kappa } => Some(RadialDifference::Quadratic(kappa)),
            SmoothPart::DifferenceExp => Some(RadialDifference::Exp),
            SmoothPart::Custom(_) => None,
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            SmoothPart::Custom(c) => (c.value)(x, y),
            _ => {
                let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                self.radial().unwrap().f(norm(&d))
            }
        }
    }

    pub fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            SmoothPart::Custom(c) => (c.gradient)(x, y),
            _ => {
                let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                let r = norm(&d);
                let rd = self.radial().unwrap();
                let gx: Vec<f64> = d.iter().map(|v| rd.slope_over_r(r) * v).collect();
                let gy = gx.iter().map(|v| -v).collect();
                (gx, gy)
            }
        }
    }

    /// Hessian on the stacked pair `(x, y)`.
    pub fn hessian(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        match self {
            SmoothPart::Custom(_) => {
                let eps = 1e-6 * (1.0 + norm(x) + norm(y));
                let mut z: Vec<f64> = x.iter().chain(y).copied().collect();
                for k in 0..2 * n {
                    let z0 = z[k];
                    z[k] = z0 + eps;
                    let (gxp, gyp) = self.gradient(&z[..n], &z[n..]);
                    z[k] = z0 - eps;
                    let (gxm, gym) = self.gradient(&z[..n], &z[n..]);
                    z[k] = z0;
                    for i in 0..n {
                        h[(i, k)] = (gxp[i] - gxm[i]) / (2.0 * eps);
                        h[(n + i, k)] = (gyp[i] - gym[i]) / (2.0 * eps);
                    }
                }
                (&h + h.transpose()) * 0.5
            }
            _ => {
                let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                let r = norm(&d);
                let rd = self.radial().unwrap();
                let a = rd.slope_over_r(r);
                let c = rd.curvature_term(r);
                for i in 0..n {
                    for k in 0..n {
                        let v = if i == k { a } else { 0.0 } + c * d[i] * d[k];
                        h[(i, k)] = v;
                        h[(n + i, n + k)] = v;
                        h[(i, n + k)] = -v;
                        h[(n + i, k)] = -v;
                    }
                }
                h
            }
        }
    }
}

#[derive(Clone, Copy)]
enum RadialDifference {
    Quadratic(f64),
    Exp,
}

impl RadialDifference {
    fn f(self, r: f64) -> f64 {
        match self {
            RadialDifference::Quadratic(k) => 0.5 * k * r * r,
            RadialDifference::Exp => 0.5 * libm::expm1(r * r),
        }
    }

    /// `f'(r) / r`.
    fn slope_over_r(self, r: f64) -> f64 {
        match self {
            RadialDifference::Quadratic(k) => k,
            RadialDifference::Exp => libm::exp(r * r),
        }
    }

    /// `c` in `f''(d) = slope_over_r I + c d d^T`.
    fn curvature_term(self, r: f64) -> f64 {
        match self {
            RadialDifference::Quadratic(_) => 0.0,
            RadialDifference::Exp => 2.0 * libm::exp(r * r),
        }
    }

    fn dslope(self, r: f64) -> f64 {
        // d/dr of f'(r)
        self.slope_over_r(r) + self.curvature_term(r) * r * r
    }
}

/// `j = g + I_K`.
#[derive(Clone, Debug)]
pub struct BoundaryFunctional {
    set: ConvexSetK,
    smooth: Option<SmoothPart>,
}

impl BoundaryFunctional {
    pub fn new(set: ConvexSetK, smooth: Option<SmoothPart>) -> Result<Self> {
        if let Some(SmoothPart::DifferenceQuadratic { kappa }) = smooth {
            if !(kappa >= 0.0) || !kappa.is_finite() {
                return Err(invalid(format!("quadratic coupling must be nonnegative, got {kappa}")));
            }
        }
        Ok(BoundaryFunctional {
            set: set.canonical()?,
            smooth,
        })
    }

    pub fn indicator(set: ConvexSetK) -> Result<Self> {
        Self::new(set, None)
    }

    pub fn dirichlet() -> Self {
        Self::indicator(ConvexSetK::Point).unwrap()
    }

    pub fn neumann() -> Self {
        Self::indicator(ConvexSetK::FullSpace).unwrap()
    }

    pub fn periodic() -> Self {
        Self::indicator(ConvexSetK::Diagonal).unwrap()
    }

    pub fn antiperiodic() -> Self {
        Self::indicator(ConvexSetK::AntiDiagonal).unwrap()
    }

    pub fn set(&self) -> ConvexSetK {
        self.set
    }

    pub fn smooth(&self) -> Option<&SmoothPart> {
        self.smooth.as_ref()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        if !self.set.contains(x, y, MEMBERSHIP_TOL) {
            return f64::INFINITY;
        }
        self.smooth.as_ref().map_or(0.0, |g| g.value(x, y))
    }

    pub fn project(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.set.project(x, y)
    }

    pub fn smooth_gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.smooth {
            Some(g) => g.gradient(x, y),
            None => (vec![0.0; x.len()], vec![0.0; y.len()]),
        }
    }

    /// `argmin_z j(z) + |z - (x, y)|^2 / (2 step)`.
    pub fn prox(&self, x: &[f64], y: &[f64], step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(step > 0.0) {
            return Err(invalid(format!("prox step must be positive, got {step}")));
        }
        let g = match &self.smooth {
            None => return Ok(self.set.project(x, y)),
            Some(g) => g,
        };
        match (self.set, g.radial()) {
            (ConvexSetK::Point, _) | (ConvexSetK::Diagonal, Some(_)) => Ok(self.set.project(x, y)),
            (ConvexSetK::FullSpace, Some(rd)) => prox_difference(rd, f64::INFINITY, x, y, step),
            (ConvexSetK::Strip { sigma }, Some(rd)) => prox_difference(rd, sigma, x, y, step),
            _ => self.prox_generic(g, x, y, step),
        }
    }

    fn prox_generic(
        &self,
        g: &SmoothPart,
        x: &[f64],
        y: &[f64],
        step: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        // accelerated projected gradient on g(z) + |z - p|^2 / (2 step), with restart
        let n = x.len();
        let mut z = self.set.project(x, y);
        let mut w = z.clone();
        let mut t = 1.0_f64;
        let mut lip = 1.0 / step + 1.0;
        let objective = |zx: &[f64], zy: &[f64]| -> f64 {
            let dx: f64 = zx.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            let dy: f64 = zy.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            g.value(zx, zy) + (dx + dy) / (2.0 * step)
        };
        let mut f_prev = objective(&z.0, &z.1);
        let mut change = f64::INFINITY;
        for _ in 0..PROX_GENERIC_CAP {
            let (gx, gy) = g.gradient(&w.0, &w.1);
            let grad_x: Vec<f64> = (0..n).map(|i| gx[i] + (w.0[i] - x[i]) / step).collect();
            let grad_y: Vec<f64> = (0..n).map(|i| gy[i] + (w.1[i] - y[i]) / step).collect();
            let fw = objective(&w.0, &w.1);
            let next = loop {
                let cx: Vec<f64> = (0..n).map(|i| w.0[i] - grad_x[i] / lip).collect();
                let cy: Vec<f64> = (0..n).map(|i| w.1[i] - grad_y[i] / lip).collect();
                let cand = self.set.project(&cx, &cy);
                let dx: Vec<f64> = (0..n).map(|i| cand.0[i] - w.0[i]).collect();
                let dy: Vec<f64> = (0..n).map(|i| cand.1[i] - w.1[i]).collect();
                let model = fw
                    + dot(&grad_x, &dx)
                    + dot(&grad_y, &dy)
                    + 0.5 * lip * (dot(&dx, &dx) + dot(&dy, &dy));
                if objective(&cand.0, &cand.1) <= model + 1e-14 * (1.0 + fw.abs()) || lip > 1e16 {
                    break cand;
                }
                lip *= 2.0;
            };
            let f_next = objective(&next.0, &next.1);
            let dz: f64 = libm::sqrt(
                (0..n)
                    .map(|i| {
                        (next.0[i] - z.0[i]) * (next.0[i] - z.0[i])
                            + (next.1[i] - z.1[i]) * (next.1[i] - z.1[i])
                    })
                    .sum(),
            );
            change = dz;
            let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
            if f_next > f_prev {
                // restart momentum
                t = 1.0;
                w = z.clone();
                continue;
            }
            let beta = (t - 1.0) / t_next;
            w = (
                (0..n).map(|i| next.0[i] + beta * (next.0[i] - z.0[i])).collect(),
                (0..n).map(|i| next.1[i] + beta * (next.1[i] - z.1[i])).collect(),
            );
            w = self.set.project(&w.0, &w.1);
            z = next;
            t = t_next;
            f_prev = f_next;
            if dz <= 1e-2 * PROX_TOL * (1.0 + norm(&z.0) + norm(&z.1)) {
                return Ok(z);
            }
            lip = (lip * 0.9).max(1.0 / step);
        }
        Err(Error::Convergence {
            what: "prox of boundary functional",
            iterations: PROX_GENERIC_CAP,
            residual: change,
        })
    }

    /// Sampled subgradient test: the largest normalized violation
    /// `(<xi, w - z> - j(w) + j(z)) / |w - z|` over probes `w = P_K(z + v)`, `|v| <= radius`.
    pub fn subdifferential_residual(
        &self,
        z: (&[f64], &[f64]),
        xi: (&[f64], &[f64]),
        probe_radius: f64,
        probe_count: usize,
        seed: u64,
    ) -> Result<f64> {
        let (x, y) = z;
        let jz = self.eval(x, y);
        if !jz.is_finite() {
            return Err(domain("subdifferential queried outside the domain of j"));
        }
        let n = x.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes: Vec<Vec<f64>> = Vec::new();
        for k in 0..2 * n {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; 2 * n];
                v[k] = s * probe_radius;
                probes.push(v);
            }
        }
        for _ in 0..probe_count {
            let dir = sample_direction(&mut rng, 2 * n);
            let r = probe_radius * (0.1 + 0.9 * rng.gen::<f64>());
            probes.push(dir.iter().map(|d| d * r).collect());
        }
        let mut worst: f64 = 0.0;
        for v in probes {
            let px: Vec<f64> = (0..n).map(|i| x[i] + v[i]).collect();
            let py: Vec<f64> = (0..n).map(|i| y[i] + v[n + i]).collect();
            let (wx, wy) = self.set.project(&px, &py);
            let dx: Vec<f64> = (0..n).map(|i| wx[i] - x[i]).collect();
            let dy: Vec<f64> = (0..n).map(|i| wy[i] - y[i]).collect();
            let len = libm::sqrt(dot(&dx, &dx) + dot(&dy, &dy));
            if len < 1e-3 * probe_radius {
                continue;
            }
            let jw = self.eval(&wx, &wy);
            if !jw.is_finite() {
                continue;
            }
            let viol = (dot(xi.0, &dx) + dot(xi.1, &dy) - jw + jz) / len;
            worst = worst.max(viol);
        }
        Ok(worst)
    }

    /// Closure of `cone D(j)` meets the diagonal only at the origin.
    pub fn cone_diagonal_trivial(&self) -> bool {
        match self.set {
            ConvexSetK::Point | ConvexSetK::AntiDiagonal => true,
            ConvexSetK::Subspace { a, b } => a != b,
            ConvexSetK::Diagonal | ConvexSetK::FullSpace | ConvexSetK::Strip { .. } => false,
        }
    }

    /// Boundedness of the two coordinate projections of `D(j)`.
    pub fn projections_bounded(&self) -> (bool, bool) {
        match self.set {
            ConvexSetK::Point => (true, true),
            ConvexSetK::Subspace { a, b } => (b == 0.0, a == 0.0),
            _ => (false, false),
        }
    }

    /// `D(j)` and `j` invariant under shifts along the diagonal.
    pub fn shift_invariant_diagonal(&self) -> Result<bool> {
        let set_ok = match self.set {
            ConvexSetK::Diagonal | ConvexSetK::FullSpace | ConvexSetK::Strip { .. } => true,
            ConvexSetK::Subspace { a, b } => a == b,
            ConvexSetK::Point | ConvexSetK::AntiDiagonal => false,
        };
        if !set_ok {
            return Ok(false);
        }
        match &self.smooth {
            Some(g) if !g.is_difference() => Err(Error::Unsupported(
                "diagonal shift invariance needs g(x, y) = f(x - y)".into(),
            )),
            _ => Ok(true),
        }
    }

    /// `j` vanishes on the diagonal (which must lie in `D(j)`).
    pub fn vanishes_on_diagonal(&self) -> bool {
        let diag_in = matches!(
            self.set,
            ConvexSetK::Diagonal | ConvexSetK::FullSpace | ConvexSetK::Strip { .. }
        ) || matches!(self.set, ConvexSetK::Subspace { a, b } if a == b);
        diag_in && self.smooth.as_ref().map_or(true, |g| g.is_difference())
    }

    /// `j` is bounded on its domain.
    pub fn bounded_on_domain(&self) -> bool {
        match &self.smooth {
            None => true,
            Some(g) => match self.set {
                ConvexSetK::Point => true,
                ConvexSetK::Diagonal | ConvexSetK::Strip { .. } => g.is_difference(),
                ConvexSetK::Subspace { a, b } => a == b && g.is_difference(),
                _ => false,
            },
        }
    }

    /// Samples `(H_j)`: `j(0) = 0`, `grad g(0) = 0`, convexity of `g` on segments.
    pub fn check_hypotheses(&self, dim: usize, sample_count: usize, seed: u64) -> BoundaryDiagnostics {
        let zero = vec![0.0; dim];
        let mut d = BoundaryDiagnostics {
            j_at_zero: self.eval(&zero, &zero).abs(),
            ..Default::default()
        };
        if let Some(g) = &self.smooth {
            let (gx, gy) = g.gradient(&zero, &zero);
            d.grad_at_zero = libm::sqrt(dot(&gx, &gx) + dot(&gy, &gy));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..sample_count {
                let p = sample_ball(&mut rng, 2 * dim, 1.0);
                let q = sample_ball(&mut rng, 2 * dim, 1.0);
                let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
                let gp = g.value(&p[..dim], &p[dim..]);
                let gq = g.value(&q[..dim], &q[dim..]);
                let gm = g.value(&m[..dim], &m[dim..]);
                d.convexity = d.convexity.max(gm - 0.5 * (gp + gq));
            }
        }
        d.origin_subgradient = self
            .subdifferential_residual((&zero, &zero), (&zero, &zero), 1e-3, 64, seed)
            .unwrap_or(f64::INFINITY);
        d
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryDiagnostics {
    pub j_at_zero: f64,
    pub grad_at_zero: f64,
    pub convexity: f64,
    pub origin_subgradient: f64,
}

impl BoundaryDiagnostics {
    pub fn max_violation(&self) -> f64 {
        [self.j_at_zero, self.grad_at_zero, self.convexity, self.origin_subgradient]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Prox of `f(x - y) + I{|x - y| <= sigma}` for radial `f`: the mean is kept,
/// the difference shrinks along its own direction.
fn prox_difference(
    rd: RadialDifference,
    sigma: f64,
    x: &[f64],
    y: &[f64],
    step: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s: Vec<f64> = x.iter().zip(y).map(|(u, v)| 0.5 * (u + v)).collect();
    let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
    let rp = norm(&d);
    if rp == 0.0 {
        return Ok((s.clone(), s));
    }
    // f'(r) + (r - rp) / (2 step) = 0 on [0, rp]
    let phi = |r: f64| rd.slope_over_r(r) * r + (r - rp) / (2.0 * step);
    let (mut lo, mut hi) = (0.0, rp);
    let mut r = match rd {
        RadialDifference::Quadratic(k) => rp / (1.0 + 2.0 * step * k),
        RadialDifference::Exp => 0.5 * rp,
    };
    let mut converged = matches!(rd, RadialDifference::Quadratic(_));
    let mut it = 0;
    while !converged && it < PROX_STRUCTURED_CAP {
        let f = phi(r);
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let df = rd.dslope(r) + 1.0 / (2.0 * step);
        let mut next = r - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        converged = (next - r).abs() <= PROX_TOL * 1e-3 * (1.0 + rp) || hi - lo <= 1e-16 * rp;
        r = next;
        it += 1;
    }
    if !converged {
        return Err(Error::Convergence {
            what: "structured boundary prox",
            iterations: it,
            residual: phi(r).abs(),
        });
    }
    let r = r.min(sigma);
    let f = r / rp;
    Ok((
        s.iter().zip(&d).map(|(s, d)| s + 0.5 * f * d).collect(),
        s.iter().zip(&d).map(|(s, d)| s - 0.5 * f * d).collect(),
    ))
}
