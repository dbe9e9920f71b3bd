//! Singular gradient maps `phi : B_a -> R^N` with potential `Phi` and inverse.
//!
//! The catalog maps are radial: `phi(y) = prof(|y|/a) * y/|y|` and
//! `Phi(y) = a * pot(|y|/a)`, so every evaluation reduces to a scalar profile.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, invalid, Error, Result};
use crate::vecops::{dot, norm, sub};

pub type VectorMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Default distance from the sphere `|y| = a` below which `phi` is evaluated.
pub const DEFAULT_EVAL_MARGIN: f64 = 1e-8;

/// Jacobian eigenvalues are clamped to this window so Newton metrics stay finite
/// where the profile is singular at the origin (p-relativistic with p != 2).
const JAC_MIN: f64 = 1e-10;
const JAC_MAX: f64 = 1e12;

/// User-provided map. `inverse` may be omitted, in which case the map is
/// assumed radial and inverted by a safeguarded Newton solve on its profile.
#[derive(Clone)]
pub struct CustomPhi {
    pub phi: VectorMap,
    pub potential: ScalarMap,
    pub inverse: Option<VectorMap>,
}

impl fmt::Debug for CustomPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPhi")
            .field("inverse", &self.inverse.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum PhiVariant {
    Relativistic,
    PRelativistic { p: f64 },
    Custom(CustomPhi),
}

#[derive(Clone, Debug)]
pub struct PhiMap {
    radius: f64,
    variant: PhiVariant,
    phi0: f64,
    margin: f64,
}

impl PhiMap {
    pub fn relativistic(radius: f64) -> Result<Self> {
        Self::new(radius, PhiVariant::Relativistic)
    }

    pub fn p_relativistic(radius: f64, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid(format!("p-relativistic exponent must exceed 1, got {p}")));
        }
        Self::new(radius, PhiVariant::PRelativistic { p })
    }

    pub fn custom(radius: f64, custom: CustomPhi) -> Result<Self> {
        Self::new(radius, PhiVariant::Custom(custom))
    }

    pub fn new(radius: f64, variant: PhiVariant) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        let mut map = PhiMap {
            radius,
            variant,
            phi0: 0.0,
            margin: DEFAULT_EVAL_MARGIN,
        };
        map.phi0 = map.potential(&[0.0])?;
        Ok(map)
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin.clamp(0.0, 0.5);
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn variant(&self) -> &PhiVariant {
        &self.variant
    }

    /// `Phi(0)`, cached at construction.
    pub fn phi0_value(&self) -> f64 {
        self.phi0
    }

    pub fn is_radial_catalog(&self) -> bool {
        !matches!(self.variant, PhiVariant::Custom(_))
    }

    /// `phi(y)`; `|y|` must be strictly below `a`.
    pub fn phi(&self, y: &[f64]) -> Result<Vec<f64>> {
        let r = norm(y);
        if !(r < self.radius) {
            return Err(domain(format!(
                "phi evaluated at |y| = {r} outside the open ball of radius {}",
                self.radius
            )));
        }
        Ok(self.phi_interior(y))
    }

    /// Evaluation without the domain check; `|y|` is clamped to `a (1 - margin)`.
    pub(crate) fn phi_interior(&self, y: &[f64]) -> Vec<f64> {
        let a = self.radius;
        let r = norm(y);
        let cap = a * (1.0 - self.margin);
        match &self.variant {
            PhiVariant::Custom(c) => {
                if r > cap {
                    let s = cap / r;
                    let yc: Vec<f64> = y.iter().map(|v| v * s).collect();
                    (c.phi)(&yc)
                } else {
                    (c.phi)(y)
                }
            }
            _ => {
                if r == 0.0 {
                    return vec![0.0; y.len()];
                }
                let rho = (r / a).min(1.0 - self.margin);
                let mag = self.profile(rho);
                y.iter().map(|v| mag * v / r).collect()
            }
        }
    }

    /// `phi^{-1}(z)`, always inside the open ball.
    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        let a = self.radius;
        let s = norm(z);
        if !s.is_finite() {
            return Err(domain("phi inverse of a non-finite vector"));
        }
        match &self.variant {
            PhiVariant::Custom(c) => match &c.inverse {
                Some(inv) => Ok(inv(z)),
                None => self.radial_inverse_fallback(z),
            },
            _ => {
                if s == 0.0 {
                    return Ok(vec![0.0; z.len()]);
                }
                let rho = self.inverse_profile(s).min(1.0 - f64::EPSILON);
                Ok(z.iter().map(|v| a * rho * v / s).collect())
            }
        }
    }

    /// `Phi(y)` on the closed ball.
    pub fn potential(&self, y: &[f64]) -> Result<f64> {
        let a = self.radius;
        let r = norm(y);
        if r > a {
            return Err(domain(format!(
                "Phi evaluated at |y| = {r} outside the closed ball of radius {a}"
            )));
        }
        Ok(match &self.variant {
            PhiVariant::Custom(c) => (c.potential)(y),
            _ => a * self.potential_profile(r / a),
        })
    }

    /// Jacobian of `phi` (Hessian of `Phi`) at `|y| < a`, eigenvalues clamped to
    /// `[1e-10, 1e12]`.
    pub fn jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let n = y.len();
        let a = self.radius;
        match &self.variant {
            PhiVariant::Custom(_) => {
                let h = 1e-7 * a;
                let mut jac = DMatrix::zeros(n, n);
                let mut yp = y.to_vec();
                for k in 0..n {
                    yp[k] = y[k] + h;
                    let fp = self.phi_interior(&yp);
                    yp[k] = y[k] - h;
                    let fm = self.phi_interior(&yp);
                    yp[k] = y[k];
                    for i in 0..n {
                        jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
                    }
                }
                let sym = (&jac + jac.transpose()) * 0.5;
                sym
            }
            _ => {
                let r = norm(y);
                let rho = (r / a).min(1.0 - self.margin);
                let (par, perp) = self.radial_jacobian_eigs(rho);
                radial_matrix(y, r, par, perp)
            }
        }
    }

    /// Jacobian of `phi^{-1}` at `z`.
    pub fn inverse_jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        match &self.variant {
            PhiVariant::Custom(_) => {
                let y = self.inverse(z)?;
                let jac = self.jacobian(&y);
                jac.try_inverse()
                    .ok_or_else(|| domain("singular phi Jacobian while inverting"))
            }
            _ => {
                let s = norm(z);
                let rho = if s == 0.0 { 0.0 } else { self.inverse_profile(s) };
                let (par, perp) = self.radial_jacobian_eigs(rho.min(1.0 - self.margin));
                Ok(radial_matrix(z, s, 1.0 / par, 1.0 / perp))
            }
        }
    }

    /// `min Phi - Phi(0)` over the closed ball, by radial sampling.
    pub fn min_potential_gap(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..=256 {
            let r = self.radius * k as f64 / 256.0;
            if let Ok(v) = self.potential(&[r]) {
                best = best.min(v);
            }
            if let Ok(v) = self.potential(&[-r]) {
                best = best.min(v);
            }
        }
        best - self.phi0
    }

    // Scalar profiles on rho = |y|/a.

    fn profile(&self, rho: f64) -> f64 {
        match self.variant {
            PhiVariant::Relativistic => rho / libm::sqrt((1.0 - rho) * (1.0 + rho)),
            PhiVariant::PRelativistic { p } => {
                if rho == 0.0 {
                    return 0.0;
                }
                let w = libm::pow(rho, p);
                let one_minus_w = -libm::expm1(p * libm::log(rho));
                libm::pow(w / one_minus_w, (p - 1.0) / p)
            }
            PhiVariant::Custom(_) => unreachable!("custom maps have no closed-form profile"),
        }
    }

    fn potential_profile(&self, rho: f64) -> f64 {
        match self.variant {
            PhiVariant::Relativistic => -libm::sqrt(((1.0 - rho) * (1.0 + rho)).max(0.0)),
            PhiVariant::PRelativistic { p } => {
                let one_minus_w = if rho == 0.0 {
                    1.0
                } else {
                    (-libm::expm1(p * libm::log(rho))).max(0.0)
                };
                -libm::pow(one_minus_w, 1.0 / p)
            }
            PhiVariant::Custom(_) => unreachable!("custom maps have no closed-form profile"),
        }
    }

    /// rho in [0, 1) with `profile(rho) = s`.
    fn inverse_profile(&self, s: f64) -> f64 {
        match self.variant {
            PhiVariant::Relativistic => s / libm::sqrt(1.0 + s * s),
            PhiVariant::PRelativistic { p } => {
                // profile = (w / (1 - w))^((p-1)/p) with w = rho^p
                let big_a = libm::pow(s, p / (p - 1.0));
                let w = if big_a > 1.0 {
                    1.0 / (1.0 + 1.0 / big_a)
                } else {
                    big_a / (1.0 + big_a)
                };
                libm::pow(w, 1.0 / p)
            }
            PhiVariant::Custom(_) => unreachable!("custom maps have no closed-form profile"),
        }
    }

    /// (radial, tangential) eigenvalues of the Jacobian at rho.
    fn radial_jacobian_eigs(&self, rho: f64) -> (f64, f64) {
        let a = self.radius;
        let (par, perp) = match self.variant {
            PhiVariant::Relativistic => {
                let one = (1.0 - rho) * (1.0 + rho);
                (libm::pow(one, -1.5), 1.0 / libm::sqrt(one))
            }
            PhiVariant::PRelativistic { p } => {
                if rho == 0.0 {
                    let v = if p == 2.0 {
                        1.0
                    } else if p > 2.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    (v, v)
                } else {
                    let one_minus_w = -libm::expm1(p * libm::log(rho));
                    let par = (p - 1.0)
                        * libm::pow(rho, p - 2.0)
                        * libm::pow(one_minus_w, 1.0 / p - 2.0);
                    (par, self.profile(rho) / rho)
                }
            }
            PhiVariant::Custom(_) => unreachable!("custom maps have no closed-form profile"),
        };
        (
            (par / a).clamp(JAC_MIN, JAC_MAX),
            (perp / a).clamp(JAC_MIN, JAC_MAX),
        )
    }

    fn radial_inverse_fallback(&self, z: &[f64]) -> Result<Vec<f64>> {
        let n = z.len();
        let s = norm(z);
        if s == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let a = self.radius;
        let prof = |r: f64| -> f64 {
            let mut e = vec![0.0; n];
            e[0] = r;
            self.phi_interior(&e)[0]
        };
        let (mut lo, mut hi) = (0.0, a * (1.0 - self.margin));
        if prof(hi) < s {
            // Target beyond the evaluation cap: the root lies in the thin shell.
            return Ok(z.iter().map(|v| hi * v / s).collect());
        }
        let mut r = 0.5 * hi;
        for it in 0..200 {
            let f = prof(r) - s;
            if f.abs() <= 1e-14 * (1.0 + s) {
                return Ok(z.iter().map(|v| r * v / s).collect());
            }
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let h = 1e-7 * a;
            let d = (prof((r + h).min(a * (1.0 - self.margin))) - prof((r - h).max(0.0)))
                / (2.0 * h);
            let newton = r - f / d;
            r = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * a {
                return Ok(z.iter().map(|v| r * v / s).collect());
            }
            if it == 199 {
                break;
            }
        }
        Err(Error::Convergence {
            what: "radial phi inverse",
            iterations: 200,
            residual: (prof(r) - s).abs(),
        })
    }

    /// Samples every `(H_Phi)` invariant on deterministic pseudo-random points.
    pub fn check_hypotheses(&self, sample_count: usize, seed: u64) -> PhiDiagnostics {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = self.radius;
        let mut d = PhiDiagnostics::default();
        for n in 1..=3 {
            let zero = vec![0.0; n];
            let v = self.phi(&zero).map(|p| norm(&p)).unwrap_or(f64::INFINITY);
            d.phi_at_zero = d.phi_at_zero.max(v);
        }
        let count = sample_count.max(1);
        for k in 0..count {
            let n = k % 3 + 1;
            let y1 = sample_ball(&mut rng, n, a * (1.0 - 1e-3));
            let y2 = sample_ball(&mut rng, n, a * (1.0 - 1e-3));

            if let (Ok(p1), Ok(p2)) = (self.phi(&y1), self.phi(&y2)) {
                let diff = sub(&y1, &y2);
                if norm(&diff) > 1e-12 {
                    let inner = dot(&sub(&p1, &p2), &diff);
                    if inner <= 0.0 {
                        d.monotonicity = d.monotonicity.max((-inner).max(f64::MIN_POSITIVE));
                    }
                }
            } else {
                d.monotonicity = f64::INFINITY;
            }

            let mid: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| 0.5 * (u + v)).collect();
            match (self.potential(&y1), self.potential(&y2), self.potential(&mid)) {
                (Ok(f1), Ok(f2), Ok(fm)) => {
                    d.convexity = d.convexity.max(fm - 0.5 * (f1 + f2));
                    d.potential_sign = d.potential_sign.max(f1).max(f2);
                }
                _ => d.convexity = f64::INFINITY,
            }

            // round trip on |z| log-spaced in [1e-3, 1e2]
            let mag = libm::pow(10.0, -3.0 + 5.0 * rng.gen::<f64>());
            let dir = sample_direction(&mut rng, n);
            let z: Vec<f64> = dir.iter().map(|v| v * mag).collect();
            match self.inverse(&z) {
                Ok(y) => {
                    let ry = norm(&y);
                    if ry >= a {
                        d.range = d.range.max((ry - a).max(f64::EPSILON));
                    }
                    match self.phi(&y) {
                        Ok(back) => {
                            let err = norm(&sub(&back, &z)) / (1.0 + mag);
                            d.round_trip = d.round_trip.max(err);
                        }
                        Err(_) => d.round_trip = f64::INFINITY,
                    }
                }
                Err(_) => d.range = f64::INFINITY,
            }

            // gradient of Phi vs phi on the annulus 0.1a <= |y| <= 0.9a
            let rr = a * (0.1 + 0.8 * rng.gen::<f64>());
            let dir = sample_direction(&mut rng, n);
            let y: Vec<f64> = dir.iter().map(|v| v * rr).collect();
            let h = 1e-4 * a;
            if let Ok(p) = self.phi(&y) {
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    let at = |s: f64| {
                        let mut yy = y.clone();
                        yy[i] += s;
                        self.potential(&yy).unwrap_or(f64::NAN)
                    };
                    let g = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
                    worst = worst.max((g - p[i]).abs());
                }
                let rel = worst / (1.0 + norm(&p));
                d.gradient = d.gradient.max(if rel.is_nan() { f64::INFINITY } else { rel });
            }
        }
        d
    }
}

fn radial_matrix(dir: &[f64], r: f64, par: f64, perp: f64) -> DMatrix<f64> {
    let n = dir.len();
    let mut m = DMatrix::identity(n, n) * perp;
    if r > 0.0 {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += (par - perp) * dir[i] * dir[j] / (r * r);
            }
        }
    } else {
        m = DMatrix::identity(n, n) * par;
    }
    m
}

pub(crate) fn sample_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

pub(crate) fn sample_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        if norm(&v) <= 1.0 {
            return v.iter().map(|x| x * radius).collect();
        }
    }
}

/// Largest observed violation of each `(H_Phi)` invariant (0 means none seen).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhiDiagnostics {
    pub phi_at_zero: f64,
    pub monotonicity: f64,
    pub range: f64,
    pub round_trip: f64,
    pub gradient: f64,
    pub potential_sign: f64,
    pub convexity: f64,
}

impl PhiDiagnostics {
    pub fn max_violation(&self) -> f64 {
        [
            self.phi_at_zero,
            self.monotonicity,
            self.range,
            self.round_trip,
            self.gradient,
            self.potential_sign.max(0.0),
            self.convexity.max(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}
