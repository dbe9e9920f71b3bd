//! Discrete Rayleigh constant `lambda_1` of an admissible endpoint subspace.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::boundary::{BoundaryFunctional, ConvexSetK};
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Smallest eigenvalue of the stiffness / lumped-mass pair restricted to curves
/// whose endpoints lie in `D(j)`. Components decouple, so `dim` only validates.
pub fn rayleigh_lambda1(boundary: &BoundaryFunctional, grid: &Grid, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    // endpoint values (v_0, v_M) = z (alpha, beta), or pinned at zero
    let border = match boundary.set() {
        ConvexSetK::Point => None,
        ConvexSetK::FullSpace | ConvexSetK::Diagonal => return Ok(0.0),
        ConvexSetK::Strip { sigma } => {
            return Err(Error::Unsupported(format!(
                "lambda_1 for the strip of width {sigma} (admissible set is not a subspace)"
            )))
        }
        set => {
            let (a, b) = set.linear_coefficients().unwrap();
            if a == b {
                return Ok(0.0);
            }
            Some((b, a))
        }
    };
    let pencil = Pencil::new(grid, border);
    Ok(pencil.smallest())
}

/// `D^{-1/2} K D^{-1/2}` as a tridiagonal chain plus an optional border row.
struct Pencil {
    diag: Vec<f64>,
    off: Vec<f64>,
    border: Option<(f64, f64, f64)>,
}

impl Pencil {
    fn new(grid: &Grid, border: Option<(f64, f64)>) -> Self {
        let m = grid.intervals();
        let dt = grid.dt();
        let inner = m - 1;
        // interior masses are dt, stiffness 2/dt on the diagonal and -1/dt off it
        let diag = vec![2.0 / (dt * dt); inner];
        let off = vec![-1.0 / (dt * dt); inner.saturating_sub(1)];
        let border = border.map(|(alpha, beta)| {
            let mass = 0.5 * dt * (alpha * alpha + beta * beta);
            let kzz = (alpha * alpha + beta * beta) / dt;
            let scale = 1.0 / libm::sqrt(mass * dt);
            (kzz / mass, -alpha / dt * scale, -beta / dt * scale)
        });
        Pencil { diag, off, border }
    }

    fn size(&self) -> usize {
        self.diag.len() + usize::from(self.border.is_some())
    }

    /// Number of eigenvalues strictly below `lam` (Sylvester inertia of the LDL^T pivots).
    fn count_below(&self, lam: f64) -> usize {
        let n = self.diag.len();
        let tiny = 1e-300;
        let mut count = 0;
        let mut prev_d = 1.0;
        let mut prev_c = 0.0;
        let mut schur_z = 0.0;
        for i in 0..n {
            let mut d = self.diag[i] - lam;
            // border column entry at row i before elimination
            let mut c = match self.border {
                Some((_, first, last)) => {
                    let mut v = 0.0;
                    if i == 0 {
                        v += first;
                    }
                    if i == n - 1 {
                        v += last;
                    }
                    v
                }
                None => 0.0,
            };
            if i > 0 {
                let e = self.off[i - 1];
                d -= e * e / prev_d;
                c -= e * prev_c / prev_d;
            }
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
            schur_z += c * c / d;
            prev_d = d;
            prev_c = c;
        }
        if let Some((zz, _, _)) = self.border {
            let dz = zz - lam - schur_z;
            if dz <= 0.0 {
                count += 1;
            }
        }
        count
    }

    fn smallest(&self) -> f64 {
        // Gershgorin upper bound
        let mut hi: f64 = 0.0;
        for (i, d) in self.diag.iter().enumerate() {
            let mut r = d.abs();
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i < self.off.len() {
                r += self.off[i].abs();
            }
            if let Some((_, f, l)) = self.border {
                if i == 0 {
                    r += f.abs();
                }
                if i + 1 == self.diag.len() {
                    r += l.abs();
                }
            }
            hi = hi.max(r);
        }
        if let Some((zz, f, l)) = self.border {
            hi = hi.max(zz.abs() + f.abs() + l.abs());
        }
        let mut lo = 0.0;
        debug_assert!(self.size() >= 1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn dirichlet_close_to_pi_squared() {
        let g = Grid::new(1.0, 400).unwrap();
        let l = rayleigh_lambda1(&BoundaryFunctional::dirichlet(), &g, 1).unwrap();
        assert!((l / (PI * PI) - 1.0).abs() < 0.02);
        // lumped mass gives the closed form (2/dt sin(pi dt/2))^2
        let dt = 1.0 / 400.0;
        let exact = (2.0 / dt * libm::sin(PI * dt / 2.0)).powi(2);
        assert!((l - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn constants_admissible_give_zero() {
        let g = Grid::new(2.0, 50).unwrap();
        assert_eq!(rayleigh_lambda1(&BoundaryFunctional::neumann(), &g, 3).unwrap(), 0.0);
        assert_eq!(rayleigh_lambda1(&BoundaryFunctional::periodic(), &g, 1).unwrap(), 0.0);
        let s = BoundaryFunctional::indicator(ConvexSetK::Strip { sigma: 0.5 }).unwrap();
        assert!(matches!(rayleigh_lambda1(&s, &g, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn antiperiodic_scales_with_length() {
        let g = Grid::new(2.0, 400).unwrap();
        let l = rayleigh_lambda1(&BoundaryFunctional::antiperiodic(), &g, 1).unwrap();
        assert!((l / (PI * PI / 4.0) - 1.0).abs() < 0.02);
    }
}
