//! Symmetric block-tridiagonal systems and their reduction onto the two endpoints.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric block-tridiagonal matrix: `diag[i]` on node `i`, `off[i]` coupling
/// node `i` (rows) with node `i + 1` (columns).
#[derive(Clone, Debug)]
pub struct BlockTridiag {
    pub block: usize,
    pub diag: Vec<DMatrix<f64>>,
    pub off: Vec<DMatrix<f64>>,
}

impl BlockTridiag {
    pub fn nodes(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.block;
        let mut y = alloc::vec![0.0; x.len()];
        for i in 0..self.nodes() {
            let xi = DVector::from_column_slice(&x[i * n..(i + 1) * n]);
            let mut yi = &self.diag[i] * &xi;
            if i > 0 {
                let xp = DVector::from_column_slice(&x[(i - 1) * n..i * n]);
                yi += self.off[i - 1].transpose() * xp;
            }
            if i + 1 < self.nodes() {
                let xn = DVector::from_column_slice(&x[(i + 1) * n..(i + 2) * n]);
                yi += &self.off[i] * xn;
            }
            y[i * n..(i + 1) * n].copy_from_slice(yi.as_slice());
        }
        y
    }

    /// Block Cholesky solve with several right-hand sides (columns of `rhs`).
    /// Fails when the matrix is not positive definite.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.block;
        let k = self.nodes();
        let cols = rhs.ncols();
        let mut chol = Vec::with_capacity(k);
        // L_i L_i^T = D_i - C_{i-1}^T C_{i-1},  C_{i-1} = L_{i-1}^{-1} off[i-1]
        let mut c_prev: Option<DMatrix<f64>> = None;
        let mut ys: Vec<DMatrix<f64>> = Vec::with_capacity(k);
        let mut cs: Vec<DMatrix<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut d = self.diag[i].clone();
            let mut r = rhs.rows(i * n, n).into_owned();
            if let Some(c) = &c_prev {
                d -= c.transpose() * c;
                r -= c.transpose() * &ys[i - 1];
            }
            let ch = nalgebra::Cholesky::new(d).ok_or(Error::Convergence {
                what: "block-tridiagonal factorization (matrix not positive definite)",
                iterations: i,
                residual: f64::NAN,
            })?;
            let l = ch.l();
            let y = l.solve_lower_triangular(&r).unwrap();
            if i + 1 < k {
                let c = l.solve_lower_triangular(&self.off[i]).unwrap();
                cs.push(c.clone());
                c_prev = Some(c);
            }
            ys.push(y);
            chol.push(l);
        }
        let mut x = DMatrix::zeros(k * n, cols);
        let mut next: Option<DMatrix<f64>> = None;
        for i in (0..k).rev() {
            let mut r = ys[i].clone();
            if let Some(xn) = &next {
                r -= &cs[i] * xn;
            }
            let xi = chol[i].transpose().solve_upper_triangular(&r).unwrap();
            x.rows_mut(i * n, n).copy_from(&xi);
            next = Some(xi);
        }
        Ok(x)
    }
}

/// Interior elimination of a node-chain system `H x = r` leaving the endpoints.
#[derive(Clone, Debug)]
pub struct EndpointReduction {
    pub block: usize,
    /// Schur complement on `(x_0, x_M)`.
    pub schur: DMatrix<f64>,
    /// Reduced right-hand side.
    pub rhs: DVector<f64>,
    interior_rhs: DMatrix<f64>,
    interior_coupling: DMatrix<f64>,
}

impl EndpointReduction {
    pub fn new(h: &BlockTridiag, r: &[f64]) -> Result<Self> {
        let n = h.block;
        let k = h.nodes();
        let m = k - 1;
        let interior = BlockTridiag {
            block: n,
            diag: h.diag[1..m].to_vec(),
            off: h.off[1..m - 1].to_vec(),
        };
        let ni = (m - 1) * n;
        // columns: coupling to x_0, coupling to x_M, interior rhs
        let mut b = DMatrix::zeros(ni, 2 * n + 1);
        // H_{1,0} = off[0]^T ; H_{M-1,M} = off[M-1]
        b.view_mut((0, 0), (n, n)).copy_from(&h.off[0].transpose());
        {
            let mut v = b.view_mut((ni - n, n), (n, n));
            v += &h.off[m - 1];
        }
        for i in 0..ni {
            b[(i, 2 * n)] = r[n + i];
        }
        let y = interior.solve(&b)?;
        let coupling = y.columns(0, 2 * n).into_owned();
        let yr = y.column(2 * n).into_owned();
        // H_EI rows: x_0 couples to node 1 via off[0], x_M to node M-1 via off[M-1]^T
        let mut hei = DMatrix::zeros(2 * n, ni);
        hei.view_mut((0, 0), (n, n)).copy_from(&h.off[0]);
        {
            let mut v = hei.view_mut((n, ni - n), (n, n));
            v += h.off[m - 1].transpose();
        }
        let mut hee = DMatrix::zeros(2 * n, 2 * n);
        hee.view_mut((0, 0), (n, n)).copy_from(&h.diag[0]);
        hee.view_mut((n, n), (n, n)).copy_from(&h.diag[m]);
        let schur = hee - &hei * &coupling;
        let schur = (&schur + schur.transpose()) * 0.5;
        let mut re = DVector::zeros(2 * n);
        for i in 0..n {
            re[i] = r[i];
            re[n + i] = r[m * n + i];
        }
        let rhs = re - &hei * &yr;
        Ok(EndpointReduction {
            block: n,
            schur,
            rhs,
            interior_rhs: DMatrix::from_column_slice(ni, 1, yr.as_slice()),
            interior_coupling: coupling,
        })
    }

    /// Full solution given the endpoint values `(x_0, x_M)`.
    pub fn expand(&self, endpoints: &[f64]) -> Vec<f64> {
        let n = self.block;
        let e = DVector::from_column_slice(endpoints);
        let xi = self.interior_rhs.column(0) - &self.interior_coupling * e;
        let mut out = Vec::with_capacity(xi.len() + 2 * n);
        out.extend_from_slice(&endpoints[..n]);
        out.extend_from_slice(xi.as_slice());
        out.extend_from_slice(&endpoints[n..]);
        out
    }
}
