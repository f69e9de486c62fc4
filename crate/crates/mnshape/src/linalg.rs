//! Dense linear algebra at extended precision.
//!
//! The interpolation systems here are small (a few dozen unknowns) but
//! catastrophically ill-conditioned; conditioning is controlled by mantissa
//! width, not by algorithm, so plain Gaussian elimination with partial
//! pivoting on [`XReal`] entries is the whole story. The condition number
//! is the infinity-norm kappa computed from an explicit inverse, which at
//! these sizes costs no more than a handful of extra solves.

use crate::error::{Error, Result};
use crate::scalar::{PrecisionContext, XReal};

/// Row-major dense matrix of extended-precision entries.
#[derive(Debug, Clone)]
pub struct XMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<XReal>,
}

impl XMatrix {
    pub fn zero(n_rows: usize, n_cols: usize, ctx: &PrecisionContext) -> XMatrix {
        XMatrix {
            n_rows,
            n_cols,
            data: vec![ctx.from_u32(0); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize, ctx: &PrecisionContext) -> XMatrix {
        let mut m = XMatrix::zero(n, n, ctx);
        for i in 0..n {
            *m.at_mut(i, i) = ctx.from_u32(1);
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn at(&self, r: usize, c: usize) -> &XReal {
        &self.data[r * self.n_cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut XReal {
        &mut self.data[r * self.n_cols + c]
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Infinity norm: max absolute row sum.
    pub fn inf_norm(&self, ctx: &PrecisionContext) -> XReal {
        let mut best = ctx.from_u32(0);
        for r in 0..self.n_rows {
            let mut s = ctx.from_u32(0);
            for c in 0..self.n_cols {
                s = &s + &self.at(r, c).abs();
            }
            best = best.max(&s);
        }
        best
    }

    /// y = M x.
    pub fn mul_vec(&self, x: &[XReal], ctx: &PrecisionContext) -> Vec<XReal> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                let mut s = ctx.from_u32(0);
                for c in 0..self.n_cols {
                    s = &s + &(self.at(r, c) * &x[c]);
                }
                s
            })
            .collect()
    }
}

/// LU factorization with partial (row) pivoting.
///
/// A pivot whose magnitude falls below `10^(-digits + 10)` means the
/// elimination has consumed the whole mantissa; the factorization reports
/// [`Error::SingularMatrix`] so the caller can escalate digits and retry.
pub struct Lu {
    lu: XMatrix,
    perm: Vec<usize>,
    digits: u32,
}

pub fn lu_factor(m: &XMatrix, ctx: &PrecisionContext) -> Result<Lu> {
    if !m.is_square() {
        return Err(Error::Domain("LU requires a square matrix".into()));
    }
    let n = m.n_rows();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let tiny = ctx.eps(10);
    for k in 0..n {
        let mut p = k;
        for r in (k + 1)..n {
            if a.at(r, k).abs() > a.at(p, k).abs() {
                p = r;
            }
        }
        if a.at(p, k).abs() < tiny {
            return Err(Error::SingularMatrix {
                digits: ctx.digits(),
            });
        }
        if p != k {
            for c in 0..n {
                let tmp = a.at(k, c).clone();
                *a.at_mut(k, c) = a.at(p, c).clone();
                *a.at_mut(p, c) = tmp;
            }
            perm.swap(k, p);
        }
        let pivot = a.at(k, k).clone();
        for r in (k + 1)..n {
            let factor = a.at(r, k) / &pivot;
            *a.at_mut(r, k) = factor.clone();
            for c in (k + 1)..n {
                let sub = &factor * a.at(k, c);
                *a.at_mut(r, c) = a.at(r, c) - &sub;
            }
        }
    }
    Ok(Lu {
        lu: a,
        perm,
        digits: ctx.digits(),
    })
}

impl Lu {
    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn solve(&self, rhs: &[XReal], ctx: &PrecisionContext) -> Vec<XReal> {
        let n = self.lu.n_rows();
        assert_eq!(rhs.len(), n);
        let mut y: Vec<XReal> = self.perm.iter().map(|&i| rhs[i].clone()).collect();
        // forward substitution (unit lower factor)
        for r in 1..n {
            let mut s = y[r].clone();
            for c in 0..r {
                let sub = self.lu.at(r, c) * &y[c];
                s = &s - &sub;
            }
            y[r] = s;
        }
        // back substitution
        let mut x = vec![ctx.from_u32(0); n];
        for r in (0..n).rev() {
            let mut s = y[r].clone();
            for c in (r + 1)..n {
                let sub = self.lu.at(r, c) * &x[c];
                s = &s - &sub;
            }
            x[r] = &s / self.lu.at(r, r);
        }
        x
    }
}

/// Solves `M x = rhs`, returning the solution and the infinity norm of the
/// residual `M x - rhs`.
pub fn solve_with_residual(
    m: &XMatrix,
    rhs: &[XReal],
    ctx: &PrecisionContext,
) -> Result<(Vec<XReal>, XReal)> {
    let lu = lu_factor(m, ctx)?;
    let x = lu.solve(rhs, ctx);
    let mx = m.mul_vec(&x, ctx);
    let mut res = ctx.from_u32(0);
    for (a, b) in mx.iter().zip(rhs) {
        res = res.max(&(a - b).abs());
    }
    Ok((x, res))
}

/// Explicit inverse via one LU factorization and n solves.
pub fn inverse(m: &XMatrix, ctx: &PrecisionContext) -> Result<XMatrix> {
    let n = m.n_rows();
    let lu = lu_factor(m, ctx)?;
    let mut inv = XMatrix::zero(n, n, ctx);
    let mut e = vec![ctx.from_u32(0); n];
    for col in 0..n {
        e[col] = ctx.from_u32(1);
        let x = lu.solve(&e, ctx);
        e[col] = ctx.from_u32(0);
        for row in 0..n {
            *inv.at_mut(row, col) = x[row].clone();
        }
    }
    Ok(inv)
}

/// Infinity-norm condition number `kappa = ||M||_inf * ||M^-1||_inf`.
pub fn condition_number(m: &XMatrix, ctx: &PrecisionContext) -> Result<XReal> {
    if !m.is_square() {
        return Err(Error::Domain(
            "condition number requires a square matrix".into(),
        ));
    }
    let inv = inverse(m, ctx)?;
    Ok(&m.inf_norm(ctx) * &inv.inf_norm(ctx))
}
