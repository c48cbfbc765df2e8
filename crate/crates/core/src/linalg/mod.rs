//! Dense real and complex linear algebra.

mod eigen;
mod lu;
mod matrix;
mod symmetric;
mod transport;

pub use eigen::{eigen, eigen_complex, eigenvalues, inverse_iteration, EigenResult};
pub use lu::{cond_1, det, inverse, solve, Lu};
pub use matrix::{dot, norm2, CMatrix, Matrix, Scalar};
pub use symmetric::{
    jacobi_eigen, symmetric_eigen, symmetric_eigenvalues, tridiagonal_eigen, SymmetricEigen,
};
pub use transport::{monomial_basis, transport_operator, MAX_TRANSPORT_DIM};

use crate::error::{Error, Result};

/// Condition estimate above which a pivot block counts as singular.
pub const SINGULAR_COND: f64 = 1e12;

/// Counts of eigenvalues with `Re < −tol`, `|Re| ≤ tol`, `Re > tol`.
pub fn halfplane_counts(m: &Matrix, tol: f64) -> Result<(usize, usize, usize)> {
    let ev = eigenvalues(m)?;
    Ok(count_halfplanes(&ev, tol))
}

pub fn count_halfplanes(ev: &[num_complex::Complex64], tol: f64) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for z in ev {
        if z.re < -tol {
            c.0 += 1;
        } else if z.re > tol {
            c.2 += 1;
        } else {
            c.1 += 1;
        }
    }
    c
}

/// `D − C A⁻¹ B` for the split `M = [[A, B], [C, D]]` with `A` the leading `k×k` block.
pub fn schur_complement(m: &Matrix, k: usize) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let n = m.rows();
    if k > n {
        return Err(Error::InvalidInput(format!("split {k} exceeds size {n}")));
    }
    if k == 0 {
        return Ok(m.clone());
    }
    let a = m.block(0, k, 0, k);
    let b = m.block(0, k, k, n);
    let c = m.block(k, n, 0, k);
    let d = m.block(k, n, k, n);
    let lu = Lu::new(&a)?;
    if lu.is_singular() {
        return Err(Error::Singular("leading block is singular".into()));
    }
    let inv = lu.inverse()?;
    let cond = a.norm_1() * inv.norm_1();
    if !cond.is_finite() || cond > SINGULAR_COND {
        return Err(Error::Singular(format!(
            "leading block condition estimate {cond:.3e} exceeds {SINGULAR_COND:.0e}"
        )));
    }
    let x = lu.solve_matrix(&b)?;
    Ok(&d - &c.matmul(&x))
}

/// Numerical rank from Householder QR with column pivoting; a diagonal entry of R
/// counts when it exceeds `rel_tol` times the largest one.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    let r = pivoted_r_diagonal(m);
    match r.first() {
        None => 0,
        Some(&top) if top == 0.0 => 0,
        Some(&top) => r.iter().filter(|&&x| x > rel_tol * top).count(),
    }
}

/// |R_kk| from column-pivoted Householder QR, in elimination order.
pub fn pivoted_r_diagonal(m: &Matrix) -> Vec<f64> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut norms: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)] * a[(i, j)]).sum())
        .collect();
    let steps = rows.min(cols);
    let mut diag = Vec::with_capacity(steps);
    for k in 0..steps {
        let (p, _) = norms
            .iter()
            .enumerate()
            .skip(k)
            .fold((k, -1.0), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        if p != k {
            for i in 0..rows {
                let t = a[(i, k)];
                a[(i, k)] = a[(i, p)];
                a[(i, p)] = t;
            }
            norms.swap(k, p);
        }
        let xnorm = (k..rows).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        diag.push(xnorm);
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if a[(k, k)] > 0.0 { -xnorm } else { xnorm };
        let mut v: Vec<f64> = (k..rows).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|x| x * x).sum();
        if vn2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let s: f64 = (k..rows).map(|i| v[i - k] * a[(i, j)]).sum::<f64>() * 2.0 / vn2;
            for i in k..rows {
                a[(i, j)] -= s * v[i - k];
            }
        }
        for (j, nj) in norms.iter_mut().enumerate().skip(k + 1) {
            *nj = (k + 1..rows).map(|i| a[(i, j)] * a[(i, j)]).sum();
        }
    }
    diag
}
