use super::matrix::Matrix;
use crate::error::{Error, Result};

pub const MAX_TRANSPORT_DIM: usize = 500;

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n.saturating_sub(k));
    let mut r: usize = 1;
    for i in 0..k {
        r = r.checked_mul(n - i)? / (i + 1);
    }
    Some(r)
}

/// Exponent vectors with |γ| = m in graded lexicographic order (x1^m first).
pub fn monomial_basis(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fill(&mut cur, 0, m, &mut out);
    out
}

fn fill(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    let d = cur.len();
    if pos + 1 == d {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(cur, pos + 1, left - k, out);
    }
    cur[pos] = 0;
}

/// Matrix of `p ↦ (A x)·∇p` on homogeneous polynomials of degree `m`.
/// Column `c` holds the image of the `c`-th basis monomial.
pub fn transport_operator(a: &Matrix, m: usize) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let d = a.rows();
    if d == 0 || m == 0 {
        return Err(Error::InvalidInput("transport operator needs d ≥ 1 and m ≥ 1".into()));
    }
    let dim = binomial(m + d - 1, d - 1).unwrap_or(usize::MAX);
    if dim > MAX_TRANSPORT_DIM {
        return Err(Error::InvalidInput(format!(
            "monomial basis dimension {dim} exceeds {MAX_TRANSPORT_DIM}"
        )));
    }
    let basis = monomial_basis(d, m);
    let index: std::collections::HashMap<Vec<usize>, usize> =
        basis.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
    let mut out = Matrix::zeros(dim, dim);
    for (col, g) in basis.iter().enumerate() {
        for i in 0..d {
            if g[i] == 0 {
                continue;
            }
            for j in 0..d {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                let mut t = g.clone();
                t[i] -= 1;
                t[j] += 1;
                out[(index[&t], col)] += aij * g[i] as f64;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_order_and_size() {
        let b = monomial_basis(2, 2);
        assert_eq!(b, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomial_basis(3, 4).len(), binomial(6, 2).unwrap());
    }

    #[test]
    fn diagonal_case() {
        let a = Matrix::diag(&[1.0, 2.0]);
        let l = transport_operator(&a, 2).unwrap();
        assert_eq!(l, Matrix::diag(&[2.0, 3.0, 4.0]));
    }

    #[test]
    fn euler_operator() {
        let l = transport_operator(&Matrix::identity(3), 1).unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn overflow_rejected() {
        assert!(transport_operator(&Matrix::identity(6), 10).is_err());
    }
}
