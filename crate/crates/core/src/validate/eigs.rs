use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sparse::{BandLu, Csr};
use super::DiscreteOperator;
use crate::error::{Error, Result};
use crate::linalg::{eigen, tridiagonal_eigen, Matrix};

/// Dense solves are used up to this many unknowns.
const DENSE_LIMIT: usize = 600;
const EXTRA_VECTORS: usize = 8;
const MAX_ITER: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Tridiagonal,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallEigs {
    /// the `count` eigenvalues of smallest modulus, ascending in |λ|
    pub values: Vec<Complex64>,
    /// the next one
    pub gap: Option<Complex64>,
    pub method: EigenMethod,
    pub iterations: usize,
    pub converged: bool,
}

fn by_modulus(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
}

fn split(mut all: Vec<Complex64>, count: usize, method: EigenMethod, iterations: usize, converged: bool) -> SmallEigs {
    by_modulus(&mut all);
    let gap = all.get(count).copied();
    all.truncate(count);
    SmallEigs {
        values: all,
        gap,
        method,
        iterations,
        converged,
    }
}

pub fn small_eigs(op: &DiscreteOperator, count: usize) -> Result<SmallEigs> {
    small_eigs_matrix(&op.matrix, count, op.symmetric, 1e-2 * op.h)
}

/// The `count` eigenvalues of smallest modulus and the next one. `shift` sets
/// the pole −shift used by the shift-invert iteration on large matrices.
pub fn small_eigs_matrix(m: &Csr, count: usize, symmetric: bool, shift: f64) -> Result<SmallEigs> {
    let n = m.n;
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!("cannot take {count} eigenvalues of a size-{n} matrix")));
    }
    let (kl, ku) = m.bandwidth();
    if symmetric && kl <= 1 && ku <= 1 {
        let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
        let off: Vec<f64> = (1..n).map(|i| m.get(i, i - 1)).collect();
        let ev = tridiagonal_eigen(&diag, &off, false)?;
        let all = ev.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        return Ok(split(all, count, EigenMethod::Tridiagonal, 0, true));
    }
    if n <= DENSE_LIMIT {
        let all = eigen(&m.to_dense(), false)?.values;
        return Ok(split(all, count, EigenMethod::Dense, 0, true));
    }
    shift_invert(m, count, shift)
}

/// Modified Gram–Schmidt, twice.
fn orthonormalize(cols: &mut [Vec<f64>]) -> Result<()> {
    for k in 0..cols.len() {
        for _ in 0..2 {
            for j in 0..k {
                let (head, tail) = cols.split_at_mut(k);
                let r: f64 = head[j].iter().zip(&tail[0]).map(|(a, b)| a * b).sum();
                tail[0].iter_mut().zip(&head[j]).for_each(|(b, a)| *b -= r * a);
            }
        }
        let nrm = crate::linalg::norm2(&cols[k]);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Numerical("subspace collapsed in shift-invert iteration".into()));
        }
        cols[k].iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(())
}

/// Block subspace iteration with (P + shift)⁻¹ and Rayleigh–Ritz extraction.
fn shift_invert(m: &Csr, count: usize, shift: f64) -> Result<SmallEigs> {
    let n = m.n;
    let want = (count + 1).min(n);
    let p = (want + EXTRA_VECTORS).min(n);
    let sigma = -shift;
    let lu = BandLu::new(&m.shifted(sigma))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
    orthonormalize(&mut q)?;
    let scale = m.max_abs();
    let mut prev: Option<Vec<Complex64>> = None;
    for it in 1..=MAX_ITER {
        let z: Vec<Vec<f64>> = q.iter().map(|c| lu.solve(c)).collect();
        let h = Matrix::from_fn(p, p, |i, j| q[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum());
        let theta = eigen(&h, false)?.values;
        let mut lam: Vec<Complex64> = theta
            .iter()
            .filter(|t| t.norm() > 0.0)
            .map(|t| Complex64::new(sigma, 0.0) + t.inv())
            .collect();
        by_modulus(&mut lam);
        lam.truncate(want);
        let done = match &prev {
            Some(pv) if pv.len() == lam.len() => lam
                .iter()
                .zip(pv)
                .all(|(a, b)| (a - b).norm() <= 1e-11 * a.norm() + 1e-15 * scale),
            _ => false,
        };
        if done {
            return Ok(split(lam, count, EigenMethod::ShiftInvert, it, true));
        }
        prev = Some(lam);
        q = z;
        orthonormalize(&mut q)?;
    }
    Ok(split(prev.unwrap_or_default(), count, EigenMethod::ShiftInvert, MAX_ITER, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_invert_matches_dense() {
        // nonsymmetric banded test matrix, 2D-like bandwidth
        let n = 700;
        let w = 10;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let mut r = vec![(i, 1.41 + 4.0 * (i as f64 / n as f64).powi(2))];
                if i + 1 < n {
                    r.push((i + 1, -0.5 + 0.1));
                }
                if i >= 1 {
                    r.push((i - 1, -0.5 - 0.1));
                }
                if i + w < n {
                    r.push((i + w, -0.2));
                }
                if i >= w {
                    r.push((i - w, -0.2));
                }
                r
            })
            .collect();
        let m = Csr::from_rows(rows);
        let dense = split(eigen(&m.to_dense(), false).unwrap().values, 4, EigenMethod::Dense, 0, true);
        let si = shift_invert(&m, 4, 1e-3).unwrap();
        assert!(si.converged);
        for (a, b) in si.values.iter().zip(&dense.values) {
            assert!((a - b).norm() < 1e-8 * (1.0 + b.norm()), "{a} vs {b}");
        }
        assert!((si.gap.unwrap() - dense.gap.unwrap()).norm() < 1e-8);
    }
}
