//! Nonsymmetric eigenvalue problems: balancing, Hessenberg reduction and
//! shifted QR, with eigenvectors from inverse iteration.

use num_complex::Complex64;

use super::lu::Lu;
use super::matrix::{norm2, CMatrix, Matrix};
use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Sorted by real part, then imaginary part.
    pub values: Vec<Complex64>,
    /// Unit right eigenvectors, same order as `values`.
    pub vectors: Option<Vec<Vec<Complex64>>>,
    /// max ‖Mv − λv‖ / (‖M‖_F ‖v‖) over returned pairs, or a roundoff estimate without vectors.
    pub backward_error: f64,
}

/// Eigenvalues (and optionally eigenvectors) of a real square matrix.
pub fn eigen(m: &Matrix, want_vectors: bool) -> Result<EigenResult> {
    check_square_finite(m.rows(), m.cols(), m.all_finite())?;
    let n = m.rows();
    if n == 0 {
        return Ok(EigenResult {
            values: vec![],
            vectors: want_vectors.then(Vec::new),
            backward_error: 0.0,
        });
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut values = hqr(&mut h)?;
    sort_values(&mut values);
    finish(&m.to_complex(), values, want_vectors)
}

/// Eigenvalues (and optionally eigenvectors) of a complex square matrix.
pub fn eigen_complex(m: &CMatrix, want_vectors: bool) -> Result<EigenResult> {
    check_square_finite(m.rows(), m.cols(), m.all_finite())?;
    let n = m.rows();
    if n == 0 {
        return Ok(EigenResult {
            values: vec![],
            vectors: want_vectors.then(Vec::new),
            backward_error: 0.0,
        });
    }
    let mut h = m.clone();
    complex_hessenberg(&mut h);
    let mut values = complex_hqr(&mut h)?;
    sort_values(&mut values);
    finish(m, values, want_vectors)
}

pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    Ok(eigen(m, false)?.values)
}

fn check_square_finite(r: usize, c: usize, finite: bool) -> Result<()> {
    if r != c {
        return Err(Error::Dimension {
            expected: r,
            got: c,
        });
    }
    if !finite {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    Ok(())
}

fn sort_values(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

fn finish(m: &CMatrix, values: Vec<Complex64>, want_vectors: bool) -> Result<EigenResult> {
    let n = m.rows();
    let mnorm = m.norm_fro().max(f64::MIN_POSITIVE);
    if !want_vectors {
        return Ok(EigenResult {
            values,
            vectors: None,
            backward_error: EPS * n as f64,
        });
    }
    let mut vectors = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for &lam in &values {
        let v = inverse_iteration(m, lam, mnorm)?;
        let mv = m.matvec(&v);
        let r: Vec<Complex64> = mv.iter().zip(&v).map(|(a, b)| a - lam * b).collect();
        worst = worst.max(norm2(&r) / (mnorm * norm2(&v)));
        vectors.push(v);
    }
    Ok(EigenResult {
        values,
        vectors: Some(vectors),
        backward_error: worst,
    })
}

/// Inverse iteration on `M − λI`, with the shift nudged off the exact eigenvalue.
pub fn inverse_iteration(m: &CMatrix, lam: Complex64, mnorm: f64) -> Result<Vec<Complex64>> {
    let n = m.rows();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for attempt in 0..4 {
        let delta = mnorm * EPS * 10f64.powi(attempt as i32 * 2 + 1);
        let shift = lam + Complex64::new(delta, 0.5 * delta);
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        let lu = Lu::new(&a)?;
        if lu.is_singular() {
            continue;
        }
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + (i as f64 * 0.7548776662466927).fract(), 0.1 * i as f64))
            .collect();
        for _ in 0..3 {
            let w = lu.solve(&v)?;
            let nw = norm2(&w);
            if !nw.is_finite() || nw == 0.0 {
                break;
            }
            v = w.into_iter().map(|x| x / nw).collect();
        }
        let mv = m.matvec(&v);
        let r: Vec<Complex64> = mv.iter().zip(&v).map(|(a, b)| a - lam * b).collect();
        let res = norm2(&r) / mnorm;
        if best.as_ref().map_or(true, |(b, _)| res < *b) {
            best = Some((res, v));
        }
        if res <= 1e3 * EPS * n as f64 {
            break;
        }
    }
    let (_, v) = best.ok_or_else(|| Error::Numerical("inverse iteration failed".into()))?;
    // fix the phase: largest component real positive
    let k = (0..n)
        .max_by(|&i, &j| v[i].norm().partial_cmp(&v[j].norm()).unwrap())
        .unwrap_or(0);
    let phase = v[k].conj() / v[k].norm();
    Ok(v.into_iter().map(|x| x * phase).collect())
}

fn balance(a: &mut Matrix) {
    let n = a.rows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut Matrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    let high = n - 1;
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
    for i in 2..n {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
fn hqr(h: &mut Matrix) -> Result<Vec<Complex64>> {
    let nn = h.rows();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let low: isize = 0;
    let mut n: isize = nn as isize - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let (mut s, mut z): (f64, f64);
    let (mut w, mut x, mut y);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let at = |i: isize, j: isize| (i as usize, j as usize);

    let mut iter = 0usize;
    while n >= low {
        let mut l = n;
        while l > low {
            s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[at(l, l - 1)].abs() < EPS * s {
                break;
            }
            l -= 1;
        }
        if l == n {
            h[at(n, n)] += exshift;
            d[n as usize] = h[at(n, n)];
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[at(n, n - 1)] * h[at(n - 1, n)];
            p = (h[at(n - 1, n - 1)] - h[at(n, n)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[at(n, n)] += exshift;
            h[at(n - 1, n - 1)] += exshift;
            x = h[at(n, n)];
            let nu = n as usize;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[at(n, n)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[at(n - 1, n - 1)];
                w = h[at(n, n - 1)] * h[at(n - 1, n)];
            }
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    h[at(i, i)] -= x;
                }
                s = h[at(n, n - 1)].abs() + h[at(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        h[at(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::Numerical("QR iteration did not converge".into()));
            }

            let mut m = n - 2;
            while m >= l {
                z = h[at(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                q = h[at(m + 1, m + 1)] - z - r - s;
                r = h[at(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[at(m, m - 1)].abs() * (q.abs() + r.abs())
                    < EPS
                        * (p.abs()
                            * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                h[at(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[at(i, i - 3)] = 0.0;
                }
            }

            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[at(k, k - 1)];
                    q = h[at(k + 1, k - 1)];
                    r = if notlast { h[at(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[at(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k, k - 1)] = -h[at(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn as isize {
                        p = h[at(k, j)] + q * h[at(k + 1, j)];
                        if notlast {
                            p += r * h[at(k + 2, j)];
                            h[at(k + 2, j)] -= p * z;
                        }
                        h[at(k, j)] -= p * x;
                        h[at(k + 1, j)] -= p * y;
                    }
                    let imax = n.min(k + 3);
                    for i in 0..=imax {
                        p = x * h[at(i, k)] + y * h[at(i, k + 1)];
                        if notlast {
                            p += z * h[at(i, k + 2)];
                            h[at(i, k + 2)] -= p * r;
                        }
                        h[at(i, k)] -= p;
                        h[at(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(d.into_iter().zip(e).map(|(re, im)| Complex64::new(re, im)).collect())
}

fn complex_hessenberg(h: &mut CMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let xnorm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vn = norm2(&v);
        if vn == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vn;
        }
        // H <- (I - 2vv*) H
        for j in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, i) in (k + 1..n).enumerate() {
                s += v[t].conj() * h[(i, j)];
            }
            for (t, i) in (k + 1..n).enumerate() {
                h[(i, j)] -= v[t] * s * 2.0;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, j) in (k + 1..n).enumerate() {
                s += h[(i, j)] * v[t];
            }
            for (t, j) in (k + 1..n).enumerate() {
                h[(i, j)] -= s * v[t].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Single-shift QR with Wilkinson shifts on a complex Hessenberg matrix.
fn complex_hqr(h: &mut CMatrix) -> Result<Vec<Complex64>> {
    let n = h.rows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { h.norm_fro() } else { s };
            if h[(l, l - 1)].norm() <= EPS * s {
                h[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 300 {
            return Err(Error::Numerical("complex QR iteration did not converge".into()));
        }
        let a = h[(hi - 1, hi - 1)];
        let b = h[(hi - 1, hi)];
        let c = h[(hi, hi - 1)];
        let d = h[(hi, hi)];
        let mu = if iter % 11 == 10 {
            d + Complex64::new(c.norm() * 0.75, c.norm() * 0.43)
        } else {
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) * 0.5 + disc;
            let m2 = (a + d) * 0.5 - disc;
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == 0.0 {
                (1.0, Complex64::new(0.0, 0.0))
            } else if x.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                (x.norm() / r, (x / x.norm()) * y.conj() / r)
            };
            for j in k..=hi {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = u * cs + sn * v;
                h[(k + 1, j)] = -sn.conj() * u + v * cs;
            }
            rots.push((cs, sn));
        }
        for (t, k) in (l..hi).enumerate() {
            let (cs, sn) = rots[t];
            let top = (k + 2).min(hi);
            for i in l..=top {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u * cs + v * sn.conj();
                h[(i, k + 1)] = -u * sn + v * cs;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, re: f64, im: f64, tol: f64) -> bool {
        (a.re - re).abs() <= tol && (a.im - im).abs() <= tol
    }

    #[test]
    fn two_by_two_real() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 3.0]]);
        let r = eigen(&m, true).unwrap();
        let s = 17f64.sqrt();
        assert!(close(r.values[0], (3.0 - s) / 2.0, 0.0, 1e-14));
        assert!(close(r.values[1], (3.0 + s) / 2.0, 0.0, 1e-14));
        assert!(r.backward_error < 1e-13);
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let v = eigenvalues(&m).unwrap();
        assert!(close(v[0], 0.0, -1.0, 1e-15));
        assert!(close(v[1], 0.0, 1.0, 1e-15));
    }

    #[test]
    fn identity_and_triangular() {
        let v = eigenvalues(&Matrix::identity(5)).unwrap();
        assert!(v.iter().all(|z| close(*z, 1.0, 0.0, 0.0)));
        let t = Matrix::from_rows(&[
            vec![1.0, 5.0, -2.0],
            vec![0.0, -3.0, 7.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let v = eigenvalues(&t).unwrap();
        assert!(close(v[0], -3.0, 0.0, 1e-14));
        assert!(close(v[1], 1.0, 0.0, 1e-14));
        assert!(close(v[2], 2.0, 0.0, 1e-14));
    }

    #[test]
    fn companion_matrix_roots() {
        // (x-1)(x-2)(x-3)(x+4)(x^2+1) expanded
        let roots = [1.0, 2.0, 3.0, -4.0];
        let mut c = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= a * r;
            }
            c = next;
        }
        let mut next = vec![0.0; c.len() + 2];
        for (i, &a) in c.iter().enumerate() {
            next[i] += a;
            next[i + 2] += a;
        }
        c = next;
        let n = c.len() - 1;
        let comp = Matrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -c[j + 1]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let r = eigen(&comp, true).unwrap();
        let want = [(-4.0, 0.0), (0.0, -1.0), (0.0, 1.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)];
        for (z, (re, im)) in r.values.iter().zip(want) {
            assert!(close(*z, re, im, 1e-9), "{z} vs {re} {im}");
        }
        assert!(r.backward_error < 1e-12);
    }

    #[test]
    fn complex_matches_real_path() {
        let m = Matrix::from_rows(&[
            vec![4.0, -2.0, 1.0, 0.5],
            vec![3.0, 1.0, -1.0, 2.0],
            vec![0.2, 0.7, -2.0, 1.0],
            vec![1.0, 0.0, 3.0, 0.5],
        ]);
        let a = eigen(&m, false).unwrap().values;
        let b = eigen_complex(&m.to_complex(), true).unwrap();
        for (x, y) in a.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(b.backward_error < 1e-13);
    }

    #[test]
    fn complex_diagonal_shift() {
        let i = Complex64::new(0.0, 1.0);
        let m = CMatrix::from_rows(&[
            vec![i * 2.0, Complex64::new(1.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), -i],
        ]);
        let v = eigen_complex(&m, false).unwrap().values;
        assert!(close(v[0], 0.0, -1.0, 1e-15) && close(v[1], 0.0, 2.0, 1e-15));
    }
}
