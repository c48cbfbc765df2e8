use num_complex::Complex64;
use serde::Serialize;

use super::DiscreteOperator;
use crate::error::{Error, Result};
use crate::landscape::Labeling;
use crate::linalg::{cond_1, eigen, symmetric_eigen, tridiagonal_eigen, CMatrix, Lu};

/// Largest symmetric problem decomposed densely.
const SYMMETRIC_LIMIT: usize = 3000;
/// Nonsymmetric eigenvectors come from inverse iteration, one LU per vector.
const NONSYMMETRIC_LIMIT: usize = 300;

#[derive(Clone, Debug)]
pub struct SemigroupOptions {
    /// distinct finite depths S₁ < … < S_{K−1}; S_K = ∞ is implicit
    pub depths: Vec<f64>,
    pub delta: f64,
    /// g₊, default |ln h|²
    pub g_plus: Option<f64>,
    pub points_per_window: usize,
    pub plateau_tol: f64,
    /// expected relaxation rate, usually λ(m, h)/h from the asymptotics
    pub predicted_rate: Option<f64>,
    pub rate_tol: f64,
    /// the last window is checked on [t⁺_{K−1}, final_span·t⁺_{K−1}]
    pub final_span: f64,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        SemigroupOptions {
            depths: Vec::new(),
            delta: 0.8,
            g_plus: None,
            points_per_window: 9,
            plateau_tol: 1e-3,
            predicted_rate: None,
            rate_tol: 0.2,
            final_span: 10.0,
        }
    }
}

/// Distinct finite depths of a labeling, merged with its tie tolerance.
pub fn plateau_depths(labeling: &Labeling) -> Vec<f64> {
    let mut s: Vec<f64> = labeling.records.iter().map(|r| r.depth).filter(|d| d.is_finite()).collect();
    s.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for v in s {
        if out.last().map_or(true, |l| v - l > labeling.tie_tol) {
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PlateauWindow {
    pub k: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// rank of Π≤_k
    pub rank: usize,
    pub max_error: f64,
    /// the window is empty at this h
    pub empty: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelaxationFit {
    pub t_start: f64,
    pub t_end: f64,
    pub fitted_rate: f64,
    /// Re λ₂/h from the discrete spectrum
    pub numeric_rate: f64,
    pub predicted_rate: Option<f64>,
    /// |fitted/reference − 1|, reference = predicted if given
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub h: f64,
    pub windows: Vec<PlateauWindow>,
    pub relaxation: RelaxationFit,
    pub times: Vec<f64>,
    /// ‖u(t) − Π u₀‖/‖u₀‖ with Π the projection on the Gibbs state
    pub distances: Vec<f64>,
    /// 1-norm condition number of the eigenvector matrix
    pub condition: f64,
    pub pass: bool,
}

/// u ↦ Σ cᵢ e^{−λᵢt/h} vᵢ with c = V⁻¹u₀.
struct Spectral {
    values: Vec<Complex64>,
    /// columns are eigenvectors
    vectors: CMatrix,
    coeffs: Vec<Complex64>,
    condition: f64,
}

impl Spectral {
    fn build(op: &DiscreteOperator, u0: &[f64]) -> Result<Self> {
        let n = op.len();
        if op.symmetric {
            if n > SYMMETRIC_LIMIT {
                return Err(Error::Unsupported(format!("dense semigroup limited to {SYMMETRIC_LIMIT} unknowns")));
            }
            let (kl, ku) = op.matrix.bandwidth();
            let se = if kl <= 1 && ku <= 1 {
                let diag: Vec<f64> = (0..n).map(|i| op.matrix.get(i, i)).collect();
                let off: Vec<f64> = (1..n).map(|i| op.matrix.get(i, i - 1)).collect();
                tridiagonal_eigen(&diag, &off, true)?
            } else {
                symmetric_eigen(&op.matrix.to_dense())?
            };
            let v = se.vectors;
            let coeffs = (0..n)
                .map(|j| Complex64::new((0..n).map(|i| v[(i, j)] * u0[i]).sum(), 0.0))
                .collect();
            Ok(Spectral {
                values: se.values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                vectors: v.to_complex(),
                coeffs,
                condition: 1.0,
            })
        } else {
            if n > NONSYMMETRIC_LIMIT {
                return Err(Error::Unsupported(format!(
                    "nonsymmetric dense semigroup limited to {NONSYMMETRIC_LIMIT} unknowns"
                )));
            }
            let er = eigen(&op.matrix.to_dense(), true)?;
            let cols = er.vectors.ok_or_else(|| Error::Numerical("no eigenvectors".into()))?;
            let vectors = CMatrix::from_fn(n, n, |i, j| cols[j][i]);
            let condition = cond_1(&vectors)?;
            if !condition.is_finite() {
                return Err(Error::Numerical("eigenvector matrix is singular".into()));
            }
            let b: Vec<Complex64> = u0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let coeffs = Lu::new(&vectors)?.solve(&b)?;
            Ok(Spectral {
                values: er.values,
                vectors,
                coeffs,
                condition,
            })
        }
    }

    fn combine(&self, weight: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let n = self.coeffs.len();
        let w: Vec<Complex64> = (0..n).map(|j| self.coeffs[j] * weight(j)).collect();
        (0..n)
            .map(|i| (0..n).map(|j| self.vectors[(i, j)] * w[j]).sum::<Complex64>().re)
            .collect()
    }

    fn evolve(&self, t: f64, h: f64) -> Vec<f64> {
        self.combine(|j| (-self.values[j] * (t / h)).exp())
    }

    fn project(&self, sel: &[bool]) -> Vec<f64> {
        self.combine(|j| if sel[j] { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }
}

fn rel_dist(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() / scale
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 || a == b {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Spectral reconstruction of e^{−tP/h}u₀: plateau windows and the final
/// exponential approach to the Gibbs projection.
pub fn semigroup_check(op: &DiscreteOperator, u0: &[f64], times: &[f64], opt: &SemigroupOptions) -> Result<SemigroupReport> {
    let n = op.len();
    if u0.len() != n {
        return Err(Error::Dimension { expected: n, got: u0.len() });
    }
    let unorm = crate::linalg::norm2(u0);
    if !(unorm > 0.0) {
        return Err(Error::InvalidInput("u0 must be nonzero".into()));
    }
    if opt.depths.windows(2).any(|w| w[1] <= w[0]) || opt.depths.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("depths must be finite and strictly increasing".into()));
    }
    let h = op.h;
    let sp = Spectral::build(op, u0)?;
    let modulus: Vec<f64> = sp.values.iter().map(|v| v.norm()).collect();
    let kernel = (0..n).min_by(|&a, &b| modulus[a].total_cmp(&modulus[b])).unwrap();
    let gibbs_sel: Vec<bool> = (0..n).map(|j| j == kernel).collect();
    let gibbs = sp.project(&gibbs_sel);

    let g_plus = opt.g_plus.unwrap_or_else(|| h.ln().powi(2));
    let g_minus = (-opt.delta / h).exp();
    let kk = opt.depths.len() + 1;
    let mut windows = Vec::with_capacity(kk);
    for k in 1..=kk {
        let t_start = if k == 1 { g_plus } else { g_plus * (2.0 * opt.depths[k - 2] / h).exp() };
        let t_end = if k == kk {
            opt.final_span * t_start
        } else {
            g_minus * (2.0 * opt.depths[k - 1] / h).exp()
        };
        let sel: Vec<bool> = if k == kk {
            gibbs_sel.clone()
        } else {
            let thr = (-2.0 * opt.depths[k - 1] / h).exp();
            modulus.iter().map(|&m| m < thr).collect()
        };
        let rank = sel.iter().filter(|&&s| s).count();
        if t_start >= t_end {
            windows.push(PlateauWindow {
                k,
                t_start,
                t_end,
                rank,
                max_error: 0.0,
                empty: true,
                pass: true,
            });
            continue;
        }
        let target = sp.project(&sel);
        let max_error = log_space(t_start, t_end, opt.points_per_window)
            .into_iter()
            .map(|t| rel_dist(&sp.evolve(t, h), &target, unorm))
            .fold(0.0, f64::max);
        windows.push(PlateauWindow {
            k,
            t_start,
            t_end,
            rank,
            max_error,
            empty: false,
            pass: max_error <= opt.plateau_tol,
        });
    }

    let second = (0..n)
        .filter(|&j| j != kernel)
        .min_by(|&a, &b| modulus[a].total_cmp(&modulus[b]))
        .ok_or_else(|| Error::InvalidInput("need at least two unknowns".into()))?;
    let numeric_rate = sp.values[second].re / h;
    if !(numeric_rate > 0.0) {
        return Err(Error::Numerical("second eigenvalue has nonpositive real part".into()));
    }
    let (fa, fb) = (1.0 / numeric_rate, 6.0 / numeric_rate);
    let fit_t = log_space(fa, fb, 25);
    let pts: Vec<(f64, f64)> = fit_t
        .iter()
        .map(|&t| (t, rel_dist(&sp.evolve(t, h), &gibbs, unorm)))
        .filter(|p| p.1 > 0.0)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Numerical("relaxation already below roundoff".into()));
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (tb, yb) = (st / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - tb) * (p.1 - yb), a.1 + (p.0 - tb) * (p.0 - tb)));
    let fitted_rate = -sxy / sxx;
    let reference = opt.predicted_rate.unwrap_or(numeric_rate);
    let relative_error = (fitted_rate / reference - 1.0).abs();
    let relaxation = RelaxationFit {
        t_start: fa,
        t_end: fb,
        fitted_rate,
        numeric_rate,
        predicted_rate: opt.predicted_rate,
        relative_error,
        pass: relative_error <= opt.rate_tol,
    };

    let distances = times
        .iter()
        .map(|&t| rel_dist(&sp.evolve(t, h), &gibbs, unorm))
        .collect();
    let pass = relaxation.pass && windows.iter().all(|w| w.pass);
    Ok(SemigroupReport {
        h,
        windows,
        relaxation,
        times: times.to_vec(),
        distances,
        condition: sp.condition,
        pass,
    })
}
