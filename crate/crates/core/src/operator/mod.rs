//! The operator data (f, A⁰, b⁰), its derived symbols, the structural checks
//! at critical points and the per-point spectral analysis.

mod gallery;
mod hypo;

pub use gallery::{gallery, Bump, GalleryParams, SusyPerturbation};
pub use hypo::{check_hypo, HypoReport};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Domain, Shape, SmoothMap};
use crate::landscape::CriticalPoint;
use crate::linalg::{
    count_halfplanes, det, eigenvalues, monomial_basis, rank, symmetric_eigenvalues, Lu, Matrix,
};
use crate::sampling::halton;

/// P = −Σ h∂ᵢ aᵢⱼ h∂ⱼ + ½Σ(bⱼ h∂ⱼ + h∂ⱼ bⱼ) + c⁰ + h c¹ with the Gibbs state e^{−f/h}.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub name: String,
    pub f: SmoothMap,
    pub a0: SmoothMap,
    pub b0: SmoothMap,
    /// user-supplied c⁰, checked against ⟨A⁰∇f,∇f⟩ instead of replacing it
    pub c0_user: Option<SmoothMap>,
    pub domain: Domain,
    pub perturbation: Option<SusyPerturbation>,
}

const SHAPE_SAMPLES: usize = 32;

impl OperatorSpec {
    pub fn new(name: &str, f: SmoothMap, a0: SmoothMap, b0: SmoothMap, domain: Domain) -> Result<Self> {
        let d = domain.dim();
        for (m, shape, what) in [
            (&f, Shape::Scalar, "f"),
            (&a0, Shape::Matrix, "A0"),
            (&b0, Shape::Vector, "b0"),
        ] {
            if m.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: m.dim(),
                });
            }
            if m.shape() != shape {
                return Err(Error::InvalidInput(format!("{what} has shape {:?}, expected {shape:?}", m.shape())));
            }
        }
        for x in halton(&domain, SHAPE_SAMPLES) {
            let a = a0.matrix_value(&x)?;
            let scale = 1.0 + a.norm_max();
            if !a.is_symmetric(1e-12 * scale) {
                return Err(Error::InvalidInput(format!("A0 is not symmetric at {x:?}")));
            }
            let lmin = symmetric_eigenvalues(&a.symmetric_part())[0];
            if lmin < -1e-10 * scale {
                return Err(Error::Assumption(format!(
                    "A0 is not positive semidefinite at {x:?} (eigenvalue {lmin:.3e})"
                )));
            }
        }
        Ok(OperatorSpec {
            name: name.to_string(),
            f,
            a0,
            b0,
            c0_user: None,
            domain,
            perturbation: None,
        })
    }

    /// Build from expression strings (A⁰ row-major).
    pub fn from_expressions(name: &str, domain: Domain, f: &str, a0: &[&str], b0: &[&str]) -> Result<Self> {
        let d = domain.dim();
        Self::new(
            name,
            SmoothMap::scalar(d, f)?,
            SmoothMap::matrix(d, a0)?,
            SmoothMap::vector(d, b0)?,
            domain,
        )
    }

    pub fn with_c0(mut self, c0: SmoothMap) -> Result<Self> {
        if c0.dim() != self.dim() || c0.shape() != Shape::Scalar {
            return Err(Error::InvalidInput("c0 must be a scalar field of the operator dimension".into()));
        }
        self.c0_user = Some(c0);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// c⁰ = ⟨A⁰∇f, ∇f⟩
    pub fn c0(&self, x: &[f64]) -> Result<f64> {
        let g = self.f.gradient(x)?;
        let a = self.a0.matrix_value(x)?;
        Ok(crate::linalg::dot(&a.matvec(&g), &g))
    }

    /// c¹ = −div(A⁰∇f); equals −tr(A⁰H) where A⁰ is constant or ∇f = 0.
    pub fn c1(&self, x: &[f64]) -> Result<f64> {
        let g = self.f.gradient(x)?;
        let h = self.f.hessian(x)?;
        let a = self.a0.matrix_value(x)?;
        let w = self.a0.column_divergence(x)?;
        Ok(-(a.matmul(&h).trace() + crate::linalg::dot(&w, &g)))
    }

    /// c⁰ + h c¹
    pub fn potential(&self, x: &[f64], h: f64) -> Result<f64> {
        Ok(self.c0(x)? + h * self.c1(x)?)
    }

    /// B = db⁰, with Bᵢⱼ = ∂ⱼb⁰ᵢ
    pub fn b_matrix(&self, x: &[f64]) -> Result<Matrix> {
        self.b0.jacobian(x)
    }

    /// Λ = 2HA⁰ + Bᵗ
    pub fn lambda_matrix(&self, x: &[f64]) -> Result<Matrix> {
        let h = self.f.hessian(x)?;
        let a = self.a0.matrix_value(x)?;
        let b = self.b_matrix(x)?;
        Ok(&h.matmul(&a).scaled(2.0) + &b.transpose())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EikonalReport {
    pub samples: usize,
    pub c0_derived: bool,
    /// max |⟨A⁰∇f,∇f⟩ − c⁰| / scale
    pub max_c0_residual: f64,
    /// max |b⁰·∇f| / scale
    pub max_transport_residual: f64,
    /// max |div b⁰| / (1 + ‖db⁰‖)
    pub max_div_residual: f64,
    pub min_c0: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Check ⟨A⁰∇f,∇f⟩ = c⁰, b⁰·∇f = 0 and div b⁰ = 0 at quasi-random points.
pub fn verify_eikonal(spec: &OperatorSpec, sample_count: usize, tol: f64) -> Result<EikonalReport> {
    let mut rep = EikonalReport {
        samples: sample_count,
        c0_derived: spec.c0_user.is_none(),
        max_c0_residual: 0.0,
        max_transport_residual: 0.0,
        max_div_residual: 0.0,
        min_c0: f64::INFINITY,
        tol,
        pass: true,
    };
    for x in halton(&spec.domain, sample_count) {
        let g = spec.f.gradient(&x)?;
        let a = spec.a0.matrix_value(&x)?;
        let b = spec.b0.vector_value(&x)?;
        let gn = crate::linalg::norm2(&g);
        let c0 = crate::linalg::dot(&a.matvec(&g), &g);
        let scale = 1.0 + a.norm_fro() * gn * gn + crate::linalg::norm2(&b) * gn;
        if let Some(u) = &spec.c0_user {
            let r = (u.value(&x)? - c0).abs() / scale;
            rep.max_c0_residual = rep.max_c0_residual.max(r);
        }
        rep.min_c0 = rep.min_c0.min(c0);
        rep.max_transport_residual = rep.max_transport_residual.max(crate::linalg::dot(&b, &g).abs() / scale);
        let bj = spec.b_matrix(&x)?;
        rep.max_div_residual = rep.max_div_residual.max(bj.trace().abs() / (1.0 + bj.norm_fro()));
    }
    rep.pass = rep.max_c0_residual <= tol
        && rep.max_transport_residual <= tol
        && rep.max_div_residual <= tol
        && rep.min_c0 >= -tol;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalStructureReport {
    pub x: Vec<f64>,
    pub index: usize,
    pub b_norm: f64,
    pub c0: f64,
    pub vanishing_ok: bool,
    /// ‖BᵗH + HB‖
    pub antisymmetry_residual: f64,
    pub antisymmetry_ok: bool,
    pub trace_b: f64,
    pub kalman_rank: usize,
    pub kalman_ok: bool,
    pub hessian_invertible: bool,
    /// all four checks passed
    pub harmonic_certified: bool,
}

/// Kalman matrix [A, BA, …, B^{d−1}A].
pub fn kalman_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let d = a.rows();
    let mut out = a.clone();
    let mut cur = a.clone();
    for _ in 1..d {
        cur = b.matmul(&cur);
        out = out.hcat(&cur);
    }
    out
}

pub fn verify_critical_structure(spec: &OperatorSpec, u: &CriticalPoint) -> Result<CriticalStructureReport> {
    verify_critical_structure_with(spec, u, 1.0)
}

/// As `verify_critical_structure`, with every tolerance multiplied by `tol_scale`.
pub fn verify_critical_structure_with(
    spec: &OperatorSpec,
    u: &CriticalPoint,
    tol_scale: f64,
) -> Result<CriticalStructureReport> {
    let x = &u.x;
    let b0 = spec.b0.vector_value(x)?;
    let c0 = spec.c0(x)?;
    let a = spec.a0.matrix_value(x)?;
    let h = spec.f.hessian(x)?;
    let b = spec.b_matrix(x)?;
    let g = spec.f.gradient(x)?;
    let vtol = 1e-8 * tol_scale * (1.0 + a.norm_fro()) * (1.0 + crate::linalg::norm2(&g));
    let b_norm = crate::linalg::norm2(&b0);
    let vanishing_ok = b_norm <= vtol.max(1e-8 * tol_scale) && c0.abs() <= vtol;
    let anti = &b.transpose().matmul(&h) + &h.matmul(&b);
    let antisymmetry_residual = anti.norm_fro();
    let antisymmetry_ok = antisymmetry_residual <= 1e-10 * tol_scale * h.norm_fro() * b.norm_fro();
    let kalman_rank = rank(&kalman_matrix(&a, &b), 1e-10 * tol_scale);
    let d = spec.dim();
    let hmin = u.hessian_eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let hessian_invertible = hmin > 1e-8 * tol_scale * (1.0 + h.norm_fro());
    Ok(CriticalStructureReport {
        x: x.clone(),
        index: u.index,
        b_norm,
        c0,
        vanishing_ok,
        antisymmetry_residual,
        antisymmetry_ok,
        trace_b: b.trace(),
        kalman_rank,
        kalman_ok: kalman_rank == d,
        hessian_invertible,
        harmonic_certified: vanishing_ok && antisymmetry_ok && kalman_rank == d && hessian_invertible,
    })
}

/// Tolerances for `analyze_critical`.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    /// |Im μ| accepted as zero, relative to 1 + ‖Λ‖
    pub realness_tol: f64,
    /// |Re| counted as on the axis, relative to 1 + ‖Λ‖
    pub axis_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            realness_tol: 1e-8,
            axis_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HarmonicValue {
    pub value: Complex64,
    pub multiplicity: usize,
    /// the multi-indices ν merged into this value
    pub indices: Vec<Vec<usize>>,
    /// several distinct ν produced the same value
    pub coincident: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalAnalysis {
    pub point: CriticalPoint,
    #[serde(skip)]
    pub a: Matrix,
    #[serde(skip)]
    pub b: Matrix,
    #[serde(skip)]
    pub lambda: Matrix,
    pub lambda_eigenvalues: Vec<Complex64>,
    /// eigenvalues of Λ with Re < 0, Re = 0, Re > 0
    pub counts: (usize, usize, usize),
    /// the negative eigenvalue of Λ at an index-1 point
    pub mu: Option<f64>,
    /// eigenvector for μ with A⁰η·η = −μ, sign unset
    pub eta: Option<Vec<f64>>,
    /// eigenvalues of the fundamental matrix with Im > 0
    pub fundamental: Vec<Complex64>,
    pub trace_tilde: Complex64,
}

impl CriticalAnalysis {
    /// μ⁰ for a multi-index ν: (1/i)Σ νₗ λₗ + ½ tr̃
    pub fn harmonic_value(&self, nu: &[usize]) -> Complex64 {
        let s: Complex64 = nu
            .iter()
            .zip(&self.fundamental)
            .map(|(&n, &l)| l * n as f64)
            .sum();
        s / Complex64::i() + self.trace_tilde * 0.5
    }

    /// All values with |ν| ≤ `max_order`, coincident values merged, sorted by real part.
    pub fn harmonic_values(&self, max_order: usize) -> Vec<HarmonicValue> {
        let d = self.fundamental.len();
        let mut out: Vec<HarmonicValue> = Vec::new();
        for k in 0..=max_order {
            let basis = if k == 0 { vec![vec![0; d]] } else { monomial_basis(d, k) };
            for nu in basis {
                let v = self.harmonic_value(&nu);
                if let Some(hv) = out.iter_mut().find(|h| (h.value - v).norm() <= 1e-9 * (1.0 + v.norm())) {
                    hv.multiplicity += 1;
                    hv.indices.push(nu);
                    hv.coincident = true;
                } else {
                    out.push(HarmonicValue {
                        value: v,
                        multiplicity: 1,
                        indices: vec![nu],
                        coincident: false,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.value
                .re
                .partial_cmp(&b.value.re)
                .unwrap()
                .then(a.value.im.partial_cmp(&b.value.im).unwrap())
        });
        out
    }

    /// |det(Id + H⁻¹ηηᵗ) + 1|, zero at a saddle.
    pub fn eta_identity_residual(&self) -> Option<f64> {
        let eta = self.eta.as_ref()?;
        let d = eta.len();
        let hinv = crate::linalg::inverse(&self.point.hessian).ok()?;
        let p = Matrix::from_fn(d, d, |i, j| eta[i] * eta[j]);
        let e = &Matrix::identity(d) + &hinv.matmul(&p);
        Some((det(&e).ok()? + 1.0).abs())
    }
}

/// Real eigenvector of `m` for the simple real eigenvalue `mu`, by inverse iteration.
fn real_eigenvector(m: &Matrix, mu: f64) -> Result<Vec<f64>> {
    let d = m.rows();
    let shift = mu + 1e-10 * (1.0 + m.norm_fro());
    let shifted = Matrix::from_fn(d, d, |i, j| m[(i, j)] - if i == j { shift } else { 0.0 });
    let lu = Lu::new(&shifted)?;
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 / (1.0 + i as f64).sqrt()).collect();
    for _ in 0..4 {
        let w = if lu.is_singular() { v.clone() } else { lu.solve(&v)? };
        let n = crate::linalg::norm2(&w);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Numerical("eigenvector iteration broke down".into()));
        }
        v = w.iter().map(|x| x / n).collect();
        if lu.is_singular() {
            break;
        }
    }
    // deterministic sign: largest component positive
    let k = (0..d).fold(0, |k, i| if v[i].abs() > v[k].abs() { i } else { k });
    if v[k] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

/// Λ-spectrum, μ and η, the fundamental matrix and tr̃ at a critical point.
pub fn analyze_critical(spec: &OperatorSpec, u: &CriticalPoint) -> Result<CriticalAnalysis> {
    analyze_critical_with(spec, u, &AnalysisOptions::default())
}

pub fn analyze_critical_with(
    spec: &OperatorSpec,
    u: &CriticalPoint,
    opt: &AnalysisOptions,
) -> Result<CriticalAnalysis> {
    let x = &u.x;
    let d = spec.dim();
    let a = spec.a0.matrix_value(x)?;
    let b = spec.b_matrix(x)?;
    let h = u.hessian.clone();
    let lambda = &h.matmul(&a).scaled(2.0) + &b.transpose();
    let scale = 1.0 + lambda.norm_fro();
    let lev = eigenvalues(&lambda)?;
    let counts = count_halfplanes(&lev, opt.axis_tol * scale);
    if counts != (u.index, 0, d - u.index) {
        return Err(Error::Assumption(format!(
            "Λ at {x:?} has half-plane counts {counts:?}, expected ({}, 0, {})",
            u.index,
            d - u.index
        )));
    }
    let (mu, eta) = if u.index == 1 {
        let z = lev.iter().find(|z| z.re < 0.0).copied().unwrap();
        if z.im.abs() > opt.realness_tol * scale {
            return Err(Error::Assumption(format!("μ at {x:?} is not real: {z}")));
        }
        let mu = z.re;
        let mut eta = real_eigenvector(&lambda, mu)?;
        let q = crate::linalg::dot(&a.matvec(&eta), &eta);
        if q <= 1e-14 * a.norm_fro() {
            return Err(Error::Assumption(format!(
                "A0η·η = {q:.3e} ≤ 0 at {x:?}; cannot normalise η"
            )));
        }
        let s = (-mu / q).sqrt();
        eta.iter_mut().for_each(|v| *v *= s);
        (Some(mu), Some(eta))
    } else {
        (None, None)
    };

    // σ(F_{p⁰}) = i·σ(F_q) with F_q = [[B, 2A],[2HAH, −Bᵗ]]
    let mut fq = Matrix::zeros(2 * d, 2 * d);
    fq.set_block(0, 0, &b);
    fq.set_block(0, d, &a.scaled(2.0));
    fq.set_block(d, 0, &h.matmul(&a).matmul(&h).scaled(2.0));
    fq.set_block(d, d, &b.transpose().scaled(-1.0));
    let fev = eigenvalues(&fq)?;
    let ftol = 1e-9 * (1.0 + fq.norm_fro());
    let mut q: Vec<Complex64> = fev.into_iter().filter(|z| z.re > ftol).collect();
    if q.len() != d {
        return Err(Error::Assumption(format!(
            "fundamental matrix at {x:?} has {} eigenvalues with Im > 0, expected {d}",
            q.len()
        )));
    }
    q.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    let fundamental: Vec<Complex64> = q.iter().map(|z| z * Complex64::i()).collect();
    let two_c1 = -(h.matmul(&a).scaled(2.0).trace() + b.trace());
    let trace_tilde = q.iter().sum::<Complex64>() + two_c1;

    Ok(CriticalAnalysis {
        point: u.clone(),
        a,
        b,
        lambda,
        lambda_eigenvalues: lev,
        counts,
        mu,
        eta,
        fundamental,
        trace_tilde,
    })
}

/// Eigenvalues of the complex fundamental matrix [[iB, 2A],[−2HAH, −iBᵗ]], assembled directly.
pub fn fundamental_matrix(a: &Matrix, b: &Matrix, h: &Matrix) -> crate::linalg::CMatrix {
    let d = a.rows();
    let i = Complex64::i();
    let mut f = crate::linalg::CMatrix::zeros(2 * d, 2 * d);
    let hah = h.matmul(a).matmul(h);
    for r in 0..d {
        for c in 0..d {
            f[(r, c)] = i * b[(r, c)];
            f[(r, c + d)] = Complex64::new(2.0 * a[(r, c)], 0.0);
            f[(r + d, c)] = Complex64::new(-2.0 * hah[(r, c)], 0.0);
            f[(r + d, c + d)] = -i * b[(c, r)];
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{classify, LandscapeTolerances};

    fn witten_1d(src: &str) -> OperatorSpec {
        OperatorSpec::from_expressions("witten", Domain::cube(1, 2.5), src, &["1"], &["0"]).unwrap()
    }

    #[test]
    fn witten_saddle_and_minimum() {
        let spec = witten_1d("x1^4/4 - x1^2/2");
        let tol = LandscapeTolerances::default();
        let s = classify(&spec.f, vec![0.0], &tol).unwrap();
        let an = analyze_critical(&spec, &s).unwrap();
        assert!((an.mu.unwrap() + 2.0).abs() < 1e-14);
        assert!((an.eta.as_ref().unwrap()[0].abs() - 2f64.sqrt()).abs() < 1e-12);
        assert!(an.eta_identity_residual().unwrap() < 1e-12);
        assert!(an.harmonic_value(&[0]).re > 0.0);
        let m = classify(&spec.f, vec![1.0], &tol).unwrap();
        let an = analyze_critical(&spec, &m).unwrap();
        assert_eq!(an.counts, (0, 0, 1));
        assert!((an.fundamental[0] - Complex64::new(0.0, 4.0)).norm() < 1e-12);
        assert!(an.trace_tilde.norm() < 1e-12);
        assert!(an.harmonic_value(&[0]).norm() < 1e-12);
    }

    #[test]
    fn kalman_negative_control() {
        let a = Matrix::diag(&[0.0, 3.0]);
        assert_eq!(rank(&kalman_matrix(&a, &Matrix::zeros(2, 2)), 1e-10), 1);
        let b = Matrix::from_rows(&[vec![0.0, 1.0], vec![-2.0, 0.0]]);
        assert_eq!(rank(&kalman_matrix(&a, &b), 1e-10), 2);
    }

    #[test]
    fn corrupted_transport_flagged() {
        let d = Domain::cube(1, 2.0);
        let good = OperatorSpec::from_expressions("w", d.clone(), "x1^4/4 - x1^2/2", &["1"], &["0"]).unwrap();
        assert!(verify_eikonal(&good, 64, 1e-9).unwrap().pass);
        let bad = OperatorSpec::from_expressions("w", d, "x1^4/4 - x1^2/2", &["1"], &["x1^3 - x1"]).unwrap();
        let r = verify_eikonal(&bad, 64, 1e-9).unwrap();
        assert!(!r.pass && r.max_transport_residual > 1e-3);
    }

    #[test]
    fn non_psd_diffusion_rejected() {
        let r = OperatorSpec::from_expressions("w", Domain::cube(1, 1.0), "x1^2", &["-1"], &["0"]);
        assert!(matches!(r, Err(Error::Assumption(_))));
    }
}
