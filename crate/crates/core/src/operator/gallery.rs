use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::error::{Error, Result};
use crate::fields::{Domain, Expr, Shape, SmoothMap};
use crate::linalg::Matrix;

/// Parameters of the named example families; unset fields take defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalleryParams {
    /// potential f (witten, nonreversible, susy_breaking)
    pub f: Option<String>,
    /// dimension of f, or of the position space for kfp
    pub dim: Option<usize>,
    /// kfp: V(x) in x1..xn
    pub potential: Option<String>,
    /// kfp: W(v), also written in x1..xn
    pub kinetic: Option<String>,
    /// kfp friction γ
    pub gamma: Option<f64>,
    /// nonreversible: b⁰ = strength · J∇f
    pub strength: Option<f64>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    /// susy_breaking: level C₀
    pub c0: Option<f64>,
    /// susy_breaking: centre ρ₁ of the bump χ
    pub center: Option<Vec<f64>>,
    /// susy_breaking: the point ρ₂ outside the loop
    pub rho2: Option<Vec<f64>>,
    /// susy_breaking: χ = 1 inside radii[0], 0 outside radii[1]
    pub radii: Option<[f64; 2]>,
}

pub const GALLERY_NAMES: [&str; 4] = ["witten", "nonreversible", "kfp", "susy_breaking"];

/// Radial C^∞ cutoff: 1 for r ≤ r_in, 0 for r ≥ r_out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub r_in: f64,
    pub r_out: f64,
}

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

impl Bump {
    fn radius(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt()
    }

    /// χ and dχ/dr at radius r.
    fn profile(&self, r: f64) -> (f64, f64) {
        let w = self.r_out - self.r_in;
        let s = (r - self.r_in) / w;
        if s <= 0.0 {
            return (1.0, 0.0);
        }
        if s >= 1.0 {
            return (0.0, 0.0);
        }
        let (a, b) = (psi(1.0 - s), psi(s));
        let g = a / (a + b);
        let dg = -a * b * (1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s)) / ((a + b) * (a + b));
        (g, dg / w)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile(self.radius(x)).0
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = self.radius(x);
        let (_, dr) = self.profile(r);
        if dr == 0.0 || r == 0.0 {
            return vec![0.0; x.len()];
        }
        x.iter().zip(&self.center).map(|(a, c)| dr * (a - c) / r).collect()
    }
}

/// The h-dependent field b^per = e^{2(f − C₀)/h} d*χ with d* = (∂₂, −∂₁).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusyPerturbation {
    pub c0: f64,
    pub bump: Bump,
    pub rho2: Vec<f64>,
}

impl SusyPerturbation {
    pub fn field(&self, f: &SmoothMap, x: &[f64], h: f64) -> Vec<f64> {
        let g = self.bump.gradient(x);
        if g.iter().all(|v| *v == 0.0) {
            return vec![0.0, 0.0];
        }
        let w = (2.0 * (f.eval_scalar_raw(x) - self.c0) / h).exp();
        vec![w * g[1], -w * g[0]]
    }

    /// max f on the transition annulus < C₀ < min(f(ρ₁), f(ρ₂)), and ρ₂ outside it.
    pub fn check_levels(&self, f: &SmoothMap) -> Result<()> {
        let c = &self.bump.center;
        if self.bump.r_in <= 0.0 || self.bump.r_out <= self.bump.r_in {
            return Err(Error::InvalidInput("bump radii must satisfy 0 < r_in < r_out".into()));
        }
        let d2 = self.rho2.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d2 <= self.bump.r_out {
            return Err(Error::Assumption("ρ₂ lies inside the support of χ".into()));
        }
        let mut fmax = f64::NEG_INFINITY;
        let (nr, nt) = (40, 720);
        for i in 0..=nr {
            let r = self.bump.r_in + (self.bump.r_out - self.bump.r_in) * i as f64 / nr as f64;
            for k in 0..nt {
                let t = 2.0 * std::f64::consts::PI * k as f64 / nt as f64;
                fmax = fmax.max(f.value(&[c[0] + r * t.cos(), c[1] + r * t.sin()])?);
            }
        }
        let f1 = f.value(c)?;
        let f2 = f.value(&self.rho2)?;
        if !(fmax < self.c0 && self.c0 < f1.min(f2)) {
            return Err(Error::Assumption(format!(
                "level condition fails: max f on the annulus {fmax:.4}, C0 {:.4}, f(ρ1) {f1:.4}, f(ρ2) {f2:.4}",
                self.c0
            )));
        }
        Ok(())
    }
}

fn domain_from(p: &GalleryParams, default_lo: Vec<f64>, default_hi: Vec<f64>) -> Result<Domain> {
    Domain::new(p.lo.clone().unwrap_or(default_lo), p.hi.clone().unwrap_or(default_hi))
}

fn grad_exprs(e: &Expr, d: usize) -> Vec<Expr> {
    (0..d).map(|i| e.diff(i)).collect()
}

/// Build one of the example operators: witten, nonreversible, kfp, susy_breaking.
pub fn gallery(name: &str, p: &GalleryParams) -> Result<OperatorSpec> {
    match name {
        "witten" => {
            let d = p.dim.unwrap_or(1);
            let src = p.f.clone().unwrap_or_else(|| default_f(d));
            let dom = domain_from(p, vec![-2.5; d], vec![2.5; d])?;
            OperatorSpec::new(
                "witten",
                SmoothMap::scalar(d, &src)?,
                SmoothMap::identity(d),
                SmoothMap::zero_vector(d),
                dom,
            )
        }
        "nonreversible" => {
            let d = p.dim.unwrap_or(2);
            if d < 2 {
                return Err(Error::InvalidInput("nonreversible needs d ≥ 2".into()));
            }
            let s = p.strength.unwrap_or(1.0);
            if !s.is_finite() {
                return Err(Error::InvalidInput("strength must be finite".into()));
            }
            let src = p.f.clone().unwrap_or_else(|| default_f(d));
            let fe = Expr::parse(&src, d)?;
            let g = grad_exprs(&fe, d);
            // J = block-diag([[0, 1], [−1, 0]], …), zero on a trailing odd axis
            let mut b = vec![Expr::Const(0.0); d];
            for k in 0..d / 2 {
                b[2 * k] = Expr::mul(Expr::Const(s), g[2 * k + 1].clone());
                b[2 * k + 1] = Expr::neg(Expr::mul(Expr::Const(s), g[2 * k].clone()));
            }
            let dom = domain_from(p, vec![-2.5; d], vec![2.5; d])?;
            OperatorSpec::new(
                "nonreversible",
                SmoothMap::from_exprs(d, Shape::Scalar, vec![fe])?,
                SmoothMap::identity(d),
                SmoothMap::from_exprs(d, Shape::Vector, b)?,
                dom,
            )
        }
        "kfp" => {
            let n = p.dim.unwrap_or(1);
            let gamma = p.gamma.unwrap_or(1.0);
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::InvalidInput(format!("γ must be positive, got {gamma}")));
            }
            let v = Expr::parse(&p.potential.clone().unwrap_or_else(|| default_f(n)), n)?;
            let w0 = Expr::parse(
                &p.kinetic
                    .clone()
                    .unwrap_or_else(|| (1..=n).map(|i| format!("x{i}^2/2")).collect::<Vec<_>>().join(" + ")),
                n,
            )?;
            let d = 2 * n;
            let w = w0.remap_vars(&|i| i + n);
            let f = Expr::mul(Expr::Const(0.5), Expr::add(v.clone(), w.clone()));
            let mut b = Vec::with_capacity(d);
            for i in 0..n {
                b.push(w.diff(n + i));
            }
            for i in 0..n {
                b.push(Expr::neg(v.diff(i)));
            }
            let mut diag = vec![0.0; n];
            diag.extend(std::iter::repeat(gamma).take(n));
            let mut lo = vec![-2.5; n];
            lo.extend(std::iter::repeat(-4.0).take(n));
            let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
            let dom = domain_from(p, lo, hi)?;
            OperatorSpec::new(
                "kfp",
                SmoothMap::from_exprs(d, Shape::Scalar, vec![f])?,
                SmoothMap::constant_matrix(&Matrix::diag(&diag))?,
                SmoothMap::from_exprs(d, Shape::Vector, b)?,
                dom,
            )
        }
        "susy_breaking" => {
            if p.dim.is_some_and(|d| d != 2) {
                return Err(Error::InvalidInput("susy_breaking is two-dimensional".into()));
            }
            let src = p.f.clone().unwrap_or_else(|| "(x1^2 + x2^2 - 1)^2 + 0.3*x1".into());
            let radii = p.radii.unwrap_or([0.85, 1.15]);
            let pert = SusyPerturbation {
                c0: p.c0.unwrap_or(0.5),
                bump: Bump {
                    center: p.center.clone().unwrap_or(vec![0.0, 0.0]),
                    r_in: radii[0],
                    r_out: radii[1],
                },
                rho2: p.rho2.clone().unwrap_or(vec![2.0, 0.0]),
            };
            if pert.bump.center.len() != 2 || pert.rho2.len() != 2 {
                return Err(Error::Dimension {
                    expected: 2,
                    got: pert.bump.center.len().max(pert.rho2.len()),
                });
            }
            let f = SmoothMap::scalar(2, &src)?;
            pert.check_levels(&f)?;
            let dom = domain_from(p, vec![-2.5; 2], vec![2.5; 2])?;
            let mut spec = OperatorSpec::new(
                "susy_breaking",
                f,
                SmoothMap::identity(2),
                SmoothMap::zero_vector(2),
                dom,
            )?;
            spec.perturbation = Some(pert);
            Ok(spec)
        }
        other => Err(Error::InvalidInput(format!(
            "unknown gallery entry '{other}' (expected one of {})",
            GALLERY_NAMES.join(", ")
        ))),
    }
}

fn default_f(d: usize) -> String {
    match d {
        1 => "x1^4/4 - x1^2/2 + x1/10".into(),
        _ => {
            let mut s = String::from("(x1^2 - 1)^2/4 + x1/10");
            for i in 2..=d {
                s.push_str(&format!(" + x{i}^2/2"));
            }
            s
        }
    }
}
