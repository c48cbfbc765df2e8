//! Smooth scalar, vector and matrix fields on ℝ^d.

mod expr;

use std::fmt;
use std::sync::Arc;

pub use expr::{Expr, Func, Tape};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("box bounds must have equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidInput("degenerate box".into()));
        }
        Ok(Domain { lo, hi })
    }

    /// `[-r, r]^d`
    pub fn cube(d: usize, r: f64) -> Self {
        Domain {
            lo: vec![-r; d],
            hi: vec![r; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector,
    Matrix,
}

impl Shape {
    fn components(self, d: usize) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector => d,
            Shape::Matrix => d * d,
        }
    }
}

/// Flat evaluation callback: returns the components (row-major for matrices).
pub type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Result of an evaluation or derivative.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Matrix),
    /// `data[(c * d) + k]` holds ∂_k of flattened component `c`.
    Tensor { dims: Vec<usize>, data: Vec<f64> },
}

#[derive(Clone)]
enum Body {
    Expr {
        exprs: Vec<Expr>,
        tapes: Vec<Tape>,
        /// per component, per variable
        d1: Vec<Vec<Tape>>,
        /// scalar maps only: upper triangle (i ≤ j), row-major
        d2: Option<Vec<Tape>>,
    },
    Callback {
        f: EvalFn,
        d1: Option<EvalFn>,
        d2: Option<EvalFn>,
    },
}

/// An immutable smooth field; cheap to clone.
#[derive(Clone)]
pub struct SmoothMap {
    dim: usize,
    shape: Shape,
    body: Arc<Body>,
    domain: Option<Domain>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("SmoothMap");
        s.field("dim", &self.dim).field("shape", &self.shape);
        match &*self.body {
            Body::Expr { exprs, .. } => {
                let txt: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
                s.field("exprs", &txt);
            }
            Body::Callback { d1, d2, .. } => {
                s.field("callback", &true)
                    .field("d1", &d1.is_some())
                    .field("d2", &d2.is_some());
            }
        }
        s.finish()
    }
}

fn fd_step1(x: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.abs())
}

// Second differences lose two orders to cancellation; with one Richardson level
// the balanced step is ε^{1/6}.
fn fd_step2(x: f64) -> f64 {
    f64::EPSILON.powf(1.0 / 6.0) * (1.0 + x.abs())
}

impl SmoothMap {
    pub fn from_exprs(dim: usize, shape: Shape, exprs: Vec<Expr>) -> Result<Self> {
        let want = shape.components(dim);
        if exprs.len() != want {
            return Err(Error::Dimension {
                expected: want,
                got: exprs.len(),
            });
        }
        for e in &exprs {
            if e.arity() > dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: e.arity(),
                });
            }
        }
        let tapes = exprs.iter().map(|e| e.compile()).collect();
        let d1 = exprs
            .iter()
            .map(|e| (0..dim).map(|k| e.diff(k).compile()).collect())
            .collect();
        let d2 = if shape == Shape::Scalar {
            let g: Vec<Expr> = (0..dim).map(|k| exprs[0].diff(k)).collect();
            let mut v = Vec::with_capacity(dim * (dim + 1) / 2);
            for i in 0..dim {
                for j in i..dim {
                    v.push(g[i].diff(j).compile());
                }
            }
            Some(v)
        } else {
            None
        };
        Ok(SmoothMap {
            dim,
            shape,
            body: Arc::new(Body::Expr {
                exprs,
                tapes,
                d1,
                d2,
            }),
            domain: None,
        })
    }

    pub fn scalar(dim: usize, src: &str) -> Result<Self> {
        Self::from_exprs(dim, Shape::Scalar, vec![Expr::parse(src, dim)?])
    }

    pub fn vector(dim: usize, srcs: &[&str]) -> Result<Self> {
        let exprs = srcs
            .iter()
            .map(|s| Expr::parse(s, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::from_exprs(dim, Shape::Vector, exprs)
    }

    /// Row-major list of d² entry expressions.
    pub fn matrix(dim: usize, srcs: &[&str]) -> Result<Self> {
        let exprs = srcs
            .iter()
            .map(|s| Expr::parse(s, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::from_exprs(dim, Shape::Matrix, exprs)
    }

    pub fn constant_matrix(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let exprs = m.data().iter().map(|&v| Expr::Const(v)).collect();
        Self::from_exprs(m.rows(), Shape::Matrix, exprs)
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant_matrix(&Matrix::identity(dim)).expect("square")
    }

    pub fn zero_vector(dim: usize) -> Self {
        Self::from_exprs(dim, Shape::Vector, vec![Expr::Const(0.0); dim]).expect("shape")
    }

    pub fn callback(dim: usize, shape: Shape, f: EvalFn) -> Self {
        SmoothMap {
            dim,
            shape,
            body: Arc::new(Body::Callback {
                f,
                d1: None,
                d2: None,
            }),
            domain: None,
        }
    }

    /// Attach an exact first-derivative callback (components × d, component-major).
    pub fn with_first_derivative(self, d1: EvalFn) -> Self {
        match &*self.body {
            Body::Callback { f, d2, .. } => SmoothMap {
                body: Arc::new(Body::Callback {
                    f: f.clone(),
                    d1: Some(d1),
                    d2: d2.clone(),
                }),
                ..self
            },
            Body::Expr { .. } => self,
        }
    }

    /// Attach an exact Hessian callback (scalar maps, d×d row-major).
    pub fn with_second_derivative(self, d2: EvalFn) -> Self {
        match &*self.body {
            Body::Callback { f, d1, .. } => SmoothMap {
                body: Arc::new(Body::Callback {
                    f: f.clone(),
                    d1: d1.clone(),
                    d2: Some(d2),
                }),
                ..self
            },
            Body::Expr { .. } => self,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }

    pub fn exprs(&self) -> Option<&[Expr]> {
        match &*self.body {
            Body::Expr { exprs, .. } => Some(exprs),
            Body::Callback { .. } => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(&*self.body, Body::Expr { .. })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn finite(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFinite(what.into()))
        }
    }

    /// Flattened component values without domain or finiteness checks.
    pub fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        match &*self.body {
            Body::Expr { tapes, .. } => tapes.iter().map(|t| t.eval(x)).collect(),
            Body::Callback { f, .. } => f(x),
        }
    }

    /// Scalar value without checks; the hot path for grid sampling.
    #[inline]
    pub fn eval_scalar_raw(&self, x: &[f64]) -> f64 {
        match &*self.body {
            Body::Expr { tapes, .. } => tapes[0].eval(x),
            Body::Callback { f, .. } => f(x)[0],
        }
    }

    fn eval_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let v = self.eval_raw(x);
        if v.len() != self.shape.components(self.dim) {
            return Err(Error::Dimension {
                expected: self.shape.components(self.dim),
                got: v.len(),
            });
        }
        Self::finite(v, "field value")
    }

    /// First derivatives, component-major (`out[c * d + k] = ∂_k comp_c`).
    fn d1_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let d = self.dim;
        let nc = self.shape.components(d);
        let out = match &*self.body {
            Body::Expr { d1, .. } => {
                let mut out = Vec::with_capacity(nc * d);
                for comp in d1 {
                    for t in comp {
                        out.push(t.eval(x));
                    }
                }
                out
            }
            Body::Callback { d1: Some(g), .. } => g(x),
            Body::Callback { f, d1: None, .. } => fd_jacobian(&**f, x, nc),
        };
        Self::finite(out, "first derivative")
    }

    fn hessian_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        match &*self.body {
            Body::Expr { d2: Some(t), .. } => {
                let mut idx = 0;
                for i in 0..d {
                    for j in i..d {
                        let v = t[idx].eval(x);
                        out[i * d + j] = v;
                        out[j * d + i] = v;
                        idx += 1;
                    }
                }
            }
            Body::Expr { d2: None, .. } => {
                return Err(Error::Unsupported("second derivative of a non-scalar field".into()))
            }
            Body::Callback { d2: Some(h), .. } => out = h(x),
            Body::Callback { d1: Some(g), .. } => out = fd_jacobian(&**g, x, d),
            Body::Callback { f, .. } => out = fd_hessian(&**f, x),
        }
        if out.len() != d * d {
            return Err(Error::Dimension {
                expected: d * d,
                got: out.len(),
            });
        }
        for i in 0..d {
            for j in 0..i {
                let s = 0.5 * (out[i * d + j] + out[j * d + i]);
                out[i * d + j] = s;
                out[j * d + i] = s;
            }
        }
        Self::finite(out, "second derivative")
    }

    /// Value at `x`; checks the declared domain when one is attached.
    pub fn evaluate(&self, x: &[f64]) -> Result<Value> {
        if let Some(dom) = &self.domain {
            if x.len() == self.dim && !dom.contains(x) {
                return Err(Error::InvalidInput("point outside the declared domain".into()));
            }
        }
        let v = self.eval_flat(x)?;
        Ok(match self.shape {
            Shape::Scalar => Value::Scalar(v[0]),
            Shape::Vector => Value::Vector(v),
            Shape::Matrix => Value::Matrix(Matrix::from_vec(self.dim, self.dim, v)),
        })
    }

    /// Gradient/Jacobian (`order = 1`) or Hessian (`order = 2`, scalar maps).
    pub fn derivative(&self, x: &[f64], order: u8) -> Result<Value> {
        let d = self.dim;
        match (order, self.shape) {
            (1, Shape::Scalar) => Ok(Value::Vector(self.d1_flat(x)?)),
            (1, Shape::Vector) => Ok(Value::Matrix(Matrix::from_vec(d, d, self.d1_flat(x)?))),
            (1, Shape::Matrix) => Ok(Value::Tensor {
                dims: vec![d, d, d],
                data: self.d1_flat(x)?,
            }),
            (2, Shape::Scalar) => Ok(Value::Matrix(Matrix::from_vec(d, d, self.hessian_flat(x)?))),
            (2, _) => Err(Error::Unsupported("second derivative of a non-scalar field".into())),
            _ => Err(Error::InvalidInput(format!("derivative order {order} not in 1..=2"))),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.expect_shape(Shape::Scalar)?;
        Ok(self.eval_flat(x)?[0])
    }

    pub fn vector_value(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.expect_shape(Shape::Vector)?;
        self.eval_flat(x)
    }

    pub fn matrix_value(&self, x: &[f64]) -> Result<Matrix> {
        self.expect_shape(Shape::Matrix)?;
        Ok(Matrix::from_vec(self.dim, self.dim, self.eval_flat(x)?))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.expect_shape(Shape::Scalar)?;
        self.d1_flat(x)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Matrix> {
        self.expect_shape(Shape::Scalar)?;
        Ok(Matrix::from_vec(self.dim, self.dim, self.hessian_flat(x)?))
    }

    /// `J[i][j] = ∂_j v_i`
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        self.expect_shape(Shape::Vector)?;
        Ok(Matrix::from_vec(self.dim, self.dim, self.d1_flat(x)?))
    }

    /// Divergence of a vector field.
    pub fn divergence(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jacobian(x)?.trace())
    }

    /// Row-wise divergence of a matrix field transposed: `w_j = Σ_i ∂_i A_ij`.
    pub fn column_divergence(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.expect_shape(Shape::Matrix)?;
        let d = self.dim;
        let t = self.d1_flat(x)?;
        Ok((0..d)
            .map(|j| (0..d).map(|i| t[(i * d + j) * d + i]).sum())
            .collect())
    }

    fn expect_shape(&self, s: Shape) -> Result<()> {
        if self.shape == s {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "expected a {s:?} field, got {:?}",
                self.shape
            )))
        }
    }
}

/// Central differences with one Richardson level; `nc` components.
fn fd_jacobian(f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync), x: &[f64], nc: usize) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; nc * d];
    let mut xp = x.to_vec();
    for k in 0..d {
        let h = fd_step1(x[k]);
        let central = |step: f64, xp: &mut Vec<f64>| {
            xp[k] = x[k] + step;
            let a = f(xp);
            xp[k] = x[k] - step;
            let b = f(xp);
            xp[k] = x[k];
            a.iter().zip(&b).map(|(p, m)| (p - m) / (2.0 * step)).collect::<Vec<f64>>()
        };
        let d_h = central(h, &mut xp);
        let d_h2 = central(0.5 * h, &mut xp);
        for c in 0..nc {
            out[c * d + k] = (4.0 * d_h2[c] - d_h[c]) / 3.0;
        }
    }
    out
}

fn fd_hessian(f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync), x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let f0 = f(x)[0];
    let mut out = vec![0.0; d * d];
    let mut xp = x.to_vec();
    let mut eval = |shifts: &[(usize, f64)], xp: &mut Vec<f64>| {
        for &(k, s) in shifts {
            xp[k] += s;
        }
        let v = f(xp)[0];
        xp.copy_from_slice(x);
        v
    };
    for i in 0..d {
        let hi = fd_step2(x[i]);
        let second = |s: f64, xp: &mut Vec<f64>, eval: &mut dyn FnMut(&[(usize, f64)], &mut Vec<f64>) -> f64| {
            (eval(&[(i, s)], xp) - 2.0 * f0 + eval(&[(i, -s)], xp)) / (s * s)
        };
        let a = second(hi, &mut xp, &mut eval);
        let b = second(0.5 * hi, &mut xp, &mut eval);
        out[i * d + i] = (4.0 * b - a) / 3.0;
        for j in i + 1..d {
            let hj = fd_step2(x[j]);
            let mixed = |si: f64, sj: f64, xp: &mut Vec<f64>, eval: &mut dyn FnMut(&[(usize, f64)], &mut Vec<f64>) -> f64| {
                (eval(&[(i, si), (j, sj)], xp) - eval(&[(i, si), (j, -sj)], xp)
                    - eval(&[(i, -si), (j, sj)], xp)
                    + eval(&[(i, -si), (j, -sj)], xp))
                    / (4.0 * si * sj)
            };
            let a = mixed(hi, hj, &mut xp, &mut eval);
            let b = mixed(0.5 * hi, 0.5 * hj, &mut xp, &mut eval);
            let v = (4.0 * b - a) / 3.0;
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
    out
}
