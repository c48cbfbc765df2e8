//! Expression trees over `x1..xd` with a small infix grammar and symbolic
//! differentiation.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sqrt => v.sqrt(),
            Func::Tanh => v.tanh(),
        }
    }
}

/// Variables are zero-based internally; the text form `x1` is `Var(0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), Some(y)) if x.powf(y).is_finite() => Expr::Const(x.powf(y)),
            _ => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_const() {
            let v = f.apply(x);
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
        Expr::Call(f, Box::new(a))
    }

    /// Parse `src` in dimension `dim`; variables outside `x1..x{dim}` are rejected.
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            dim,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.arity().max(b.arity()),
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
        }
    }

    pub fn depends_on(&self, i: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(j) => *j == i,
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(i) || b.depends_on(i),
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(i),
        }
    }

    /// Rename variables through `map`.
    pub fn remap_vars(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => Expr::Var(map(*i)),
            Expr::Add(a, b) => Expr::add(a.remap_vars(map), b.remap_vars(map)),
            Expr::Sub(a, b) => Expr::sub(a.remap_vars(map), b.remap_vars(map)),
            Expr::Mul(a, b) => Expr::mul(a.remap_vars(map), b.remap_vars(map)),
            Expr::Div(a, b) => Expr::div(a.remap_vars(map), b.remap_vars(map)),
            Expr::Pow(a, b) => Expr::pow(a.remap_vars(map), b.remap_vars(map)),
            Expr::Neg(a) => Expr::neg(a.remap_vars(map)),
            Expr::Call(f, a) => Expr::call(*f, a.remap_vars(map)),
        }
    }

    /// Symbolic partial derivative with respect to variable `i` (zero-based).
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => Expr::add(a.diff(i), b.diff(i)),
            Expr::Sub(a, b) => Expr::sub(a.diff(i), b.diff(i)),
            Expr::Neg(a) => Expr::neg(a.diff(i)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(i), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(i)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(i);
                let db = b.diff(i);
                if db.is_const(0.0) {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        ),
                        Expr::pow((**b).clone(), Expr::Const(2.0)),
                    )
                }
            }
            Expr::Pow(a, b) => {
                let da = a.diff(i);
                if !b.depends_on(i) {
                    // b * a^(b-1) * a'
                    let reduced = Expr::pow((**a).clone(), Expr::sub((**b).clone(), Expr::Const(1.0)));
                    Expr::mul(Expr::mul((**b).clone(), reduced), da)
                } else {
                    let db = b.diff(i);
                    let inner = Expr::add(
                        Expr::mul(db, Expr::call(Func::Log, (**a).clone())),
                        Expr::div(Expr::mul((**b).clone(), da), (**a).clone()),
                    );
                    Expr::mul(self.clone(), inner)
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(i);
                if da.is_const(0.0) {
                    return Expr::Const(0.0);
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => Expr::call(Func::Exp, u),
                    Func::Log => Expr::div(Expr::Const(1.0), u),
                    Func::Sin => Expr::call(Func::Cos, u),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, u)),
                    Func::Sqrt => Expr::div(Expr::Const(0.5), Expr::call(Func::Sqrt, u)),
                    Func::Tanh => Expr::sub(
                        Expr::Const(1.0),
                        Expr::pow(Expr::call(Func::Tanh, u), Expr::Const(2.0)),
                    ),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Direct recursive evaluation; see [`Tape`] for the faster path.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => pow_value(a.eval(x), b.eval(x)),
            Expr::Neg(a) => -a.eval(x),
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    pub fn compile(&self) -> Tape {
        let mut ops = Vec::new();
        emit(self, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => depth -= 1,
                Op::Neg | Op::Call(_) | Op::Powi(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Tape { ops, max_depth }
    }
}

#[inline]
fn pow_value(a: f64, b: f64) -> f64 {
    if b == b.trunc() && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(i) => ops.push(Op::Var(*i)),
        Expr::Add(a, b) => bin(a, b, Op::Add, ops),
        Expr::Sub(a, b) => bin(a, b, Op::Sub, ops),
        Expr::Mul(a, b) => bin(a, b, Op::Mul, ops),
        Expr::Div(a, b) => bin(a, b, Op::Div, ops),
        Expr::Pow(a, b) => match b.as_const() {
            Some(k) if k == k.trunc() && k.abs() <= 64.0 => {
                emit(a, ops);
                ops.push(Op::Powi(k as i32));
            }
            _ => bin(a, b, Op::Pow, ops),
        },
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
    }
}

fn bin(a: &Expr, b: &Expr, op: Op, ops: &mut Vec<Op>) {
    emit(a, ops);
    emit(b, ops);
    ops.push(op);
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Powi(i32),
    Neg,
    Call(Func),
}

/// Postfix program for an [`Expr`].
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    max_depth: usize,
}

impl Tape {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut buf = [0.0f64; 32];
        if self.max_depth <= buf.len() {
            self.run(x, &mut buf)
        } else {
            let mut v = vec![0.0; self.max_depth];
            self.run(x, &mut v)
        }
    }

    #[inline]
    fn run(&self, x: &[f64], st: &mut [f64]) -> f64 {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    st[sp] = c;
                    sp += 1;
                }
                Op::Var(i) => {
                    st[sp] = x[i];
                    sp += 1;
                }
                Op::Add => {
                    sp -= 1;
                    st[sp - 1] += st[sp];
                }
                Op::Sub => {
                    sp -= 1;
                    st[sp - 1] -= st[sp];
                }
                Op::Mul => {
                    sp -= 1;
                    st[sp - 1] *= st[sp];
                }
                Op::Div => {
                    sp -= 1;
                    st[sp - 1] /= st[sp];
                }
                Op::Pow => {
                    sp -= 1;
                    st[sp - 1] = pow_value(st[sp - 1], st[sp]);
                }
                Op::Powi(k) => st[sp - 1] = st[sp - 1].powi(k),
                Op::Neg => st[sp - 1] = -st[sp - 1],
                Op::Call(f) => st[sp - 1] = f.apply(st[sp - 1]),
            }
        }
        st[0]
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat(b'/') {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::neg(self.unary()?));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            // right associative; the exponent may carry its own sign
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                while q < s.len() && s[q].is_ascii_digit() {
                    q += 1;
                }
                self.pos = q;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Parse {
                pos: start,
                msg: format!("bad number '{text}'"),
            })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_alphanumeric() || s[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.err("expected '(' after function name"));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(Expr::call(func, arg));
        }
        if let Some(idx) = name.strip_prefix('x') {
            if let Ok(i) = idx.parse::<usize>() {
                if i >= 1 && i <= self.dim {
                    return Ok(Expr::Var(i - 1));
                }
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("variable {name} outside x1..x{}", self.dim),
                });
            }
        }
        Err(Error::Parse {
            pos: start,
            msg: format!("unknown identifier '{name}'"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        let e = Expr::parse(s, x.len()).unwrap();
        let t = e.compile().eval(x);
        assert_eq!(t.to_bits(), e.eval(x).to_bits());
        t
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2^3^2", &[0.0]), 512.0);
        assert_eq!(ev("-x1^2", &[3.0]), -9.0);
        assert_eq!(ev("2*x1 - 3/x1 + 1", &[2.0]), 3.5);
        assert_eq!(ev("2^-1", &[0.0]), 0.5);
        assert!((ev("1.5e-1 + 2E1", &[0.0]) - 20.15).abs() < 1e-15);
        assert!((ev("cos(pi)", &[0.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn double_well_values() {
        assert_eq!(ev("x1^4/4 - x1^2/2", &[1.0]), -0.25);
        assert_eq!(ev("x1^4/4 - x1^2/2", &[0.0]), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x3", 2).is_err());
        assert!(Expr::parse("abs(x1)", 1).is_err());
        assert!(Expr::parse("x1 +", 1).is_err());
        assert!(Expr::parse("(x1", 1).is_err());
        assert!(Expr::parse("x1 x1", 1).is_err());
    }

    #[test]
    fn derivatives_of_polynomial() {
        let e = Expr::parse("x1^4/4 - x1^2/2", 1).unwrap();
        let d2 = e.diff(0).diff(0);
        assert_eq!(d2.eval(&[0.0]), -1.0);
        assert_eq!(d2.eval(&[1.0]), 2.0);
        assert_eq!(d2.eval(&[-1.0]), 2.0);
    }

    #[test]
    fn derivative_rules() {
        let x = [0.7, -0.3];
        let cases: &[(&str, &str)] = &[
            ("exp(x1*x2)", "x2*exp(x1*x2)"),
            ("log(1 + x1^2)", "2*x1/(1 + x1^2)"),
            ("sin(x1)*cos(x2)", "cos(x1)*cos(x2)"),
            ("sqrt(2 + x1)", "0.5/sqrt(2 + x1)"),
            ("tanh(3*x1)", "3*(1 - tanh(3*x1)^2)"),
            ("x1^x1", "x1^x1*(log(x1) + 1)"),
            ("x2/x1", "-x2/x1^2"),
        ];
        for (f, df) in cases {
            let got = Expr::parse(f, 2).unwrap().diff(0).eval(&x);
            let want = Expr::parse(df, 2).unwrap().eval(&x);
            assert!((got - want).abs() < 1e-14, "{f}: {got} vs {want}");
        }
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-(x1 - 2)^3 * exp(-x2/2) + sqrt(x1^2 + 1)", 2).unwrap();
        let again = Expr::parse(&e.to_string(), 2).unwrap();
        let x = [0.4, 1.3];
        assert_eq!(e.eval(&x), again.eval(&x));
    }

    #[test]
    fn remap_swaps_variables() {
        let e = Expr::parse("x1 - 2*x2", 2).unwrap();
        let r = e.remap_vars(&|i| 1 - i);
        assert_eq!(r.eval(&[1.0, 5.0]), 3.0);
    }
}
