use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::C64;

use super::EvalError;

/// A real-analytic scalar expression in complex variables `w_i` and their
/// conjugates.
///
/// Expressions are immutable and cheaply clonable; shared subtrees are kept
/// shared, so an `Expr` is really a DAG.
#[derive(Clone)]
pub struct Expr(pub(crate) Arc<Node>);

#[derive(Debug)]
pub enum Node {
    Const(C64),
    /// Holomorphic coordinate, zero-based.
    Var(usize),
    /// Conjugate of the coordinate with the same zero-based index.
    ConjVar(usize),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, i32),
    Log(Expr),
    Conj(Expr),
}

impl Expr {
    fn wrap(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: C64) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::wrap(Node::Var(index))
    }

    pub fn conj_var(index: usize) -> Self {
        Self::wrap(Node::ConjVar(index))
    }

    /// `w_i * conj(w_i)`.
    pub fn abs_sq(index: usize) -> Self {
        Self::var(index) * Self::conj_var(index)
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_const() == Some(C64::new(0.0, 0.0))
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        let mut flat = Vec::new();
        let mut acc = C64::new(0.0, 0.0);
        for t in terms {
            match t.node() {
                Node::Const(c) => acc += c,
                Node::Sum(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Const(c) => acc += c,
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        if acc != C64::new(0.0, 0.0) {
            flat.push(Self::constant(acc));
        }
        match flat.len() {
            0 => Self::zero(),
            1 => flat.pop().unwrap(),
            _ => Self::wrap(Node::Sum(flat)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Self {
        let mut flat = Vec::new();
        let mut acc = C64::new(1.0, 0.0);
        for f in factors {
            match f.node() {
                Node::Const(c) => acc *= c,
                Node::Product(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Const(c) => acc *= c,
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(f),
            }
        }
        if acc == C64::new(0.0, 0.0) {
            return Self::zero();
        }
        if acc != C64::new(1.0, 0.0) {
            flat.insert(0, Self::constant(acc));
        }
        match flat.len() {
            0 => Self::one(),
            1 => flat.pop().unwrap(),
            _ => Self::wrap(Node::Product(flat)),
        }
    }

    pub fn powi(&self, k: i32) -> Self {
        if k == 0 {
            return Self::one();
        }
        if k == 1 {
            return self.clone();
        }
        match self.node() {
            Node::Const(c) if *c != C64::new(0.0, 0.0) || k > 0 => Self::constant(c.powi(k)),
            Node::Pow(base, j) => base.powi(j * k),
            _ => Self::wrap(Node::Pow(self.clone(), k)),
        }
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    /// Principal natural logarithm.
    pub fn ln(&self) -> Self {
        match self.node() {
            Node::Const(c) if c.re > 0.0 && c.im == 0.0 => Self::real(c.re.ln()),
            _ => Self::wrap(Node::Log(self.clone())),
        }
    }

    pub fn conj(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::constant(c.conj()),
            Node::Var(i) => Self::conj_var(*i),
            Node::ConjVar(i) => Self::var(*i),
            Node::Conj(inner) => inner.clone(),
            _ => Self::wrap(Node::Conj(self.clone())),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::product([Self::real(c), self.clone()])
    }

    /// One plus the largest variable index referenced, or 0 for constants.
    pub fn dim(&self) -> usize {
        fn walk(e: &Expr, seen: &mut HashMap<*const Node, usize>) -> usize {
            let key = Arc::as_ptr(&e.0);
            if let Some(&d) = seen.get(&key) {
                return d;
            }
            let d = match e.node() {
                Node::Const(_) => 0,
                Node::Var(i) | Node::ConjVar(i) => i + 1,
                Node::Sum(xs) | Node::Product(xs) => xs.iter().map(|x| walk(x, seen)).max().unwrap_or(0),
                Node::Pow(x, _) | Node::Log(x) | Node::Conj(x) => walk(x, seen),
            };
            seen.insert(key, d);
            d
        }
        walk(self, &mut HashMap::new())
    }

    /// Direct recursive evaluation. Shared subtrees are evaluated once.
    pub fn eval(&self, point: &[C64]) -> Result<C64, EvalError> {
        let dim = self.dim();
        if point.len() < dim {
            return Err(EvalError::Dimension {
                expected: dim,
                got: point.len(),
            });
        }
        let mut cache = HashMap::new();
        self.eval_cached(point, &mut cache)
    }

    fn eval_cached(&self, point: &[C64], cache: &mut HashMap<*const Node, C64>) -> Result<C64, EvalError> {
        let key = Arc::as_ptr(&self.0);
        if let Some(v) = cache.get(&key) {
            return Ok(*v);
        }
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => point[*i],
            Node::ConjVar(i) => point[*i].conj(),
            Node::Sum(xs) => {
                let mut acc = C64::new(0.0, 0.0);
                for x in xs {
                    acc += x.eval_cached(point, cache)?;
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = C64::new(1.0, 0.0);
                for x in xs {
                    acc *= x.eval_cached(point, cache)?;
                }
                acc
            }
            Node::Pow(x, k) => {
                let b = x.eval_cached(point, cache)?;
                super::checked_powi(b, *k).ok_or_else(|| EvalError::PoleAtZero {
                    subexpr: self.abbreviated(),
                })?
            }
            Node::Log(x) => {
                let a = x.eval_cached(point, cache)?;
                super::checked_ln(a).ok_or_else(|| EvalError::LogDomain {
                    value: a,
                    subexpr: self.abbreviated(),
                })?
            }
            Node::Conj(x) => x.eval_cached(point, cache)?.conj(),
        };
        cache.insert(key, v);
        Ok(v)
    }

    /// Substitutes every `w_i` by `f(i)` and every `conj(w_i)` by
    /// `conj(f(i))`. Shared subtrees are rewritten once.
    pub fn map_vars(&self, f: &dyn Fn(usize) -> Expr) -> Expr {
        fn go(e: &Expr, f: &dyn Fn(usize) -> Expr, memo: &mut HashMap<*const Node, Expr>) -> Expr {
            let key = Arc::as_ptr(&e.0);
            if let Some(done) = memo.get(&key) {
                return done.clone();
            }
            let out = match e.node() {
                Node::Const(_) => e.clone(),
                Node::Var(i) => f(*i),
                Node::ConjVar(i) => f(*i).conj(),
                Node::Sum(xs) => Expr::sum(xs.iter().map(|x| go(x, f, memo)).collect::<Vec<_>>()),
                Node::Product(xs) => Expr::product(xs.iter().map(|x| go(x, f, memo)).collect::<Vec<_>>()),
                Node::Pow(x, k) => go(x, f, memo).powi(*k),
                Node::Log(x) => go(x, f, memo).ln(),
                Node::Conj(x) => go(x, f, memo).conj(),
            };
            memo.insert(key, out.clone());
            out
        }
        go(self, f, &mut HashMap::new())
    }

    /// Shifts every variable index by `offset`.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        self.map_vars(&|i| Expr::var(i + offset))
    }

    /// Largest `|Im e(w)|` over `samples` random points with coordinates in
    /// the box `[-radius, radius]²`; points where evaluation fails are skipped.
    pub fn max_imaginary_part(&self, dim: usize, samples: usize, radius: f64, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let p: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.random_range(-radius..radius), rng.random_range(-radius..radius)))
                .collect();
            if let Ok(v) = self.eval(&p) {
                worst = worst.max(v.im.abs());
            }
        }
        worst
    }

    /// Rendering capped at a few hundred characters, for diagnostics.
    pub fn abbreviated(&self) -> String {
        let mut out = String::new();
        let _ = write_expr(self, &mut out, 240);
        out
    }
}

struct Budget;

fn write_expr(e: &Expr, out: &mut String, limit: usize) -> Result<(), Budget> {
    use std::fmt::Write;
    if out.len() > limit {
        out.push('…');
        return Err(Budget);
    }
    match e.node() {
        Node::Const(c) => {
            if c.im == 0.0 {
                let _ = write!(out, "{}", c.re);
            } else if c.re == 0.0 {
                let _ = write!(out, "{}*i", c.im);
            } else {
                let _ = write!(out, "({} + {}*i)", c.re, c.im);
            }
        }
        Node::Var(i) => {
            let _ = write!(out, "w{}", i + 1);
        }
        Node::ConjVar(i) => {
            let _ = write!(out, "conj(w{})", i + 1);
        }
        Node::Sum(xs) => {
            out.push('(');
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    out.push_str(" + ");
                }
                write_expr(x, out, limit)?;
            }
            out.push(')');
        }
        Node::Product(xs) => {
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    out.push('*');
                }
                write_expr(x, out, limit)?;
            }
        }
        Node::Pow(x, k) => {
            out.push_str("pow(");
            write_expr(x, out, limit)?;
            let _ = write!(out, ", {k})");
        }
        Node::Log(x) => {
            out.push_str("log(");
            write_expr(x, out, limit)?;
            out.push(')');
        }
        Node::Conj(x) => {
            out.push_str("conj(");
            write_expr(x, out, limit)?;
            out.push(')');
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = write_expr(self, &mut out, usize::MAX);
        f.write_str(&out)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self.abbreviated())
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Self {
        Expr::real(x)
    }
}

impl From<C64> for Expr {
    fn from(c: C64) -> Self {
        Expr::constant(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self, rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self.clone(), rhs.clone())
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self.clone(), rhs)
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $body(self, Expr::real(rhs))
            }
        }
    };
}

binop!(Add, add, |a: Expr, b: Expr| {
    if a.is_zero() {
        b
    } else if b.is_zero() {
        a
    } else {
        Expr::sum([a, b])
    }
});
binop!(Sub, sub, |a: Expr, b: Expr| Expr::sum([a, -b]));
binop!(Mul, mul, |a: Expr, b: Expr| {
    if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        Expr::product([a, b])
    }
});
binop!(Div, div, |a: Expr, b: Expr| Expr::product([a, b.recip()]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-1.0)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-1.0)
    }
}
