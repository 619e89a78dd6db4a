//! Scalar fields on ambient coordinate space.
//!
//! A [`ScalarField`] is an expression tree over coordinates `x1..xN` with
//! exact symbolic differentiation. Fields are parsed from a small textual
//! language:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := NUMBER | 'x' INT | '(' expr ')' | factor '^' INT
//!         | 'sin(' expr ')' | 'cos(' expr ')'
//! ```
//!
//! Coordinates are 1-based in the text and 0-based in the API. A leading `-`
//! is accepted as unary negation.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0-based coordinate index.
    Var(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
}

use Expr::*;

fn constant(c: f64) -> Arc<Expr> {
    Arc::new(Const(c))
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Const(c) => Some(*c),
        _ => None,
    }
}

// Smart constructors fold constants and drop identities so that repeated
// differentiation does not blow up the tree.
fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => constant(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Add(a, b)),
    }
}

fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => constant(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Arc::new(Mul(a, b)),
    }
}

fn neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Const(c) => constant(-c),
        Neg(inner) => inner.clone(),
        _ => Arc::new(Neg(a)),
    }
}

fn pow(a: Arc<Expr>, k: i32) -> Arc<Expr> {
    match (k, &*a) {
        (0, _) => constant(1.0),
        (1, _) => a,
        (_, Const(c)) => constant(c.powi(k)),
        _ => Arc::new(Pow(a, k)),
    }
}

impl Expr {
    fn derivative(self: &Arc<Expr>, var: usize) -> Arc<Expr> {
        match &**self {
            Const(_) => constant(0.0),
            Var(i) => constant(if *i == var { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), b.clone()),
                mul(a.clone(), b.derivative(var)),
            ),
            Neg(a) => neg(a.derivative(var)),
            Pow(a, k) => mul(
                mul(constant(*k as f64), pow(a.clone(), k - 1)),
                a.derivative(var),
            ),
            Sin(a) => mul(Arc::new(Cos(a.clone())), a.derivative(var)),
            Cos(a) => neg(mul(Arc::new(Sin(a.clone())), a.derivative(var))),
        }
    }

    fn substitute(self: &Arc<Expr>, with: &[Arc<Expr>]) -> Arc<Expr> {
        match &**self {
            Const(_) => self.clone(),
            Var(i) => with[*i].clone(),
            Add(a, b) => add(a.substitute(with), b.substitute(with)),
            Mul(a, b) => mul(a.substitute(with), b.substitute(with)),
            Neg(a) => neg(a.substitute(with)),
            Pow(a, k) => pow(a.substitute(with), *k),
            Sin(a) => {
                let inner = a.substitute(with);
                match *inner {
                    Const(c) => constant(c.sin()),
                    _ => Arc::new(Sin(inner)),
                }
            }
            Cos(a) => {
                let inner = a.substitute(with);
                match *inner {
                    Const(c) => constant(c.cos()),
                    _ => Arc::new(Cos(inner)),
                }
            }
        }
    }

    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Const(c) => T::from_f64(*c),
            Var(i) => x[*i],
            Add(a, b) => a.eval(x) + b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Neg(a) => -a.eval(x),
            Pow(a, k) => a.eval(x).powi(*k),
            Sin(a) => a.eval(x).sin(),
            Cos(a) => a.eval(x).cos(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Const(_) => None,
            Var(i) => Some(*i),
            Add(a, b) | Mul(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Neg(a) | Pow(a, _) | Sin(a) | Cos(a) => a.max_var(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => write!(f, "{c}"),
            Var(i) => write!(f, "x{}", i + 1),
            Add(a, b) => write!(f, "({a} + {b})"),
            Mul(a, b) => write!(f, "{a}*{b}"),
            Neg(a) => write!(f, "-({a})"),
            Pow(a, k) => write!(f, "({a})^{k}"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
        }
    }
}

/// A smooth function of ambient coordinates with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    root: Arc<Expr>,
}

impl ScalarField {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Parser::new(src).parse()
    }

    pub fn constant(c: f64) -> Self {
        ScalarField { root: constant(c) }
    }

    /// The 0-based coordinate function `x_{index+1}`.
    pub fn coordinate(index: usize) -> Self {
        ScalarField {
            root: Arc::new(Var(index)),
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.root
    }

    pub fn derivative(&self, var: usize) -> ScalarField {
        ScalarField {
            root: self.root.derivative(var),
        }
    }

    /// Replaces coordinate `i` by `with[i]`.
    pub fn substitute(&self, with: &[ScalarField]) -> ScalarField {
        let with: Vec<Arc<Expr>> = with.iter().map(|s| s.root.clone()).collect();
        ScalarField {
            root: self.root.substitute(&with),
        }
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.root.eval(x)
    }

    /// Number of coordinates the expression references (highest index + 1).
    pub fn arity(&self) -> usize {
        self.root.max_var().map_or(0, |m| m + 1)
    }

    pub fn is_constant(&self) -> bool {
        self.root.max_var().is_none()
    }

    /// True when the field is literally `x1*x2` (in either order).
    pub fn is_x1_times_x2(&self) -> bool {
        match &*self.root {
            Mul(a, b) => matches!(
                (&**a, &**b),
                (Var(0), Var(1)) | (Var(1), Var(0))
            ),
            _ => false,
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            root: add(self.root.clone(), other.root.clone()),
        }
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            root: mul(self.root.clone(), other.root.clone()),
        }
    }

    pub fn sin(&self) -> ScalarField {
        ScalarField {
            root: Arc::new(Sin(self.root.clone())),
        }
    }

    pub fn cos(&self) -> ScalarField {
        ScalarField {
            root: Arc::new(Cos(self.root.clone())),
        }
    }
}


impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Symbolic gradient, Hessian and third derivatives of a field in `n`
/// variables, precomputed once.
#[derive(Clone, Debug)]
pub struct DerivativeTable {
    pub f: ScalarField,
    pub grad: Vec<ScalarField>,
    pub hess: Vec<Vec<ScalarField>>,
    pub third: Vec<Vec<Vec<ScalarField>>>,
}

impl DerivativeTable {
    pub fn new(f: &ScalarField, n: usize) -> Self {
        let grad: Vec<ScalarField> = (0..n).map(|i| f.derivative(i)).collect();
        let hess: Vec<Vec<ScalarField>> = (0..n)
            .map(|i| (0..n).map(|j| grad[i].derivative(j)).collect())
            .collect();
        let third = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| hess[i][j].derivative(k)).collect())
                    .collect()
            })
            .collect();
        DerivativeTable {
            f: f.clone(),
            grad,
            hess,
            third,
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at column {column}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
            _src: src,
        }
    }

    fn parse(mut self) -> Result<ScalarField, ParseError> {
        let root = self.expr()?;
        self.skip_ws();
        if self.pos < self.chars.len() {
            return Err(self.error(&["'+'", "'-'", "'*'", "'^'", "end of input"]));
        }
        Ok(ScalarField { root })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn error(&mut self, expected: &[&'static str]) -> ParseError {
        self.skip_ws();
        let found = match self.chars.get(self.pos) {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        };
        ParseError {
            column: self.pos + 1,
            expected: expected.to_vec(),
            found,
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = add(acc, self.term()?);
                }
                Some('-') => {
                    self.pos += 1;
                    acc = add(acc, neg(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = mul(acc, self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut base = self.atom()?;
        while self.peek() == Some('^') {
            self.pos += 1;
            let k = self.integer(true)?;
            base = pow(base, k as i32);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Expr>, ParseError> {
        const ATOM: &[&str] = &["number", "coordinate 'xN'", "'('", "'sin('", "'cos('", "'-'"];
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(neg(self.factor()?))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('x') => {
                self.pos += 1;
                let start = self.pos;
                if !matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_digit()) {
                    return Err(self.error(&["coordinate index"]));
                }
                let k = self.integer(false)?;
                if k == 0 {
                    self.pos = start;
                    return Err(self.error(&["coordinate index >= 1"]));
                }
                Ok(Arc::new(Var(k as usize - 1)))
            }
            Some('s') | Some('c') => {
                let rest: String = self.chars[self.pos..].iter().take(4).collect();
                let is_sin = rest == "sin(";
                if !is_sin && rest != "cos(" {
                    return Err(self.error(ATOM));
                }
                self.pos += 4;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(if is_sin {
                    Arc::new(Sin(inner))
                } else {
                    Arc::new(Cos(inner))
                })
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            _ => Err(self.error(ATOM)),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&["')'"]))
        }
    }

    fn integer(&mut self, signed: bool) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if signed && self.chars.get(self.pos) == Some(&'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.error(&["integer"]));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| {
            self.pos = start;
            self.error(&["integer"])
        })
    }

    fn number(&mut self) -> Result<Arc<Expr>, ParseError> {
        let start = self.pos;
        while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_digit() || *c == '.') {
            self.pos += 1;
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) => Ok(constant(v)),
            Err(_) => {
                self.pos = start;
                Err(self.error(&["number"]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    #[test]
    fn parses_and_evaluates_corpus() {
        let f = ScalarField::parse("x1*x2").unwrap();
        assert_eq!(f.eval(&[2.0, 3.0]), 6.0);
        assert!(f.is_x1_times_x2());
        let g = ScalarField::parse("x1^2*x3 - 2*x2 + 0.5").unwrap();
        assert_eq!(g.eval(&[2.0, 1.0, 3.0]), 12.0 - 2.0 + 0.5);
        let h = ScalarField::parse("sin(x1)*sin(x3)").unwrap();
        let v = h.eval(&[0.3, 0.0, 1.1]);
        assert!((v - 0.3f64.sin() * 1.1f64.sin()).abs() < 1e-15);
        assert_eq!(ScalarField::parse("-x1").unwrap().eval(&[4.0]), -4.0);
        assert_eq!(ScalarField::parse("(x1+1)^3").unwrap().eval(&[1.0]), 8.0);
    }

    #[test]
    fn parse_errors_report_column_and_expectation() {
        let err = ScalarField::parse("x1*").unwrap_err();
        assert_eq!(err.column, 4);
        assert!(err.expected.contains(&"number"));
        assert_eq!(err.found, "end of input");

        let err = ScalarField::parse("x0").unwrap_err();
        assert_eq!(err.column, 2);

        let err = ScalarField::parse("tan(x1)").unwrap_err();
        assert_eq!(err.column, 1);

        let err = ScalarField::parse("(x1 + x2").unwrap_err();
        assert_eq!(err.expected, vec!["')'"]);

        let err = ScalarField::parse("x1 x2").unwrap_err();
        assert_eq!(err.column, 4);
    }

    #[test]
    fn symbolic_derivatives_match_jets() {
        let f = ScalarField::parse("sin(x1)*cos(x2)^2 + x1^3*x2").unwrap();
        let at = [0.4, -1.3];
        let jet = f.eval(&Jet::variables(&at));
        for i in 0..2 {
            let di = f.derivative(i);
            assert!((di.eval(&at) - jet.grad(i)).abs() < 1e-13);
            for j in 0..2 {
                let dij = di.derivative(j);
                assert!((dij.eval(&at) - jet.hess(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn substitution_composes() {
        // f(x1, x2) = x1*x2 along (cos t, sin t): d^2/dt^2 at 0 of sin(2t)/2 = 0.
        let f = ScalarField::parse("x1*x2").unwrap();
        let t = ScalarField::coordinate(0);
        let along = f.substitute(&[t.cos(), t.sin()]);
        let d2 = along.derivative(0).derivative(0);
        assert!(d2.eval(&[0.0]).abs() < 1e-15);
        assert!((d2.eval(&[0.3]) + 2.0 * (0.6f64).sin()).abs() < 1e-14);
    }

    #[test]
    fn derivative_table_dimensions_and_values() {
        let f = ScalarField::parse("x1^2*x3").unwrap();
        let t = DerivativeTable::new(&f, 4);
        assert_eq!(t.dim(), 4);
        let at = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(t.grad[0].eval(&at), 6.0);
        assert_eq!(t.hess[0][2].eval(&at), 2.0);
        assert_eq!(t.third[0][0][2].eval(&at), 2.0);
        assert_eq!(t.third[1][1][1].eval(&at), 0.0);
        assert_eq!(f.arity(), 3);
    }
}
