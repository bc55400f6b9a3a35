//! Scalar expressions over named coordinates.
//!
//! An [`Expr`] is an immutable tree. It is parsed from text against a
//! [`Chart`] (which fixes the coordinate names and their order) and
//! evaluated either for its value alone or as a second-order [`Jet2`]
//! carrying the exact gradient and Hessian at a point.

mod eval;
mod jet;
mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use eval::{eval_jet2, eval_value, EvalError};
pub use jet::Jet2;
pub use parse::{parse, ParseError};

/// Unary functions understood by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sech,
}

impl Func {
    /// Callable functions by name. `Neg` is only reachable through unary minus.
    pub const CALLABLE: [Func; 10] = [
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sech,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Neg => "-",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::CALLABLE.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree. Coordinates are referenced by their index in the chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Unary(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn coord(index: usize) -> Expr {
        Expr::Coord(index)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn apply(self, func: Func) -> Expr {
        Expr::Unary(func, Box::new(self))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn exp(self) -> Expr {
        self.apply(Func::Exp)
    }

    pub fn ln(self) -> Expr {
        self.apply(Func::Ln)
    }

    pub fn sqrt(self) -> Expr {
        self.apply(Func::Sqrt)
    }

    pub fn cosh(self) -> Expr {
        self.apply(Func::Cosh)
    }

    pub fn tanh(self) -> Expr {
        self.apply(Func::Tanh)
    }

    pub fn sech(self) -> Expr {
        self.apply(Func::Sech)
    }

    pub fn powi(self, k: i32) -> Expr {
        Expr::binary(BinOp::Pow, self, Expr::Const(f64::from(k)))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::binary(BinOp::Pow, self, exponent)
    }

    /// True when the tree is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Unary(_, a) => a.max_coord(),
            Expr::Binary(_, a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Rewrites every coordinate index through `map`.
    pub fn map_coords(&self, map: &impl Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Coord(i) => Expr::Coord(map(*i)),
            Expr::Unary(f, a) => Expr::Unary(*f, Box::new(a.map_coords(map))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_coords(map)), Box::new(b.map_coords(map)))
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Coord(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Formats the expression using the coordinate names of `chart`.
    pub fn display<'a>(&'a self, chart: &'a Chart) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, chart }
    }

    /// If the exponent of a power node is an integer constant, returns it.
    pub(crate) fn integer_constant(&self) -> Option<i32> {
        match self {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= f64::from(i32::MAX) => Some(*c as i32),
            _ => None,
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Add, self, rhs)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Sub, self, rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Mul, self, rhs)
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Div, self, rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.apply(Func::Neg)
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Expr {
        Expr::Const(value)
    }
}

// Binding strength used by the printer; mirrors the parser's grammar levels.
const LEVEL_SUM: u8 = 1;
const LEVEL_PRODUCT: u8 = 2;
const LEVEL_UNARY: u8 = 3;
const LEVEL_ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => LEVEL_UNARY,
        Expr::Const(_) | Expr::Coord(_) => LEVEL_ATOM,
        Expr::Unary(Func::Neg, _) => LEVEL_UNARY,
        Expr::Unary(_, _) => LEVEL_ATOM,
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => LEVEL_SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => LEVEL_PRODUCT,
        Expr::Binary(BinOp::Pow, _, _) => 4,
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    chart: &'a Chart,
}

impl ExprDisplay<'_> {
    fn write(&self, e: &Expr, min_level: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if level(e) < min_level {
            f.write_str("(")?;
            self.write(e, 0, f)?;
            return f.write_str(")");
        }
        match e {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Coord(i) => match self.chart.names.get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "#{i}"),
            },
            Expr::Unary(Func::Neg, a) => {
                f.write_str("-")?;
                self.write(a, LEVEL_UNARY, f)
            }
            Expr::Unary(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write(a, 0, f)?;
                f.write_str(")")
            }
            Expr::Binary(op, a, b) => {
                let (lhs, rhs) = match op {
                    BinOp::Add | BinOp::Sub => (LEVEL_SUM, LEVEL_PRODUCT),
                    BinOp::Mul | BinOp::Div => (LEVEL_PRODUCT, LEVEL_UNARY),
                    BinOp::Pow => (LEVEL_ATOM, LEVEL_UNARY),
                };
                self.write(a, lhs, f)?;
                write!(f, "{}", op.symbol())?;
                self.write(b, rhs, f)
            }
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, 0, f)
    }
}

/// Strict open-interval constraint on one coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub fn contains(&self, v: f64) -> bool {
        self.lower.is_none_or(|lo| v > lo) && self.upper.is_none_or(|hi| v < hi)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("chart needs at least one coordinate")]
    Empty,
    #[error("duplicate coordinate name `{0}`")]
    Duplicate(String),
    #[error("invalid coordinate name `{0}`")]
    InvalidName(String),
    #[error("coordinate index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("point has {got} coordinates, chart has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate `{name}` = {value} violates its bound")]
    OutOfBounds { name: String, value: f64 },
}

/// Ordered coordinate names, optional strict bounds and name aliases.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    bounds: Vec<Bound>,
    aliases: Vec<(String, usize)>,
}

fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Chart {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Chart, ChartError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ChartError::Empty);
        }
        for (i, name) in names.iter().enumerate() {
            if !valid_identifier(name) || Func::from_name(name).is_some() {
                return Err(ChartError::InvalidName(name.clone()));
            }
            if names[..i].contains(name) {
                return Err(ChartError::Duplicate(name.clone()));
            }
        }
        let bounds = vec![Bound::default(); names.len()];
        Ok(Chart { names, bounds, aliases: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    /// Adds the strict constraint `coord > lower`.
    pub fn with_lower_bound(mut self, index: usize, lower: f64) -> Result<Chart, ChartError> {
        let b = self.bounds.get_mut(index).ok_or(ChartError::IndexOutOfRange(index))?;
        b.lower = Some(lower);
        Ok(self)
    }

    /// Adds the strict constraint `coord < upper`.
    pub fn with_upper_bound(mut self, index: usize, upper: f64) -> Result<Chart, ChartError> {
        let b = self.bounds.get_mut(index).ok_or(ChartError::IndexOutOfRange(index))?;
        b.upper = Some(upper);
        Ok(self)
    }

    /// Lets `alias` stand for the coordinate at `index` when parsing.
    pub fn with_alias(mut self, alias: impl Into<String>, index: usize) -> Result<Chart, ChartError> {
        let alias = alias.into();
        if index >= self.dim() {
            return Err(ChartError::IndexOutOfRange(index));
        }
        if !valid_identifier(&alias) {
            return Err(ChartError::InvalidName(alias));
        }
        if self.names.contains(&alias) || self.aliases.iter().any(|(a, _)| *a == alias) {
            return Err(ChartError::Duplicate(alias));
        }
        self.aliases.push((alias, index));
        Ok(self)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .or_else(|| self.aliases.iter().find(|(a, _)| a == name).map(|(_, i)| *i))
    }

    /// Concatenates two charts; the coordinates of `other` follow those of `self`.
    pub fn product(&self, other: &Chart) -> Result<Chart, ChartError> {
        let mut out = Chart::new(self.names.iter().chain(other.names.iter()).cloned())?;
        out.bounds = self.bounds.iter().chain(other.bounds.iter()).copied().collect();
        out.aliases = self.aliases.clone();
        for (alias, i) in &other.aliases {
            out = out.with_alias(alias.clone(), i + self.dim())?;
        }
        Ok(out)
    }

    pub fn check_point(&self, p: &[f64]) -> Result<(), ChartError> {
        if p.len() != self.dim() {
            return Err(ChartError::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        for ((name, bound), &value) in self.names.iter().zip(&self.bounds).zip(p) {
            if !bound.contains(value) {
                return Err(ChartError::OutOfBounds { name: name.clone(), value });
            }
        }
        Ok(())
    }
}
