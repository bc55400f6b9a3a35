use super::{BinOp, Expr, Func, Jet2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("logarithm of non-positive value {0}")]
    LogDomain(f64),
    #[error("square root of negative value {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-integer power of non-positive base {0}")]
    PowDomain(f64),
    #[error("non-finite intermediate value in `{0}`")]
    NonFinite(&'static str),
    #[error("coordinate index {index} outside a point of dimension {dim}")]
    MissingCoordinate { index: usize, dim: usize },
}

/// Integer power by repeated squaring; exact whenever the products are.
fn ipow(base: f64, k: i32) -> Result<f64, EvalError> {
    if k < 0 {
        if base == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(1.0 / ipow(base, k.checked_neg().unwrap_or(i32::MAX))?);
    }
    let (mut acc, mut b, mut e) = (1.0, base, k as u32);
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        e >>= 1;
        if e > 0 {
            b *= b;
        }
    }
    Ok(acc)
}

fn func_value(func: Func, u: f64) -> Result<f64, EvalError> {
    Ok(match func {
        Func::Neg => -u,
        Func::Exp => u.exp(),
        Func::Ln => {
            if u <= 0.0 {
                return Err(EvalError::LogDomain(u));
            }
            u.ln()
        }
        Func::Sqrt => {
            if u < 0.0 {
                return Err(EvalError::SqrtDomain(u));
            }
            u.sqrt()
        }
        Func::Sin => u.sin(),
        Func::Cos => u.cos(),
        Func::Tan => u.tan(),
        Func::Sinh => u.sinh(),
        Func::Cosh => u.cosh(),
        Func::Tanh => u.tanh(),
        Func::Sech => 1.0 / u.cosh(),
    })
}

/// First and second derivative of `func` at `u`, given its value `v`.
fn func_derivatives(func: Func, u: f64, v: f64) -> (f64, f64) {
    match func {
        Func::Neg => (-1.0, 0.0),
        Func::Exp => (v, v),
        Func::Ln => (1.0 / u, -1.0 / (u * u)),
        Func::Sqrt => (0.5 / v, -0.25 / (v * v * v)),
        Func::Sin => (u.cos(), -v),
        Func::Cos => (-u.sin(), -v),
        Func::Tan => {
            let sec2 = 1.0 + v * v;
            (sec2, 2.0 * v * sec2)
        }
        Func::Sinh => (u.cosh(), v),
        Func::Cosh => (u.sinh(), v),
        Func::Tanh => {
            let s = 1.0 - v * v;
            (s, -2.0 * v * s)
        }
        Func::Sech => {
            let th = u.tanh();
            (-v * th, v * (th * th - v * v))
        }
    }
}

fn binary_value(op: BinOp, a: f64, b: f64, int_exponent: Option<i32>) -> Result<f64, EvalError> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a / b
        }
        BinOp::Pow => match int_exponent {
            Some(k) => ipow(a, k)?,
            None => {
                if a <= 0.0 {
                    return Err(EvalError::PowDomain(a));
                }
                a.powf(b)
            }
        },
    })
}

fn node_name(e: &Expr) -> &'static str {
    match e {
        Expr::Const(_) => "constant",
        Expr::Coord(_) => "coordinate",
        Expr::Unary(f, _) => f.name(),
        Expr::Binary(BinOp::Add, ..) => "+",
        Expr::Binary(BinOp::Sub, ..) => "-",
        Expr::Binary(BinOp::Mul, ..) => "*",
        Expr::Binary(BinOp::Div, ..) => "/",
        Expr::Binary(BinOp::Pow, ..) => "^",
    }
}

fn coord_value(p: &[f64], index: usize) -> Result<f64, EvalError> {
    p.get(index).copied().ok_or(EvalError::MissingCoordinate { index, dim: p.len() })
}

/// Value of `e` at `p`. Bit-identical to `eval_jet2(e, p)?.value()`.
pub fn eval_value(e: &Expr, p: &[f64]) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Const(c) => *c,
        Expr::Coord(i) => coord_value(p, *i)?,
        Expr::Unary(func, a) => func_value(*func, eval_value(a, p)?)?,
        Expr::Binary(op, a, b) => {
            let int_exponent = if *op == BinOp::Pow { b.integer_constant() } else { None };
            binary_value(*op, eval_value(a, p)?, eval_value(b, p)?, int_exponent)?
        }
    };
    if !v.is_finite() {
        return Err(EvalError::NonFinite(node_name(e)));
    }
    Ok(v)
}

/// Value, gradient and Hessian of `e` at `p` by forward propagation of jets.
pub fn eval_jet2(e: &Expr, p: &[f64]) -> Result<Jet2, EvalError> {
    let d = p.len();
    let jet = match e {
        Expr::Const(c) => Jet2::constant(d, *c),
        Expr::Coord(i) => Jet2::variable(d, *i, coord_value(p, *i)?),
        Expr::Unary(func, a) => {
            let inner = eval_jet2(a, p)?;
            match func {
                Func::Neg => inner.neg(),
                _ => {
                    let u = inner.value();
                    let v = func_value(*func, u)?;
                    let (d1, d2) = func_derivatives(*func, u, v);
                    inner.chain(v, d1, d2)
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let ja = eval_jet2(a, p)?;
            match op {
                BinOp::Pow => pow_jet(&ja, b, p)?,
                _ => {
                    let jb = eval_jet2(b, p)?;
                    match op {
                        BinOp::Add => ja.add(&jb),
                        BinOp::Sub => ja.sub(&jb),
                        BinOp::Mul => ja.mul(&jb),
                        BinOp::Div => {
                            if jb.value() == 0.0 {
                                return Err(EvalError::DivisionByZero);
                            }
                            ja.div(&jb)
                        }
                        BinOp::Pow => unreachable!(),
                    }
                }
            }
        }
    };
    if !jet.is_finite() {
        return Err(EvalError::NonFinite(node_name(e)));
    }
    Ok(jet)
}

fn pow_jet(base: &Jet2, exponent: &Expr, p: &[f64]) -> Result<Jet2, EvalError> {
    let x = base.value();
    if let Some(k) = exponent.integer_constant() {
        let v = ipow(x, k)?;
        let d1 = if k == 0 { 0.0 } else { f64::from(k) * ipow(x, k - 1)? };
        let d2 = if k == 0 || k == 1 {
            0.0
        } else {
            f64::from(k) * f64::from(k - 1) * ipow(x, k - 2)?
        };
        return Ok(base.chain(v, d1, d2));
    }
    if x <= 0.0 {
        return Err(EvalError::PowDomain(x));
    }
    // a^b = exp(b ln a); the value slot is overwritten so it matches eval_value.
    let ln_a = base.chain(x.ln(), 1.0 / x, -1.0 / (x * x));
    let jb = eval_jet2(exponent, p)?;
    let prod = jb.mul(&ln_a);
    let e = prod.value().exp();
    let mut out = prod.chain(e, e, e);
    out.set_value(x.powf(jb.value()));
    Ok(out)
}
