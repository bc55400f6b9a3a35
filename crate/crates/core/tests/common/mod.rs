//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use qeinstein::expr::{eval_jet2, eval_value, BinOp, EvalError, Expr, Func};
use qeinstein::model_hnr::GridSpec;
use rand::Rng;

/// Random expression over `dim` coordinates mixing every operator.
pub fn random_expr(rng: &mut impl Rng, dim: usize, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.6) {
            Expr::coord(rng.gen_range(0..dim))
        } else {
            Expr::constant((rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0)
        };
    }
    match rng.gen_range(0..10) {
        0..=3 => {
            let func = Func::CALLABLE[rng.gen_range(0..Func::CALLABLE.len())];
            random_expr(rng, dim, depth - 1).apply(func)
        }
        4 => -random_expr(rng, dim, depth - 1),
        5 => random_expr(rng, dim, depth - 1).powi(rng.gen_range(-2..=3)),
        6 => {
            let base = random_expr(rng, dim, depth - 1);
            base.pow(Expr::constant(rng.gen_range(0.3..2.5)))
        }
        _ => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.gen_range(0..4)];
            Expr::binary(op, random_expr(rng, dim, depth - 1), random_expr(rng, dim, depth - 1))
        }
    }
}

/// Random smooth potential on `H^n x R` built from globally smooth pieces.
pub fn random_smooth_potential(rng: &mut impl Rng, n: usize) -> Expr {
    let d = n + 1;
    let mut f = Expr::zero();
    for _ in 0..4 {
        let i = rng.gen_range(0..d);
        let j = rng.gen_range(0..d);
        let c = Expr::constant(rng.gen_range(-1.0..1.0));
        let term = match rng.gen_range(0..5) {
            0 => Expr::coord(i) * Expr::coord(j),
            1 => Expr::coord(i).apply(Func::Sin) * Expr::coord(j).apply(Func::Cos),
            2 => (Expr::constant(0.5) * Expr::coord(i)).tanh(),
            3 => (Expr::constant(0.3) * Expr::coord(i) - Expr::constant(0.2) * Expr::coord(j)).exp(),
            _ => (Expr::coord(i).powi(2) + Expr::one()).ln(),
        };
        f = f + c * term;
    }
    f
}

pub const FD_STEP: f64 = 1e-5;

/// Largest truncation estimate, relative to the scale, at which the
/// difference oracle is trusted to adjudicate a `1e-5` comparison.
pub const FD_TRUNCATION_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FdCheck {
    /// Relative disagreement between the jet and central differences.
    Usable(f64),
    /// A stencil point leaves the domain, `|e| > 1e4`, or a derivative
    /// exceeds `1e6`, where a step of `1e-5` aliases oscillations.
    OutsideDomain,
    /// Steps `h` and `2h` disagree by more than the limit: the differences
    /// themselves are too inaccurate at this point to judge the jet.
    Truncation(f64),
}

/// Central-difference gradient and Hessian (upper triangle) of `e` at `p`.
fn central_differences(e: &Expr, p: &[f64], h: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>), EvalError> {
    let d = p.len();
    let at = |shifts: &[(usize, f64)]| -> Result<f64, EvalError> {
        let mut q = p.to_vec();
        for &(i, s) in shifts {
            q[i] += s;
        }
        eval_value(e, &q)
    };
    let f0 = at(&[])?;
    let mut grad = vec![0.0; d];
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        let (fp, fm) = (at(&[(i, h)])?, at(&[(i, -h)])?);
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in i + 1..d {
            hess[i][j] = (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                + at(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
        }
    }
    Ok((grad, hess))
}

/// Compares the jet of `e` at `p` with central differences of step
/// [`FD_STEP`], relative to `max(1, |e|, |∇e|, |∇²e|)`. The same stencil at
/// twice the step gives the truncation estimate `|D(h) − D(2h)| / 3`.
pub fn fd_check(e: &Expr, p: &[f64]) -> FdCheck {
    let Ok(jet) = eval_jet2(e, p) else { return FdCheck::OutsideDomain };
    if !(jet.value().abs() <= 1e4) {
        return FdCheck::OutsideDomain;
    }
    let (Ok((g1, h1)), Ok((g2, h2))) = (central_differences(e, p, FD_STEP), central_differences(e, p, 2.0 * FD_STEP))
    else {
        return FdCheck::OutsideDomain;
    };
    let d = p.len();
    let mut scale = 1f64.max(jet.value().abs());
    for i in 0..d {
        scale = scale.max(jet.grad()[i].abs());
        for j in i..d {
            scale = scale.max(jet.hess(i, j).abs());
        }
    }
    let (mut worst, mut truncation) = (0.0f64, 0.0f64);
    for i in 0..d {
        worst = worst.max((g1[i] - jet.grad()[i]).abs());
        truncation = truncation.max((g1[i] - g2[i]).abs() / 3.0);
        for j in i..d {
            worst = worst.max((h1[i][j] - jet.hess(i, j)).abs());
            truncation = truncation.max((h1[i][j] - h2[i][j]).abs() / 3.0);
        }
    }
    if !(scale <= 1e6) {
        return FdCheck::OutsideDomain;
    }
    if !(truncation / scale <= FD_TRUNCATION_LIMIT) {
        return FdCheck::Truncation(truncation / scale);
    }
    FdCheck::Usable(worst / scale)
}

pub fn random_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    GridSpec { points_per_axis: 0, random_points: count, seed, ..GridSpec::default() }.random(n)
}

pub fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}
