//! Static metrics and warped products attached to a quasi-Einstein structure.
//!
//! With `u = e^{−f/m}` the structure equation reads
//! `Ric − (m/u)∇²u = λg`. For integer `m` the warped product
//! `g + u² g_F` over an `m`-dimensional Einstein fiber `(F, g_F)` with
//! `Ric_F = μ g_F` is then Einstein with constant `λ`, where `μ` is the
//! constant `(mλ − Δf + |∇f|²) e^{−2f/m} / m`.

use crate::expr::{eval_jet2, Chart, ChartError, Expr, Jet2};
use crate::geometry::{
    GeometryError, LocalGeometry, MetricField, QEStructure, SyntheticDim, Tensor2At,
};

/// Largest allowed gap between the fiber's Einstein constant and `μ`.
pub const FIBER_MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WarpError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("this operation needs a finite m")]
    InfiniteM,
    #[error("u must be positive, got {0}")]
    NonPositiveU(f64),
    #[error("the warped product needs an integer m, got {0}")]
    NonIntegerM(f64),
    #[error("fiber dimension {k} differs from m = {m}")]
    FiberDimension { k: usize, m: f64 },
    #[error("fiber Einstein constant {fiber} does not match mu = {mu}")]
    FiberMismatch { fiber: f64, mu: f64 },
    #[error("fiber scale r^2 must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("fiber dimension must be at least 1")]
    EmptyFiber,
    #[error("h must be a symmetric {0}x{0} matrix")]
    BadPerturbation(usize),
}

impl From<ChartError> for WarpError {
    fn from(e: ChartError) -> Self {
        WarpError::Geometry(e.into())
    }
}

impl From<crate::expr::EvalError> for WarpError {
    fn from(e: crate::expr::EvalError) -> Self {
        WarpError::Geometry(e.into())
    }
}

pub type Result<T, E = WarpError> = std::result::Result<T, E>;

/// `u = exp(−f/m)`
pub fn u_from_f(f: &Expr, m: SyntheticDim) -> Result<Expr> {
    let m = m.value().ok_or(WarpError::InfiniteM)?;
    Ok((Expr::constant(-1.0 / m) * f.clone()).exp())
}

fn positive_u(u: &Expr, p: &[f64]) -> Result<Jet2> {
    let ju = eval_jet2(u, p)?;
    if !(ju.value() > 0.0) {
        return Err(WarpError::NonPositiveU(ju.value()));
    }
    Ok(ju)
}

/// `Ric − (m/u)∇²u − λg`
pub fn qe_u_residual(g: &MetricField, u: &Expr, m: SyntheticDim, lambda: f64, p: &[f64]) -> Result<Tensor2At> {
    let m = m.value().ok_or(WarpError::InfiniteM)?;
    let geo = g.at(p)?;
    let ju = positive_u(u, p)?;
    let ric = geo.ricci();
    let hess = geo.hessian(&ju);
    let w = m / ju.value();
    Ok(Tensor2At::symmetric_from(p.to_vec(), |i, j| {
        ric.get(i, j) - w * hess.get(i, j) - lambda * geo.metric()[(i, j)]
    }))
}

/// Second covariant derivative `S[c][d][a][b] = ∇_c ∇_d h_ab` of a
/// symmetric 2-tensor given by the jets of its entries.
fn second_covariant(geo: &LocalGeometry, h: &[Jet2]) -> Vec<f64> {
    let d = geo.dim();
    let hv = |a: usize, b: usize| h[a * d + b].value();
    let dh = |c: usize, a: usize, b: usize| h[a * d + b].grad()[c];
    let ddh = |c: usize, e: usize, a: usize, b: usize| h[a * d + b].hess(c, e);
    let gm = |k: usize, i: usize, j: usize| geo.gamma(k, i, j);
    let idx3 = |a: usize, b: usize, c: usize| (a * d + b) * d + c;

    // ∇_c h_ab
    let mut nabla = vec![0.0; d * d * d];
    for c in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut v = dh(c, a, b);
                for e in 0..d {
                    v -= gm(e, c, a) * hv(e, b) + gm(e, c, b) * hv(a, e);
                }
                nabla[idx3(c, a, b)] = v;
            }
        }
    }
    let mut out = vec![0.0; d * d * d * d];
    for c in 0..d {
        for dd in 0..d {
            for a in 0..d {
                for b in 0..d {
                    // ∂_c (∇_dd h_ab)
                    let mut v = ddh(c, dd, a, b);
                    for e in 0..d {
                        v -= geo.dgamma(c, e, dd, a) * hv(e, b)
                            + gm(e, dd, a) * dh(c, e, b)
                            + geo.dgamma(c, e, dd, b) * hv(a, e)
                            + gm(e, dd, b) * dh(c, a, e);
                    }
                    for e in 0..d {
                        v -= gm(e, c, dd) * nabla[idx3(e, a, b)]
                            + gm(e, c, a) * nabla[idx3(dd, e, b)]
                            + gm(e, c, b) * nabla[idx3(dd, a, e)];
                    }
                    out[((c * d + dd) * d + a) * d + b] = v;
                }
            }
        }
    }
    out
}

fn perturbation_jets(g: &MetricField, h: &[Vec<Expr>], p: &[f64]) -> Result<Vec<Jet2>> {
    let d = g.dim();
    if h.len() != d || h.iter().any(|row| row.len() != d) {
        return Err(WarpError::BadPerturbation(d));
    }
    for i in 0..d {
        for j in 0..i {
            if h[i][j] != h[j][i] {
                return Err(WarpError::BadPerturbation(d));
            }
        }
    }
    Ok(h.iter().flatten().map(|e| eval_jet2(e, p)).collect::<Result<Vec<_>, _>>()?)
}

/// Linearized scalar curvature `L_g(h) = −Δ(tr h) + div div h − ⟨h, Ric⟩`.
pub fn linearization_lg(g: &MetricField, h: &[Vec<Expr>], p: &[f64]) -> Result<f64> {
    let geo = g.at(p)?;
    let jets = perturbation_jets(g, h, p)?;
    let d = geo.dim();
    let s = second_covariant(&geo, &jets);
    let gi = geo.inverse_metric();
    let at = |c: usize, dd: usize, a: usize, b: usize| s[((c * d + dd) * d + a) * d + b];
    let mut lap_trace = 0.0;
    let mut div_div = 0.0;
    for c in 0..d {
        for dd in 0..d {
            for a in 0..d {
                for b in 0..d {
                    lap_trace += gi[(c, dd)] * gi[(a, b)] * at(c, dd, a, b);
                    div_div += gi[(c, a)] * gi[(dd, b)] * at(c, dd, a, b);
                }
            }
        }
    }
    let hv = Tensor2At::symmetric_from(p.to_vec(), |i, j| jets[i * d + j].value());
    Ok(-lap_trace + div_div - geo.inner(&hv, &geo.ricci()))
}

/// `L*_g(u) = −(Δu) g + ∇²u − u Ric`
pub fn adjoint_lg_star(g: &MetricField, u: &Expr, p: &[f64]) -> Result<Tensor2At> {
    let geo = g.at(p)?;
    let ju = eval_jet2(u, p)?;
    let lap = geo.laplacian(&ju);
    let hess = geo.hessian(&ju);
    let ric = geo.ricci();
    Ok(Tensor2At::symmetric_from(p.to_vec(), |i, j| {
        -lap * geo.metric()[(i, j)] + hess.get(i, j) - ju.value() * ric.get(i, j)
    }))
}

/// `Δ(e^{−f}) + λ e^{−f}`
pub fn static_residual(g: &MetricField, f: &Expr, lambda: f64, p: &[f64]) -> Result<f64> {
    let geo = g.at(p)?;
    let ju = eval_jet2(&(-f.clone()).exp(), p)?;
    Ok(geo.laplacian(&ju) + lambda * ju.value())
}

/// The fiber Einstein constant `μ = (mλ − Δf + |∇f|²) e^{−2f/m} / m` at `p`.
pub fn mu_fiber(s: &QEStructure, p: &[f64]) -> Result<f64> {
    let m = s.m.value().ok_or(WarpError::InfiniteM)?;
    let geo = s.metric.at(p)?;
    let jf = eval_jet2(&s.potential, p)?;
    let drift = geo.laplacian(&jf) - geo.grad_norm_sq(&jf);
    Ok((m * s.lambda - drift) * (-2.0 * jf.value() / m).exp() / m)
}

/// An Einstein fiber of dimension `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiberSpec {
    Flat { k: usize },
    /// `r² g_{H^k}` in half-space coordinates
    ScaledHyperbolic { k: usize, r2: f64 },
}

impl FiberSpec {
    pub fn dim(&self) -> usize {
        match *self {
            FiberSpec::Flat { k } | FiberSpec::ScaledHyperbolic { k, .. } => k,
        }
    }

    /// `Ric_F = einstein_constant · g_F`
    pub fn einstein_constant(&self) -> f64 {
        match *self {
            FiberSpec::Flat { .. } => 0.0,
            FiberSpec::ScaledHyperbolic { k, r2 } => -((k - 1) as f64) / r2,
        }
    }

    /// The fiber realizing a given `μ` in dimension `k`: flat when `μ = 0`
    /// (or `k = 1`), a rescaled hyperbolic space when `μ < 0`, and `None`
    /// for `μ > 0`.
    pub fn for_mu(k: usize, mu: f64) -> Option<FiberSpec> {
        if k == 1 || mu.abs() <= FIBER_MATCH_TOL {
            Some(FiberSpec::Flat { k })
        } else if mu < 0.0 {
            Some(FiberSpec::ScaledHyperbolic { k, r2: -((k - 1) as f64) / mu })
        } else {
            None
        }
    }
}

pub fn fiber_chart(spec: &FiberSpec) -> Result<Chart> {
    let k = spec.dim();
    if k == 0 {
        return Err(WarpError::EmptyFiber);
    }
    let chart = Chart::new((1..=k).map(|i| format!("y_{i}")))?;
    Ok(match spec {
        FiberSpec::Flat { .. } => chart,
        FiberSpec::ScaledHyperbolic { .. } => chart.with_lower_bound(k - 1, 0.0)?,
    })
}

pub fn fiber_metric(spec: &FiberSpec) -> Result<MetricField> {
    let chart = fiber_chart(spec)?;
    let k = spec.dim();
    match *spec {
        FiberSpec::Flat { .. } => Ok(MetricField::euclidean(chart)),
        FiberSpec::ScaledHyperbolic { r2, .. } => {
            if !(r2 > 0.0 && r2.is_finite()) {
                return Err(WarpError::InvalidRadius(r2));
            }
            let entry = Expr::constant(r2) / Expr::coord(k - 1).powi(2);
            Ok(MetricField::diagonal(chart, vec![entry; k])?)
        }
    }
}

fn integer_m(s: &QEStructure) -> Result<usize> {
    let m = s.m.value().ok_or(WarpError::InfiniteM)?;
    if m.fract() != 0.0 || m < 1.0 {
        return Err(WarpError::NonIntegerM(m));
    }
    Ok(m as usize)
}

/// `g + u² g_F` on the product chart, `u² = e^{−2f/m}`.
pub fn warped_metric(s: &QEStructure, spec: &FiberSpec) -> Result<MetricField> {
    let m = integer_m(s)?;
    if spec.dim() != m {
        return Err(WarpError::FiberDimension { k: spec.dim(), m: m as f64 });
    }
    let fiber = fiber_metric(spec)?;
    let base_dim = s.dim();
    let chart = s.metric.chart().product(fiber.chart())?;
    let u2 = (Expr::constant(-2.0 / m as f64) * s.potential.clone()).exp();
    let total = base_dim + m;
    let entries = (0..total)
        .map(|i| {
            (0..total)
                .map(|j| match (i < base_dim, j < base_dim) {
                    (true, true) => s.metric.entry(i, j).clone(),
                    (false, false) => {
                        let e = fiber.entry(i - base_dim, j - base_dim);
                        if e.is_zero() {
                            Expr::zero()
                        } else {
                            u2.clone() * e.map_coords(&|c| c + base_dim)
                        }
                    }
                    _ => Expr::zero(),
                })
                .collect()
        })
        .collect();
    Ok(MetricField::new(chart, entries)?)
}

/// Checks that the fiber's Einstein constant matches `μ` at the base point.
pub fn check_fiber(s: &QEStructure, spec: &FiberSpec, base_point: &[f64]) -> Result<()> {
    let mu = mu_fiber(s, base_point)?;
    let fiber = spec.einstein_constant();
    if !((fiber - mu).abs() <= FIBER_MATCH_TOL) {
        return Err(WarpError::FiberMismatch { fiber, mu });
    }
    Ok(())
}

/// `Ric(g̃) − λ g̃` for the warped product at a point of the product chart.
pub fn warped_einstein_residual(s: &QEStructure, spec: &FiberSpec, p: &[f64]) -> Result<Tensor2At> {
    let metric = warped_metric(s, spec)?;
    let base = s.dim();
    if p.len() != metric.dim() {
        return Err(GeometryError::DimensionMismatch { expected: metric.dim(), got: p.len() }.into());
    }
    check_fiber(s, spec, &p[..base])?;
    warped_residual_with(&metric, s.lambda, p)
}

/// Residual on a prebuilt warped metric, for repeated evaluation.
pub fn warped_residual_with(metric: &MetricField, lambda: f64, p: &[f64]) -> Result<Tensor2At> {
    let geo = metric.at(p)?;
    Ok(geo.ricci().sub(&geo.metric_tensor().scale(lambda)))
}
