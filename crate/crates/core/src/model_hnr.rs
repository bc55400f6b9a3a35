//! The product `H^n x R` in upper half-space coordinates `(x_1, …, x_n, t)`,
//! `x_n > 0`, with metric `x_n^{-2} Σ dx_i² + dt²`.
//!
//! Coordinate indices are zero-based: `x_i` lives at index `i - 1`, `x_n` at
//! `n - 1` and `t` at `n`. The orthonormal frame is `E_i = x_n ∂_{x_i}`,
//! `E_{n+1} = ∂_t`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::{eval_jet2, Chart, EvalError, Expr, Jet2};
use crate::geometry::{
    bracket, GeometryError, LocalVector, MetricField, QEStructure, SyntheticDim, Tensor2At,
    VectorField,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("H^n x R needs n >= 2, got {0}")]
    InvalidDimension(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("the classifier needs lambda < 0, got {0}")]
    NonNegativeLambda(f64),
    #[error("the classifier needs a finite m")]
    InfiniteM,
    #[error("grid is empty")]
    EmptyGrid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

impl From<EvalError> for ModelError {
    fn from(e: EvalError) -> Self {
        ModelError::Geometry(GeometryError::Eval(e))
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(ModelError::InvalidDimension(n));
    }
    Ok(())
}

/// Index of `x_n`.
pub fn xn_index(n: usize) -> usize {
    n - 1
}

/// Index of `t`.
pub fn t_index(n: usize) -> usize {
    n
}

/// Chart `(x_1, …, x_n, t)` with `x_n > 0`; `x_n` is also accepted as a name.
pub fn hnr_chart(n: usize) -> Result<Chart> {
    check_n(n)?;
    let names = (1..=n).map(|i| format!("x_{i}")).chain(std::iter::once("t".to_string()));
    let chart = Chart::new(names)
        .and_then(|c| c.with_lower_bound(xn_index(n), 0.0))
        .and_then(|c| c.with_alias("x_n", xn_index(n)))
        .map_err(GeometryError::from)?;
    Ok(chart)
}

pub fn hnr_metric(n: usize) -> Result<MetricField> {
    let chart = hnr_chart(n)?;
    let conformal = Expr::one() / Expr::coord(xn_index(n)).powi(2);
    let mut diag = vec![conformal; n];
    diag.push(Expr::one());
    Ok(MetricField::diagonal(chart, diag)?)
}

/// `E_i = x_n ∂_{x_i}` for `i ≤ n`, then `E_{n+1} = ∂_t`.
pub fn hnr_frame(n: usize) -> Result<Vec<VectorField>> {
    check_n(n)?;
    let d = n + 1;
    let mut frame: Vec<VectorField> =
        (0..n).map(|i| VectorField::coordinate(d, i, Expr::coord(xn_index(n)))).collect();
    frame.push(VectorField::coordinate(d, t_index(n), Expr::one()));
    Ok(frame)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn evaluated_frame(n: usize, p: &[f64]) -> Result<(crate::geometry::LocalGeometry, Vec<LocalVector>)> {
    let geo = hnr_metric(n)?.at(p)?;
    let frame = hnr_frame(n)?
        .iter()
        .map(|e| geo.vector(e))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((geo, frame))
}

/// Largest deviation from `[E_l, E_n] = −E_l` (l < n) and `[E_j, E_k] = 0` otherwise.
pub fn bracket_check(n: usize, p: &[f64]) -> Result<f64> {
    let (_, frame) = evaluated_frame(n, p)?;
    let last = xn_index(n);
    let mut worst = 0.0f64;
    for a in 0..=n {
        for b in 0..=n {
            let mut br = bracket(&frame[a], &frame[b]);
            // expected: [E_l, E_n] = −E_l and [E_n, E_l] = E_l
            if a < last && b == last {
                br.iter_mut().zip(&frame[a].value).for_each(|(v, e)| *v += e);
            } else if b < last && a == last {
                br.iter_mut().zip(&frame[b].value).for_each(|(v, e)| *v -= e);
            }
            worst = worst.max(max_abs(&br));
        }
    }
    Ok(worst)
}

/// Largest deviation of `∇_{E_a} E_b` from the connection table
/// `∇_{E_l}E_l = E_n`, `∇_{E_l}E_n = −E_l` (l < n), zero otherwise.
pub fn connection_check(n: usize, p: &[f64]) -> Result<f64> {
    let (geo, frame) = evaluated_frame(n, p)?;
    let last = xn_index(n);
    let mut worst = 0.0f64;
    for a in 0..=n {
        for b in 0..=n {
            let mut v = geo.covariant_derivative(&frame[a], &frame[b]);
            if a < last && b == a {
                v.iter_mut().zip(&frame[last].value).for_each(|(x, e)| *x -= e);
            } else if a < last && b == last {
                v.iter_mut().zip(&frame[a].value).for_each(|(x, e)| *x += e);
            }
            worst = worst.max(max_abs(&v));
        }
    }
    Ok(worst)
}

/// Closed-form Ricci tensor `−(n−1) g + (n−1) dt²` in coordinates.
pub fn ricci_closed(n: usize, p: &[f64]) -> Result<Tensor2At> {
    let chart = hnr_chart(n)?;
    chart.check_point(p).map_err(GeometryError::from)?;
    let k = (n - 1) as f64;
    let conformal = 1.0 / (p[xn_index(n)] * p[xn_index(n)]);
    Ok(Tensor2At::symmetric_from(p.to_vec(), |i, j| match (i == j, i < n) {
        (true, true) => -k * conformal,
        (true, false) => -k + k,
        _ => 0.0,
    }))
}

/// Left-minus-right residuals of the six component equations.
///
/// Each indexed family keeps every instance; [`PdeResiduals::maxima`]
/// reduces them to the signed entry of largest magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeResiduals {
    /// (1) for each `i < n`
    pub diagonal: Vec<f64>,
    /// (2)
    pub normal: f64,
    /// (3)
    pub time: f64,
    /// (4) for each pair `i < j < n`
    pub mixed: Vec<((usize, usize), f64)>,
    /// (5) for each `i < n`
    pub normal_mixed: Vec<f64>,
    /// (6) for each `i ≤ n`
    pub time_mixed: Vec<f64>,
}

pub const PDE_ITEM_NAMES: [&str; 6] =
    ["item1_diag", "item2_normal", "item3_time", "item4_mixed", "item5_normal_mixed", "item6_time_mixed"];

fn signed_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m })
}

impl PdeResiduals {
    /// Signed largest-magnitude residual of each item.
    pub fn maxima(&self) -> [f64; 6] {
        [
            signed_max(self.diagonal.iter().copied()),
            self.normal,
            self.time,
            signed_max(self.mixed.iter().map(|(_, v)| *v)),
            signed_max(self.normal_mixed.iter().copied()),
            signed_max(self.time_mixed.iter().copied()),
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.maxima().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reads the six families off the frame components of `Ric^m_f − λg`.
    ///
    /// The `(E_i, E_j)` and `(E_i, E_{n+1})` components carry the frame
    /// weights `x_n²` and `x_n` that the component equations divide out.
    pub fn from_frame_residual(frame: &DMatrix<f64>, n: usize, xn: f64) -> PdeResiduals {
        let last = xn_index(n);
        let t = t_index(n);
        PdeResiduals {
            diagonal: (0..last).map(|i| frame[(i, i)]).collect(),
            normal: frame[(last, last)],
            time: frame[(t, t)],
            mixed: (0..last)
                .flat_map(|i| (i + 1..last).map(move |j| (i, j)))
                .map(|(i, j)| ((i, j), frame[(i, j)] / (xn * xn)))
                .collect(),
            normal_mixed: (0..last).map(|i| frame[(i, last)]).collect(),
            time_mixed: (0..n).map(|i| frame[(i, t)] / xn).collect(),
        }
    }

    /// Largest difference between corresponding entries.
    pub fn max_difference(&self, other: &PdeResiduals) -> f64 {
        let pairs = self
            .diagonal
            .iter()
            .zip(&other.diagonal)
            .chain(std::iter::once((&self.normal, &other.normal)))
            .chain(std::iter::once((&self.time, &other.time)))
            .chain(self.mixed.iter().map(|(_, v)| v).zip(other.mixed.iter().map(|(_, v)| v)))
            .chain(self.normal_mixed.iter().zip(&other.normal_mixed))
            .chain(self.time_mixed.iter().zip(&other.time_mixed));
        pairs.fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn pde_from_jet(jf: &Jet2, n: usize, m: SyntheticDim, lambda: f64, xn: f64) -> PdeResiduals {
    let last = xn_index(n);
    let t = t_index(n);
    let df = jf.grad();
    let inv_m = m.inverse();
    let k = (n - 1) as f64;
    let xn2 = xn * xn;
    PdeResiduals {
        diagonal: (0..last)
            .map(|i| xn2 * jf.hess(i, i) - xn * df[last] - inv_m * xn2 * df[i] * df[i] - lambda - k)
            .collect(),
        normal: xn * df[last] + xn2 * jf.hess(last, last) - inv_m * xn2 * df[last] * df[last] - lambda - k,
        time: jf.hess(t, t) - inv_m * df[t] * df[t] - lambda,
        mixed: (0..last)
            .flat_map(|i| (i + 1..last).map(move |j| (i, j)))
            .map(|(i, j)| ((i, j), jf.hess(i, j) - inv_m * df[i] * df[j]))
            .collect(),
        normal_mixed: (0..last)
            .map(|i| xn2 * jf.hess(i, last) + xn * df[i] - inv_m * xn2 * df[i] * df[last])
            .collect(),
        time_mixed: (0..n).map(|i| jf.hess(i, t) - inv_m * df[i] * df[t]).collect(),
    }
}

/// The six component equations of `Ric^m_f = λ g` on `H^n x R` at `p`.
pub fn pde_residuals(n: usize, f: &Expr, m: SyntheticDim, lambda: f64, p: &[f64]) -> Result<PdeResiduals> {
    hnr_chart(n)?.check_point(p).map_err(GeometryError::from)?;
    let jf = eval_jet2(f, p)?;
    Ok(pde_from_jet(&jf, n, m, lambda, p[xn_index(n)]))
}

/// Solves item (1) with index `i` for `λ` at `p`.
pub fn lambda_from_item1(n: usize, f: &Expr, m: SyntheticDim, p: &[f64], i: usize) -> Result<f64> {
    hnr_chart(n)?.check_point(p).map_err(GeometryError::from)?;
    let jf = eval_jet2(f, p)?;
    let last = xn_index(n);
    let xn = p[last];
    let df = jf.grad();
    Ok(xn * xn * jf.hess(i, i) - xn * df[last] - m.inverse() * xn * xn * df[i] * df[i] - (n - 1) as f64)
}

/// Frame components of `Ric^m_f − λ g` at `p`.
pub fn frame_residual(n: usize, f: &Expr, m: SyntheticDim, lambda: f64, p: &[f64]) -> Result<DMatrix<f64>> {
    let s = QEStructure::new(hnr_metric(n)?, f.clone(), m, lambda)?;
    let geo = s.metric.at(p)?;
    let res = s.residual_local(&geo)?;
    Ok(geo.frame_components(&res, &hnr_frame(n)?)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExampleKind {
    /// `f = sign·√((n−1)m)·t`
    Linear { sign: f64 },
    /// `f = −m ln cosh(ηt + a)`
    LogCosh { a: f64 },
}

/// One of the two explicit potentials, with its constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExamplePotential {
    pub kind: ExampleKind,
    pub n: usize,
    pub m: f64,
}

impl ExamplePotential {
    pub fn linear(n: usize, m: f64, sign: f64) -> ExamplePotential {
        ExamplePotential { kind: ExampleKind::Linear { sign: sign.signum() }, n, m }
    }

    pub fn log_cosh(n: usize, m: f64, a: f64) -> ExamplePotential {
        ExamplePotential { kind: ExampleKind::LogCosh { a }, n, m }
    }

    /// `η = √((n−1)/m)`
    pub fn eta(&self) -> f64 {
        ((self.n - 1) as f64 / self.m).sqrt()
    }

    /// The Einstein constant both examples share, `λ = −(n−1)`.
    pub fn lambda(&self) -> f64 {
        -((self.n - 1) as f64)
    }

    /// `√((n−1)m)`, the constant speed of Example 1 and the asymptotic speed of Example 2.
    pub fn speed(&self) -> f64 {
        ((self.n - 1) as f64 * self.m).sqrt()
    }

    pub fn structure(&self) -> Result<QEStructure> {
        Ok(QEStructure::new(
            hnr_metric(self.n)?,
            example_potential(self)?,
            SyntheticDim::finite(self.m)?,
            self.lambda(),
        )?)
    }
}

pub fn example_potential(spec: &ExamplePotential) -> Result<Expr> {
    check_n(spec.n)?;
    SyntheticDim::finite(spec.m)?;
    let t = Expr::coord(t_index(spec.n));
    Ok(match spec.kind {
        ExampleKind::Linear { sign } => Expr::constant(sign * spec.speed()) * t,
        ExampleKind::LogCosh { a } => {
            let arg = Expr::constant(spec.eta()) * t + Expr::constant(a);
            Expr::constant(-spec.m) * arg.cosh().ln()
        }
    })
}

/// Sampling grid over `H^n x R`: a tensor-product lattice plus seeded
/// uniform random points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub random_points: usize,
    pub seed: u64,
    pub x_range: (f64, f64),
    /// log-spaced on the lattice
    pub xn_range: (f64, f64),
    pub t_range: (f64, f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_axis: 5,
            random_points: 100,
            seed: 0x5eed,
            x_range: (-1.0, 1.0),
            xn_range: (0.25, 4.0),
            t_range: (-3.0, 3.0),
        }
    }
}

fn linspace((lo, hi): (f64, f64), count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(self.x_range) || !ordered(self.xn_range) || !ordered(self.t_range) {
            return Err(ModelError::InvalidGrid("ranges must be finite with lo <= hi".into()));
        }
        if self.xn_range.0 <= 0.0 {
            return Err(ModelError::InvalidGrid(format!(
                "x_n range must be strictly positive, got [{}, {}]",
                self.xn_range.0, self.xn_range.1
            )));
        }
        if self.points_per_axis == 0 && self.random_points == 0 {
            return Err(ModelError::EmptyGrid);
        }
        Ok(())
    }

    pub fn lattice(&self, n: usize) -> Vec<Vec<f64>> {
        let x = linspace(self.x_range, self.points_per_axis);
        let (lo, hi) = self.xn_range;
        let xn: Vec<f64> =
            linspace((lo.ln(), hi.ln()), self.points_per_axis).into_iter().map(f64::exp).collect();
        let t = linspace(self.t_range, self.points_per_axis);
        let mut axes: Vec<&[f64]> = vec![&x; n - 1];
        axes.push(&xn);
        axes.push(&t);
        let mut points: Vec<Vec<f64>> = vec![Vec::with_capacity(n + 1)];
        for axis in axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        if self.points_per_axis == 0 {
            points.clear();
        }
        points
    }

    pub fn random(&self, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.random_points)
            .map(|_| {
                let mut p: Vec<f64> = (0..n - 1).map(|_| sample(&mut rng, self.x_range)).collect();
                p.push(sample(&mut rng, self.xn_range));
                p.push(sample(&mut rng, self.t_range));
                p
            })
            .collect()
    }

    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut pts = self.lattice(n);
        pts.extend(self.random(n));
        pts
    }
}

fn sample(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Default absolute tolerance of the classifier.
pub const CLASSIFY_TOL: f64 = 1e-7;
const ARTANH_CLAMP: f64 = 1.0 - 1e-12;

/// Steps of the uniqueness argument, in the order they are tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProofStep {
    /// `∂f/∂t ≡ ±√(−mλ)`
    ConstantRate,
    /// `∂f/∂t = −√(−mλ) tanh(μt + a)` with `a` constant
    TanhProfile,
    /// `∂f/∂x_i ≡ 0` for every `i ≤ n`
    SpatialGradient,
    /// `λ = −(n−1)`
    LambdaForcing,
    /// all six component equations
    PdeSystem,
}

impl ProofStep {
    pub fn name(self) -> &'static str {
        match self {
            ProofStep::ConstantRate => "constant-rate",
            ProofStep::TanhProfile => "tanh-profile",
            ProofStep::SpatialGradient => "spatial-gradient",
            ProofStep::LambdaForcing => "lambda-forcing",
            ProofStep::PdeSystem => "pde-system",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VerdictTag {
    Example1Plus,
    Example1Minus,
    Example2 { a: f64 },
    NotQuasiEinstein { failed: ProofStep },
}

impl VerdictTag {
    pub fn label(&self) -> String {
        match self {
            VerdictTag::Example1Plus => "example1-plus".into(),
            VerdictTag::Example1Minus => "example1-minus".into(),
            VerdictTag::Example2 { .. } => "example2".into(),
            VerdictTag::NotQuasiEinstein { failed } => format!("not-quasi-einstein ({})", failed.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepEvidence {
    pub step: ProofStep,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub points: usize,
}

/// Outcome of [`classify`]. It certifies the verdict only on the sampled
/// grid and up to the tolerance; it is numerical evidence, not a proof.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationVerdict {
    pub tag: VerdictTag,
    pub evidence: Vec<StepEvidence>,
    /// Largest `|residual|` of the six component equations over the grid.
    pub max_pde_residual: f64,
}

impl ClassificationVerdict {
    pub fn failed_step(&self) -> Option<ProofStep> {
        match self.tag {
            VerdictTag::NotQuasiEinstein { failed } => Some(failed),
            _ => None,
        }
    }
}

/// Runs the uniqueness argument numerically on `grid`: the time profile of
/// `∂f/∂t`, vanishing spatial gradient, and the forced value of `λ`.
pub fn classify(
    n: usize,
    f: &Expr,
    m: SyntheticDim,
    lambda: f64,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<ClassificationVerdict> {
    let chart = hnr_chart(n)?;
    let m_val = m.value().ok_or(ModelError::InfiniteM)?;
    if !(lambda < 0.0) {
        return Err(ModelError::NonNegativeLambda(lambda));
    }
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let jets = grid
        .par_iter()
        .map(|p| {
            chart.check_point(p).map_err(GeometryError::from)?;
            Ok(eval_jet2(f, p)?)
        })
        .collect::<Result<Vec<Jet2>>>()?;
    let t = t_index(n);
    let last = xn_index(n);
    let speed = (-m_val * lambda).sqrt();
    let mu_rate = (-lambda / m_val).sqrt();

    let max_pde_residual = jets
        .iter()
        .zip(grid)
        .map(|(j, p)| pde_from_jet(j, n, m, lambda, p[last]).max_abs())
        .fold(0.0, f64::max);

    let mut evidence = Vec::new();
    let finish = |tag: VerdictTag, evidence: Vec<StepEvidence>| ClassificationVerdict {
        tag,
        evidence,
        max_pde_residual,
    };

    // (a) constant branch
    let dev_plus = jets.iter().map(|j| (j.grad()[t] - speed).abs()).fold(0.0, f64::max);
    let dev_minus = jets.iter().map(|j| (j.grad()[t] + speed).abs()).fold(0.0, f64::max);
    let constant_dev = dev_plus.min(dev_minus);
    let constant = constant_dev <= tol;
    evidence.push(StepEvidence {
        step: ProofStep::ConstantRate,
        residual: constant_dev,
        tolerance: tol,
        passed: constant,
        points: jets.len(),
    });

    // (b) tanh branch with a constant phase
    let mut phase = None;
    if !constant {
        let fits: Vec<f64> = jets
            .iter()
            .zip(grid)
            .filter(|(j, _)| j.grad()[t].abs() < speed)
            .map(|(j, p)| {
                let arg = (-j.grad()[t] / speed).clamp(-ARTANH_CLAMP, ARTANH_CLAMP);
                arg.atanh() - mu_rate * p[t]
            })
            .collect();
        let (residual, passed) = if fits.is_empty() {
            (f64::INFINITY, false)
        } else {
            let a = fits.iter().sum::<f64>() / fits.len() as f64;
            let spread = fits.iter().map(|v| (v - a).abs()).fold(0.0, f64::max);
            let profile = jets
                .iter()
                .zip(grid)
                .map(|(j, p)| (j.grad()[t] + speed * (mu_rate * p[t] + a).tanh()).abs())
                .fold(0.0, f64::max);
            phase = Some(a);
            (spread.max(profile), spread <= tol && profile <= tol)
        };
        evidence.push(StepEvidence {
            step: ProofStep::TanhProfile,
            residual,
            tolerance: tol,
            passed,
            points: fits.len(),
        });
        if !passed {
            return Ok(finish(VerdictTag::NotQuasiEinstein { failed: ProofStep::TanhProfile }, evidence));
        }
    }

    // (c) no dependence on x
    let spatial = jets
        .iter()
        .map(|j| j.grad()[..n].iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0, f64::max);
    let spatial_ok = spatial <= tol;
    evidence.push(StepEvidence {
        step: ProofStep::SpatialGradient,
        residual: spatial,
        tolerance: tol,
        passed: spatial_ok,
        points: jets.len(),
    });
    if !spatial_ok {
        return Ok(finish(VerdictTag::NotQuasiEinstein { failed: ProofStep::SpatialGradient }, evidence));
    }

    // (d) item (1) forces λ = −(n−1)
    let forced = jets
        .iter()
        .zip(grid)
        .map(|(j, p)| {
            let xn = p[last];
            let df = j.grad();
            let est = xn * xn * j.hess(0, 0) - xn * df[last] - m.inverse() * xn * xn * df[0] * df[0]
                - (n - 1) as f64;
            (est - lambda).abs()
        })
        .fold((lambda + (n - 1) as f64).abs(), f64::max);
    let forced_ok = forced <= tol;
    evidence.push(StepEvidence {
        step: ProofStep::LambdaForcing,
        residual: forced,
        tolerance: tol,
        passed: forced_ok,
        points: jets.len(),
    });
    if !forced_ok {
        return Ok(finish(VerdictTag::NotQuasiEinstein { failed: ProofStep::LambdaForcing }, evidence));
    }

    let pde_ok = max_pde_residual <= tol;
    evidence.push(StepEvidence {
        step: ProofStep::PdeSystem,
        residual: max_pde_residual,
        tolerance: tol,
        passed: pde_ok,
        points: jets.len(),
    });
    if !pde_ok {
        return Ok(finish(VerdictTag::NotQuasiEinstein { failed: ProofStep::PdeSystem }, evidence));
    }

    let tag = match phase {
        Some(a) => VerdictTag::Example2 { a },
        None if dev_plus <= dev_minus => VerdictTag::Example1Plus,
        None => VerdictTag::Example1Minus,
    };
    Ok(finish(tag, evidence))
}
