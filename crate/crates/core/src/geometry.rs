//! Coordinate Riemannian tensor calculus evaluated at points.
//!
//! Every operation works from the second-order jets of the metric entries:
//! Christoffel symbols use first derivatives, and their derivatives (needed
//! for curvature) are obtained by differentiating the closed Christoffel
//! formula with the second derivatives of the entries, so nothing beyond
//! jet order two is ever required.
//!
//! Index conventions: `Γ^k_ij` is stored as `gamma(k, i, j)`, the curvature
//! operator is `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l` with
//! `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_is Γ^s_jk − Γ^l_js Γ^s_ik`,
//! and `Ric_jk = R^i_ijk`.

use nalgebra::DMatrix;

use crate::expr::{eval_jet2, Chart, ChartError, EvalError, Expr, Jet2};

/// Relative pivot threshold of the symmetric factorization.
pub const PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is singular or indefinite at the point (pivot {pivot:e}, largest pivot {max:e})")]
    SingularMetric { pivot: f64, max: f64 },
    #[error("metric entries ({0},{1}) and ({1},{0}) differ")]
    NotSymmetric(usize, usize),
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression references coordinate {index} but the chart has dimension {dim}")]
    UnknownCoordinate { index: usize, dim: usize },
    #[error("frame vectors are linearly dependent at the point")]
    DegenerateFrame,
    #[error("synthetic dimension m must be positive, got {0}")]
    InvalidSyntheticDim(f64),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// The parameter `m ∈ (0, ∞]` weighting the `df ⊗ df` term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SyntheticDim {
    Finite(f64),
    Infinite,
}

impl SyntheticDim {
    pub fn finite(m: f64) -> Result<SyntheticDim> {
        if m > 0.0 && m.is_finite() {
            Ok(SyntheticDim::Finite(m))
        } else if m == f64::INFINITY {
            Ok(SyntheticDim::Infinite)
        } else {
            Err(GeometryError::InvalidSyntheticDim(m))
        }
    }

    /// `1/m`, zero when `m = ∞`.
    pub fn inverse(self) -> f64 {
        match self {
            SyntheticDim::Finite(m) => 1.0 / m,
            SyntheticDim::Infinite => 0.0,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            SyntheticDim::Finite(m) => Some(m),
            SyntheticDim::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SyntheticDim::Infinite)
    }
}

fn check_coords(e: &Expr, dim: usize) -> Result<()> {
    match e.max_coord() {
        Some(index) if index >= dim => Err(GeometryError::UnknownCoordinate { index, dim }),
        _ => Ok(()),
    }
}

/// A Riemannian metric given by a symmetric matrix of expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    chart: Chart,
    entries: Vec<Expr>,
}

impl MetricField {
    pub fn new(chart: Chart, entries: Vec<Vec<Expr>>) -> Result<MetricField> {
        let d = chart.dim();
        if entries.len() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, got: entries.len() });
        }
        for row in &entries {
            if row.len() != d {
                return Err(GeometryError::DimensionMismatch { expected: d, got: row.len() });
            }
            for e in row {
                check_coords(e, d)?;
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                if entries[i][j] != entries[j][i] {
                    return Err(GeometryError::NotSymmetric(i, j));
                }
            }
        }
        Ok(MetricField { chart, entries: entries.into_iter().flatten().collect() })
    }

    pub fn diagonal(chart: Chart, diag: Vec<Expr>) -> Result<MetricField> {
        let d = diag.len();
        let entries = diag
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let mut row = vec![Expr::zero(); d];
                row[i] = e;
                row
            })
            .collect();
        MetricField::new(chart, entries)
    }

    /// The flat metric `Σ dx_i²`.
    pub fn euclidean(chart: Chart) -> MetricField {
        let d = chart.dim();
        MetricField::diagonal(chart, vec![Expr::one(); d]).expect("identity metric is valid")
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim() + j]
    }

    pub fn entries(&self) -> Vec<Vec<Expr>> {
        self.entries.chunks(self.dim()).map(<[Expr]>::to_vec).collect()
    }

    /// Evaluates the metric and its connection data at `p`.
    pub fn at(&self, p: &[f64]) -> Result<LocalGeometry> {
        LocalGeometry::new(self, p)
    }
}

/// Vector field in coordinate components, or the gradient of a potential.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorField {
    Components(Vec<Expr>),
    Gradient(Expr),
}

impl VectorField {
    pub fn components(components: Vec<Expr>) -> VectorField {
        VectorField::Components(components)
    }

    pub fn gradient(f: Expr) -> VectorField {
        VectorField::Gradient(f)
    }

    /// `scale · ∂_index`.
    pub fn coordinate(dim: usize, index: usize, scale: Expr) -> VectorField {
        let mut c = vec![Expr::zero(); dim];
        c[index] = scale;
        VectorField::Components(c)
    }

    pub fn zero(dim: usize) -> VectorField {
        VectorField::Components(vec![Expr::zero(); dim])
    }
}

/// A vector field evaluated at a point: components `X^k` and `∂_i X^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalVector {
    pub value: Vec<f64>,
    /// `jacobian[(k, i)] = ∂_i X^k`
    pub jacobian: DMatrix<f64>,
}

/// Covariant 2-tensor at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2At {
    pub point: Vec<f64>,
    pub components: DMatrix<f64>,
}

impl Tensor2At {
    pub fn new(point: Vec<f64>, components: DMatrix<f64>) -> Tensor2At {
        Tensor2At { point, components }
    }

    pub fn zeros(point: Vec<f64>) -> Tensor2At {
        let d = point.len();
        Tensor2At { point, components: DMatrix::zeros(d, d) }
    }

    /// Fills the upper triangle from `f` and mirrors it.
    pub fn symmetric_from(point: Vec<f64>, mut f: impl FnMut(usize, usize) -> f64) -> Tensor2At {
        let d = point.len();
        let mut c = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = f(i, j);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Tensor2At { point, components: c }
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.components[(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|T_ij − T_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (&self.components - self.components.transpose()).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &Tensor2At) -> Tensor2At {
        Tensor2At::new(self.point.clone(), &self.components + &other.components)
    }

    pub fn sub(&self, other: &Tensor2At) -> Tensor2At {
        Tensor2At::new(self.point.clone(), &self.components - &other.components)
    }

    pub fn scale(&self, a: f64) -> Tensor2At {
        Tensor2At::new(self.point.clone(), &self.components * a)
    }

    /// `T(E_a, E_b)` for the frame whose columns are the `E_a`.
    pub fn in_frame(&self, frame: &DMatrix<f64>) -> DMatrix<f64> {
        frame.transpose() * &self.components * frame
    }
}

/// Christoffel symbols of the second kind at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_ij`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.data[(k * d + i) * d + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Curvature components `R^l_ijk` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.data[((l * d + i) * d + j) * d + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `⟨R(∂_i, ∂_j)∂_j, ∂_i⟩ / (g_ii g_jj − g_ij²)`.
    pub fn sectional(&self, g: &DMatrix<f64>, i: usize, j: usize) -> f64 {
        let num: f64 = (0..self.dim).map(|l| g[(i, l)] * self.get(l, i, j, j)).sum();
        num / (g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)])
    }
}

/// `LDLᵀ` factorization without pivoting; returns the inverse of `g`.
pub fn invert_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = g.nrows();
    let mut l = DMatrix::<f64>::identity(d, d);
    let mut diag = vec![0.0; d];
    for j in 0..d {
        let mut dj = g[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * diag[k];
        }
        diag[j] = dj;
        let max = diag[..=j].iter().fold(0.0f64, |m, v| m.max(*v));
        if !(dj > PIVOT_RTOL * max) || !dj.is_finite() {
            return Err(GeometryError::SingularMetric { pivot: dj, max });
        }
        for i in j + 1..d {
            let mut v = g[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * diag[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    let max = diag.iter().fold(0.0f64, |m, v| m.max(*v));
    if let Some(&pivot) = diag.iter().find(|&&p| p <= PIVOT_RTOL * max) {
        return Err(GeometryError::SingularMetric { pivot, max });
    }
    // Solve L D Lᵀ X = I column by column.
    let mut inv = DMatrix::<f64>::zeros(d, d);
    for c in 0..d {
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut v = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                v -= l[(i, k)] * y[k];
            }
            y[i] = v;
        }
        for (yi, di) in y.iter_mut().zip(&diag) {
            *yi /= di;
        }
        for i in (0..d).rev() {
            let mut v = y[i];
            for k in i + 1..d {
                v -= l[(k, i)] * inv[(k, c)];
            }
            inv[(i, c)] = v;
        }
    }
    // symmetrize away rounding
    let inv = (&inv + inv.transpose()) * 0.5;
    Ok(inv)
}

/// Metric, inverse, Christoffel symbols and their derivatives at one point.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    point: Vec<f64>,
    dim: usize,
    entry_jets: Vec<Jet2>,
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    /// `dginv[m] = ∂_m g^{..}`
    dginv: Vec<DMatrix<f64>>,
    gamma: Vec<f64>,
    /// `dgamma[((m*d + k)*d + i)*d + j] = ∂_m Γ^k_ij`
    dgamma: Vec<f64>,
}

impl LocalGeometry {
    pub fn new(metric: &MetricField, p: &[f64]) -> Result<LocalGeometry> {
        metric.chart.check_point(p)?;
        let d = metric.dim();
        let mut entry_jets: Vec<Jet2> = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let jet = if j < i {
                    entry_jets[j * d + i].clone()
                } else {
                    eval_jet2(metric.entry(i, j), p)?
                };
                entry_jets.push(jet);
            }
        }
        let g = DMatrix::from_fn(d, d, |i, j| entry_jets[i * d + j].value());
        let ginv = invert_spd(&g)?;
        // Small fixed loops over row-major copies beat general matrix products here.
        let gi: Vec<f64> = (0..d * d).map(|a| ginv[(a / d, a % d)]).collect();
        let mut dg = vec![0.0; d * d * d];
        let mut ddg = vec![0.0; d * d * d * d];
        for (e, jet) in entry_jets.iter().enumerate() {
            dg[e * d..(e + 1) * d].copy_from_slice(jet.grad());
            for m in 0..d {
                for n in 0..d {
                    ddg[(e * d + m) * d + n] = jet.hess(m, n);
                }
            }
        }
        let dg_at = |i: usize, j: usize, m: usize| dg[(i * d + j) * d + m];
        let ddg_at = |i: usize, j: usize, m: usize, n: usize| ddg[((i * d + j) * d + m) * d + n];

        // ∂_m g^kl = −g^ka ∂_m g_ab g^bl
        let mut dgi = vec![0.0; d * d * d];
        let mut tmp = vec![0.0; d * d];
        for m in 0..d {
            for a in 0..d {
                for l in 0..d {
                    tmp[a * d + l] = (0..d).map(|b| dg_at(a, b, m) * gi[b * d + l]).sum();
                }
            }
            for k in 0..d {
                for l in 0..d {
                    dgi[(m * d + k) * d + l] = -(0..d).map(|a| gi[k * d + a] * tmp[a * d + l]).sum::<f64>();
                }
            }
        }
        let dginv: Vec<DMatrix<f64>> =
            (0..d).map(|m| DMatrix::from_row_slice(d, d, &dgi[m * d * d..(m + 1) * d * d])).collect();

        // first kind: A_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let idx3 = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
        let mut first = vec![0.0; d * d * d];
        for l in 0..d {
            for i in 0..d {
                for j in i..d {
                    first[idx3(l, i, j)] = 0.5 * (dg_at(j, l, i) + dg_at(i, l, j) - dg_at(i, j, l));
                }
            }
        }
        let mut gamma = vec![0.0; d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in i..d {
                    let v: f64 = (0..d).map(|l| gi[k * d + l] * first[idx3(l, i, j)]).sum();
                    gamma[idx3(k, i, j)] = v;
                    gamma[idx3(k, j, i)] = v;
                }
            }
        }
        // ∂_m Γ^k_ij = ∂_m g^kl A_lij + g^kl ∂_m A_lij
        let mut dgamma = vec![0.0; d * d * d * d];
        let mut d_first = vec![0.0; d * d * d];
        let mut active = Vec::with_capacity(d);
        for m in 0..d {
            for l in 0..d {
                for i in 0..d {
                    for j in i..d {
                        d_first[idx3(l, i, j)] = 0.5 * (ddg_at(j, l, i, m) + ddg_at(i, l, j, m) - ddg_at(i, j, l, m));
                    }
                }
            }
            let dgi_m = &dgi[m * d * d..(m + 1) * d * d];
            for k in 0..d {
                // exact zeros contribute nothing; skipping them keeps sparse metrics cheap
                active.clear();
                active.extend((0..d).filter(|&l| dgi_m[k * d + l] != 0.0 || gi[k * d + l] != 0.0));
                for i in 0..d {
                    for j in i..d {
                        let mut v = 0.0;
                        for &l in &active {
                            v += dgi_m[k * d + l] * first[idx3(l, i, j)] + gi[k * d + l] * d_first[idx3(l, i, j)];
                        }
                        dgamma[idx3(m, k, i) * d + j] = v;
                        dgamma[idx3(m, k, j) * d + i] = v;
                    }
                }
            }
        }
        Ok(LocalGeometry { point: p.to_vec(), dim: d, entry_jets, g, ginv, dginv, gamma, dgamma })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse_metric(&self) -> &DMatrix<f64> {
        &self.ginv
    }

    pub fn metric_tensor(&self) -> Tensor2At {
        Tensor2At::new(self.point.clone(), self.g.clone())
    }

    /// `∂_m g_ij`
    pub fn metric_derivative(&self, i: usize, j: usize, m: usize) -> f64 {
        self.entry_jets[i * self.dim + j].grad()[m]
    }

    /// `∂_m g^{ij}`
    pub fn inverse_metric_derivative(&self, i: usize, j: usize, m: usize) -> f64 {
        self.dginv[m][(i, j)]
    }

    /// `Γ^k_ij`
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.gamma[(k * d + i) * d + j]
    }

    /// `∂_m Γ^k_ij`
    pub fn dgamma(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.dgamma[((m * d + k) * d + i) * d + j]
    }

    pub fn christoffel(&self) -> Christoffel {
        Christoffel { dim: self.dim, data: self.gamma.clone() }
    }

    fn riemann_component(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let mut v = self.dgamma(i, l, j, k) - self.dgamma(j, l, i, k);
        for s in 0..self.dim {
            v += self.gamma(l, i, s) * self.gamma(s, j, k) - self.gamma(l, j, s) * self.gamma(s, i, k);
        }
        v
    }

    pub fn riemann(&self) -> Riemann {
        let d = self.dim;
        let mut data = vec![0.0; d * d * d * d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        data[((l * d + i) * d + j) * d + k] = self.riemann_component(l, i, j, k);
                    }
                }
            }
        }
        Riemann { dim: d, data }
    }

    pub fn ricci(&self) -> Tensor2At {
        Tensor2At::symmetric_from(self.point.clone(), |j, k| {
            (0..self.dim).map(|i| self.riemann_component(i, i, j, k)).sum()
        })
    }

    /// `g^ij T_ij`
    pub fn trace(&self, t: &Tensor2At) -> f64 {
        self.ginv.component_mul(&t.components).sum()
    }

    /// `g^ia g^jb S_ij T_ab`
    pub fn inner(&self, s: &Tensor2At, t: &Tensor2At) -> f64 {
        let raised = &self.ginv * &s.components * &self.ginv;
        raised.component_mul(&t.components).sum()
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.trace(&self.ricci())
    }

    /// `∇²f` from the jet of `f`.
    pub fn hessian(&self, f: &Jet2) -> Tensor2At {
        let df = f.grad();
        Tensor2At::symmetric_from(self.point.clone(), |i, j| {
            f.hess(i, j) - (0..self.dim).map(|k| self.gamma(k, i, j) * df[k]).sum::<f64>()
        })
    }

    pub fn laplacian(&self, f: &Jet2) -> f64 {
        self.trace(&self.hessian(f))
    }

    /// `|df|²`
    pub fn grad_norm_sq(&self, f: &Jet2) -> f64 {
        let df = nalgebra::DVector::from_column_slice(f.grad());
        (df.transpose() * &self.ginv * &df)[(0, 0)]
    }

    pub fn vector(&self, field: &VectorField) -> Result<LocalVector> {
        let d = self.dim;
        match field {
            VectorField::Components(c) => {
                if c.len() != d {
                    return Err(GeometryError::DimensionMismatch { expected: d, got: c.len() });
                }
                let jets = c.iter().map(|e| eval_jet2(e, &self.point)).collect::<Result<Vec<_>, _>>()?;
                Ok(LocalVector {
                    value: jets.iter().map(Jet2::value).collect(),
                    jacobian: DMatrix::from_fn(d, d, |k, i| jets[k].grad()[i]),
                })
            }
            VectorField::Gradient(f) => {
                let jf = eval_jet2(f, &self.point)?;
                let df = jf.grad();
                let value = (0..d).map(|k| (0..d).map(|l| self.ginv[(k, l)] * df[l]).sum()).collect();
                let jacobian = DMatrix::from_fn(d, d, |k, i| {
                    (0..d)
                        .map(|l| self.dginv[i][(k, l)] * df[l] + self.ginv[(k, l)] * jf.hess(i, l))
                        .sum()
                });
                Ok(LocalVector { value, jacobian })
            }
        }
    }

    /// `X♭_i = g_ij X^j`
    pub fn lower(&self, x: &LocalVector) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.g[(i, j)] * x.value[j]).sum()).collect()
    }

    /// `(L_X g)_ij = X^k ∂_k g_ij + g_kj ∂_i X^k + g_ik ∂_j X^k`
    pub fn lie_derivative(&self, x: &LocalVector) -> Tensor2At {
        let d = self.dim;
        Tensor2At::symmetric_from(self.point.clone(), |i, j| {
            (0..d)
                .map(|k| {
                    x.value[k] * self.metric_derivative(i, j, k)
                        + self.g[(k, j)] * x.jacobian[(k, i)]
                        + self.g[(i, k)] * x.jacobian[(k, j)]
                })
                .sum()
        })
    }

    /// `(∇_X Y)^k = X^i (∂_i Y^k + Γ^k_ij Y^j)`
    pub fn covariant_derivative(&self, x: &LocalVector, y: &LocalVector) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| {
                (0..d)
                    .map(|i| {
                        let conn: f64 = (0..d).map(|j| self.gamma(k, i, j) * y.value[j]).sum();
                        x.value[i] * (y.jacobian[(k, i)] + conn)
                    })
                    .sum()
            })
            .collect()
    }

    /// Matrix whose columns are the frame vectors at this point.
    pub fn frame_matrix(&self, frame: &[VectorField]) -> Result<DMatrix<f64>> {
        let d = self.dim;
        if frame.len() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, got: frame.len() });
        }
        let mut m = DMatrix::zeros(d, d);
        for (a, field) in frame.iter().enumerate() {
            let v = self.vector(field)?;
            for k in 0..d {
                m[(k, a)] = v.value[k];
            }
        }
        let scale: f64 = m.column_iter().map(|c| c.norm()).product();
        if !(m.determinant().abs() > 1e-12 * scale) {
            return Err(GeometryError::DegenerateFrame);
        }
        Ok(m)
    }

    pub fn frame_components(&self, t: &Tensor2At, frame: &[VectorField]) -> Result<DMatrix<f64>> {
        Ok(t.in_frame(&self.frame_matrix(frame)?))
    }
}

/// Lie bracket `[X,Y]^b = X^a ∂_a Y^b − Y^a ∂_a X^b` of evaluated fields.
pub fn bracket(x: &LocalVector, y: &LocalVector) -> Vec<f64> {
    let d = x.value.len();
    (0..d)
        .map(|b| (0..d).map(|a| x.value[a] * y.jacobian[(b, a)] - y.value[a] * x.jacobian[(b, a)]).sum())
        .collect()
}

/// A candidate quasi-Einstein structure `(g, f, m, λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QEStructure {
    pub metric: MetricField,
    pub potential: Expr,
    pub m: SyntheticDim,
    pub lambda: f64,
}

impl QEStructure {
    pub fn new(metric: MetricField, potential: Expr, m: SyntheticDim, lambda: f64) -> Result<QEStructure> {
        check_coords(&potential, metric.dim())?;
        if let SyntheticDim::Finite(v) = m {
            SyntheticDim::finite(v)?;
        }
        Ok(QEStructure { metric, potential, m, lambda })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Bakry-Emery tensor using an already evaluated geometry.
    pub fn bakry_emery_local(&self, geo: &LocalGeometry) -> Result<Tensor2At> {
        let jf = eval_jet2(&self.potential, geo.point())?;
        Ok(bakry_emery_from_jet(geo, &jf, self.m))
    }

    pub fn residual_local(&self, geo: &LocalGeometry) -> Result<Tensor2At> {
        Ok(self.bakry_emery_local(geo)?.sub(&geo.metric_tensor().scale(self.lambda)))
    }
}

/// `Ric + ∇²f − (1/m) df⊗df`, the last term dropped when `m = ∞`.
pub fn bakry_emery_from_jet(geo: &LocalGeometry, f: &Jet2, m: SyntheticDim) -> Tensor2At {
    let ric = geo.ricci();
    let hess = geo.hessian(f);
    let inv_m = m.inverse();
    let df = f.grad();
    Tensor2At::symmetric_from(geo.point().to_vec(), |i, j| {
        let base = ric.get(i, j) + hess.get(i, j);
        if m.is_infinite() {
            base
        } else {
            base - inv_m * df[i] * df[j]
        }
    })
}

pub fn christoffel(g: &MetricField, p: &[f64]) -> Result<Christoffel> {
    Ok(g.at(p)?.christoffel())
}

pub fn riemann(g: &MetricField, p: &[f64]) -> Result<Riemann> {
    Ok(g.at(p)?.riemann())
}

pub fn ricci(g: &MetricField, p: &[f64]) -> Result<Tensor2At> {
    Ok(g.at(p)?.ricci())
}

pub fn scalar_curvature(g: &MetricField, p: &[f64]) -> Result<f64> {
    Ok(g.at(p)?.scalar_curvature())
}

pub fn hessian_scalar(g: &MetricField, f: &Expr, p: &[f64]) -> Result<Tensor2At> {
    check_coords(f, g.dim())?;
    let geo = g.at(p)?;
    Ok(geo.hessian(&eval_jet2(f, p)?))
}

pub fn lie_derivative_metric(g: &MetricField, x: &VectorField, p: &[f64]) -> Result<Tensor2At> {
    let geo = g.at(p)?;
    Ok(geo.lie_derivative(&geo.vector(x)?))
}

pub fn lower_index(g: &MetricField, x: &VectorField, p: &[f64]) -> Result<Vec<f64>> {
    let geo = g.at(p)?;
    Ok(geo.lower(&geo.vector(x)?))
}

pub fn bakry_emery(s: &QEStructure, p: &[f64]) -> Result<Tensor2At> {
    s.bakry_emery_local(&s.metric.at(p)?)
}

/// `Ric + ½ L_X g − (1/m) X♭⊗X♭`.
pub fn bakry_emery_x(g: &MetricField, x: &VectorField, m: SyntheticDim, p: &[f64]) -> Result<Tensor2At> {
    let geo = g.at(p)?;
    let xv = geo.vector(x)?;
    let ric = geo.ricci();
    let lie = geo.lie_derivative(&xv);
    let flat = geo.lower(&xv);
    let inv_m = m.inverse();
    Ok(Tensor2At::symmetric_from(p.to_vec(), |i, j| {
        ric.get(i, j) + 0.5 * lie.get(i, j) - inv_m * flat[i] * flat[j]
    }))
}

/// `Ric^m_f − λ g`; zero exactly when the structure is quasi-Einstein at `p`.
pub fn qe_residual(s: &QEStructure, p: &[f64]) -> Result<Tensor2At> {
    s.residual_local(&s.metric.at(p)?)
}

pub fn frame_components(
    g: &MetricField,
    t: &Tensor2At,
    frame: &[VectorField],
) -> Result<DMatrix<f64>> {
    g.at(&t.point)?.frame_components(t, frame)
}
