/// Value, gradient and Hessian of a scalar at a point.
///
/// The Hessian is stored as a packed upper triangle, so `hess(i, j)` and
/// `hess(j, i)` read the same slot and symmetry holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

#[inline]
fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn packed_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * d - i - 1) / 2 + j
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Jet2 {
        Jet2 { value, grad: vec![0.0; dim], hess: vec![0.0; packed_len(dim)] }
    }

    /// The jet of coordinate `index` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Jet2 {
        let mut jet = Jet2::constant(dim, value);
        jet.grad[index] = 1.0;
        jet
    }

    /// Builds a jet from explicit parts; `hess` is read from its upper triangle.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: &[Vec<f64>]) -> Jet2 {
        let d = grad.len();
        let mut packed = vec![0.0; packed_len(d)];
        for i in 0..d {
            for j in i..d {
                packed[packed_index(d, i, j)] = hess[i][j];
            }
        }
        Jet2 { value, grad, hess: packed }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[packed_index(self.dim(), i, j)]
    }

    pub fn hessian_rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.hess(i, j)).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    pub(crate) fn set_value(&mut self, value: f64) {
        self.value = value;
    }

    /// Applies a scalar function with known first and second derivatives.
    pub fn chain(&self, value: f64, d1: f64, d2: f64) -> Jet2 {
        let d = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| d1 * g).collect();
        let mut hess = vec![0.0; self.hess.len()];
        for i in 0..d {
            for j in i..d {
                let k = packed_index(d, i, j);
                hess[k] = d1 * self.hess[k] + d2 * self.grad[i] * self.grad[j];
            }
        }
        Jet2 { value, grad, hess }
    }

    pub fn scale(&self, a: f64) -> Jet2 {
        Jet2 {
            value: a * self.value,
            grad: self.grad.iter().map(|g| a * g).collect(),
            hess: self.hess.iter().map(|h| a * h).collect(),
        }
    }

    pub fn add(&self, other: &Jet2) -> Jet2 {
        self.zip(other, self.value + other.value, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet2) -> Jet2 {
        self.zip(other, self.value - other.value, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }

    pub fn mul(&self, other: &Jet2) -> Jet2 {
        let d = self.dim();
        let (a, b) = (self.value, other.value);
        let grad = (0..d).map(|i| a * other.grad[i] + b * self.grad[i]).collect();
        let mut hess = vec![0.0; self.hess.len()];
        for i in 0..d {
            for j in i..d {
                let k = packed_index(d, i, j);
                hess[k] = a * other.hess[k]
                    + b * self.hess[k]
                    + self.grad[i] * other.grad[j]
                    + other.grad[i] * self.grad[j];
            }
        }
        Jet2 { value: a * b, grad, hess }
    }

    /// Quotient; the caller guarantees a nonzero denominator.
    pub fn div(&self, other: &Jet2) -> Jet2 {
        let d = self.dim();
        let b = other.value;
        let q = self.value / b;
        let grad: Vec<f64> = (0..d).map(|i| (self.grad[i] - q * other.grad[i]) / b).collect();
        let mut hess = vec![0.0; self.hess.len()];
        for i in 0..d {
            for j in i..d {
                let k = packed_index(d, i, j);
                hess[k] = (self.hess[k]
                    - q * other.hess[k]
                    - grad[i] * other.grad[j]
                    - other.grad[i] * grad[j])
                    / b;
            }
        }
        Jet2 { value: q, grad, hess }
    }

    fn zip(&self, other: &Jet2, value: f64, op: impl Fn(f64, f64) -> f64) -> Jet2 {
        Jet2 {
            value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| op(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| op(*a, *b)).collect(),
        }
    }
}
