//! TOML run manifests.
//!
//! ```toml
//! n = 2
//! m = 1.0          # or "inf"
//! lambda = -1.0
//! checks = ["all"]
//!
//! [potential]
//! example = 1      # 1 with `sign`, 2 with `a`, or `expr = "..."` instead
//! sign = "+"
//!
//! [grid]
//! points_per_axis = 5
//! random_points = 100
//! seed = 42
//! x_range = [-1.0, 1.0]
//! xn_range = [0.25, 4.0]
//! t_range = [-3.0, 3.0]
//!
//! [tolerances]
//! exact = 1e-9
//! fd = 1e-5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::expr::{parse, Expr};
use crate::geometry::SyntheticDim;
use crate::model_hnr::{example_potential, hnr_chart, ExamplePotential, GridSpec, CLASSIFY_TOL};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed manifest: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ManifestError> {
    Err(ManifestError::Invalid(msg.into()))
}

/// Every check a run can request, in execution order.
pub const CHECK_NAMES: [&str; 11] = [
    "ricci-closed",
    "connection",
    "brackets",
    "pde-system",
    "qe-residual",
    "classify",
    "ode-branches",
    "static",
    "lg-star-kernel",
    "mu-fiber",
    "warped-einstein",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MValue {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignValue {
    Number(i64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_points_per_axis")]
    pub points_per_axis: usize,
    #[serde(default = "default_random_points")]
    pub random_points: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_x_range")]
    pub x_range: [f64; 2],
    #[serde(default = "default_xn_range")]
    pub xn_range: [f64; 2],
    #[serde(default = "default_t_range")]
    pub t_range: [f64; 2],
}

fn default_points_per_axis() -> usize {
    GridSpec::default().points_per_axis
}
fn default_random_points() -> usize {
    GridSpec::default().random_points
}
fn default_seed() -> u64 {
    GridSpec::default().seed
}
fn default_x_range() -> [f64; 2] {
    GridSpec::default().x_range.into()
}
fn default_xn_range() -> [f64; 2] {
    GridSpec::default().xn_range.into()
}
fn default_t_range() -> [f64; 2] {
    GridSpec::default().t_range.into()
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points_per_axis: default_points_per_axis(),
            random_points: default_random_points(),
            seed: default_seed(),
            x_range: default_x_range(),
            xn_range: default_xn_range(),
            t_range: default_t_range(),
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            points_per_axis: self.points_per_axis,
            random_points: self.random_points,
            seed: self.seed,
            x_range: self.x_range.into(),
            xn_range: self.xn_range.into(),
            t_range: self.t_range.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// identities that hold up to rounding
    #[serde(default = "default_exact")]
    pub exact: f64,
    /// comparisons against numerical integration
    #[serde(default = "default_fd")]
    pub fd: f64,
    #[serde(default = "default_classify")]
    pub classify: f64,
    #[serde(default = "default_warped")]
    pub warped: f64,
}

fn default_exact() -> f64 {
    1e-9
}
fn default_fd() -> f64 {
    1e-5
}
fn default_classify() -> f64 {
    CLASSIFY_TOL
}
fn default_warped() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: default_exact(), fd: default_fd(), classify: default_classify(), warped: default_warped() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    pub m: MValue,
    pub lambda: f64,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
}

fn default_checks() -> Vec<String> {
    vec!["all".into()]
}

/// A validated manifest with its potential parsed.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub manifest: Manifest,
    pub m: SyntheticDim,
    pub potential: Expr,
    pub checks: Vec<&'static str>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Manifest, ManifestError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
        Manifest::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn synthetic_dim(&self) -> Result<SyntheticDim, ManifestError> {
        match &self.m {
            MValue::Number(v) => match SyntheticDim::finite(*v) {
                Ok(SyntheticDim::Finite(m)) => Ok(SyntheticDim::Finite(m)),
                _ => invalid(format!("m must be a finite positive number or \"inf\", got {v}")),
            },
            MValue::Text(s) if s.eq_ignore_ascii_case("inf") => Ok(SyntheticDim::Infinite),
            MValue::Text(s) => invalid(format!("m must be a number or \"inf\", got {s:?}")),
        }
    }

    fn sign(&self) -> Result<f64, ManifestError> {
        match &self.potential.sign {
            None => Ok(1.0),
            Some(SignValue::Number(1)) => Ok(1.0),
            Some(SignValue::Number(-1)) => Ok(-1.0),
            Some(SignValue::Text(s)) if s == "+" => Ok(1.0),
            Some(SignValue::Text(s)) if s == "-" => Ok(-1.0),
            Some(other) => invalid(format!("sign must be +1, -1, \"+\" or \"-\", got {other:?}")),
        }
    }

    fn example_m(&self, m: SyntheticDim) -> Result<f64, ManifestError> {
        match m.value() {
            Some(v) => Ok(v),
            None => invalid("example potentials need a finite m; use `expr` for m = inf"),
        }
    }

    fn potential_expr(&self, m: SyntheticDim) -> Result<Expr, ManifestError> {
        let p = &self.potential;
        let spec = match (p.example, &p.expr) {
            (Some(_), Some(_)) => return invalid("potential has both `example` and `expr`"),
            (None, None) => return invalid("potential needs `example` or `expr`"),
            (None, Some(src)) => {
                if p.sign.is_some() || p.a.is_some() {
                    return invalid("`sign` and `a` only apply to example potentials");
                }
                let chart = hnr_chart(self.n).map_err(|e| ManifestError::Invalid(e.to_string()))?;
                return parse(src, &chart).map_err(|e| ManifestError::Invalid(format!("potential: {e}")));
            }
            (Some(1), None) => {
                if p.a.is_some() {
                    return invalid("example 1 takes `sign`, not `a`");
                }
                ExamplePotential::linear(self.n, self.example_m(m)?, self.sign()?)
            }
            (Some(2), None) => {
                if p.sign.is_some() {
                    return invalid("example 2 takes `a`, not `sign`");
                }
                let a = p.a.unwrap_or(0.0);
                if !a.is_finite() {
                    return invalid("`a` must be finite");
                }
                ExamplePotential::log_cosh(self.n, self.example_m(m)?, a)
            }
            (Some(k), None) => return invalid(format!("unknown example {k}; expected 1 or 2")),
        };
        example_potential(&spec).map_err(|e| ManifestError::Invalid(e.to_string()))
    }

    pub fn resolve(self) -> Result<Resolved, ManifestError> {
        if self.n < 2 {
            return invalid(format!("n must be at least 2, got {}", self.n));
        }
        if !self.lambda.is_finite() {
            return invalid("lambda must be finite");
        }
        let m = self.synthetic_dim()?;
        self.grid.spec().validate().map_err(|e| ManifestError::Invalid(e.to_string()))?;
        let t = &self.tolerances;
        for (name, v) in [("exact", t.exact), ("fd", t.fd), ("classify", t.classify), ("warped", t.warped)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("tolerance `{name}` must be positive, got {v}"));
            }
        }
        let mut checks: Vec<&'static str> = Vec::new();
        for name in &self.checks {
            if name == "all" {
                checks.extend(CHECK_NAMES);
                continue;
            }
            match CHECK_NAMES.iter().find(|c| **c == name) {
                Some(c) => checks.push(c),
                None => return invalid(format!("unknown check `{name}`")),
            }
        }
        if checks.is_empty() {
            return invalid("no checks requested");
        }
        // keep execution order stable and drop duplicates
        checks = CHECK_NAMES.iter().copied().filter(|c| checks.contains(c)).collect();
        let potential = self.potential_expr(m)?;
        Ok(Resolved { manifest: self, m, potential, checks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
n = 2
m = 1
lambda = -1
[potential]
example = 1
sign = "+"
"#;

    #[test]
    fn defaults_fill_in() {
        let r = Manifest::from_toml(BASE).unwrap().resolve().unwrap();
        assert_eq!(r.checks.len(), CHECK_NAMES.len());
        assert_eq!(r.manifest.grid, GridConfig::default());
        assert_eq!(r.manifest.tolerances.exact, 1e-9);
        assert_eq!(r.m, SyntheticDim::Finite(1.0));
    }

    #[test]
    fn round_trip_through_toml() {
        let m = Manifest::from_toml(BASE).unwrap();
        assert_eq!(Manifest::from_toml(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn infinite_m_and_expressions() {
        let text = "n = 3\nm = \"inf\"\nlambda = -1\nchecks = [\"pde-system\", \"ricci-closed\"]\n[potential]\nexpr = \"x_n*t\"\n";
        let r = Manifest::from_toml(text).unwrap().resolve().unwrap();
        assert_eq!(r.m, SyntheticDim::Infinite);
        assert_eq!(r.checks, vec!["ricci-closed", "pde-system"]);
        assert_eq!(r.potential, Expr::coord(2) * Expr::coord(3));
    }

    #[test]
    fn validation_errors() {
        let cases = [
            BASE.replace("n = 2", "n = 1"),
            format!("{BASE}[grid]\nxn_range = [0.0, 4.0]\n"),
            BASE.replace("m = 1", "m = -2"),
            BASE.replace("m = 1", "m = \"big\""),
            BASE.replace("sign = \"+\"", "sign = 2"),
            BASE.replace("example = 1", "example = 3"),
            format!("checks = [\"nope\"]\n{BASE}"),
            BASE.replace("example = 1\nsign = \"+\"", "expr = \"x_1 +\""),
            BASE.replace("m = 1", "m = \"inf\""),
        ];
        for text in cases {
            let result = Manifest::from_toml(&text).and_then(Manifest::resolve);
            assert!(matches!(result, Err(ManifestError::Invalid(_))), "{text}");
        }
        assert!(matches!(Manifest::from_toml("n = "), Err(ManifestError::Toml(_))));
        assert!(matches!(
            Manifest::from_toml(&format!("bogus = 1\n{BASE}")),
            Err(ManifestError::Toml(_))
        ));
    }
}
