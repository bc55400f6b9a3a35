//! The `run` verb: evaluate the requested checks over the manifest grid.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::manifest::Resolved;
use super::report::{CheckResult, GridSummary, Meta, Report, Status, Summary, VerdictReport};
use crate::expr::eval_jet2;
use crate::geometry::{QEStructure, SyntheticDim};
use crate::model_hnr::{
    bracket_check, classify, connection_check, frame_residual, hnr_frame, hnr_metric, pde_residuals,
    ricci_closed, t_index, ProofStep,
};
use crate::reduction_ode::{classify_branch, closed_form, OdeParams};
use crate::warped::{adjoint_lg_star, mu_fiber, static_residual, warped_metric, warped_residual_with, FiberSpec};

pub const DISCLAIMER: &str = "verdicts are numerical evidence on a finite grid up to the stated tolerances, not proofs";

/// One `(point, check, residual)` row of the optional residual dump.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRow {
    pub point: Vec<f64>,
    pub check: &'static str,
    pub residual: f64,
}

type PointResult = Result<f64, String>;

fn per_point<F>(points: &[Vec<f64>], f: F) -> Vec<PointResult>
where
    F: Fn(&[f64]) -> PointResult + Sync,
{
    points.par_iter().map(|p| f(p)).collect()
}

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

struct Context<'a> {
    r: &'a Resolved,
    points: Vec<Vec<f64>>,
    rows: Vec<ResidualRow>,
}

impl Context<'_> {
    fn n(&self) -> usize {
        self.r.manifest.n
    }

    fn lambda(&self) -> f64 {
        self.r.manifest.lambda
    }

    fn structure(&self) -> Result<QEStructure, String> {
        let g = hnr_metric(self.n()).map_err(err)?;
        QEStructure::new(g, self.r.potential.clone(), self.r.m, self.lambda()).map_err(err)
    }

    fn record(&mut self, name: &'static str, points: &[Vec<f64>], residuals: &[PointResult]) {
        for (p, r) in points.iter().zip(residuals) {
            self.rows.push(ResidualRow {
                point: p[..=self.n()].to_vec(),
                check: name,
                residual: r.as_ref().map(|v| v.abs()).unwrap_or(f64::NAN),
            });
        }
    }

    fn pointwise<F>(&mut self, name: &'static str, tol: f64, f: F) -> CheckResult
    where
        F: Fn(&[f64]) -> PointResult + Sync,
    {
        let points = std::mem::take(&mut self.points);
        let residuals = per_point(&points, f);
        self.record(name, &points, &residuals);
        self.points = points;
        CheckResult::from_residuals(name, tol, &residuals)
    }

    fn run_check(&mut self, name: &'static str) -> CheckResult {
        let n = self.n();
        let m = self.r.m;
        let lambda = self.lambda();
        let tol = self.r.manifest.tolerances.clone();
        let f = self.r.potential.clone();
        match name {
            "ricci-closed" => self.pointwise(name, tol.exact, |p| {
                let geo = hnr_metric(n).map_err(err)?.at(p).map_err(err)?;
                let ric = geo.ricci();
                let coord = ric.sub(&ricci_closed(n, p).map_err(err)?).max_abs();
                let frame = geo.frame_components(&ric, &hnr_frame(n).map_err(err)?).map_err(err)?;
                let mut expected = DMatrix::from_element(n + 1, n + 1, 0.0);
                for i in 0..n {
                    expected[(i, i)] = -((n - 1) as f64);
                }
                Ok(coord.max((frame - expected).amax()))
            }),
            "connection" => self.pointwise(name, tol.exact, |p| connection_check(n, p).map_err(err)),
            "brackets" => self.pointwise(name, tol.exact, |p| bracket_check(n, p).map_err(err)),
            "pde-system" => self.pointwise(name, tol.exact, |p| {
                Ok(pde_residuals(n, &f, m, lambda, p).map_err(err)?.max_abs())
            }),
            "qe-residual" => self.pointwise(name, tol.exact, |p| {
                Ok(frame_residual(n, &f, m, lambda, p).map_err(err)?.amax())
            }),
            "classify" => self.classify_check(tol.classify),
            "ode-branches" => {
                let Some(mv) = m.value() else {
                    return CheckResult::skipped(name, tol.exact, "the reduction needs a finite m");
                };
                let params = match OdeParams::new(mv, lambda) {
                    Ok(p) => p,
                    Err(e) => return CheckResult::skipped(name, tol.exact, e.to_string()),
                };
                let t = t_index(n);
                self.pointwise(name, tol.exact, |p| {
                    let mut start = p.to_vec();
                    start[t] = 0.0;
                    let h0 = eval_jet2(&f, &start).map_err(err)?.grad()[t];
                    let branch = classify_branch(&params, h0);
                    if !branch.admissible {
                        return Err(format!(
                            "h(0) = {h0} starts a {} branch, which is not defined for all t",
                            branch.tag.name()
                        ));
                    }
                    let h = eval_jet2(&f, p).map_err(err)?.grad()[t];
                    Ok(h - closed_form(&branch, p[t]).map_err(err)?)
                })
            }
            "static" => {
                if m != SyntheticDim::Finite(1.0) {
                    return CheckResult::skipped(name, tol.exact, "the static equation is the m = 1 case");
                }
                let g = match hnr_metric(n) {
                    Ok(g) => g,
                    Err(e) => return CheckResult::skipped(name, tol.exact, e.to_string()),
                };
                self.pointwise(name, tol.exact, |p| static_residual(&g, &f, lambda, p).map_err(err))
            }
            "lg-star-kernel" => {
                if m != SyntheticDim::Finite(1.0) {
                    return CheckResult::skipped(name, tol.exact, "e^(-f) lies in the kernel only when m = 1");
                }
                let g = match hnr_metric(n) {
                    Ok(g) => g,
                    Err(e) => return CheckResult::skipped(name, tol.exact, e.to_string()),
                };
                let u = (-f.clone()).exp();
                self.pointwise(name, tol.exact, |p| Ok(adjoint_lg_star(&g, &u, p).map_err(err)?.max_abs()))
            }
            "mu-fiber" => self.mu_check(tol.exact),
            "warped-einstein" => self.warped_check(tol.warped),
            _ => unreachable!("unknown check {name}"),
        }
    }

    fn mu_values(&self) -> Result<Vec<PointResult>, String> {
        let s = self.structure()?;
        Ok(per_point(&self.points, |p| mu_fiber(&s, p).map_err(err)))
    }

    fn mu_check(&mut self, tol: f64) -> CheckResult {
        const NAME: &str = "mu-fiber";
        if self.r.m.is_infinite() {
            return CheckResult::skipped(NAME, tol, "mu is defined for finite m only");
        }
        let values = match self.mu_values() {
            Ok(v) => v,
            Err(e) => return CheckResult::from_residuals(NAME, tol, &[Err(e)]),
        };
        let ok: Vec<f64> = values.iter().filter_map(|v| v.as_ref().ok().copied()).collect();
        let mean = if ok.is_empty() { 0.0 } else { ok.iter().sum::<f64>() / ok.len() as f64 };
        let spread: Vec<PointResult> = values.iter().map(|v| v.clone().map(|x| x - mean)).collect();
        let points = std::mem::take(&mut self.points);
        self.record(NAME, &points, &spread);
        self.points = points;
        let mut result = CheckResult::from_residuals(NAME, tol, &spread);
        let prefix = format!("mean mu = {mean:e}; residual is the deviation from the mean");
        result.note = Some(match result.note {
            Some(n) => format!("{prefix}; {n}"),
            None => prefix,
        });
        result
    }

    fn warped_check(&mut self, tol: f64) -> CheckResult {
        const NAME: &str = "warped-einstein";
        let Some(mv) = self.r.m.value() else {
            return CheckResult::skipped(NAME, tol, "the warped product needs a finite m");
        };
        if mv.fract() != 0.0 || mv > 32.0 {
            return CheckResult::skipped(NAME, tol, "the fiber dimension m must be a small integer");
        }
        let k = mv as usize;
        let fail = |msg: String| {
            let mut r = CheckResult::from_residuals(NAME, tol, &[Err(msg)]);
            r.points = 0;
            r
        };
        let values = match self.mu_values() {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let Some(ok) = values.iter().map(|v| v.as_ref().ok().copied()).collect::<Option<Vec<f64>>>() else {
            return fail("mu failed to evaluate at some grid point".into());
        };
        let mu = ok.iter().sum::<f64>() / ok.len().max(1) as f64;
        let Some(fiber) = FiberSpec::for_mu(k, mu) else {
            return fail(format!("mu = {mu} > 0 has no fiber in this family"));
        };
        let s = match self.structure() {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let metric = match warped_metric(&s, &fiber) {
            Ok(g) => g,
            Err(e) => return fail(e.to_string()),
        };
        let spec = self.r.manifest.grid.spec();
        let mut base = spec.random(self.n());
        if base.is_empty() {
            base = spec.lattice(self.n());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xf1be4);
        let product: Vec<Vec<f64>> = base
            .into_iter()
            .map(|mut p| {
                for i in 0..k {
                    p.push(if i + 1 == k { rng.gen_range(0.5..2.0) } else { rng.gen_range(-1.0..1.0) });
                }
                p
            })
            .collect();
        let n = self.n();
        let lambda = self.lambda();
        let residuals = per_point(&product, |p| {
            let mu_here = mu_fiber(&s, &p[..=n]).map_err(err)?;
            if !((mu_here - fiber.einstein_constant()).abs() <= tol) {
                return Err(format!("mu = {mu_here} differs from the fiber constant {}", fiber.einstein_constant()));
            }
            Ok(warped_residual_with(&metric, lambda, p).map_err(err)?.max_abs())
        });
        self.record(NAME, &product, &residuals);
        let mut result = CheckResult::from_residuals(NAME, tol, &residuals);
        let fiber_text = match fiber {
            FiberSpec::Flat { k } => format!("flat fiber of dimension {k}"),
            FiberSpec::ScaledHyperbolic { k, r2 } => format!("hyperbolic fiber of dimension {k} with r^2 = {r2}"),
        };
        let prefix = format!("{fiber_text}; Einstein constant asserted to equal lambda");
        result.note = Some(match result.note {
            Some(n) => format!("{prefix}; {n}"),
            None => prefix,
        });
        result
    }

    fn classify_check(&mut self, tol: f64) -> CheckResult {
        const NAME: &str = "classify";
        if self.r.m.is_infinite() {
            return CheckResult::skipped(NAME, tol, "the classifier needs a finite m");
        }
        let verdict = match classify(self.n(), &self.r.potential, self.r.m, self.lambda(), &self.points, tol) {
            Ok(v) => v,
            Err(e) => {
                let mut r = CheckResult::from_residuals(NAME, tol, &[Err(e.to_string())]);
                r.points = self.points.len();
                r.note = Some(e.to_string());
                return r;
            }
        };
        // residual of the steps on the path actually taken
        let took_tanh = verdict.evidence.iter().any(|e| e.step == ProofStep::TanhProfile);
        let relevant: Vec<f64> = verdict
            .evidence
            .iter()
            .filter(|e| !(took_tanh && e.step == ProofStep::ConstantRate))
            .map(|e| e.residual)
            .collect();
        let max = relevant.iter().copied().fold(0.0, f64::max);
        let mean = relevant.iter().sum::<f64>() / relevant.len().max(1) as f64;
        let passed = verdict.failed_step().is_none();
        debug_assert_eq!(passed, max <= tol);
        CheckResult {
            name: NAME.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            max_residual: max,
            mean_residual: mean,
            tolerance: tol,
            points: self.points.len(),
            errors: 0,
            note: Some(format!("verdict: {}", verdict.tag.label())),
            verdict: Some(VerdictReport::from(&verdict)),
        }
    }
}

/// Runs every requested check. `timestamp` is recorded verbatim.
pub fn execute(r: &Resolved, timestamp: u64) -> (Report, Vec<ResidualRow>) {
    let spec = r.manifest.grid.spec();
    let lattice = spec.lattice(r.manifest.n);
    let random = spec.random(r.manifest.n);
    let grid = GridSummary {
        lattice_points: lattice.len(),
        random_points: random.len(),
        total_points: lattice.len() + random.len(),
    };
    let mut points = lattice;
    points.extend(random);
    let mut ctx = Context { r, points, rows: Vec::new() };
    let checks: Vec<CheckResult> = r.checks.iter().map(|name| ctx.run_check(name)).collect();
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let summary = Summary { passed: count(Status::Pass), failed: count(Status::Fail), skipped: count(Status::Skipped) };
    let report = Report {
        meta: Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.seed,
            timestamp,
            disclaimer: DISCLAIMER.into(),
        },
        grid,
        summary,
        manifest: r.manifest.clone(),
        checks,
    };
    (report, ctx.rows)
}

pub fn write_residuals(path: &Path, n: usize, rows: &[ResidualRow]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    header.extend(["t".to_string(), "check".to_string(), "residual".to_string()]);
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let mut record: Vec<String> = row.point.iter().map(|v| v.to_string()).collect();
        record.push(row.check.to_string());
        record.push(row.residual.to_string());
        w.write_record(&record).map_err(err)?;
    }
    w.flush().map_err(err)
}
