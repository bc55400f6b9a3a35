//! The `plot-data` verb: flat CSV files regenerated from a saved report.

use std::path::Path;

use super::manifest::Resolved;
use super::report::Report;
use crate::expr::{eval_jet2, Expr};
use crate::model_hnr::{classify, frame_residual, t_index, xn_index};
use crate::reduction_ode::{classify_branch, closed_form, integrate, OdeParams};

pub const PROFILE_FILE: &str = "profile_xn.csv";
pub const TRAJECTORY_FILE: &str = "ode_trajectory.csv";
pub const CLASSIFICATION_FILE: &str = "classification.csv";

/// Perturbation sizes of the `f + ε x_1` profiles; `0` is the manifest potential.
pub const PROFILE_EPSILONS: [f64; 4] = [0.0, 1e-3, 1e-2, 1e-1];
const PROFILE_SAMPLES: usize = 33;
const TRAJECTORY_STEPS: usize = 2000;

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

/// Base point: midpoints of the `x` and `t` ranges, geometric midpoint in `x_n`.
fn base_point(r: &Resolved) -> Vec<f64> {
    let g = &r.manifest.grid;
    let n = r.manifest.n;
    let mut p = vec![0.5 * (g.x_range[0] + g.x_range[1]); n + 1];
    p[xn_index(n)] = (g.xn_range[0] * g.xn_range[1]).sqrt();
    p[t_index(n)] = 0.5 * (g.t_range[0] + g.t_range[1]);
    p
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>, String> {
    csv::Writer::from_path(dir.join(name)).map_err(err)
}

fn write_profile(r: &Resolved, dir: &Path) -> Result<(), String> {
    let n = r.manifest.n;
    let g = &r.manifest.grid;
    let mut w = writer(dir, PROFILE_FILE)?;
    w.write_record(["epsilon", "x_n", "residual"]).map_err(err)?;
    let (lo, hi) = (g.xn_range[0].ln(), g.xn_range[1].ln());
    for eps in PROFILE_EPSILONS {
        let f = if eps == 0.0 { r.potential.clone() } else { r.potential.clone() + Expr::constant(eps) * Expr::coord(0) };
        for i in 0..PROFILE_SAMPLES {
            let mut p = base_point(r);
            p[xn_index(n)] = (lo + (hi - lo) * i as f64 / (PROFILE_SAMPLES - 1) as f64).exp();
            let residual = frame_residual(n, &f, r.m, r.manifest.lambda, &p).map(|m| m.amax()).unwrap_or(f64::NAN);
            w.write_record([eps.to_string(), p[xn_index(n)].to_string(), residual.to_string()]).map_err(err)?;
        }
    }
    w.flush().map_err(err)
}

fn write_trajectory(r: &Resolved, dir: &Path) -> Result<(), String> {
    let mut w = writer(dir, TRAJECTORY_FILE)?;
    w.write_record(["t", "h_numeric", "h_closed"]).map_err(err)?;
    let n = r.manifest.n;
    let g = &r.manifest.grid;
    if let Some(params) = r.m.value().and_then(|m| OdeParams::new(m, r.manifest.lambda).ok()) {
        let mut p = base_point(r);
        p[t_index(n)] = 0.0;
        let h0 = eval_jet2(&r.potential, &p).map_err(err)?.grad()[t_index(n)];
        let branch = classify_branch(&params, h0);
        let (t0, t1) = (g.t_range[0].min(0.0), g.t_range[1].max(0.0));
        let back = integrate(&params, h0, 0.0, t0, TRAJECTORY_STEPS).map_err(err)?;
        let fwd = integrate(&params, h0, 0.0, t1, TRAJECTORY_STEPS).map_err(err)?;
        let rows = back.times.iter().zip(&back.values).rev().chain(fwd.times.iter().zip(&fwd.values).skip(1));
        for (t, h) in rows {
            let exact = closed_form(&branch, *t).unwrap_or(f64::NAN);
            w.write_record([t.to_string(), h.to_string(), exact.to_string()]).map_err(err)?;
        }
    }
    w.flush().map_err(err)
}

fn write_classification(r: &Resolved, dir: &Path) -> Result<(), String> {
    let mut w = writer(dir, CLASSIFICATION_FILE)?;
    w.write_record(["step", "residual", "tolerance", "passed", "points", "verdict"]).map_err(err)?;
    let points = r.manifest.grid.spec().points(r.manifest.n);
    let tol = r.manifest.tolerances.classify;
    if let Ok(v) = classify(r.manifest.n, &r.potential, r.m, r.manifest.lambda, &points, tol) {
        let label = v.tag.label();
        for e in &v.evidence {
            w.write_record([
                e.step.name().to_string(),
                e.residual.to_string(),
                e.tolerance.to_string(),
                e.passed.to_string(),
                e.points.to_string(),
                label.clone(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(err)
}

pub fn emit_plot_data(report: &Report, dir: &Path) -> Result<(), String> {
    let resolved = report.manifest.clone().resolve().map_err(err)?;
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    write_profile(&resolved, dir)?;
    write_trajectory(&resolved, dir)?;
    write_classification(&resolved, dir)
}
