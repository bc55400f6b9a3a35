//! The `sweep-ode` verb: branch table over a grid of `(m, λ, h0)`.

use std::io::Write;

use rayon::prelude::*;

use crate::reduction_ode::{classify_branch, closed_form, integrate, BranchTag, OdeError, OdeParams};

/// Closed-form magnitude above which trajectory points are left out of the
/// deviation statistic; fixed-step integration loses accuracy near a pole.
pub const DEVIATION_CAP: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub m: Vec<f64>,
    pub lambda: Vec<f64>,
    pub h0: Vec<f64>,
    pub t_range: (f64, f64),
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m: f64,
    pub lambda: f64,
    pub h0: f64,
    pub branch: &'static str,
    /// `a` for tanh, `c` for the blowing-up families
    pub parameter: Option<f64>,
    pub admissible: bool,
    pub blow_up_forward: Option<f64>,
    pub blow_up_backward: Option<f64>,
    /// max `|numeric − closed| / max(1, |closed|)` where `|closed| ≤ DEVIATION_CAP`
    pub max_deviation: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.m.is_empty() || self.lambda.is_empty() || self.h0.is_empty() {
            return Err("m, lambda and h0 lists must be nonempty".into());
        }
        let (t0, t1) = self.t_range;
        if !(t0.is_finite() && t1.is_finite() && t0 <= 0.0 && 0.0 <= t1 && t0 < t1) {
            return Err(format!("t-range must be finite and contain 0, got [{t0}, {t1}]"));
        }
        if self.steps == 0 {
            return Err("steps must be positive".into());
        }
        for &m in &self.m {
            OdeParams::new(m, 0.0).map_err(|e| e.to_string())?;
        }
        if let Some(bad) = self.lambda.iter().chain(&self.h0).find(|v| !v.is_finite()) {
            return Err(format!("non-finite value {bad}"));
        }
        Ok(())
    }
}

fn deviation(params: &OdeParams, h0: f64, t_end: f64, steps: usize) -> Result<(f64, Option<f64>), OdeError> {
    let branch = classify_branch(params, h0);
    if t_end == 0.0 {
        return Ok((0.0, None));
    }
    let traj = integrate(params, h0, 0.0, t_end, steps)?;
    let mut worst = 0.0f64;
    for (t, h) in traj.times.iter().zip(&traj.values) {
        if let Ok(exact) = closed_form(&branch, *t) {
            if exact.abs() <= DEVIATION_CAP {
                worst = worst.max((h - exact).abs() / exact.abs().max(1.0));
            }
        }
    }
    Ok((worst, traj.blow_up))
}

pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, String> {
    config.validate()?;
    let combos: Vec<(f64, f64, f64)> = config
        .m
        .iter()
        .flat_map(|&m| config.lambda.iter().flat_map(move |&l| config.h0.iter().map(move |&h| (m, l, h))))
        .collect();
    combos
        .par_iter()
        .map(|&(m, lambda, h0)| {
            let params = OdeParams::new(m, lambda).map_err(|e| e.to_string())?;
            let branch = classify_branch(&params, h0);
            let (fwd_dev, forward) =
                deviation(&params, h0, config.t_range.1, config.steps).map_err(|e| e.to_string())?;
            let (bwd_dev, backward) =
                deviation(&params, h0, config.t_range.0, config.steps).map_err(|e| e.to_string())?;
            Ok(SweepRow {
                m,
                lambda,
                h0,
                branch: branch.tag.name(),
                parameter: match branch.tag {
                    BranchTag::Tanh { a } => Some(a),
                    BranchTag::Coth { c } | BranchTag::Tan { c } | BranchTag::Rational { c } => Some(c),
                    _ => None,
                },
                admissible: branch.admissible,
                blow_up_forward: forward,
                blow_up_backward: backward,
                max_deviation: fwd_dev.max(bwd_dev),
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

pub fn write_rows(out: impl Write, rows: &[SweepRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "m",
        "lambda",
        "h0",
        "branch",
        "parameter",
        "admissible",
        "blow_up_forward",
        "blow_up_backward",
        "max_deviation",
    ])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.lambda.to_string(),
            r.h0.to_string(),
            r.branch.to_string(),
            r.parameter.map_or_else(String::new, |v| v.to_string()),
            r.admissible.to_string(),
            opt(r.blow_up_forward),
            opt(r.blow_up_backward),
            r.max_deviation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lambda: Vec<f64>, h0: Vec<f64>) -> SweepConfig {
        SweepConfig { m: vec![1.0], lambda, h0, t_range: (-3.0, 3.0), steps: 10_000 }
    }

    #[test]
    fn tanh_rows_have_no_blow_up() {
        let h0: Vec<f64> = (-9..=9).map(|i| i as f64 / 10.0).collect();
        for row in sweep(&config(vec![-1.0], h0)).unwrap() {
            assert_eq!(row.branch, "tanh");
            assert!(row.admissible);
            assert_eq!((row.blow_up_forward, row.blow_up_backward), (None, None));
            assert!(row.max_deviation < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn equilibria_and_tan_rows() {
        let rows = sweep(&config(vec![-1.0], vec![-1.0, 1.0])).unwrap();
        assert_eq!(rows[0].branch, "constant-minus");
        assert_eq!(rows[1].branch, "constant-plus");
        assert_eq!(rows[1].max_deviation, 0.0);
        for row in sweep(&config(vec![1.0], vec![-0.5, 0.0, 2.0])).unwrap() {
            assert_eq!(row.branch, "tan");
            assert!(row.blow_up_forward.is_some() && row.blow_up_backward.is_some());
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(sweep(&config(vec![], vec![0.0])).is_err());
        let mut c = config(vec![-1.0], vec![0.0]);
        c.t_range = (1.0, 2.0);
        assert!(sweep(&c).is_err());
        c.t_range = (-1.0, 1.0);
        c.m = vec![0.0];
        assert!(sweep(&c).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = sweep(&config(vec![-1.0], vec![0.0])).unwrap();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("m,lambda,h0,branch"));
        assert!(lines.next().unwrap().starts_with("1,-1,0,tanh,0,true,none,none,"));
    }
}
