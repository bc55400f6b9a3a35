//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;

use common::{fd_check, random_expr, FdCheck, random_points, random_smooth_potential, variance};
use qeinstein::cli::main_with_args;
use qeinstein::cli::report::{Report, Status};
use qeinstein::expr::Expr;
use qeinstein::geometry::{hessian_scalar, SyntheticDim};
use qeinstein::model_hnr::{
    bracket_check, classify, connection_check, example_potential, frame_residual, hnr_frame, hnr_metric,
    lambda_from_item1, pde_residuals, ExampleKind, ExamplePotential, GridSpec, PdeResiduals, ProofStep, VerdictTag,
    CLASSIFY_TOL,
};
use qeinstein::reduction_ode::{classify_branch, closed_form, integrate, probe_blow_up, BranchTag, OdeParams};
use qeinstein::warped::{adjoint_lg_star, mu_fiber, static_residual, warped_einstein_residual, FiberSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const NS: [usize; 3] = [2, 3, 5];
const MS: [f64; 3] = [1.0, 2.0, 7.0];
const AS: [f64; 3] = [0.0, 0.7, -1.3];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Largest value of `f` over `points`, failing on the first error.
fn max_over<F>(points: &[Vec<f64>], f: F) -> Result<f64, String>
where
    F: Fn(&[f64]) -> Result<f64, String> + Sync,
{
    points
        .par_iter()
        .map(|p| f(p).map_err(|e| format!("at {p:?}: {e}")))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn examples(n: usize, m: f64) -> Vec<ExamplePotential> {
    let mut v = vec![ExamplePotential::linear(n, m, 1.0), ExamplePotential::linear(n, m, -1.0)];
    v.extend(AS.iter().map(|&a| ExamplePotential::log_cosh(n, m, a)));
    v
}

fn default_grid(n: usize) -> Vec<Vec<f64>> {
    GridSpec::default().points(n)
}

fn frame_ricci() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=5 {
        let g = hnr_metric(n).map_err(|e| e.to_string())?;
        let frame = hnr_frame(n).map_err(|e| e.to_string())?;
        let err = max_over(&random_points(n, 200, 100 + n as u64), |p| {
            let geo = g.at(p).map_err(|e| e.to_string())?;
            let ric = geo.frame_components(&geo.ricci(), &frame).map_err(|e| e.to_string())?;
            let mut e = 0.0f64;
            for a in 0..=n {
                for b in 0..=n {
                    let expected = if a == b && a < n { -((n - 1) as f64) } else { 0.0 };
                    e = e.max((ric[(a, b)] - expected).abs());
                }
            }
            Ok(e)
        })?;
        ensure(err < 1e-9, || format!("n = {n}: max error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max error {worst:.2e} over n = 2..5, 200 points each"))
}

fn structure_tables() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for n in 2..=4 {
        let points = random_points(n, 100, 200 + n as u64);
        let b = max_over(&points, |p| bracket_check(n, p).map_err(|e| e.to_string()))?;
        let c = max_over(&points, |p| connection_check(n, p).map_err(|e| e.to_string()))?;
        ensure(b < 1e-10 && c < 1e-10, || format!("n = {n}: brackets {b:e}, connection {c:e}"))?;
        worst = (worst.0.max(b), worst.1.max(c));
    }
    Ok(format!("brackets {:.2e}, connection {:.2e}", worst.0, worst.1))
}

fn example_residual(spec: &ExamplePotential, points: &[Vec<f64>]) -> Result<f64, String> {
    let f = example_potential(spec).map_err(|e| e.to_string())?;
    let m = SyntheticDim::Finite(spec.m);
    max_over(points, |p| {
        let r = frame_residual(spec.n, &f, m, spec.lambda(), p).map_err(|e| e.to_string())?;
        Ok(r.amax())
    })
}

fn example1() -> Outcome {
    let (mut res, mut hess) = (0.0f64, 0.0f64);
    for n in NS {
        let points = default_grid(n);
        let g = hnr_metric(n).map_err(|e| e.to_string())?;
        for m in MS {
            for sign in [1.0, -1.0] {
                let spec = ExamplePotential::linear(n, m, sign);
                let r = example_residual(&spec, &points)?;
                let f = example_potential(&spec).map_err(|e| e.to_string())?;
                let h = max_over(&points, |p| Ok(hessian_scalar(&g, &f, p).map_err(|e| e.to_string())?.max_abs()))?;
                ensure(r < 1e-9, || format!("n = {n}, m = {m}, sign {sign}: residual {r:e}"))?;
                ensure(h < 1e-10, || format!("n = {n}, m = {m}, sign {sign}: Hessian {h:e}"))?;
                res = res.max(r);
                hess = hess.max(h);
            }
        }
    }
    Ok(format!("frame residual {res:.2e}, Hessian {hess:.2e}"))
}

fn example2() -> Outcome {
    let mut worst = 0.0f64;
    for n in NS {
        let points = default_grid(n);
        for m in MS {
            for a in AS {
                let r = example_residual(&ExamplePotential::log_cosh(n, m, a), &points)?;
                ensure(r < 1e-9, || format!("n = {n}, m = {m}, a = {a}: residual {r:e}"))?;
                worst = worst.max(r);
            }
        }
    }
    Ok(format!("frame residual {worst:.2e}"))
}

fn pde_system() -> Outcome {
    let mut items = 0.0f64;
    for n in NS {
        let points = default_grid(n);
        for m in MS {
            for spec in examples(n, m) {
                let f = example_potential(&spec).map_err(|e| e.to_string())?;
                let r = max_over(&points, |p| {
                    Ok(pde_residuals(n, &f, SyntheticDim::Finite(m), spec.lambda(), p)
                        .map_err(|e| e.to_string())?
                        .max_abs())
                })?;
                ensure(r < 1e-9, || format!("{spec:?}: six-item residual {r:e}"))?;
                items = items.max(r);
            }
        }
    }
    let mut dictionary = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1c7);
    for trial in 0..20 {
        let n = 2 + trial % 4;
        let f = random_smooth_potential(&mut rng, n);
        let m = SyntheticDim::Finite(rng.gen_range(0.5..6.0));
        let lambda = rng.gen_range(-4.0..1.0);
        let d = max_over(&random_points(n, 25, 300 + trial as u64), |p| {
            let items = pde_residuals(n, &f, m, lambda, p).map_err(|e| e.to_string())?;
            let frame = frame_residual(n, &f, m, lambda, p).map_err(|e| e.to_string())?;
            Ok(items.max_difference(&PdeResiduals::from_frame_residual(&frame, n, p[n - 1])))
        })?;
        ensure(d < 1e-9, || format!("random potential {trial}: dictionary mismatch {d:e}"))?;
        dictionary = dictionary.max(d);
    }
    Ok(format!("six items {items:.2e}; dictionary {dictionary:.2e} over 20 random potentials"))
}

fn lambda_forcing() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for n in NS {
        let points = random_points(n, 100, 400 + n as u64);
        for m in MS {
            for spec in examples(n, m) {
                let f = example_potential(&spec).map_err(|e| e.to_string())?;
                for i in 0..n {
                    let values = points
                        .iter()
                        .map(|p| lambda_from_item1(n, &f, SyntheticDim::Finite(m), p, i).map_err(|e| e.to_string()))
                        .collect::<Result<Vec<f64>, String>>()?;
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    let bias = (mean + (n - 1) as f64).abs();
                    let var = variance(&values);
                    ensure(bias < 1e-9 && var < 1e-18, || format!("{spec:?}, i = {i}: mean {mean}, variance {var:e}"))?;
                    worst = (worst.0.max(bias), worst.1.max(var));
                }
            }
        }
    }
    Ok(format!("|mean + (n-1)| {:.2e}, variance {:.2e}", worst.0, worst.1))
}

fn ode_branches() -> Outcome {
    let mut tanh_err = 0.0f64;
    for (m, lambda) in [(1.0, -1.0), (2.0, -3.0), (7.0, -4.0), (3.0, -0.5)] {
        let params = OdeParams::new(m, lambda).map_err(|e| e.to_string())?;
        let k = (-m * lambda).sqrt();
        for frac in [-0.9, -0.3, 0.0, 0.5] {
            let branch = classify_branch(&params, frac * k);
            ensure(matches!(branch.tag, BranchTag::Tanh { .. }) && branch.admissible, || {
                format!("h0 = {} gave {:?}", frac * k, branch.tag)
            })?;
            let start = closed_form(&branch, -3.0).map_err(|e| e.to_string())?;
            let traj = integrate(&params, start, -3.0, 3.0, 10_000).map_err(|e| e.to_string())?;
            ensure(traj.blow_up.is_none(), || "tanh branch flagged as blowing up".into())?;
            for (t, h) in traj.times.iter().zip(&traj.values) {
                let exact = closed_form(&branch, *t).map_err(|e| e.to_string())?;
                tanh_err = tanh_err.max((h - exact).abs());
            }
        }
        for h0 in [k, -k] {
            let probe = probe_blow_up(&params, h0, 10.0, 100_000).map_err(|e| e.to_string())?;
            ensure(classify_branch(&params, h0).admissible && !probe.any(), || format!("constant {h0} rejected"))?;
        }
    }
    ensure(tanh_err < 1e-6, || format!("RK vs tanh {tanh_err:e}"))?;

    let mut blowups = 0;
    let mut timing = 0.0f64;
    let cases: [(f64, f64, f64, &str); 9] = [
        (1.0, -1.0, 1.5, "coth"),
        (1.0, -1.0, -2.0, "coth"),
        (2.0, -3.0, 5.0, "coth"),
        (1.0, 0.0, 1.0, "rational"),
        (3.0, 0.0, -0.7, "rational"),
        (1.0, 1.0, 0.0, "tan"),
        (1.0, 1.0, -2.0, "tan"),
        (2.0, 0.5, 3.0, "tan"),
        (7.0, 4.0, 0.1, "tan"),
    ];
    for (m, lambda, h0, expected) in cases {
        let params = OdeParams::new(m, lambda).map_err(|e| e.to_string())?;
        let branch = classify_branch(&params, h0);
        ensure(branch.tag.name() == expected && !branch.admissible, || {
            format!("m = {m}, lambda = {lambda}, h0 = {h0}: {:?}", branch.tag)
        })?;
        let probe = probe_blow_up(&params, h0, 10.0, 100_000).map_err(|e| e.to_string())?;
        let analytic = branch.blow_up_time().ok_or("no finite endpoint")?;
        let found = if analytic > 0.0 { probe.forward } else { probe.backward };
        let found = found.ok_or_else(|| format!("{expected} start h0 = {h0} did not blow up"))?;
        timing = timing.max((found - analytic).abs());
        blowups += 1;
    }
    ensure(timing < 1e-3, || format!("blow-up times off by {timing:e}"))?;
    Ok(format!("RK vs tanh {tanh_err:.2e}; {blowups} non-tanh starts blow up (timing error {timing:.1e})"))
}

fn classifier() -> Outcome {
    let mut a_err = 0.0f64;
    let mut cases = 0;
    for n in NS {
        let grid = default_grid(n);
        for m in MS {
            let md = SyntheticDim::Finite(m);
            for spec in examples(n, m) {
                let f = example_potential(&spec).map_err(|e| e.to_string())?;
                let v = classify(n, &f, md, spec.lambda(), &grid, CLASSIFY_TOL).map_err(|e| e.to_string())?;
                match (spec.kind, &v.tag) {
                    (ExampleKind::Linear { sign }, VerdictTag::Example1Plus) if sign > 0.0 => {}
                    (ExampleKind::Linear { sign }, VerdictTag::Example1Minus) if sign < 0.0 => {}
                    (ExampleKind::LogCosh { a }, VerdictTag::Example2 { a: found }) => {
                        a_err = a_err.max((a - found).abs());
                    }
                    _ => return Err(format!("{spec:?} classified as {}", v.tag.label())),
                }
                cases += 1;
                for eps in [1e-2, 1e-1] {
                    let perturbed = f.clone() + Expr::constant(eps) * Expr::coord(0);
                    let v = classify(n, &perturbed, md, spec.lambda(), &grid, CLASSIFY_TOL).map_err(|e| e.to_string())?;
                    ensure(v.failed_step() == Some(ProofStep::SpatialGradient), || {
                        format!("{spec:?} + {eps} x_1 classified as {}", v.tag.label())
                    })?;
                    let bound = eps * ((n - 1) as f64 * m).sqrt() / (2.0 * m);
                    ensure(v.max_pde_residual >= bound, || {
                        format!("{spec:?} + {eps} x_1: max PDE residual {} < {bound}", v.max_pde_residual)
                    })?;
                    cases += 1;
                }
            }
        }
    }
    ensure(a_err < 1e-8, || format!("a recovered with error {a_err:e}"))?;
    Ok(format!("{cases} cases; a recovered within {a_err:.2e}"))
}

fn static_bridge() -> Outcome {
    let (mut stat, mut adj) = (0.0f64, 0.0f64);
    for n in 2..=4 {
        let g = hnr_metric(n).map_err(|e| e.to_string())?;
        let frame = hnr_frame(n).map_err(|e| e.to_string())?;
        let points = default_grid(n);
        for spec in examples(n, 1.0) {
            let f = example_potential(&spec).map_err(|e| e.to_string())?;
            let u = (-f.clone()).exp();
            let s = max_over(&points, |p| Ok(static_residual(&g, &f, spec.lambda(), p).map_err(|e| e.to_string())?.abs()))?;
            let l = max_over(&points, |p| {
                let t = adjoint_lg_star(&g, &u, p).map_err(|e| e.to_string())?;
                let geo = g.at(p).map_err(|e| e.to_string())?;
                Ok(geo.frame_components(&t, &frame).map_err(|e| e.to_string())?.amax())
            })?;
            ensure(s < 1e-10 && l < 1e-9, || format!("{spec:?}: static {s:e}, L* {l:e}"))?;
            stat = stat.max(s);
            adj = adj.max(l);
        }
    }
    Ok(format!("static residual {stat:.2e}, L* frame components {adj:.2e}"))
}

fn mu_extraction() -> Outcome {
    let (mut e1, mut e2, mut var) = (0.0f64, 0.0f64, 0.0f64);
    for n in NS {
        let points = default_grid(n);
        for m in MS {
            for spec in examples(n, m) {
                let s = spec.structure().map_err(|e| e.to_string())?;
                let values = points
                    .par_iter()
                    .map(|p| mu_fiber(&s, p).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<f64>, String>>()?;
                let expected = match spec.kind {
                    ExampleKind::Linear { .. } => 0.0,
                    ExampleKind::LogCosh { .. } => -(m - 1.0) * (n - 1) as f64 / m,
                };
                let err = values.iter().fold(0.0f64, |a, v| a.max((v - expected).abs()));
                let v = variance(&values);
                match spec.kind {
                    ExampleKind::Linear { .. } => {
                        ensure(err < 1e-10, || format!("{spec:?}: |mu| up to {err:e}"))?;
                        e1 = e1.max(err);
                    }
                    ExampleKind::LogCosh { .. } => {
                        ensure(err < 1e-9 && v < 1e-18, || format!("{spec:?}: error {err:e}, variance {v:e}"))?;
                        e2 = e2.max(err);
                        var = var.max(v);
                    }
                }
            }
        }
    }
    Ok(format!("example 1 |mu| {e1:.2e}; example 2 error {e2:.2e}, variance {var:.2e}"))
}

fn warped_products() -> Outcome {
    let n = 2;
    let mut worst = 0.0f64;
    let mut fibers = Vec::new();
    for k in 1..=3usize {
        let m = k as f64;
        for spec in [ExamplePotential::linear(n, m, 1.0), ExamplePotential::log_cosh(n, m, 0.7)] {
            let s = spec.structure().map_err(|e| e.to_string())?;
            ensure(spec.lambda() == -1.0, || "lambda differs from -1".into())?;
            let base = random_points(n, 50, 500 + k as u64);
            let mu = mu_fiber(&s, &base[0]).map_err(|e| e.to_string())?;
            let fiber = FiberSpec::for_mu(k, mu).ok_or_else(|| format!("no fiber for mu = {mu}"))?;
            if let (ExampleKind::LogCosh { .. }, FiberSpec::ScaledHyperbolic { r2, .. }) = (spec.kind, fiber) {
                let expected = m / (n - 1) as f64;
                ensure((r2 - expected).abs() < 1e-9, || format!("m = {m}: r^2 = {r2}, expected {expected}"))?;
            }
            fibers.push(match fiber {
                FiberSpec::Flat { .. } => format!("R^{k}"),
                FiberSpec::ScaledHyperbolic { r2, .. } => format!("H^{k}(r^2 = {r2:.3})"),
            });
            let mut rng = ChaCha8Rng::seed_from_u64(600 + k as u64);
            let points: Vec<Vec<f64>> = base
                .into_iter()
                .map(|mut p| {
                    for i in 0..k {
                        p.push(if i + 1 == k { rng.gen_range(0.5..2.0) } else { rng.gen_range(-1.0..1.0) });
                    }
                    p
                })
                .collect();
            let r = max_over(&points, |p| {
                Ok(warped_einstein_residual(&s, &fiber, p).map_err(|e| e.to_string())?.max_abs())
            })?;
            ensure(r < 1e-8, || format!("m = {m}, {spec:?}: residual {r:e}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("max |Ric - lambda g| {worst:.2e}; fibers {}", fibers.join(", ")))
}

fn autodiff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xad);
    let (mut pairs, mut attempts, mut truncated, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    while pairs < 1000 {
        attempts += 1;
        ensure(attempts < 20_000, || format!("only {pairs} usable pairs"))?;
        let dim = rng.gen_range(1..=4);
        let e = random_expr(&mut rng, dim, 4);
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        match fd_check(&e, &p) {
            FdCheck::Usable(rel) => {
                ensure(rel < 1e-5, || format!("{e:?} at {p:?}: relative error {rel:e}"))?;
                worst = worst.max(rel);
                pairs += 1;
            }
            FdCheck::Truncation(_) => truncated += 1,
            FdCheck::OutsideDomain => {}
        }
    }
    ensure(truncated * 20 < pairs, || format!("{truncated} pairs beyond the difference oracle's resolution"))?;
    Ok(format!(
        "{pairs} pairs ({attempts} drawn, {truncated} beyond difference resolution), max relative error {worst:.2e}"
    ))
}

fn run_cli(manifest: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["qeinstein".to_string(), "run".into(), "--manifest".into()];
    args.push(manifest.display().to_string());
    args.push("--out".into());
    args.push(out.display().to_string());
    args.extend(extra.iter().map(|s| s.to_string()));
    main_with_args(args)
}

fn cli_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let write = |name: &str, text: &str| -> Result<std::path::PathBuf, String> {
        let path = d.join(name);
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        Ok(path)
    };
    let good = "n = 3\nm = 2\nlambda = -2\n[potential]\nexample = 2\na = 0.7\n[grid]\npoints_per_axis = 3\nrandom_points = 40\n";
    let manifest = write("good.toml", good)?;
    let strip = |dir: &str| -> Result<String, String> {
        let text = std::fs::read_to_string(d.join(dir).join("report.toml")).map_err(|e| e.to_string())?;
        Ok(text.lines().filter(|l| !l.starts_with("timestamp")).collect::<Vec<_>>().join("\n"))
    };
    let codes = [
        run_cli(&manifest, &d.join("a"), &["--seed", "3", "--jobs", "1"]),
        run_cli(&manifest, &d.join("b"), &["--seed", "3", "--jobs", "4"]),
    ];
    ensure(codes == [0, 0], || format!("passing manifest exited with {codes:?}"))?;
    ensure(strip("a")? == strip("b")?, || "reports differ for identical manifest and seed".into())?;
    let report = Report::load(&d.join("a/report.toml"))?;
    ensure(report.checks.iter().all(|c| c.status != Status::Fail), || "a check failed".into())?;

    let failing = write("fail.toml", &good.replace("lambda = -2", "lambda = -1"))?;
    let bad_grid = write("grid.toml", &format!("{good}xn_range = [-1.0, 2.0]\n"))?;
    let unknown = write("unknown.toml", &format!("checks = [\"nope\"]\n{good}"))?;
    let matrix = [
        ("wrong lambda", run_cli(&failing, &d.join("f"), &[]), 1),
        ("missing manifest", run_cli(&d.join("absent.toml"), &d.join("m"), &[]), 2),
        ("x_n range through 0", run_cli(&bad_grid, &d.join("g"), &[]), 2),
        ("unknown check", run_cli(&unknown, &d.join("u"), &[]), 2),
        ("unknown verb", main_with_args(["qeinstein", "bogus"]), 2),
    ];
    for (what, got, want) in matrix {
        ensure(got == want, || format!("{what}: exit {got}, expected {want}"))?;
    }
    Ok("byte-identical reports across job counts; exit codes 0/1/2 as expected".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("frame Ricci", frame_ricci),
        ("brackets and connection", structure_tables),
        ("example 1 residual", example1),
        ("example 2 residual", example2),
        ("six-equation system", pde_system),
        ("lambda forcing", lambda_forcing),
        ("ODE branches", ode_branches),
        ("classifier", classifier),
        ("static bridge", static_bridge),
        ("fiber constant mu", mu_extraction),
        ("warped Einstein", warped_products),
        ("autodiff soundness", autodiff),
        ("CLI determinism and exit codes", cli_end_to_end),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
