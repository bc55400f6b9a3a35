//! The Riccati reduction `h' = h²/m + λ` satisfied by `h = ∂f/∂t`, its
//! explicit solution families and a fixed-step integrator used as an oracle.
//!
//! Initial data is always taken at `t = 0`.

use std::f64::consts::FRAC_PI_2;

/// `|h|` above which integration stops and reports a blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("m must be finite and positive, got {0}")]
    InvalidM(f64),
    #[error("lambda must be finite, got {0}")]
    InvalidLambda(f64),
    #[error("need at least one integration step")]
    NoSteps,
    #[error("t = {t} lies outside the interval of definition ({lo}, {hi})")]
    OutsideInterval { t: f64, lo: f64, hi: f64 },
}

pub type Result<T, E = OdeError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeParams {
    pub m: f64,
    pub lambda: f64,
}

impl OdeParams {
    pub fn new(m: f64, lambda: f64) -> Result<OdeParams> {
        if !(m.is_finite() && m > 0.0) {
            return Err(OdeError::InvalidM(m));
        }
        if !lambda.is_finite() {
            return Err(OdeError::InvalidLambda(lambda));
        }
        Ok(OdeParams { m, lambda })
    }

    /// `√(−λ/m)`, defined for `λ < 0`.
    pub fn mu_rate(&self) -> Option<f64> {
        (self.lambda < 0.0).then(|| (-self.lambda / self.m).sqrt())
    }

    /// Equilibrium speed `√(−mλ)`, defined for `λ ≤ 0`.
    pub fn speed(&self) -> Option<f64> {
        (self.lambda <= 0.0).then(|| (-self.m * self.lambda).sqrt())
    }
}

pub fn ode_rhs(h: f64, params: &OdeParams) -> f64 {
    h * h / params.m + params.lambda
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchTag {
    ConstantPlus,
    ConstantMinus,
    /// `h ≡ 0` at `λ = 0`: the trivial steady solution.
    ConstantZero,
    /// `−√(−mλ) tanh(μt + a)`
    Tanh { a: f64 },
    /// `√(−mλ) coth(−μ(t + c))`
    Coth { c: f64 },
    /// `√(mλ) tan(√(λ/m)(t + c))`
    Tan { c: f64 },
    /// `−m / (t + mc)`
    Rational { c: f64 },
}

impl BranchTag {
    pub fn name(&self) -> &'static str {
        match self {
            BranchTag::ConstantPlus => "constant-plus",
            BranchTag::ConstantMinus => "constant-minus",
            BranchTag::ConstantZero => "constant-zero",
            BranchTag::Tanh { .. } => "tanh",
            BranchTag::Coth { .. } => "coth",
            BranchTag::Tan { .. } => "tan",
            BranchTag::Rational { .. } => "rational",
        }
    }
}

/// A solution family together with its maximal interval of definition.
///
/// `admissible` is false for the branches that blow up in finite time and so
/// cannot come from a potential defined on all of `H^n x R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchSolution {
    pub tag: BranchTag,
    pub params: OdeParams,
    pub interval: (f64, f64),
    pub admissible: bool,
}

impl BranchSolution {
    /// The finite endpoint of the interval, if any.
    pub fn blow_up_time(&self) -> Option<f64> {
        let (lo, hi) = self.interval;
        if hi.is_finite() {
            Some(hi)
        } else if lo.is_finite() {
            Some(lo)
        } else {
            None
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.interval.0 < t && t < self.interval.1
    }
}

const ALL_OF_R: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

/// The branch through `h(0) = h0`.
pub fn classify_branch(params: &OdeParams, h0: f64) -> BranchSolution {
    let (m, lambda) = (params.m, params.lambda);
    let global = |tag| BranchSolution { tag, params: *params, interval: ALL_OF_R, admissible: true };
    let blowing = |tag, interval| BranchSolution { tag, params: *params, interval, admissible: false };
    if lambda < 0.0 {
        let k = (-m * lambda).sqrt();
        let mu = (-lambda / m).sqrt();
        if h0 == k {
            global(BranchTag::ConstantPlus)
        } else if h0 == -k {
            global(BranchTag::ConstantMinus)
        } else if h0.abs() < k {
            // `+ 0.0` turns a negative zero phase into zero
            global(BranchTag::Tanh { a: (-h0 / k).atanh() + 0.0 })
        } else {
            let c = -(k / h0).atanh() / mu;
            let pole = -c;
            let interval = if h0 > 0.0 { (f64::NEG_INFINITY, pole) } else { (pole, f64::INFINITY) };
            blowing(BranchTag::Coth { c }, interval)
        }
    } else if lambda == 0.0 {
        if h0 == 0.0 {
            global(BranchTag::ConstantZero)
        } else {
            let pole = m / h0;
            let interval = if h0 > 0.0 { (f64::NEG_INFINITY, pole) } else { (pole, f64::INFINITY) };
            blowing(BranchTag::Rational { c: -1.0 / h0 }, interval)
        }
    } else {
        let amp = (m * lambda).sqrt();
        let omega = (lambda / m).sqrt();
        let c = (h0 / amp).atan() / omega;
        blowing(BranchTag::Tan { c }, (-FRAC_PI_2 / omega - c, FRAC_PI_2 / omega - c))
    }
}

pub fn closed_form(branch: &BranchSolution, t: f64) -> Result<f64> {
    if !branch.contains(t) {
        return Err(OdeError::OutsideInterval { t, lo: branch.interval.0, hi: branch.interval.1 });
    }
    let OdeParams { m, lambda } = branch.params;
    let speed = || (-m * lambda).sqrt();
    let mu = || (-lambda / m).sqrt();
    Ok(match branch.tag {
        BranchTag::ConstantPlus => speed(),
        BranchTag::ConstantMinus => -speed(),
        BranchTag::ConstantZero => 0.0,
        BranchTag::Tanh { a } => -speed() * (mu() * t + a).tanh(),
        BranchTag::Coth { c } => speed() / (-mu() * (t + c)).tanh(),
        BranchTag::Tan { c } => (m * lambda).sqrt() * ((lambda / m).sqrt() * (t + c)).tan(),
        BranchTag::Rational { c } => -m / (t + m * c),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Time at which `|h|` first exceeded the threshold, if it did.
    pub blow_up: Option<f64>,
}

/// Classical fourth-order Runge-Kutta from `t0` to `t1` (either direction).
pub fn integrate(params: &OdeParams, h0: f64, t0: f64, t1: f64, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(OdeError::NoSteps);
    }
    let dt = (t1 - t0) / steps as f64;
    let f = |h: f64| ode_rhs(h, params);
    let mut times = vec![t0];
    let mut values = vec![h0];
    let mut h = h0;
    for i in 1..=steps {
        let k1 = f(h);
        let k2 = f(h + 0.5 * dt * k1);
        let k3 = f(h + 0.5 * dt * k2);
        let k4 = f(h + dt * k3);
        h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t = t0 + dt * i as f64;
        if !h.is_finite() || h.abs() > BLOW_UP_THRESHOLD {
            return Ok(Trajectory { times, values, blow_up: Some(t) });
        }
        times.push(t);
        values.push(h);
    }
    Ok(Trajectory { times, values, blow_up: None })
}

/// Blow-up times found by integrating forward and backward from `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowUpProbe {
    pub forward: Option<f64>,
    pub backward: Option<f64>,
}

impl BlowUpProbe {
    pub fn any(&self) -> bool {
        self.forward.is_some() || self.backward.is_some()
    }
}

/// Integrates over `[−horizon, horizon]` in both directions.
pub fn probe_blow_up(params: &OdeParams, h0: f64, horizon: f64, steps: usize) -> Result<BlowUpProbe> {
    Ok(BlowUpProbe {
        forward: integrate(params, h0, 0.0, horizon, steps)?.blow_up,
        backward: integrate(params, h0, 0.0, -horizon, steps)?.blow_up,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolitonType {
    Expanding,
    Steady,
    Shrinking,
}

impl SolitonType {
    pub fn name(self) -> &'static str {
        match self {
            SolitonType::Expanding => "expanding",
            SolitonType::Steady => "steady",
            SolitonType::Shrinking => "shrinking",
        }
    }
}

pub fn sign_classify(lambda: f64) -> SolitonType {
    if lambda < 0.0 {
        SolitonType::Expanding
    } else if lambda == 0.0 {
        SolitonType::Steady
    } else {
        SolitonType::Shrinking
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(m: f64, lambda: f64) -> OdeParams {
        OdeParams::new(m, lambda).unwrap()
    }

    #[test]
    fn rhs_values() {
        assert_eq!(ode_rhs(0.0, &p(1.0, -1.0)), -1.0);
        assert_eq!(ode_rhs(2.0, &p(4.0, -1.0)), 0.0);
        assert_eq!(ode_rhs(2.0, &p(1.0, -1.0)), 3.0);
        assert!(OdeParams::new(0.0, 1.0).is_err());
        assert!(OdeParams::new(1.0, f64::NAN).is_err());
        let q = p(3.0, -2.0);
        assert!((q.mu_rate().unwrap().powi(2) * q.m + q.lambda).abs() < 1e-15);
        assert_eq!(p(1.0, 1.0).mu_rate(), None);
    }

    #[test]
    fn closed_form_values() {
        let tanh = classify_branch(&p(1.0, -1.0), 0.0);
        assert_eq!(tanh.tag, BranchTag::Tanh { a: 0.0 });
        assert_eq!(closed_form(&tanh, 0.0).unwrap(), 0.0);
        assert!((closed_form(&tanh, 20.0).unwrap() + 1.0).abs() <= 1e-15);
        let rational = BranchSolution {
            tag: BranchTag::Rational { c: 0.0 },
            params: p(1.0, 0.0),
            interval: (f64::NEG_INFINITY, 0.0),
            admissible: false,
        };
        assert_eq!(closed_form(&rational, -0.5).unwrap(), 2.0);
        assert!(closed_form(&rational, 0.0).is_err());
        assert!(closed_form(&rational, 1.0).is_err());
    }

    #[test]
    fn branch_selection() {
        match classify_branch(&p(1.0, -1.0), -0.46211715726).tag {
            BranchTag::Tanh { a } => assert!((a - 0.5).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
        assert_eq!(classify_branch(&p(4.0, -1.0), 2.0).tag, BranchTag::ConstantPlus);
        assert_eq!(classify_branch(&p(4.0, -1.0), -2.0).tag, BranchTag::ConstantMinus);
        let coth = classify_branch(&p(1.0, -1.0), 3.0);
        assert!(matches!(coth.tag, BranchTag::Coth { .. }));
        assert!(!coth.admissible);
        assert_eq!(classify_branch(&p(1.0, 0.0), 0.0).tag, BranchTag::ConstantZero);
        let rational = classify_branch(&p(1.0, 0.0), -2.0);
        assert!(matches!(rational.tag, BranchTag::Rational { .. }) && !rational.admissible);
        assert_eq!(rational.interval, (-0.5, f64::INFINITY));
        let tan = classify_branch(&p(1.0, 1.0), 0.0);
        assert!(matches!(tan.tag, BranchTag::Tan { .. }) && !tan.admissible);
        assert!((tan.interval.1 - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn initial_values_are_reproduced() {
        for (m, lambda, h0) in
            [(1.0, -1.0, 0.3), (2.0, -1.0, 5.0), (2.0, -1.0, -5.0), (1.0, 0.0, 0.7), (1.0, 0.0, -0.7), (3.0, 2.0, -1.0)]
        {
            let b = classify_branch(&p(m, lambda), h0);
            assert!((closed_form(&b, 0.0).unwrap() - h0).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn rk4_matches_tanh_closed_form() {
        let params = p(1.0, -1.0);
        let h0 = -(0.5f64).tanh();
        let b = classify_branch(&params, h0);
        let traj = integrate(&params, h0, 0.0, 3.0, 10_000).unwrap();
        assert_eq!(traj.blow_up, None);
        for (t, h) in traj.times.iter().zip(&traj.values) {
            assert!((closed_form(&b, *t).unwrap() - h).abs() < 1e-6);
        }
        assert_eq!(integrate(&params, h0, 0.0, 1.0, 0), Err(OdeError::NoSteps));
    }

    #[test]
    fn blow_up_detection() {
        let traj = integrate(&p(1.0, -1.0), 1.5, 0.0, 5.0, 10_000).unwrap();
        let pole = classify_branch(&p(1.0, -1.0), 1.5).blow_up_time().unwrap();
        let t = traj.blow_up.expect("coth branch blows up forward");
        assert!(t > 0.0 && (t - pole).abs() < 1e-2, "{t} vs {pole}");
        let traj = integrate(&p(1.0, 1.0), 0.0, 0.0, 5.0, 10_000).unwrap();
        assert!(traj.blow_up.unwrap() < std::f64::consts::PI);
        // a coth solution below −√(−mλ) only blows up in the past
        let probe = probe_blow_up(&p(1.0, -1.0), -1.5, 5.0, 10_000).unwrap();
        assert_eq!(probe.forward, None);
        assert!(probe.backward.unwrap() < 0.0);
        let probe = probe_blow_up(&p(1.0, -1.0), 0.2, 50.0, 10_000).unwrap();
        assert!(!probe.any());
    }

    #[test]
    fn soliton_types() {
        assert_eq!(sign_classify(-1.0), SolitonType::Expanding);
        assert_eq!(sign_classify(0.0), SolitonType::Steady);
        assert_eq!(sign_classify(2.0), SolitonType::Shrinking);
    }

    #[test]
    fn potential_recovery_by_quadrature() {
        let (m, a) = (2.0, 0.3f64);
        let params = p(m, -1.0);
        let mu = params.mu_rate().unwrap();
        let b = classify_branch(&params, -params.speed().unwrap() * a.tanh());
        let steps = 4000;
        let (t0, t1) = (-4.0, 4.0);
        let dt = (t1 - t0) / steps as f64;
        let f = |t: f64| -m * (mu * t + a).cosh().ln();
        let mut acc = 0.0;
        for i in 0..steps {
            let (ta, tb) = (t0 + dt * i as f64, t0 + dt * (i + 1) as f64);
            let mid = 0.5 * (ta + tb);
            let h = |t| closed_form(&b, t).unwrap();
            acc += dt / 6.0 * (h(ta) + 4.0 * h(mid) + h(tb));
            assert!((acc - (f(tb) - f(t0))).abs() < 1e-6);
        }
    }

    fn branch_strategy() -> impl Strategy<Value = (f64, f64, f64)> {
        (0.5f64..4.0, prop_oneof![-3.0f64..-0.1, Just(0.0), 0.1f64..3.0], -4.0f64..4.0)
    }

    proptest! {
        #[test]
        fn closed_forms_solve_the_ode((m, lambda, h0) in branch_strategy()) {
            let params = p(m, lambda);
            let b = classify_branch(&params, h0);
            let (lo, hi) = b.interval;
            let lo = lo.max(-5.0);
            let hi = hi.min(5.0);
            let margin = 0.05 * (hi - lo);
            for i in 0..100 {
                let t = lo + margin + (hi - lo - 2.0 * margin) * (i as f64 + 0.5) / 100.0;
                let step = 1e-6;
                let fd = (closed_form(&b, t + step).unwrap() - closed_form(&b, t - step).unwrap()) / (2.0 * step);
                let rhs = ode_rhs(closed_form(&b, t).unwrap(), &params);
                prop_assert!((fd - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{:?} t={} fd={} rhs={}", b, t, fd, rhs);
            }
        }

        #[test]
        fn tanh_branch_is_bounded(m in 0.5f64..4.0, lambda in -3.0f64..-0.1, s in -0.999f64..0.999) {
            let params = p(m, lambda);
            let k = params.speed().unwrap();
            let b = classify_branch(&params, s * k);
            prop_assert!(b.admissible);
            for i in 0..=1000 {
                let t = -50.0 + 0.1 * i as f64;
                prop_assert!(closed_form(&b, t).unwrap().abs() <= k);
            }
        }

        #[test]
        fn integration_tracks_tanh_branch(m in 0.5f64..4.0, lambda in -3.0f64..-0.1, s in -0.99f64..0.99) {
            let params = p(m, lambda);
            let h0 = s * params.speed().unwrap();
            let b = classify_branch(&params, h0);
            for t1 in [5.0, -5.0] {
                let traj = integrate(&params, h0, 0.0, t1, 20_000).unwrap();
                prop_assert_eq!(traj.blow_up, None);
                for (t, h) in traj.times.iter().zip(&traj.values) {
                    prop_assert!((closed_form(&b, *t).unwrap() - h).abs() < 1e-6);
                }
            }
        }
    }
}
