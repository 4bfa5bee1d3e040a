//! Painlevé-II passage `X'' = sX − 2X³` and its connection formulas.
//!
//! As `s → −∞` small solutions oscillate as
//! `α(−s)^{−1/4} sin(⅔(−s)^{3/2} + ¾α² ln(−s) + φ₀)` with invariant
//! `I⁻ = α²/2`. As `s → +∞` they settle on a branch `±√(s/2)` and oscillate
//! about it with frequency `√(2s)` and invariant `I⁺ = ρ²/2`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::Center;
use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerance};
use crate::par::{self, Execution};
use crate::pathintegrate::DIVERGENCE_BOUND;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    MinusInf,
    PlusInf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Asymptote {
    pub regime: Regime,
    /// α before the transition, ρ after it.
    pub amplitude: f64,
    /// φ₀ before the transition, θ after it.
    pub phase: f64,
    /// Condensate sign; unused before the transition.
    pub branch: i8,
}

impl P2Asymptote {
    pub fn minus(alpha: f64, phi0: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParams(format!("amplitude must be non-negative, got {alpha}")));
        }
        Ok(Self { regime: Regime::MinusInf, amplitude: alpha, phase: phi0, branch: 1 })
    }

    pub fn plus(rho: f64, theta: f64, branch: i8) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidParams(format!("amplitude must be non-negative, got {rho}")));
        }
        Ok(Self { regime: Regime::PlusInf, amplitude: rho, phase: theta, branch: branch.signum() })
    }

    /// With the action `I⁻ = α²/2`.
    pub fn minus_from_invariant(i_minus: f64, phi0: f64) -> Result<Self> {
        if !(i_minus >= 0.0) {
            return Err(Error::InvalidParams(format!("invariant must be non-negative, got {i_minus}")));
        }
        Self::minus((2.0 * i_minus).sqrt(), phi0)
    }

    /// The invariant carried by this asymptote (α²/2 or ρ²/2).
    pub fn invariant(&self) -> f64 {
        0.5 * self.amplitude * self.amplitude
    }

    /// (X, dX/ds) of the leading-order asymptote at `s`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        match self.regime {
            Regime::MinusInf => {
                if !(s < 0.0) {
                    return Err(Error::InvalidParams(format!("minus asymptote needs s < 0, got {s}")));
                }
                Ok(minus_asymptote(self.amplitude, self.phase, s, true))
            }
            Regime::PlusInf => {
                if !(s > 0.0) {
                    return Err(Error::InvalidParams(format!("plus asymptote needs s > 0, got {s}")));
                }
                let (b, rho) = (f64::from(self.branch), self.amplitude);
                let q = (2.0 * s).powf(-0.25);
                let th = 2.0 * 2f64.sqrt() / 3.0 * s.powf(1.5) - 1.5 * rho * rho * s.ln() + self.phase;
                let dth = 2f64.sqrt() * s.sqrt() - 1.5 * rho * rho / s;
                let (sin, cos) = th.sin_cos();
                let x = b * ((s / 2.0).sqrt() + rho * q * cos);
                let v = b
                    * (1.0 / (2.0 * (2.0 * s).sqrt())
                        + rho * (-0.5 * (2.0 * s).powf(-1.25) * cos - q * sin * dth));
                Ok((x, v))
            }
        }
    }
}

fn minus_asymptote(alpha: f64, phi0: f64, s: f64, with_log: bool) -> (f64, f64) {
    let u = -s;
    let log = if with_log { 0.75 * alpha * alpha } else { 0.0 };
    let phase = 2.0 / 3.0 * u.powf(1.5) + log * u.ln() + phi0;
    let (sin, cos) = phase.sin_cos();
    let x = alpha * u.powf(-0.25) * sin;
    let dx_du = alpha * (-0.25 * u.powf(-1.25) * sin + u.powf(-0.25) * cos * (u.sqrt() + log / u));
    (x, -dx_du)
}

/// Samples of a solution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct P2Trajectory {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl P2Trajectory {
    fn push(&mut self, s: f64, x: f64, v: f64) {
        self.s.push(s);
        self.x.push(x);
        self.v.push(v);
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `E = V²/2 − sX²/2 + X⁴/2` per sample; `dE/ds = −X²/2` along the flow.
    pub fn energy(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (s, x, v) = (self.s[i], self.x[i], self.v[i]);
                0.5 * v * v - 0.5 * s * x * x + 0.5 * x.powi(4)
            })
            .collect()
    }
}

/// Which points to keep from [`p2_solve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum P2Sampling {
    /// Every accepted step.
    Steps,
    /// Evenly spaced points from `from` to the end.
    Uniform { from: f64, ds: f64 },
}

/// Integrate `X'' = sX − 2X³` from `s0` to `s1 > s0`.
pub fn p2_solve(
    x0: f64,
    v0: f64,
    s0: f64,
    s1: f64,
    tol: f64,
    sampling: P2Sampling,
) -> Result<P2Trajectory> {
    if !(s1 > s0) {
        return Err(Error::InvalidParams(format!("need s0 < s1, got [{s0}, {s1}]")));
    }
    if !(x0.is_finite() && v0.is_finite()) {
        return Err(Error::InvalidParams("initial data must be finite".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let f = |s: f64, y: &[f64], d: &mut [f64]| {
        d[0] = y[1];
        d[1] = s * y[0] - 2.0 * y[0] * y[0] * y[0];
    };
    let guard = |s: f64, y: &[f64]| {
        let m = y[0].abs();
        if !(m <= DIVERGENCE_BOUND) || !y[1].is_finite() {
            return Err(Error::Divergence { t: s, norm: m });
        }
        Ok(())
    };
    let mut solver = Dopri5::new(2).keep_step();
    let mut y = [x0, v0];
    let mut out = P2Trajectory::default();
    out.push(s0, x0, v0);
    let tol = Tolerance::new(tol);
    match sampling {
        P2Sampling::Steps => {
            solver.integrate(f, &mut y, s0, s1, tol, |s, y| {
                guard(s, y)?;
                out.push(s, y[0], y[1]);
                Ok(())
            })?;
        }
        P2Sampling::Uniform { from, ds } => {
            if !(ds > 0.0) {
                return Err(Error::InvalidParams(format!("sample spacing must be positive, got {ds}")));
            }
            let from = from.clamp(s0, s1);
            out = P2Trajectory::default();
            if from > s0 {
                solver.integrate(f, &mut y, s0, from, tol, guard)?;
            }
            out.push(from, y[0], y[1]);
            let n = ((s1 - from) / ds).ceil() as usize;
            let mut s = from;
            for k in 1..=n {
                let next = if k == n { s1 } else { from + k as f64 * ds };
                solver.integrate(f, &mut y, s, next, tol, guard)?;
                s = next;
                out.push(s, y[0], y[1]);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    pub alpha: f64,
    /// In [0, 2π).
    pub phi0: f64,
    /// RMS of `X − X_fit` over the fitted samples.
    pub rms_residual: f64,
}

/// Least-squares fit of the minus-infinity asymptote over `s ∈ range`
/// (`range.1 < 0`). Dropping the logarithmic phase term is allowed for
/// comparison only.
pub fn fit_minus_asymptote(traj: &P2Trajectory, range: (f64, f64), with_log: bool) -> Result<AsymptoteFit> {
    if !(range.1 < 0.0 && range.0 < range.1) {
        return Err(Error::InvalidParams(format!("fit range must lie in s < 0, got {range:?}")));
    }
    let idx: Vec<usize> = (0..traj.len()).filter(|&i| traj.s[i] >= range.0 && traj.s[i] <= range.1).collect();
    if idx.len() < 4 {
        return Err(Error::Extraction(format!("only {} samples in the fit range", idx.len())));
    }
    // X ≈ u^{-1/4}(a sin Ψ + b cos Ψ), Ψ = ⅔u^{3/2} + ¾α² ln u; the log term
    // makes Ψ depend on α = √(a²+b²), resolved by fixed-point iteration.
    let mut alpha = 0.0;
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..50 {
        let h = if with_log { 0.75 * alpha * alpha } else { 0.0 };
        let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &i in &idx {
            let u = -traj.s[i];
            let psi = 2.0 / 3.0 * u.powf(1.5) + h * u.ln();
            let q = u.powf(-0.25);
            let (bs, bc) = (q * psi.sin(), q * psi.cos());
            ss += bs * bs;
            sc += bs * bc;
            cc += bc * bc;
            ys += traj.x[i] * bs;
            yc += traj.x[i] * bc;
        }
        let det = ss * cc - sc * sc;
        a = (ys * cc - yc * sc) / det;
        b = (yc * ss - ys * sc) / det;
        let next = a.hypot(b);
        let done = (next - alpha).abs() <= 1e-15 * next.max(1e-300);
        alpha = next;
        if done || !with_log {
            break;
        }
    }
    let phi0 = b.atan2(a).rem_euclid(2.0 * PI);
    let mut acc = 0.0;
    for &i in &idx {
        let (x, _) = minus_asymptote(alpha, phi0, traj.s[i], with_log);
        acc += (traj.x[i] - x).powi(2);
    }
    Ok(AsymptoteFit { alpha, phi0, rms_residual: (acc / idx.len() as f64).sqrt() })
}

/// `ρ² = (1/π) ln[(1+|p|²)/(2|ℑp|)]` with `p = √(e^{πα²}−1) e^{iθ′}`.
pub fn connection_rho2(alpha: f64, theta_prime: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    let p2 = (PI * alpha * alpha).exp_m1();
    let im = p2.sqrt() * theta_prime.sin().abs();
    if !(im > 0.0) || !im.is_finite() {
        return Err(Error::SingularPhase { theta: theta_prime });
    }
    Ok(((1.0 + p2) / (2.0 * im)).ln() / PI)
}

/// Phase-averaged `ΔI = −(1/4π) ln(1 − e^{−2πI⁻})`.
pub fn delta_i_avg(i_minus: f64) -> Result<f64> {
    if !(i_minus > 0.0) {
        return Err(Error::InvalidParams(format!("I_minus must be positive, got {i_minus}")));
    }
    Ok(-(-(-2.0 * PI * i_minus).exp_m1()).ln() / (4.0 * PI))
}

/// Small-I form `(1/4π) ln(1/(2πI⁻))`.
pub fn delta_i_small(i_minus: f64) -> f64 {
    (1.0 / (2.0 * PI * i_minus)).ln() / (4.0 * PI)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Settings {
    pub s_span: f64,
    pub tol: f64,
    /// Oscillation periods (at `s_span`) used for the final loop average.
    pub periods: f64,
    /// Samples per period in the extraction window.
    pub samples_per_period: usize,
}

impl Default for P2Settings {
    fn default() -> Self {
        Self { s_span: 400.0, tol: 1e-10, periods: 8.0, samples_per_period: 64 }
    }
}

/// One passage: start on the minus asymptote at `−s_span`, return `I⁺`.
pub fn p2_final_invariant(i_minus: f64, phi0: f64, settings: &P2Settings) -> Result<(f64, i8)> {
    let s_span = settings.s_span;
    let (x0, v0) = P2Asymptote::minus_from_invariant(i_minus, phi0)?.eval(-s_span)?;
    let period = 2.0 * PI / (2.0 * s_span).sqrt();
    let ds = period / settings.samples_per_period as f64;
    let from = s_span - settings.periods * period;
    let traj = p2_solve(x0, v0, -s_span, s_span, settings.tol, P2Sampling::Uniform { from, ds })?;
    let tail = traj.len() - traj.len() / 4;
    let branch: i8 = if traj.x[tail..].iter().sum::<f64>() < 0.0 { -1 } else { 1 };
    let center = Center::Condensate { t_crit: 0.0, branch: f64::from(branch) };
    let mut y = Vec::with_capacity(traj.len());
    let mut q = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let (c, cd) = center.at(traj.s[i]);
        y.push(traj.x[i] - c);
        q.push(traj.v[i] - cd);
    }
    let areas = crate::actions::loop_areas(&y, &q);
    if areas.is_empty() {
        return Err(Error::Extraction("no complete post-transition oscillation".into()));
    }
    let (mean, _) = crate::stats::mean_stderr(&areas);
    Ok((mean / (2.0 * PI), branch))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_phases: usize,
}

/// Phase average of `I⁺ − I⁻/2` over `n_phases` uniform φ₀.
pub fn p2_delta_i_numeric(
    i_minus: f64,
    n_phases: usize,
    settings: &P2Settings,
    seed: u64,
    exec: Execution,
) -> Result<P2Estimate> {
    if !(i_minus > 0.0) {
        return Err(Error::InvalidParams(format!("I_minus must be positive, got {i_minus}")));
    }
    if n_phases == 0 {
        return Err(Error::InvalidParams("need at least one phase sample".into()));
    }
    let runs = par::map_indexed(n_phases, exec, |k| {
        let phi0 = par::stream_rng(seed, k as u64).gen_range(0.0..2.0 * PI);
        p2_final_invariant(i_minus, phi0, settings).map(|(i, _)| i - 0.5 * i_minus)
    });
    let values = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let (mean, stderr) = crate::stats::mean_stderr(&values);
    Ok(P2Estimate { mean, stderr, n_phases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_a_fixed_point() {
        let t = p2_solve(0.0, 0.0, -50.0, 50.0, 1e-10, P2Sampling::Steps).unwrap();
        assert!(t.x.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(p2_solve(0.0, 0.0, 1.0, 1.0, 1e-10, P2Sampling::Steps).is_err());
        assert!(p2_solve(f64::NAN, 0.0, 0.0, 1.0, 1e-10, P2Sampling::Steps).is_err());
        assert!(delta_i_avg(0.0).is_err());
        assert!(connection_rho2(0.0, 1.0).is_err());
        assert!(matches!(connection_rho2(0.1, 0.0), Err(Error::SingularPhase { .. })));
        assert!(P2Asymptote::minus(0.1, 0.0).unwrap().eval(1.0).is_err());
    }

    #[test]
    fn blow_up_is_located() {
        let r = p2_solve(1e6, 1e9, 0.0, 10.0, 1e-8, P2Sampling::Steps);
        assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn closed_forms() {
        let exact = |i: f64| -(1.0 - (-2.0 * PI * i).exp()).ln() / (4.0 * PI);
        for i in [1e-5, 1e-4, 1e-2, 0.1, 1.0] {
            assert!((delta_i_avg(i).unwrap() / exact(i) - 1.0).abs() < 1e-10);
        }
        assert!((delta_i_avg(1e-4).unwrap() - 0.58673).abs() < 5e-5);
        assert!((delta_i_avg(0.1).unwrap() - 0.06066).abs() < 5e-5);
        assert!((delta_i_avg(1e-4).unwrap() - delta_i_small(1e-4)).abs() < 1e-4);
    }

    #[test]
    fn rho2_closed_form() {
        let alpha = (2.0e-4f64).sqrt();
        let p2 = (2.0 * PI * 1e-4f64).exp() - 1.0;
        assert!((p2 - 6.2852e-4).abs() < 1e-7);
        let direct = ((1.0 + p2) / (2.0 * p2.sqrt())).ln() / PI;
        let rho2 = connection_rho2(alpha, PI / 2.0).unwrap();
        assert!((rho2 - direct).abs() < 1e-13);
        assert!((rho2 - 0.9529).abs() < 1e-4);
        // Log divergence as θ′ → 0.
        assert!(connection_rho2(alpha, 1e-8).unwrap() > connection_rho2(alpha, 1e-4).unwrap() + 2.0);
    }

    #[test]
    fn averaging_rho2_over_the_phase_gives_delta_i_avg() {
        // Midpoint rule over ξ ∈ (0, 1) with θ′ = πξ; the log singularities at
        // the ends are integrable and the midpoint nodes avoid them.
        for i in [1e-4, 1e-2, 0.3] {
            let alpha = (2.0f64 * i).sqrt();
            let m = 400_000;
            let avg: f64 = (0..m)
                .map(|k| connection_rho2(alpha, PI * (k as f64 + 0.5) / m as f64).unwrap())
                .sum::<f64>()
                / m as f64;
            let d = 0.5 * avg - 0.5 * i;
            assert!((d - delta_i_avg(i).unwrap()).abs() < 1e-5, "{i}: {d}");
        }
    }

    #[test]
    fn asymptote_derivatives_are_consistent() {
        let h = 1e-6;
        let minus = P2Asymptote::minus(0.3, 1.1).unwrap();
        let plus = P2Asymptote::plus(0.4, 0.2, -1).unwrap();
        for (a, s) in [(minus, -50.0), (plus, 60.0)] {
            let (_, v) = a.eval(s).unwrap();
            let fd = (a.eval(s + h).unwrap().0 - a.eval(s - h).unwrap().0) / (2.0 * h);
            assert!((v - fd).abs() < 1e-5 * v.abs().max(1.0), "{v} {fd}");
        }
    }

    #[test]
    fn energy_balance_along_the_flow() {
        let (x0, v0) = P2Asymptote::minus(0.2, 0.7).unwrap().eval(-60.0).unwrap();
        let t = p2_solve(x0, v0, -60.0, 30.0, 1e-11, P2Sampling::Uniform { from: -60.0, ds: 0.002 })
            .unwrap();
        let e = t.energy();
        // E(s1) − E(s0) = −½ ∫ X² ds, Simpson on the uniform grid.
        let n = t.len() - 1;
        assert_eq!(n % 2, 0);
        let mut integral = 0.0;
        for k in 0..n {
            let w = if k == 0 { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * t.x[k] * t.x[k];
        }
        integral += t.x[n] * t.x[n];
        integral *= (t.s[1] - t.s[0]) / 3.0;
        let lhs = e[n] - e[0];
        assert!((lhs + 0.5 * integral).abs() < 1e-6 * integral.max(1.0), "{lhs} {integral}");
    }

    #[test]
    fn fit_recovers_the_minus_asymptote() {
        let (alpha, phi0) = ((2.0f64 * 0.01).sqrt(), 2.0);
        let (x0, v0) = P2Asymptote::minus(alpha, phi0).unwrap().eval(-400.0).unwrap();
        let t = p2_solve(x0, v0, -400.0, -100.0, 1e-11, P2Sampling::Uniform { from: -400.0, ds: 0.01 })
            .unwrap();
        let fit = fit_minus_asymptote(&t, (-400.0, -100.0), true).unwrap();
        assert!((fit.alpha / alpha - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.phi0 - phi0).abs() < 1e-3, "{fit:?}");
        // Dropping the logarithmic phase term measurably degrades the fit.
        let bare = fit_minus_asymptote(&t, (-400.0, -100.0), false).unwrap();
        assert!(bare.rms_residual > 10.0 * fit.rms_residual, "{bare:?} {fit:?}");
    }

    #[test]
    fn post_transition_frequency() {
        let (x0, v0) = P2Asymptote::minus(0.1, 0.3).unwrap().eval(-200.0).unwrap();
        let t = p2_solve(x0, v0, -200.0, 200.0, 1e-10, P2Sampling::Uniform { from: 150.0, ds: 0.005 })
            .unwrap();
        let branch = if t.x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let resid: Vec<f64> = (0..t.len()).map(|i| t.x[i] - branch * (t.s[i] / 2.0).sqrt()).collect();
        let omega = crate::spectrum::crossing_frequency(&t.s, &resid).unwrap();
        let expected = (2.0 * 175.0f64).sqrt();
        assert!((omega / expected - 1.0).abs() < 0.02, "{omega} {expected}");
    }

    #[test]
    fn plus_asymptote_invariant_is_recovered() {
        let a = P2Asymptote::plus((2.0f64 * 0.3).sqrt(), 0.4, 1).unwrap();
        let center = Center::Condensate { t_crit: 0.0, branch: 1.0 };
        let (mut y, mut q) = (Vec::new(), Vec::new());
        for k in 0..4000 {
            let s = 390.0 + k as f64 * 0.0025;
            let (x, v) = a.eval(s).unwrap();
            let (c, cd) = center.at(s);
            y.push(x - c);
            q.push(v - cd);
        }
        let areas = crate::actions::loop_areas(&y, &q);
        let i = crate::stats::mean_stderr(&areas).0 / (2.0 * PI);
        assert!((i / a.invariant() - 1.0).abs() < 2e-3, "{i}");
    }
}
