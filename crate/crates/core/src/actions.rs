//! Action–angle initialization and adiabatic-invariant extraction.
//!
//! Before the transition every mode sits in a harmonic well of frequency
//! `ω_k = √(−t + 2εe_k)`. After it, the separatrix-crossing mode oscillates
//! about a drifting condensate minimum `±√(s/2)` with `s = t − 2εe_c` and
//! frequency `√(2s)`, while the other modes stay confined about zero with
//! `ω_k = √(2ε(e_k − e_c))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PhaseState};
use crate::pathintegrate::TrajectoryRecord;

/// Largest acceptable relative quartic correction at initialization.
pub const QUARTIC_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    HarmonicEnergy,
    LoopArea,
}

/// Which modes cross the separatrix (and get the half-factor).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatrixRule {
    /// The mode with the smallest e_k.
    #[default]
    SmallestE,
    /// An explicit set of mode indices.
    Dofs(Vec<usize>),
}

impl SeparatrixRule {
    pub fn crossing(&self, params: &ModelParams) -> Vec<bool> {
        let n = params.n_dof();
        match self {
            SeparatrixRule::SmallestE => {
                let c = params.condensing_dof();
                (0..n).map(|k| k == c).collect()
            }
            SeparatrixRule::Dofs(d) => (0..n).map(|k| d.contains(&k)).collect(),
        }
    }

    /// The mode whose condensate confines the others.
    fn condensate(&self, params: &ModelParams) -> usize {
        match self {
            SeparatrixRule::Dofs(d) if !d.is_empty() => {
                *d.iter().min_by(|a, b| params.e()[**a].total_cmp(&params.e()[**b])).unwrap()
            }
            _ => params.condensing_dof(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantEstimate {
    pub i_value: Vec<f64>,
    pub method: Method,
    /// ±1 for separatrix-crossing modes, 0 for confined ones.
    pub branch: Vec<i8>,
    pub uncertainty: Vec<f64>,
}

/// Pre-transition harmonic frequencies `√(−t0 + 2εe_k)`.
pub fn harmonic_omegas(params: &ModelParams, t0: f64) -> Result<Vec<f64>> {
    params
        .e()
        .iter()
        .map(|&ek| {
            let w2 = -t0 + 2.0 * params.epsilon() * ek;
            if w2 > 0.0 {
                Ok(w2.sqrt())
            } else {
                Err(Error::Precondition(format!(
                    "mode with e={ek} is not confined at t0={t0} (omega^2 = {w2})"
                )))
            }
        })
        .collect()
}

/// Relative size of the quartic term against the harmonic one at action I.
pub fn quartic_correction(i: f64, omega: f64) -> f64 {
    (2.0 * i / omega) * 3.0 / (omega * omega)
}

/// State with actions `i0` and angles `phi` in the harmonic wells at `t0`.
pub fn init_from_action_angle(
    params: &ModelParams,
    t0: f64,
    i0: &[f64],
    phi: &[f64],
) -> Result<PhaseState> {
    let n = params.n_dof();
    for v in [i0.len(), phi.len()] {
        if v != n {
            return Err(Error::DimensionMismatch { expected: n, actual: v });
        }
    }
    if let Some(bad) = i0.iter().find(|i| !(**i >= 0.0) || !i.is_finite()) {
        return Err(Error::InvalidParams(format!("actions must be non-negative, got {bad}")));
    }
    let omegas = harmonic_omegas(params, t0)?;
    let mut x = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for k in 0..n {
        let (i, w) = (i0[k], omegas[k]);
        let q = quartic_correction(i, w);
        if q >= QUARTIC_THRESHOLD {
            return Err(Error::Precondition(format!(
                "quartic correction {q:.3e} for I={i} at t0={t0}; start earlier"
            )));
        }
        x.push((2.0 * i / w).sqrt() * phi[k].sin());
        p.push((2.0 * i * w).sqrt() * phi[k].cos());
    }
    PhaseState::new(x, p, t0, params.epsilon())
}

/// `I = E/ω` with `E = (P − drift)²/2 + ω²(X − center)²/2`.
pub fn extract_invariant_harmonic(
    state: &PhaseState,
    dof: usize,
    center: f64,
    drift: f64,
    omega: f64,
) -> Result<f64> {
    if dof >= state.n_dof() {
        return Err(Error::DimensionMismatch { expected: state.n_dof(), actual: dof + 1 });
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
    }
    let dx = state.x[dof] - center;
    let dp = state.p[dof] - drift;
    Ok((0.5 * dp * dp + 0.5 * omega * omega * dx * dx) / omega)
}

/// Slowly drifting well centre used to form loops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Center {
    Fixed(f64),
    /// `branch · √((t − t_crit)/2)`, the minimum of `−sX²/2 + X⁴/2`.
    Condensate { t_crit: f64, branch: f64 },
}

impl Center {
    /// (centre, d centre / dt) at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        match *self {
            Center::Fixed(c) => (c, 0.0),
            Center::Condensate { t_crit, branch } => {
                let s = (t - t_crit).max(0.0);
                if s == 0.0 {
                    return (0.0, 0.0);
                }
                (branch * (s / 2.0).sqrt(), branch / (2.0 * (2.0 * s).sqrt()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopEstimate {
    pub value: f64,
    /// Standard error of the per-period mean.
    pub uncertainty: f64,
    pub periods: usize,
}

/// `(1/2π) ∮ (P − ċ) d(X − c)` per period between consecutive upward zero
/// crossings of `X − c`, averaged over the periods inside `window`.
pub fn extract_invariant_loop(
    traj: &TrajectoryRecord,
    dof: usize,
    window: (f64, f64),
    center: Center,
) -> Result<LoopEstimate> {
    if dof >= traj.n_dof() {
        return Err(Error::DimensionMismatch { expected: traj.n_dof(), actual: dof + 1 });
    }
    let (lo, hi) = window;
    let idx: Vec<usize> = (0..traj.len()).filter(|&i| traj.t[i] >= lo && traj.t[i] <= hi).collect();
    let mut y = Vec::with_capacity(idx.len());
    let mut q = Vec::with_capacity(idx.len());
    for &i in &idx {
        let (c, cd) = center.at(traj.t[i]);
        y.push(traj.x(i)[dof] - c);
        q.push(traj.p(i)[dof] - cd);
    }
    let areas = loop_areas(&y, &q);
    if areas.is_empty() {
        return Err(Error::Extraction(format!(
            "no complete oscillation of mode {dof} in t ∈ [{lo}, {hi}] ({} samples)",
            idx.len()
        )));
    }
    let (mean, se) = crate::stats::mean_stderr(&areas);
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    Ok(LoopEstimate { value: mean * scale, uncertainty: se * scale, periods: areas.len() })
}

/// Signed areas `∮ q dy` between consecutive upward zero crossings of `y`.
pub(crate) fn loop_areas(y: &[f64], q: &[f64]) -> Vec<f64> {
    // Sample index just before each crossing, with q interpolated there.
    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for i in 0..y.len().saturating_sub(1) {
        if y[i] < 0.0 && y[i + 1] >= 0.0 {
            let f = -y[i] / (y[i + 1] - y[i]);
            crossings.push((i, q[i] + f * (q[i + 1] - q[i])));
        }
    }
    let mut areas = Vec::with_capacity(crossings.len().saturating_sub(1));
    for w in crossings.windows(2) {
        let (a, qa) = w[0];
        let (b, qb) = w[1];
        // From the crossing (y = 0) to sample a+1, interior samples, then to
        // the next crossing.
        let mut area = 0.5 * (qa + q[a + 1]) * y[a + 1];
        for j in a + 1..b {
            area += 0.5 * (q[j] + q[j + 1]) * (y[j + 1] - y[j]);
        }
        area += 0.5 * (q[b] + qb) * (0.0 - y[b]);
        areas.push(area);
    }
    areas
}

/// Condensate sign from the mean of X over the final quarter of `window`;
/// ties go positive.
pub fn detect_branch(traj: &TrajectoryRecord, dof: usize, window: (f64, f64)) -> i8 {
    let xs: Vec<(f64, f64)> = (0..traj.len())
        .filter(|&i| traj.t[i] >= window.0 && traj.t[i] <= window.1)
        .map(|i| (traj.t[i], traj.x(i)[dof]))
        .collect();
    if xs.is_empty() {
        return 1;
    }
    // Oscillations about the condensate are fast compared to its drift, so
    // the mean over the final stretch carries the sign.
    let tail_start = xs.len() - xs.len().min(xs.len() / 4 + 1);
    let mean: f64 = xs[tail_start..].iter().map(|v| v.1).sum::<f64>() / (xs.len() - tail_start) as f64;
    if mean < 0.0 {
        -1
    } else {
        1
    }
}

/// Post-transition well for each mode: (centre, frequency at time t).
#[derive(Clone, Debug)]
pub struct PostWells {
    pub centers: Vec<Center>,
    t_crit: f64,
    confined_omega: Vec<Option<f64>>,
}

impl PostWells {
    fn new(params: &ModelParams, rule: &SeparatrixRule, branch: &[i8]) -> Result<Self> {
        let crossing = rule.crossing(params);
        let c = rule.condensate(params);
        let eps = params.epsilon();
        let e = params.e();
        let t_crit = 2.0 * eps * e[c];
        let mut centers = Vec::new();
        let mut confined_omega = Vec::new();
        for k in 0..params.n_dof() {
            if crossing[k] {
                centers.push(Center::Condensate {
                    t_crit: 2.0 * eps * e[k],
                    branch: f64::from(branch[k]),
                });
                confined_omega.push(None);
            } else {
                let w2 = 2.0 * eps * (e[k] - e[c]);
                if !(w2 > 0.0) {
                    return Err(Error::Extraction(format!(
                        "mode {k} is not confined by the condensate of mode {c}"
                    )));
                }
                centers.push(Center::Fixed(0.0));
                confined_omega.push(Some(w2.sqrt()));
            }
        }
        Ok(Self { centers, t_crit, confined_omega })
    }

    pub fn omega(&self, k: usize, t: f64) -> f64 {
        match self.confined_omega[k] {
            Some(w) => w,
            None => (2.0 * (t - self.t_crit)).max(0.0).sqrt(),
        }
    }
}

/// Final invariants of every mode from the samples inside `window`.
pub fn extract_final_invariants(
    params: &ModelParams,
    traj: &TrajectoryRecord,
    window: (f64, f64),
    method: Method,
    rule: &SeparatrixRule,
) -> Result<InvariantEstimate> {
    let n = params.n_dof();
    if traj.n_dof() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: traj.n_dof() });
    }
    let crossing = rule.crossing(params);
    let branch: Vec<i8> =
        (0..n).map(|k| if crossing[k] { detect_branch(traj, k, window) } else { 0 }).collect();
    let wells = PostWells::new(params, rule, &branch)?;
    let mut i_value = Vec::with_capacity(n);
    let mut uncertainty = Vec::with_capacity(n);
    for k in 0..n {
        match method {
            Method::LoopArea => {
                let est = extract_invariant_loop(traj, k, window, wells.centers[k])?;
                i_value.push(est.value.max(0.0));
                uncertainty.push(est.uncertainty);
            }
            Method::HarmonicEnergy => {
                let vals: Vec<f64> = (0..traj.len())
                    .filter(|&i| traj.t[i] >= window.0 && traj.t[i] <= window.1)
                    .map(|i| {
                        let t = traj.t[i];
                        let (c, cd) = wells.centers[k].at(t);
                        let s = traj.state(i);
                        extract_invariant_harmonic(&s, k, c, cd, wells.omega(k, t))
                    })
                    .collect::<Result<_>>()?;
                if vals.is_empty() {
                    return Err(Error::Extraction(format!(
                        "no samples in t ∈ [{}, {}]",
                        window.0, window.1
                    )));
                }
                let (m, se) = crate::stats::mean_stderr(&vals);
                i_value.push(m);
                uncertainty.push(se);
            }
        }
    }
    // A confined mode rides on the ring |X| ≈ R and picks up the radial
    // oscillation of the condensate: its projected loop area exceeds the
    // torus action by the factor 1 + 2 I_c/(R ω_k²), its harmonic energy
    // by 1 + I_c/(R ω_k²).
    let c = rule.condensate(params);
    let mid = 0.5 * (window.0 + window.1);
    let r = ((mid - wells.t_crit) / 2.0).sqrt();
    let kappa = match method {
        Method::LoopArea => 2.0,
        Method::HarmonicEnergy => 1.0,
    };
    if crossing[c] && r > 0.0 {
        for k in (0..n).filter(|k| !crossing[*k]) {
            let w = wells.omega(k, mid);
            let f = 1.0 + kappa * i_value[c] / (r * w * w);
            i_value[k] /= f;
            uncertainty[k] /= f;
        }
    }
    Ok(InvariantEstimate { i_value, method, branch, uncertainty })
}

/// ΔI per mode: `I_f − I_i/2` across the separatrix, `I_f − I_i` otherwise.
pub fn delta_invariants(
    params: &ModelParams,
    i_initial: &[f64],
    i_final: &[f64],
    rule: &SeparatrixRule,
) -> Result<Vec<f64>> {
    let n = params.n_dof();
    for v in [i_initial.len(), i_final.len()] {
        if v != n {
            return Err(Error::DimensionMismatch { expected: n, actual: v });
        }
    }
    let crossing = rule.crossing(params);
    Ok((0..n)
        .map(|k| if crossing[k] { i_final[k] - 0.5 * i_initial[k] } else { i_final[k] - i_initial[k] })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{Dopri5, Tolerance};
    use crate::pathintegrate::PathSpec;
    use std::f64::consts::PI;

    fn split(eps: f64) -> ModelParams {
        ModelParams::new(eps, vec![-0.5, 0.5]).unwrap()
    }

    fn synthetic(params: &ModelParams, t: &[f64], xs: &[f64], ps: &[f64]) -> TrajectoryRecord {
        let path = PathSpec::physical(
            t[0],
            t[t.len() - 1],
            params.epsilon(),
            crate::pathintegrate::SegmentSettings::splitting4(0.01),
        )
        .unwrap();
        let states: Vec<PhaseState> = (0..t.len())
            .map(|i| PhaseState::new(vec![xs[i]], vec![ps[i]], t[i], params.epsilon()).unwrap())
            .collect();
        TrajectoryRecord::from_states(params.clone(), path, &states)
    }

    #[test]
    fn zero_action_is_the_origin() {
        let s = init_from_action_angle(&split(1.0), -500.0, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.p, vec![0.0, 0.0]);
    }

    #[test]
    fn pre_transition_frequencies() {
        let w = harmonic_omegas(&split(1.0), -500.0).unwrap();
        assert_eq!(w, vec![499f64.sqrt(), 501f64.sqrt()]);
    }

    #[test]
    fn init_roundtrip_through_harmonic_energy() {
        let params = split(1.0);
        let i0 = [1e-4, 3e-3];
        let s = init_from_action_angle(&params, -500.0, &i0, &[0.3, 4.0]).unwrap();
        let w = harmonic_omegas(&params, -500.0).unwrap();
        for k in 0..2 {
            let i = extract_invariant_harmonic(&s, k, 0.0, 0.0, w[k]).unwrap();
            assert!((i / i0[k] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn init_preconditions() {
        let params = split(1.0);
        // Unconfined: −t0 + 2ε e_1 < 0.
        assert!(matches!(
            init_from_action_angle(&params, 0.5, &[1e-4, 1e-4], &[0.0, 0.0]),
            Err(Error::Precondition(_))
        ));
        // Too large an action for a shallow well.
        assert!(matches!(
            init_from_action_angle(&params, -5.0, &[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::Precondition(_))
        ));
        assert!(init_from_action_angle(&params, -500.0, &[-1.0, 0.0], &[0.0, 0.0]).is_err());
        // The default start covers every action up to 1e-2 for ε ≤ 2.
        for eps in [0.2, 1.0, 2.0] {
            let w = harmonic_omegas(&split(eps), -500.0).unwrap();
            assert!(w.iter().all(|w| quartic_correction(1e-2, *w) < QUARTIC_THRESHOLD));
        }
    }

    #[test]
    fn harmonic_extraction_trivia() {
        let s = PhaseState::new(vec![2.0], vec![0.25], 0.0, 1.0).unwrap();
        assert_eq!(extract_invariant_harmonic(&s, 0, 2.0, 0.25, 3.0).unwrap(), 0.0);
        // X = √(2I/ω), P = 0 gives I back.
        let (i, w) = (0.7_f64, 1.3);
        let s = PhaseState::new(vec![(2.0 * i / w).sqrt()], vec![0.0], 0.0, 1.0).unwrap();
        assert!((extract_invariant_harmonic(&s, 0, 0.0, 0.0, w).unwrap() - i).abs() < 1e-15);
        assert!(extract_invariant_harmonic(&s, 0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn condensate_well_geometry() {
        let params = split(1.0);
        let t = 3000.0;
        let s = t - 2.0 * params.epsilon() * params.e()[0];
        assert_eq!(s, 3001.0);
        let wells = PostWells::new(&params, &SeparatrixRule::SmallestE, &[1, 0]).unwrap();
        let (c, _) = wells.centers[0].at(t);
        let v = |x: f64| -s * x * x / 2.0 + x.powi(4) / 2.0;
        let h = 1e-3;
        let dv = (v(c + h) - v(c - h)) / (2.0 * h);
        let d2v = (v(c + h) - 2.0 * v(c) + v(c - h)) / (h * h);
        assert!(dv.abs() < 1e-6 * s);
        let w = wells.omega(0, t);
        assert!((d2v.sqrt() / w - 1.0).abs() < 1e-6, "{} {}", d2v.sqrt(), w);
        assert!((w - (2.0 * 3001.0f64).sqrt()).abs() < 1e-12);
        assert!((wells.omega(1, t) - 2f64.sqrt()).abs() < 1e-15);
        // Drift is the time derivative of the centre.
        let (_, cd) = wells.centers[0].at(t);
        let (c1, _) = wells.centers[0].at(t + h);
        let (c0, _) = wells.centers[0].at(t - h);
        assert!(((c1 - c0) / (2.0 * h) - cd).abs() < 1e-9);
    }

    #[test]
    fn loop_area_of_a_harmonic_orbit() {
        let params = ModelParams::new(1.0, vec![0.0]).unwrap();
        let (i, w) = (0.37_f64, 2.3);
        let a = (2.0 * i / w).sqrt();
        let t: Vec<f64> = (0..3000).map(|k| 0.01 * k as f64).collect();
        let xs: Vec<f64> = t.iter().map(|t| a * (w * t + 0.2).sin()).collect();
        let ps: Vec<f64> = t.iter().map(|t| a * w * (w * t + 0.2).cos()).collect();
        let rec = synthetic(&params, &t, &xs, &ps);
        let est = extract_invariant_loop(&rec, 0, (0.0, 30.0), Center::Fixed(0.0)).unwrap();
        assert!((est.value - i).abs() < 1e-4, "{est:?}");
        assert!(est.periods >= 9);
        // Too short a window.
        assert!(matches!(
            extract_invariant_loop(&rec, 0, (0.0, 1.0), Center::Fixed(0.0)),
            Err(Error::Extraction(_))
        ));
    }

    #[test]
    fn loop_area_of_a_quartic_orbit_matches_quadrature() {
        // H = P²/2 + X⁴/2 integrated directly; oracle (2/π)∫_0^a √(2E − X⁴) dX.
        let mut y = [0.0, 1.7];
        let energy = 0.5 * y[1] * y[1];
        let mut ts = vec![0.0];
        let mut xs = vec![y[0]];
        let mut ps = vec![y[1]];
        let mut solver = Dopri5::new(2);
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -2.0 * y[0].powi(3);
        };
        let mut s = 0.0;
        for _ in 0..4000 {
            solver.integrate(f, &mut y, s, s + 0.005, Tolerance::new(1e-12), |_, _| Ok(())).unwrap();
            s += 0.005;
            ts.push(s);
            xs.push(y[0]);
            ps.push(y[1]);
        }
        let params = ModelParams::new(1.0, vec![0.0]).unwrap();
        let rec = synthetic(&params, &ts, &xs, &ps);
        let est = extract_invariant_loop(&rec, 0, (0.0, 20.0), Center::Fixed(0.0)).unwrap();
        // X = a sin θ removes the endpoint singularity.
        let a = (2.0 * energy).powf(0.25);
        let m = 200_000;
        let h = 0.5 * PI / m as f64;
        let quad: f64 = (0..m)
            .map(|j| {
                let th = (j as f64 + 0.5) * h;
                let x = a * th.sin();
                (2.0 * energy - x.powi(4)).max(0.0).sqrt() * a * th.cos() * h
            })
            .sum::<f64>()
            * 2.0
            / PI;
        assert!((est.value / quad - 1.0).abs() < 1e-4, "{} {}", est.value, quad);
    }

    #[test]
    fn branch_detection() {
        let params = ModelParams::new(1.0, vec![0.0]).unwrap();
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.1).collect();
        for sign in [1.0, -1.0] {
            let xs: Vec<f64> = t.iter().map(|t| sign * (3.0 + t.sin())).collect();
            let rec = synthetic(&params, &t, &xs, &xs);
            assert_eq!(detect_branch(&rec, 0, (0.0, 20.0)), sign as i8);
        }
        let zeros = vec![0.0; t.len()];
        let rec = synthetic(&params, &t, &zeros, &zeros);
        assert_eq!(detect_branch(&rec, 0, (0.0, 20.0)), 1);
    }

    #[test]
    fn half_factor_rule() {
        let params = split(1.0);
        let d = delta_invariants(&params, &[1e-4, 1e-4], &[0.4961, 0.1895], &SeparatrixRule::SmallestE)
            .unwrap();
        assert!((d[0] - 0.49605).abs() < 1e-12);
        assert!((d[1] - 0.1894).abs() < 1e-12);
        let d = delta_invariants(&params, &[0.2, 0.2], &[0.1, 0.2], &SeparatrixRule::SmallestE).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
        // Relabelled coefficients move the half-factor with the smallest e.
        let swapped = ModelParams::new_unordered(1.0, vec![0.5, -0.5]).unwrap();
        let d = delta_invariants(&swapped, &[0.2, 0.2], &[0.2, 0.1], &SeparatrixRule::SmallestE).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
        let d = delta_invariants(&params, &[0.2, 0.2], &[0.2, 0.2], &SeparatrixRule::Dofs(vec![]))
            .unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
        assert!(delta_invariants(&params, &[0.2], &[0.2, 0.2], &SeparatrixRule::SmallestE).is_err());
    }

    #[test]
    fn confined_modes_need_a_higher_coefficient() {
        let p = split(1.0);
        // A mode with e below the condensate's is not confined.
        assert!(PostWells::new(&p, &SeparatrixRule::Dofs(vec![1]), &[0, 1]).is_err());
    }
}
