//! Evolution along piecewise-linear routes in the two-time plane.
//!
//! On a segment from `a = (t_a, ε_a)` to `b = (t_b, ε_b)` the state is
//! advanced by the generator `K = ṫ 𝓗 + ε̇ 𝓗'` where `(ṫ, ε̇)` is the unit
//! direction of the segment and the progress variable σ is arc length in
//! the (t, ε) plane. Horizontal segments (constant ε) reduce to ordinary
//! time evolution under 𝓗.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, HprimeForm, ModelParams, PhaseState, TwoTimePoint};
use crate::ode::{Dopri5, Tolerance};

/// Coordinates beyond this magnitude count as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Fourth-order symmetric composition of the kick–drift leapfrog
    /// (constant-ε segments only).
    Splitting4,
    /// Symplectic implicit midpoint rule with fixed-point iteration.
    ImplicitMidpoint,
    /// Adaptive Dormand–Prince 5(4).
    RkAdaptive,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "splitting4" => Ok(Scheme::Splitting4),
            "implicit_midpoint" => Ok(Scheme::ImplicitMidpoint),
            "rk_adaptive" => Ok(Scheme::RkAdaptive),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSettings {
    pub scheme: Scheme,
    /// Step in σ for the fixed-step schemes.
    pub step: f64,
    /// Local tolerance of the adaptive scheme (and of the midpoint fallback).
    pub tol: f64,
}

impl SegmentSettings {
    pub fn splitting4(step: f64) -> Self {
        Self { scheme: Scheme::Splitting4, step, tol: 1e-10 }
    }

    pub fn implicit_midpoint(step: f64) -> Self {
        Self { scheme: Scheme::ImplicitMidpoint, step, tol: 1e-10 }
    }

    pub fn rk_adaptive(tol: f64) -> Self {
        Self { scheme: Scheme::RkAdaptive, step: 0.0, tol }
    }

    fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::Splitting4 | Scheme::ImplicitMidpoint if !(self.step > 0.0) => {
                Err(Error::InvalidParams(format!("step must be positive, got {}", self.step)))
            }
            Scheme::RkAdaptive if !(self.tol > 0.0) => {
                Err(Error::InvalidParams(format!("tolerance must be positive, got {}", self.tol)))
            }
            _ => Ok(()),
        }
    }
}

/// Piecewise-linear route with per-segment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    waypoints: Vec<TwoTimePoint>,
    segments: Vec<SegmentSettings>,
}

impl PathSpec {
    pub fn new(waypoints: Vec<TwoTimePoint>, segments: Vec<SegmentSettings>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidParams("a path needs at least two waypoints".into()));
        }
        if segments.len() != waypoints.len() - 1 {
            return Err(Error::InvalidParams(format!(
                "{} waypoints need {} segment settings, got {}",
                waypoints.len(),
                waypoints.len() - 1,
                segments.len()
            )));
        }
        for w in &waypoints {
            TwoTimePoint::new(w.t, w.eps)?;
        }
        for (pair, s) in waypoints.windows(2).zip(&segments) {
            s.validate()?;
            if pair[0] == pair[1] {
                return Err(Error::InvalidParams(format!("repeated waypoint {:?}", pair[0])));
            }
            if s.scheme == Scheme::Splitting4 && pair[0].eps != pair[1].eps {
                return Err(Error::InvalidParams(
                    "splitting4 is only valid on constant-eps segments".into(),
                ));
            }
        }
        Ok(Self { waypoints, segments })
    }

    /// Fixed-ε physical route t0 → t1.
    pub fn physical(t0: f64, t1: f64, eps: f64, settings: SegmentSettings) -> Result<Self> {
        Self::new(
            vec![TwoTimePoint::new(t0, eps)?, TwoTimePoint::new(t1, eps)?],
            vec![settings],
        )
    }

    /// Three-leg detour (t0, ε) → (t0, ε_d) → (t1, ε_d) → (t1, ε).
    pub fn detour(
        t0: f64,
        t1: f64,
        eps: f64,
        eps_detour: f64,
        vertical: SegmentSettings,
        horizontal: SegmentSettings,
    ) -> Result<Self> {
        Self::new(
            vec![
                TwoTimePoint::new(t0, eps)?,
                TwoTimePoint::new(t0, eps_detour)?,
                TwoTimePoint::new(t1, eps_detour)?,
                TwoTimePoint::new(t1, eps)?,
            ],
            vec![vertical, horizontal, vertical],
        )
    }

    pub fn waypoints(&self) -> &[TwoTimePoint] {
        &self.waypoints
    }

    pub fn segments(&self) -> &[SegmentSettings] {
        &self.segments
    }

    pub fn start(&self) -> TwoTimePoint {
        self.waypoints[0]
    }

    pub fn end(&self) -> TwoTimePoint {
        self.waypoints[self.waypoints.len() - 1]
    }

    /// Total arc length in the (t, ε) plane.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| seg_len(w[0], w[1])).sum()
    }

    /// The same route traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        let mut segments = self.segments.clone();
        segments.reverse();
        Self { waypoints, segments }
    }
}

/// Largest magnitude, NaN if any entry is NaN.
fn max_abs<'a>(it: impl Iterator<Item = &'a f64>) -> f64 {
    let mut m = 0.0_f64;
    for v in it {
        if v.is_nan() {
            return f64::NAN;
        }
        m = m.max(v.abs());
    }
    m
}

fn seg_len(a: TwoTimePoint, b: TwoTimePoint) -> f64 {
    (b.t - a.t).hypot(b.eps - a.eps)
}

/// Which states to keep while evolving.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// First and last state only.
    Endpoints,
    /// About `n` states evenly spaced in σ (at step boundaries).
    Uniform(usize),
    /// Every `every`-th step within the final `length` of σ.
    Tail { length: f64, every: usize },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Uniform(10_000)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
    /// Midpoint steps that fell back to the adaptive scheme.
    pub fallbacks: usize,
    pub max_iterations: usize,
}

impl StepStats {
    fn merge(&mut self, o: StepStats) {
        self.steps += o.steps;
        self.rejected += o.rejected;
        self.fallbacks += o.fallbacks;
        self.max_iterations = self.max_iterations.max(o.max_iterations);
    }
}

/// Sampled trajectory, stored column-wise.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    n: usize,
    pub sigma: Vec<f64>,
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
    /// Row-major, `n_dof` entries per sample.
    x: Vec<f64>,
    p: Vec<f64>,
    /// (𝓗, 𝓗') per sample when requested.
    pub energies: Option<Vec<(f64, f64)>>,
    pub path: PathSpec,
    pub params: ModelParams,
    pub stats: StepStats,
}

impl TrajectoryRecord {
    fn new(n: usize, path: PathSpec, params: ModelParams) -> Self {
        Self {
            n,
            sigma: Vec::new(),
            t: Vec::new(),
            eps: Vec::new(),
            x: Vec::new(),
            p: Vec::new(),
            energies: None,
            path,
            params,
            stats: StepStats::default(),
        }
    }

    /// Build a record directly from sampled states (all at progress = t).
    pub fn from_states(params: ModelParams, path: PathSpec, states: &[PhaseState]) -> Self {
        let mut rec = Self::new(params.n_dof(), path, params);
        for s in states {
            rec.push(s.t, &s.x, &s.p, s.t, s.eps);
        }
        rec
    }

    fn push(&mut self, sigma: f64, x: &[f64], p: &[f64], t: f64, eps: f64) {
        self.sigma.push(sigma);
        self.t.push(t);
        self.eps.push(eps);
        self.x.extend_from_slice(x);
        self.p.extend_from_slice(p);
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn n_dof(&self) -> usize {
        self.n
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    pub fn p(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    /// Column of X_k over all samples.
    pub fn x_series(&self, k: usize) -> Vec<f64> {
        self.x.iter().skip(k).step_by(self.n).copied().collect()
    }

    pub fn p_series(&self, k: usize) -> Vec<f64> {
        self.p.iter().skip(k).step_by(self.n).copied().collect()
    }

    pub fn state(&self, i: usize) -> PhaseState {
        PhaseState { x: self.x(i).to_vec(), p: self.p(i).to_vec(), t: self.t[i], eps: self.eps[i] }
    }

    pub fn last(&self) -> Option<PhaseState> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    /// Samples with `t` in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Self {
        let mut rec = Self::new(self.n, self.path.clone(), self.params.clone());
        rec.stats = self.stats;
        let mut en = self.energies.as_ref().map(|_| Vec::new());
        for i in 0..self.len() {
            if self.t[i] >= lo && self.t[i] <= hi {
                rec.push(self.sigma[i], self.x(i), self.p(i), self.t[i], self.eps[i]);
                if let (Some(dst), Some(src)) = (en.as_mut(), self.energies.as_ref()) {
                    dst.push(src[i]);
                }
            }
        }
        rec.energies = en;
        rec
    }

    /// Fill (𝓗, 𝓗') for every sample.
    pub fn compute_energies(&mut self) {
        let e = self.params.e().to_vec();
        let en = (0..self.len())
            .map(|i| {
                let h = model::h_value(&e, self.x(i), self.p(i), self.t[i], self.eps[i]);
                let hp = model::hprime_value(
                    &e,
                    self.x(i),
                    self.p(i),
                    self.t[i],
                    self.eps[i],
                    HprimeForm::Corrected,
                );
                (h, hp)
            })
            .collect();
        self.energies = Some(en);
    }

    /// CSV with header `sigma,t,eps,x1..xN,p1..pN,H,Hprime`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n;
        let mut header = String::from("sigma,t,eps");
        for k in 1..=n {
            header.push_str(&format!(",x{k}"));
        }
        for k in 1..=n {
            header.push_str(&format!(",p{k}"));
        }
        header.push_str(",H,Hprime");
        writeln!(w, "{header}")?;
        let e = self.params.e();
        for i in 0..self.len() {
            let (h, hp) = match &self.energies {
                Some(en) => en[i],
                None => (
                    model::h_value(e, self.x(i), self.p(i), self.t[i], self.eps[i]),
                    model::hprime_value(
                        e,
                        self.x(i),
                        self.p(i),
                        self.t[i],
                        self.eps[i],
                        HprimeForm::Corrected,
                    ),
                ),
            };
            write!(w, "{},{},{}", self.sigma[i], self.t[i], self.eps[i])?;
            for v in self.x(i).iter().chain(self.p(i)) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{h},{hp}")?;
        }
        Ok(())
    }
}

/// Decides which steps to store.
struct Recorder<'a> {
    rec: &'a mut TrajectoryRecord,
    sampling: Sampling,
    total: f64,
    next_mark: f64,
    step_counter: usize,
}

impl<'a> Recorder<'a> {
    fn new(rec: &'a mut TrajectoryRecord, sampling: Sampling, total: f64) -> Self {
        Self { rec, sampling, total, next_mark: 0.0, step_counter: 0 }
    }

    fn offer(&mut self, sigma: f64, x: &[f64], p: &[f64], t: f64, eps: f64, force: bool) {
        let keep = force
            || match self.sampling {
                Sampling::Endpoints => false,
                Sampling::Uniform(n) => {
                    if sigma >= self.next_mark {
                        let spacing = self.total / n.max(2).saturating_sub(1) as f64;
                        while self.next_mark <= sigma {
                            self.next_mark += spacing;
                        }
                        true
                    } else {
                        false
                    }
                }
                Sampling::Tail { length, every } => {
                    if sigma >= self.total - length {
                        self.step_counter += 1;
                        (self.step_counter - 1).is_multiple_of(every.max(1))
                    } else {
                        false
                    }
                }
            };
        if keep {
            let dup = self.rec.sigma.last() == Some(&sigma);
            if !dup {
                self.rec.push(sigma, x, p, t, eps);
            }
        }
    }
}

/// Integration workspace for one model size.
struct Stepper<'a> {
    e: &'a [f64],
    n: usize,
    x: Vec<f64>,
    p: Vec<f64>,
    f: Vec<f64>,
    gx: Vec<f64>,
    gp: Vec<f64>,
    mid_x: Vec<f64>,
    mid_p: Vec<f64>,
    new_x: Vec<f64>,
    new_p: Vec<f64>,
    y: Vec<f64>,
    dopri: Dopri5,
}

// Fourth-order triple-jump weights.
const W1: f64 = 1.351_207_191_959_657_8; // 1 / (2 - 2^(1/3))
const W0: f64 = -1.702_414_383_919_315_3; // -2^(1/3) W1
const DRIFT: [f64; 4] = [W1 / 2.0, (W0 + W1) / 2.0, (W0 + W1) / 2.0, W1 / 2.0];
const KICK: [f64; 3] = [W1, W0, W1];

impl<'a> Stepper<'a> {
    fn new(e: &'a [f64], state: &PhaseState) -> Self {
        let n = e.len();
        Self {
            e,
            n,
            x: state.x.clone(),
            p: state.p.clone(),
            f: vec![0.0; n],
            gx: vec![0.0; n],
            gp: vec![0.0; n],
            mid_x: vec![0.0; n],
            mid_p: vec![0.0; n],
            new_x: vec![0.0; n],
            new_p: vec![0.0; n],
            y: vec![0.0; 2 * n],
            dopri: Dopri5::new(2 * n),
        }
    }

    fn check_bounds(&self, t: f64) -> Result<()> {
        let m = max_abs(self.x.iter().chain(&self.p));
        if !(m <= DIVERGENCE_BOUND) {
            return Err(Error::Divergence { t, norm: m });
        }
        Ok(())
    }

    /// One fourth-order step of length `h` in t at constant ε.
    #[inline]
    fn splitting_step(&mut self, t: &mut f64, h: f64, eps: f64) {
        for s in 0..3 {
            let c = DRIFT[s] * h;
            for k in 0..self.n {
                self.x[k] += c * self.p[k];
            }
            *t += c;
            model::h_force(self.e, &self.x, *t, eps, &mut self.f);
            let d = KICK[s] * h;
            for k in 0..self.n {
                self.p[k] += d * self.f[k];
            }
        }
        let c = DRIFT[3] * h;
        for k in 0..self.n {
            self.x[k] += c * self.p[k];
        }
        *t += c;
    }

    /// J∇K at (x, p) on a segment with unit direction (dt, de).
    #[allow(clippy::too_many_arguments)]
    fn generator(
        e: &[f64],
        x: &[f64],
        p: &[f64],
        t: f64,
        eps: f64,
        dir: (f64, f64),
        gx: &mut [f64],
        gp: &mut [f64],
        out_x: &mut [f64],
        out_p: &mut [f64],
    ) {
        let n = x.len();
        for k in 0..n {
            out_x[k] = 0.0;
            out_p[k] = 0.0;
        }
        if dir.0 != 0.0 {
            model::h_grad(e, x, p, t, eps, gx, gp);
            for k in 0..n {
                out_x[k] += dir.0 * gp[k];
                out_p[k] -= dir.0 * gx[k];
            }
        }
        if dir.1 != 0.0 {
            model::hprime_grad(e, x, p, t, eps, HprimeForm::Corrected, gx, gp);
            for k in 0..n {
                out_x[k] += dir.1 * gp[k];
                out_p[k] -= dir.1 * gx[k];
            }
        }
    }

    /// Implicit midpoint step; `Ok(None)` when the iteration stalls.
    fn midpoint_step(
        &mut self,
        a: TwoTimePoint,
        dir: (f64, f64),
        sigma: f64,
        h: f64,
    ) -> Option<usize> {
        let n = self.n;
        let sm = sigma + 0.5 * h;
        let (t, eps) = (a.t + dir.0 * sm, a.eps + dir.1 * sm);
        // Explicit Euler predictor.
        Self::generator(
            self.e, &self.x, &self.p, t, eps, dir, &mut self.gx, &mut self.gp, &mut self.mid_x,
            &mut self.mid_p,
        );
        for k in 0..n {
            self.new_x[k] = self.x[k] + h * self.mid_x[k];
            self.new_p[k] = self.p[k] + h * self.mid_p[k];
        }
        let scale = 1.0 + self.x.iter().chain(&self.p).fold(0.0_f64, |m, v| m.max(v.abs()));
        for iter in 1..=60 {
            let mx: Vec<f64> = (0..n).map(|k| 0.5 * (self.x[k] + self.new_x[k])).collect();
            let mp: Vec<f64> = (0..n).map(|k| 0.5 * (self.p[k] + self.new_p[k])).collect();
            Self::generator(
                self.e, &mx, &mp, t, eps, dir, &mut self.gx, &mut self.gp, &mut self.mid_x,
                &mut self.mid_p,
            );
            let mut delta = 0.0_f64;
            for k in 0..n {
                let nx = self.x[k] + h * self.mid_x[k];
                let np = self.p[k] + h * self.mid_p[k];
                delta = delta.max((nx - self.new_x[k]).abs()).max((np - self.new_p[k]).abs());
                self.new_x[k] = nx;
                self.new_p[k] = np;
            }
            if !delta.is_finite() {
                return None;
            }
            if delta <= 1e-13 * scale {
                self.x.copy_from_slice(&self.new_x);
                self.p.copy_from_slice(&self.new_p);
                return Some(iter);
            }
        }
        None
    }

    /// Adaptive integration over σ ∈ [s0, s1] along a segment.
    #[allow(clippy::too_many_arguments)]
    fn adaptive(
        &mut self,
        a: TwoTimePoint,
        dir: (f64, f64),
        s0: f64,
        s1: f64,
        tol: f64,
        sigma_offset: f64,
        rec: Option<&mut Recorder<'_>>,
    ) -> Result<(usize, usize)> {
        let n = self.n;
        self.y[..n].copy_from_slice(&self.x);
        self.y[n..].copy_from_slice(&self.p);
        let e = self.e;
        let mut gx = vec![0.0; n];
        let mut gp = vec![0.0; n];
        let f = |s: f64, y: &[f64], dy: &mut [f64]| {
            let (t, eps) = (a.t + dir.0 * s, a.eps + dir.1 * s);
            let (dx, dp) = dy.split_at_mut(n);
            Self::generator(e, &y[..n], &y[n..], t, eps, dir, &mut gx, &mut gp, dx, dp);
        };
        let before = self.dopri.stats;
        let mut rec = rec;
        let mut y = std::mem::take(&mut self.y);
        let res = self.dopri.integrate(f, &mut y, s0, s1, Tolerance::new(tol), |s, y| {
            let (t, eps) = (a.t + dir.0 * s, a.eps + dir.1 * s);
            if eps <= 0.0 {
                return Err(Error::Singular { eps });
            }
            let m = max_abs(y.iter());
            if !(m <= DIVERGENCE_BOUND) {
                return Err(Error::Divergence { t, norm: m });
            }
            if let Some(r) = rec.as_deref_mut() {
                r.offer(sigma_offset + s, &y[..n], &y[n..], t, eps, false);
            }
            Ok(())
        });
        self.x.copy_from_slice(&y[..n]);
        self.p.copy_from_slice(&y[n..]);
        self.y = y;
        let after = self.dopri.stats;
        match res {
            Ok(()) => Ok((after.accepted - before.accepted, after.rejected - before.rejected)),
            Err(Error::Integration { reason, .. }) => Err(Error::Integration {
                t: a.t + dir.0 * s1,
                eps: a.eps + dir.1 * s1,
                reason,
            }),
            Err(other) => Err(other),
        }
    }

    fn run_segment(
        &mut self,
        a: TwoTimePoint,
        b: TwoTimePoint,
        settings: SegmentSettings,
        sigma_offset: f64,
        mut rec: Option<&mut Recorder<'_>>,
    ) -> Result<StepStats> {
        let len = seg_len(a, b);
        let mut stats = StepStats::default();
        if len == 0.0 {
            return Ok(stats);
        }
        let dir = ((b.t - a.t) / len, (b.eps - a.eps) / len);
        match settings.scheme {
            Scheme::Splitting4 => {
                if a.eps != b.eps {
                    return Err(Error::InvalidParams(
                        "splitting4 is only valid on constant-eps segments".into(),
                    ));
                }
                let steps = (len / settings.step).ceil().max(1.0) as usize;
                let h = (b.t - a.t) / steps as f64;
                let mut t = a.t;
                for i in 0..steps {
                    self.splitting_step(&mut t, h, a.eps);
                    if i + 1 == steps {
                        t = b.t;
                    }
                    if i % 64 == 63 || i + 1 == steps {
                        self.check_bounds(t)?;
                    }
                    if let Some(r) = rec.as_deref_mut() {
                        let sigma = sigma_offset + (i + 1) as f64 * h.abs();
                        r.offer(sigma, &self.x, &self.p, t, a.eps, false);
                    }
                }
                stats.steps = steps;
            }
            Scheme::ImplicitMidpoint => {
                let steps = (len / settings.step).ceil().max(1.0) as usize;
                let h = len / steps as f64;
                for i in 0..steps {
                    let s = i as f64 * h;
                    match self.midpoint_step(a, dir, s, h) {
                        Some(it) => stats.max_iterations = stats.max_iterations.max(it),
                        None => {
                            let (acc, rej) =
                                self.adaptive(a, dir, s, s + h, settings.tol, sigma_offset, None)?;
                            stats.fallbacks += 1;
                            stats.steps += acc;
                            stats.rejected += rej;
                        }
                    }
                    let s1 = s + h;
                    let (t, eps) = (a.t + dir.0 * s1, a.eps + dir.1 * s1);
                    self.check_bounds(t)?;
                    if let Some(r) = rec.as_deref_mut() {
                        r.offer(sigma_offset + s1, &self.x, &self.p, t, eps, false);
                    }
                }
                stats.steps += steps;
            }
            Scheme::RkAdaptive => {
                let (acc, rej) = self.adaptive(a, dir, 0.0, len, settings.tol, sigma_offset, rec)?;
                stats.steps = acc;
                stats.rejected = rej;
            }
        }
        Ok(stats)
    }
}

fn check_start(params: &ModelParams, state: &PhaseState, from: TwoTimePoint) -> Result<()> {
    let n = params.n_dof();
    if state.x.len() != n || state.p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: state.x.len() });
    }
    if state.t != from.t || state.eps != from.eps {
        return Err(Error::Precondition(format!(
            "state is at (t={}, eps={}) but the segment starts at (t={}, eps={})",
            state.t, state.eps, from.t, from.eps
        )));
    }
    if !state.is_finite() {
        return Err(Error::InvalidParams("non-finite initial state".into()));
    }
    Ok(())
}

fn check_segment(from: TwoTimePoint, to: TwoTimePoint) -> Result<()> {
    // A linear segment between two points with ε > 0 never reaches ε = 0.
    model::check_eps(from.eps)?;
    model::check_eps(to.eps)
}

/// Advance `state` from `from` to `to` along a straight segment.
pub fn evolve_segment(
    params: &ModelParams,
    state: &PhaseState,
    from: TwoTimePoint,
    to: TwoTimePoint,
    settings: SegmentSettings,
) -> Result<PhaseState> {
    check_start(params, state, from)?;
    check_segment(from, to)?;
    settings.validate()?;
    let mut stepper = Stepper::new(params.e(), state);
    stepper.run_segment(from, to, settings, 0.0, None)?;
    Ok(PhaseState { x: stepper.x, p: stepper.p, t: to.t, eps: to.eps })
}

/// Chain segments along `path`, recording states per `sampling`.
pub fn evolve_path(
    params: &ModelParams,
    state: &PhaseState,
    path: &PathSpec,
    sampling: Sampling,
) -> Result<TrajectoryRecord> {
    check_start(params, state, path.start())?;
    let total = path.length();
    let mut rec = TrajectoryRecord::new(params.n_dof(), path.clone(), params.clone());
    let mut stepper = Stepper::new(params.e(), state);
    let mut stats = StepStats::default();
    {
        let mut recorder = Recorder::new(&mut rec, sampling, total);
        recorder.offer(0.0, &state.x, &state.p, state.t, state.eps, true);
        let mut offset = 0.0;
        for (w, settings) in path.waypoints.windows(2).zip(&path.segments) {
            let s = stepper.run_segment(w[0], w[1], *settings, offset, Some(&mut recorder))?;
            stats.merge(s);
            offset += seg_len(w[0], w[1]);
        }
        let end = path.end();
        recorder.offer(total, &stepper.x, &stepper.p, end.t, end.eps, true);
    }
    // Pin the final sample exactly at the endpoint.
    if let Some(last) = rec.sigma.last_mut() {
        *last = total;
        let i = rec.t.len() - 1;
        rec.t[i] = path.end().t;
        rec.eps[i] = path.end().eps;
    }
    rec.stats = stats;
    Ok(rec)
}

/// Endpoint of `path` without storing samples.
pub fn evolve_to_end(params: &ModelParams, state: &PhaseState, path: &PathSpec) -> Result<PhaseState> {
    let rec = evolve_path(params, state, path, Sampling::Endpoints)?;
    Ok(rec.last().expect("record holds the endpoint"))
}
