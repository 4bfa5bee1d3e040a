//! Phase-averaged trajectory ensembles and parameter sweeps.
//!
//! Each trajectory starts in the pre-transition harmonic wells with fixed
//! actions and uniformly random angles drawn from its own `(seed, index)`
//! stream, is evolved to the end of the path, and contributes the change
//! of its adiabatic invariants. Results are reduced in index order, so the
//! means do not depend on the number of worker threads.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{self, Method, SeparatrixRule};
use crate::error::{Error, Result};
use crate::model::{ModelParams, TwoTimePoint};
use crate::par::{self, Execution};
use crate::pathintegrate::{evolve_path, PathSpec, Sampling, SegmentSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    pub i_initial: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub integrator: SegmentSettings,
    /// Route through the (t, ε) plane; `None` means fixed ε from `t_start`
    /// to `t_end`.
    #[serde(default)]
    pub path: Option<PathSpec>,
    /// Length of the final stretch used to extract the invariants.
    pub window: f64,
    pub method: Method,
    #[serde(default)]
    pub separatrix: SeparatrixRule,
    /// Largest tolerated fraction of failed trajectories.
    pub max_failure_fraction: f64,
}

impl EnsembleConfig {
    /// Defaults for the two-mode model: t ∈ (−500, 1500), splitting step
    /// 0.002, 600 trajectories, loop-area extraction over the last 60.
    pub fn new(params: ModelParams, i_initial: Vec<f64>) -> Self {
        Self {
            params,
            i_initial,
            t_start: -500.0,
            t_end: 1500.0,
            n_traj: 600,
            seed: 0,
            integrator: SegmentSettings::splitting4(0.002),
            path: None,
            window: 60.0,
            method: Method::LoopArea,
            separatrix: SeparatrixRule::SmallestE,
            max_failure_fraction: 0.01,
        }
    }

    pub fn resolved_path(&self) -> Result<PathSpec> {
        match &self.path {
            Some(p) => Ok(p.clone()),
            None => PathSpec::physical(self.t_start, self.t_end, self.params.epsilon(), self.integrator),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.params.n_dof();
        if self.i_initial.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: self.i_initial.len() });
        }
        if let Some(bad) = self.i_initial.iter().find(|i| !(**i > 0.0 && i.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "initial actions must be positive (I = 0 sits on the unstable manifold), got {bad}"
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParams("n_traj must be at least 1".into()));
        }
        if !(self.t_start < self.t_end) {
            return Err(Error::InvalidParams(format!(
                "t_start < t_end required, got {} and {}",
                self.t_start, self.t_end
            )));
        }
        if !(self.window > 0.0) {
            return Err(Error::InvalidParams(format!("window must be positive, got {}", self.window)));
        }
        if !(0.0..1.0).contains(&self.max_failure_fraction) {
            return Err(Error::InvalidParams("max_failure_fraction must lie in [0, 1)".into()));
        }
        let path = self.resolved_path()?;
        let start = path.start();
        if start != TwoTimePoint::new(self.t_start, self.params.epsilon())? {
            return Err(Error::InvalidParams(format!(
                "path starts at {start:?}, expected (t_start, epsilon)"
            )));
        }
        if path.end().t != self.t_end {
            return Err(Error::InvalidParams("path must end at t_end".into()));
        }
        let omegas = actions::harmonic_omegas(&self.params, self.t_start)?;
        for (i, w) in self.i_initial.iter().zip(&omegas) {
            let q = actions::quartic_correction(*i, *w);
            if q >= actions::QUARTIC_THRESHOLD {
                return Err(Error::Precondition(format!(
                    "quartic correction {q:.3e} at t_start = {}",
                    self.t_start
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOutcome {
    pub delta_i: Vec<f64>,
    pub i_final: Vec<f64>,
    pub branch: Vec<i8>,
}

/// Run trajectory `index` of the ensemble.
pub fn run_one(cfg: &EnsembleConfig, path: &PathSpec, index: u64) -> Result<TrajectoryOutcome> {
    let n = cfg.params.n_dof();
    let mut rng = par::stream_rng(cfg.seed, index);
    let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let state = actions::init_from_action_angle(&cfg.params, cfg.t_start, &cfg.i_initial, &phi)?;
    let rec = evolve_path(&cfg.params, &state, path, Sampling::Tail { length: cfg.window, every: 1 })?;
    let end = path.end();
    let final_params = cfg.params.with_epsilon(end.eps)?;
    let est = actions::extract_final_invariants(
        &final_params,
        &rec,
        (end.t - cfg.window, end.t),
        cfg.method,
        &cfg.separatrix,
    )?;
    if est.i_value.iter().any(|v| !v.is_finite()) {
        return Err(Error::Extraction("non-finite invariant".into()));
    }
    let delta_i = actions::delta_invariants(&final_params, &cfg.i_initial, &est.i_value, &cfg.separatrix)?;
    Ok(TrajectoryOutcome { delta_i, i_final: est.i_value, branch: est.branch })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub mean_delta_i: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_i_final: Vec<f64>,
    pub n_traj: usize,
    pub n_failed: usize,
    /// Fraction of successful runs on the positive branch of the
    /// separatrix-crossing mode(s).
    pub positive_branch_fraction: f64,
    pub config: EnsembleConfig,
    pub wall_time_s: f64,
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    run_ensemble_with(cfg, Execution::Parallel)
}

pub fn run_ensemble_with(cfg: &EnsembleConfig, exec: Execution) -> Result<EnsembleResult> {
    cfg.validate()?;
    let path = cfg.resolved_path()?;
    let clock = Instant::now();
    let outcomes = par::map_indexed(cfg.n_traj, exec, |k| run_one(cfg, &path, k as u64));
    let n = cfg.params.n_dof();
    let mut ok: Vec<TrajectoryOutcome> = Vec::with_capacity(outcomes.len());
    let mut n_failed = 0;
    let mut first_failure = None;
    for o in outcomes {
        match o {
            Ok(v) => ok.push(v),
            // Divergence, step underflow and failed extraction count as
            // trajectory failures; anything else is a configuration error.
            Err(e @ (Error::Divergence { .. } | Error::Integration { .. } | Error::Extraction(_))) => {
                n_failed += 1;
                first_failure.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if n_failed as f64 > cfg.max_failure_fraction * cfg.n_traj as f64 || ok.is_empty() {
        return Err(Error::TooManyFailures { failed: n_failed, total: cfg.n_traj });
    }
    let mut mean_delta_i = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    let mut mean_i_final = Vec::with_capacity(n);
    for k in 0..n {
        let d: Vec<f64> = ok.iter().map(|o| o.delta_i[k]).collect();
        let (m, se) = crate::stats::mean_stderr(&d);
        mean_delta_i.push(m);
        stderr.push(se);
        let f: Vec<f64> = ok.iter().map(|o| o.i_final[k]).collect();
        mean_i_final.push(crate::stats::mean_stderr(&f).0);
    }
    let (mut pos, mut tot) = (0usize, 0usize);
    for o in &ok {
        for b in o.branch.iter().filter(|b| **b != 0) {
            tot += 1;
            pos += usize::from(*b > 0);
        }
    }
    Ok(EnsembleResult {
        mean_delta_i,
        stderr,
        mean_i_final,
        n_traj: cfg.n_traj,
        n_failed,
        positive_branch_fraction: if tot == 0 { f64::NAN } else { pos as f64 / tot as f64 },
        config: cfg.clone(),
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    /// Sets every initial action to the swept value.
    IInitial,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::IInitial => "i_initial",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub result: EnsembleResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

/// Configuration used for the `j`-th value of a sweep; the seed is offset
/// by `j` so every point has its own reproducible streams.
pub fn sweep_config(cfg: &EnsembleConfig, axis: SweepAxis, value: f64, j: usize) -> Result<EnsembleConfig> {
    let mut c = cfg.clone();
    c.seed = cfg.seed.wrapping_add(j as u64);
    match axis {
        SweepAxis::Epsilon => {
            if cfg.path.is_some() {
                return Err(Error::InvalidParams("an epsilon sweep needs the default physical path".into()));
            }
            c.params = cfg.params.with_epsilon(value)?;
        }
        SweepAxis::IInitial => c.i_initial = vec![value; cfg.params.n_dof()],
    }
    Ok(c)
}

pub fn sweep(cfg: &EnsembleConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    sweep_with(cfg, axis, values, Execution::Parallel)
}

pub fn sweep_with(cfg: &EnsembleConfig, axis: SweepAxis, values: &[f64], exec: Execution) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::InvalidParams("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .enumerate()
        .map(|(j, v)| sweep_config(cfg, axis, *v, j))
        .collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.validate()?;
    }
    let mut points = Vec::with_capacity(values.len());
    for (v, c) in values.iter().zip(&configs) {
        points.push(SweepPoint { axis_value: *v, result: run_ensemble_with(c, exec)? });
    }
    Ok(SweepTable { axis, points })
}

impl SweepTable {
    /// `axis_value,mean_dI1,stderr_dI1,…,n_traj,n_failed`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.points.first().map_or(0, |p| p.result.mean_delta_i.len());
        let mut header = String::from("axis_value");
        for k in 1..=n {
            header.push_str(&format!(",mean_dI{k},stderr_dI{k}"));
        }
        header.push_str(",n_traj,n_failed");
        writeln!(w, "{header}")?;
        for p in &self.points {
            write!(w, "{}", p.axis_value)?;
            for k in 0..n {
                write!(w, ",{},{}", p.result.mean_delta_i[k], p.result.stderr[k])?;
            }
            writeln!(w, ",{},{}", p.result.n_traj, p.result.n_failed)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// Pool the points of one mode: weighted mean and its standard error.
    pub fn pooled(&self, dof: usize) -> (f64, f64) {
        let (mut sw, mut swx) = (0.0, 0.0);
        for p in &self.points {
            let w = 1.0 / p.result.stderr[dof].powi(2);
            sw += w;
            swx += w * p.result.mean_delta_i[dof];
        }
        (swx / sw, 1.0 / sw.sqrt())
    }
}
