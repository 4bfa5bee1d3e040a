//! Named, reproducible experiments.
//!
//! Each experiment reads an [`ExperimentConfig`], writes its data (CSV),
//! a JSON summary and an echo of the resolved config into an output
//! directory, and reports the pass/fail status of the thresholds it
//! checks.
//!
//! Config precedence, lowest to highest: built-in defaults of the chosen
//! experiment, the config file, `--set key=value` overrides, dedicated
//! flags such as `--seed`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::actions::{self, Method, SeparatrixRule};
use crate::ensemble::{self, EnsembleConfig, SweepAxis, SweepTable};
use crate::error::{Error, Result};
use crate::integrability::{self, SampleBox};
use crate::model::{HprimeForm, ModelConfig, ModelParams, PhaseState, PhysicalUnits};
use crate::painleve2::{self, P2Settings};
use crate::par::{self, Execution};
use crate::pathintegrate::{self, PathSpec, Sampling, Scheme, SegmentSettings, TrajectoryRecord};
use crate::spectrum;
use crate::stats;

pub const DEFAULT_SEED: u64 = 42;

/// Empirical constants of the excitation laws.
pub const C1: f64 = 1.14;
pub const C2: f64 = 1.19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Trajectory,
    SweepEps,
    SweepAction,
    PathCompare,
    VerifyPair,
    P2Connection,
    KzScaling,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Trajectory,
        Experiment::SweepEps,
        Experiment::SweepAction,
        Experiment::PathCompare,
        Experiment::VerifyPair,
        Experiment::P2Connection,
        Experiment::KzScaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Trajectory => "trajectory",
            Experiment::SweepEps => "sweep-eps",
            Experiment::SweepAction => "sweep-action",
            Experiment::PathCompare => "path-compare",
            Experiment::VerifyPair => "verify-pair",
            Experiment::P2Connection => "p2-connection",
            Experiment::KzScaling => "kz-scaling",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSection {
    pub t0: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    /// Initial actions; used instead of `x`, `p` when given.
    pub i: Option<Vec<f64>>,
    /// Initial angles; random from the seed when absent.
    pub phi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub n_traj: Option<usize>,
    pub window: Option<f64>,
    pub method: Option<Method>,
    /// Trajectory CSV row count.
    pub samples: Option<usize>,
    /// Start of the spectral window.
    pub spectrum_from: Option<f64>,
    /// Modes that cross the separatrix; smallest e_k when absent.
    pub separatrix_dofs: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub scheme: Option<Scheme>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub values: Option<Vec<f64>>,
    /// Fixed initial action of an ε sweep.
    pub i_initial: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub eps: Option<f64>,
    pub eps_detour: Option<f64>,
    pub tol: Option<f64>,
    /// Actions of the shared initial state.
    pub i: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairSection {
    pub n_dof: Option<Vec<usize>>,
    pub n_samples: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct P2Section {
    pub i_values: Option<Vec<f64>>,
    pub n_phases: Option<usize>,
    pub s_span: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KzSection {
    pub gamma: Option<Vec<f64>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Summary of a previous sweep-action run to take c₁, c₂ from.
    pub sweep_summary: Option<PathBuf>,
    /// Smallest Γ for which the large-Γ laws are reported as valid.
    pub min_valid_gamma: Option<f64>,
}

/// Everything an experiment may read; absent keys take the experiment's
/// defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub model: Option<ModelConfig>,
    pub init: InitSection,
    pub run: RunSection,
    pub integrator: IntegratorSection,
    pub sweep: SweepSection,
    pub path: PathSection,
    pub pair: PairSection,
    pub p2: P2Section,
    pub kz: KzSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse a config file (if any), then apply `key=value` overrides whose
    /// values are TOML literals (`1e-4`, `[0.2, 0.6]`, `"rk_adaptive"`).
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| Error::Config(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn model_or(&self, epsilon: f64, e: &[f64]) -> Result<ModelParams> {
        match &self.model {
            Some(m) => ModelParams::try_from(m.clone()),
            None => ModelParams::new(epsilon, e.to_vec()),
        }
    }

    fn separatrix(&self) -> SeparatrixRule {
        match &self.run.separatrix_dofs {
            Some(d) => SeparatrixRule::Dofs(d.clone()),
            None => SeparatrixRule::SmallestE,
        }
    }

    fn integrator_or(&self, default: SegmentSettings) -> SegmentSettings {
        SegmentSettings {
            scheme: self.integrator.scheme.unwrap_or(default.scheme),
            step: self.integrator.step.unwrap_or(default.step),
            tol: self.integrator.tol.unwrap_or(default.tol),
        }
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        // Bare words are strings.
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?} descends into a non-table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// One threshold an experiment checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: Experiment,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Exclusive claim on an output directory, released on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub const FILE: &'static str = ".critpass.lock";

    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(Self::FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(dir.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Run `exp` with `cfg`, writing into `out`. `seed` overrides the config.
pub fn run(exp: Experiment, cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<Report> {
    let _lock = OutputLock::acquire(out)?;
    let mut cfg = cfg.clone();
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    cfg.seed = Some(seed);
    let mut ctx = Ctx { out: out.to_path_buf(), files: Vec::new() };
    let echo = ctx.path("config.toml");
    fs::write(&echo, format!("# experiment = {}\n{}", exp.as_str(), cfg.to_toml_string()?))?;
    let (checks, summary) = match exp {
        Experiment::Trajectory => run_trajectory(&cfg, &mut ctx)?,
        Experiment::SweepEps => run_sweep_eps(&cfg, &mut ctx)?,
        Experiment::SweepAction => run_sweep_action(&cfg, &mut ctx)?,
        Experiment::PathCompare => run_path_compare(&cfg, &mut ctx)?,
        Experiment::VerifyPair => run_verify_pair(&cfg, &mut ctx)?,
        Experiment::P2Connection => run_p2_connection(&cfg, &mut ctx)?,
        Experiment::KzScaling => run_kz_scaling(&cfg, &mut ctx)?,
    };
    let summary = json!({
        "experiment": exp.as_str(),
        "seed": seed,
        "passed": checks.iter().all(|c| c.passed),
        "checks": checks,
        "summary": summary,
    });
    let path = ctx.path("summary.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &summary)?;
    let summary = summary["summary"].clone();
    Ok(Report { experiment: exp, seed, checks, summary, files: ctx.files })
}

struct Ctx {
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Ctx {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.files.push(p.clone());
        p
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }
}

type Outcome = Result<(Vec<Check>, Value)>;

// ---------------------------------------------------------------- trajectory

/// Dominant frequency of a confined mode against the small-oscillation value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub dof: usize,
    pub omega: f64,
    pub predicted: f64,
    /// Mean X_k² over the spectral window relative to the mean of s/2.
    /// The harmonic prediction holds only when this is small.
    pub amplitude_ratio: f64,
}

impl SpectralLine {
    pub const MAX_AMPLITUDE_RATIO: f64 = 0.01;

    pub fn is_harmonic(&self) -> bool {
        self.amplitude_ratio < Self::MAX_AMPLITUDE_RATIO
    }
}

/// Post-transition diagnostics of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAnalysis {
    pub condensate_dof: usize,
    pub branch: i8,
    /// Final-10% window.
    pub window: (f64, f64),
    /// Mean of each mode over the window.
    pub mean_x: Vec<f64>,
    /// Mean |X_c| over the window divided by the mean of √((t − 2εe_c)/2).
    pub tracking_ratio: f64,
    /// Same with the radius |X| in place of |X_c|.
    pub radial_ratio: f64,
    /// Worst |X_c|/√(s/2) averaged over single oscillation periods of X_c.
    pub worst_period_ratio: f64,
    pub spectral: Vec<SpectralLine>,
    pub final_invariants: Option<Vec<f64>>,
}

/// Analyse samples covering at least the final 10% of a run that started
/// at `t_start`.
pub fn analyse_trajectory(
    params: &ModelParams,
    rec: &TrajectoryRecord,
    t_start: f64,
    spectrum_from: f64,
    window: f64,
    rule: &SeparatrixRule,
) -> Result<TrajectoryAnalysis> {
    let t_end = *rec.t.last().ok_or_else(|| Error::Extraction("empty trajectory".into()))?;
    let lo = t_end - 0.1 * (t_end - t_start);
    let tail = rec.window(lo, t_end);
    let c = params.condensing_dof();
    let n = params.n_dof();
    let t_crit = 2.0 * params.epsilon() * params.e()[c];
    if !(lo > t_crit) {
        return Err(Error::Precondition(format!(
            "final window starts at t = {lo}, before the transition at t = {t_crit}"
        )));
    }
    let cnt = tail.len() as f64;
    let mean_x: Vec<f64> = (0..n).map(|k| tail.x_series(k).iter().sum::<f64>() / cnt).collect();
    let xc = tail.x_series(c);
    let center: Vec<f64> = tail.t.iter().map(|t| ((t - t_crit) / 2.0).sqrt()).collect();
    let mean_center = center.iter().sum::<f64>() / cnt;
    let tracking_ratio = xc.iter().map(|v| v.abs()).sum::<f64>() / cnt / mean_center;
    let radial_ratio = (0..tail.len())
        .map(|i| tail.x(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum::<f64>()
        / cnt
        / mean_center;
    let branch: i8 = if mean_x[c] < 0.0 { -1 } else { 1 };
    // Single-period averages between upward crossings of |X_c| − √(s/2).
    let resid: Vec<f64> = (0..tail.len()).map(|i| xc[i].abs() - center[i]).collect();
    let mut worst = 1.0_f64;
    let mut start: Option<usize> = None;
    for i in 0..resid.len().saturating_sub(1) {
        if resid[i] < 0.0 && resid[i + 1] >= 0.0 {
            if let Some(a) = start {
                let r = (a..=i).map(|j| xc[j].abs()).sum::<f64>() / (a..=i).map(|j| center[j]).sum::<f64>();
                if (r - 1.0).abs() > (worst - 1.0).abs() {
                    worst = r;
                }
            }
            start = Some(i + 1);
        }
    }
    let mut spectral = Vec::new();
    let sp = rec.window(spectrum_from, t_end);
    // Thin to about ten samples per unit time; the confined frequencies are O(1) or below.
    let stride = ((0.1 / (sp.t.get(1).unwrap_or(&0.0) - sp.t.first().unwrap_or(&0.0)).max(1e-12)) as usize).max(1);
    let ts: Vec<f64> = sp.t.iter().step_by(stride).copied().collect();
    for k in (0..n).filter(|k| *k != c) {
        let w2 = 2.0 * params.epsilon() * (params.e()[k] - params.e()[c]);
        if w2 > 0.0 && ts.len() >= 8 {
            let ys: Vec<f64> = sp.x_series(k).into_iter().step_by(stride).collect();
            let predicted = w2.sqrt();
            let omega = spectrum::dominant_frequency(&ts, &ys, 0.2 * predicted, 5.0 * predicted)?;
            let msq = ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64;
            let half_s = ts.iter().map(|t| (t - t_crit) / 2.0).sum::<f64>() / ts.len() as f64;
            spectral.push(SpectralLine { dof: k, omega, predicted, amplitude_ratio: msq / half_s });
        }
    }
    let final_invariants = actions::extract_final_invariants(
        params,
        rec,
        (t_end - window, t_end),
        Method::LoopArea,
        rule,
    )
    .ok()
    .map(|e| e.i_value);
    Ok(TrajectoryAnalysis {
        condensate_dof: c,
        branch,
        window: (lo, t_end),
        mean_x,
        tracking_ratio,
        radial_ratio,
        worst_period_ratio: worst,
        spectral,
        final_invariants,
    })
}

/// Asymmetry checks: confined modes average to < 0.05·√(t/2) over the final
/// window, the condensate tracks its branch within 5%.
pub fn asymmetry_checks(a: &TrajectoryAnalysis, t_end: f64) -> Vec<Check> {
    let bound = 0.05 * (t_end / 2.0).sqrt();
    let mut checks = Vec::new();
    for (k, m) in a.mean_x.iter().enumerate().filter(|(k, _)| *k != a.condensate_dof) {
        checks.push(Check::new(
            format!("confined_mean_x{}", k + 1),
            m.abs() < bound,
            format!("|mean X{}| = {:.4} (bound {:.4})", k + 1, m.abs(), bound),
        ));
    }
    checks.push(Check::new(
        "condensate_tracking",
        (a.tracking_ratio - 1.0).abs() < 0.05,
        format!(
            "mean|X{}| / mean sqrt(s/2) = {:.5} (radial {:.5}, worst single period {:.4})",
            a.condensate_dof + 1,
            a.tracking_ratio,
            a.radial_ratio,
            a.worst_period_ratio
        ),
    ));
    checks
}

/// Frequency checks for the confined modes that oscillate harmonically.
pub fn spectral_checks(a: &TrajectoryAnalysis) -> Vec<Check> {
    a.spectral
        .iter()
        .filter(|l| l.is_harmonic())
        .map(|l| {
            Check::new(
                format!("confined_frequency_x{}", l.dof + 1),
                (l.omega / l.predicted - 1.0).abs() < 0.02,
                format!("omega = {:.5}, predicted {:.5}", l.omega, l.predicted),
            )
        })
        .collect()
}

fn run_trajectory(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let params = cfg.model_or(0.001, &[-0.5, 0.5])?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let t0 = cfg.init.t0.or(cfg.run.t_start).unwrap_or(-3000.0);
    let t1 = cfg.run.t_end.unwrap_or(2000.0);
    let n = params.n_dof();
    let state = match &cfg.init.i {
        Some(i) => {
            let phi = match &cfg.init.phi {
                Some(p) => p.clone(),
                None => {
                    let mut rng = par::stream_rng(seed, 0);
                    (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
                }
            };
            actions::init_from_action_angle(&params, t0, i, &phi)?
        }
        None => {
            let x = cfg.init.x.clone().unwrap_or_else(|| fig_default(n, -0.1, -0.1));
            let p = cfg.init.p.clone().unwrap_or_else(|| fig_default(n, -20.0, 20.0));
            PhaseState::new(x, p, t0, params.epsilon())?
        }
    };
    let settings = cfg.integrator_or(SegmentSettings::splitting4(5e-4));
    let path = PathSpec::physical(t0, t1, params.epsilon(), settings)?;
    let samples = cfg.run.samples.unwrap_or(20_000);
    let mut rec = pathintegrate::evolve_path(&params, &state, &path, Sampling::Uniform(samples))?;
    rec.compute_energies();
    rec.write_csv(ctx.create("trajectory.csv")?)?;

    let mut summary = json!({
        "n_dof": n,
        "t_start": t0,
        "t_end": t1,
        "final_state": rec.last(),
        "steps": rec.stats.steps,
    });
    let mut checks = Vec::new();
    let c = params.condensing_dof();
    let t_crit = 2.0 * params.epsilon() * params.e()[c];
    let lo = t1 - 0.1 * (t1 - t0);
    if lo > t_crit {
        let spectrum_from = cfg.run.spectrum_from.unwrap_or((t1 / 3.0).max(t_crit)).min(lo);
        // Slowest confined period sets the invariant window.
        let slowest = (0..n)
            .filter(|k| *k != c)
            .map(|k| 2.0 * params.epsilon() * (params.e()[k] - params.e()[c]))
            .filter(|w2| *w2 > 0.0)
            .map(|w2| 2.0 * std::f64::consts::PI / w2.sqrt())
            .fold(0.0_f64, f64::max);
        let window = cfg.run.window.unwrap_or(60.0).max(2.5 * slowest).min(t1 - lo);
        let every = match settings.scheme {
            Scheme::RkAdaptive => 1,
            _ => ((0.01 / settings.step).round() as usize).max(1),
        };
        let dense = pathintegrate::evolve_path(
            &params,
            &state,
            &path,
            Sampling::Tail { length: t1 - spectrum_from, every },
        )?;
        let a = analyse_trajectory(&params, &dense, t0, spectrum_from, window, &cfg.separatrix())?;
        checks.extend(asymmetry_checks(&a, t1));
        checks.extend(spectral_checks(&a));
        summary["analysis"] = serde_json::to_value(&a)?;
    }
    Ok((checks, summary))
}

fn fig_default(n: usize, first: f64, rest: f64) -> Vec<f64> {
    (0..n).map(|k| if k == 0 { first } else { rest }).collect()
}

// ---------------------------------------------------------------- sweeps

fn base_ensemble(cfg: &ExperimentConfig, epsilon: f64, i: f64) -> Result<EnsembleConfig> {
    let params = cfg.model_or(epsilon, &[-0.5, 0.5])?;
    let n = params.n_dof();
    let mut e = EnsembleConfig::new(params, vec![i; n]);
    e.seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    if let Some(v) = cfg.run.t_start {
        e.t_start = v;
    }
    if let Some(v) = cfg.run.t_end {
        e.t_end = v;
    }
    if let Some(v) = cfg.run.n_traj {
        e.n_traj = v;
    }
    if let Some(v) = cfg.run.window {
        e.window = v;
    }
    if let Some(v) = cfg.run.method {
        e.method = v;
    }
    e.separatrix = cfg.separatrix();
    e.integrator = cfg.integrator_or(e.integrator);
    if let Some(i) = &cfg.init.i {
        e.i_initial = i.clone();
    }
    Ok(e)
}

fn write_sweep(table: &SweepTable, ctx: &mut Ctx) -> Result<()> {
    table.write_csv(ctx.create("sweep.csv")?)?;
    table.write_json(ctx.create("sweep.json")?)?;
    Ok(())
}

/// Flatness and level checks for an ε sweep.
pub fn sweep_eps_checks(table: &SweepTable) -> Vec<Check> {
    let (m1, se1) = table.pooled(0);
    let (m2, se2) = table.pooled(1);
    let t1 = target_delta_i1(1e-4);
    let t2 = target_delta_i2();
    let mut worst = 0.0_f64;
    for p in &table.points {
        worst = worst.max((p.result.mean_delta_i[0] - m1).abs() / p.result.stderr[0]);
    }
    vec![
        Check::new("dI1_flat_in_eps", worst < 2.0, format!("max |dI1(eps) - pooled| = {worst:.2} stderr")),
        Check::new(
            "dI1_level",
            (m1 / t1 - 1.0).abs() < 0.05,
            format!("pooled dI1 = {m1:.5} +- {se1:.5}, target {t1:.5}"),
        ),
        Check::new(
            "dI2_level",
            (m2 / t2 - 1.0).abs() < 0.05,
            format!("pooled dI2 = {m2:.5} +- {se2:.5}, target {t2:.5}"),
        ),
    ]
}

/// `(1/4π)[ln(1/(2πI)) − c₁]`.
pub fn target_delta_i1(i: f64) -> f64 {
    ((1.0 / (2.0 * std::f64::consts::PI * i)).ln() - C1) / (4.0 * std::f64::consts::PI)
}

/// `c₂/(2π)`.
pub fn target_delta_i2() -> f64 {
    C2 / (2.0 * std::f64::consts::PI)
}

fn run_sweep_eps(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let i = cfg.sweep.i_initial.unwrap_or(1e-4);
    let base = base_ensemble(cfg, 1.0, i)?;
    let values = cfg.sweep.values.clone().unwrap_or_else(|| vec![0.2, 0.6, 1.0, 1.4, 1.8]);
    let table = ensemble::sweep(&base, SweepAxis::Epsilon, &values)?;
    write_sweep(&table, ctx)?;
    let (m1, se1) = table.pooled(0);
    let (m2, se2) = table.pooled(1);
    let checks = if base.params.n_dof() == 2 { sweep_eps_checks(&table) } else { Vec::new() };
    Ok((checks, json!({ "pooled_dI1": [m1, se1], "pooled_dI2": [m2, se2] })))
}

/// Line fits of an action sweep against ln(1/I).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionFit {
    pub delta_i1: stats::LineFit,
    pub delta_i2: stats::LineFit,
    /// From `ΔI₁ = slope·[ln(1/I) − ln 2π − c₁]`.
    pub c1: f64,
    pub c1_stderr: f64,
    /// Weighted mean of ΔI₂ and its error.
    pub delta_i2_level: f64,
    pub delta_i2_level_stderr: f64,
    /// `2π · level`.
    pub c2: f64,
    pub c2_stderr: f64,
}

pub fn fit_action_sweep(table: &SweepTable) -> Result<ActionFit> {
    let x: Vec<f64> = table.points.iter().map(|p| (1.0 / p.axis_value).ln()).collect();
    let col = |k: usize| -> (Vec<f64>, Vec<f64>) {
        (
            table.points.iter().map(|p| p.result.mean_delta_i[k]).collect(),
            table.points.iter().map(|p| p.result.stderr[k]).collect(),
        )
    };
    let (y1, s1) = col(0);
    let (y2, s2) = col(1);
    let f1 = stats::weighted_line_fit(&x, &y1, &s1)?;
    let f2 = stats::weighted_line_fit(&x, &y2, &s2)?;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let c1 = -f1.intercept / f1.slope - ln2pi;
    // Error from intercept and slope, ignoring their covariance.
    let c1_stderr = ((f1.intercept_stderr / f1.slope).powi(2)
        + (f1.intercept * f1.slope_stderr / (f1.slope * f1.slope)).powi(2))
    .sqrt();
    let (mut sw, mut swy) = (0.0, 0.0);
    for (y, s) in y2.iter().zip(&s2) {
        sw += 1.0 / (s * s);
        swy += y / (s * s);
    }
    let level = swy / sw;
    let level_se = 1.0 / sw.sqrt();
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(ActionFit {
        delta_i1: f1,
        delta_i2: f2,
        c1,
        c1_stderr,
        delta_i2_level: level,
        delta_i2_level_stderr: level_se,
        c2: two_pi * level,
        c2_stderr: two_pi * level_se,
    })
}

pub fn sweep_action_checks(fit: &ActionFit) -> Vec<Check> {
    let slope = 1.0 / (4.0 * std::f64::consts::PI);
    let t2 = target_delta_i2();
    vec![
        Check::new(
            "dI1_slope",
            (fit.delta_i1.slope / slope - 1.0).abs() < 0.05,
            format!("slope = {:.5} +- {:.5}, target {slope:.5}", fit.delta_i1.slope, fit.delta_i1.slope_stderr),
        ),
        Check::new(
            "c1",
            (fit.c1 - C1).abs() < 0.1,
            format!("c1 = {:.4} +- {:.4}, target {C1}", fit.c1, fit.c1_stderr),
        ),
        Check::new(
            "dI2_level",
            (fit.delta_i2_level / t2 - 1.0).abs() < 0.05,
            format!("dI2 = {:.5} +- {:.5}, target {t2:.5}", fit.delta_i2_level, fit.delta_i2_level_stderr),
        ),
        Check::new(
            "dI2_zero_slope",
            fit.delta_i2.slope.abs() < 2.0 * fit.delta_i2.slope_stderr,
            format!("slope = {:.5} +- {:.5}", fit.delta_i2.slope, fit.delta_i2.slope_stderr),
        ),
    ]
}

fn run_sweep_action(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let base = base_ensemble(cfg, 1.0, 1e-4)?;
    let values = cfg.sweep.values.clone().unwrap_or_else(|| vec![1e-5, 1e-4, 1e-3, 1e-2]);
    let table = ensemble::sweep(&base, SweepAxis::IInitial, &values)?;
    write_sweep(&table, ctx)?;
    let fit = fit_action_sweep(&table)?;
    let checks = if base.params.n_dof() == 2 { sweep_action_checks(&fit) } else { Vec::new() };
    Ok((checks, json!({ "fit": fit })))
}

// ---------------------------------------------------------------- paths

/// Invariants of every mode from a short fixed-ε evolution starting at
/// `state` (loop areas over `span` in t).
pub fn local_invariants(params: &ModelParams, state: &PhaseState, span: f64, tol: f64) -> Result<Vec<f64>> {
    let params = params.with_epsilon(state.eps)?;
    let path = PathSpec::physical(state.t, state.t + span, state.eps, SegmentSettings::rk_adaptive(tol))?;
    // Dense output for the loop integrals: short adaptive legs, at least 64
    // per period of the fastest mode.
    let span_e = params.e().iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let omega_max = (2.0 * (state.t.abs() + 2.0 * state.eps * span_e) + 1.0).sqrt();
    let pieces = ((span * omega_max * 64.0 / std::f64::consts::TAU).ceil() as usize).max(4000);
    let h = span / pieces as f64;
    let mut states = vec![state.clone()];
    let mut cur = state.clone();
    for k in 0..pieces {
        let a = crate::model::TwoTimePoint::new(state.t + k as f64 * h, state.eps)?;
        let b = crate::model::TwoTimePoint::new(state.t + (k + 1) as f64 * h, state.eps)?;
        cur = pathintegrate::evolve_segment(&params, &cur, a, b, SegmentSettings::rk_adaptive(tol))?;
        states.push(cur.clone());
    }
    let rec = TrajectoryRecord::from_states(params.clone(), path, &states);
    let c = params.condensing_dof();
    let t_crit = 2.0 * params.epsilon() * params.e()[c];
    let window = (state.t, state.t + span);
    if state.t < t_crit {
        (0..params.n_dof())
            .map(|k| Ok(actions::extract_invariant_loop(&rec, k, window, actions::Center::Fixed(0.0))?.value))
            .collect()
    } else {
        Ok(actions::extract_final_invariants(&params, &rec, window, Method::LoopArea, &SeparatrixRule::SmallestE)?
            .i_value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegDrift {
    pub t: f64,
    pub eps_from: f64,
    pub eps_to: f64,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub max_relative_drift: f64,
}

/// Invariant change across a vertical leg at fixed `state.t`.
pub fn vertical_leg_drift(
    params: &ModelParams,
    state: &PhaseState,
    eps_to: f64,
    span: f64,
    tol: f64,
) -> Result<LegDrift> {
    let before = local_invariants(params, state, span, tol)?;
    let a = state.point();
    let b = crate::model::TwoTimePoint::new(state.t, eps_to)?;
    let moved = pathintegrate::evolve_segment(params, state, a, b, SegmentSettings::rk_adaptive(tol))?;
    let after = local_invariants(params, &moved, span, tol)?;
    let max_relative_drift = before
        .iter()
        .zip(&after)
        .map(|(x, y)| (y - x).abs() / x.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(LegDrift { t: state.t, eps_from: state.eps, eps_to, before, after, max_relative_drift })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub initial: PhaseState,
    pub physical: PhaseState,
    pub detour: PhaseState,
    pub relative_discrepancy: f64,
    pub legs: Vec<LegDrift>,
}

/// Evolve one state along the fixed-ε route and along the ε detour.
pub fn compare_paths(
    params: &ModelParams,
    state: &PhaseState,
    t1: f64,
    eps_detour: f64,
    tol: f64,
) -> Result<PathComparison> {
    let s = SegmentSettings::rk_adaptive(tol);
    let physical = PathSpec::physical(state.t, t1, state.eps, s)?;
    let detour = PathSpec::detour(state.t, t1, state.eps, eps_detour, s, s)?;
    let a = pathintegrate::evolve_to_end(params, state, &physical)?;
    let b = pathintegrate::evolve_to_end(params, state, &detour)?;
    Ok(PathComparison {
        initial: state.clone(),
        relative_discrepancy: b.rel_distance(&a),
        physical: a,
        detour: b,
        legs: Vec::new(),
    })
}

fn run_path_compare(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let t0 = cfg.path.t0.unwrap_or(-100.0);
    let t1 = cfg.path.t1.unwrap_or(100.0);
    let eps = cfg.path.eps.unwrap_or(1.0);
    let eps_d = cfg.path.eps_detour.unwrap_or(3.0);
    let tol = cfg.path.tol.unwrap_or(1e-10);
    let params = cfg.model_or(eps, &[-0.5, 0.5])?.with_epsilon(eps)?;
    let n = params.n_dof();
    let i = cfg.path.i.clone().unwrap_or_else(|| vec![1e-2; n]);
    let mut rng = par::stream_rng(cfg.seed.unwrap_or(DEFAULT_SEED), 0);
    let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let state = actions::init_from_action_angle(&params, t0, &i, &phi)?;
    let mut cmp = compare_paths(&params, &state, t1, eps_d, tol)?;
    cmp.legs.push(vertical_leg_drift(&params, &state, eps_d, 20.0, tol)?);
    let at_end = pathintegrate::evolve_to_end(
        &params,
        &state,
        &PathSpec::physical(t0, t1, eps, SegmentSettings::rk_adaptive(tol))?,
    )?;
    let back = at_end.clone();
    // The last leg runs from the detour height down to ε.
    let up = pathintegrate::evolve_segment(
        &params,
        &back,
        back.point(),
        crate::model::TwoTimePoint::new(t1, eps_d)?,
        SegmentSettings::rk_adaptive(tol),
    )?;
    cmp.legs.push(vertical_leg_drift(&params, &up, eps, 20.0, tol)?);

    let mut w = ctx.create("path_compare.csv")?;
    writeln!(w, "path,t,eps,{}", coord_header(n))?;
    for (name, s) in [("initial", &cmp.initial), ("physical", &cmp.physical), ("detour", &cmp.detour)] {
        writeln!(w, "{name},{},{},{}", s.t, s.eps, join(s.x.iter().chain(&s.p)))?;
    }
    w.flush()?;
    let checks = vec![Check::new(
        "path_independence",
        cmp.relative_discrepancy < 1e-4,
        format!("|dz|/|z| = {:.3e} (tol {tol:.0e})", cmp.relative_discrepancy),
    )];
    Ok((checks, serde_json::to_value(&cmp)?))
}

fn coord_header(n: usize) -> String {
    let xs = (1..=n).map(|k| format!("x{k}"));
    let ps = (1..=n).map(|k| format!("p{k}"));
    xs.chain(ps).collect::<Vec<_>>().join(",")
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

// ---------------------------------------------------------------- pair

/// Coefficients evenly spaced on [−½, ½].
pub fn spread_coefficients(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|k| -0.5 + k as f64 / (n - 1) as f64).collect()
}

fn run_verify_pair(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let dims = cfg.pair.n_dof.clone().unwrap_or_else(|| vec![2, 3, 5]);
    let n_samples = cfg.pair.n_samples.unwrap_or(1000);
    let tol = cfg.pair.tol.unwrap_or(1e-10);
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut text = String::new();
    for n in dims {
        let params = match &cfg.model {
            Some(m) if m.e.len() == n => ModelParams::try_from(m.clone())?,
            Some(m) => ModelParams::new(m.epsilon, spread_coefficients(n))?,
            None => ModelParams::new(1.0, spread_coefficients(n))?,
        };
        for form in [HprimeForm::Corrected, HprimeForm::Literal] {
            let r = integrability::verify_pair(&params, form, n_samples, SampleBox::default(), seed)?;
            text.push_str(&format!("[n{n}.{}]\n{}\n", form.as_str(), r.to_text(tol)));
            if form == HprimeForm::Corrected {
                checks.push(Check::new(
                    format!("corrected_pair_n{n}"),
                    r.passes(tol),
                    format!(
                        "bracket {:.3e}, curvature {:.3e}",
                        r.max_bracket_residual, r.max_curvature_residual
                    ),
                ));
            }
            reports.push(r);
        }
    }
    ctx.create("verify_pair.txt")?.write_all(text.as_bytes())?;
    Ok((checks, json!({ "tolerance": tol, "reports": reports })))
}

// ---------------------------------------------------------------- P2

fn run_p2_connection(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let values = cfg.p2.i_values.clone().unwrap_or_else(|| vec![1e-4, 1e-3, 1e-2, 1e-1]);
    let n_phases = cfg.p2.n_phases.unwrap_or(512);
    let mut settings = P2Settings::default();
    if let Some(v) = cfg.p2.s_span {
        settings.s_span = v;
    }
    if let Some(v) = cfg.p2.tol {
        settings.tol = v;
    }
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let mut w = ctx.create("p2_connection.csv")?;
    writeln!(w, "I_minus,dI_analytic,dI_numeric,stderr")?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (j, &i) in values.iter().enumerate() {
        let analytic = painleve2::delta_i_avg(i)?;
        let est = painleve2::p2_delta_i_numeric(i, n_phases, &settings, seed.wrapping_add(j as u64), Execution::Parallel)?;
        writeln!(w, "{i},{analytic},{},{}", est.mean, est.stderr)?;
        let z = (est.mean - analytic) / est.stderr;
        checks.push(Check::new(
            format!("p2_I{i:e}"),
            z.abs() < 3.0,
            format!("numeric {:.5} +- {:.5}, analytic {analytic:.5} ({z:+.2} stderr)", est.mean, est.stderr),
        ));
        rows.push(json!({ "I_minus": i, "analytic": analytic, "numeric": est }));
    }
    w.flush()?;
    Ok((checks, json!({ "settings": settings, "rows": rows })))
}

// ---------------------------------------------------------------- KZ

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KzRow {
    pub gamma: f64,
    pub i_vacuum: f64,
    pub n1: f64,
    pub n2: f64,
    pub valid: bool,
}

/// Excitation numbers at quench rate Γ from the action laws, starting from
/// the vacuum invariant `1/(2Γ)`. `base` supplies m, g, ħ; β is set so the
/// units reproduce Γ.
pub fn kz_row(base: PhysicalUnits, gamma: f64, c1: f64, c2: f64, min_valid: f64) -> Result<KzRow> {
    let rate = gamma * base.coupling * base.hbar / base.mass;
    let units = PhysicalUnits::new(base.mass, rate, base.coupling, base.hbar)?;
    let i = units.vacuum_invariant();
    let d1 = ((1.0 / (2.0 * std::f64::consts::PI * i)).ln() - c1) / (4.0 * std::f64::consts::PI);
    let d2 = c2 / (2.0 * std::f64::consts::PI);
    let n = units.excitations_from_delta_i(&[d1, d2]);
    Ok(KzRow { gamma: units.gamma(), i_vacuum: i, n1: n[0], n2: n[1], valid: gamma >= min_valid && n[0] > 0.0 })
}

fn run_kz_scaling(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Outcome {
    let (mut c1, mut c2) = (cfg.kz.c1.unwrap_or(C1), cfg.kz.c2.unwrap_or(C2));
    let mut source = "constants".to_string();
    if let Some(p) = &cfg.kz.sweep_summary {
        let v: Value = serde_json::from_reader(File::open(p)?)?;
        let fit = &v["summary"]["fit"];
        c1 = fit["c1"].as_f64().ok_or_else(|| Error::Config(format!("{} has no fit.c1", p.display())))?;
        c2 = fit["c2"].as_f64().ok_or_else(|| Error::Config(format!("{} has no fit.c2", p.display())))?;
        source = p.display().to_string();
    }
    let base = match &cfg.model {
        Some(m) => ModelParams::try_from(m.clone())?.physical,
        None => None,
    }
    .map_or_else(|| PhysicalUnits::new(1.0, 1.0, 1.0, 1.0), Ok)?;
    let grid = cfg.kz.gamma.clone().unwrap_or_else(|| vec![1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0]);
    let min_valid = cfg.kz.min_valid_gamma.unwrap_or(10.0);
    let rows = grid.iter().map(|g| kz_row(base, *g, c1, c2, min_valid)).collect::<Result<Vec<_>>>()?;
    let mut w = ctx.create("kz_scaling.csv")?;
    writeln!(w, "gamma,I_vacuum,n1,n2,n1_over_n2,valid")?;
    for r in &rows {
        writeln!(w, "{},{},{},{},{},{}", r.gamma, r.i_vacuum, r.n1, r.n2, r.n1 / r.n2, r.valid)?;
    }
    w.flush()?;
    let warnings: Vec<String> = rows
        .iter()
        .filter(|r| !r.valid)
        .map(|r| format!("gamma = {}: outside the large-gamma regime (n1 = {:.3})", r.gamma, r.n1))
        .collect();
    Ok((Vec::new(), json!({ "c1": c1, "c2": c2, "source": source, "rows": rows, "warnings": warnings })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.as_str().parse::<Experiment>().unwrap(), e);
        }
        assert!("plot".parse::<Experiment>().is_err());
    }

    #[test]
    fn overrides_take_precedence_over_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "seed = 3\nrun.n_traj = 10\nmodel.epsilon = 0.5\nmodel.e = [-0.5, 0.5]\n").unwrap();
        let cfg = ExperimentConfig::load(
            Some(&path),
            &["run.n_traj=20".into(), "integrator.scheme=rk_adaptive".into(), "sweep.values=[1e-3, 1e-2]".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.run.n_traj, Some(20));
        assert_eq!(cfg.integrator.scheme, Some(Scheme::RkAdaptive));
        assert_eq!(cfg.sweep.values, Some(vec![1e-3, 1e-2]));
        assert_eq!(cfg.model.unwrap().epsilon, 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("run.n_trajectories = 5").is_err());
        assert!(ExperimentConfig::load(None, &["nonsense".into()]).is_err());
    }

    #[test]
    fn config_echo_roundtrips() {
        let cfg = ExperimentConfig::load(None, &["seed=7".into(), "kz.gamma=[1.0, 100.0]".into()]).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn lock_excludes_a_second_run() {
        let dir = tempfile::tempdir().unwrap();
        let lock = OutputLock::acquire(dir.path()).unwrap();
        assert!(matches!(OutputLock::acquire(dir.path()), Err(Error::Locked(_))));
        drop(lock);
        assert!(OutputLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn kz_rows() {
        let base = PhysicalUnits::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let r = kz_row(base, 1.0, C1, C2, 10.0).unwrap();
        assert!((r.n1 - ((1.0 / pi).ln() - 1.14) / (4.0 * pi)).abs() < 1e-12);
        assert!((r.n1 + 0.182).abs() < 1e-3);
        assert!(!r.valid);
        let r = kz_row(base, 100.0, C1, C2, 10.0).unwrap();
        assert!((r.n1 - 100.0 / (4.0 * pi) * ((100.0 / pi).ln() - 1.14)).abs() < 1e-9);
        assert!((r.n1 - 18.47).abs() < 0.01);
        assert!((r.n2 - 1.19 * 100.0 / (2.0 * pi)).abs() < 1e-9);
        assert!((r.n2 - 18.94).abs() < 0.01);
        assert!(r.valid);
        assert!((r.gamma - 100.0).abs() < 1e-9);
        // n1/n2 grows like ln Γ: differences over a decade are constant.
        let ratio = |g: f64| {
            let r = kz_row(base, g, C1, C2, 10.0).unwrap();
            r.n1 / r.n2
        };
        let d1 = ratio(1000.0) - ratio(100.0);
        let d2 = ratio(100.0) - ratio(10.0);
        assert!((d1 - d2).abs() < 1e-9);
        assert!((d1 - 10f64.ln() / (2.0 * 1.19)).abs() < 1e-9);
    }

    #[test]
    fn targets() {
        assert!((target_delta_i1(1e-4) - 0.4960).abs() < 1e-4);
        assert!((target_delta_i2() - 0.1894).abs() < 1e-4);
        assert_eq!(spread_coefficients(3), vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn verify_pair_experiment_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::load(None, &["pair.n_samples=50".into(), "pair.n_dof=[2, 3]".into()]).unwrap();
        let rep = run(Experiment::VerifyPair, &cfg, dir.path(), Some(5)).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.checks.len(), 2);
        let text = fs::read_to_string(dir.path().join("verify_pair.txt")).unwrap();
        assert!(text.contains("form_variant = literal"));
        let echo = fs::read_to_string(dir.path().join("config.toml")).unwrap();
        assert!(echo.contains("seed = 5"));
        assert!(!dir.path().join(OutputLock::FILE).exists());
    }
}
