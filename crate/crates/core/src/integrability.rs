//! Numeric verification of the zero-curvature conditions for a pair of
//! Hamiltonians over the (t, ε) plane:
//!
//! ```text
//! {H, H'} = 0,    F = ∂H/∂ε − ∂H'/∂t − {H, H'} = 0
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, HprimeForm, ModelParams, PhaseState};
use crate::par::{self, Execution};

/// A family of two Hamiltonians generating flows along t and ε.
pub trait HamiltonianPair: Sync {
    fn n_dof(&self) -> usize;
    fn grad_h(&self, state: &PhaseState, dx: &mut [f64], dp: &mut [f64]) -> Result<()>;
    fn grad_hprime(&self, state: &PhaseState, dx: &mut [f64], dp: &mut [f64]) -> Result<()>;
    /// Explicit ∂H/∂ε at fixed (X, P, t).
    fn dh_deps(&self, state: &PhaseState) -> Result<f64>;
    /// Explicit ∂H'/∂t at fixed (X, P, ε).
    fn dhprime_dt(&self, state: &PhaseState) -> Result<f64>;
}

/// The model pair (𝓗, 𝓗'). The coefficient sets of the two members can be
/// decoupled to build deliberately broken pairs.
#[derive(Clone, Debug)]
pub struct ModelPair {
    h: ModelParams,
    hprime_e: Vec<f64>,
    pub form: HprimeForm,
}

impl ModelPair {
    pub fn new(params: &ModelParams, form: HprimeForm) -> Self {
        Self { h: params.clone(), hprime_e: params.e().to_vec(), form }
    }

    /// Pair whose 𝓗' uses `hprime_e` instead of the coefficients of 𝓗.
    pub fn mismatched(params: &ModelParams, hprime_e: Vec<f64>) -> Result<Self> {
        if hprime_e.len() != params.n_dof() {
            return Err(Error::DimensionMismatch {
                expected: params.n_dof(),
                actual: hprime_e.len(),
            });
        }
        Ok(Self { h: params.clone(), hprime_e, form: HprimeForm::Corrected })
    }

    fn check(&self, s: &PhaseState) -> Result<()> {
        let n = self.n_dof();
        if s.x.len() != n || s.p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: s.x.len() });
        }
        Ok(())
    }
}

impl HamiltonianPair for ModelPair {
    fn n_dof(&self) -> usize {
        self.h.n_dof()
    }

    fn grad_h(&self, s: &PhaseState, dx: &mut [f64], dp: &mut [f64]) -> Result<()> {
        self.check(s)?;
        model::h_grad(self.h.e(), &s.x, &s.p, s.t, s.eps, dx, dp);
        Ok(())
    }

    fn grad_hprime(&self, s: &PhaseState, dx: &mut [f64], dp: &mut [f64]) -> Result<()> {
        self.check(s)?;
        model::check_eps(s.eps)?;
        model::hprime_grad(&self.hprime_e, &s.x, &s.p, s.t, s.eps, self.form, dx, dp);
        Ok(())
    }

    fn dh_deps(&self, s: &PhaseState) -> Result<f64> {
        self.h.dh_deps(s)
    }

    fn dhprime_dt(&self, s: &PhaseState) -> Result<f64> {
        self.check(s)?;
        model::check_eps(s.eps)?;
        Ok(self.hprime_e.iter().zip(&s.x).map(|(e, x)| e * x * x).sum())
    }
}

/// Phase-space function whose bracket can be taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    H,
    HPrime,
    /// L_ij = X_i P_j − X_j P_i.
    AngularMomentum(usize, usize),
}

fn gradient<P: HamiltonianPair + ?Sized>(
    pair: &P,
    state: &PhaseState,
    f: Observable,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = pair.n_dof();
    let (mut dx, mut dp) = (vec![0.0; n], vec![0.0; n]);
    match f {
        Observable::H => pair.grad_h(state, &mut dx, &mut dp)?,
        Observable::HPrime => pair.grad_hprime(state, &mut dx, &mut dp)?,
        Observable::AngularMomentum(i, j) => {
            if i >= n || j >= n || state.x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: i.max(j) + 1 });
            }
            dx[i] += state.p[j];
            dx[j] -= state.p[i];
            dp[j] += state.x[i];
            dp[i] -= state.x[j];
        }
    }
    Ok((dx, dp))
}

fn bracket_of(fx: &[f64], fp: &[f64], gx: &[f64], gp: &[f64]) -> f64 {
    (0..fx.len()).map(|k| fx[k] * gp[k] - fp[k] * gx[k]).sum()
}

/// {f, g} = Σ_k (∂f/∂X_k ∂g/∂P_k − ∂f/∂P_k ∂g/∂X_k) from analytic gradients.
pub fn poisson_bracket<P: HamiltonianPair + ?Sized>(
    pair: &P,
    state: &PhaseState,
    f: Observable,
    g: Observable,
) -> Result<f64> {
    let (fx, fp) = gradient(pair, state, f)?;
    let (gx, gp) = gradient(pair, state, g)?;
    Ok(bracket_of(&fx, &fp, &gx, &gp))
}

/// Residuals of both integrability conditions at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    /// |{H, H'}|
    pub bracket: f64,
    /// |∂H/∂ε − ∂H'/∂t − {H, H'}|
    pub curvature: f64,
    /// 1 + |∇H| |∇H'|
    pub scale: f64,
}

pub fn residuals<P: HamiltonianPair + ?Sized>(pair: &P, state: &PhaseState) -> Result<Residuals> {
    let (hx, hp) = gradient(pair, state, Observable::H)?;
    let (kx, kp) = gradient(pair, state, Observable::HPrime)?;
    let bracket = bracket_of(&hx, &hp, &kx, &kp);
    let curvature = pair.dh_deps(state)? - pair.dhprime_dt(state)? - bracket;
    let norm = |a: &[f64], b: &[f64]| (model::dot(a, a) + model::dot(b, b)).sqrt();
    Ok(Residuals {
        bracket: bracket.abs(),
        curvature: curvature.abs(),
        scale: 1.0 + norm(&hx, &hp) * norm(&kx, &kp),
    })
}

/// Unnormalized curvature |∂H/∂ε − ∂H'/∂t − {H, H'}|.
pub fn curvature_residual<P: HamiltonianPair + ?Sized>(pair: &P, state: &PhaseState) -> Result<f64> {
    Ok(residuals(pair, state)?.curvature)
}

/// Per-coordinate sampling ranges, all inclusive-exclusive `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub x: (f64, f64),
    pub p: (f64, f64),
    pub t: (f64, f64),
    pub eps: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { x: (-5.0, 5.0), p: (-5.0, 5.0), t: (-50.0, 50.0), eps: (0.1, 5.0) }
    }
}

impl SampleBox {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("x", self.x), ("p", self.p), ("t", self.t), ("eps", self.eps)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParams(format!("bad sample range {name} = [{lo}, {hi})")));
            }
        }
        if self.eps.0 <= 0.0 {
            return Err(Error::Singular { eps: self.eps.0 });
        }
        Ok(())
    }

    /// Deterministic sample number `index` for a given seed.
    pub fn sample(&self, n: usize, seed: u64, index: u64) -> PhaseState {
        let mut rng = par::stream_rng(seed, index);
        let mut draw = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.gen::<f64>();
        let x = (0..n).map(|_| draw(self.x)).collect();
        let p = (0..n).map(|_| draw(self.p)).collect();
        let t = draw(self.t);
        let eps = draw(self.eps);
        PhaseState { x, p, t, eps }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub n_dof: usize,
    pub n_samples: usize,
    /// Largest |{H,H'}| / (1 + |∇H||∇H'|).
    pub max_bracket_residual: f64,
    /// Largest normalized curvature residual.
    pub max_curvature_residual: f64,
    pub sample_box: SampleBox,
    pub form_variant: HprimeForm,
    pub seed: u64,
}

impl PairReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_bracket_residual < tol && self.max_curvature_residual < tol
    }

    /// Flat `key = value` text block.
    pub fn to_text(&self, tol: f64) -> String {
        format!(
            "form_variant = {}\nn_dof = {}\nn_samples = {}\nseed = {}\n\
             sample_box.x = [{}, {}]\nsample_box.p = [{}, {}]\n\
             sample_box.t = [{}, {}]\nsample_box.eps = [{}, {}]\n\
             max_bracket_residual = {:.3e}\nmax_curvature_residual = {:.3e}\n\
             tolerance = {:.1e}\npass = {}\n",
            self.form_variant.as_str(),
            self.n_dof,
            self.n_samples,
            self.seed,
            self.sample_box.x.0,
            self.sample_box.x.1,
            self.sample_box.p.0,
            self.sample_box.p.1,
            self.sample_box.t.0,
            self.sample_box.t.1,
            self.sample_box.eps.0,
            self.sample_box.eps.1,
            self.max_bracket_residual,
            self.max_curvature_residual,
            tol,
            self.passes(tol),
        )
    }
}

/// Maxima of the normalized residuals over uniformly sampled states.
pub fn verify_pair(
    params: &ModelParams,
    form: HprimeForm,
    n_samples: usize,
    sample_box: SampleBox,
    seed: u64,
) -> Result<PairReport> {
    verify_pair_with(&ModelPair::new(params, form), form, n_samples, sample_box, seed, Execution::Parallel)
}

pub fn verify_pair_with<P: HamiltonianPair>(
    pair: &P,
    form: HprimeForm,
    n_samples: usize,
    sample_box: SampleBox,
    seed: u64,
    exec: Execution,
) -> Result<PairReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be at least 1".into()));
    }
    sample_box.validate()?;
    let n = pair.n_dof();
    let per_sample = par::map_indexed(n_samples, exec, |i| {
        let state = sample_box.sample(n, seed, i as u64);
        residuals(pair, &state).map(|r| (r.bracket / r.scale, r.curvature / r.scale))
    });
    let (mut max_b, mut max_c) = (0.0_f64, 0.0_f64);
    for r in per_sample {
        let (b, c) = r?;
        max_b = max_b.max(b);
        max_c = max_c.max(c);
    }
    Ok(PairReport {
        n_dof: n,
        n_samples,
        max_bracket_residual: max_b,
        max_curvature_residual: max_c,
        sample_box,
        form_variant: form,
        seed,
    })
}
