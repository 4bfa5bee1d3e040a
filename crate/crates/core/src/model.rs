//! Model definition: parameters, phase-space states and the Hamiltonian pair.
//!
//! In dimensionless units the physical Hamiltonian is
//!
//! ```text
//! H  = |P|²/2 − t|X|²/2 + (|X|²)²/2 + ε Σ_k e_k X_k²
//! ```
//!
//! and its partner, generating the flow along ε, is
//!
//! ```text
//! H' = Σ_k e_k (t X_k² − P_k² − X_k² |X|²) − 2ε Σ_k e_k² X_k² + |L|²/(2ε)
//! ```
//!
//! with |L|² = Σ_{j<k} (P_k X_j − P_j X_k)² = |X|²|P|² − (X·P)². The pair
//! satisfies {H, H'} = 0 and ∂H/∂ε = ∂H'/∂t = Σ_k e_k X_k².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical scales of the underlying field theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    /// Effective mass m.
    pub mass: f64,
    /// Sweep rate β = k'(0).
    pub rate: f64,
    /// Quartic coupling g.
    pub coupling: f64,
    pub hbar: f64,
}

impl PhysicalUnits {
    pub fn new(mass: f64, rate: f64, coupling: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("rate", rate), ("coupling", coupling), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { mass, rate, coupling, hbar })
    }

    /// Quench-rate parameter Γ = βm/(għ).
    pub fn gamma(&self) -> f64 {
        self.rate * self.mass / (self.coupling * self.hbar)
    }

    /// Dimensionless vacuum invariant ħg/(2βm) = 1/(2Γ).
    pub fn vacuum_invariant(&self) -> f64 {
        self.hbar * self.coupling / (2.0 * self.rate * self.mass)
    }

    /// Factor uv = mβ/g relating dimensionless and physical invariants.
    pub fn invariant_scale(&self) -> f64 {
        self.mass * self.rate / self.coupling
    }

    pub fn scales(&self) -> UnitScales {
        let (m, b, g) = (self.mass, self.rate, self.coupling);
        UnitScales {
            time: (m / b).cbrt(),
            coord: m.powf(1.0 / 6.0) * b.cbrt() / g.sqrt(),
            momentum: m.powf(5.0 / 6.0) * b.powf(2.0 / 3.0) / g.sqrt(),
        }
    }

    /// Number of nonadiabatic excitations n_k = βm ΔI_k/(ħg).
    pub fn excitations_from_delta_i(&self, delta_i: &[f64]) -> Vec<f64> {
        let gamma = self.gamma();
        delta_i.iter().map(|d| gamma * d).collect()
    }

    /// Physical invariant 𝓘 = (mβ/g) I.
    pub fn to_physical_invariant(&self, i: f64) -> f64 {
        self.invariant_scale() * i
    }

    /// Dimensionless invariant I = g 𝓘/(mβ).
    pub fn to_dimensionless_invariant(&self, action: f64) -> f64 {
        action / self.invariant_scale()
    }
}

/// Rescaling factors t → λt, φ = uX, π = vP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScales {
    /// λ
    pub time: f64,
    /// u
    pub coord: f64,
    /// v
    pub momentum: f64,
}

/// Physical-unit description of the symmetry-broken model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub units: PhysicalUnits,
    /// Symmetry-breaking energy scale ε.
    pub epsilon: f64,
    /// O(1) mass-splitting coefficients ε_k.
    pub eps_k: Vec<f64>,
}

impl PhysicalParams {
    pub fn new(units: PhysicalUnits, epsilon: f64, eps_k: Vec<f64>) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        if eps_k.is_empty() || eps_k.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("eps_k must be a nonempty finite vector".into()));
        }
        Ok(Self { units, epsilon, eps_k })
    }

    /// Weak-asymmetry diagnostic: ε ≪ √β and ε ≪ g, with "≪" read as a
    /// factor of at least `margin` (e.g. 10).
    pub fn in_asymmetry_regime(&self, margin: f64) -> bool {
        let eps = self.epsilon;
        eps * margin < self.units.rate.sqrt() && eps * margin < self.units.coupling
    }

    /// Dimensionless model and the rescaling factors (λ, u, v).
    pub fn to_dimensionless(&self) -> Result<(ModelParams, UnitScales)> {
        let u = &self.units;
        let factor = (u.rate * u.rate * u.mass).cbrt();
        let e = self.eps_k.iter().map(|ek| ek / factor).collect();
        let mut params = ModelParams::new_unordered(self.epsilon, e)?;
        params.physical = Some(*u);
        Ok((params, u.scales()))
    }
}

/// Dimensionless model definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct ModelParams {
    epsilon: f64,
    e: Vec<f64>,
    pub physical: Option<PhysicalUnits>,
}

impl ModelParams {
    /// Model with strictly increasing coefficients e_1 < … < e_N and ε > 0.
    pub fn new(epsilon: f64, e: Vec<f64>) -> Result<Self> {
        let params = Self::new_unordered(epsilon, e)?;
        if params.e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(format!(
                "coefficients e must be strictly increasing, got {:?}",
                params.e
            )));
        }
        Ok(params)
    }

    /// Like [`ModelParams::new`] but accepts any finite ordering of `e`,
    /// including degenerate (symmetric) and relabelled coefficient sets.
    pub fn new_unordered(epsilon: f64, e: Vec<f64>) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        if e.is_empty() {
            return Err(Error::InvalidParams("at least one degree of freedom is required".into()));
        }
        if e.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("coefficients must be finite, got {e:?}")));
        }
        Ok(Self { epsilon, e, physical: None })
    }

    pub fn with_physical(mut self, units: PhysicalUnits) -> Self {
        self.physical = Some(units);
        self
    }

    pub fn n_dof(&self) -> usize {
        self.e.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    /// Same coefficients, different ε.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = Self::new_unordered(epsilon, self.e.clone())?;
        p.physical = self.physical;
        Ok(p)
    }

    /// Index of the mode with the smallest coefficient; it is the first to
    /// lose confinement and forms the condensate.
    pub fn condensing_dof(&self) -> usize {
        let mut best = 0;
        for (k, &ek) in self.e.iter().enumerate() {
            if ek < self.e[best] {
                best = k;
            }
        }
        best
    }

    /// Physical parameters recovered from the dimensionless model.
    pub fn to_physical(&self) -> Result<PhysicalParams> {
        let units = self.physical.ok_or_else(|| {
            Error::InvalidParams("model carries no physical units (m, beta, g, hbar)".into())
        })?;
        let factor = (units.rate * units.rate * units.mass).cbrt();
        PhysicalParams::new(units, self.epsilon, self.e.iter().map(|e| e * factor).collect())
    }

    fn check(&self, state: &PhaseState) -> Result<()> {
        let n = self.n_dof();
        if state.x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: state.x.len() });
        }
        if state.p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: state.p.len() });
        }
        Ok(())
    }

    /// 𝓗 at the state's two-time location. ε = 0 is allowed here.
    pub fn eval_h(&self, state: &PhaseState) -> Result<f64> {
        self.check(state)?;
        Ok(h_value(&self.e, &state.x, &state.p, state.t, state.eps))
    }

    /// 𝓗' at the state's two-time location (corrected N-dimensional form).
    pub fn eval_hprime(&self, state: &PhaseState) -> Result<f64> {
        self.eval_hprime_form(state, HprimeForm::Corrected)
    }

    pub fn eval_hprime_form(&self, state: &PhaseState, form: HprimeForm) -> Result<f64> {
        self.check(state)?;
        check_eps(state.eps)?;
        Ok(hprime_value(&self.e, &state.x, &state.p, state.t, state.eps, form))
    }

    /// Analytic gradient (∂𝓗/∂X, ∂𝓗/∂P).
    pub fn grad_h(&self, state: &PhaseState) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(state)?;
        let n = self.n_dof();
        let (mut dx, mut dp) = (vec![0.0; n], vec![0.0; n]);
        h_grad(&self.e, &state.x, &state.p, state.t, state.eps, &mut dx, &mut dp);
        Ok((dx, dp))
    }

    /// Analytic gradient (∂𝓗'/∂X, ∂𝓗'/∂P), corrected form.
    pub fn grad_hprime(&self, state: &PhaseState) -> Result<(Vec<f64>, Vec<f64>)> {
        self.grad_hprime_form(state, HprimeForm::Corrected)
    }

    pub fn grad_hprime_form(
        &self,
        state: &PhaseState,
        form: HprimeForm,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(state)?;
        check_eps(state.eps)?;
        let n = self.n_dof();
        let (mut dx, mut dp) = (vec![0.0; n], vec![0.0; n]);
        hprime_grad(&self.e, &state.x, &state.p, state.t, state.eps, form, &mut dx, &mut dp);
        Ok((dx, dp))
    }

    /// ∂𝓗/∂ε = Σ_k e_k X_k².
    pub fn dh_deps(&self, state: &PhaseState) -> Result<f64> {
        self.check(state)?;
        Ok(weighted_sq(&self.e, &state.x))
    }

    /// ∂𝓗'/∂t = Σ_k e_k X_k², identical to ∂𝓗/∂ε.
    pub fn dhprime_dt(&self, state: &PhaseState) -> Result<f64> {
        self.check(state)?;
        check_eps(state.eps)?;
        Ok(weighted_sq(&self.e, &state.x))
    }
}

/// Transcription variant of the quartic term in 𝓗'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HprimeForm {
    /// −Σ_k e_k X_k² |X|², which commutes with 𝓗 for every N.
    Corrected,
    /// −Σ_k e_k X_k² Σ_j X_k² X_j², kept only to document that it fails
    /// the bracket test.
    Literal,
}

impl HprimeForm {
    pub fn as_str(self) -> &'static str {
        match self {
            HprimeForm::Corrected => "corrected",
            HprimeForm::Literal => "literal",
        }
    }
}

impl std::str::FromStr for HprimeForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(HprimeForm::Corrected),
            "literal" => Ok(HprimeForm::Literal),
            other => Err(Error::Config(format!("unknown form variant {other:?}"))),
        }
    }
}

/// Point in the two-time plane (τ₁, τ₂) = (t, ε).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoTimePoint {
    pub t: f64,
    pub eps: f64,
}

impl TwoTimePoint {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidParams(format!("t must be finite, got {t}")));
        }
        check_eps(eps)?;
        Ok(Self { t, eps })
    }
}

/// Phase-space point tagged with its two-time location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
    pub eps: f64,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, p: Vec<f64>, t: f64, eps: f64) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), actual: p.len() });
        }
        let s = Self { x, p, t, eps };
        if !s.is_finite() {
            return Err(Error::InvalidParams("phase state entries must be finite".into()));
        }
        Ok(s)
    }

    /// Origin of phase space at (t, ε).
    pub fn zero(n: usize, t: f64, eps: f64) -> Self {
        Self { x: vec![0.0; n], p: vec![0.0; n], t, eps }
    }

    pub fn n_dof(&self) -> usize {
        self.x.len()
    }

    pub fn point(&self) -> TwoTimePoint {
        TwoTimePoint { t: self.t, eps: self.eps }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.eps.is_finite()
            && self.x.iter().chain(&self.p).all(|v| v.is_finite())
    }

    /// Euclidean norm of (X, P).
    pub fn norm(&self) -> f64 {
        self.x.iter().chain(&self.p).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest |X_k| or |P_k|.
    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.p).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Relative phase-space distance ‖z − other‖/‖other‖.
    pub fn rel_distance(&self, other: &PhaseState) -> f64 {
        let d: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        d / other.norm().max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Singular { eps })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn weighted_sq(e: &[f64], x: &[f64]) -> f64 {
    e.iter().zip(x).map(|(ek, xk)| ek * xk * xk).sum()
}

pub(crate) fn h_value(e: &[f64], x: &[f64], p: &[f64], t: f64, eps: f64) -> f64 {
    let r2 = dot(x, x);
    0.5 * dot(p, p) - 0.5 * t * r2 + 0.5 * r2 * r2 + eps * weighted_sq(e, x)
}

/// Force −∂𝓗/∂X; the hot path of constant-ε evolution.
#[inline]
pub(crate) fn h_force(e: &[f64], x: &[f64], t: f64, eps: f64, out: &mut [f64]) {
    let r2 = dot(x, x);
    for ((o, &xk), &ek) in out.iter_mut().zip(x).zip(e) {
        *o = (t - 2.0 * r2 - 2.0 * eps * ek) * xk;
    }
}

pub(crate) fn h_grad(
    e: &[f64],
    x: &[f64],
    p: &[f64],
    t: f64,
    eps: f64,
    dx: &mut [f64],
    dp: &mut [f64],
) {
    h_force(e, x, t, eps, dx);
    for v in dx.iter_mut() {
        *v = -*v;
    }
    dp.copy_from_slice(p);
}

pub(crate) fn angular_momentum_sq(x: &[f64], p: &[f64]) -> f64 {
    let xp = dot(x, p);
    // Lagrange identity; clamp the rounding residue at collinear states.
    (dot(x, x) * dot(p, p) - xp * xp).max(0.0)
}

pub(crate) fn hprime_value(
    e: &[f64],
    x: &[f64],
    p: &[f64],
    t: f64,
    eps: f64,
    form: HprimeForm,
) -> f64 {
    let r2 = dot(x, x);
    let mut acc = 0.0;
    for ((&ek, &xk), &pk) in e.iter().zip(x).zip(p) {
        let xk2 = xk * xk;
        let quartic = match form {
            HprimeForm::Corrected => xk2 * r2,
            HprimeForm::Literal => xk2 * xk2 * r2,
        };
        acc += ek * (t * xk2 - pk * pk - quartic) - 2.0 * eps * ek * ek * xk2;
    }
    acc + angular_momentum_sq(x, p) / (2.0 * eps)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn hprime_grad(
    e: &[f64],
    x: &[f64],
    p: &[f64],
    t: f64,
    eps: f64,
    form: HprimeForm,
    dx: &mut [f64],
    dp: &mut [f64],
) {
    let r2 = dot(x, x);
    let p2 = dot(p, p);
    let xp = dot(x, p);
    // Σ_k e_k X_k^2 (corrected) or Σ_k e_k X_k^4 (literal)
    let moment = match form {
        HprimeForm::Corrected => weighted_sq(e, x),
        HprimeForm::Literal => e.iter().zip(x).map(|(ek, xk)| ek * xk.powi(4)).sum(),
    };
    let inv = 1.0 / eps;
    for i in 0..x.len() {
        let (ei, xi, pi) = (e[i], x[i], p[i]);
        let quartic = match form {
            HprimeForm::Corrected => 2.0 * ei * xi * r2 + 2.0 * xi * moment,
            HprimeForm::Literal => 4.0 * ei * xi * xi * xi * r2 + 2.0 * xi * moment,
        };
        dx[i] = 2.0 * t * ei * xi - 4.0 * eps * ei * ei * xi - quartic
            + (xi * p2 - xp * pi) * inv;
        dp[i] = -2.0 * ei * pi + (pi * r2 - xp * xi) * inv;
    }
}

/// Flat config representation; key names are part of the CLI contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_dof: Option<usize>,
    pub epsilon: f64,
    pub e: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    /// Permit non-increasing coefficients (symmetric or relabelled runs).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unordered: bool,
}

impl TryFrom<ModelConfig> for ModelParams {
    type Error = Error;

    fn try_from(c: ModelConfig) -> Result<Self> {
        if let Some(n) = c.n_dof {
            if n != c.e.len() {
                return Err(Error::DimensionMismatch { expected: n, actual: c.e.len() });
            }
        }
        let mut params = if c.unordered {
            ModelParams::new_unordered(c.epsilon, c.e)?
        } else {
            ModelParams::new(c.epsilon, c.e)?
        };
        params.physical = match (c.m, c.beta, c.g, c.hbar) {
            (None, None, None, None) => None,
            (Some(m), Some(b), Some(g), Some(h)) => Some(PhysicalUnits::new(m, b, g, h)?),
            _ => {
                return Err(Error::Config(
                    "physical units need all of m, beta, g, hbar or none".into(),
                ))
            }
        };
        Ok(params)
    }
}

impl From<ModelParams> for ModelConfig {
    fn from(p: ModelParams) -> Self {
        let unordered = p.e.windows(2).any(|w| w[0] >= w[1]);
        let u = p.physical;
        ModelConfig {
            n_dof: Some(p.e.len()),
            epsilon: p.epsilon,
            e: p.e,
            m: u.map(|u| u.mass),
            beta: u.map(|u| u.rate),
            g: u.map(|u| u.coupling),
            hbar: u.map(|u| u.hbar),
            unordered,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn split() -> ModelParams {
        ModelParams::new(1.0, vec![-0.5, 0.5]).unwrap()
    }

    // Term-by-term transcription for N = 2 kept separate from the
    // vectorised implementation.
    fn h_oracle(e: [f64; 2], x: [f64; 2], p: [f64; 2], t: f64, eps: f64) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        (p[0] * p[0] + p[1] * p[1]) / 2.0 - t * r2 / 2.0
            + r2 * r2 / 2.0
            + eps * (e[0] * x[0] * x[0] + e[1] * x[1] * x[1])
    }

    fn hprime_oracle(e: [f64; 2], x: [f64; 2], p: [f64; 2], t: f64, eps: f64) -> f64 {
        let (x1, x2, p1, p2) = (x[0], x[1], p[0], p[1]);
        let l = p2 * x1 - p1 * x2;
        t * (e[0] * x1 * x1 + e[1] * x2 * x2)
            - 2.0 * eps * (e[0] * e[0] * x1 * x1 + e[1] * e[1] * x2 * x2)
            - e[0] * (p1 * p1 + x1.powi(4) + x1 * x1 * x2 * x2)
            - e[1] * (p2 * p2 + x1 * x1 * x2 * x2 + x2.powi(4))
            + l * l / (2.0 * eps)
    }

    #[test]
    fn hamiltonian_trivial_values() {
        let m = split();
        assert_eq!(m.eval_h(&PhaseState::zero(2, 3.0, 0.2)).unwrap(), 0.0);
        let s = PhaseState::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.0, 1.0).unwrap();
        assert_eq!(m.eval_h(&s).unwrap(), 0.0);
    }

    #[test]
    fn partner_trivial_values() {
        let m = split();
        let s = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0], 0.0, 1.0).unwrap();
        assert_relative_eq!(m.eval_hprime(&s).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(m.eval_hprime(&PhaseState::zero(2, 1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn matches_two_dof_transcription() {
        let m = ModelParams::new(0.7, vec![-0.3, 1.1]).unwrap();
        let cases = [
            ([1.0, 2.0], [3.0, -1.0], 5.0, 0.7),
            ([-0.4, 0.25], [1.5, 2.5], -12.0, 2.3),
            ([3.0, -2.0], [-0.1, 0.9], 40.0, 0.15),
        ];
        for (x, p, t, eps) in cases {
            let s = PhaseState::new(x.to_vec(), p.to_vec(), t, eps).unwrap();
            assert_relative_eq!(
                m.eval_h(&s).unwrap(),
                h_oracle([-0.3, 1.1], x, p, t, eps),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                m.eval_hprime(&s).unwrap(),
                hprime_oracle([-0.3, 1.1], x, p, t, eps),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn partner_rejects_nonpositive_eps() {
        let m = split();
        let s = PhaseState::zero(2, 0.0, 0.0);
        assert!(matches!(m.eval_hprime(&s), Err(Error::Singular { .. })));
        assert!(matches!(m.grad_hprime(&s), Err(Error::Singular { .. })));
        // 𝓗 itself is regular at ε = 0.
        assert!(m.eval_h(&s).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = split();
        let s = PhaseState::zero(3, 0.0, 1.0);
        assert!(matches!(
            m.eval_h(&s),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn coefficient_ordering_is_validated() {
        assert!(ModelParams::new(1.0, vec![0.5, -0.5]).is_err());
        assert!(ModelParams::new(1.0, vec![0.5, 0.5]).is_err());
        assert!(ModelParams::new(0.0, vec![-0.5, 0.5]).is_err());
        assert!(ModelParams::new_unordered(1.0, vec![0.5, -0.5]).is_ok());
        assert_eq!(ModelParams::new_unordered(1.0, vec![0.5, -0.5]).unwrap().condensing_dof(), 1);
    }

    #[test]
    fn partner_momentum_gradient_has_l_coupling() {
        let m = split();
        let s = PhaseState::new(vec![0.3, -1.2], vec![0.8, 0.4], 2.0, 1.7).unwrap();
        let (_, dp) = m.grad_hprime(&s).unwrap();
        let l = s.p[1] * s.x[0] - s.p[0] * s.x[1];
        assert_relative_eq!(dp[0], -2.0 * -0.5 * s.p[0] - l * s.x[1] / 1.7, max_relative = 1e-14);
        assert_relative_eq!(dp[1], -2.0 * 0.5 * s.p[1] + l * s.x[0] / 1.7, max_relative = 1e-14);
    }

    #[test]
    fn gradient_at_origin_vanishes() {
        let (dx, dp) = split().grad_h(&PhaseState::zero(2, 4.0, 1.0)).unwrap();
        assert!(dx.iter().chain(&dp).all(|v| *v == 0.0));
    }

    #[test]
    fn unit_scales() {
        let ones = PhysicalUnits::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let s = ones.scales();
        assert_eq!((s.time, s.coord, s.momentum), (1.0, 1.0, 1.0));
        assert_eq!(ones.vacuum_invariant(), 0.5);
        let phys = PhysicalParams::new(ones, 0.01, vec![-0.5, 0.5]).unwrap();
        let (p, _) = phys.to_dimensionless().unwrap();
        assert_eq!(p.e(), &[-0.5, 0.5]);

        let fast = PhysicalUnits::new(1.0, 8.0, 1.0, 1.0).unwrap().scales();
        assert_relative_eq!(fast.time, 0.5, max_relative = 1e-15);
        assert_relative_eq!(fast.coord, 2.0, max_relative = 1e-15);
        assert_relative_eq!(fast.momentum, 4.0, max_relative = 1e-15);
    }

    #[test]
    fn excitation_numbers() {
        let ones = PhysicalUnits::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(ones.excitations_from_delta_i(&[0.0, 0.0]), vec![0.0, 0.0]);
        let d2 = 1.19 / (2.0 * std::f64::consts::PI);
        let d1 = ((1.0 / (2.0 * std::f64::consts::PI * 1e-4)).ln() - 1.14)
            / (4.0 * std::f64::consts::PI);
        let n = ones.excitations_from_delta_i(&[d1, d2]);
        assert_relative_eq!(n[0], 0.496, epsilon = 5e-4);
        assert_relative_eq!(n[1], 0.1894, epsilon = 5e-5);
    }

    #[test]
    fn asymmetry_regime_flag() {
        let u = PhysicalUnits::new(1.0, 4.0, 1.0, 1.0).unwrap();
        assert!(PhysicalParams::new(u, 0.01, vec![-0.5, 0.5]).unwrap().in_asymmetry_regime(10.0));
        assert!(!PhysicalParams::new(u, 0.5, vec![-0.5, 0.5]).unwrap().in_asymmetry_regime(10.0));
    }

    #[test]
    fn config_keys_roundtrip() {
        let text = "n_dof = 2\nepsilon = 0.5\ne = [-0.5, 0.5]\nm = 1.0\nbeta = 8.0\ng = 1.0\nhbar = 1.0\n";
        let p: ModelParams = toml::from_str(text).unwrap();
        assert_eq!(p.n_dof(), 2);
        assert_eq!(p.physical.unwrap().rate, 8.0);
        let back: ModelParams = toml::from_str(&toml::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(toml::from_str::<ModelParams>("n_dof = 3\nepsilon = 1.0\ne = [0.0, 1.0]\n").is_err());
        assert!(toml::from_str::<ModelParams>("epsilon = 1.0\ne = [0.0, 1.0]\nm = 1.0\n").is_err());
    }
}
