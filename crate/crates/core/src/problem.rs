//! Test problems with known optima, assumption parameters and the noisy
//! two-point zeroth-order oracle.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::{dot, norm2};
use crate::randomness::{SeedStream, StochasticNoiseModel};

/// Stream id used to derive `ξ` from an oracle realization seed.
const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// Deterministic convex objectives with closed-form minimisers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// `scale·‖x − c‖₂ + ⟨tilt, x − c⟩`, sharp at `c` while `‖tilt‖₂ < scale`.
    Sharp {
        center: Vec<f64>,
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tilt: Option<Vec<f64>>,
    },
    /// `⟨weights, x⟩ + offset`.
    Linear { weights: Vec<f64>, offset: f64 },
    /// `scale·‖x − c‖_∞`, a maximum of `2d` affine pieces.
    MaxAbs { center: Vec<f64>, scale: f64 },
    /// `scale·‖x − c‖₁`.
    L1Distance { center: Vec<f64>, scale: f64 },
    /// `scale·‖x − c‖₂²`.
    Quadratic { center: Vec<f64>, scale: f64 },
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Self::Sharp { center, .. }
            | Self::MaxAbs { center, .. }
            | Self::L1Distance { center, .. }
            | Self::Quadratic { center, .. } => center.len(),
            Self::Linear { weights, .. } => weights.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Sharp {
                center,
                scale,
                tilt,
            } => {
                let mut sq = 0.0;
                let mut lin = 0.0;
                for i in 0..x.len() {
                    let r = x[i] - center[i];
                    sq += r * r;
                    if let Some(t) = tilt {
                        lin += t[i] * r;
                    }
                }
                scale * sq.sqrt() + lin
            }
            Self::Linear { weights, offset } => dot(weights, x) + offset,
            Self::MaxAbs { center, scale } => {
                scale
                    * x.iter()
                        .zip(center)
                        .fold(0.0_f64, |m, (a, c)| m.max((a - c).abs()))
            }
            Self::L1Distance { center, scale } => {
                scale
                    * x.iter()
                        .zip(center)
                        .map(|(a, c)| (a - c).abs())
                        .sum::<f64>()
            }
            Self::Quadratic { center, scale } => {
                scale
                    * x.iter()
                        .zip(center)
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum::<f64>()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |s: f64| s > 0.0 && s.is_finite();
        match self {
            Self::Sharp {
                center,
                scale,
                tilt,
            } => {
                if !positive(*scale) {
                    return Err(Error::Config("sharp: scale must be positive".into()));
                }
                if let Some(t) = tilt {
                    if t.len() != center.len() {
                        return Err(Error::Config("sharp: tilt has wrong length".into()));
                    }
                    if norm2(t) >= *scale {
                        return Err(Error::Config(
                            "sharp: tilt norm must be below scale for the centre to be the minimiser"
                                .into(),
                        ));
                    }
                }
            }
            Self::MaxAbs { scale, .. }
            | Self::L1Distance { scale, .. }
            | Self::Quadratic { scale, .. } => {
                if !positive(*scale) {
                    return Err(Error::Config("objective scale must be positive".into()));
                }
            }
            Self::Linear { weights, offset } => {
                if !weights
                    .iter()
                    .chain(std::iter::once(offset))
                    .all(|v| v.is_finite())
                {
                    return Err(Error::Config("linear: coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// `r`-growth: `(μ/2)‖x − x*‖_p^r ≤ f(x) − f*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub r: f64,
    pub mu: f64,
    /// Norm the condition is stated in.
    pub p: f64,
}

impl Growth {
    /// Restates the condition in the `ℓ_target` norm using
    /// `‖v‖_a ≥ d^{1/a − 1/b}‖v‖_b` for `a > b`.
    pub fn in_norm(&self, target: f64, dim: usize) -> Growth {
        let c = if self.p <= target {
            1.0
        } else {
            let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
            (dim as f64).powf(inv(self.p) - inv(target))
        };
        Growth {
            r: self.r,
            mu: self.mu * c.powf(self.r),
            p: target,
        }
    }
}

/// A minimisation problem with known solution over a compact convex set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub objective: Objective,
    pub feasible_set: FeasibleSet,
    pub minimizer: Vec<f64>,
    pub optimal_value: f64,
    /// `ℓ₂` Lipschitz constant of the deterministic objective on `X_τ`.
    pub lipschitz: f64,
    pub growth: Option<Growth>,
    /// Enlargement margin of `X_τ`; `None` means the objective is defined on
    /// the whole space.
    pub margin: Option<f64>,
}

impl ProblemSpec {
    /// Derives minimiser, optimal value, Lipschitz constant and growth from
    /// the objective and the set.
    pub fn new(objective: Objective, feasible_set: FeasibleSet) -> Result<Self> {
        objective.validate()?;
        feasible_set.validate()?;
        let d = feasible_set.dim();
        if objective.dim() != d {
            return Err(Error::Config(format!(
                "objective has dimension {} but the feasible set has dimension {d}",
                objective.dim()
            )));
        }
        let centred = |center: &Vec<f64>| -> Result<Vec<f64>> {
            if feasible_set.contains(center) {
                Ok(center.clone())
            } else {
                Err(Error::Config(format!(
                    "objective centre {center:?} is not in the feasible set"
                )))
            }
        };
        let (minimizer, lipschitz, growth) = match &objective {
            Objective::Sharp {
                center,
                scale,
                tilt,
            } => {
                let t = tilt.as_deref().map(norm2).unwrap_or(0.0);
                let growth = Growth {
                    r: 1.0,
                    mu: 2.0 * (scale - t),
                    p: 2.0,
                };
                (centred(center)?, scale + t, Some(growth))
            }
            Objective::Linear { weights, .. } => {
                (feasible_set.linear_minimizer(weights), norm2(weights), None)
            }
            Objective::MaxAbs { center, scale } => {
                let growth = Growth {
                    r: 1.0,
                    mu: 2.0 * scale,
                    p: f64::INFINITY,
                };
                (centred(center)?, *scale, Some(growth))
            }
            Objective::L1Distance { center, scale } => {
                let growth = Growth {
                    r: 1.0,
                    mu: 2.0 * scale,
                    p: 1.0,
                };
                (centred(center)?, scale * (d as f64).sqrt(), Some(growth))
            }
            Objective::Quadratic { center, scale } => {
                let reach = feasible_set.euclidean_diameter();
                let growth = Growth {
                    r: 2.0,
                    mu: 2.0 * scale,
                    p: 2.0,
                };
                (centred(center)?, 2.0 * scale * reach, Some(growth))
            }
        };
        let optimal_value = objective.value(&minimizer);
        Ok(Self {
            objective,
            feasible_set,
            minimizer,
            optimal_value,
            lipschitz,
            growth,
            margin: None,
        })
    }

    /// Restricts evaluation to `X + margin·B₂`.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = Some(margin);
        self
    }

    pub fn dim(&self) -> usize {
        self.minimizer.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Error unless `x` lies in the enlarged set `X_τ`.
    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::OutsideDomain {
                point: x.to_vec(),
                distance: f64::INFINITY,
                margin: self.margin.unwrap_or(f64::INFINITY),
            });
        }
        if let Some(margin) = self.margin {
            if !self.feasible_set.contains(x) {
                let distance = self.feasible_set.distance(x);
                if distance > margin + crate::feasible::MEMBERSHIP_TOL {
                    return Err(Error::OutsideDomain {
                        point: x.to_vec(),
                        distance,
                        margin,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `f(x) − f*` at a feasible point.
pub fn suboptimality(problem: &ProblemSpec, x: &[f64]) -> Result<f64> {
    if !problem.feasible_set.contains(x) {
        return Err(Error::Domain(format!("point {x:?} is not feasible")));
    }
    Ok((problem.value(x) - problem.optimal_value).max(0.0))
}

/// Assumption parameters: tail exponent `κ`, moment Lipschitz constant `M₂`,
/// adversarial level `Δ` and smoothing radius `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub kappa: f64,
    pub m2: f64,
    pub delta: f64,
    pub tau: f64,
}

impl AssumptionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Config(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.m2 > 0.0 && self.m2.is_finite()) {
            return Err(Error::Config(format!(
                "M2 must be positive, got {}",
                self.m2
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "Delta must be non-negative, got {}",
                self.delta
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// Validation plus `τ ≤ margin` for problems with a finite enlargement.
    pub fn validate_for(&self, problem: &ProblemSpec) -> Result<()> {
        self.validate()?;
        if let Some(m) = problem.margin {
            if self.tau > m {
                return Err(Error::Config(format!(
                    "tau = {} exceeds the domain margin {m}",
                    self.tau
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic perturbation `δ(x)` with `|δ(x)| ≤ Δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversarialNoise {
    #[default]
    None,
    /// `Δ·sign(sin(⟨h, x⟩ / ε₀))`; `h` defaults to `(1, …, 1)/√d`.
    SignSine {
        level: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
        scale: f64,
    },
}

impl AdversarialNoise {
    pub fn level(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::SignSine { level, .. } => *level,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::None => 0.0,
            Self::SignSine {
                level,
                direction,
                scale,
            } => {
                let proj = match direction {
                    Some(h) => dot(h, x),
                    None => x.iter().sum::<f64>() / (x.len() as f64).sqrt(),
                };
                if (proj / scale).sin() >= 0.0 {
                    *level
                } else {
                    -*level
                }
            }
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if let Self::SignSine {
            level,
            direction,
            scale,
        } = self
        {
            if !(*level >= 0.0 && level.is_finite()) {
                return Err(Error::Config(
                    "adversarial level must be non-negative".into(),
                ));
            }
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(Error::Config("adversarial scale must be positive".into()));
            }
            if let Some(h) = direction {
                if h.len() != d {
                    return Err(Error::Config(
                        "adversarial direction has wrong length".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Two-point zeroth-order oracle `φ(x, ξ) = f(x, ξ) + δ(x)` with
/// `f(x, ξ) = f(x) + ⟨ξ, x − x_ref⟩`.
///
/// Immutable apart from the atomic query counter, so one oracle can be
/// shared across worker threads.
#[derive(Debug)]
pub struct NoisyOracle {
    problem: Arc<ProblemSpec>,
    stochastic: StochasticNoiseModel,
    adversarial: AdversarialNoise,
    reference: Vec<f64>,
    queries: AtomicU64,
}

impl NoisyOracle {
    /// The noise reference point `x_ref` is the centre of the feasible set.
    pub fn new(
        problem: Arc<ProblemSpec>,
        stochastic: StochasticNoiseModel,
        adversarial: AdversarialNoise,
        kappa: f64,
    ) -> Result<Self> {
        stochastic.validate(kappa)?;
        adversarial.validate(problem.dim())?;
        let reference = problem.feasible_set.center();
        Ok(Self {
            problem,
            stochastic,
            adversarial,
            reference,
            queries: AtomicU64::new(0),
        })
    }

    /// Oracle without stochastic or adversarial noise.
    pub fn noiseless(problem: Arc<ProblemSpec>) -> Self {
        let reference = problem.feasible_set.center();
        Self {
            problem,
            stochastic: StochasticNoiseModel::None,
            adversarial: AdversarialNoise::None,
            reference,
            queries: AtomicU64::new(0),
        }
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn stochastic(&self) -> &StochasticNoiseModel {
        &self.stochastic
    }

    pub fn adversarial(&self) -> &AdversarialNoise {
        &self.adversarial
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// The realization `ξ` selected by `realization`.
    pub fn noise_for(&self, realization: u64) -> Vec<f64> {
        let mut xi = vec![0.0; self.dim()];
        if !self.stochastic.is_none() {
            let mut s = SeedStream::new(realization, NOISE_STREAM);
            self.stochastic.sample_into(&mut s, &mut xi);
        }
        xi
    }

    /// `f(x, ξ)` without the adversarial term.
    pub fn stochastic_value(&self, x: &[f64], xi: &[f64]) -> f64 {
        let mut v = self.problem.value(x);
        if !self.stochastic.is_none() {
            v += x
                .iter()
                .zip(&self.reference)
                .zip(xi)
                .map(|((a, r), n)| n * (a - r))
                .sum::<f64>();
        }
        v
    }

    /// `(φ(x, ξ), φ(y, ξ))` for the single realization `ξ` selected by
    /// `realization`.
    pub fn evaluate_pair(&self, x: &[f64], y: &[f64], realization: u64) -> Result<(f64, f64)> {
        self.problem.check_domain(x)?;
        self.problem.check_domain(y)?;
        let xi = self.noise_for(realization);
        let fx = self.stochastic_value(x, &xi) + self.adversarial.value(x);
        let fy = self.stochastic_value(y, &xi) + self.adversarial.value(y);
        self.queries.fetch_add(2, Ordering::Relaxed);
        Ok((fx, fy))
    }

    /// Single query `φ(x, ξ)`.
    pub fn evaluate(&self, x: &[f64], realization: u64) -> Result<f64> {
        self.problem.check_domain(x)?;
        let xi = self.noise_for(realization);
        let v = self.stochastic_value(x, &xi) + self.adversarial.value(x);
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(v)
    }
}
