//! Mirror-map geometry: prox-functions, their conjugate gradients, Bregman
//! divergences and projections, and the closed-form constants that drive
//! every step-size schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::{dual_exponent, norm_p};
use crate::problem::AssumptionParams;

/// Floor applied to entropy log-weights relative to the largest one, so no
/// simplex coordinate underflows to exactly zero.
const LOG_WEIGHT_FLOOR: f64 = -700.0;

/// Prox-function `Ψ` defining the mirror map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProxSetup {
    /// `Ψ(x) = ½‖x‖₂²`.
    Ball,
    /// `Ψ(x) = (1+γ) Σ (x_i + γ/d) ln(x_i + γ/d)` on the simplex.
    Entropy {
        #[serde(default)]
        gamma: f64,
    },
    /// `Ψ(x) = K_q^{1/κ} · (κ/(1+κ)) ‖x‖_p^{(1+κ)/κ}` with `p ∈ (1, 2]`.
    UniformlyConvexLp { p: f64, kappa: f64 },
}

impl ProxSetup {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ball => "ball",
            Self::Entropy { .. } => "entropy",
            Self::UniformlyConvexLp { .. } => "uniformly-convex-lp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Ball => Ok(()),
            Self::Entropy { gamma } => {
                if gamma >= 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "entropy gamma must be >= 0, got {gamma}"
                    )))
                }
            }
            Self::UniformlyConvexLp { p, kappa } => {
                if !(p > 1.0 && p <= 2.0) {
                    return Err(Error::Config(format!(
                        "uniformly convex setup needs p in (1, 2], got {p}"
                    )));
                }
                if !(kappa > 0.0 && kappa <= 1.0) {
                    return Err(Error::Config(format!(
                        "uniformly convex setup needs kappa in (0, 1], got {kappa}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Primal norm exponent.
    pub fn p(&self) -> f64 {
        match self {
            Self::Ball => 2.0,
            Self::Entropy { .. } => 1.0,
            Self::UniformlyConvexLp { p, .. } => *p,
        }
    }

    /// Dual norm exponent.
    pub fn q(&self) -> f64 {
        dual_exponent(self.p())
    }

    /// Uniform-convexity certificate `(K, r)` w.r.t. `‖·‖_p`.
    ///
    /// The entropy certificate holds on the simplex for every `γ ≥ 0`: the
    /// Hessian is `(1+γ) diag(1/(x_i + γ/d))` and `Σ(x_i + γ/d) = 1 + γ`, so
    /// Cauchy–Schwarz gives `hᵀ∇²Ψ h ≥ ‖h‖₁²`.
    pub fn certificate(&self) -> (f64, f64) {
        match self {
            Self::Ball | Self::Entropy { .. } => (1.0, 2.0),
            Self::UniformlyConvexLp { kappa, .. } => (1.0, (1.0 + kappa) / kappa),
        }
    }

    /// True when `Ψ` is 1-strongly convex w.r.t. its norm.
    pub fn is_strongly_convex(&self) -> bool {
        self.certificate().1 == 2.0
    }

    /// Multiplier `K_q^{1/κ}` of the uniformly convex setup (1 otherwise).
    pub fn scale(&self) -> f64 {
        match *self {
            Self::UniformlyConvexLp { p, kappa } => k_q(dual_exponent(p), kappa).powf(1.0 / kappa),
            _ => 1.0,
        }
    }

    pub fn psi(&self, x: &[f64]) -> Result<f64> {
        match *self {
            Self::Ball => Ok(0.5 * x.iter().map(|v| v * v).sum::<f64>()),
            Self::Entropy { gamma } => {
                let shift = gamma / x.len() as f64;
                let mut total = 0.0;
                for (i, v) in x.iter().enumerate() {
                    let w = v + shift;
                    if w < 0.0 {
                        return Err(entropy_domain(i, *v));
                    }
                    if w > 0.0 {
                        total += w * w.ln();
                    }
                }
                Ok((1.0 + gamma) * total)
            }
            Self::UniformlyConvexLp { p, kappa } => {
                let s = (1.0 + kappa) / kappa;
                Ok(self.scale() / s * norm_p(x, p).powf(s))
            }
        }
    }

    /// Mirror map `∇Ψ(x)`.
    pub fn grad_psi(&self, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Self::Ball => Ok(x.to_vec()),
            Self::Entropy { gamma } => {
                let shift = gamma / x.len() as f64;
                x.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let w = v + shift;
                        if w > 0.0 {
                            Ok((1.0 + gamma) * (w.ln() + 1.0))
                        } else {
                            Err(entropy_domain(i, *v))
                        }
                    })
                    .collect()
            }
            Self::UniformlyConvexLp { p, kappa } => {
                let s = (1.0 + kappa) / kappa;
                Ok(radial_gradient(x, p, s, self.scale()))
            }
        }
    }

    /// Conjugate gradient `∇Ψ*(z) = (∇Ψ)^{-1}(z)`.
    ///
    /// For the uniformly convex setup the conjugate of `(a/s)‖·‖_p^s` is
    /// `a^{1−s'}(1/s')‖·‖_q^{s'}` with `s' = 1 + κ`.
    pub fn grad_psi_star(&self, z: &[f64]) -> Vec<f64> {
        match *self {
            Self::Ball => z.to_vec(),
            Self::Entropy { gamma } => {
                let shift = gamma / z.len() as f64;
                z.iter()
                    .map(|v| (v / (1.0 + gamma) - 1.0).exp() - shift)
                    .collect()
            }
            Self::UniformlyConvexLp { p, kappa } => {
                let s_dual = 1.0 + kappa;
                let a = self.scale();
                radial_gradient(z, dual_exponent(p), s_dual, a.powf(1.0 - s_dual))
            }
        }
    }

    /// `D_Ψ(y, x) = Ψ(y) − Ψ(x) − ⟨∇Ψ(x), y − x⟩`.
    pub fn bregman_divergence(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        if y.len() != x.len() {
            return Err(Error::Domain(
                "bregman divergence of vectors of different length".into(),
            ));
        }
        if let Self::Entropy { gamma } = *self {
            // Σ w_y ln(w_y / w_x) − Σ w_y + Σ w_x, evaluated term by term
            let shift = gamma / x.len() as f64;
            let mut total = 0.0;
            for i in 0..x.len() {
                let wx = x[i] + shift;
                let wy = y[i] + shift;
                if wx <= 0.0 {
                    return Err(entropy_domain(i, x[i]));
                }
                if wy < 0.0 {
                    return Err(entropy_domain(i, y[i]));
                }
                let t = if wy > 0.0 { wy * (wy / wx).ln() } else { 0.0 };
                total += t - wy + wx;
            }
            return Ok(((1.0 + gamma) * total).max(0.0));
        }
        let g = self.grad_psi(x)?;
        let lin: f64 = g
            .iter()
            .zip(y.iter().zip(x))
            .map(|(g, (a, b))| g * (a - b))
            .sum();
        Ok((self.psi(y)? - self.psi(x)? - lin).max(0.0))
    }

    /// Rejects `(setup, set)` pairs without an exact Bregman projection.
    pub fn supports(&self, set: &FeasibleSet) -> Result<()> {
        let ok = match (self, set) {
            (
                Self::Ball,
                FeasibleSet::L2Ball { .. }
                | FeasibleSet::Box { .. }
                | FeasibleSet::Simplex { .. }
                | FeasibleSet::L1Ball { .. },
            ) => true,
            (Self::Entropy { .. }, FeasibleSet::Simplex { .. }) => true,
            (Self::UniformlyConvexLp { p, .. }, FeasibleSet::LpBall { p: q, center, .. }) => {
                (p - q).abs() <= 1e-12 && center.iter().all(|c| *c == 0.0)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            let set_name = match set {
                FeasibleSet::LpBall { p, center, .. } if center.iter().any(|c| *c != 0.0) => {
                    format!("lp-ball(p={p}, off-centre)")
                }
                FeasibleSet::LpBall { p, .. } => format!("lp-ball(p={p})"),
                other => other.name().to_string(),
            };
            let setup_name = match self {
                Self::UniformlyConvexLp { p, .. } => format!("uniformly-convex-lp(p={p})"),
                other => other.name().to_string(),
            };
            Err(Error::UnsupportedPair {
                setup: setup_name,
                set: set_name,
            })
        }
    }

    /// Bregman projection `argmin_{x ∈ X} D_Ψ(x, y)`.
    pub fn bregman_project(&self, set: &FeasibleSet, y: &[f64]) -> Result<Vec<f64>> {
        self.supports(set)?;
        match self {
            Self::Ball => Ok(set.project_euclidean(y)),
            Self::Entropy { .. } => {
                let z = self.grad_psi(y)?;
                Ok(self.project_dual(set, &z))
            }
            Self::UniformlyConvexLp { .. } => Ok(radial_projection(set, y)),
        }
    }

    /// Projection of the primal point `∇Ψ*(z)` given only the dual point `z`.
    /// For the entropy setup this stays in log space.
    fn project_dual(&self, set: &FeasibleSet, z: &[f64]) -> Vec<f64> {
        match *self {
            Self::Entropy { gamma } if gamma == 0.0 => softmax(z),
            Self::Entropy { gamma } => entropy_simplex_projection(z, gamma),
            Self::Ball => set.project_euclidean(z),
            Self::UniformlyConvexLp { .. } => radial_projection(set, &self.grad_psi_star(z)),
        }
    }

    /// One mirror step `Π_X^Ψ(∇Ψ*(∇Ψ(x) − ν g))`.
    pub fn mirror_step(
        &self,
        set: &FeasibleSet,
        x: &[f64],
        g: &[f64],
        nu: f64,
    ) -> Result<Vec<f64>> {
        let mut z = self.grad_psi(x)?;
        for (zi, gi) in z.iter_mut().zip(g) {
            *zi -= nu * gi;
        }
        match self {
            Self::Ball => Ok(set.project_euclidean(&z)),
            _ => Ok(self.project_dual(set, &z)),
        }
    }

    /// `argmin_{x ∈ X} Ψ(x)`, the projection of the unconstrained minimiser.
    pub fn initial_point(&self, set: &FeasibleSet) -> Result<Vec<f64>> {
        self.supports(set)?;
        let z = vec![0.0; set.dim()];
        Ok(self.project_dual(set, &z))
    }

    /// Bound on the Bregman spread of the set used as the "diameter".
    ///
    /// Exact `sup_{x,y ∈ X} D_Ψ(x, y)` for the ball and uniformly convex
    /// setups. For entropy that supremum is infinite, so the bound
    /// `max_X Ψ − min_X Ψ ≥ sup_x D_Ψ(x, x₀)` is used instead (`ln d` at γ = 0).
    pub fn bregman_spread(&self, set: &FeasibleSet) -> Result<f64> {
        self.supports(set)?;
        Ok(match (self, set) {
            (Self::Ball, _) => 0.5 * set.euclidean_diameter().powi(2),
            (Self::Entropy { gamma }, FeasibleSet::Simplex { dim }) => {
                let d = *dim as f64;
                let mut vertex = vec![0.0; *dim];
                vertex[0] = 1.0;
                let uniform = vec![1.0 / d; *dim];
                let _ = gamma;
                self.psi(&vertex)? - self.psi(&uniform)?
            }
            (Self::UniformlyConvexLp { kappa, .. }, FeasibleSet::LpBall { radius, .. }) => {
                let s = (1.0 + kappa) / kappa;
                2.0 * self.scale() * radius.powf(s)
            }
            _ => unreachable!("pair checked by supports"),
        })
    }
}

fn entropy_domain(i: usize, v: f64) -> Error {
    Error::Domain(format!(
        "entropy prox-function needs positive shifted coordinates; x[{i}] = {v}"
    ))
}

/// `a ‖x‖_p^{s−1} sign(x_i) (|x_i|/‖x‖_p)^{p−1}`: gradient of `(a/s)‖x‖_p^s`,
/// with the zero subgradient at the origin.
fn radial_gradient(x: &[f64], p: f64, s: f64, a: f64) -> Vec<f64> {
    let n = norm_p(x, p);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let c = a * n.powf(s - 1.0);
    x.iter()
        .map(|v| {
            if p == 2.0 {
                c * v / n
            } else {
                c * v.signum() * (v.abs() / n).powf(p - 1.0)
            }
        })
        .collect()
}

/// Radial scaling onto the centred `ℓ_p` ball; exact Bregman projection for
/// any `Ψ` that is an increasing function of `‖x‖_p`.
fn radial_projection(set: &FeasibleSet, y: &[f64]) -> Vec<f64> {
    match set {
        FeasibleSet::LpBall { p, radius, .. } => {
            let n = norm_p(y, *p);
            if n <= *radius {
                y.to_vec()
            } else {
                y.iter().map(|v| v * (radius / n)).collect()
            }
        }
        _ => unreachable!("radial projection is only paired with lp-balls"),
    }
}

/// Entropy projection at γ = 0: `x_i ∝ exp(z_i)`, normalised in log space.
fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = z
        .iter()
        .map(|v| ((v - m).max(LOG_WEIGHT_FLOOR)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Entropy projection for γ > 0:
/// `x_i(λ) = max(0, exp((z_i − λ)/(1+γ) − 1) − γ/d)` with `Σ x_i(λ) = 1`,
/// solved by bisection on the monotone multiplier `λ`.
fn entropy_simplex_projection(z: &[f64], gamma: f64) -> Vec<f64> {
    let d = z.len() as f64;
    let shift = gamma / d;
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let coords = |lambda: f64| -> Vec<f64> {
        z.iter()
            .map(|v| ((((v - lambda) / (1.0 + gamma)) - 1.0).exp() - shift).max(0.0))
            .collect()
    };
    let mass = |lambda: f64| -> f64 { coords(lambda).iter().sum() };
    // at `lo` the largest coordinate alone is ≥ 1; at `hi` every coordinate is 0
    let mut lo = zmax - (1.0 + gamma) * ((1.0 + shift).ln() + 1.0);
    let mut hi = zmax - (1.0 + gamma) * (shift.ln() + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mut x = coords(0.5 * (lo + hi));
    let total: f64 = x.iter().sum();
    if total > 0.0 {
        x.iter_mut().for_each(|v| *v /= total);
    }
    x
}

/// `K_q = 10·max{1, (q−1)^{(1+κ)/2}}` (infinite at `q = ∞`).
pub fn k_q(q: f64, kappa: f64) -> f64 {
    10.0 * (q - 1.0).powf((1.0 + kappa) / 2.0).max(1.0)
}

/// `a_q = d^{1/q − 1/2}·min{√(32 ln d − 8), √(2q − 1)}`.
///
/// The logarithmic branch needs `d ≥ 2`; at `d = 1` the sphere is `{±1}`
/// and `‖e‖_q = 1`, so the finite-`q` branch (or 1 at `q = ∞`) is used.
pub fn a_q(d: usize, q: f64) -> f64 {
    let df = d as f64;
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let poly = (2.0 * q - 1.0).sqrt();
    let branch = if d >= 2 {
        (32.0 * df.ln() - 8.0).sqrt().min(poly)
    } else if q.is_finite() {
        poly
    } else {
        1.0
    };
    df.powf(inv_q - 0.5) * branch
}

/// `σ_q` from `σ_q^{1+κ} = 2^κ(√d a_q M₂/2^{1/4})^{1+κ} + 2^κ(d a_q Δ/τ)^{1+κ}`.
pub fn sigma_q(d: usize, a_q: f64, params: &AssumptionParams) -> f64 {
    let df = d as f64;
    let m = 1.0 + params.kappa;
    let lipschitz_term = (df.sqrt() * a_q * params.m2 / 2f64.powf(0.25)).powf(m);
    let noise_term = (df * a_q * params.delta / params.tau).powf(m);
    (2f64.powf(params.kappa) * (lipschitz_term + noise_term)).powf(1.0 / m)
}

/// Which convergence statement a schedule follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    RobustExpectation,
    ClipExpectation,
    ClipHighProb,
}

impl Regime {
    /// Exponent `e` in `D_Ψ^e = e·sup D` and `R₀^e = e·D(x*, x₀)`.
    pub fn radius_exponent(&self, kappa: f64) -> f64 {
        match self {
            Regime::RobustExpectation => (1.0 + kappa) / kappa,
            Regime::ClipExpectation | Regime::ClipHighProb => 2.0,
        }
    }
}

/// Closed-form constants consumed by schedules and echoed in run records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub dimension: usize,
    pub q: f64,
    pub a_q: f64,
    /// `None` at `q = ∞`.
    pub k_q: Option<f64>,
    pub sigma_q: f64,
    pub diameter: f64,
    pub r0: f64,
    pub regime: Regime,
}

impl GeometryConstants {
    /// `σ_q` re-evaluated for a different `τ` or `Δ`.
    pub fn sigma_for(&self, params: &AssumptionParams) -> f64 {
        sigma_q(self.dimension, self.a_q, params)
    }
}

/// Evaluates `a_q, K_q, σ_q, D_Ψ, R₀` for a setup, set and regime. Without a
/// known minimiser `R₀` falls back to the diameter.
pub fn compute_constants(
    setup: &ProxSetup,
    set: &FeasibleSet,
    params: &AssumptionParams,
    regime: Regime,
    x0: &[f64],
    x_star: Option<&[f64]>,
) -> Result<GeometryConstants> {
    setup.validate()?;
    params.validate()?;
    let d = set.dim();
    let q = setup.q();
    let a = a_q(d, q);
    let e = regime.radius_exponent(params.kappa);
    let diameter = (e * setup.bregman_spread(set)?).powf(1.0 / e);
    let r0 = match x_star {
        Some(xs) => (e * setup.bregman_divergence(xs, x0)?).powf(1.0 / e),
        None => diameter,
    };
    Ok(GeometryConstants {
        dimension: d,
        q,
        a_q: a,
        k_q: q.is_finite().then(|| k_q(q, params.kappa)),
        sigma_q: sigma_q(d, a, params),
        diameter,
        r0,
        regime,
    })
}
