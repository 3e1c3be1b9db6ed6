//! Step size, smoothing radius and clip level for each regime, and the staged
//! parameters of the restart scheme.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryConstants, Regime};
use crate::problem::{AssumptionParams, Growth};

/// How the smoothing radius is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TauPolicy {
    /// `τ = ε / M₂`.
    Accuracy { epsilon: f64 },
    /// The regime's bound-minimising radius; falls back to the `τ` in the
    /// assumption parameters when `Δ = 0` (the formula then gives 0).
    Optimal,
    /// Use the `τ` in the assumption parameters as is.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub regime: Regime,
    pub kappa: f64,
    pub nu: f64,
    pub tau: f64,
    pub clip: Option<f64>,
    pub iterations: u64,
    /// `σ_q` evaluated at the final `τ` (absent for manual schedules).
    pub sigma_q: Option<f64>,
    /// Confidence level of the high-probability regime (recorded only).
    pub delta_conf: Option<f64>,
    /// Formula that produced each value.
    pub provenance: BTreeMap<String, String>,
}

impl Schedule {
    /// A hand-specified schedule, bypassing the closed forms.
    pub fn manual(
        regime: Regime,
        kappa: f64,
        nu: f64,
        tau: f64,
        clip: Option<f64>,
        iterations: u64,
    ) -> Self {
        let provenance = ["nu", "tau", "clip"]
            .iter()
            .map(|k| (k.to_string(), "manual".to_string()))
            .collect();
        Self {
            regime,
            kappa,
            nu,
            tau,
            clip,
            iterations,
            sigma_q: None,
            delta_conf: None,
            provenance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!(
                "step size must be positive, got {}",
                self.nu
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!(
                    "clip level must be finite and positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Schedule for `T` iterations; `ε` selects `τ = ε/M₂`, otherwise the
/// optimal radius.
pub fn make_schedule(
    regime: Regime,
    constants: &GeometryConstants,
    params: &AssumptionParams,
    iterations: u64,
    epsilon: Option<f64>,
    delta_conf: Option<f64>,
) -> Result<Schedule> {
    let policy = match epsilon {
        Some(epsilon) => TauPolicy::Accuracy { epsilon },
        None => TauPolicy::Optimal,
    };
    make_schedule_with(regime, constants, params, iterations, policy, delta_conf)
}

pub fn make_schedule_with(
    regime: Regime,
    constants: &GeometryConstants,
    params: &AssumptionParams,
    iterations: u64,
    policy: TauPolicy,
    delta_conf: Option<f64>,
) -> Result<Schedule> {
    params.validate()?;
    if iterations == 0 {
        return Err(Error::Config(
            "schedule needs at least one iteration".into(),
        ));
    }
    if constants.regime != regime {
        return Err(Error::Config(format!(
            "constants were computed for {:?}, schedule requested for {regime:?}",
            constants.regime
        )));
    }
    if let Some(dc) = delta_conf {
        if !(dc > 0.0 && dc < 1.0) {
            return Err(Error::Config(format!(
                "confidence level must lie in (0, 1), got {dc}"
            )));
        }
    }
    let kappa = params.kappa;
    if regime == Regime::ClipExpectation && kappa >= 1.0 {
        return Err(Error::Config(
            "the clip level 2κD/((1−κ)ν) is undefined at kappa = 1; use the clip-high-prob regime"
                .into(),
        ));
    }
    let t = iterations as f64;
    let d = constants.dimension as f64;
    let big_d = constants.diameter;
    let r0 = constants.r0;
    let mut provenance = BTreeMap::new();

    let (tau, tau_src) = match policy {
        TauPolicy::Accuracy { epsilon } => {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Error::Config(format!(
                    "epsilon must be positive, got {epsilon}"
                )));
            }
            (epsilon / params.m2, "tau = epsilon / M2".to_string())
        }
        TauPolicy::Fixed => (params.tau, "tau fixed by configuration".to_string()),
        TauPolicy::Optimal => {
            let radius = match regime {
                Regime::RobustExpectation => r0,
                Regime::ClipExpectation => {
                    r0.powf(2.0 * kappa / (1.0 + kappa)) * big_d.powf((1.0 - kappa) / (1.0 + kappa))
                }
                Regime::ClipHighProb => big_d,
            };
            let num = d.sqrt() * params.delta * big_d
                + 4.0 * radius * d * constants.a_q * params.delta * t.powf(-kappa / (1.0 + kappa));
            let tau = (num / (2.0 * params.m2)).sqrt();
            if tau > 0.0 {
                let src = match regime {
                    Regime::RobustExpectation => {
                        "tau = sqrt((sqrt(d) Delta D + 4 R0 d a_q Delta T^(-kappa/(1+kappa))) / (2 M2))"
                    }
                    Regime::ClipExpectation => {
                        "tau = sqrt((sqrt(d) Delta D + 4 R0^(2kappa/(1+kappa)) D^((1-kappa)/(1+kappa)) d a_q Delta T^(-kappa/(1+kappa))) / (2 M2))"
                    }
                    Regime::ClipHighProb => {
                        "tau = sqrt((sqrt(d) Delta D + 4 D d a_q Delta T^(-kappa/(1+kappa))) / (2 M2))"
                    }
                };
                (tau, src.to_string())
            } else {
                (
                    params.tau,
                    "tau fixed by configuration (optimal formula vanishes at Delta = 0)"
                        .to_string(),
                )
            }
        }
    };
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!(
            "resolved tau is not positive: {tau}"
        )));
    }
    provenance.insert("tau".to_string(), tau_src);

    let sigma = constants.sigma_for(&AssumptionParams { tau, ..*params });
    provenance.insert(
        "sigma_q".to_string(),
        "sigma_q^(1+kappa) = 2^kappa (sqrt(d) a_q M2 / 2^(1/4))^(1+kappa) + 2^kappa (d a_q Delta / tau)^(1+kappa)"
            .to_string(),
    );

    let (nu, clip) = match regime {
        Regime::RobustExpectation => {
            provenance.insert(
                "nu".to_string(),
                "nu = R0^(1/kappa) / sigma_q * T^(-1/(1+kappa))".to_string(),
            );
            (
                r0.powf(1.0 / kappa) / sigma * t.powf(-1.0 / (1.0 + kappa)),
                None,
            )
        }
        Regime::ClipExpectation => {
            let nu = (r0 * r0 / (4.0 * t * sigma.powf(1.0 + kappa) * big_d.powf(1.0 - kappa)))
                .powf(1.0 / (1.0 + kappa));
            provenance.insert(
                "nu".to_string(),
                "nu = (R0^2 / (4 T sigma_q^(1+kappa) D^(1-kappa)))^(1/(1+kappa))".to_string(),
            );
            provenance.insert(
                "clip".to_string(),
                "c = 2 kappa D / ((1 - kappa) nu)".to_string(),
            );
            (nu, Some(2.0 * kappa * big_d / ((1.0 - kappa) * nu)))
        }
        Regime::ClipHighProb => {
            let c = t.powf(1.0 / (1.0 + kappa)) * sigma;
            provenance.insert(
                "clip".to_string(),
                "c = T^(1/(1+kappa)) sigma_q".to_string(),
            );
            provenance.insert("nu".to_string(), "nu = D / c".to_string());
            (big_d / c, Some(c))
        }
    };
    let schedule = Schedule {
        regime,
        kappa,
        nu,
        tau,
        clip,
        iterations,
        sigma_q: Some(sigma),
        delta_conf,
        provenance,
    };
    schedule.validate().map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("degenerate schedule: {msg}")),
        other => other,
    })?;
    Ok(schedule)
}

/// Parameters of one restart stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    /// Stage index, starting at 1.
    pub k: u32,
    pub iterations: u64,
    pub radius: f64,
    pub tau: f64,
    pub nu: f64,
    pub clip: Option<f64>,
    /// Largest admissible adversarial level for this stage.
    pub delta_threshold: f64,
}

impl StagePlan {
    pub fn schedule(&self, regime: Regime, kappa: f64, sigma_q: f64) -> Schedule {
        let mut provenance = BTreeMap::new();
        provenance.insert("stage".to_string(), format!("restart stage {}", self.k));
        Schedule {
            regime,
            kappa,
            nu: self.nu,
            tau: self.tau,
            clip: self.clip,
            iterations: self.iterations,
            sigma_q: Some(sigma_q),
            delta_conf: None,
            provenance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartPlan {
    pub regime: Regime,
    pub kappa: f64,
    pub restarts: u32,
    pub stages: Vec<StagePlan>,
    pub epsilon: f64,
    pub growth: Growth,
    /// Initial radius `R₀` (the regime's Bregman diameter).
    pub r0: f64,
    pub sigma_q: f64,
    pub delta_conf: Option<f64>,
}

impl RestartPlan {
    /// Schedule of stage `k` (1-based).
    pub fn stage_schedule(&self, k: usize) -> Schedule {
        self.stages[k - 1].schedule(self.regime, self.kappa, self.sigma_q)
    }

    pub fn total_iterations(&self) -> u64 {
        self.stages.iter().map(|s| s.iterations).sum()
    }
}

/// Smallest growth exponent the regime's restart guarantee admits.
pub fn minimum_growth_exponent(regime: Regime, kappa: f64) -> f64 {
    match regime {
        Regime::RobustExpectation => (1.0 + kappa) / kappa,
        Regime::ClipExpectation => 2.0,
        Regime::ClipHighProb => 1.0,
    }
}

/// `N = ceil((1/r) log₂(μ R₀^r / (2ε)))`, clamped at 0.
pub fn restart_count(growth: &Growth, r0: f64, epsilon: f64) -> u32 {
    let n = ((growth.mu * r0.powf(growth.r) / (2.0 * epsilon)).log2() / growth.r).ceil();
    if n > 0.0 {
        n as u32
    } else {
        0
    }
}

/// Staged budgets, radii and step sizes. `σ_q` is evaluated once with
/// `τ = ε/M₂` and shared by every stage.
pub fn make_restart_plan(
    regime: Regime,
    constants: &GeometryConstants,
    params: &AssumptionParams,
    growth: &Growth,
    epsilon: f64,
    delta_conf: Option<f64>,
) -> Result<RestartPlan> {
    params.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(growth.mu > 0.0 && growth.mu.is_finite()) {
        return Err(Error::Config(format!(
            "growth modulus must be positive, got {}",
            growth.mu
        )));
    }
    if constants.regime != regime {
        return Err(Error::Config(format!(
            "constants were computed for {:?}, plan requested for {regime:?}",
            constants.regime
        )));
    }
    let kappa = params.kappa;
    if regime == Regime::ClipExpectation && kappa >= 1.0 {
        return Err(Error::Config(
            "the clip level 2κD/((1−κ)ν) is undefined at kappa = 1; use the clip-high-prob regime"
                .into(),
        ));
    }
    let r_min = minimum_growth_exponent(regime, kappa);
    if growth.r < r_min - 1e-12 {
        return Err(Error::Config(format!(
            "restarts in the {regime:?} regime need growth exponent r >= {r_min}, got r = {}",
            growth.r
        )));
    }
    let r = growth.r;
    let mu = growth.mu;
    let r0 = constants.diameter;
    let sigma = constants.sigma_for(&AssumptionParams {
        tau: epsilon / params.m2,
        ..*params
    });
    let n = restart_count(growth, r0, epsilon);
    let d = constants.dimension as f64;
    let expo = (1.0 + kappa) / kappa;
    let mut stages = Vec::with_capacity(n as usize);
    for k in 1..=n {
        let rk = r0 / 2f64.powi(k as i32);
        let base = sigma * 2f64.powf(1.0 + r) / (mu * rk.powf(r - 1.0));
        let tk_real = base.powf(expo).ceil();
        if !(tk_real.is_finite() && tk_real < u64::MAX as f64) {
            return Err(Error::Config(format!(
                "stage {k} budget overflows: {tk_real}"
            )));
        }
        let tk = (tk_real as u64).max(1);
        let tkf = tk as f64;
        let tau = sigma * rk / (params.m2 * tkf.powf(kappa / (1.0 + kappa)));
        let (nu, clip) = match regime {
            Regime::RobustExpectation => (
                rk.powf(1.0 / kappa) / sigma * tkf.powf(-1.0 / (1.0 + kappa)),
                None,
            ),
            Regime::ClipExpectation | Regime::ClipHighProb => {
                let c = tkf.powf(1.0 / (1.0 + kappa)) * sigma;
                (rk / c, Some(c))
            }
        };
        let delta_threshold = mu * mu * r0.powf(2.0 * r - 1.0)
            / (params.m2 * d.sqrt() * 2f64.powf(k as f64 * (2.0 * r - 1.0)));
        stages.push(StagePlan {
            k,
            iterations: tk,
            radius: rk,
            tau,
            nu,
            clip,
            delta_threshold,
        });
    }
    Ok(RestartPlan {
        regime,
        kappa,
        restarts: n,
        stages,
        epsilon,
        growth: *growth,
        r0,
        sigma_q: sigma,
        delta_conf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constants(regime: Regime, sigma: f64, r0: f64, diameter: f64) -> GeometryConstants {
        GeometryConstants {
            dimension: 16,
            q: 2.0,
            a_q: 3f64.sqrt(),
            k_q: Some(10.0),
            sigma_q: sigma,
            diameter,
            r0,
            regime,
        }
    }

    fn params(kappa: f64) -> AssumptionParams {
        AssumptionParams {
            kappa,
            m2: 1.0,
            delta: 0.0,
            tau: 0.01,
        }
    }

    #[test]
    fn robust_step_size_example() {
        let c = constants(Regime::RobustExpectation, 8.239, 1.0, 1.0);
        let s = make_schedule(
            Regime::RobustExpectation,
            &c,
            &params(1.0),
            10_000,
            None,
            None,
        )
        .unwrap();
        // σ recomputed from d = 16, a = √3, M₂ = 1, Δ = 0
        let sigma = 2f64.sqrt() * 4.0 * 3f64.sqrt() / 2f64.powf(0.25);
        assert!((s.nu - 1.0 / (sigma * 100.0)).abs() < 1e-15);
        assert!((s.nu - 1.2137e-3).abs() < 1e-6);
        assert_eq!(s.clip, None);
        assert_eq!(s.tau, 0.01);
    }

    #[test]
    fn high_probability_clip_example() {
        let c = constants(Regime::ClipHighProb, 8.239, 1.0, 2.0);
        let s = make_schedule(
            Regime::ClipHighProb,
            &c,
            &params(1.0),
            10_000,
            None,
            Some(0.05),
        )
        .unwrap();
        let clip = s.clip.unwrap();
        assert!((clip - 100.0 * s.sigma_q.unwrap()).abs() < 1e-9);
        assert!((clip - 823.9).abs() < 0.1);
        assert_eq!(s.nu, 2.0 / clip);
        assert_eq!(s.delta_conf, Some(0.05));
    }

    #[test]
    fn clip_expectation_refuses_kappa_one() {
        let c = constants(Regime::ClipExpectation, 8.0, 1.0, 1.0);
        let err =
            make_schedule(Regime::ClipExpectation, &c, &params(1.0), 100, None, None).unwrap_err();
        assert!(err.is_configuration());
        assert!(err.to_string().contains("clip-high-prob"));
    }

    #[test]
    fn single_iteration_is_finite() {
        for (regime, kappa) in [
            (Regime::RobustExpectation, 0.5),
            (Regime::ClipExpectation, 0.5),
            (Regime::ClipHighProb, 1.0),
        ] {
            let c = constants(regime, 5.0, 0.7, 1.3);
            let s = make_schedule(regime, &c, &params(kappa), 1, Some(0.1), None).unwrap();
            assert!(s.nu.is_finite() && s.nu > 0.0);
            assert!(s.tau.is_finite() && s.tau > 0.0);
            assert!(s.clip.map_or(true, |c| c.is_finite() && c > 0.0));
        }
    }

    #[test]
    fn accuracy_policy_sets_tau() {
        let c = constants(Regime::ClipHighProb, 5.0, 1.0, 1.0);
        let p = AssumptionParams {
            m2: 4.0,
            ..params(1.0)
        };
        let s = make_schedule(Regime::ClipHighProb, &c, &p, 10, Some(0.2), None).unwrap();
        assert_eq!(s.tau, 0.05);
    }

    #[test]
    fn optimal_tau_with_adversarial_noise() {
        let c = constants(Regime::RobustExpectation, 5.0, 0.5, 1.0);
        let p = AssumptionParams {
            delta: 1e-4,
            ..params(1.0)
        };
        let s = make_schedule(Regime::RobustExpectation, &c, &p, 100, None, None).unwrap();
        let expected =
            ((4.0 * 1e-4 + 4.0 * 0.5 * 16.0 * 3f64.sqrt() * 1e-4 / 10.0) / 2.0f64).sqrt();
        assert!((s.tau - expected).abs() < 1e-15);
        assert!(s.provenance["tau"].starts_with("tau = sqrt"));
    }

    #[test]
    fn restart_count_example() {
        let g = Growth {
            r: 1.0,
            mu: 1.0,
            p: 2.0,
        };
        assert_eq!(restart_count(&g, 1.0, 1.0 / 32.0), 4);
        assert_eq!(restart_count(&g, 1.0, 0.5), 0);
        assert!(restart_count(&g, 1.0, 0.25) <= 1);
    }

    #[test]
    fn stage_budget_example() {
        let c = constants(Regime::RobustExpectation, 8.239, 1.0, 1.0);
        let g = Growth {
            r: 2.0,
            mu: 1.0,
            p: 2.0,
        };
        let plan =
            make_restart_plan(Regime::RobustExpectation, &c, &params(1.0), &g, 0.01, None).unwrap();
        let sigma = plan.sigma_q;
        // [σ·2³/(μ·(1/2))]² evaluated independently
        let t1 = (16.0 * sigma) * (16.0 * sigma);
        assert_eq!(plan.stages[0].iterations, t1.ceil() as u64);
        assert_eq!(plan.stages[0].iterations, 17378);
        assert_eq!(plan.stages[0].radius, 0.5);
    }

    #[test]
    fn growth_exponent_constraints() {
        let g = Growth {
            r: 1.0,
            mu: 1.0,
            p: 2.0,
        };
        let c = constants(Regime::RobustExpectation, 8.0, 1.0, 1.0);
        let err = make_restart_plan(Regime::RobustExpectation, &c, &params(1.0), &g, 0.01, None)
            .unwrap_err();
        assert!(err.is_configuration());
        let c = constants(Regime::ClipExpectation, 8.0, 1.0, 1.0);
        assert!(
            make_restart_plan(Regime::ClipExpectation, &c, &params(0.5), &g, 0.01, None).is_err()
        );
        let c = constants(Regime::ClipHighProb, 8.0, 1.0, 1.0);
        assert!(make_restart_plan(Regime::ClipHighProb, &c, &params(0.5), &g, 0.01, None).is_ok());
    }

    proptest! {
        #[test]
        fn doubling_epsilon_drops_few_restarts(
            r in 1.0f64..6.0,
            mu in 0.01f64..100.0,
            r0 in 0.01f64..100.0,
            eps in 1e-8f64..10.0,
        ) {
            let g = Growth { r, mu, p: 2.0 };
            let n1 = restart_count(&g, r0, eps) as i64;
            let n2 = restart_count(&g, r0, 2.0 * eps) as i64;
            prop_assert!(n2 <= n1);
            prop_assert!(n1 - n2 <= (1.0 / r).ceil() as i64);
        }

        #[test]
        fn stage_radii_halve(r in 1.0f64..3.0, eps in 1e-4f64..0.1) {
            let c = constants(Regime::ClipHighProb, 3.0, 1.0, 1.0);
            let g = Growth { r, mu: 1.0, p: 2.0 };
            let plan = make_restart_plan(Regime::ClipHighProb, &c, &params(1.0), &g, eps, None).unwrap();
            for (i, s) in plan.stages.iter().enumerate() {
                prop_assert_eq!(s.k as usize, i + 1);
                prop_assert_eq!(s.radius, 1.0 / 2f64.powi(s.k as i32));
                prop_assert!(s.nu > 0.0 && s.tau > 0.0 && s.iterations >= 1);
            }
        }
    }
}
