//! Declarative experiment description, read from TOML.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zomd::schedule::make_schedule_with;
use zomd::solver::{validate_clip_smd, validate_restarts, validate_rsmd};
use zomd::{
    compute_constants, make_restart_plan, AdversarialNoise, AssumptionParams, FeasibleSet, Growth,
    NoisyOracle, Objective, ProblemSpec, ProxSetup, Regime, RestartPlan, RunOptions, Schedule,
    StochasticNoiseModel, TauPolicy,
};

use crate::error::{at, BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub problem: ProblemSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub method: MethodSection,
    pub params: ParamsSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub objective: Objective,
    pub feasible_set: FeasibleSet,
    /// Half-width of the enlarged evaluation domain; absent means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub stochastic: StochasticNoiseModel,
    #[serde(default)]
    pub adversarial: AdversarialNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    ZoRsmd,
    ZoClipSmd,
    ZoRestarts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub algorithm: Algorithm,
    pub setup: ProxSetup,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_conf: Option<f64>,
    /// Run the clipped driver without clipping.
    #[serde(default)]
    pub disable_clipping: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub kappa: f64,
    /// Defaults to the objective's Lipschitz constant plus the
    /// `(1+κ)`-th moment of the noise norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    /// Defaults to the adversarial noise level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_tau_policy")]
    pub tau_policy: TauPolicy,
}

fn default_tau_policy() -> TauPolicy {
    TauPolicy::Optimal
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<u64>>,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ratio")]
    pub checkpoint_ratio: f64,
    /// Use the known minimiser for `R₀`; otherwise the set diameter.
    #[serde(default = "yes")]
    pub use_minimizer: bool,
}

fn one() -> u64 {
    1
}

fn default_ratio() -> f64 {
    1.3
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartSection {
    pub epsilon: f64,
    /// Overrides the growth condition derived from the objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<Growth>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Iterations,
    Delta,
    Kappa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// One fully specified run configuration of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub label: String,
    /// Value of the swept quantity (`T` when nothing is swept).
    pub value: f64,
    pub config: ExperimentConfig,
}

/// Everything a trial needs, built and checked once per point.
#[derive(Debug)]
pub struct Prepared {
    pub algorithm: Algorithm,
    pub oracle: NoisyOracle,
    pub setup: ProxSetup,
    pub set: FeasibleSet,
    pub plan: Plan,
    pub options: RunOptions,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum Plan {
    Single(Schedule),
    Restarts(RestartPlan),
}

impl Plan {
    /// Iterations per trial.
    pub fn iterations(&self) -> u64 {
        match self {
            Plan::Single(s) => s.iterations,
            Plan::Restarts(p) => p.total_iterations(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, file: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Parse {
            file: file.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BenchError::config("", e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, with
    /// the output location left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let json = serde_json::to_string(&c).expect("config serialises to JSON");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// The runs making up `run` (one per `t_grid` entry) or `sweep` (one per
    /// swept value).
    pub fn points(&self, sweep: bool) -> Result<Vec<Point>> {
        let mut base = self.clone();
        base.sweep = None;
        base.run.t_grid = None;
        if self.method.algorithm == Algorithm::ZoRestarts {
            if sweep && self.sweep.is_some() {
                return Err(BenchError::config(
                    "sweep",
                    "restart experiments cannot be swept",
                ));
            }
            base.run.iterations = None;
            return Ok(vec![Point {
                label: "restarts".into(),
                value: 0.0,
                config: base,
            }]);
        }
        if sweep {
            let s = self
                .sweep
                .as_ref()
                .ok_or_else(|| BenchError::config("sweep", "missing [sweep] table"))?;
            if self.run.t_grid.is_some() {
                return Err(BenchError::config(
                    "run.t_grid",
                    "use sweep.values to vary T in a sweep",
                ));
            }
            if s.values.is_empty() {
                return Err(BenchError::config("sweep.values", "no values to sweep"));
            }
            return s
                .values
                .iter()
                .map(|&v| {
                    let mut c = base.clone();
                    let label = match s.parameter {
                        SweepParameter::Iterations => {
                            if !(v >= 0.0 && v.fract() == 0.0) {
                                return Err(BenchError::config(
                                    "sweep.values",
                                    format!(
                                        "iteration counts must be non-negative integers, got {v}"
                                    ),
                                ));
                            }
                            c.run.iterations = Some(v as u64);
                            format!("T{}", v as u64)
                        }
                        SweepParameter::Delta => {
                            c.params.delta = Some(v);
                            match &mut c.noise.adversarial {
                                AdversarialNoise::SignSine { level, .. } => *level = v,
                                AdversarialNoise::None => {
                                    return Err(BenchError::config(
                                        "noise.adversarial",
                                        "a delta sweep needs adversarial noise to scale",
                                    ))
                                }
                            }
                            format!("delta{v:e}")
                        }
                        SweepParameter::Kappa => {
                            c.params.kappa = v;
                            format!("kappa{v}")
                        }
                    };
                    Ok(Point {
                        label,
                        value: v,
                        config: c,
                    })
                })
                .collect();
        }
        let grid = match (&self.run.t_grid, self.run.iterations) {
            (Some(_), Some(_)) => {
                return Err(BenchError::config(
                    "run",
                    "give either iterations or t_grid, not both",
                ))
            }
            (Some(g), None) if !g.is_empty() => g.clone(),
            (None, Some(t)) => vec![t],
            _ => {
                return Err(BenchError::config(
                    "run.iterations",
                    "missing iteration budget",
                ))
            }
        };
        Ok(grid
            .into_iter()
            .map(|t| {
                let mut c = base.clone();
                c.run.iterations = Some(t);
                Point {
                    label: format!("T{t}"),
                    value: t as f64,
                    config: c,
                }
            })
            .collect())
    }

    /// Checks every point of the experiment without running anything.
    pub fn validate(&self, sweep: bool) -> Result<Vec<Point>> {
        let points = self.points(sweep)?;
        for p in &points {
            p.config.prepare()?;
        }
        Ok(points)
    }

    /// Builds oracle, constants and schedule for a single point.
    pub fn prepare(&self) -> Result<Prepared> {
        if self.run.trials == 0 {
            return Err(BenchError::config("run.trials", "need at least one trial"));
        }
        if !(self.run.checkpoint_ratio > 1.0 && self.run.checkpoint_ratio.is_finite()) {
            return Err(BenchError::config(
                "run.checkpoint_ratio",
                format!("must exceed 1, got {}", self.run.checkpoint_ratio),
            ));
        }
        let mut problem = ProblemSpec::new(
            self.problem.objective.clone(),
            self.problem.feasible_set.clone(),
        )
        .map_err(at("problem"))?;
        if let Some(m) = self.problem.margin {
            if !(m >= 0.0) {
                return Err(BenchError::config(
                    "problem.margin",
                    format!("must be >= 0, got {m}"),
                ));
            }
            problem = problem.with_margin(m);
        }
        let kappa = self.params.kappa;
        let problem = Arc::new(problem);
        let oracle = NoisyOracle::new(
            problem.clone(),
            self.noise.stochastic.clone(),
            self.noise.adversarial.clone(),
            kappa,
        )
        .map_err(at("noise"))?;
        let setup = self.method.setup.clone();
        setup.validate().map_err(at("method.setup"))?;
        let set = problem.feasible_set.clone();
        setup.supports(&set).map_err(at("method.setup"))?;
        let m2 = match self.params.m2 {
            Some(m) => m,
            None => self
                .noise
                .stochastic
                .effective_lipschitz(problem.lipschitz, kappa)
                .map_err(at("noise.stochastic"))?,
        };
        let delta = self.params.delta.unwrap_or(self.noise.adversarial.level());
        if delta < self.noise.adversarial.level() {
            return Err(BenchError::config(
                "params.delta",
                format!(
                    "{delta} is below the adversarial noise level {}",
                    self.noise.adversarial.level()
                ),
            ));
        }
        let tau = match (self.params.tau, self.params.tau_policy) {
            (Some(t), _) => t,
            (None, TauPolicy::Accuracy { epsilon }) => epsilon / m2,
            (None, TauPolicy::Optimal) if delta > 0.0 => 1.0,
            (None, _) => {
                return Err(BenchError::config(
                    "params.tau",
                    "required by the fixed policy and by the optimal policy when delta = 0",
                ))
            }
        };
        let params = AssumptionParams {
            kappa,
            m2,
            delta,
            tau,
        };
        params.validate().map_err(at("params"))?;
        let regime = self.method.regime;
        let x0 = setup.initial_point(&set).map_err(at("method.setup"))?;
        let x_star = self
            .run
            .use_minimizer
            .then_some(problem.minimizer.as_slice());
        let constants = compute_constants(&setup, &set, &params, regime, &x0, x_star)
            .map_err(at("method.regime"))?;
        let plan = match self.method.algorithm {
            Algorithm::ZoRestarts => {
                let r = self.restart.as_ref().ok_or_else(|| {
                    BenchError::config("restart", "zo-restarts needs a [restart] table")
                })?;
                let growth = match &r.growth {
                    Some(g) => *g,
                    None => problem
                        .growth
                        .ok_or_else(|| {
                            BenchError::config(
                                "restart.growth",
                                "objective has no known growth condition",
                            )
                        })?
                        .in_norm(setup.p(), set.dim()),
                };
                let plan = make_restart_plan(
                    regime,
                    &constants,
                    &params,
                    &growth,
                    r.epsilon,
                    self.method.delta_conf,
                )
                .map_err(at("restart"))?;
                validate_restarts(&setup, &set, &plan).map_err(at("method"))?;
                Plan::Restarts(plan)
            }
            algorithm => {
                let t = self.run.iterations.ok_or_else(|| {
                    BenchError::config("run.iterations", "missing iteration budget")
                })?;
                // a zero budget keeps the one-step constants and runs nothing
                let mut schedule = make_schedule_with(
                    regime,
                    &constants,
                    &params,
                    t.max(1),
                    self.params.tau_policy,
                    self.method.delta_conf,
                )
                .map_err(at("method.regime"))?;
                schedule.iterations = t;
                if algorithm == Algorithm::ZoRsmd {
                    validate_rsmd(&setup, &set, &schedule).map_err(at("method"))?;
                } else {
                    validate_clip_smd(&setup, &set, &schedule).map_err(at("method"))?;
                }
                Plan::Single(schedule)
            }
        };
        if self.method.disable_clipping && self.method.algorithm == Algorithm::ZoRsmd {
            return Err(BenchError::config(
                "method.disable_clipping",
                "zo-rsmd does not clip",
            ));
        }
        Ok(Prepared {
            algorithm: self.method.algorithm,
            oracle,
            setup,
            set,
            plan,
            options: RunOptions {
                checkpoint_ratio: self.run.checkpoint_ratio,
                keep_iterates: false,
                disable_clipping: self.method.disable_clipping,
            },
            trials: self.run.trials,
            seed: self.run.seed,
        })
    }
}
