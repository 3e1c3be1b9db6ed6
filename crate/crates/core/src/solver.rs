//! The three drivers: robust mirror descent, clipped mirror descent and
//! restarts for functions with `r`-growth.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{clip, estimate_gradient};
use crate::feasible::FeasibleSet;
use crate::geometry::{ProxSetup, Regime};
use crate::linalg::{all_finite, norm_p};
use crate::problem::{suboptimality, NoisyOracle};
use crate::randomness::SeedStream;
use crate::schedule::{RestartPlan, Schedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Ratio between consecutive checkpoint iteration counts.
    pub checkpoint_ratio: f64,
    /// Keep every iterate `x_0, …, x_{T−1}` (debug only).
    pub keep_iterates: bool,
    /// Run the clipped driver with the clip step switched off (ablation).
    pub disable_clipping: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            checkpoint_ratio: 1.3,
            keep_iterates: false,
            disable_clipping: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iter: u64,
    pub queries: u64,
    /// Suboptimality of the running average of the first `iter` iterates
    /// (of `x₀` at `iter = 0`).
    pub subopt: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: u32,
    pub iterations: u64,
    pub radius: f64,
    pub suboptimality: f64,
    pub delta_threshold: f64,
    /// The oracle's adversarial level exceeds `delta_threshold`.
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub stream: u64,
    pub schedule: Option<Schedule>,
    pub plan: Option<RestartPlan>,
    pub checkpoints: Vec<Checkpoint>,
    pub stages: Vec<StageRecord>,
    pub queries: u64,
    pub final_x: Vec<f64>,
    pub final_suboptimality: f64,
    /// Largest `‖g‖_q` seen before clipping.
    pub max_grad_norm: f64,
    pub clipped_steps: u64,
    pub noise_threshold_exceeded: bool,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vec<f64>>>,
}

/// Iteration counts `0, 1, …` growing geometrically by `ratio`, ending at `t`.
pub fn checkpoint_iterations(t: u64, ratio: f64) -> Vec<u64> {
    let mut out = vec![0];
    if t == 0 {
        return out;
    }
    let ratio = if ratio > 1.0 { ratio } else { 1.3 };
    let mut next = 1.0f64;
    loop {
        let it = next.ceil() as u64;
        if it >= t {
            break;
        }
        if it > *out.last().unwrap() {
            out.push(it);
        }
        next *= ratio;
    }
    out.push(t);
    out
}

struct Phase {
    average: Vec<f64>,
    checkpoints: Vec<Checkpoint>,
    max_grad_norm: f64,
    clipped_steps: u64,
    iterates: Option<Vec<Vec<f64>>>,
}

/// `T` mirror-descent steps from `x0`, returning the average of
/// `x_0, …, x_{T−1}` (or `x0` when `T = 0`).
#[allow(clippy::too_many_arguments)]
fn run_phase(
    oracle: &NoisyOracle,
    setup: &ProxSetup,
    set: &FeasibleSet,
    schedule: &Schedule,
    clip_level: Option<f64>,
    x0: Vec<f64>,
    stream: &mut SeedStream,
    options: &RunOptions,
    marks: &[u64],
    start: Instant,
) -> Result<Phase> {
    let problem = oracle.problem();
    let t = schedule.iterations;
    let q = setup.q();
    let d = x0.len();
    let mut x = x0;
    let mut sum = vec![0.0; d];
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut marks = marks.iter().peekable();
    let mut iterates = options.keep_iterates.then(Vec::new);
    let mut max_grad_norm = 0.0f64;
    let mut clipped_steps = 0;

    if marks.peek() == Some(&&0) {
        marks.next();
        checkpoints.push(Checkpoint {
            iter: 0,
            queries: 0,
            subopt: suboptimality(problem, &x)?,
            wall_ms: elapsed_ms(start),
        });
    }
    for k in 0..t {
        for (s, v) in sum.iter_mut().zip(&x) {
            *s += v;
        }
        if let Some(store) = iterates.as_mut() {
            store.push(x.clone());
        }
        let j = k + 1;
        if marks.peek() == Some(&&j) && j < t {
            marks.next();
            let avg: Vec<f64> = sum.iter().map(|s| s / j as f64).collect();
            checkpoints.push(Checkpoint {
                iter: j,
                queries: 2 * j,
                subopt: suboptimality(problem, &avg)?,
                wall_ms: elapsed_ms(start),
            });
        }
        let sample = estimate_gradient(oracle, &x, schedule.tau, stream)?;
        let norm = norm_p(&sample.g, q);
        if !norm.is_finite() {
            return Err(Error::Numerical(format!(
                "gradient estimate has non-finite norm at iteration {j}"
            )));
        }
        max_grad_norm = max_grad_norm.max(norm);
        let g = match clip_level {
            Some(c) => {
                let out = clip(&sample.g, c, q)?;
                clipped_steps += out.was_clipped as u64;
                out.g
            }
            None => sample.g,
        };
        x = setup.mirror_step(set, &x, &g, schedule.nu)?;
        if !all_finite(&x) {
            return Err(Error::Numerical(format!(
                "iterate became non-finite at iteration {j}"
            )));
        }
    }
    let average = if t == 0 {
        x
    } else {
        sum.iter().map(|s| s / t as f64).collect()
    };
    if t > 0 && marks.peek() == Some(&&t) {
        checkpoints.push(Checkpoint {
            iter: t,
            queries: 2 * t,
            subopt: suboptimality(problem, &average)?,
            wall_ms: elapsed_ms(start),
        });
    }
    Ok(Phase {
        average,
        checkpoints,
        max_grad_norm,
        clipped_steps,
        iterates,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn check_robust(setup: &ProxSetup, set: &FeasibleSet, regime: Regime, kappa: f64) -> Result<()> {
    setup.validate()?;
    setup.supports(set)?;
    if regime != Regime::RobustExpectation {
        return Err(Error::Config(format!(
            "zo-rsmd runs the robust-expectation schedule, got {regime:?}"
        )));
    }
    if setup.q().is_infinite() {
        return Err(Error::Config(format!(
            "the robust schedule is not available for `{}` (dual exponent q = inf); use a clip regime",
            setup.name()
        )));
    }
    let needed = (1.0 + kappa) / kappa;
    let (_, r) = setup.certificate();
    if (r - needed).abs() > 1e-12 * needed {
        return Err(Error::Config(format!(
            "setup `{}` is uniformly convex of degree {r}, the robust schedule at kappa = {kappa} needs degree {needed}",
            setup.name()
        )));
    }
    Ok(())
}

fn check_clip(
    setup: &ProxSetup,
    set: &FeasibleSet,
    regime: Regime,
    clip_level: Option<f64>,
) -> Result<f64> {
    setup.validate()?;
    setup.supports(set)?;
    if regime == Regime::RobustExpectation {
        return Err(Error::Config(
            "zo-clip-smd needs a clip-expectation or clip-high-prob schedule".into(),
        ));
    }
    if !setup.is_strongly_convex() {
        return Err(Error::Config(format!(
            "zo-clip-smd needs a 1-strongly convex setup; `{}` has degree {}",
            setup.name(),
            setup.certificate().1
        )));
    }
    match clip_level {
        Some(c) if c > 0.0 && c.is_finite() => Ok(c),
        other => Err(Error::Config(format!(
            "zo-clip-smd needs a finite positive clip level, got {other:?}"
        ))),
    }
}

fn finish(
    algorithm: &str,
    stream: &SeedStream,
    schedule: Option<Schedule>,
    oracle: &NoisyOracle,
    phase: Phase,
    start: Instant,
) -> Result<RunRecord> {
    let final_suboptimality = suboptimality(oracle.problem(), &phase.average)?;
    let queries = schedule.as_ref().map_or(0, |s| 2 * s.iterations);
    Ok(RunRecord {
        algorithm: algorithm.to_string(),
        seed: stream.root(),
        stream: stream.stream(),
        schedule,
        plan: None,
        checkpoints: phase.checkpoints,
        stages: Vec::new(),
        queries,
        final_x: phase.average,
        final_suboptimality,
        max_grad_norm: phase.max_grad_norm,
        clipped_steps: phase.clipped_steps,
        noise_threshold_exceeded: false,
        wall_ms: elapsed_ms(start),
        iterates: phase.iterates,
    })
}

/// Preconditions of [`zo_rsmd`] without running it.
pub fn validate_rsmd(setup: &ProxSetup, set: &FeasibleSet, schedule: &Schedule) -> Result<()> {
    check_robust(setup, set, schedule.regime, schedule.kappa)?;
    schedule.validate()
}

/// Preconditions of [`zo_clip_smd`] without running it.
pub fn validate_clip_smd(setup: &ProxSetup, set: &FeasibleSet, schedule: &Schedule) -> Result<()> {
    check_clip(setup, set, schedule.regime, schedule.clip)?;
    schedule.validate()
}

/// Preconditions of [`zo_restarts`] without running it.
pub fn validate_restarts(setup: &ProxSetup, set: &FeasibleSet, plan: &RestartPlan) -> Result<()> {
    match plan.regime {
        Regime::RobustExpectation => check_robust(setup, set, plan.regime, plan.kappa)?,
        _ => {
            check_clip(setup, set, plan.regime, Some(1.0))?;
        }
    }
    for k in 1..=plan.stages.len() {
        plan.stage_schedule(k).validate()?;
    }
    Ok(())
}

/// Robust stochastic mirror descent with two-point estimates.
pub fn zo_rsmd(
    oracle: &NoisyOracle,
    setup: &ProxSetup,
    set: &FeasibleSet,
    schedule: &Schedule,
    stream: &mut SeedStream,
    options: &RunOptions,
) -> Result<RunRecord> {
    check_robust(setup, set, schedule.regime, schedule.kappa)?;
    schedule.validate()?;
    let start = Instant::now();
    let x0 = setup.initial_point(set)?;
    let marks = checkpoint_iterations(schedule.iterations, options.checkpoint_ratio);
    let phase = run_phase(
        oracle, setup, set, schedule, None, x0, stream, options, &marks, start,
    )?;
    finish(
        "zo-rsmd",
        stream,
        Some(schedule.clone()),
        oracle,
        phase,
        start,
    )
}

/// Mirror descent with each estimate clipped to `‖ĝ‖_q ≤ c`.
pub fn zo_clip_smd(
    oracle: &NoisyOracle,
    setup: &ProxSetup,
    set: &FeasibleSet,
    schedule: &Schedule,
    stream: &mut SeedStream,
    options: &RunOptions,
) -> Result<RunRecord> {
    let c = check_clip(setup, set, schedule.regime, schedule.clip)?;
    schedule.validate()?;
    let start = Instant::now();
    let x0 = setup.initial_point(set)?;
    let marks = checkpoint_iterations(schedule.iterations, options.checkpoint_ratio);
    let level = (!options.disable_clipping).then_some(c);
    let phase = run_phase(
        oracle, setup, set, schedule, level, x0, stream, options, &marks, start,
    )?;
    let name = if options.disable_clipping {
        "zo-smd-unclipped"
    } else {
        "zo-clip-smd"
    };
    finish(name, stream, Some(schedule.clone()), oracle, phase, start)
}

/// Restarted mirror descent: stage `k` runs the base driver for `T_k`
/// iterations at radius `R₀/2^k` from the previous stage's average.
pub fn zo_restarts(
    oracle: &NoisyOracle,
    setup: &ProxSetup,
    set: &FeasibleSet,
    plan: &RestartPlan,
    stream: &mut SeedStream,
    options: &RunOptions,
) -> Result<RunRecord> {
    match plan.regime {
        Regime::RobustExpectation => check_robust(setup, set, plan.regime, plan.kappa)?,
        _ => {
            check_clip(setup, set, plan.regime, Some(1.0))?;
        }
    }
    let start = Instant::now();
    let problem = oracle.problem();
    let mut x = setup.initial_point(set)?;
    let level = oracle.adversarial().level();
    let mut checkpoints = vec![Checkpoint {
        iter: 0,
        queries: 0,
        subopt: suboptimality(problem, &x)?,
        wall_ms: elapsed_ms(start),
    }];
    let mut stages = Vec::with_capacity(plan.stages.len());
    let mut iter = 0u64;
    let mut queries = 0u64;
    let mut max_grad_norm = 0.0f64;
    let mut clipped_steps = 0;
    let mut exceeded = false;
    let mut iterates = options.keep_iterates.then(Vec::new);
    for (i, stage) in plan.stages.iter().enumerate() {
        let schedule = plan.stage_schedule(i + 1);
        schedule.validate()?;
        let clip_level = match plan.regime {
            Regime::RobustExpectation => None,
            _ if options.disable_clipping => None,
            _ => Some(check_clip(setup, set, plan.regime, schedule.clip)?),
        };
        let phase = run_phase(
            oracle,
            setup,
            set,
            &schedule,
            clip_level,
            x,
            stream,
            options,
            &[],
            start,
        )?;
        x = phase.average;
        iter += stage.iterations;
        queries += 2 * stage.iterations;
        max_grad_norm = max_grad_norm.max(phase.max_grad_norm);
        clipped_steps += phase.clipped_steps;
        if let (Some(all), Some(mut part)) = (iterates.as_mut(), phase.iterates) {
            all.append(&mut part);
        }
        let subopt = suboptimality(problem, &x)?;
        let violated = level > stage.delta_threshold;
        exceeded |= violated;
        checkpoints.push(Checkpoint {
            iter,
            queries,
            subopt,
            wall_ms: elapsed_ms(start),
        });
        stages.push(StageRecord {
            k: stage.k,
            iterations: stage.iterations,
            radius: stage.radius,
            suboptimality: subopt,
            delta_threshold: stage.delta_threshold,
            violated,
        });
    }
    let final_suboptimality = suboptimality(problem, &x)?;
    Ok(RunRecord {
        algorithm: "zo-restarts".to_string(),
        seed: stream.root(),
        stream: stream.stream(),
        schedule: None,
        plan: Some(plan.clone()),
        checkpoints,
        stages,
        queries,
        final_x: x,
        final_suboptimality,
        max_grad_norm,
        clipped_steps,
        noise_threshold_exceeded: exceeded,
        wall_ms: elapsed_ms(start),
        iterates,
    })
}
