//! Gradient-free stochastic mirror descent for non-smooth convex problems
//! with heavy-tailed noise.
//!
//! The library evaluates only function values. Each step queries a noisy
//! zeroth-order oracle at two points `x ± τe` on a random direction `e`,
//! forms a two-point gradient estimate and takes a mirror step under a
//! chosen prox-function. Three drivers are provided: [`zo_rsmd`] (plain
//! mirror descent for uniformly convex setups), [`zo_clip_smd`] (the same
//! with `q`-norm clipping) and [`zo_restarts`] (staged restarts for sharp
//! objectives).

pub mod error;
pub mod estimator;
pub mod feasible;
pub mod geometry;
pub mod linalg;
pub mod problem;
pub mod randomness;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use estimator::{
    clip, estimate_gradient, estimate_smoothed_value, moment_check, ClippedGradient, GradientSample,
};
pub use feasible::FeasibleSet;
pub use geometry::{a_q, compute_constants, k_q, sigma_q, GeometryConstants, ProxSetup, Regime};
pub use problem::{
    suboptimality, AdversarialNoise, AssumptionParams, Growth, NoisyOracle, Objective, ProblemSpec,
};
pub use randomness::{sample_noise, sample_sphere, Estimate, SeedStream, StochasticNoiseModel};
pub use schedule::{make_restart_plan, make_schedule, RestartPlan, Schedule, StagePlan, TauPolicy};
pub use solver::{
    zo_clip_smd, zo_restarts, zo_rsmd, Checkpoint, RunOptions, RunRecord, StageRecord,
};
