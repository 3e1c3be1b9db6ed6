//! Trial execution on a bounded worker pool.

use rayon::prelude::*;
use zomd::{zo_clip_smd, zo_restarts, zo_rsmd, RunRecord, SeedStream};

use crate::config::{Algorithm, ExperimentConfig, Plan, Point, Prepared};
use crate::error::{BenchError, Result};
use crate::stats::{fit_power_law, fit_rows, PowerFit, Statistic, SummaryRow};

/// Runs trial `trial` of a prepared point on stream `(seed, trial)`.
pub fn run_trial(p: &Prepared, trial: u64) -> zomd::Result<RunRecord> {
    let mut stream = SeedStream::new(p.seed, trial);
    match (&p.plan, p.algorithm) {
        (Plan::Restarts(plan), _) => {
            zo_restarts(&p.oracle, &p.setup, &p.set, plan, &mut stream, &p.options)
        }
        (Plan::Single(s), Algorithm::ZoRsmd) => {
            zo_rsmd(&p.oracle, &p.setup, &p.set, s, &mut stream, &p.options)
        }
        (Plan::Single(s), _) => {
            zo_clip_smd(&p.oracle, &p.setup, &p.set, s, &mut stream, &p.options)
        }
    }
}

/// All trials of a point, in trial order regardless of scheduling.
pub fn run_point(p: &Prepared, threads: Option<usize>) -> Result<Vec<RunRecord>> {
    let work = || -> Result<Vec<RunRecord>> {
        (0..p.trials)
            .into_par_iter()
            .map(|t| run_trial(p, t).map_err(BenchError::from))
            .collect()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| BenchError::Stats(format!("cannot build worker pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[derive(Debug)]
pub struct PointResult {
    pub point: Point,
    pub hash: String,
    pub records: Vec<RunRecord>,
}

#[derive(Debug)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub sweep: bool,
    pub points: Vec<PointResult>,
    pub rows: Vec<SummaryRow>,
    /// Median suboptimality against `T`, when the grid allows a fit.
    pub rate: Option<PowerFit>,
    /// Noise floor against `Δ` for delta sweeps.
    pub floor: Option<PowerFit>,
}

/// Validates every point, then runs them in order.
pub fn run_experiment(
    config: &ExperimentConfig,
    sweep: bool,
    threads: Option<usize>,
) -> Result<Outcome> {
    let points = config.validate(sweep)?;
    let mut results = Vec::with_capacity(points.len());
    let mut rows = Vec::with_capacity(points.len());
    for point in points {
        let prepared = point.config.prepare()?;
        let records = run_point(&prepared, threads)?;
        let hash = point.config.hash();
        rows.push(SummaryRow::from_records(
            &hash,
            &point.label,
            point.value,
            prepared.plan.iterations(),
            &records,
        )?);
        results.push(PointResult {
            point,
            hash,
            records,
        });
    }
    let swept = config.sweep.as_ref().map(|s| s.parameter).filter(|_| sweep);
    let rate = match swept {
        None | Some(crate::config::SweepParameter::Iterations) if rows.len() >= 4 => {
            fit_rows(&mut rows, Statistic::Median).ok()
        }
        _ => None,
    };
    let floor = match swept {
        Some(crate::config::SweepParameter::Delta) => {
            let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.noise_floor).collect();
            fit_power_law(&xs, &ys, 3).ok()
        }
        _ => None,
    };
    Ok(Outcome {
        config: config.clone(),
        sweep,
        points: results,
        rows,
        rate,
        floor,
    })
}
