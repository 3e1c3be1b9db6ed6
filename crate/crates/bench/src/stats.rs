//! Order statistics, log-log rate fits and per-point summaries.

use serde::{Deserialize, Serialize};
use zomd::RunRecord;

use crate::error::{BenchError, Result};

/// Trials needed before quantiles at level 0.9 or above are reported.
pub const MIN_TRIALS_HIGH_QUANTILE: usize = 50;

/// Nearest-rank quantile: the `⌈level·n⌉`-th smallest value (the minimum at
/// level 0).
pub fn quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(BenchError::Stats("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(BenchError::Stats(format!(
            "quantile level {level} outside [0, 1]"
        )));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((level * v.len() as f64).ceil() as usize).max(1);
    Ok(v[rank - 1])
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointQuantiles {
    pub iter: u64,
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

/// Quantiles of the suboptimality across trials at every checkpoint. All
/// records must share their checkpoint iterations.
pub fn quantile_report(records: &[RunRecord], levels: &[f64]) -> Result<Vec<CheckpointQuantiles>> {
    let needed = if levels.iter().any(|&l| l >= 0.9) {
        MIN_TRIALS_HIGH_QUANTILE
    } else {
        1
    };
    if records.len() < needed {
        return Err(BenchError::Stats(format!(
            "quantiles at level >= 0.9 need at least {needed} trials, got {}",
            records.len()
        )));
    }
    let marks: Vec<u64> = records[0].checkpoints.iter().map(|c| c.iter).collect();
    let mut out = Vec::with_capacity(marks.len());
    for (i, &iter) in marks.iter().enumerate() {
        let mut sample = Vec::with_capacity(records.len());
        for r in records {
            match r.checkpoints.get(i) {
                Some(c) if c.iter == iter => sample.push(c.subopt),
                _ => {
                    return Err(BenchError::Stats(format!(
                        "trial {} has no checkpoint at iteration {iter}",
                        r.stream
                    )))
                }
            }
        }
        let values = levels
            .iter()
            .map(|&l| quantile(&sample, l))
            .collect::<Result<Vec<_>>>()?;
        out.push(CheckpointQuantiles {
            iter,
            levels: levels.to_vec(),
            values,
        });
    }
    Ok(out)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two standard errors of the slope from the residual variance.
    pub half_width: f64,
    pub points: usize,
    /// Pairs dropped because `y` was not positive.
    pub excluded: usize,
}

/// Fits `y ≈ e^b x^a` over the pairs with positive `y`; needs `min_points`
/// of them.
pub fn fit_power_law(xs: &[f64], ys: &[f64], min_points: usize) -> Result<PowerFit> {
    if xs.len() != ys.len() {
        return Err(BenchError::Stats("x and y have different lengths".into()));
    }
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(BenchError::Stats("abscissae must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let excluded = xs.len() - pts.len();
    let need = min_points.max(2);
    if pts.len() < need {
        return Err(BenchError::Stats(format!(
            "fit needs at least {need} positive points, got {} ({excluded} excluded)",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(BenchError::Stats("all abscissae are equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half_width = if pts.len() > 2 {
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        2.0 * (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(PowerFit {
        slope,
        intercept,
        half_width,
        points: pts.len(),
        excluded,
    })
}

/// Rate fit over a `T`-grid: at least 4 usable points spanning two decades.
pub fn fit_rate(iterations: &[f64], values: &[f64]) -> Result<PowerFit> {
    let fit = fit_power_law(iterations, values, 4)?;
    let used: Vec<f64> = iterations
        .iter()
        .zip(values)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&t, _)| t)
        .collect();
    let lo = used.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = used.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(BenchError::Stats(format!(
            "rate fit needs a grid spanning two decades, got [{lo}, {hi}]"
        )));
    }
    Ok(fit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Mean,
    Median,
}

/// Mean of the checkpoint suboptimalities in the second half of the run,
/// then the median across trials.
pub fn noise_floor(records: &[RunRecord]) -> Result<f64> {
    let per_trial = records
        .iter()
        .map(|r| {
            let last = r.checkpoints.last().map_or(0, |c| c.iter);
            let tail: Vec<f64> = r
                .checkpoints
                .iter()
                .filter(|c| 2 * c.iter >= last)
                .map(|c| c.subopt)
                .collect();
            mean(&tail)
        })
        .collect::<Vec<_>>();
    median(&per_trial)
}

/// Summary of one point of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config_hash: String,
    pub label: String,
    /// Value of the swept quantity.
    pub value: f64,
    pub iterations: u64,
    pub trials: u64,
    pub mean: f64,
    pub median: f64,
    /// Absent with fewer than 50 trials.
    pub q90: Option<f64>,
    pub q99: Option<f64>,
    pub queries: u64,
    /// Rate fitted across the experiment's points (filled in afterwards).
    pub slope: Option<f64>,
    pub half_width: Option<f64>,
    pub noise_floor: f64,
}

impl SummaryRow {
    pub fn from_records(
        config_hash: &str,
        label: &str,
        value: f64,
        iterations: u64,
        records: &[RunRecord],
    ) -> Result<Self> {
        let finals: Vec<f64> = records.iter().map(|r| r.final_suboptimality).collect();
        if finals.is_empty() {
            return Err(BenchError::Stats("no records to summarise".into()));
        }
        let high = finals.len() >= MIN_TRIALS_HIGH_QUANTILE;
        Ok(Self {
            config_hash: config_hash.to_string(),
            label: label.to_string(),
            value,
            iterations,
            trials: records.len() as u64,
            mean: mean(&finals),
            median: median(&finals)?,
            q90: if high {
                Some(quantile(&finals, 0.9)?)
            } else {
                None
            },
            q99: if high {
                Some(quantile(&finals, 0.99)?)
            } else {
                None
            },
            queries: records.iter().map(|r| r.queries).sum(),
            slope: None,
            half_width: None,
            noise_floor: noise_floor(records)?,
        })
    }

    pub fn statistic(&self, which: Statistic) -> f64 {
        match which {
            Statistic::Mean => self.mean,
            Statistic::Median => self.median,
        }
    }
}

/// Fits `statistic` against `T` across rows and stores the slope in each.
pub fn fit_rows(rows: &mut [SummaryRow], which: Statistic) -> Result<PowerFit> {
    let ts: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.statistic(which)).collect();
    let fit = fit_rate(&ts, &ys)?;
    for r in rows.iter_mut() {
        r.slope = Some(fit.slope);
        r.half_width = Some(fit.half_width);
    }
    Ok(fit)
}
