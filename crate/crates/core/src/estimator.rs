//! Two-point gradient estimator, norm clipping and Monte Carlo diagnostics of
//! the ball-smoothed objective.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_p;
use crate::problem::NoisyOracle;
use crate::randomness::{sample_sphere, Estimate, RunningMoments, SeedStream};

/// `g = (d/2τ)(φ⁺ − φ⁻)·e` together with the draw that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub g: Vec<f64>,
    pub direction: Vec<f64>,
    /// `(φ(x + τe, ξ), φ(x − τe, ξ))`.
    pub values: (f64, f64),
    pub tau: f64,
}

impl GradientSample {
    /// The scalar `λ` with `g = λe`.
    pub fn magnitude(&self) -> f64 {
        let d = self.direction.len() as f64;
        d / (2.0 * self.tau) * (self.values.0 - self.values.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClippedGradient {
    pub g: Vec<f64>,
    pub clip_level: f64,
    pub was_clipped: bool,
}

/// One two-point estimate at `x`: draws `e` from the sphere, then a noise
/// realization shared by both queries.
pub fn estimate_gradient(
    oracle: &NoisyOracle,
    x: &[f64],
    tau: f64,
    stream: &mut SeedStream,
) -> Result<GradientSample> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "smoothing radius must be positive, got {tau}"
        )));
    }
    let d = x.len();
    let e = sample_sphere(stream, d)?;
    let realization = stream.next_seed();
    let plus: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + tau * b).collect();
    let minus: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a - tau * b).collect();
    let (fp, fm) = oracle.evaluate_pair(&plus, &minus, realization)?;
    let lambda = d as f64 / (2.0 * tau) * (fp - fm);
    Ok(GradientSample {
        g: e.iter().map(|v| lambda * v).collect(),
        direction: e,
        values: (fp, fm),
        tau,
    })
}

/// `ĝ = g·min(1, c/‖g‖_q)`, with the scale nudged down so `‖ĝ‖_q ≤ c` holds
/// in floating point as well.
pub fn clip(g: &[f64], c: f64, q: f64) -> Result<ClippedGradient> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!(
            "clip level must be positive, got {c}"
        )));
    }
    if !(q >= 1.0) {
        return Err(Error::Domain(format!(
            "clip norm exponent must be >= 1, got {q}"
        )));
    }
    let n = norm_p(g, q);
    if n <= c {
        return Ok(ClippedGradient {
            g: g.to_vec(),
            clip_level: c,
            was_clipped: false,
        });
    }
    if !n.is_finite() {
        return Err(Error::Numerical(format!(
            "cannot clip a vector of norm {n}"
        )));
    }
    let mut scale = c / n;
    loop {
        let out: Vec<f64> = g.iter().map(|v| v * scale).collect();
        if norm_p(&out, q) <= c {
            return Ok(ClippedGradient {
                g: out,
                clip_level: c,
                was_clipped: true,
            });
        }
        scale = scale.next_down();
    }
}

/// Monte Carlo estimate of `f̂_τ(x) = E_{u,ξ} f(x + τu, ξ)` with `u` uniform
/// in the unit ball, drawn as `U^{1/d}·e`.
pub fn estimate_smoothed_value(
    oracle: &NoisyOracle,
    x: &[f64],
    tau: f64,
    n_samples: usize,
    stream: &mut SeedStream,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::Insufficient {
            what: "smoothing samples",
            needed: 1,
            got: 0,
        });
    }
    let d = x.len();
    let mut acc = RunningMoments::default();
    let mut point = vec![0.0; d];
    for _ in 0..n_samples {
        let e = sample_sphere(stream, d)?;
        let r = stream.random::<f64>().powf(1.0 / d as f64);
        for i in 0..d {
            point[i] = x[i] + tau * r * e[i];
        }
        let realization = stream.next_seed();
        acc.push(oracle.evaluate(&point, realization)?);
    }
    Ok(Estimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        samples: n_samples as u64,
    })
}

/// Empirical `E‖g‖_q^{1+κ}` over `n_samples ≥ 10⁴` estimator draws at `x`.
pub fn moment_check(
    oracle: &NoisyOracle,
    x: &[f64],
    tau: f64,
    q: f64,
    kappa: f64,
    n_samples: usize,
    stream: &mut SeedStream,
) -> Result<Estimate> {
    const MIN_SAMPLES: usize = 10_000;
    if n_samples < MIN_SAMPLES {
        return Err(Error::Insufficient {
            what: "moment samples",
            needed: MIN_SAMPLES,
            got: n_samples,
        });
    }
    let mut acc = RunningMoments::default();
    for _ in 0..n_samples {
        let s = estimate_gradient(oracle, x, tau, stream)?;
        acc.push(norm_p(&s.g, q).powf(1.0 + kappa));
    }
    Ok(Estimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        samples: n_samples as u64,
    })
}
