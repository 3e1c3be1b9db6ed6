//! Seeded sampling: unit-sphere directions and heavy-tailed noise vectors.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// A reproducible random stream identified by `(root, stream)`.
///
/// Distinct stream ids under the same root select disjoint ChaCha streams.
/// The counter is the word position inside that stream, so a stream can be
/// resumed exactly with [`SeedStream::at`].
#[derive(Clone, Debug)]
pub struct SeedStream {
    root: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl SeedStream {
    pub fn new(root: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(root);
        rng.set_stream(stream);
        Self { root, stream, rng }
    }

    /// Reconstructs a stream positioned at `counter` words.
    pub fn at(root: u64, stream: u64, counter: u128) -> Self {
        let mut s = Self::new(root, stream);
        s.rng.set_word_pos(counter);
        s
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Fresh 64-bit seed drawn from this stream.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl RngCore for SeedStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Uniform draw from the Euclidean unit sphere in `ℝ^d` (normalised
/// Gaussian; an all-zero draw is rejected and redrawn).
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::Domain("sphere dimension must be positive".into()));
    }
    let mut v = vec![0.0; d];
    sample_sphere_into(rng, &mut v);
    Ok(v)
}

pub(crate) fn sample_sphere_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let n = norm2(out);
        if n > 0.0 && n.is_finite() {
            for v in out.iter_mut() {
                *v /= n;
            }
            return;
        }
    }
}

/// Law of the stochastic part of `f(x, ξ) = f(x) + ⟨ξ, x − x_ref⟩`.
///
/// Non-trivial kinds draw `ξ = R·v` with `v` uniform on the unit sphere and a
/// heavy-tailed radius `R`, so `ξ` is symmetric and `E[ξ] = 0` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StochasticNoiseModel {
    #[default]
    None,
    /// `P(R > r) = (scale / r)^alpha` for `r ≥ scale`.
    Pareto { alpha: f64, scale: f64 },
    /// `R = scale·|T|` with `T` Student-t with `dof` degrees of freedom.
    StudentT { dof: f64, scale: f64 },
}

impl StochasticNoiseModel {
    pub fn is_none(&self) -> bool {
        match self {
            Self::None => true,
            Self::Pareto { scale, .. } | Self::StudentT { scale, .. } => *scale == 0.0,
        }
    }

    /// Tail index: moments of `‖ξ‖` of order below it are finite.
    pub fn tail_index(&self) -> f64 {
        match self {
            Self::None => f64::INFINITY,
            Self::Pareto { alpha, .. } => *alpha,
            Self::StudentT { dof, .. } => *dof,
        }
    }

    /// Checks parameters and that the `(1+κ)`-th moment of `‖ξ‖` is finite.
    pub fn validate(&self, kappa: f64) -> Result<()> {
        let (tail, scale) = match self {
            Self::None => return Ok(()),
            Self::Pareto { alpha, scale } => (*alpha, *scale),
            Self::StudentT { dof, scale } => (*dof, *scale),
        };
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!(
                "noise scale must be finite and non-negative, got {scale}"
            )));
        }
        if !(tail > 1.0 + kappa) {
            return Err(Error::MomentAssumption {
                tail,
                bound: 1.0 + kappa,
            });
        }
        Ok(())
    }

    /// Closed form of `E‖ξ‖₂^m` (`None` when the moment is infinite).
    pub fn norm_moment(&self, m: f64) -> Option<f64> {
        match *self {
            Self::None => Some(0.0),
            Self::Pareto { alpha, scale } => {
                if scale == 0.0 {
                    Some(0.0)
                } else if m < alpha {
                    Some(alpha * scale.powf(m) / (alpha - m))
                } else {
                    None
                }
            }
            Self::StudentT { dof, scale } => {
                if scale == 0.0 {
                    Some(0.0)
                } else if m < dof {
                    // E|T|^m = ν^{m/2} Γ((m+1)/2) Γ((ν−m)/2) / (√π Γ(ν/2))
                    let ln =
                        0.5 * m * dof.ln() + ln_gamma(0.5 * (m + 1.0)) + ln_gamma(0.5 * (dof - m))
                            - 0.5 * std::f64::consts::PI.ln()
                            - ln_gamma(0.5 * dof);
                    Some(scale.powf(m) * ln.exp())
                } else {
                    None
                }
            }
        }
    }

    /// Lipschitz constant in the moment sense for `f(·, ξ)` when the
    /// deterministic part is `lipschitz`-Lipschitz: `M₂ + (E‖ξ‖^{1+κ})^{1/(1+κ)}`
    /// (Minkowski bound on `E[(M₂ + ‖ξ‖)^{1+κ}]^{1/(1+κ)}`).
    pub fn effective_lipschitz(&self, lipschitz: f64, kappa: f64) -> Result<f64> {
        self.validate(kappa)?;
        let m = self
            .norm_moment(1.0 + kappa)
            .ok_or(Error::MomentAssumption {
                tail: self.tail_index(),
                bound: 1.0 + kappa,
            })?;
        Ok(lipschitz + m.powf(1.0 / (1.0 + kappa)))
    }

    pub(crate) fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Pareto { alpha, scale } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                scale * u.powf(-1.0 / alpha)
            }
            Self::StudentT { dof, scale } => {
                // dof > 1 is guaranteed by validation
                let t = StudentT::new(dof).expect("validated dof");
                scale * t.sample(rng).abs()
            }
        }
    }

    /// Writes one draw of `ξ` into `out` (zeros for the trivial model).
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if self.is_none() {
            out.fill(0.0);
            return;
        }
        let r = self.sample_radius(rng);
        sample_sphere_into(rng, out);
        for v in out.iter_mut() {
            *v *= r;
        }
    }
}

/// One draw of the noise vector `ξ ∈ ℝ^d`.
pub fn sample_noise<R: Rng + ?Sized>(
    model: &StochasticNoiseModel,
    kappa: f64,
    rng: &mut R,
    d: usize,
) -> Result<Vec<f64>> {
    model.validate(kappa)?;
    if d == 0 {
        return Err(Error::Domain("noise dimension must be positive".into()));
    }
    let mut out = vec![0.0; d];
    model.sample_into(rng, &mut out);
    Ok(out)
}

/// Streaming mean / variance accumulator (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Parallel merge of two accumulators.
    pub fn merge(&mut self, other: &RunningMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Empirical `(E‖ξ‖₂^{1+κ})^{1/(1+κ)}` over `n_samples` draws; the standard
/// error is propagated through the power by the delta method.
pub fn moment_report<R: Rng + ?Sized>(
    model: &StochasticNoiseModel,
    kappa: f64,
    d: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    const MIN_SAMPLES: usize = 10_000;
    if n_samples < MIN_SAMPLES {
        return Err(Error::Insufficient {
            what: "moment samples",
            needed: MIN_SAMPLES,
            got: n_samples,
        });
    }
    model.validate(kappa)?;
    if model.is_none() {
        return Ok(Estimate {
            value: 0.0,
            stderr: 0.0,
            samples: n_samples as u64,
        });
    }
    let _ = d; // the radial law makes ‖ξ‖ independent of d; kept for the API
    let m = 1.0 + kappa;
    let mut acc = RunningMoments::default();
    for _ in 0..n_samples {
        acc.push(model.sample_radius(rng).powf(m));
    }
    let mean = acc.mean();
    let value = mean.powf(1.0 / m);
    let stderr = if mean > 0.0 {
        acc.stderr() * value / (m * mean)
    } else {
        0.0
    };
    Ok(Estimate {
        value,
        stderr,
        samples: n_samples as u64,
    })
}
