//! Compact convex feasible sets with membership tests, Euclidean
//! projections and linear minimisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist2, norm1, norm2, norm_p};

/// Membership tolerance shared by all feasibility checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeasibleSet {
    L2Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Standard probability simplex `{x ≥ 0, Σx = 1}`.
    Simplex {
        dim: usize,
    },
    L1Ball {
        center: Vec<f64>,
        radius: f64,
    },
    LpBall {
        p: f64,
        center: Vec<f64>,
        radius: f64,
    },
}

impl FeasibleSet {
    pub fn l2_ball(dim: usize, radius: f64) -> Self {
        Self::L2Ball {
            center: vec![0.0; dim],
            radius,
        }
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Self {
        Self::L1Ball {
            center: vec![0.0; dim],
            radius,
        }
    }

    pub fn lp_ball(dim: usize, p: f64, radius: f64) -> Self {
        Self::LpBall {
            p,
            center: vec![0.0; dim],
            radius,
        }
    }

    pub fn simplex(dim: usize) -> Self {
        Self::Simplex { dim }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::L2Ball { .. } => "l2-ball",
            Self::Box { .. } => "box",
            Self::Simplex { .. } => "simplex",
            Self::L1Ball { .. } => "l1-ball",
            Self::LpBall { .. } => "lp-ball",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::L2Ball { center, .. }
            | Self::L1Ball { center, .. }
            | Self::LpBall { center, .. } => center.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::Simplex { dim } => *dim,
        }
    }

    /// Rejects empty, degenerate or inconsistent parameters.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dim() == 0 {
            return bad(format!("{}: dimension must be positive", self.name()));
        }
        match self {
            Self::L2Ball { center, radius } | Self::L1Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|v| v.is_finite()) {
                    return bad(format!(
                        "{}: radius must be positive and finite",
                        self.name()
                    ));
                }
            }
            Self::LpBall { p, center, radius } => {
                if !(*p >= 1.0 && *p <= 2.0) {
                    return bad(format!("lp-ball: p must lie in [1, 2], got {p}"));
                }
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|v| v.is_finite()) {
                    return bad("lp-ball: radius must be positive and finite".into());
                }
            }
            Self::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return bad("box: bound vectors differ in length".into());
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
                {
                    return bad("box: need finite bounds with lower <= upper".into());
                }
            }
            Self::Simplex { .. } => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, MEMBERSHIP_TOL)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match self {
            Self::L2Ball { center, radius } => dist2(x, center) <= radius + tol,
            Self::L1Ball { center, radius } => {
                x.iter()
                    .zip(center)
                    .map(|(a, c)| (a - c).abs())
                    .sum::<f64>()
                    <= radius + tol
            }
            Self::LpBall { p, center, radius } => {
                let shifted: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                norm_p(&shifted, *p) <= radius + tol
            }
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Self::Simplex { .. } => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
        }
    }

    /// A canonical interior point (centre of the ball/box, barycentre of
    /// the simplex).
    pub fn center(&self) -> Vec<f64> {
        match self {
            Self::L2Ball { center, .. }
            | Self::L1Ball { center, .. }
            | Self::LpBall { center, .. } => center.clone(),
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            Self::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
        }
    }

    /// Upper bound on the Euclidean diameter (exact for every kind except
    /// `LpBall` with `p < 2`, where the enclosing `ℓ₂` ball is used).
    pub fn euclidean_diameter(&self) -> f64 {
        match self {
            Self::L2Ball { radius, .. }
            | Self::L1Ball { radius, .. }
            | Self::LpBall { radius, .. } => 2.0 * radius,
            Self::Box { lower, upper } => dist2(lower, upper),
            Self::Simplex { .. } => std::f64::consts::SQRT_2,
        }
    }

    /// Euclidean projection `argmin_{x ∈ X} ‖x − y‖₂`.
    pub fn project_euclidean(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Self::L2Ball { center, radius } => {
                let r = dist2(y, center);
                if r <= *radius {
                    y.to_vec()
                } else {
                    let s = radius / r;
                    y.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()
                }
            }
            Self::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            Self::Simplex { .. } => project_simplex(y, 1.0),
            Self::L1Ball { center, radius } => {
                let shifted: Vec<f64> = y.iter().zip(center).map(|(a, c)| a - c).collect();
                project_l1_ball(&shifted, *radius)
                    .iter()
                    .zip(center)
                    .map(|(a, c)| a + c)
                    .collect()
            }
            Self::LpBall { p, center, radius } => {
                let shifted: Vec<f64> = y.iter().zip(center).map(|(a, c)| a - c).collect();
                project_lp_ball_euclidean(&shifted, *p, *radius)
                    .iter()
                    .zip(center)
                    .map(|(a, c)| a + c)
                    .collect()
            }
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        if self.contains_tol(x, 0.0) {
            return 0.0;
        }
        dist2(x, &self.project_euclidean(x))
    }

    /// `argmin_{x ∈ X} ⟨a, x⟩` (a vertex when the minimiser is not unique).
    pub fn linear_minimizer(&self, a: &[f64]) -> Vec<f64> {
        match self {
            Self::L2Ball { center, radius } => {
                let n = norm2(a);
                if n == 0.0 {
                    return center.clone();
                }
                center
                    .iter()
                    .zip(a)
                    .map(|(c, v)| c - radius * v / n)
                    .collect()
            }
            Self::Box { lower, upper } => a
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| if *v > 0.0 { *l } else { *u })
                .collect(),
            Self::Simplex { dim } => {
                let mut x = vec![0.0; *dim];
                x[argmin(a)] = 1.0;
                x
            }
            Self::L1Ball { center, radius } => {
                let mut x = center.clone();
                let j = argmax_abs(a);
                if a[j] != 0.0 {
                    x[j] -= radius * a[j].signum();
                }
                x
            }
            Self::LpBall { p, center, radius } => {
                if *p == 1.0 {
                    return Self::L1Ball {
                        center: center.clone(),
                        radius: *radius,
                    }
                    .linear_minimizer(a);
                }
                let q = crate::linalg::dual_exponent(*p);
                let nq = norm_p(a, q);
                if nq == 0.0 {
                    return center.clone();
                }
                center
                    .iter()
                    .zip(a)
                    .map(|(c, v)| c - radius * v.signum() * (v.abs() / nq).powf(q - 1.0))
                    .collect()
            }
        }
    }
}

fn argmin(a: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in a.iter().enumerate() {
        if *v < a[best] {
            best = i;
        }
    }
    best
}

fn argmax_abs(a: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in a.iter().enumerate() {
        if v.abs() > a[best].abs() {
            best = i;
        }
    }
    best
}

/// Euclidean projection onto `{x ≥ 0, Σx = z}` by sorting.
pub fn project_simplex(y: &[f64], z: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, v) in u.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - z) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Euclidean projection onto the centred `ℓ₁` ball of the given radius.
pub fn project_l1_ball(y: &[f64], radius: f64) -> Vec<f64> {
    if norm1(y) <= radius {
        return y.to_vec();
    }
    let magnitudes: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    project_simplex(&magnitudes, radius)
        .iter()
        .zip(y)
        .map(|(w, v)| w * v.signum())
        .collect()
}

/// Euclidean projection onto the centred `ℓ_p` ball, `p ∈ [1, 2]`.
///
/// Interior KKT form `x_i = sign(y_i)·t_i` with `t_i + λ p t_i^{p−1} = |y_i|`,
/// solved by nested bisection (inner on `t_i`, outer on `λ`).
pub fn project_lp_ball_euclidean(y: &[f64], p: f64, radius: f64) -> Vec<f64> {
    if p == 1.0 {
        return project_l1_ball(y, radius);
    }
    if p == 2.0 {
        let n = norm2(y);
        return if n <= radius {
            y.to_vec()
        } else {
            y.iter().map(|v| v * radius / n).collect()
        };
    }
    if norm_p(y, p) <= radius {
        return y.to_vec();
    }
    let solve_t = |a: f64, lambda: f64| -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0_f64, a);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + lambda * p * mid.powf(p - 1.0) > a {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-16 * a {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let mass = |lambda: f64| -> f64 { y.iter().map(|v| solve_t(v.abs(), lambda).powf(p)).sum() };
    let target = radius.powf(p);
    let mut hi = 1.0;
    while mass(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    y.iter()
        .map(|v| v.signum() * solve_t(v.abs(), hi))
        .collect()
}
