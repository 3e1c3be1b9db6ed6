//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use zomd::linalg::norm_p;
use zomd::{
    clip, estimate_gradient, estimate_smoothed_value, moment_check, AdversarialNoise, FeasibleSet,
    NoisyOracle, Objective, ProblemSpec, ProxSetup, SeedStream, StochasticNoiseModel,
};
use zomd_bench::config::Plan;
use zomd_bench::report::{csv_string, strip_timing};
use zomd_bench::stats::{fit_power_law, quantile};
use zomd_bench::{run_experiment, run_point, ExperimentConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).expect("shipped config parses")
}

fn lp(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn random_in(set: &FeasibleSet, rng: &mut SeedStream) -> Vec<f64> {
    let d = set.dim();
    match set {
        FeasibleSet::Simplex { .. } => {
            let w: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        }
        FeasibleSet::Box { lower, upper } => (0..d)
            .map(|i| lower[i] + (upper[i] - lower[i]) * rng.random::<f64>())
            .collect(),
        FeasibleSet::L2Ball { center, radius } => ball_point(center, *radius, 2.0, rng),
        FeasibleSet::L1Ball { center, radius } => ball_point(center, *radius, 1.0, rng),
        FeasibleSet::LpBall { p, center, radius } => ball_point(center, *radius, *p, rng),
    }
}

fn ball_point(center: &[f64], radius: f64, p: f64, rng: &mut SeedStream) -> Vec<f64> {
    let v: Vec<f64> = center
        .iter()
        .map(|_| 2.0 * rng.random::<f64>() - 1.0)
        .collect();
    let n = lp(&v, p);
    let r = radius * rng.random::<f64>();
    v.iter().zip(center).map(|(a, c)| c + a / n * r).collect()
}

fn supported() -> Vec<(ProxSetup, FeasibleSet)> {
    vec![
        (ProxSetup::Ball, FeasibleSet::l2_ball(6, 1.5)),
        (
            ProxSetup::Ball,
            FeasibleSet::Box {
                lower: vec![-1.0, 0.0, 0.2, -3.0],
                upper: vec![1.0, 0.5, 0.4, 3.0],
            },
        ),
        (ProxSetup::Ball, FeasibleSet::simplex(5)),
        (ProxSetup::Ball, FeasibleSet::l1_ball(5, 2.0)),
        (ProxSetup::Entropy { gamma: 0.0 }, FeasibleSet::simplex(8)),
        (ProxSetup::Entropy { gamma: 0.5 }, FeasibleSet::simplex(5)),
        (
            ProxSetup::UniformlyConvexLp { p: 1.5, kappa: 0.5 },
            FeasibleSet::lp_ball(6, 1.5, 1.0),
        ),
        (
            ProxSetup::UniformlyConvexLp { p: 2.0, kappa: 1.0 },
            FeasibleSet::lp_ball(4, 2.0, 2.0),
        ),
        (
            ProxSetup::UniformlyConvexLp {
                p: 1.25,
                kappa: 0.2,
            },
            FeasibleSet::lp_ball(5, 1.25, 0.7),
        ),
    ]
}

fn c1_uniform_convexity() -> Verdict {
    let mut rng = SeedStream::new(101, 0);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut total = 0;
    for (setup, set) in supported() {
        let (k, r) = setup.certificate();
        for _ in 0..1000 {
            let x = random_in(&set, &mut rng);
            let y = random_in(&set, &mut rng);
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let gap =
                setup.bregman_divergence(&y, &x).unwrap() - k / r * lp(&diff, setup.p()).powf(r);
            worst = worst.min(gap);
            if gap < -1e-10 {
                violations += 1;
            }
            total += 1;
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations in {total} pairs, smallest gap {worst:.3e}"),
    )
}

fn c2_conjugacy() -> Verdict {
    let mut rng = SeedStream::new(102, 0);
    let mut worst = 0.0f64;
    for (setup, set) in supported() {
        for _ in 0..1000 {
            let x = random_in(&set, &mut rng);
            let back = setup.grad_psi_star(&setup.grad_psi(&x).unwrap());
            let err: Vec<f64> = x.iter().zip(&back).map(|(a, b)| a - b).collect();
            worst = worst.max(lp(&err, 2.0) / lp(&x, 2.0));
        }
    }
    verdict(worst <= 1e-9, format!("max relative error {worst:.3e}"))
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimises `‖x − y‖²` over lattice points of spacing `h` inside the box
/// `[lo, lo + n·h]³` that satisfy `inside`.
fn lattice_min(
    y: &[f64],
    lo: [f64; 3],
    n: i64,
    h: f64,
    inside: &dyn Fn(&[f64; 3]) -> bool,
) -> [f64; 3] {
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let p = [
                    lo[0] + i as f64 * h,
                    lo[1] + j as f64 * h,
                    lo[2] + k as f64 * h,
                ];
                if inside(&p) {
                    let v = sq(&p, y);
                    if v < best.0 {
                        best = (v, p);
                    }
                }
            }
        }
    }
    best.1
}

fn c3_projection() -> Verdict {
    let h = 1e-3;
    let mut rng = SeedStream::new(103, 0);
    let mut grid_err = 0.0f64;
    let simplex = FeasibleSet::simplex(3);
    for _ in 0..5 {
        let y: Vec<f64> = (0..3).map(|_| 3.0 * rng.random::<f64>() - 1.0).collect();
        let p = ProxSetup::Ball.bregman_project(&simplex, &y).unwrap();
        let n = 1000i64;
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 0..=n {
            for j in 0..=(n - i) {
                let g = [i as f64 * h, j as f64 * h, (n - i - j) as f64 * h];
                let v = sq(&g, &y);
                if v < best.0 {
                    best = (v, g);
                }
            }
        }
        grid_err = grid_err.max(lp(
            &p.iter()
                .zip(&best.1)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
            f64::INFINITY,
        ));
    }
    let l1 = FeasibleSet::l1_ball(3, 1.0);
    let inside = |p: &[f64; 3]| p.iter().map(|v| v.abs()).sum::<f64>() <= 1.0 + 1e-12;
    for _ in 0..5 {
        let y: Vec<f64> = (0..3).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let p = ProxSetup::Ball.bregman_project(&l1, &y).unwrap();
        let coarse = lattice_min(&y, [-1.0; 3], 200, 1e-2, &inside);
        let fine = lattice_min(
            &y,
            [coarse[0] - 0.02, coarse[1] - 0.02, coarse[2] - 0.02],
            40,
            h,
            &inside,
        );
        grid_err = grid_err.max(lp(
            &p.iter().zip(&fine).map(|(a, b)| a - b).collect::<Vec<_>>(),
            f64::INFINITY,
        ));
    }
    let mut worst_vi = f64::INFINITY;
    for (setup, set) in supported() {
        for _ in 0..1000 {
            let y: Vec<f64> = match setup {
                ProxSetup::Entropy { .. } => (0..set.dim())
                    .map(|_| 0.01 + 2.0 * rng.random::<f64>())
                    .collect(),
                _ => (0..set.dim())
                    .map(|_| 8.0 * rng.random::<f64>() - 4.0)
                    .collect(),
            };
            let p = setup.bregman_project(&set, &y).unwrap();
            let gp = setup.grad_psi(&p).unwrap();
            let gy = setup.grad_psi(&y).unwrap();
            let x = random_in(&set, &mut rng);
            let vi: f64 = (0..x.len()).map(|i| (gp[i] - gy[i]) * (x[i] - p[i])).sum();
            worst_vi = worst_vi.min(vi);
        }
    }
    verdict(
        grid_err <= h + 1e-12 && worst_vi >= -1e-8,
        format!("grid deviation {grid_err:.3e} (resolution {h:e}), smallest VI {worst_vi:.3e}"),
    )
}

fn c4_unbiasedness() -> Verdict {
    let d = 16;
    let a: Vec<f64> = (0..d).map(|i| ((i as f64) * 0.7).sin()).collect();
    let problem = ProblemSpec::new(
        Objective::Linear {
            weights: a.clone(),
            offset: 0.0,
        },
        FeasibleSet::l2_ball(d, 1.0),
    )
    .unwrap();
    let oracle = NoisyOracle::new(
        Arc::new(problem),
        StochasticNoiseModel::StudentT {
            dof: 3.0,
            scale: 0.5,
        },
        AdversarialNoise::None,
        1.0,
    )
    .unwrap();
    let x: Vec<f64> = (0..d).map(|i| 0.05 * (i as f64 - 8.0) / 8.0).collect();
    let n = 1_000_000usize;
    let mut sum = vec![0.0; d];
    let mut sumsq = vec![0.0; d];
    let mut s = SeedStream::new(104, 0);
    for _ in 0..n {
        let g = estimate_gradient(&oracle, &x, 0.05, &mut s).unwrap().g;
        for i in 0..d {
            sum[i] += g[i];
            sumsq[i] += g[i] * g[i];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|v| v / nf).collect();
    let se: f64 = (0..d)
        .map(|i| (sumsq[i] / nf - mean[i] * mean[i]) / nf)
        .sum::<f64>()
        .sqrt();
    let err = lp(
        &mean.iter().zip(&a).map(|(m, t)| m - t).collect::<Vec<_>>(),
        2.0,
    );
    verdict(
        err <= 5.0 * se,
        format!("‖mean − a‖₂ = {err:.4e}, 5·SE = {:.4e}", 5.0 * se),
    )
}

/// `a_q` and `σ_q^{1+κ}` written out from their closed forms.
fn a_q_ref(d: usize, q: f64) -> f64 {
    let df = d as f64;
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    df.powf(inv_q - 0.5) * (32.0 * df.ln() - 8.0).sqrt().min((2.0 * q - 1.0).sqrt())
}

fn sigma_pow_ref(d: usize, q: f64, kappa: f64, m2: f64, delta: f64, tau: f64) -> f64 {
    let a = a_q_ref(d, q);
    let df = d as f64;
    let m = 1.0 + kappa;
    2f64.powf(kappa)
        * ((df.sqrt() * a * m2 / 2f64.powf(0.25)).powf(m) + (df * a * delta / tau).powf(m))
}

/// Sharp objective on the unit ball with Pareto noise; returns the oracle
/// and `M₂ = L + (E R^{1+κ})^{1/(1+κ)}` from the Pareto moment.
fn moment_oracle(d: usize, kappa: f64, delta: f64) -> (NoisyOracle, f64) {
    let (alpha, scale) = (3.0, 0.2);
    let center: Vec<f64> = (0..d)
        .map(|i| if i % 2 == 0 { 0.3 } else { -0.2 })
        .collect();
    let problem = ProblemSpec::new(
        Objective::Sharp {
            center,
            scale: 1.0,
            tilt: None,
        },
        FeasibleSet::l2_ball(d, 1.0),
    )
    .unwrap();
    let adversarial = if delta > 0.0 {
        AdversarialNoise::SignSine {
            level: delta,
            direction: None,
            scale: 0.01,
        }
    } else {
        AdversarialNoise::None
    };
    let oracle = NoisyOracle::new(
        Arc::new(problem),
        StochasticNoiseModel::Pareto { alpha, scale },
        adversarial,
        kappa,
    )
    .unwrap();
    let m = 1.0 + kappa;
    let moment = alpha * scale.powf(m) / (alpha - m);
    (oracle, 1.0 + moment.powf(1.0 / m))
}

fn c5_moment() -> Verdict {
    let d = 8;
    let tau = 0.05;
    let mut failures = 0;
    let mut tightest = 0.0f64;
    for kappa in [0.5, 1.0] {
        for q in [2.0, f64::INFINITY] {
            for delta in [0.0, 0.01] {
                let (oracle, m2) = moment_oracle(d, kappa, delta);
                let bound = sigma_pow_ref(d, q, kappa, m2, delta, tau);
                let mut s = SeedStream::new(105, (kappa * 10.0) as u64);
                let est = moment_check(&oracle, &[0.0; 8], tau, q, kappa, 100_000, &mut s).unwrap();
                if est.value > bound {
                    failures += 1;
                }
                tightest = tightest.max(est.value / bound);
            }
        }
    }
    verdict(
        failures == 0,
        format!("{failures} of 8 combinations above the bound, largest ratio {tightest:.3}"),
    )
}

fn c6_smoothing() -> Verdict {
    let d = 5;
    let mut rng = SeedStream::new(106, 0);
    let problems = [
        Objective::Sharp {
            center: vec![0.1, -0.2, 0.0, 0.3, 0.0],
            scale: 1.5,
            tilt: None,
        },
        Objective::MaxAbs {
            center: vec![0.2, 0.0, -0.1, 0.0, 0.1],
            scale: 2.0,
        },
    ];
    let lipschitz = [1.5, 2.0];
    let tau = 0.1;
    let mut failures = 0;
    let mut worst = 0.0f64;
    for (obj, l) in problems.into_iter().zip(lipschitz) {
        let problem =
            Arc::new(ProblemSpec::new(obj.clone(), FeasibleSet::l2_ball(d, 1.0)).unwrap());
        let oracle = NoisyOracle::noiseless(problem.clone());
        for _ in 0..20 {
            let x = random_in(&problem.feasible_set, &mut rng);
            let est = estimate_smoothed_value(&oracle, &x, tau, 20_000, &mut rng).unwrap();
            let dev = (est.value - obj.value(&x)).abs();
            let allowed = tau * l + 3.0 * est.stderr;
            if dev > allowed {
                failures += 1;
            }
            worst = worst.max(dev / allowed);
        }
    }
    verdict(
        failures == 0,
        format!("{failures} of 40 points outside τM₂ + 3·SE, largest ratio {worst:.3}"),
    )
}

fn c7_clipping() -> Verdict {
    let d = 6;
    let tau = 0.05;
    let mut exact_violations = 0u64;
    let mut failures = Vec::new();
    for kappa in [0.5, 1.0] {
        let alpha = if kappa < 1.0 { 1.6 } else { 2.2 };
        let scale = 1.0;
        let a: Vec<f64> = (0..d).map(|i| 0.4 - 0.15 * i as f64).collect();
        let problem = ProblemSpec::new(
            Objective::Linear {
                weights: a.clone(),
                offset: 0.0,
            },
            FeasibleSet::l2_ball(d, 1.0),
        )
        .unwrap();
        let oracle = NoisyOracle::new(
            Arc::new(problem),
            StochasticNoiseModel::Pareto { alpha, scale },
            AdversarialNoise::None,
            kappa,
        )
        .unwrap();
        let m = 1.0 + kappa;
        let m2 = lp(&a, 2.0) + (alpha * scale.powf(m) / (alpha - m)).powf(1.0 / m);
        let sigma_pow = sigma_pow_ref(d, 2.0, kappa, m2, 0.0, tau);
        let sigma = sigma_pow.powf(1.0 / m);
        for c_mult in [0.25, 1.0, 4.0] {
            let c = c_mult * sigma;
            let n = 100_000usize;
            let mut s = SeedStream::new(107, (10.0 * kappa + c_mult) as u64);
            let mut sum = vec![0.0; d];
            let mut sumsq = vec![0.0; d];
            let mut second = 0.0;
            let mut second_sq = 0.0;
            for _ in 0..n {
                let g = estimate_gradient(&oracle, &[0.0; 6], tau, &mut s)
                    .unwrap()
                    .g;
                let h = clip(&g, c, 2.0).unwrap().g;
                let norm = norm_p(&h, 2.0);
                if norm > c {
                    exact_violations += 1;
                }
                second += norm * norm;
                second_sq += norm.powi(4);
                for i in 0..d {
                    sum[i] += h[i];
                    sumsq[i] += h[i] * h[i];
                }
            }
            let nf = n as f64;
            let m2nd = second / nf;
            let se2nd = ((second_sq / nf - m2nd * m2nd) / nf).sqrt();
            let mean: Vec<f64> = sum.iter().map(|v| v / nf).collect();
            let se_bias = (0..d)
                .map(|i| (sumsq[i] / nf - mean[i] * mean[i]) / nf)
                .sum::<f64>()
                .sqrt();
            let bias = lp(
                &mean.iter().zip(&a).map(|(x, y)| x - y).collect::<Vec<_>>(),
                2.0,
            );
            let second_bound = sigma_pow * c.powf(1.0 - kappa);
            let bias_bound = sigma_pow / c.powf(kappa);
            if m2nd > second_bound + 5.0 * se2nd {
                failures.push(format!(
                    "second moment κ={kappa} c={c_mult}σ: {m2nd:.3e} > {second_bound:.3e}"
                ));
            }
            if bias > bias_bound + 5.0 * se_bias {
                failures.push(format!(
                    "bias κ={kappa} c={c_mult}σ: {bias:.3e} > {bias_bound:.3e}"
                ));
            }
        }
    }
    let pass = exact_violations == 0 && failures.is_empty();
    let detail = if pass {
        "norm ≤ c on all 600000 draws; second moment and bias within bounds for 6 (κ, c) cases"
            .to_string()
    } else {
        format!(
            "{exact_violations} norm violations; {}",
            failures.join("; ")
        )
    };
    verdict(pass, detail)
}

fn rate_csvs(config: &ExperimentConfig) -> (Vec<String>, f64, f64) {
    let outcome = run_experiment(config, false, None).expect("rate experiment runs");
    let fit = outcome.rate.expect("grid supports a rate fit");
    let csvs = outcome
        .points
        .iter()
        .map(|p| strip_timing(&csv_string(&p.hash, &p.records)))
        .collect();
    (csvs, fit.slope, fit.half_width)
}

fn c8_and_c13() -> (Verdict, Verdict) {
    let config = load("rate-sharp-k05.toml");
    let start = Instant::now();
    let (first, slope, hw) = rate_csvs(&config);
    let secs = start.elapsed().as_secs_f64();
    let target = -1.0 / 3.0;
    let c8 = verdict(
        (slope - target).abs() <= 0.15 && secs <= 300.0,
        format!("median slope {slope:.4} (fit ±{hw:.3}), target {target:.4} ± 0.15, {secs:.1} s"),
    );
    let (second, _, _) = rate_csvs(&config);
    let same = first == second;
    let rows: usize = first.iter().map(|c| c.lines().count() - 1).sum();
    let c13 = verdict(
        same,
        format!(
            "{} CSV files, {rows} rows, identical without the timing column: {same}",
            first.len()
        ),
    );
    (c8, c13)
}

fn c9_heavy_tail() -> Verdict {
    let clipped = load("heavy-tail-clip.toml");
    let unclipped = load("heavy-tail-unclipped.toml");
    let experiments = 20u64;
    let mut wins = 0;
    let mut ratios = Vec::new();
    for e in 0..experiments {
        let mut q = [0.0; 2];
        for (i, base) in [&clipped, &unclipped].into_iter().enumerate() {
            let mut c = base.clone();
            c.run.seed = e;
            let prepared = c.prepare().expect("heavy-tail config is valid");
            let records = run_point(&prepared, None).expect("heavy-tail run");
            let finals: Vec<f64> = records.iter().map(|r| r.final_suboptimality).collect();
            q[i] = quantile(&finals, 0.99).unwrap();
        }
        if q[0] < q[1] {
            wins += 1;
        }
        ratios.push(q[0] / q[1]);
    }
    let needed = (0.9 * experiments as f64).ceil() as u64;
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    verdict(
        wins >= needed,
        format!(
            "clipped 0.99-quantile smaller in {wins}/{experiments} paired experiments (need {needed}), largest ratio {worst:.4}"
        ),
    )
}

fn c10_noise_floor() -> Verdict {
    let config = load("noise-floor.toml");
    let outcome = run_experiment(&config, true, None).expect("noise-floor sweep runs");
    let xs: Vec<f64> = outcome.rows.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = outcome.rows.iter().map(|r| r.noise_floor).collect();
    let fit = fit_power_law(&xs, &ys, 3).unwrap();
    let floors: Vec<String> = ys.iter().map(|y| format!("{y:.3e}")).collect();
    verdict(
        (fit.slope - 0.5).abs() <= 0.15,
        format!(
            "floors [{}] over Δ = {xs:?}: slope {:.4}, target 0.5 ± 0.15",
            floors.join(", "),
            fit.slope
        ),
    )
}

fn c11_restarts() -> Verdict {
    let config = load("restarts-sharp.toml");
    let prepared = config.prepare().expect("restart config is valid");
    let plan = match &prepared.plan {
        Plan::Restarts(p) => p.clone(),
        Plan::Single(_) => unreachable!("restart config yields a restart plan"),
    };
    let epsilon = config.restart.as_ref().unwrap().epsilon;
    // independent stage budgets: unit ball, ball setup, sharp objective of scale 1
    let d = prepared.set.dim();
    let (kappa, r, mu, r0): (f64, f64, f64, f64) = (config.params.kappa, 1.0, 2.0, 2.0);
    let m2: f64 = 1.0;
    let sigma = sigma_pow_ref(d, 2.0, kappa, m2, 0.0, epsilon / m2).powf(1.0 / (1.0 + kappa));
    let n = ((mu * r0.powf(r) / (2.0 * epsilon)).log2() / r).ceil() as usize;
    let expected: Vec<u64> = (1..=n)
        .map(|k| {
            let rk = r0 / 2f64.powi(k as i32);
            (sigma * 2f64.powf(1.0 + r) / (mu * rk.powf(r - 1.0)))
                .powf((1.0 + kappa) / kappa)
                .ceil() as u64
        })
        .collect();
    let actual: Vec<u64> = plan.stages.iter().map(|s| s.iterations).collect();
    let budgets_match = expected == actual;
    let records = run_point(&prepared, None).expect("restart run");
    let monotone = records
        .iter()
        .filter(|r| {
            r.stages
                .windows(2)
                .all(|w| w[1].suboptimality <= w[0].suboptimality)
        })
        .count();
    let reached = records
        .iter()
        .filter(|r| r.final_suboptimality <= epsilon)
        .count();
    let trials = records.len();
    verdict(
        budgets_match && monotone == trials && 5 * reached >= 4 * trials,
        format!(
            "budgets {actual:?} vs independent {expected:?}; non-increasing stage ends in {monotone}/{trials}; final ≤ ε in {reached}/{trials}"
        ),
    )
}

fn c12_ball_reduction() -> Verdict {
    let mut rng = SeedStream::new(112, 0);
    let sets = [
        FeasibleSet::l2_ball(5, 1.0),
        FeasibleSet::Box {
            lower: vec![-1.0; 5],
            upper: vec![0.5; 5],
        },
        FeasibleSet::simplex(5),
        FeasibleSet::l1_ball(5, 1.0),
    ];
    let mut mismatches = 0;
    for i in 0..1000 {
        let set = &sets[i % sets.len()];
        let x = random_in(set, &mut rng);
        let g: Vec<f64> = (0..5).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let nu = rng.random::<f64>();
        let step: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - nu * b).collect();
        let expected = set.project_euclidean(&step);
        let got = ProxSetup::Ball.mirror_step(set, &x, &g, nu).unwrap();
        if got
            .iter()
            .zip(&expected)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} of 1000 steps differ bit-wise"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut report = |id: u32, name: &'static str, v: Verdict| {
        println!(
            "{} C{id:02} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((id, name, v));
    };
    report(1, "uniform convexity", c1_uniform_convexity());
    report(2, "conjugacy round trip", c2_conjugacy());
    report(3, "projection oracle", c3_projection());
    report(4, "estimator unbiasedness", c4_unbiasedness());
    report(5, "moment bound", c5_moment());
    report(6, "smoothing bound", c6_smoothing());
    report(7, "clipping properties", c7_clipping());
    let (c8, c13) = c8_and_c13();
    report(8, "rate check", c8);
    report(9, "heavy-tail robustness", c9_heavy_tail());
    report(10, "noise floor", c10_noise_floor());
    report(11, "restarts", c11_restarts());
    report(12, "ball-setup reduction", c12_ball_reduction());
    report(13, "determinism", c13);
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
