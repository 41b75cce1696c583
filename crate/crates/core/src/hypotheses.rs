//! Sampled checks of the structural hypotheses on a supremand.
//!
//! Every check here is a finite sample: a failure comes with a witness and
//! is conclusive, a pass is evidence only. Rank-one convexity is a necessary
//! condition for quasiconvexity and is always reported as advisory.

use alloc::vec::Vec;

use crate::eigen::SampleCloud;
use crate::jet::Jet;
use crate::linalg::Mat2;
use crate::math;
use crate::rng::SeededRng;
use crate::supremand::{RayDomain, SupremandSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisConfig {
    pub dim: usize,
    pub ncomp: usize,
    pub alpha0: f64,
    /// Levels `Λ` the coercivity and sublevel checks must clear.
    pub levels: Vec<f64>,
    /// Random directions for the sublevel and rank-one probes.
    pub rays: usize,
    pub seed: u64,
}

impl HypothesisConfig {
    pub fn new(dim: usize, ncomp: usize) -> Self {
        HypothesisConfig {
            dim,
            ncomp,
            alpha0: 1.0,
            levels: alloc::vec![1.0],
            rays: 32,
            seed: 0,
        }
    }
}

/// Ray parameters used when none are supplied.
pub fn default_t_grid() -> Vec<f64> {
    alloc::vec![-1e4, -100.0, -1.0, -0.01, 0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e6]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub x: [f64; 2],
    pub u: [f64; 2],
    /// Ray parameter, for identity-ray checks.
    pub t: Option<f64>,
    /// Top-order direction, for tensor-ray checks.
    pub direction: Option<Mat2>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    pub applicable: bool,
    pub passed: bool,
    /// Check-specific summary value (see [`HypothesisReport`]).
    pub value: f64,
    pub witness: Option<Witness>,
    pub advisory: bool,
}

impl HypothesisCheck {
    fn skipped() -> Self {
        HypothesisCheck {
            applicable: false,
            passed: false,
            value: f64::NAN,
            witness: None,
            advisory: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    /// `t ↦ h(x, X, t𝕀)` strictly increasing; value = smallest increment seen.
    pub monotone: HypothesisCheck,
    /// `max h(·, ·, α₀𝕀)` finite; value = that max.
    pub alpha0_bound: HypothesisCheck,
    /// `min h(·, ·, t_max 𝕀)` above every level; value = that min.
    pub coercive: HypothesisCheck,
    /// `{|H(x, X, ·)| ≤ Λ}` bounded along probed rays; value = number of rays.
    pub sublevel_bounded: HypothesisCheck,
    /// Midpoint convexity along rank-one lines; value = worst defect.
    pub rank_one_convex: HypothesisCheck,
    /// The ray lives on `[0, ∞)` and `h ≥ 0` there.
    pub nonnegative_regime: bool,
}

fn eval_ray(spec: &SupremandSpec, x: [f64; 2], u: [f64; 2], dim: usize, t: f64) -> f64 {
    spec.eval_ray(x, u, dim, t).unwrap_or(f64::NAN)
}

fn eval_top(
    spec: &SupremandSpec,
    cfg: &HypothesisConfig,
    x: [f64; 2],
    u: [f64; 2],
    top: &Mat2,
    hess_dir: bool,
) -> f64 {
    let mut jet = Jet::first_order(cfg.dim, cfg.ncomp, x, u, [[0.0; 2]; 2]);
    jet.order = spec.order();
    if hess_dir {
        // diagonal Hessian directions only
        for c in 0..cfg.ncomp {
            jet.d2u[c][0][0] = top[c][0];
            jet.d2u[c][1][1] = top[c][1];
        }
    } else {
        jet.du = *top;
    }
    spec.eval_H(&jet).unwrap_or(f64::NAN)
}

fn random_direction(rng: &mut SeededRng, cfg: &HypothesisConfig) -> Mat2 {
    let mut d = [[0.0; 2]; 2];
    let mut norm = 0.0;
    for row in d.iter_mut().take(cfg.ncomp) {
        for v in row.iter_mut().take(cfg.dim) {
            *v = rng.normal();
            norm += *v * *v;
        }
    }
    normalize(d, norm)
}

fn normalize(mut d: Mat2, norm_sq: f64) -> Mat2 {
    let n = math::sqrt(norm_sq);
    if n > 0.0 {
        for v in d.iter_mut().flatten() {
            *v /= n;
        }
    }
    d
}

/// Direction orthogonal to the numerical gradient of `H` at a zero top
/// tensor; this is the kernel of `H` when `H` is linear in it.
fn kernel_direction(
    spec: &SupremandSpec,
    cfg: &HypothesisConfig,
    x: [f64; 2],
    u: [f64; 2],
    hess: bool,
) -> Option<Mat2> {
    let slots: Vec<(usize, usize)> = (0..cfg.ncomp)
        .flat_map(|c| (0..cfg.dim).map(move |i| (c, i)))
        .collect();
    let step = 1e-6;
    let mut grad = [[0.0; 2]; 2];
    let mut gsq = 0.0;
    for &(c, i) in &slots {
        let mut plus = [[0.0; 2]; 2];
        plus[c][i] = step;
        let mut minus = [[0.0; 2]; 2];
        minus[c][i] = -step;
        let g = (eval_top(spec, cfg, x, u, &plus, hess) - eval_top(spec, cfg, x, u, &minus, hess))
            / (2.0 * step);
        grad[c][i] = g;
        gsq += g * g;
    }
    if !(gsq > 0.0) || slots.len() < 2 {
        return None;
    }
    let mut best: Option<(f64, Mat2)> = None;
    for &(c, i) in &slots {
        let proj = grad[c][i] / gsq;
        let mut d = [[0.0; 2]; 2];
        let mut nsq = 0.0;
        for &(a, j) in &slots {
            d[a][j] = if (a, j) == (c, i) { 1.0 } else { 0.0 } - proj * grad[a][j];
            nsq += d[a][j] * d[a][j];
        }
        if best.as_ref().is_none_or(|b| nsq > b.0) {
            best = Some((nsq, d));
        }
    }
    best.map(|(nsq, d)| normalize(d, nsq))
}

/// Runs all sampled checks. Never fails: problems are report content.
pub fn validate_hypotheses(
    spec: &SupremandSpec,
    cloud: &SampleCloud,
    t_grid: &[f64],
    cfg: &HypothesisConfig,
) -> HypothesisReport {
    let dim = cfg.dim;
    let top_level = cfg.levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let domain = spec.ray_domain();
    let mut ts: Vec<f64> = t_grid
        .iter()
        .cloned()
        .filter(|t| t.is_finite() && (domain == RayDomain::All || *t >= 0.0))
        .collect();
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();

    let (monotone, alpha0_bound, coercive, nonnegative_regime) =
        if spec.is_conformal() && ts.len() >= 2 {
            let mut min_inc = f64::INFINITY;
            let mut mono_witness = None;
            let mut h_min = f64::INFINITY;
            for p in cloud.points() {
                let vals: Vec<f64> = ts
                    .iter()
                    .map(|&t| eval_ray(spec, p.x, p.u, dim, t))
                    .collect();
                h_min = vals.iter().cloned().fold(h_min, f64::min);
                for k in 1..vals.len() {
                    let inc = vals[k] - vals[k - 1];
                    if !(inc > 0.0) && mono_witness.is_none() {
                        mono_witness = Some(Witness {
                            x: p.x,
                            u: p.u,
                            t: Some(ts[k]),
                            direction: None,
                        });
                    }
                    if inc < min_inc || inc.is_nan() {
                        min_inc = inc;
                    }
                }
            }
            let monotone = HypothesisCheck {
                applicable: true,
                passed: mono_witness.is_none(),
                value: min_inc,
                witness: mono_witness,
                advisory: false,
            };

            let mut a0_max = f64::NEG_INFINITY;
            let mut a0_witness = None;
            for p in cloud.points() {
                let v = eval_ray(spec, p.x, p.u, dim, cfg.alpha0);
                if !v.is_finite() {
                    a0_witness.get_or_insert(Witness {
                        x: p.x,
                        u: p.u,
                        t: Some(cfg.alpha0),
                        direction: None,
                    });
                    a0_max = f64::NAN;
                } else if v > a0_max {
                    a0_max = v;
                }
            }
            let alpha0_bound = HypothesisCheck {
                applicable: true,
                passed: a0_witness.is_none(),
                value: a0_max,
                witness: a0_witness,
                advisory: false,
            };

            let t_max = ts[ts.len() - 1];
            let mut c_min = f64::INFINITY;
            let mut c_witness = None;
            for p in cloud.points() {
                let v = eval_ray(spec, p.x, p.u, dim, t_max);
                if !(v >= c_min) {
                    c_min = v;
                    c_witness = Some(Witness {
                        x: p.x,
                        u: p.u,
                        t: Some(t_max),
                        direction: None,
                    });
                }
            }
            let target = if top_level.is_finite() {
                top_level
            } else {
                0.0
            };
            let coercive = HypothesisCheck {
                applicable: true,
                passed: c_min > target,
                value: c_min,
                witness: if c_min > target { None } else { c_witness },
                advisory: false,
            };
            let nonneg = domain == RayDomain::NonNegative && h_min >= 0.0;
            (monotone, alpha0_bound, coercive, nonneg)
        } else {
            (
                HypothesisCheck::skipped(),
                HypothesisCheck::skipped(),
                HypothesisCheck::skipped(),
                false,
            )
        };

    let mut rng = SeededRng::new(cfg.seed);
    let hess = spec.order() == 2;
    let level = if top_level.is_finite() {
        top_level
    } else {
        1.0
    };
    let probe_points: Vec<_> = cloud.points().iter().take(16).collect();
    let scales = [1.0, 10.0, 100.0, 1e3, 1e4, 1e6];
    let mut sub_witness = None;
    let mut n_rays = 0usize;
    for p in &probe_points {
        let mut dirs: Vec<Mat2> = (0..cfg.rays.div_ceil(probe_points.len().max(1)).max(1))
            .map(|_| random_direction(&mut rng, cfg))
            .collect();
        if let Some(k) = kernel_direction(spec, cfg, p.x, p.u, hess) {
            dirs.push(k);
        }
        for d in dirs {
            n_rays += 1;
            let escapes = scales.iter().any(|&s| {
                let mut top = d;
                for v in top.iter_mut().flatten() {
                    *v *= s;
                }
                eval_top(spec, cfg, p.x, p.u, &top, hess).abs() > level
            });
            if !escapes && sub_witness.is_none() {
                sub_witness = Some(Witness {
                    x: p.x,
                    u: p.u,
                    t: None,
                    direction: Some(d),
                });
            }
        }
    }
    let sublevel_bounded = HypothesisCheck {
        applicable: true,
        passed: sub_witness.is_none(),
        value: n_rays as f64,
        witness: sub_witness,
        advisory: false,
    };

    let rank_one_convex = if hess {
        HypothesisCheck::skipped()
    } else {
        let mut worst = 0.0f64;
        let mut witness = None;
        for p in &probe_points {
            for _ in 0..cfg.rays.div_ceil(probe_points.len().max(1)).max(1) {
                let base = random_direction(&mut rng, cfg);
                let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
                for v in a.iter_mut().take(cfg.ncomp) {
                    *v = rng.normal();
                }
                for v in b.iter_mut().take(cfg.dim) {
                    *v = rng.normal();
                }
                let at = |s: f64| {
                    let mut m = base;
                    for c in 0..cfg.ncomp {
                        for i in 0..cfg.dim {
                            m[c][i] += s * a[c] * b[i];
                        }
                    }
                    eval_top(spec, cfg, p.x, p.u, &m, false)
                };
                let (fm, f0, fp) = (at(-0.5), at(0.0), at(0.5));
                let defect = 2.0 * f0 - fm - fp;
                let scale = 1e-9 * (1.0 + f0.abs() + fm.abs() + fp.abs());
                if defect > scale && defect > worst {
                    worst = defect;
                    witness = Some(Witness {
                        x: p.x,
                        u: p.u,
                        t: None,
                        direction: Some(base),
                    });
                }
            }
        }
        HypothesisCheck {
            applicable: true,
            passed: witness.is_none(),
            value: worst,
            witness,
            advisory: true,
        }
    };

    HypothesisReport {
        monotone,
        alpha0_bound,
        coercive,
        sublevel_bounded,
        rank_one_convex,
        nonnegative_regime,
    }
}
