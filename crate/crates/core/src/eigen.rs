//! Critical levels `Λ*`, the identity-ray inverse `α(x, X)` and the
//! strict-subsolution gate.

use alloc::vec::Vec;

use crate::boundary::BoundaryDatum;
use crate::energy::max_with_index;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{eigenvalues_sym, frobenius_sq, gram, SymMat};
use crate::rng::SeededRng;
use crate::supremand::{RayDomain, SupremandSpec};

/// Largest ray parameter tried while bracketing.
pub const BRACKET_CAP: f64 = 1e12;
/// Geometric growth of the bracket per step.
pub const BRACKET_FACTOR: f64 = 4.0;
pub const MAX_BISECTIONS: usize = 200;
/// Seed of the default sample cloud; fixed so `Λ*` does not move with the
/// solver seed.
pub const DEFAULT_CLOUD_SEED: u64 = 0;
pub const DEFAULT_CLOUD_SIZE: usize = 1000;
/// Default lower bound `α₀` for the identity-ray inverse on the cloud.
pub const DEFAULT_ALPHA0: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    Value(f64),
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenProblem {
    pub spec: SupremandSpec,
    pub phi: BoundaryDatum,
    /// Number of components `N` of `u`.
    pub ncomp: usize,
    pub grid: Grid,
    pub order: usize,
    pub lambda: Lambda,
    pub alpha0: f64,
}

impl EigenProblem {
    pub fn new(
        spec: SupremandSpec,
        phi: BoundaryDatum,
        ncomp: usize,
        grid: Grid,
        lambda: Lambda,
    ) -> Result<Self> {
        if !(1..=2).contains(&ncomp) {
            return Err(Error::InvalidInput(alloc::format!(
                "N = {ncomp} is outside {{1, 2}}"
            )));
        }
        if let Lambda::Value(v) = lambda {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(alloc::format!(
                    "level {v} must be finite and >= 0"
                )));
            }
        }
        Ok(EigenProblem {
            order: spec.order(),
            spec,
            phi,
            ncomp,
            grid,
            lambda,
            alpha0: DEFAULT_ALPHA0,
        })
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Result<Self> {
        if !(alpha0 > 0.0) || !alpha0.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "alpha0 = {alpha0} must be positive"
            )));
        }
        self.alpha0 = alpha0;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
}

/// A point `(x, X)` of `Ω × R^N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudPoint {
    pub x: [f64; 2],
    pub u: [f64; 2],
}

/// Finite sample standing in for `Ω × R^N` in the quantified hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCloud {
    points: Vec<CloudPoint>,
}

impl SampleCloud {
    pub fn new(points: Vec<CloudPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("sample cloud is empty".into()));
        }
        Ok(SampleCloud { points })
    }

    /// Random grid nodes paired with values drawn from the range of `φ`
    /// widened by one in every component.
    pub fn around_datum(
        phi: &BoundaryDatum,
        grid: &Grid,
        ncomp: usize,
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..grid.len() {
            let x = grid.point(i);
            for c in 0..ncomp {
                let v = phi.value(c, x, grid.dim());
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
        let mut rng = SeededRng::new(seed);
        let points = (0..count)
            .map(|_| {
                let x = grid.point(rng.index(grid.len()));
                let mut u = [0.0; 2];
                for c in 0..ncomp {
                    u[c] = rng.uniform(lo[c] - 1.0, hi[c] + 1.0);
                }
                CloudPoint { x, u }
            })
            .collect();
        Self::new(points)
    }

    pub fn default_for(problem: &EigenProblem) -> Result<Self> {
        Self::around_datum(
            &problem.phi,
            &problem.grid,
            problem.ncomp,
            DEFAULT_CLOUD_SIZE,
            DEFAULT_CLOUD_SEED,
        )
    }

    pub fn points(&self) -> &[CloudPoint] {
        &self.points
    }
}

/// `Λ* = E_∞(φ)` over analytic jets of `φ` at the grid nodes.
pub fn lambda_star_jet(
    phi: &BoundaryDatum,
    ncomp: usize,
    spec: &SupremandSpec,
    grid: &Grid,
    order: usize,
) -> Result<f64> {
    let jf = phi.jet_field(grid, ncomp, order)?;
    Ok(crate::energy::energy_inf(&jf, spec)?.0)
}

/// The two arms of the conformal critical level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConformalArms {
    /// `max_x h(x, φ(x), ‖Dφ‖²_∞ 𝕀)`
    pub jet_arm: f64,
    /// `max over the cloud of h(x, X, α₀ 𝕀)`
    pub cloud_arm: f64,
    /// `‖Dφ‖²_∞`, nodal max of the squared Frobenius norm.
    pub grad_sq_sup: f64,
}

impl ConformalArms {
    pub fn value(&self) -> f64 {
        self.jet_arm.max(self.cloud_arm)
    }
}

pub fn conformal_arms(
    phi: &BoundaryDatum,
    ncomp: usize,
    spec: &SupremandSpec,
    grid: &Grid,
    alpha0: f64,
    cloud: &SampleCloud,
) -> Result<ConformalArms> {
    if !spec.is_conformal() {
        return Err(Error::NotConformal);
    }
    if !(alpha0 > 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "alpha0 = {alpha0} must be positive"
        )));
    }
    let dim = grid.dim();
    let grad_sq: Vec<f64> = (0..grid.len())
        .map(|i| {
            let jet = phi.jet(grid.point(i), dim, ncomp, 1);
            frobenius_sq(&jet.du, ncomp, dim)
        })
        .collect();
    let (grad_sq_sup, _) = max_with_index(&grad_sq);
    let mut jet_arm = f64::NEG_INFINITY;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let mut u = [0.0; 2];
        for (c, uc) in u.iter_mut().enumerate().take(ncomp) {
            *uc = phi.value(c, x, dim);
        }
        jet_arm = jet_arm.max(spec.eval_ray(x, u, dim, grad_sq_sup)?);
    }
    let mut cloud_arm = f64::NEG_INFINITY;
    for p in cloud.points() {
        cloud_arm = cloud_arm.max(spec.eval_ray(p.x, p.u, dim, alpha0)?);
    }
    Ok(ConformalArms {
        jet_arm,
        cloud_arm,
        grad_sq_sup,
    })
}

/// `Λ* = max{jet arm, cloud arm}` for conformal supremands.
pub fn lambda_star_conformal(
    phi: &BoundaryDatum,
    ncomp: usize,
    spec: &SupremandSpec,
    grid: &Grid,
    alpha0: f64,
    cloud: &SampleCloud,
) -> Result<f64> {
    Ok(conformal_arms(phi, ncomp, spec, grid, alpha0, cloud)?.value())
}

/// Solves `h(x, X, t𝕀_n) = Λ` for `t` by bracketing and bisection.
pub fn alpha_inverse(
    spec: &SupremandSpec,
    x: [f64; 2],
    u: [f64; 2],
    dim: usize,
    lambda: f64,
) -> Result<f64> {
    if !spec.is_conformal() {
        return Err(Error::NotConformal);
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidInput(alloc::format!(
            "level {lambda} is not finite"
        )));
    }
    let f = |t: f64| spec.eval_ray(x, u, dim, t);
    let domain = spec.ray_domain();
    let (mut lo, mut hi) = match domain {
        RayDomain::All => (-1.0, 1.0),
        RayDomain::NonNegative => (0.0, 1.0),
    };
    let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
    if f_hi < f_lo {
        return Err(Error::NotMonotone { t_lo: lo, t_hi: hi });
    }
    while f_hi < lambda {
        let next = hi * BRACKET_FACTOR;
        if next > BRACKET_CAP {
            return Err(Error::NoBracket {
                lambda,
                reason: alloc::format!(
                    "h(x, X, t I) stays below the level up to t = {BRACKET_CAP:e}"
                ),
            });
        }
        let f_next = f(next)?;
        if f_next < f_hi {
            return Err(Error::NotMonotone {
                t_lo: hi,
                t_hi: next,
            });
        }
        (lo, f_lo, hi, f_hi) = (hi, f_hi, next, f_next);
    }
    while f_lo > lambda {
        if domain == RayDomain::NonNegative {
            return Err(Error::NoBracket {
                lambda,
                reason: alloc::format!("the level is below the ray minimum h(x, X, 0) = {f_lo}"),
            });
        }
        let next = lo * BRACKET_FACTOR;
        if next < -BRACKET_CAP {
            return Err(Error::NoBracket {
                lambda,
                reason: alloc::format!(
                    "h(x, X, t I) stays above the level down to t = {:e}",
                    -BRACKET_CAP
                ),
            });
        }
        let f_next = f(next)?;
        if f_next > f_lo {
            return Err(Error::NotMonotone {
                t_lo: next,
                t_hi: lo,
            });
        }
        (hi, f_hi, lo, f_lo) = (lo, f_lo, next, f_next);
    }
    if f_lo == lambda {
        return Ok(lo);
    }
    if f_hi == lambda {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm < f_lo || fm > f_hi {
            return Err(Error::NotMonotone { t_lo: lo, t_hi: hi });
        }
        if fm == lambda {
            return Ok(mid);
        }
        if fm < lambda {
            (lo, f_lo) = (mid, fm);
        } else {
            (hi, f_hi) = (mid, fm);
        }
    }
    Ok(if (f_lo - lambda).abs() <= (f_hi - lambda).abs() {
        lo
    } else {
        hi
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalRule {
    /// `Λ* = E_∞(φ)`
    Jet,
    /// two-arm max for conformal supremands
    Conformal,
}

/// The level actually used and how it was chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaChoice {
    pub value: f64,
    pub lambda_star: f64,
    pub rule: CriticalRule,
    pub auto: bool,
    /// The `1.0` floor of the automatic rule was active.
    pub floored: bool,
    /// An explicit level at or below `Λ*`.
    pub subcritical: bool,
}

pub const AUTO_FACTOR: f64 = 1.1;
pub const AUTO_FLOOR: f64 = 1.0;

/// Computes `Λ*` by `rule` and applies `Λ = max(1.1 Λ*, 1)` when the level is automatic.
pub fn resolve_lambda(
    problem: &EigenProblem,
    rule: CriticalRule,
    cloud: &SampleCloud,
) -> Result<LambdaChoice> {
    let lambda_star = match rule {
        CriticalRule::Jet => lambda_star_jet(
            &problem.phi,
            problem.ncomp,
            &problem.spec,
            &problem.grid,
            problem.order,
        )?,
        CriticalRule::Conformal => lambda_star_conformal(
            &problem.phi,
            problem.ncomp,
            &problem.spec,
            &problem.grid,
            problem.alpha0,
            cloud,
        )?,
    };
    Ok(match problem.lambda {
        Lambda::Auto => {
            let scaled = AUTO_FACTOR * lambda_star;
            LambdaChoice {
                value: scaled.max(AUTO_FLOOR),
                lambda_star,
                rule,
                auto: true,
                floored: scaled < AUTO_FLOOR,
                subcritical: false,
            }
        }
        Lambda::Value(v) => LambdaChoice {
            value: v,
            lambda_star,
            rule,
            auto: false,
            floored: false,
            subcritical: v <= lambda_star,
        },
    })
}

/// Outcome of the strict-subsolution checks.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsolutionReport {
    pub lambda: f64,
    /// `α(x, φ(x))` per node.
    pub alpha: Vec<f64>,
    /// `λ_n(Dφᵀ Dφ)` per node.
    pub top_eigenvalue: Vec<f64>,
    pub nodes_pass: bool,
    pub worst_node: usize,
    /// `min_x α(x, φ(x)) − λ_n(Dφᵀ Dφ)(x)`.
    pub worst_margin: f64,
    pub alpha0: f64,
    pub cloud_alpha_min: f64,
    pub cloud_min_witness: CloudPoint,
    /// `inf α > α₀` over the cloud.
    pub lower_pass: bool,
    pub cloud_alpha_max: f64,
    pub cloud_max_witness: CloudPoint,
    /// `sup α < ∞` over the cloud.
    pub upper_pass: bool,
    /// Cloud checks are sampled, not proved.
    pub sampled: bool,
}

impl SubsolutionReport {
    pub fn passed(&self) -> bool {
        self.nodes_pass && self.lower_pass && self.upper_pass
    }
}

/// Identity-ray inverse at many points, sharing one solve when `h` ignores `(x, X)`.
pub(crate) fn alpha_many<I>(
    spec: &SupremandSpec,
    dim: usize,
    lambda: f64,
    points: I,
) -> Result<Vec<f64>>
where
    I: Iterator<Item = ([f64; 2], [f64; 2])>,
{
    if spec.h_is_autonomous() {
        let mut cached = None;
        return points
            .map(|(x, u)| {
                if let Some(a) = cached {
                    return Ok(a);
                }
                let a = alpha_inverse(spec, x, u, dim, lambda)?;
                cached = Some(a);
                Ok(a)
            })
            .collect();
    }
    points
        .map(|(x, u)| alpha_inverse(spec, x, u, dim, lambda))
        .collect()
}

/// Checks `α(x, φ(x)) > λ_n(Dφᵀ Dφ)` at every node and `α₀ < α < ∞` on the cloud.
pub fn validate_subsolution(
    problem: &EigenProblem,
    lambda: f64,
    cloud: &SampleCloud,
) -> Result<SubsolutionReport> {
    let spec = &problem.spec;
    if !spec.is_conformal() {
        return Err(Error::NotConformal);
    }
    let (dim, ncomp) = (problem.dim(), problem.ncomp);
    if ncomp != dim {
        return Err(Error::DimensionMismatch {
            components: ncomp,
            dim,
        });
    }
    let grid = &problem.grid;
    let jets: Vec<_> = (0..grid.len())
        .map(|i| problem.phi.jet(grid.point(i), dim, ncomp, 1))
        .collect();
    let alpha = alpha_many(spec, dim, lambda, jets.iter().map(|j| (j.x, j.u)))?;
    let top_eigenvalue = jets
        .iter()
        .map(|j| gram(&j.du, ncomp, dim).map(|s: SymMat| eigenvalues_sym(&s).max()))
        .collect::<Result<Vec<_>>>()?;
    let mut worst_node = 0;
    let mut worst_margin = f64::INFINITY;
    for (i, (a, l)) in alpha.iter().zip(&top_eigenvalue).enumerate() {
        let m = a - l;
        if m < worst_margin {
            worst_margin = m;
            worst_node = i;
        }
    }
    let cloud_alpha = alpha_many(spec, dim, lambda, cloud.points().iter().map(|p| (p.x, p.u)))?;
    let (mut imin, mut imax) = (0, 0);
    for (i, a) in cloud_alpha.iter().enumerate() {
        if *a < cloud_alpha[imin] {
            imin = i;
        }
        if *a > cloud_alpha[imax] {
            imax = i;
        }
    }
    let cloud_alpha_min = cloud_alpha[imin];
    let cloud_alpha_max = cloud_alpha[imax];
    Ok(SubsolutionReport {
        lambda,
        alpha,
        top_eigenvalue,
        nodes_pass: worst_margin > 0.0,
        worst_node,
        worst_margin,
        alpha0: problem.alpha0,
        cloud_alpha_min,
        cloud_min_witness: cloud.points()[imin],
        lower_pass: cloud_alpha_min > problem.alpha0,
        cloud_alpha_max,
        cloud_max_witness: cloud.points()[imax],
        upper_pass: cloud_alpha_max.is_finite(),
        sampled: true,
    })
}
