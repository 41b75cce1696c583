//! Solution constructors for `|H(Du)| = Λ` with boundary data `φ`.
//!
//! All constructors are first order. Boundary nodes of every returned field
//! hold `φ` exactly.

mod explicit;
mod refine;

pub use explicit::{mcshane_solution, sawtooth_1d, McShaneMode};

use alloc::vec::Vec;

use crate::eigen::{
    alpha_inverse, resolve_lambda, validate_subsolution, CriticalRule, EigenProblem, LambdaChoice,
    SampleCloud,
};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::math;
use crate::supremand::Catalog;
use crate::verify::{check_pde_residual, ExclusionPolicy, ResidualStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// `m` up-down teeth, 1D eikonal only.
    Sawtooth {
        m: usize,
    },
    McShaneMin,
    McShaneMax,
    Refine,
    /// Identity-ray inverse plus a constructor for `Duᵀ Du = α 𝕀`; `m` is
    /// the tooth count used in 1D.
    Conformal {
        m: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineParams {
    pub max_iters: usize,
    /// Stop once the deviating fraction of interior nodes is at most this.
    pub target_deviation_fraction: f64,
    /// Optional bound on the Frobenius norm of the difference gradient.
    pub lipschitz_budget: Option<f64>,
    /// Deviation threshold as a fraction of `Λ`.
    pub eps_frac: f64,
    /// Allowed overshoot of `|H|` above `Λ`, as a fraction of `Λ`.
    pub tol_frac: f64,
    /// Iterations without progress before giving up.
    pub stall_window: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            max_iters: 2000,
            target_deviation_fraction: 0.05,
            lipschitz_budget: None,
            eps_frac: 0.05,
            tol_frac: 1e-3,
            stall_window: 10,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        let f = self.target_deviation_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "target deviation fraction {f} is outside (0, 1)"
            )));
        }
        if !(self.eps_frac > 0.0 && self.eps_frac < 1.0)
            || !(self.tol_frac >= 0.0)
            || !self.tol_frac.is_finite()
        {
            return Err(Error::InvalidInput(
                "eps_frac must lie in (0, 1) and tol_frac must be >= 0".into(),
            ));
        }
        if let Some(b) = self.lipschitz_budget {
            if !(b > 0.0) {
                return Err(Error::InvalidInput(alloc::format!(
                    "Lipschitz budget {b} must be positive"
                )));
            }
        }
        if self.stall_window == 0 {
            return Err(Error::InvalidInput(
                "stall window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveRequest {
    pub problem: EigenProblem,
    pub method: Method,
    pub seed: u64,
    pub params: RefineParams,
    /// Fold exclusion used for the residual statistics of the result.
    pub policy: ExclusionPolicy,
}

impl SolveRequest {
    pub fn new(problem: EigenProblem, method: Method) -> Self {
        SolveRequest {
            problem,
            method,
            seed: 0,
            params: RefineParams::default(),
            policy: ExclusionPolicy::default(),
        }
    }
}

/// What the refinement drives toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// `|H| ≥ Λ − ε`
    Level,
    /// `‖Duᵀ Du − α 𝕀‖_F ≤ ε`
    Gram,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionReport {
    pub field: Field,
    pub lambda: LambdaChoice,
    pub method: Method,
    /// Set for iterative runs.
    pub target: Option<Target>,
    /// `||H| − Λ|` off folds.
    pub residual: ResidualStats,
    /// Deviating fraction of interior nodes, starting with the initial field.
    pub iterations: Vec<f64>,
    /// `(min, max)` of `α(x, u(x))` for conformal runs.
    pub alpha_range: Option<(f64, f64)>,
}

fn boundary_endpoints(problem: &EigenProblem) -> (f64, f64) {
    let g = &problem.grid;
    (
        problem.phi.value(0, [g.lower(0), 0.0], 1),
        problem.phi.value(0, [g.upper(0), 0.0], 1),
    )
}

fn require_eikonal(problem: &EigenProblem) -> Result<()> {
    if problem.spec.catalog() != Some(&Catalog::Eikonal) || problem.ncomp != 1 {
        return Err(Error::InvalidInput(
            "explicit constructors solve the scalar eikonal problem only".into(),
        ));
    }
    Ok(())
}

/// Runs the requested constructor.
///
/// The critical level comes from the conformal two-arm rule for
/// [`Method::Conformal`] and from `E_∞(φ)` otherwise.
pub fn solve(request: &SolveRequest) -> Result<SolutionReport> {
    let problem = &request.problem;
    if problem.order != 1 {
        return Err(Error::UnsupportedOrder(problem.order));
    }
    let cloud = SampleCloud::default_for(problem)?;
    let rule = match request.method {
        Method::Conformal { .. } => CriticalRule::Conformal,
        _ => CriticalRule::Jet,
    };
    let lambda = resolve_lambda(problem, rule, &cloud)?;
    let mut stalled = false;
    let (field, target, iterations, alpha_range) = match request.method {
        Method::Sawtooth { m } => {
            require_eikonal(problem)?;
            let (a, b) = boundary_endpoints(problem);
            (
                sawtooth_1d(a, b, lambda.value, m, &problem.grid)?,
                None,
                Vec::new(),
                None,
            )
        }
        Method::McShaneMin | Method::McShaneMax => {
            let mode = if request.method == Method::McShaneMin {
                McShaneMode::Min
            } else {
                McShaneMode::Max
            };
            (
                mcshane_solution(problem, lambda.value, mode)?,
                None,
                Vec::new(),
                None,
            )
        }
        Method::Refine => {
            request.params.validate()?;
            gate_level(&lambda)?;
            let run = refine::run(request, lambda.value, Target::Level)?;
            stalled = run.stalled;
            (run.field, Some(Target::Level), run.trace, None)
        }
        Method::Conformal { m } => {
            if lambda.subcritical {
                return Err(Error::Infeasible(alloc::format!(
                    "level {} does not exceed the critical level {}",
                    lambda.value,
                    lambda.lambda_star
                )));
            }
            let sub = validate_subsolution(problem, lambda.value, &cloud)?;
            if !sub.passed() {
                return Err(Error::Infeasible(alloc::format!(
                    "boundary datum is not a strict subsolution (node margin {}, cloud alpha range [{}, {}] vs alpha0 {})",
                    sub.worst_margin, sub.cloud_alpha_min, sub.cloud_alpha_max, sub.alpha0
                )));
            }
            if problem.dim() == 1 {
                if !problem.spec.h_is_autonomous() {
                    return Err(Error::InvalidInput(
                        "1D conformal construction needs h independent of (x, u)".into(),
                    ));
                }
                let alpha = alpha_inverse(&problem.spec, [0.0; 2], [0.0; 2], 1, lambda.value)?;
                let (a, b) = boundary_endpoints(problem);
                let field = sawtooth_1d(a, b, math::sqrt(alpha), m, &problem.grid)?;
                (field, None, Vec::new(), Some((alpha, alpha)))
            } else {
                request.params.validate()?;
                let run = refine::run(request, lambda.value, Target::Gram)?;
                stalled = run.stalled;
                (run.field, Some(Target::Gram), run.trace, run.alpha_range)
            }
        }
    };
    let residual = check_pde_residual(&field, &problem.spec, lambda.value, &request.policy)?;
    let report = SolutionReport {
        field,
        lambda,
        method: request.method,
        target,
        residual,
        iterations,
        alpha_range,
    };
    if stalled {
        return Err(Error::StalledProgress(alloc::boxed::Box::new(report)));
    }
    Ok(report)
}

fn gate_level(lambda: &LambdaChoice) -> Result<()> {
    if lambda.subcritical {
        return Err(Error::Infeasible(alloc::format!(
            "boundary datum is not a strict subsolution: max |H(Dphi)| = {} >= {}",
            lambda.lambda_star,
            lambda.value
        )));
    }
    Ok(())
}
