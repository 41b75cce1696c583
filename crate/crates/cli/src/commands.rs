//! The four subcommands as pure functions from inputs to report and tables.

use serde_json::{json, Value};

use crestfield_core::construct::{solve as run_solver, Method, SolutionReport, Target};
use crestfield_core::eigen::{CriticalRule, LambdaChoice};
use crestfield_core::energy::{geometric_ladder, p_sweep, supremand_abs, EnergyReport};
use crestfield_core::verify::{
    classify_theorem1, jensen_lower_bound_check, ResidualStats, ResidualStatus,
};
use crestfield_core::{finite_difference_jet, Error, Field};

use crate::error::{exit, CliError};
use crate::problem::{parse_problem, ProblemFile};
use crate::table;

/// Inputs shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub problem_text: String,
    /// CSV field dump and the name used in error messages.
    pub field: Option<(String, String)>,
    pub seed: Option<u64>,
}

/// Report body, tables to write and the exit code.
#[derive(Clone, Debug)]
pub struct Output {
    pub report: Option<Value>,
    pub files: Vec<(&'static str, String)>,
    pub exit: i32,
    pub summary: String,
    /// Seed actually used, for the provenance block.
    pub seed: Option<u64>,
}

const DEFAULT_P: [f64; 3] = [1.0, 2.0, 4.0];
const SWEEP_P_MAX: f64 = 256.0;

fn load(inputs: &Inputs) -> Result<ProblemFile, CliError> {
    parse_problem(&inputs.problem_text)
}

/// Field from `--field`, else the analytic `field` section, else the solver.
fn field_source(problem: &ProblemFile, inputs: &Inputs) -> Result<(Field, &'static str), CliError> {
    if let Some((text, name)) = &inputs.field {
        let grid = problem.grid()?;
        return Ok((
            table::read_field(text, name, &grid, problem.ncomp())?,
            "csv",
        ));
    }
    if let Some(f) = problem.analytic_field()? {
        return Ok((f, "expr"));
    }
    if problem.solver.is_some() {
        let report = run_solver(&problem.solve_request(inputs.seed)?)?;
        return Ok((report.field, "solver"));
    }
    Err(CliError::Schema {
        path: "field".into(),
        msg: "no field source: pass --field, or give a field or solver section".into(),
    })
}

fn energies_json(rep: &EnergyReport, field: &Field) -> Value {
    let x = field.grid().point(rep.argmax_node);
    json!({
        "p": rep.p_list,
        "ep": rep.ep,
        "einf": rep.einf,
        "argmaxNode": rep.argmax_node,
        "argmaxX": &x[..field.grid().dim()],
        "e1": rep.e1,
        "e1IsZero": rep.e1_is_zero,
        "crest": rep.crest,
    })
}

fn energy_report(
    problem: &ProblemFile,
    field: &Field,
    p: &[f64],
) -> Result<EnergyReport, CliError> {
    let spec = problem.spec()?;
    let jf = finite_difference_jet(field, spec.order())?;
    Ok(p_sweep(&jf, &spec, p)?)
}

pub fn evaluate(inputs: &Inputs) -> Result<Output, CliError> {
    let problem = load(inputs)?;
    let p = problem.p_list(&DEFAULT_P)?;
    let (field, source) = field_source(&problem, inputs)?;
    let rep = energy_report(&problem, &field, &p)?;
    if rep.e1_is_zero {
        return Err(Error::DegenerateEnergy {
            e1: rep.e1,
            einf: rep.einf,
        }
        .into());
    }
    let summary = format!(
        "E_inf = {}, crest(p = {}) = {}",
        rep.einf,
        p[0],
        rep.crest.as_ref().map_or(f64::NAN, |c| c[0])
    );
    Ok(Output {
        report: Some(
            json!({ "command": "evaluate", "fieldSource": source, "energies": energies_json(&rep, &field) }),
        ),
        files: vec![(
            "sweep.csv",
            table::write_sweep(&rep.p_list, &rep.ep, rep.crest.as_deref()),
        )],
        exit: exit::OK,
        summary,
        seed: None,
    })
}

pub fn sweep(inputs: &Inputs) -> Result<Output, CliError> {
    let problem = load(inputs)?;
    let p = problem.p_list(&geometric_ladder(SWEEP_P_MAX))?;
    let (field, _) = field_source(&problem, inputs)?;
    let rep = energy_report(&problem, &field, &p)?;
    if rep.e1_is_zero {
        return Err(Error::DegenerateEnergy {
            e1: rep.e1,
            einf: rep.einf,
        }
        .into());
    }
    if let Some(k) = rep.ep.windows(2).position(|w| w[1] < w[0] * (1.0 - 1e-12)) {
        return Err(CliError::Inconsistent(format!(
            "E_p decreased between p = {} and p = {} ({} > {})",
            p[k],
            p[k + 1],
            rep.ep[k],
            rep.ep[k + 1]
        )));
    }
    let last = rep.ep[rep.ep.len() - 1];
    Ok(Output {
        report: None,
        files: vec![(
            "sweep.csv",
            table::write_sweep(&rep.p_list, &rep.ep, rep.crest.as_deref()),
        )],
        exit: exit::OK,
        summary: format!(
            "E_p at p = {}: {last} (E_inf = {})",
            p[p.len() - 1],
            rep.einf
        ),
        seed: None,
    })
}

fn method_json(m: Method) -> Value {
    match m {
        Method::Sawtooth { m } => json!({ "name": "sawtooth", "m": m }),
        Method::McShaneMin => json!({ "name": "mcshane_min" }),
        Method::McShaneMax => json!({ "name": "mcshane_max" }),
        Method::Refine => json!({ "name": "refine" }),
        Method::Conformal { m } => json!({ "name": "conformal", "m": m }),
    }
}

fn lambda_json(l: &LambdaChoice) -> Value {
    json!({
        "value": l.value,
        "lambdaStar": l.lambda_star,
        "rule": match l.rule { CriticalRule::Jet => "jet", CriticalRule::Conformal => "conformal" },
        "auto": l.auto,
        "floored": l.floored,
        "subcritical": l.subcritical,
    })
}

fn residual_json(r: &ResidualStats) -> Value {
    json!({
        "lambda": r.lambda,
        "sup": r.sup,
        "mean": r.mean,
        "foldCount": r.fold_count,
        "foldFraction": r.fold_fraction,
        "evaluated": r.evaluated,
        "status": match r.status { ResidualStatus::Ok => "ok", ResidualStatus::EmptyEvaluationSet => "empty_evaluation_set" },
    })
}

fn solution_json(rep: &SolutionReport, seed: u64, stalled: bool) -> Value {
    json!({
        "command": "solve",
        "method": method_json(rep.method),
        "seed": seed,
        "lambda": lambda_json(&rep.lambda),
        "target": rep.target.map(|t| match t { Target::Level => "level", Target::Gram => "gram" }),
        "residual": residual_json(&rep.residual),
        "iterations": rep.iterations,
        "stalled": stalled,
        "alpha": rep.alpha_range.map(|(lo, hi)| json!({ "min": lo, "max": hi })),
    })
}

pub fn solve(inputs: &Inputs) -> Result<Output, CliError> {
    let problem = load(inputs)?;
    let request = problem.solve_request(inputs.seed)?;
    let (rep, stalled) = match run_solver(&request) {
        Ok(r) => (r, false),
        Err(Error::StalledProgress(r)) => (*r, true),
        Err(e) => return Err(e.into()),
    };
    let spec = &request.problem.spec;
    let abs_h = supremand_abs(&finite_difference_jet(&rep.field, spec.order())?, spec)?;
    let summary = if stalled {
        format!(
            "stalled after {} iterations at deviation fraction {}",
            rep.iterations.len().saturating_sub(1),
            rep.iterations.last().copied().unwrap_or(f64::NAN)
        )
    } else {
        format!(
            "Lambda = {}, residual sup off folds = {}",
            rep.lambda.value, rep.residual.sup
        )
    };
    Ok(Output {
        report: Some(solution_json(&rep, request.seed, stalled)),
        files: vec![("field.csv", table::write_field(&rep.field, Some(&abs_h)))],
        exit: if stalled { exit::STALLED } else { exit::OK },
        summary,
        seed: Some(request.seed),
    })
}

pub fn verify(inputs: &Inputs) -> Result<Output, CliError> {
    let problem = load(inputs)?;
    let (field, source) = field_source(&problem, inputs)?;
    let spec = problem.spec()?;
    let tol = problem.tolerances()?;
    let rep = classify_theorem1(&field, &spec, &tol)?;
    let phi = problem.boundary()?;
    let jensen = if phi.is_affine() {
        jensen_lower_bound_check(&field, &spec, &phi).ok().map(|j| {
            json!({
                "einf": j.einf,
                "meanGradient": j.mean_gradient,
                "phiGradient": j.phi_gradient,
                "identityError": j.identity_error,
                "bound": j.bound,
                "lambdaStar": j.lambda_star,
                "margin": j.margin,
                "holds": j.holds,
                "admissible": j.admissible,
                "advisory": j.advisory,
            })
        })
    } else {
        None
    };
    let body = json!({
        "command": "verify",
        "fieldSource": source,
        "p": rep.p,
        "crest": rep.crest,
        "lambdaHat": rep.lambda_hat,
        "residualSupOffFolds": rep.residual_sup_off_folds,
        "spreadOffFolds": rep.spread_off_folds,
        "foldFraction": rep.fold_fraction,
        "evaluated": rep.evaluated,
        "tolCrest": rep.tol_crest,
        "tolConst": rep.tol_const,
        "deviationMeasure": rep.deviation_measure.iter().map(|(d, f)| json!({ "delta": d, "fraction": f })).collect::<Vec<_>>(),
        "isMinimiser": rep.is_minimiser,
        "isSolution": rep.is_solution,
        "verdictConsistent": rep.verdict_consistent,
        "jensen": jensen,
    });
    Ok(Output {
        report: Some(body),
        files: Vec::new(),
        exit: if rep.verdict_consistent {
            exit::OK
        } else {
            exit::INCONSISTENT
        },
        summary: format!(
            "minimiser = {}, solution = {}, consistent = {}",
            rep.is_minimiser, rep.is_solution, rep.verdict_consistent
        ),
        seed: None,
    })
}
