//! Problem files: JSON documents describing the grid, supremand, boundary
//! datum, level and solver settings.
//!
//! Unknown keys are rejected everywhere. Schema errors carry the JSON path of
//! the offending value.

use serde::Deserialize;

use crestfield_core::boundary::{AffinePiece, BoundaryDatum, Envelope};
use crestfield_core::construct::{Method, RefineParams, SolveRequest};
use crestfield_core::eigen::{EigenProblem, Lambda};
use crestfield_core::expr::{parse_expr, Env, Expr, Var};
use crestfield_core::supremand::{Catalog, SupremandSpec};
use crestfield_core::verify::{ExclusionPolicy, Tolerances};
use crestfield_core::{Field, Grid, Mat2};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ProblemFile {
    pub domain: Domain,
    pub supremand: SupremandSection,
    pub boundary: BoundarySection,
    /// Number of components `N`; defaults to 1.
    #[serde(default)]
    pub components: Option<usize>,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<LambdaSpec>,
    #[serde(default)]
    pub alpha0: Option<f64>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    /// Analytic field used when no CSV is given.
    #[serde(default)]
    pub field: Option<FieldSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Domain {
    pub dim: usize,
    /// `[lower, upper]` per axis.
    pub bounds: Vec<[f64; 2]>,
    pub resolution: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SupremandSection {
    /// `eikonal`, `eikonal2_shift`, `trace_plus` or `affine_dir`.
    #[serde(default)]
    pub catalog: Option<String>,
    /// `a` for `eikonal2_shift`.
    #[serde(default)]
    pub a: Option<f64>,
    /// `g(x, X)` for `trace_plus`.
    #[serde(default)]
    pub g: Option<String>,
    /// `c` for `affine_dir`, rows per component.
    #[serde(default)]
    pub c: Option<Vec<Vec<f64>>>,
    /// `H` as an expression.
    #[serde(default)]
    pub expr: Option<String>,
    /// `h(x, X, S)` for an expression supremand.
    #[serde(default)]
    pub conformal: Option<String>,
    #[serde(default)]
    pub claimed_convex_top: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct PieceSection {
    pub c0: Vec<f64>,
    pub grad: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct BoundarySection {
    /// `zero`, `affine`, `quadratic` or `piecewise_affine`.
    pub catalog: String,
    #[serde(default)]
    pub c0: Option<Vec<f64>>,
    #[serde(default)]
    pub grad: Option<Vec<Vec<f64>>>,
    /// Linear part of a quadratic datum.
    #[serde(default)]
    pub b: Option<Vec<Vec<f64>>>,
    /// Quadratic form per component.
    #[serde(default)]
    pub a: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub pieces: Option<Vec<PieceSection>>,
    /// `min` or `max`.
    #[serde(default)]
    pub envelope: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSpec {
    Value(f64),
    Auto,
}

impl<'de> Deserialize<'de> for LambdaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(LambdaSpec::Value(v)),
            Raw::Word(w) if w == "auto" => Ok(LambdaSpec::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a number or \"auto\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SolverSection {
    /// `sawtooth`, `mcshane_min`, `mcshane_max`, `refine` or `conformal`.
    pub method: String,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub target_deviation_fraction: Option<f64>,
    #[serde(default)]
    pub lipschitz_budget: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct VerifySection {
    #[serde(default)]
    pub delta_list: Option<Vec<f64>>,
    #[serde(default)]
    pub fold_detection_threshold: Option<f64>,
    #[serde(default)]
    pub band_width: Option<usize>,
    #[serde(default)]
    pub tol_crest: Option<f64>,
    #[serde(default)]
    pub tol_const: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct FieldSection {
    /// One expression in `x1`, `x2` per component.
    pub expr: Vec<String>,
}

fn schema(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

/// Parses a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(
            if path == "." { "<root>" } else { &path },
            e.inner().to_string(),
        )
    })
}

fn vec2(v: &[f64], n: usize, path: &str) -> Result<[f64; 2], CliError> {
    if v.len() != n {
        return Err(schema(
            path,
            format!("expected {n} entries, got {}", v.len()),
        ));
    }
    let mut out = [0.0; 2];
    out[..n].copy_from_slice(v);
    Ok(out)
}

fn mat2(v: &[Vec<f64>], rows: usize, cols: usize, path: &str) -> Result<Mat2, CliError> {
    if v.len() != rows {
        return Err(schema(
            path,
            format!("expected {rows} rows, got {}", v.len()),
        ));
    }
    let mut out = [[0.0; 2]; 2];
    for (r, row) in v.iter().enumerate() {
        out[r] = vec2(row, cols, &format!("{path}[{r}]"))?;
    }
    Ok(out)
}

impl ProblemFile {
    pub fn ncomp(&self) -> usize {
        self.components.unwrap_or(1)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let d = &self.domain;
        if !(1..=2).contains(&d.dim) {
            return Err(schema(
                "domain.dim",
                format!("dimension {} is outside {{1, 2}}", d.dim),
            ));
        }
        if d.bounds.len() != d.dim {
            return Err(schema(
                "domain.bounds",
                format!("expected {} intervals", d.dim),
            ));
        }
        if d.resolution.len() != d.dim {
            return Err(schema(
                "domain.resolution",
                format!("expected {} node counts", d.dim),
            ));
        }
        let lower: Vec<f64> = d.bounds.iter().map(|b| b[0]).collect();
        let upper: Vec<f64> = d.bounds.iter().map(|b| b[1]).collect();
        Ok(Grid::new(&lower, &upper, &d.resolution)?)
    }

    pub fn spec(&self) -> Result<SupremandSpec, CliError> {
        let s = &self.supremand;
        let dim = self.domain.dim.min(2);
        let spec = match (&s.catalog, &s.expr) {
            (Some(_), Some(_)) => {
                return Err(schema("supremand", "give either catalog or expr, not both"))
            }
            (None, None) => return Err(schema("supremand", "one of catalog or expr is required")),
            (None, Some(h)) => {
                SupremandSpec::from_expressions(h, s.conformal.as_deref(), s.claimed_convex_top)?
            }
            (Some(name), None) => {
                let cat = match name.as_str() {
                    "eikonal" => Catalog::Eikonal,
                    "eikonal2_shift" => Catalog::Eikonal2Shift {
                        a: s.a
                            .ok_or_else(|| schema("supremand.a", "eikonal2_shift needs a"))?,
                    },
                    "trace_plus" => Catalog::TracePlus {
                        g: parse_expr(s.g.as_deref().unwrap_or("0"))
                            .map_err(|e| schema("supremand.g", e.to_string()))?,
                    },
                    "affine_dir" => Catalog::AffineDir {
                        c: mat2(
                            s.c.as_deref()
                                .ok_or_else(|| schema("supremand.c", "affine_dir needs c"))?,
                            self.ncomp(),
                            dim,
                            "supremand.c",
                        )?,
                    },
                    other => {
                        return Err(schema(
                            "supremand.catalog",
                            format!("unknown catalog entry \"{other}\""),
                        ))
                    }
                };
                if let Catalog::TracePlus { g } = cat {
                    SupremandSpec::trace_plus(g)?
                } else {
                    SupremandSpec::from_catalog(cat)
                }
            }
        };
        if let Some(k) = self.order {
            if k != spec.order() {
                return Err(schema(
                    "order",
                    format!(
                        "order {k} does not match the supremand (order {})",
                        spec.order()
                    ),
                ));
            }
        }
        Ok(spec)
    }

    pub fn boundary(&self) -> Result<BoundaryDatum, CliError> {
        let b = &self.boundary;
        let (n, dim) = (self.ncomp(), self.domain.dim.min(2));
        let c0 = |p: &str| b.c0.as_deref().map_or(Ok([0.0; 2]), |v| vec2(v, n, p));
        match b.catalog.as_str() {
            "zero" => Ok(BoundaryDatum::zero()),
            "affine" => {
                let grad = b
                    .grad
                    .as_deref()
                    .ok_or_else(|| schema("boundary.grad", "affine datum needs grad"))?;
                Ok(BoundaryDatum::affine(
                    c0("boundary.c0")?,
                    mat2(grad, n, dim, "boundary.grad")?,
                ))
            }
            "quadratic" => {
                let lin = match b.b.as_deref() {
                    Some(v) => mat2(v, n, dim, "boundary.b")?,
                    None => [[0.0; 2]; 2],
                };
                let quad =
                    b.a.as_deref()
                        .ok_or_else(|| schema("boundary.a", "quadratic datum needs a"))?;
                if quad.len() != n {
                    return Err(schema("boundary.a", format!("expected {n} matrices")));
                }
                let mut a = [[[0.0; 2]; 2]; 2];
                for (c, m) in quad.iter().enumerate() {
                    a[c] = mat2(m, dim, dim, &format!("boundary.a[{c}]"))?;
                }
                BoundaryDatum::quadratic(c0("boundary.c0")?, lin, a)
                    .map_err(|e| schema("boundary.a", e.to_string()))
            }
            "piecewise_affine" => {
                let pieces = b
                    .pieces
                    .as_deref()
                    .ok_or_else(|| schema("boundary.pieces", "piecewise datum needs pieces"))?;
                let pieces = pieces
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let path = format!("boundary.pieces[{k}]");
                        Ok(AffinePiece {
                            c0: vec2(&p.c0, n, &format!("{path}.c0"))?,
                            grad: mat2(&p.grad, n, dim, &format!("{path}.grad"))?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let envelope = match b.envelope.as_deref() {
                    Some("max") | None => Envelope::Max,
                    Some("min") => Envelope::Min,
                    Some(other) => {
                        return Err(schema(
                            "boundary.envelope",
                            format!("expected min or max, got \"{other}\""),
                        ))
                    }
                };
                BoundaryDatum::piecewise_affine(pieces, envelope)
                    .map_err(|e| schema("boundary.pieces", e.to_string()))
            }
            other => Err(schema(
                "boundary.catalog",
                format!("unknown boundary datum \"{other}\""),
            )),
        }
    }

    pub fn lambda(&self) -> Lambda {
        match self.lambda {
            Some(LambdaSpec::Value(v)) => Lambda::Value(v),
            Some(LambdaSpec::Auto) | None => Lambda::Auto,
        }
    }

    pub fn eigen_problem(&self) -> Result<EigenProblem, CliError> {
        let p = EigenProblem::new(
            self.spec()?,
            self.boundary()?,
            self.ncomp(),
            self.grid()?,
            self.lambda(),
        )
        .map_err(|e| schema("lambda", e.to_string()))?;
        match self.alpha0 {
            Some(a) => p
                .with_alpha0(a)
                .map_err(|e| schema("alpha0", e.to_string())),
            None => Ok(p),
        }
    }

    /// Exponents for `evaluate`; strictly ascending, each `>= 1`.
    pub fn p_list(&self, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let list = self.p.clone().unwrap_or_else(|| default.to_vec());
        if list.is_empty() {
            return Err(schema("p", "exponent list is empty"));
        }
        if let Some(k) = list.iter().position(|p| !(*p >= 1.0) || !p.is_finite()) {
            return Err(schema(
                &format!("p[{k}]"),
                format!("exponent {} is not a finite real >= 1", list[k]),
            ));
        }
        if let Some(k) = list.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(schema(
                &format!("p[{}]", k + 1),
                "exponent list must be strictly ascending",
            ));
        }
        Ok(list)
    }

    pub fn solve_request(&self, seed_override: Option<u64>) -> Result<SolveRequest, CliError> {
        let s = self
            .solver
            .as_ref()
            .ok_or_else(|| schema("solver", "solve needs a solver section"))?;
        let m = s.m.unwrap_or(1);
        if m == 0 {
            return Err(schema("solver.m", "tooth count must be at least 1"));
        }
        let method = match s.method.as_str() {
            "sawtooth" => Method::Sawtooth { m },
            "mcshane_min" => Method::McShaneMin,
            "mcshane_max" => Method::McShaneMax,
            "refine" => Method::Refine,
            "conformal" => Method::Conformal { m },
            other => {
                return Err(schema(
                    "solver.method",
                    format!("unknown method \"{other}\""),
                ))
            }
        };
        let mut params = RefineParams::default();
        if let Some(v) = s.max_iters {
            params.max_iters = v;
        }
        if let Some(v) = s.target_deviation_fraction {
            params.target_deviation_fraction = v;
        }
        params.lipschitz_budget = s.lipschitz_budget;
        params
            .validate()
            .map_err(|e| schema("solver", e.to_string()))?;
        let mut req = SolveRequest::new(self.eigen_problem()?, method);
        req.seed = seed_override.or(s.seed).unwrap_or(0);
        req.params = params;
        req.policy = self.policy()?;
        Ok(req)
    }

    pub fn policy(&self) -> Result<ExclusionPolicy, CliError> {
        let mut policy = ExclusionPolicy::default();
        if let Some(v) = &self.verify {
            if let Some(t) = v.fold_detection_threshold {
                policy.fold_detection_threshold = t;
            }
            if let Some(b) = v.band_width {
                policy.band_width = b;
            }
        }
        policy
            .validate()
            .map_err(|e| schema("verify", e.to_string()))?;
        Ok(policy)
    }

    /// Verification tolerances; `p` is the first exponent of the `p` list, or 2.
    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances {
            policy: self.policy()?,
            ..Tolerances::default()
        };
        if let Some(list) = &self.p {
            tol.p = *list
                .first()
                .ok_or_else(|| schema("p", "exponent list is empty"))?;
        }
        if let Some(v) = &self.verify {
            tol.tol_crest = v.tol_crest;
            if let Some(c) = v.tol_const {
                tol.tol_const = c;
            }
            if let Some(d) = &v.delta_list {
                tol.deltas = d.clone();
            }
        }
        Ok(tol)
    }

    /// Samples the analytic field section, if present.
    pub fn analytic_field(&self) -> Result<Option<Field>, CliError> {
        let Some(sec) = &self.field else {
            return Ok(None);
        };
        let n = self.ncomp();
        if sec.expr.len() != n {
            return Err(schema("field.expr", format!("expected {n} expressions")));
        }
        let exprs = sec
            .expr
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let e = parse_expr(s)
                    .map_err(|err| schema(&format!("field.expr[{k}]"), err.to_string()))?;
                if e.any_var(|v| !matches!(v, Var::X(_))) {
                    return Err(schema(
                        &format!("field.expr[{k}]"),
                        "field expressions may only use x1 and x2",
                    ));
                }
                Ok(e)
            })
            .collect::<Result<Vec<Expr>, CliError>>()?;
        let grid = self.grid()?;
        let field = Field::from_fn(grid, n, |x, out| {
            let env = Env {
                x,
                ..Env::default()
            };
            for (o, e) in out.iter_mut().zip(&exprs) {
                *o = e.eval(&env);
            }
        })?;
        Ok(Some(field))
    }
}
