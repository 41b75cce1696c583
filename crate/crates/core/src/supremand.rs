//! Supremands `H(x, X, 𝐗)`: the built-in catalog and parsed expressions.
//!
//! A supremand is *conformal* when it factors through the Gram matrix,
//! `H(x, X, 𝐗) = h(x, X, 𝐗ᵀ𝐗)`. For conformal specs `eval_H` goes through
//! `h ∘ gram`, so both evaluation paths agree by construction.

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Env, Expr, Var};
use crate::jet::Jet;
use crate::linalg::{frobenius_sq, gram_rect, Mat2, SymMat};
use crate::math;
use crate::rng::SeededRng;

/// Built-in supremands.
#[derive(Clone, Debug, PartialEq)]
pub enum Catalog {
    /// `H = |𝐗|` (Frobenius), `h = √trace S`.
    Eikonal,
    /// `H = |𝐗|² − a`, `h = trace S − a`.
    Eikonal2Shift { a: f64 },
    /// `h = trace S + g(x, X)`, with `g` an expression in `x` and `u` only.
    TracePlus { g: Expr },
    /// `H = c : 𝐗`.
    AffineDir { c: Mat2 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SupremandKind {
    Catalog(Catalog),
    Expression { big_h: Expr, h: Option<Expr> },
}

/// Where the identity ray `t ↦ h(x, X, t𝕀)` is defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayDomain {
    All,
    NonNegative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupremandSpec {
    kind: SupremandKind,
    order: usize,
    conformal: bool,
    top_order_only: bool,
    claimed_convex_top: bool,
}

impl SupremandSpec {
    pub fn eikonal() -> Self {
        Self::from_catalog(Catalog::Eikonal)
    }

    pub fn eikonal2_shift(a: f64) -> Self {
        Self::from_catalog(Catalog::Eikonal2Shift { a })
    }

    /// `g` may only reference `x1, x2, u1, u2`.
    pub fn trace_plus(g: Expr) -> Result<Self> {
        if g.any_var(|v| v.is_derivative()) {
            return Err(Error::InvalidSpec(format!(
                "TRACE_PLUS term '{g}' must depend on x and u only"
            )));
        }
        Ok(Self::from_catalog(Catalog::TracePlus { g }))
    }

    pub fn affine_dir(c: Mat2) -> Self {
        Self::from_catalog(Catalog::AffineDir { c })
    }

    pub fn from_catalog(cat: Catalog) -> Self {
        let (conformal, top_only, convex) = match &cat {
            Catalog::Eikonal => (true, true, true),
            Catalog::Eikonal2Shift { .. } => (true, true, false),
            Catalog::TracePlus { g } => (true, !g.any_var(|_| true), false),
            Catalog::AffineDir { .. } => (false, true, true),
        };
        SupremandSpec {
            kind: SupremandKind::Catalog(cat),
            order: 1,
            conformal,
            top_order_only: top_only,
            claimed_convex_top: convex,
        }
    }

    /// Builds a spec from expression text for `H` and, optionally, its
    /// conformal form `h`. When both are given they are cross-checked on
    /// seeded random jets and rejected on disagreement beyond `1e-10`.
    pub fn from_expressions(
        big_h: &str,
        h: Option<&str>,
        claimed_convex_top: bool,
    ) -> Result<Self> {
        let big_h = parse_expr(big_h)?;
        let h = h.map(parse_expr).transpose()?;
        if big_h.any_var(|v| matches!(v, Var::S(..) | Var::T)) {
            return Err(Error::InvalidSpec(
                "H may not reference Gram entries or t; put those in the conformal form".into(),
            ));
        }
        let order = if big_h.any_var(|v| matches!(v, Var::H(..))) {
            2
        } else {
            1
        };
        if let Some(h) = &h {
            if order == 2 || h.any_var(|v| matches!(v, Var::G(..) | Var::H(..))) {
                return Err(Error::InvalidSpec(
                    "conformal form may reference only x, u, s11, s12, s22 and t".into(),
                ));
            }
        }
        let top_order_only = !big_h.any_var(|v| matches!(v, Var::X(_) | Var::U(_)));
        let spec = SupremandSpec {
            conformal: h.is_some(),
            kind: SupremandKind::Expression { big_h, h },
            order,
            top_order_only,
            claimed_convex_top,
        };
        if spec.conformal {
            spec.check_conformal_consistency()?;
        }
        Ok(spec)
    }

    pub fn kind(&self) -> &SupremandKind {
        &self.kind
    }

    pub fn catalog(&self) -> Option<&Catalog> {
        match &self.kind {
            SupremandKind::Catalog(c) => Some(c),
            _ => None,
        }
    }

    /// Jet order `k` the spec expects.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_conformal(&self) -> bool {
        self.conformal
    }

    pub fn top_order_only(&self) -> bool {
        self.top_order_only
    }

    pub fn claimed_convex_top(&self) -> bool {
        self.claimed_convex_top
    }

    pub fn ray_domain(&self) -> RayDomain {
        match &self.kind {
            SupremandKind::Catalog(Catalog::Eikonal) => RayDomain::NonNegative,
            SupremandKind::Catalog(_) => RayDomain::All,
            SupremandKind::Expression { h: Some(h), .. } => {
                let probe = Env {
                    t: -1.0,
                    s: [-1.0, 0.0, -1.0],
                    ..Env::default()
                };
                if h.eval(&probe).is_finite() {
                    RayDomain::All
                } else {
                    RayDomain::NonNegative
                }
            }
            SupremandKind::Expression { .. } => RayDomain::NonNegative,
        }
    }

    /// True when `h` ignores `(x, X)`, so its identity-ray inverse is a
    /// single number.
    pub fn h_is_autonomous(&self) -> bool {
        match &self.kind {
            SupremandKind::Catalog(Catalog::TracePlus { g }) => !g.any_var(|_| true),
            SupremandKind::Catalog(_) => true,
            SupremandKind::Expression { h: Some(h), .. } => {
                !h.any_var(|v| matches!(v, Var::X(_) | Var::U(_)))
            }
            SupremandKind::Expression { .. } => false,
        }
    }

    /// Equivalent expression text `(H, h)` for catalog entries.
    pub fn catalog_expression(&self) -> Option<(String, Option<String>)> {
        const FROB_SQ: &str = "g11^2 + g12^2 + g21^2 + g22^2";
        let cat = self.catalog()?;
        Some(match cat {
            Catalog::Eikonal => (format!("sqrt({FROB_SQ})"), Some("sqrt(s11 + s22)".into())),
            Catalog::Eikonal2Shift { a } => (
                format!("{FROB_SQ} - {}", Expr::Num(*a)),
                Some(format!("s11 + s22 - {}", Expr::Num(*a))),
            ),
            Catalog::TracePlus { g } => (
                format!("{FROB_SQ} + ({g})"),
                Some(format!("s11 + s22 + ({g})")),
            ),
            Catalog::AffineDir { c } => (
                format!(
                    "{} * g11 + {} * g12 + {} * g21 + {} * g22",
                    paren(c[0][0]),
                    paren(c[0][1]),
                    paren(c[1][0]),
                    paren(c[1][1])
                ),
                None,
            ),
        })
    }

    fn check_conformal_consistency(&self) -> Result<()> {
        let mut rng = SeededRng::new(0x5eed);
        for (dim, ncomp) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            for _ in 0..64 {
                let jet = random_jet(&mut rng, dim, ncomp, 1);
                let direct = self.eval_direct(&jet);
                let via = match self.eval_h(jet.x, jet.u, &gram_rect(&jet.du, ncomp, dim)) {
                    Ok(v) => v,
                    Err(Error::NonFinite { .. }) => f64::NAN,
                    Err(e) => return Err(e),
                };
                if !direct.is_finite() && !via.is_finite() {
                    continue;
                }
                if !((direct - via).abs() <= 1e-10 * (1.0 + direct.abs())) {
                    return Err(Error::InvalidSpec(format!(
                        "H and h disagree at a sampled jet (n = {dim}, N = {ncomp}): {direct} vs {via}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn eval_direct(&self, jet: &Jet) -> f64 {
        match &self.kind {
            SupremandKind::Catalog(cat) => {
                let fsq = frobenius_sq(&jet.du, jet.ncomp, jet.dim);
                match cat {
                    Catalog::Eikonal => math::sqrt(fsq),
                    Catalog::Eikonal2Shift { a } => fsq - a,
                    Catalog::TracePlus { g } => fsq + g.eval(&env_of(jet)),
                    Catalog::AffineDir { c } => {
                        let mut acc = 0.0;
                        for (ca, da) in c.iter().zip(&jet.du).take(jet.ncomp) {
                            for i in 0..jet.dim {
                                acc += ca[i] * da[i];
                            }
                        }
                        acc
                    }
                }
            }
            SupremandKind::Expression { big_h, .. } => big_h.eval(&env_of(jet)),
        }
    }

    /// `H(D^[k]u)` at one jet.
    #[allow(non_snake_case)]
    pub fn eval_H(&self, jet: &Jet) -> Result<f64> {
        if jet.order != self.order {
            return Err(Error::OrderMismatch {
                spec: self.order,
                jet: jet.order,
            });
        }
        let v = match &self.kind {
            SupremandKind::Catalog(Catalog::AffineDir { .. }) => self.eval_direct(jet),
            SupremandKind::Catalog(_) => {
                self.eval_h(jet.x, jet.u, &gram_rect(&jet.du, jet.ncomp, jet.dim))?
            }
            SupremandKind::Expression { .. } => self.eval_direct(jet),
        };
        if !v.is_finite() {
            return Err(Error::NonFinite {
                node: None,
                x: jet.x,
            });
        }
        Ok(v)
    }

    /// Conformal form `h(x, X, S)`.
    pub fn eval_h(&self, x: [f64; 2], u: [f64; 2], s: &SymMat) -> Result<f64> {
        if !self.conformal {
            return Err(Error::NotConformal);
        }
        let tr = s.trace();
        let v = match &self.kind {
            SupremandKind::Catalog(cat) => match cat {
                Catalog::Eikonal => math::sqrt(tr),
                Catalog::Eikonal2Shift { a } => tr - a,
                Catalog::TracePlus { g } => {
                    tr + g.eval(&Env {
                        x,
                        u,
                        ..Env::default()
                    })
                }
                Catalog::AffineDir { .. } => return Err(Error::NotConformal),
            },
            SupremandKind::Expression { h: Some(h), .. } => h.eval(&Env {
                x,
                u,
                s: [s.get(0, 0), s.get(0, 1), s.get(1, 1)],
                t: tr / s.dim() as f64,
                ..Env::default()
            }),
            SupremandKind::Expression { h: None, .. } => return Err(Error::NotConformal),
        };
        if !v.is_finite() {
            return Err(Error::NonFinite { node: None, x });
        }
        Ok(v)
    }

    /// `h(x, X, t𝕀_n)`.
    pub fn eval_ray(&self, x: [f64; 2], u: [f64; 2], dim: usize, t: f64) -> Result<f64> {
        self.eval_h(x, u, &SymMat::scaled_identity(dim, t))
    }
}

fn paren(v: f64) -> String {
    if v.is_sign_negative() {
        format!("({})", Expr::Num(v))
    } else {
        format!("{}", Expr::Num(v))
    }
}

fn env_of(jet: &Jet) -> Env {
    Env {
        x: jet.x,
        u: jet.u,
        g: jet.du,
        h: jet.d2u,
        ..Env::default()
    }
}

/// Random jet with standard-normal entries, zero outside the `(N, n)` slice.
pub(crate) fn random_jet(rng: &mut SeededRng, dim: usize, ncomp: usize, order: usize) -> Jet {
    let mut x = [0.0; 2];
    let mut u = [0.0; 2];
    let mut du = [[0.0; 2]; 2];
    let mut d2u = [[[0.0; 2]; 2]; 2];
    for xi in x.iter_mut().take(dim) {
        *xi = rng.uniform(-2.0, 2.0);
    }
    for c in 0..ncomp {
        u[c] = rng.normal();
        for i in 0..dim {
            du[c][i] = rng.normal();
        }
        if order == 2 {
            for i in 0..dim {
                for j in i..dim {
                    let v = rng.normal();
                    d2u[c][i][j] = v;
                    d2u[c][j][i] = v;
                }
            }
        }
    }
    Jet {
        dim,
        ncomp,
        order,
        x,
        u,
        du,
        d2u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn jet1(du: Mat2, dim: usize, ncomp: usize, x: [f64; 2]) -> Jet {
        Jet::first_order(dim, ncomp, x, [0.0; 2], du)
    }

    #[test]
    fn eikonal_values() {
        let s = SupremandSpec::eikonal();
        assert_eq!(s.eval_H(&jet1([[0.0; 2]; 2], 2, 1, [0.0; 2])).unwrap(), 0.0);
        assert_eq!(
            s.eval_H(&jet1([[3.0, 4.0], [0.0; 2]], 2, 1, [0.0; 2]))
                .unwrap(),
            5.0
        );
        let a: f64 = 1.7;
        let v = s
            .eval_h([0.0; 2], [0.0; 2], &SymMat::scaled_identity(2, a))
            .unwrap();
        assert!((v - (2.0 * a).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trace_plus_sin() {
        let s = SupremandSpec::trace_plus(parse_expr("sin(x1)").unwrap()).unwrap();
        let jet = jet1([[1.0, 0.0], [0.0, 1.0]], 2, 2, [FRAC_PI_2, 0.0]);
        assert!((s.eval_H(&jet).unwrap() - 3.0).abs() < 1e-15);
        let zero = SupremandSpec::trace_plus(Expr::Num(0.0)).unwrap();
        assert_eq!(zero.eval_ray([0.0; 2], [0.0; 2], 2, 1.25).unwrap(), 2.5);
        assert!(SupremandSpec::trace_plus(parse_expr("g11").unwrap()).is_err());
    }

    #[test]
    fn affine_dir_is_not_conformal() {
        let s = SupremandSpec::affine_dir([[1.0, -2.0], [0.5, 0.0]]);
        assert!(matches!(
            s.eval_h([0.0; 2], [0.0; 2], &SymMat::scaled_identity(2, 1.0)),
            Err(Error::NotConformal)
        ));
        let jet = jet1([[1.0, 1.0], [2.0, 0.0]], 2, 2, [0.0; 2]);
        assert_eq!(s.eval_H(&jet).unwrap(), 0.0);
    }

    #[test]
    fn expression_matches_eikonal() {
        let e = SupremandSpec::from_expressions("sqrt(g11^2 + g12^2 + g21^2 + g22^2)", None, true)
            .unwrap();
        let cat = SupremandSpec::eikonal();
        let mut rng = SeededRng::new(5);
        for _ in 0..1000 {
            let jet = random_jet(&mut rng, 2, 2, 1);
            let (a, b) = (e.eval_H(&jet).unwrap(), cat.eval_H(&jet).unwrap());
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn catalog_matches_expression_forms() {
        let specs = [
            SupremandSpec::eikonal(),
            SupremandSpec::eikonal2_shift(0.75),
            SupremandSpec::trace_plus(parse_expr("sin(x1) * u1").unwrap()).unwrap(),
            SupremandSpec::affine_dir([[0.5, -1.0], [2.0, 0.25]]),
        ];
        let mut rng = SeededRng::new(9);
        for spec in &specs {
            let (big_h, h) = spec.catalog_expression().unwrap();
            let e = SupremandSpec::from_expressions(&big_h, h.as_deref(), false).unwrap();
            for (dim, ncomp) in [(1, 1), (2, 1), (2, 2)] {
                for _ in 0..300 {
                    let jet = random_jet(&mut rng, dim, ncomp, 1);
                    let (a, b) = (spec.eval_H(&jet).unwrap(), e.eval_H(&jet).unwrap());
                    assert!(
                        (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                        "{big_h}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn h_of_gram_equals_big_h() {
        let specs = [
            SupremandSpec::eikonal(),
            SupremandSpec::eikonal2_shift(-1.0),
            SupremandSpec::trace_plus(parse_expr("cos(x2) + u1^2").unwrap()).unwrap(),
        ];
        let mut rng = SeededRng::new(13);
        for spec in &specs {
            for _ in 0..1000 {
                let jet = random_jet(&mut rng, 2, 2, 1);
                let via = spec
                    .eval_h(jet.x, jet.u, &gram_rect(&jet.du, 2, 2))
                    .unwrap();
                assert_eq!(spec.eval_H(&jet).unwrap(), via);
            }
        }
    }

    #[test]
    fn inconsistent_conformal_pair_is_rejected() {
        let err = SupremandSpec::from_expressions("g11^2 + g22^2", Some("s11 + s22"), false);
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
        let ok = SupremandSpec::from_expressions(
            "g11^2 + g12^2 + g21^2 + g22^2",
            Some("s11 + s22"),
            false,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn order_is_checked() {
        let s = SupremandSpec::from_expressions("h111 + h122", None, false).unwrap();
        assert_eq!(s.order(), 2);
        let jet = jet1([[0.0; 2]; 2], 2, 1, [0.0; 2]);
        assert!(matches!(
            s.eval_H(&jet),
            Err(Error::OrderMismatch { spec: 2, jet: 1 })
        ));
    }

    #[test]
    fn non_finite_is_reported() {
        let s = SupremandSpec::from_expressions("1 / (g11 - g11)", None, false).unwrap();
        let jet = jet1([[1.0, 0.0], [0.0; 2]], 1, 1, [0.25, 0.0]);
        assert!(matches!(s.eval_H(&jet), Err(Error::NonFinite { x, .. }) if x[0] == 0.25));
    }

    #[test]
    fn ray_domains() {
        assert_eq!(
            SupremandSpec::eikonal().ray_domain(),
            RayDomain::NonNegative
        );
        assert_eq!(
            SupremandSpec::eikonal2_shift(0.0).ray_domain(),
            RayDomain::All
        );
        let e = SupremandSpec::from_expressions(
            "sqrt(g11^2 + g12^2 + g21^2 + g22^2)",
            Some("sqrt(s11 + s22)"),
            true,
        )
        .unwrap();
        assert_eq!(e.ray_domain(), RayDomain::NonNegative);
    }
}
