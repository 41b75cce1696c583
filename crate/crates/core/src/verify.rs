//! Residual checks, the minimiser/solution classification and the Jensen
//! lower bound.
//!
//! "Almost everywhere" is read as "at interior nodes outside detected fold
//! bands". A node is a fold when the slope jump `|Δ²u|/h` there stands out
//! against the jumps two nodes away on either side: kinks of piecewise
//! smooth fields produce isolated spikes, smooth curvature does not.
//! Boundary nodes carry one-sided stencils and are left out of residual and
//! spread statistics, and of the energies used by the classification.

use alloc::vec::Vec;

use crate::boundary::BoundaryDatum;
use crate::energy::{crest_of_values, is_degenerate, max_with_index, power_mean, supremand_abs};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::jet::{finite_difference_jet, Jet, JetField};
use crate::reduce::pairwise_sum;
use crate::supremand::SupremandSpec;

/// Slope jumps below `FOLD_FLOOR · (1 + scale)` are never folds.
pub const FOLD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExclusionPolicy {
    /// A slope jump is a fold when it exceeds this multiple of the smaller
    /// jump two nodes away.
    pub fold_detection_threshold: f64,
    /// `1` excludes fold nodes only; `b` also excludes nodes within `b − 1`.
    pub band_width: usize,
}

impl Default for ExclusionPolicy {
    fn default() -> Self {
        ExclusionPolicy {
            fold_detection_threshold: 4.0,
            band_width: 1,
        }
    }
}

impl ExclusionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.band_width < 1 {
            return Err(Error::InvalidInput("band width must be at least 1".into()));
        }
        if !(self.fold_detection_threshold > 1.0) {
            return Err(Error::InvalidInput(
                "fold detection threshold must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fold-band mask: `true` marks excluded nodes.
pub fn detect_folds(field: &Field, scale: f64, policy: &ExclusionPolicy) -> Result<Vec<bool>> {
    policy.validate()?;
    let grid = field.grid();
    let floor = FOLD_FLOOR * (1.0 + scale.abs());
    let mut fold = alloc::vec![false; grid.len()];
    let mut jumps = Vec::new();
    for axis in 0..grid.dim() {
        let m = grid.nodes(axis);
        let h = grid.spacing(axis);
        let stride = grid.stride(axis);
        let other = if grid.dim() == 2 {
            grid.nodes(1 - axis)
        } else {
            1
        };
        for line in 0..other {
            let start = if grid.dim() == 1 {
                0
            } else if axis == 0 {
                line
            } else {
                line * grid.nodes(1)
            };
            for c in 0..field.ncomp() {
                jumps.clear();
                jumps.push(0.0);
                for j in 1..m - 1 {
                    let at = |k: usize| field.value(start + k * stride, c);
                    jumps.push((at(j + 1) - 2.0 * at(j) + at(j - 1)).abs() / h);
                }
                for j in 1..m - 1 {
                    let jj = jumps[j];
                    if !(jj > floor) {
                        continue;
                    }
                    let left = (j >= 3).then(|| jumps[j - 2]);
                    let right = (j + 2 < m - 1).then(|| jumps[j + 2]);
                    let reference = match (left, right) {
                        (Some(a), Some(b)) => a.min(b),
                        (Some(a), None) | (None, Some(a)) => a,
                        (None, None) => continue,
                    };
                    if jj > policy.fold_detection_threshold * reference {
                        fold[start + j * stride] = true;
                    }
                }
            }
        }
    }
    if policy.band_width == 1 {
        return Ok(fold);
    }
    let r = (policy.band_width - 1) as isize;
    let mut band = fold.clone();
    for idx in (0..grid.len()).filter(|&i| fold[i]) {
        let mi = grid.multi_index(idx);
        let span1 = if grid.dim() == 2 { r } else { 0 };
        for d0 in -r..=r {
            for d1 in -span1..=span1 {
                let a = mi[0] as isize + d0;
                let b = mi[1] as isize + d1;
                if a < 0 || a >= grid.nodes(0) as isize {
                    continue;
                }
                if grid.dim() == 2 && (b < 0 || b >= grid.nodes(1) as isize) {
                    continue;
                }
                band[grid.index([a as usize, b as usize])] = true;
            }
        }
    }
    Ok(band)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualStatus {
    Ok,
    /// Every interior node was excluded; `sup` and `mean` are not meaningful.
    EmptyEvaluationSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualStats {
    pub lambda: f64,
    /// `max ||H| − Λ|` over evaluated nodes.
    pub sup: f64,
    pub mean: f64,
    pub fold_count: usize,
    /// Excluded nodes over all nodes.
    pub fold_fraction: f64,
    pub evaluated: usize,
    pub status: ResidualStatus,
}

fn jets_for(field: &Field, spec: &SupremandSpec) -> Result<JetField> {
    finite_difference_jet(field, spec.order())
}

/// `||H(D^[k]u)| − Λ|` over interior nodes outside fold bands.
pub fn check_pde_residual(
    field: &Field,
    spec: &SupremandSpec,
    lambda: f64,
    policy: &ExclusionPolicy,
) -> Result<ResidualStats> {
    let jf = jets_for(field, spec)?;
    let abs_h = supremand_abs(&jf, spec)?;
    let mask = detect_folds(field, lambda, policy)?;
    Ok(residual_from(&jf, &abs_h, &mask, lambda))
}

pub(crate) fn residual_from(
    jf: &JetField,
    abs_h: &[f64],
    mask: &[bool],
    lambda: f64,
) -> ResidualStats {
    let fold_count = mask.iter().filter(|m| **m).count();
    let res: Vec<f64> = (0..abs_h.len())
        .filter(|&i| !mask[i] && !jf.boundary_mask()[i])
        .map(|i| (abs_h[i] - lambda).abs())
        .collect();
    let status = if res.is_empty() {
        ResidualStatus::EmptyEvaluationSet
    } else {
        ResidualStatus::Ok
    };
    let (sup, mean) = if res.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (
            max_with_index(&res).0,
            pairwise_sum(&res) / res.len() as f64,
        )
    };
    ResidualStats {
        lambda,
        sup,
        mean,
        fold_count,
        fold_fraction: fold_count as f64 / abs_h.len() as f64,
        evaluated: res.len(),
        status,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub p: f64,
    /// Crest slack; `None` means `20 · foldFraction`.
    pub tol_crest: Option<f64>,
    /// Relative spread of `|H|` allowed off folds.
    pub tol_const: f64,
    pub policy: ExclusionPolicy,
    /// Offsets `δ` for the deviation measure; empty means `{0.05 E_∞}`.
    pub deltas: Vec<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            p: 2.0,
            tol_crest: None,
            tol_const: 1e-3,
            policy: ExclusionPolicy::default(),
            deltas: Vec::new(),
        }
    }
}

/// Multiple of the fold fraction used as the default crest slack.
pub const CREST_FOLD_FACTOR: f64 = 20.0;
/// Rounding allowance added to the crest slack.
pub const CREST_ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub p: f64,
    pub crest: f64,
    /// `E_∞`, the level `Λ` a solution would have.
    pub lambda_hat: f64,
    pub residual_sup_off_folds: f64,
    /// `max − min` of `|H|` over evaluated nodes.
    pub spread_off_folds: f64,
    pub fold_fraction: f64,
    pub evaluated: usize,
    pub tol_crest: f64,
    pub tol_const: f64,
    /// `(δ, fraction of {|H| < E_∞ − δ})`
    pub deviation_measure: Vec<(f64, f64)>,
    pub is_minimiser: bool,
    pub is_solution: bool,
    pub verdict_consistent: bool,
}

/// Classifies `u` as crest minimiser and as PDE solution, independently.
///
/// Crest, `λ̂` and the deviation fractions are taken over interior nodes, so
/// a one-sided boundary stencil reaching across a kink cannot inflate `λ̂`.
pub fn classify_theorem1(
    field: &Field,
    spec: &SupremandSpec,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let jf = jets_for(field, spec)?;
    let abs_h = supremand_abs(&jf, spec)?;
    let inner: Vec<f64> = abs_h
        .iter()
        .zip(jf.boundary_mask())
        .filter(|(_, b)| !**b)
        .map(|(v, _)| *v)
        .collect();
    let (einf, _) = max_with_index(&inner);
    let e1 = power_mean(&inner, 1.0)?;
    if is_degenerate(e1, einf) {
        return Err(Error::DegenerateEnergy { e1, einf });
    }
    let crest = crest_of_values(&inner, tol.p)?;
    let mask = detect_folds(field, einf, &tol.policy)?;
    let stats = residual_from(&jf, &abs_h, &mask, einf);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..abs_h.len() {
        if !mask[i] && !jf.boundary_mask()[i] {
            lo = lo.min(abs_h[i]);
            hi = hi.max(abs_h[i]);
        }
    }
    let spread = if stats.evaluated == 0 {
        f64::NAN
    } else {
        hi - lo
    };
    let tol_crest = tol
        .tol_crest
        .unwrap_or(CREST_FOLD_FACTOR * stats.fold_fraction)
        + CREST_ROUNDING;
    let is_minimiser = crest <= 1.0 + tol_crest;
    let is_solution = spread <= tol.tol_const * einf;
    let deltas = if tol.deltas.is_empty() {
        alloc::vec![0.05 * einf]
    } else {
        tol.deltas.clone()
    };
    Ok(VerificationReport {
        p: tol.p,
        crest,
        lambda_hat: einf,
        residual_sup_off_folds: stats.sup,
        spread_off_folds: spread,
        fold_fraction: stats.fold_fraction,
        evaluated: stats.evaluated,
        tol_crest,
        tol_const: tol.tol_const,
        deviation_measure: deviation_of_values(&inner, einf, &deltas),
        is_minimiser,
        is_solution,
        verdict_consistent: is_minimiser == is_solution,
    })
}

fn deviation_of_values(abs_h: &[f64], einf: f64, deltas: &[f64]) -> Vec<(f64, f64)> {
    let m = abs_h.len() as f64;
    deltas
        .iter()
        .map(|&d| {
            (
                d,
                abs_h.iter().filter(|v| **v < einf - d).count() as f64 / m,
            )
        })
        .collect()
}

/// Node fraction of `{|H| < E_∞ − δ}` for each `δ`.
pub fn deviation_measure(
    jf: &JetField,
    spec: &SupremandSpec,
    deltas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let abs_h = supremand_abs(jf, spec)?;
    let (einf, _) = max_with_index(&abs_h);
    Ok(deviation_of_values(&abs_h, einf, deltas))
}

#[derive(Clone, Debug, PartialEq)]
pub struct JensenReport {
    pub einf: f64,
    /// Mean forward-difference gradient.
    pub mean_gradient: [[f64; 2]; 2],
    pub phi_gradient: [[f64; 2]; 2],
    /// `max |mean gradient − Dφ|`
    pub identity_error: f64,
    /// `|H(mean gradient)|`
    pub bound: f64,
    /// `|H(Dφ)|`
    pub lambda_star: f64,
    pub margin: f64,
    pub holds: bool,
    pub admissible: bool,
    /// Hypotheses unmet or `n = 2`: the result is informative only.
    pub advisory: bool,
}

/// Checks `E_∞(u) ≥ |H(mean Du)|` and `mean Du = Dφ` for admissible `u`.
pub fn jensen_lower_bound_check(
    field: &Field,
    spec: &SupremandSpec,
    phi: &BoundaryDatum,
) -> Result<JensenReport> {
    let grid = *field.grid();
    let (dim, ncomp) = (grid.dim(), field.ncomp());
    let jf = jets_for(field, spec)?;
    let (einf, _) = max_with_index(&supremand_abs(&jf, spec)?);
    let mut mean_gradient = [[0.0; 2]; 2];
    let mut diffs = Vec::new();
    for axis in 0..dim {
        let h = grid.spacing(axis);
        for (c, row) in mean_gradient.iter_mut().enumerate().take(ncomp) {
            diffs.clear();
            for idx in 0..grid.len() {
                if let Some(next) = grid.shifted(idx, axis, 1) {
                    diffs.push(field.value(next, c) - field.value(idx, c));
                }
            }
            row[axis] = pairwise_sum(&diffs) / diffs.len() as f64 / h;
        }
    }
    let center = [
        0.5 * (grid.lower(0) + grid.upper(0)),
        if dim == 2 {
            0.5 * (grid.lower(1) + grid.upper(1))
        } else {
            0.0
        },
    ];
    let phi_jet = phi.jet(center, dim, ncomp, 1);
    let mut identity_error: f64 = 0.0;
    for c in 0..ncomp {
        for i in 0..dim {
            identity_error = identity_error.max((mean_gradient[c][i] - phi_jet.du[c][i]).abs());
        }
    }
    let top = |du: [[f64; 2]; 2]| -> Result<f64> {
        let mut jet = Jet::first_order(dim, ncomp, center, phi_jet.u, du);
        jet.order = spec.order();
        Ok(spec.eval_H(&jet)?.abs())
    };
    let bound = top(mean_gradient)?;
    let lambda_star = top(phi_jet.du)?;
    let admissible = (0..grid.len()).filter(|&i| grid.is_boundary(i)).all(|i| {
        (0..ncomp).all(|c| {
            let want = phi.value(c, grid.point(i), dim);
            (field.value(i, c) - want).abs() <= 1e-12 * (1.0 + want.abs())
        })
    });
    let hypotheses =
        spec.top_order_only() && spec.claimed_convex_top() && phi.is_affine() && admissible;
    let margin = einf - bound;
    Ok(JensenReport {
        einf,
        mean_gradient,
        phi_gradient: phi_jet.du,
        identity_error,
        bound,
        lambda_star,
        margin,
        holds: margin >= -1e-12 * (1.0 + bound),
        admissible,
        advisory: !hypotheses || dim != 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::math;
    use core::f64::consts::PI;

    fn tent(m: usize, lambda: f64) -> Field {
        let g = Grid::new_1d(0.0, 1.0, m).unwrap();
        Field::from_scalar_fn(g, |x| lambda * x[0].min(1.0 - x[0])).unwrap()
    }

    #[test]
    fn affine_field_has_no_folds() {
        let g = Grid::unit(2, 33).unwrap();
        let f = Field::from_scalar_fn(g, |x| 0.6 * x[0] + 0.8 * x[1]).unwrap();
        let r = check_pde_residual(
            &f,
            &SupremandSpec::eikonal(),
            1.0,
            &ExclusionPolicy::default(),
        )
        .unwrap();
        assert_eq!(r.fold_count, 0);
        assert!(r.sup < 1e-12);
    }

    #[test]
    fn tent_fold_band() {
        let f = tent(1024, 1.0);
        let r = check_pde_residual(
            &f,
            &SupremandSpec::eikonal(),
            1.0,
            &ExclusionPolicy::default(),
        )
        .unwrap();
        assert_eq!(r.fold_count, 2);
        assert!(r.fold_fraction <= 3.0 / 1024.0);
        assert!(r.sup <= 1e-12, "{}", r.sup);
        let wide = ExclusionPolicy {
            band_width: 3,
            ..ExclusionPolicy::default()
        };
        let r = check_pde_residual(&f, &SupremandSpec::eikonal(), 1.0, &wide).unwrap();
        assert_eq!(r.fold_count, 6);
    }

    #[test]
    fn smooth_fields_have_no_folds() {
        let g = Grid::new_1d(0.0, 1.0, 1024).unwrap();
        for f in [
            Field::from_scalar_fn(g, |x| x[0] * x[0]).unwrap(),
            Field::from_scalar_fn(g, |x| math::sin(PI * x[0])).unwrap(),
        ] {
            let mask = detect_folds(&f, 1.0, &ExclusionPolicy::default()).unwrap();
            assert!(mask.iter().all(|m| !m));
        }
    }

    #[test]
    fn classify_examples() {
        let spec = SupremandSpec::eikonal();
        let tol = Tolerances::default();
        let rep = classify_theorem1(&tent(1024, 1.0), &spec, &tol).unwrap();
        assert!(rep.is_minimiser && rep.is_solution && rep.verdict_consistent);
        assert!(rep.crest >= 1.0 && rep.crest <= 1.0 + 10.0 * 2.0 / 1024.0);

        let g = Grid::new_1d(0.0, 1.0, 1024).unwrap();
        let sq = Field::from_scalar_fn(g, |x| x[0] * x[0]).unwrap();
        let rep = classify_theorem1(&sq, &spec, &tol).unwrap();
        assert!(!rep.is_minimiser && !rep.is_solution && rep.verdict_consistent);
        assert!((rep.crest - 3f64.sqrt()).abs() < 0.01 * 3f64.sqrt());

        let c = Field::from_scalar_fn(g, |x| 2.0 * x[0]).unwrap();
        let rep = classify_theorem1(&c, &spec, &tol).unwrap();
        assert!(rep.is_minimiser && rep.is_solution);

        let z = Field::zeros(g, 1).unwrap();
        assert!(matches!(
            classify_theorem1(&z, &spec, &tol),
            Err(Error::DegenerateEnergy { .. })
        ));
    }

    #[test]
    fn deviation_examples() {
        let spec = SupremandSpec::eikonal();
        let m = 1024;
        let jf = finite_difference_jet(&tent(m, 1.0), 1).unwrap();
        let d = deviation_measure(&jf, &spec, &[0.1]).unwrap();
        assert!(d[0].1 <= 3.0 / m as f64);
        let g = Grid::new_1d(0.0, 1.0, m).unwrap();
        let sq = Field::from_scalar_fn(g, |x| x[0] * x[0]).unwrap();
        let jf = finite_difference_jet(&sq, 1).unwrap();
        let d = deviation_measure(&jf, &spec, &[0.2]).unwrap();
        assert!((d[0].1 - 0.9).abs() <= 2.0 / m as f64, "{}", d[0].1);
    }

    #[test]
    fn jensen_identity_in_1d() {
        let g = Grid::new_1d(0.0, 1.0, 257).unwrap();
        let phi = BoundaryDatum::affine([0.0; 2], [[0.3, 0.0], [0.0; 2]]);
        let spec = SupremandSpec::eikonal();
        let u = phi.field(&g, 1).unwrap();
        let rep = jensen_lower_bound_check(&u, &spec, &phi).unwrap();
        assert!(rep.identity_error <= 1e-12 && rep.holds && !rep.advisory);
        assert!((rep.einf - rep.lambda_star).abs() < 1e-12);
        let bumped =
            Field::from_scalar_fn(g, |x| 0.3 * x[0] + 0.05 * math::sin(3.0 * PI * x[0])).unwrap();
        let rep = jensen_lower_bound_check(&bumped, &spec, &phi).unwrap();
        assert!(rep.admissible && rep.holds && rep.margin > 0.0);
        assert!(rep.identity_error <= 1e-12);
    }
}
