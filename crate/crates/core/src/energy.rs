//! Rescaled `L^p` energies, the supremal energy and the crest factor.
//!
//! Quadrature is the plain node mean, so `E_p ≤ E_∞` holds exactly in the
//! discrete model. Sums use a fixed pairwise tree, so results do not depend
//! on evaluation order.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::JetField;
use crate::math;
use crate::reduce::pairwise_sum_by;
use crate::supremand::SupremandSpec;

/// `E_1 < DEGENERATE_RTOL · (1 + E_∞)` counts as `E_1 = 0`.
pub const DEGENERATE_RTOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub p_list: Vec<f64>,
    pub ep: Vec<f64>,
    pub einf: f64,
    /// `E_∞ / E_p` per exponent; `None` when `E_1` vanishes.
    pub crest: Option<Vec<f64>>,
    pub argmax_node: usize,
    pub e1: f64,
    pub e1_is_zero: bool,
}

/// `|H|` at every node, in node order.
pub fn supremand_abs(jf: &JetField, spec: &SupremandSpec) -> Result<Vec<f64>> {
    jf.jets()
        .iter()
        .enumerate()
        .map(|(i, jet)| match spec.eval_H(jet) {
            Ok(v) => Ok(v.abs()),
            Err(Error::NonFinite { x, .. }) => Err(Error::NonFinite { node: Some(i), x }),
            Err(e) => Err(e),
        })
        .collect()
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(alloc::format!(
            "p = {p} is not a finite real >= 1"
        )));
    }
    Ok(())
}

/// Maximum with the lowest index on ties. Empty input gives `(0, 0)`.
pub fn max_with_index(values: &[f64]) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (i, &v) in values.iter().enumerate() {
        if i == 0 || v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// Power mean `((1/M) Σ v^p)^{1/p}` of nonnegative values.
///
/// Values are scaled by their maximum first, which keeps large `p` finite
/// and makes the result at most the maximum.
pub fn power_mean(values: &[f64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    if values.is_empty() {
        return Ok(0.0);
    }
    let (m, _) = max_with_index(values);
    if m == 0.0 {
        return Ok(0.0);
    }
    let n = values.len() as f64;
    let mean = if p == 1.0 {
        pairwise_sum_by(values, |v| v / m) / n
    } else if p == 2.0 {
        pairwise_sum_by(values, |v| (v / m) * (v / m)) / n
    } else {
        pairwise_sum_by(values, |v| math::pow(v / m, p)) / n
    };
    let mean = mean.min(1.0);
    Ok(if p == 1.0 {
        m * mean
    } else if p == 2.0 {
        m * math::sqrt(mean)
    } else {
        m * math::pow(mean, 1.0 / p)
    })
}

pub fn energy_p(jf: &JetField, spec: &SupremandSpec, p: f64) -> Result<f64> {
    check_exponent(p)?;
    power_mean(&supremand_abs(jf, spec)?, p)
}

/// `(E_∞, argmax)`, lowest node index on ties.
pub fn energy_inf(jf: &JetField, spec: &SupremandSpec) -> Result<(f64, usize)> {
    Ok(max_with_index(&supremand_abs(jf, spec)?))
}

pub(crate) fn is_degenerate(e1: f64, einf: f64) -> bool {
    e1 < DEGENERATE_RTOL * (1.0 + einf)
}

/// Crest factor of precomputed `|H|` values.
pub fn crest_of_values(values: &[f64], p: f64) -> Result<f64> {
    let (einf, _) = max_with_index(values);
    let e1 = power_mean(values, 1.0)?;
    if is_degenerate(e1, einf) {
        return Err(Error::DegenerateEnergy { e1, einf });
    }
    Ok(einf / power_mean(values, p)?)
}

/// `C_{∞,p} = E_∞ / E_p`.
pub fn crest_factor(jf: &JetField, spec: &SupremandSpec, p: f64) -> Result<f64> {
    check_exponent(p)?;
    crest_of_values(&supremand_abs(jf, spec)?, p)
}

/// Energies for an ascending list of exponents.
pub fn p_sweep(jf: &JetField, spec: &SupremandSpec, p_list: &[f64]) -> Result<EnergyReport> {
    for p in p_list {
        check_exponent(*p)?;
    }
    if p_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidExponent(
            "exponent list must be strictly ascending".into(),
        ));
    }
    let values = supremand_abs(jf, spec)?;
    sweep_values(&values, p_list)
}

pub(crate) fn sweep_values(values: &[f64], p_list: &[f64]) -> Result<EnergyReport> {
    let (einf, argmax_node) = max_with_index(values);
    let e1 = power_mean(values, 1.0)?;
    let e1_is_zero = is_degenerate(e1, einf);
    let ep = p_list
        .iter()
        .map(|&p| power_mean(values, p))
        .collect::<Result<Vec<_>>>()?;
    let crest = (!e1_is_zero).then(|| ep.iter().map(|e| einf / e).collect());
    Ok(EnergyReport {
        p_list: p_list.to_vec(),
        ep,
        einf,
        crest,
        argmax_node,
        e1,
        e1_is_zero,
    })
}

/// Geometric exponent ladder `1, 2, 4, …, p_max`.
pub fn geometric_ladder(p_max: f64) -> Vec<f64> {
    let mut out = alloc::vec![1.0];
    while out[out.len() - 1] * 2.0 <= p_max {
        let next = out[out.len() - 1] * 2.0;
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::grid::Grid;
    use crate::jet::finite_difference_jet;

    fn x_squared(m: usize) -> JetField {
        let g = Grid::new_1d(0.0, 1.0, m).unwrap();
        let f = Field::from_scalar_fn(g, |x| x[0] * x[0]).unwrap();
        finite_difference_jet(&f, 1).unwrap()
    }

    #[test]
    fn constant_field_energies() {
        let g = Grid::unit(2, 9).unwrap();
        let f = Field::from_scalar_fn(g, |x| 0.7 * x[0]).unwrap();
        let jf = finite_difference_jet(&f, 1).unwrap();
        let spec = SupremandSpec::eikonal();
        let rep = p_sweep(&jf, &spec, &[1.0, 2.0, 3.5, 64.0]).unwrap();
        for e in &rep.ep {
            assert!((e - 0.7).abs() < 1e-14);
        }
        let (einf, _) = energy_inf(&jf, &spec).unwrap();
        assert!((einf - 0.7).abs() < 1e-14);
    }

    #[test]
    fn tie_break_is_lowest_index() {
        assert_eq!(max_with_index(&[1.0, 3.0, 3.0, 2.0]), (3.0, 1));
        assert_eq!(max_with_index(&[2.0, 2.0]), (2.0, 0));
        assert_eq!(crest_of_values(&[4.0; 17], 2.0).unwrap(), 1.0);
    }

    #[test]
    fn x_squared_closed_forms() {
        let m = 1024;
        let jf = x_squared(m);
        let spec = SupremandSpec::eikonal();
        for p in [1.0f64, 2.0, 4.0] {
            let want = 2.0 / math::pow(p + 1.0, 1.0 / p);
            let got = energy_p(&jf, &spec, p).unwrap();
            assert!(
                (got - want).abs() <= 2.0 / m as f64,
                "p = {p}: {got} vs {want}"
            );
        }
        let (einf, arg) = energy_inf(&jf, &spec).unwrap();
        assert!((einf - 2.0).abs() < 1e-9);
        assert_eq!(arg, m - 1);
        let crest = crest_factor(&jf, &spec, 2.0).unwrap();
        assert!((crest / 3f64.sqrt() - 1.0).abs() < 0.01);
        let rep = p_sweep(&jf, &spec, &geometric_ladder(256.0)).unwrap();
        let e256 = *rep.ep.last().unwrap();
        assert!((e256 - 2.0 * math::pow(257.0, -1.0 / 256.0)).abs() < 1e-3);
        assert!((2.0 - e256) / 2.0 <= 0.022);
    }

    #[test]
    fn spike_is_invisible_to_mean() {
        let m = 1000;
        let mut v = alloc::vec![1.0; m];
        v[417] = 10.0;
        assert_eq!(max_with_index(&v), (10.0, 417));
        let e1 = power_mean(&v, 1.0).unwrap();
        assert!((e1 - (m as f64 - 1.0 + 10.0) / m as f64).abs() < 1e-14);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let g = Grid::unit(1, 32).unwrap();
        let jf = finite_difference_jet(&Field::zeros(g, 1).unwrap(), 1).unwrap();
        let spec = SupremandSpec::eikonal();
        assert_eq!(energy_p(&jf, &spec, 1.0).unwrap(), 0.0);
        assert!(matches!(
            crest_factor(&jf, &spec, 2.0),
            Err(Error::DegenerateEnergy { .. })
        ));
        let rep = p_sweep(&jf, &spec, &[1.0, 2.0]).unwrap();
        assert!(rep.e1_is_zero && rep.crest.is_none());
    }

    #[test]
    fn exponent_validation() {
        assert!(power_mean(&[1.0], 0.5).is_err());
        assert!(power_mean(&[1.0], f64::INFINITY).is_err());
        assert!(power_mean(&[1.0], f64::NAN).is_err());
        let jf = x_squared(16);
        let spec = SupremandSpec::eikonal();
        assert!(p_sweep(&jf, &spec, &[2.0, 1.0]).is_err());
        assert!(p_sweep(&jf, &spec, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn ladder() {
        assert_eq!(geometric_ladder(256.0).len(), 9);
        assert_eq!(geometric_ladder(1.0), alloc::vec![1.0]);
    }
}
