//! Closed-form solutions: 1D sawtooth families and McShane envelopes.

use alloc::vec::Vec;

use crate::eigen::EigenProblem;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::math;
use crate::supremand::Catalog;

/// Continuous piecewise-affine `u` on a 1D grid with slopes `±Λ` arranged
/// in `m` up-down teeth and `u(a) = φ_A`, `u(b) = φ_B`.
///
/// With `|φ_B − φ_A| = Λ (b − a)` the affine interpolant is the only
/// solution and `m` is ignored.
pub fn sawtooth_1d(phi_a: f64, phi_b: f64, lambda: f64, m: usize, grid: &Grid) -> Result<Field> {
    if grid.dim() != 1 {
        return Err(Error::InvalidInput(
            "sawtooth construction needs a 1D grid".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidInput("tooth count must be at least 1".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() || !phi_a.is_finite() || !phi_b.is_finite() {
        return Err(Error::InvalidInput(
            "level and boundary values must be finite, level >= 0".into(),
        ));
    }
    let (a, b) = (grid.lower(0), grid.upper(0));
    let len = b - a;
    let delta = phi_b - phi_a;
    if delta.abs() > lambda * len {
        return Err(Error::Infeasible(alloc::format!(
            "|phi(b) - phi(a)| = {} exceeds Lambda * L = {}; no function with |u'| = Lambda connects the data",
            delta.abs(),
            lambda * len
        )));
    }
    let n = grid.nodes(0);
    let mut values: Vec<f64> = Vec::with_capacity(n);
    if delta.abs() == lambda * len {
        for j in 0..n {
            values.push(phi_a + delta * (grid.coord(0, j) - a) / len);
        }
    } else {
        // per tooth: rise over `up`, fall over `period - up`
        let period = len / m as f64;
        let up = 0.5 * (len + delta / lambda) / m as f64;
        let step = delta / m as f64;
        for j in 0..n {
            let s = grid.coord(0, j) - a;
            let k = (math::floor(s / period) as usize).min(m - 1);
            let local = s - k as f64 * period;
            let base = phi_a + k as f64 * step;
            values.push(if local <= up {
                base + lambda * local
            } else {
                base + lambda * up - lambda * (local - up)
            });
        }
    }
    values[0] = phi_a;
    values[n - 1] = phi_b;
    Field::new(*grid, 1, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McShaneMode {
    /// `min_y φ(y) + Λ|x − y|`
    Min,
    /// `max_y φ(y) − Λ|x − y|`
    Max,
}

/// McShane envelope over the boundary nodes of the grid.
pub fn mcshane_solution(problem: &EigenProblem, lambda: f64, mode: McShaneMode) -> Result<Field> {
    if problem.ncomp != 1 || problem.order != 1 {
        return Err(Error::InvalidInput(
            "McShane envelopes need a scalar first-order problem".into(),
        ));
    }
    if problem.spec.catalog() != Some(&Catalog::Eikonal) {
        return Err(Error::InvalidInput(
            "McShane envelopes solve the eikonal supremand |Du|".into(),
        ));
    }
    let grid = problem.grid;
    let dim = grid.dim();
    let bnodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_boundary(i)).collect();
    let bpts: Vec<[f64; 2]> = bnodes.iter().map(|&i| grid.point(i)).collect();
    let bvals: Vec<f64> = bpts.iter().map(|&x| problem.phi.value(0, x, dim)).collect();
    let dist = |p: [f64; 2], q: [f64; 2]| math::hypot(p[0] - q[0], p[1] - q[1]);
    for i in 0..bnodes.len() {
        for j in i + 1..bnodes.len() {
            let d = dist(bpts[i], bpts[j]);
            if (bvals[i] - bvals[j]).abs() > lambda * d * (1.0 + 1e-12) {
                return Err(Error::Infeasible(alloc::format!(
                    "boundary data are not Lambda-Lipschitz between nodes {} and {} (slope {} > {lambda})",
                    bnodes[i],
                    bnodes[j],
                    (bvals[i] - bvals[j]).abs() / d
                )));
            }
        }
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut bpos = 0;
    for idx in 0..grid.len() {
        if bpos < bnodes.len() && bnodes[bpos] == idx {
            values.push(bvals[bpos]);
            bpos += 1;
            continue;
        }
        let x = grid.point(idx);
        let v = match mode {
            McShaneMode::Min => bpts
                .iter()
                .zip(&bvals)
                .map(|(y, v)| v + lambda * dist(x, *y))
                .fold(f64::INFINITY, f64::min),
            McShaneMode::Max => bpts
                .iter()
                .zip(&bvals)
                .map(|(y, v)| v - lambda * dist(x, *y))
                .fold(f64::NEG_INFINITY, f64::max),
        };
        values.push(v);
    }
    Field::new(grid, 1, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryDatum;
    use crate::eigen::Lambda;
    use crate::supremand::SupremandSpec;

    fn unit_1d(m: usize) -> Grid {
        Grid::new_1d(0.0, 1.0, m).unwrap()
    }

    #[test]
    fn tent() {
        let g = unit_1d(101);
        let u = sawtooth_1d(0.0, 0.0, 1.0, 1, &g).unwrap();
        assert!((u.value(50, 0) - 0.5).abs() < 1e-15);
        for j in 0..101 {
            let x = g.coord(0, j);
            assert!((u.value(j, 0) - x.min(1.0 - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn asymmetric_kink() {
        let g = unit_1d(101);
        let u = sawtooth_1d(0.0, 0.5, 1.0, 1, &g).unwrap();
        assert!((u.value(75, 0) - 0.75).abs() < 1e-15);
        assert_eq!(u.value(100, 0), 0.5);
        assert!((u.value(90, 0) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn infeasible_and_extremal_data() {
        let g = unit_1d(64);
        assert!(matches!(
            sawtooth_1d(0.0, 1.2, 1.0, 1, &g),
            Err(Error::Infeasible(_))
        ));
        let u = sawtooth_1d(0.0, 1.0, 1.0, 7, &g).unwrap();
        for j in 0..64 {
            assert!((u.value(j, 0) - g.coord(0, j)).abs() < 1e-15);
        }
    }

    #[test]
    fn distinct_tooth_counts_differ() {
        let g = unit_1d(257);
        let a = sawtooth_1d(0.0, 0.0, 1.0, 2, &g).unwrap();
        let b = sawtooth_1d(0.0, 0.0, 1.0, 3, &g).unwrap();
        assert_ne!(a.values(), b.values());
        assert!((a.value(64, 0) - 0.25).abs() < 1e-15);
    }

    fn eikonal_problem(grid: Grid, phi: BoundaryDatum, lambda: f64) -> EigenProblem {
        EigenProblem::new(
            SupremandSpec::eikonal(),
            phi,
            1,
            grid,
            Lambda::Value(lambda),
        )
        .unwrap()
    }

    #[test]
    fn mcshane_square_distance() {
        let g = Grid::unit(2, 33).unwrap();
        let p = eikonal_problem(g, BoundaryDatum::zero(), 1.0);
        let u = mcshane_solution(&p, 1.0, McShaneMode::Min).unwrap();
        assert!((u.value(g.index([16, 16]), 0) - 0.5).abs() < 1e-15);
        let v = mcshane_solution(&p, 1.0, McShaneMode::Max).unwrap();
        assert!((v.value(g.index([16, 16]), 0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn mcshane_1d_branches() {
        let g = unit_1d(101);
        let phi = BoundaryDatum::affine([0.0; 2], [[0.5, 0.0], [0.0; 2]]);
        let p = eikonal_problem(g, phi, 1.0);
        let lo = mcshane_solution(&p, 1.0, McShaneMode::Min).unwrap();
        assert!((lo.value(75, 0) - 0.75).abs() < 1e-15);
        let hi = mcshane_solution(&p, 1.0, McShaneMode::Max).unwrap();
        assert!((hi.value(25, 0) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn mcshane_rejects_steep_data() {
        let g = unit_1d(32);
        let phi = BoundaryDatum::affine([0.0; 2], [[2.0, 0.0], [0.0; 2]]);
        let p = eikonal_problem(g, phi, 1.0);
        assert!(matches!(
            mcshane_solution(&p, 1.0, McShaneMode::Min),
            Err(Error::Infeasible(_))
        ));
    }
}
