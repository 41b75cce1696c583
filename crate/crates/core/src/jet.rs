//! Finite-difference jets `D^[k]u = (x, u, Du[, D²u])` at grid nodes.
//!
//! Interior nodes use centred second-order differences; boundary nodes use
//! one-sided second-order differences so that every node carries a full jet.
//! Mixed second derivatives average the two orders of differentiation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::linalg::Mat2;

/// Hessian-shaped tensor, `t[α][i][j] = ∂_i ∂_j u_α`.
pub type Tensor3 = [[[f64; 2]; 2]; 2];

/// Jet of order `k ∈ {1, 2}` at a point of `Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub dim: usize,
    pub ncomp: usize,
    pub order: usize,
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub du: Mat2,
    /// Zero for first-order jets.
    pub d2u: Tensor3,
}

impl Jet {
    pub fn first_order(dim: usize, ncomp: usize, x: [f64; 2], u: [f64; 2], du: Mat2) -> Self {
        Jet {
            dim,
            ncomp,
            order: 1,
            x,
            u,
            du,
            d2u: [[[0.0; 2]; 2]; 2],
        }
    }

    /// Checks the symmetry `D²u_{αij} = D²u_{αji}` to relative tolerance `1e-12`.
    pub fn is_symmetric(&self) -> bool {
        if self.order < 2 || self.dim < 2 {
            return true;
        }
        self.d2u.iter().take(self.ncomp).all(|h| {
            let scale = h[0][1].abs().max(h[1][0].abs()).max(1.0);
            (h[0][1] - h[1][0]).abs() <= 1e-12 * scale
        })
    }
}

/// One jet per node plus the boundary flags.
#[derive(Clone, Debug)]
pub struct JetField {
    grid: Grid,
    order: usize,
    jets: Vec<Jet>,
    boundary: Vec<bool>,
}

impl JetField {
    pub fn from_jets(grid: Grid, order: usize, jets: Vec<Jet>) -> Result<Self> {
        if jets.len() != grid.len() {
            return Err(Error::InvalidField(alloc::format!(
                "{} jets for {} nodes",
                jets.len(),
                grid.len()
            )));
        }
        let boundary = (0..grid.len()).map(|i| grid.is_boundary(i)).collect();
        Ok(JetField {
            grid,
            order,
            jets,
            boundary,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn jets(&self) -> &[Jet] {
        &self.jets
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.jets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jets.is_empty()
    }
}

fn check_stencil(grid: &Grid, order: usize) -> Result<()> {
    if !(1..=2).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let needed = if order == 1 { 3 } else { 4 };
    for axis in 0..grid.dim() {
        if grid.nodes(axis) < needed {
            return Err(Error::GridTooSmall {
                axis,
                nodes: grid.nodes(axis),
                needed,
            });
        }
    }
    Ok(())
}

/// Computes the order-`k` jet at every node.
pub fn finite_difference_jet(field: &Field, order: usize) -> Result<JetField> {
    let grid = *field.grid();
    check_stencil(&grid, order)?;
    let jets = (0..grid.len())
        .map(|idx| node_jet_unchecked(field, idx, order))
        .collect();
    JetField::from_jets(grid, order, jets)
}

/// Jet at a single node; shares its stencils with [`finite_difference_jet`].
pub fn node_jet(field: &Field, idx: usize, order: usize) -> Result<Jet> {
    check_stencil(field.grid(), order)?;
    Ok(node_jet_unchecked(field, idx, order))
}

pub(crate) fn node_jet_unchecked(field: &Field, idx: usize, order: usize) -> Jet {
    let grid = field.grid();
    let dim = grid.dim();
    let ncomp = field.ncomp();
    let mut u = [0.0; 2];
    let mut du = [[0.0; 2]; 2];
    let mut d2u = [[[0.0; 2]; 2]; 2];
    for c in 0..ncomp {
        u[c] = field.value(idx, c);
        for axis in 0..dim {
            du[c][axis] = first_diff(field, idx, c, axis);
        }
        if order == 2 {
            for axis in 0..dim {
                d2u[c][axis][axis] = second_diff(field, idx, c, axis);
            }
            if dim == 2 {
                let m = 0.5 * (mixed_diff(field, idx, c, 0, 1) + mixed_diff(field, idx, c, 1, 0));
                d2u[c][0][1] = m;
                d2u[c][1][0] = m;
            }
        }
    }
    Jet {
        dim,
        ncomp,
        order,
        x: grid.point(idx),
        u,
        du,
        d2u,
    }
}

/// Stencil weights (offset, weight) of the first derivative at position `j`
/// on an axis with `m` nodes, before division by `2h`.
fn first_weights(j: usize, m: usize) -> [(isize, f64); 3] {
    if j == 0 {
        [(0, -3.0), (1, 4.0), (2, -1.0)]
    } else if j + 1 == m {
        [(0, 3.0), (-1, -4.0), (-2, 1.0)]
    } else {
        [(1, 1.0), (-1, -1.0), (0, 0.0)]
    }
}

fn first_diff_with<F: Fn(usize) -> f64>(grid: &Grid, idx: usize, axis: usize, value: F) -> f64 {
    let j = grid.multi_index(idx)[axis];
    let stride = grid.stride(axis) as isize;
    let mut acc = 0.0;
    for (off, w) in first_weights(j, grid.nodes(axis)) {
        if w != 0.0 {
            acc += w * value((idx as isize + off * stride) as usize);
        }
    }
    acc / (2.0 * grid.spacing(axis))
}

pub(crate) fn first_diff(field: &Field, idx: usize, comp: usize, axis: usize) -> f64 {
    first_diff_with(field.grid(), idx, axis, |i| field.value(i, comp))
}

fn second_diff(field: &Field, idx: usize, comp: usize, axis: usize) -> f64 {
    let grid = field.grid();
    let j = grid.multi_index(idx)[axis];
    let m = grid.nodes(axis);
    let stride = grid.stride(axis) as isize;
    let at = |off: isize| field.value((idx as isize + off * stride) as usize, comp);
    let h = grid.spacing(axis);
    let num = if j == 0 {
        2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)
    } else if j + 1 == m {
        2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)
    } else {
        at(1) - 2.0 * at(0) + at(-1)
    };
    num / (h * h)
}

/// `D_outer (D_inner u)` with the first-derivative stencil on both axes.
fn mixed_diff(field: &Field, idx: usize, comp: usize, outer: usize, inner: usize) -> f64 {
    let grid = field.grid();
    first_diff_with(grid, idx, outer, |i| first_diff(field, i, comp, inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn constant_field_has_zero_gradient() {
        let g = Grid::unit(1, 16).unwrap();
        let f = Field::from_scalar_fn(g, |_| 4.25).unwrap();
        let jf = finite_difference_jet(&f, 1).unwrap();
        assert!(jf.jets().iter().all(|j| j.du[0][0] == 0.0));
    }

    #[test]
    fn centred_stencil_is_exact_on_quadratics() {
        let g = Grid::new_1d(0.0, 1.0, 101).unwrap();
        let f = Field::from_scalar_fn(g, |x| x[0] * x[0]).unwrap();
        let jf = finite_difference_jet(&f, 2).unwrap();
        for (idx, jet) in jf.jets().iter().enumerate() {
            let x = g.coord(0, idx);
            assert!((jet.du[0][0] - 2.0 * x).abs() < 1e-12, "node {idx}");
            assert!((jet.d2u[0][0][0] - 2.0).abs() < 1e-8, "node {idx}");
        }
    }

    #[test]
    fn affine_2d_gradient_everywhere() {
        let g = Grid::new_2d([0.0, -1.0], [2.0, 1.0], [11, 9]).unwrap();
        let f = Field::from_scalar_fn(g, |x| 3.0 * x[0] - x[1]).unwrap();
        let jf = finite_difference_jet(&f, 1).unwrap();
        for jet in jf.jets() {
            assert!((jet.du[0][0] - 3.0).abs() <= 8.0 * f64::EPSILON * 3.0 * 10.0);
            assert!((jet.du[0][1] + 1.0).abs() <= 8.0 * f64::EPSILON * 10.0);
        }
    }

    #[test]
    fn affine_fields_exact_on_random_grids() {
        let mut rng = SeededRng::new(3);
        for _ in 0..200 {
            let a = [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)];
            let b = [a[0] + rng.uniform(0.1, 3.0), a[1] + rng.uniform(0.1, 3.0)];
            let m = [8 + rng.index(40), 8 + rng.index(40)];
            let g = Grid::new_2d(a, b, m).unwrap();
            let (c0, c1, c2) = (rng.normal(), rng.normal(), rng.normal());
            let f = Field::from_scalar_fn(g, |x| c0 + c1 * x[0] + c2 * x[1]).unwrap();
            let jf = finite_difference_jet(&f, 1).unwrap();
            let scale = (c0.abs() + (c1.abs() + c2.abs()) * 5.0) / g.spacing(0).min(g.spacing(1));
            for jet in jf.jets() {
                assert!((jet.du[0][0] - c1).abs() <= 8.0 * f64::EPSILON * scale);
                assert!((jet.du[0][1] - c2).abs() <= 8.0 * f64::EPSILON * scale);
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_and_exact_on_quadratics() {
        let g = Grid::unit(2, 12).unwrap();
        let f = Field::from_scalar_fn(g, |x| x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1] * x[1])
            .unwrap();
        let jf = finite_difference_jet(&f, 2).unwrap();
        for jet in jf.jets() {
            assert!(jet.is_symmetric());
            assert!((jet.d2u[0][0][0] - 2.0).abs() < 1e-9);
            assert!((jet.d2u[0][0][1] - 3.0).abs() < 1e-9);
            assert!((jet.d2u[0][1][1] + 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_order_three() {
        let g = Grid::unit(1, 10).unwrap();
        let f = Field::zeros(g, 1).unwrap();
        assert!(matches!(
            finite_difference_jet(&f, 3),
            Err(Error::UnsupportedOrder(3))
        ));
        assert!(matches!(
            finite_difference_jet(&f, 0),
            Err(Error::UnsupportedOrder(0))
        ));
    }

    #[test]
    fn jet_positions_are_grid_points() {
        let g = Grid::new_2d([0.1, 0.3], [0.9, 1.7], [9, 13]).unwrap();
        let f = Field::zeros(g, 2).unwrap();
        let jf = finite_difference_jet(&f, 1).unwrap();
        for (idx, jet) in jf.jets().iter().enumerate() {
            assert_eq!(jet.x, g.point(idx));
            assert_eq!(jf.boundary_mask()[idx], g.is_boundary(idx));
        }
    }
}
