//! Boundary data `φ` with closed-form derivatives.
//!
//! Every datum is piecewise polynomial of degree at most two, so analytic
//! jets of `φ` are available at any point and critical levels computed from
//! them carry no stencil error.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::jet::{Jet, JetField, Tensor3};
use crate::linalg::Mat2;

/// `u_α(x) = c0_α + Σ_i grad[α][i] x_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffinePiece {
    pub c0: [f64; 2],
    pub grad: Mat2,
}

impl AffinePiece {
    fn value(&self, comp: usize, x: [f64; 2], dim: usize) -> f64 {
        let mut v = self.c0[comp];
        for (g, xi) in self.grad[comp].iter().zip(x).take(dim) {
            v += g * xi;
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Envelope {
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryDatum {
    Affine(AffinePiece),
    /// `u_α(x) = c0_α + b_α · x + xᵀ A_α x` with symmetric `A_α`.
    Quadratic {
        c0: [f64; 2],
        b: Mat2,
        a: Tensor3,
    },
    /// Componentwise max or min of affine pieces; the derivative is that of
    /// the lowest-index active piece.
    PiecewiseAffine {
        pieces: Vec<AffinePiece>,
        envelope: Envelope,
    },
}

impl BoundaryDatum {
    pub fn zero() -> Self {
        BoundaryDatum::Affine(AffinePiece {
            c0: [0.0; 2],
            grad: [[0.0; 2]; 2],
        })
    }

    pub fn affine(c0: [f64; 2], grad: Mat2) -> Self {
        BoundaryDatum::Affine(AffinePiece { c0, grad })
    }

    pub fn quadratic(c0: [f64; 2], b: Mat2, a: Tensor3) -> Result<Self> {
        for m in &a {
            if m[0][1] != m[1][0] {
                return Err(Error::InvalidInput(
                    "quadratic coefficient must be symmetric".into(),
                ));
            }
        }
        Ok(BoundaryDatum::Quadratic { c0, b, a })
    }

    pub fn piecewise_affine(pieces: Vec<AffinePiece>, envelope: Envelope) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput(
                "piecewise-affine datum needs at least one piece".into(),
            ));
        }
        Ok(BoundaryDatum::PiecewiseAffine { pieces, envelope })
    }

    pub fn is_affine(&self) -> bool {
        match self {
            BoundaryDatum::Affine(_) => true,
            BoundaryDatum::Quadratic { a, .. } => a.iter().flatten().flatten().all(|v| *v == 0.0),
            BoundaryDatum::PiecewiseAffine { pieces, .. } => {
                pieces.windows(2).all(|w| w[0] == w[1])
            }
        }
    }

    fn active_piece(
        pieces: &[AffinePiece],
        envelope: Envelope,
        comp: usize,
        x: [f64; 2],
        dim: usize,
    ) -> usize {
        let mut best = 0;
        let mut best_v = pieces[0].value(comp, x, dim);
        for (k, p) in pieces.iter().enumerate().skip(1) {
            let v = p.value(comp, x, dim);
            let better = match envelope {
                Envelope::Max => v > best_v,
                Envelope::Min => v < best_v,
            };
            if better {
                best = k;
                best_v = v;
            }
        }
        best
    }

    pub fn value(&self, comp: usize, x: [f64; 2], dim: usize) -> f64 {
        match self {
            BoundaryDatum::Affine(p) => p.value(comp, x, dim),
            BoundaryDatum::Quadratic { c0, b, a } => {
                let mut v = c0[comp];
                for i in 0..dim {
                    v += b[comp][i] * x[i];
                    for j in 0..dim {
                        v += x[i] * a[comp][i][j] * x[j];
                    }
                }
                v
            }
            BoundaryDatum::PiecewiseAffine { pieces, envelope } => {
                let k = Self::active_piece(pieces, *envelope, comp, x, dim);
                pieces[k].value(comp, x, dim)
            }
        }
    }

    /// `∂_i φ_comp(x)`.
    pub fn gradient(&self, comp: usize, x: [f64; 2], dim: usize) -> [f64; 2] {
        let mut g = [0.0; 2];
        match self {
            BoundaryDatum::Affine(p) => g[..dim].copy_from_slice(&p.grad[comp][..dim]),
            BoundaryDatum::Quadratic { b, a, .. } => {
                for i in 0..dim {
                    g[i] = b[comp][i];
                    for j in 0..dim {
                        g[i] += 2.0 * a[comp][i][j] * x[j];
                    }
                }
            }
            BoundaryDatum::PiecewiseAffine { pieces, envelope } => {
                let k = Self::active_piece(pieces, *envelope, comp, x, dim);
                g[..dim].copy_from_slice(&pieces[k].grad[comp][..dim]);
            }
        }
        g
    }

    /// Analytic jet of `φ` at `x`.
    pub fn jet(&self, x: [f64; 2], dim: usize, ncomp: usize, order: usize) -> Jet {
        let mut u = [0.0; 2];
        let mut du = [[0.0; 2]; 2];
        let mut d2u = [[[0.0; 2]; 2]; 2];
        for c in 0..ncomp {
            u[c] = self.value(c, x, dim);
            du[c] = self.gradient(c, x, dim);
            if order == 2 {
                if let BoundaryDatum::Quadratic { a, .. } = self {
                    for i in 0..dim {
                        for j in 0..dim {
                            d2u[c][i][j] = 2.0 * a[c][i][j];
                        }
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

    /// Nodal samples of `φ`.
    pub fn field(&self, grid: &Grid, ncomp: usize) -> Result<Field> {
        let dim = grid.dim();
        Field::from_fn(*grid, ncomp, |x, out| {
            for (c, o) in out.iter_mut().enumerate() {
                *o = self.value(c, x, dim);
            }
        })
    }

    /// Analytic jets of `φ` at every node.
    pub fn jet_field(&self, grid: &Grid, ncomp: usize, order: usize) -> Result<JetField> {
        if !(1..=2).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let jets = (0..grid.len())
            .map(|i| self.jet(grid.point(i), grid.dim(), ncomp, order))
            .collect();
        JetField::from_jets(*grid, order, jets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_x_squared() {
        let phi = BoundaryDatum::quadratic(
            [0.0; 2],
            [[0.0; 2]; 2],
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0; 2]; 2]],
        )
        .unwrap();
        assert_eq!(phi.value(0, [0.5, 0.0], 1), 0.25);
        assert_eq!(phi.gradient(0, [0.5, 0.0], 1)[0], 1.0);
        let jet = phi.jet([0.5, 0.0], 1, 1, 2);
        assert_eq!(jet.d2u[0][0][0], 2.0);
        assert!(!phi.is_affine());
    }

    #[test]
    fn piecewise_tent() {
        let up = AffinePiece {
            c0: [0.0; 2],
            grad: [[1.0, 0.0], [0.0; 2]],
        };
        let down = AffinePiece {
            c0: [1.0, 0.0],
            grad: [[-1.0, 0.0], [0.0; 2]],
        };
        let phi = BoundaryDatum::piecewise_affine(alloc::vec![up, down], Envelope::Min).unwrap();
        assert_eq!(phi.value(0, [0.25, 0.0], 1), 0.25);
        assert_eq!(phi.value(0, [0.75, 0.0], 1), 0.25);
        assert_eq!(phi.gradient(0, [0.5, 0.0], 1)[0], 1.0);
        assert_eq!(phi.gradient(0, [0.75, 0.0], 1)[0], -1.0);
    }

    #[test]
    fn affine_field_and_jets() {
        let phi = BoundaryDatum::affine([1.0, 0.0], [[2.0, -1.0], [0.0, 3.0]]);
        let g = Grid::unit(2, 8).unwrap();
        let f = phi.field(&g, 2).unwrap();
        let jf = phi.jet_field(&g, 2, 1).unwrap();
        for i in 0..g.len() {
            let x = g.point(i);
            assert_eq!(f.value(i, 0), 1.0 + 2.0 * x[0] - x[1]);
            assert_eq!(jf.jets()[i].du, [[2.0, -1.0], [0.0, 3.0]]);
        }
        assert!(phi.is_affine());
    }

    #[test]
    fn asymmetric_quadratic_rejected() {
        let a = [[[0.0, 1.0], [0.0, 0.0]], [[0.0; 2]; 2]];
        assert!(BoundaryDatum::quadratic([0.0; 2], [[0.0; 2]; 2], a).is_err());
    }
}
