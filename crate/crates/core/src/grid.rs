//! Uniform node-centred grids on boxes in one or two dimensions.

use alloc::format;

use crate::error::{Error, Result};

/// Uniform Cartesian grid on `[a_1, b_1] (× [a_2, b_2])`.
///
/// Nodes are numbered row-major with the last axis fastest: in 2D the flat
/// index of `(i, j)` is `i * M_2 + j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    nodes: [usize; 2],
    spacing: [f64; 2],
}

impl Grid {
    /// Smallest admissible node count per axis.
    pub const MIN_NODES: usize = 8;

    pub fn new(lower: &[f64], upper: &[f64], nodes: &[usize]) -> Result<Self> {
        let dim = nodes.len();
        if !(1..=2).contains(&dim) || lower.len() != dim || upper.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 with matching bounds (got {} / {} / {})",
                lower.len(),
                upper.len(),
                nodes.len()
            )));
        }
        let mut g = Grid {
            dim,
            lower: [0.0; 2],
            upper: [0.0; 2],
            nodes: [1; 2],
            spacing: [0.0; 2],
        };
        for axis in 0..dim {
            let (a, b, m) = (lower[axis], upper[axis], nodes[axis]);
            if !a.is_finite() || !b.is_finite() || b <= a {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: bounds [{a}, {b}] must be finite with a < b"
                )));
            }
            if m < Self::MIN_NODES {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: {m} nodes, need at least {}",
                    Self::MIN_NODES
                )));
            }
            let h = (b - a) / (m - 1) as f64;
            if !(h > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: spacing underflows"
                )));
            }
            g.lower[axis] = a;
            g.upper[axis] = b;
            g.nodes[axis] = m;
            g.spacing[axis] = h;
        }
        Ok(g)
    }

    pub fn new_1d(a: f64, b: f64, m: usize) -> Result<Self> {
        Self::new(&[a], &[b], &[m])
    }

    pub fn new_2d(lower: [f64; 2], upper: [f64; 2], nodes: [usize; 2]) -> Result<Self> {
        Self::new(&lower, &upper, &nodes)
    }

    /// Unit interval or unit square with `m` nodes per axis.
    pub fn unit(dim: usize, m: usize) -> Result<Self> {
        match dim {
            1 => Self::new_1d(0.0, 1.0, m),
            2 => Self::new_2d([0.0; 2], [1.0; 2], [m; 2]),
            _ => Err(Error::InvalidGrid(format!("dimension {dim} not supported"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.upper[axis]
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinate along one axis, `a + j h`.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.lower[axis] + j as f64 * self.spacing[axis]
    }

    /// Flat-index stride of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.nodes[1]
        } else {
            1
        }
    }

    pub fn index(&self, multi: [usize; 2]) -> usize {
        if self.dim == 1 {
            multi[0]
        } else {
            multi[0] * self.nodes[1] + multi[1]
        }
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.nodes[1], idx % self.nodes[1]]
        }
    }

    /// Coordinates of a node; unused axes are zero.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let m = self.multi_index(idx);
        let mut p = [0.0; 2];
        for (axis, slot) in p.iter_mut().enumerate().take(self.dim) {
            *slot = self.coord(axis, m[axis]);
        }
        p
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim).any(|axis| m[axis] == 0 || m[axis] + 1 == self.nodes[axis])
    }

    /// Lebesgue measure of the box.
    pub fn volume(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.upper[a] - self.lower[a])
            .product()
    }

    /// Neighbour of `idx` shifted by `delta` nodes along `axis`, if it exists.
    pub fn shifted(&self, idx: usize, axis: usize, delta: isize) -> Option<usize> {
        let mut m = self.multi_index(idx);
        let j = m[axis] as isize + delta;
        if j < 0 || j >= self.nodes[axis] as isize {
            return None;
        }
        m[axis] = j as usize;
        Some(self.index(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_node_hits_upper_bound() {
        for &(a, b, m) in &[(0.0, 1.0, 101usize), (-3.7, 2.9, 8), (0.1, 0.7, 1024)] {
            let g = Grid::new_1d(a, b, m).unwrap();
            let last = g.coord(0, m - 1);
            assert!((last - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_small_or_degenerate_axes() {
        assert!(Grid::new_1d(0.0, 1.0, 7).is_err());
        assert!(Grid::new_1d(1.0, 1.0, 10).is_err());
        assert!(Grid::new_1d(0.0, f64::NAN, 10).is_err());
        assert!(Grid::new(&[0.0; 3], &[1.0; 3], &[8; 3]).is_err());
    }

    #[test]
    fn index_round_trip_and_boundary() {
        let g = Grid::new_2d([0.0, 0.0], [1.0, 2.0], [9, 12]).unwrap();
        assert_eq!(g.len(), 108);
        for idx in 0..g.len() {
            assert_eq!(g.index(g.multi_index(idx)), idx);
        }
        assert!(g.is_boundary(0));
        assert!(g.is_boundary(g.index([3, 11])));
        assert!(!g.is_boundary(g.index([3, 5])));
        assert_eq!(g.shifted(g.index([3, 5]), 0, 1), Some(g.index([4, 5])));
        assert_eq!(g.shifted(g.index([0, 5]), 0, -1), None);
    }
}
