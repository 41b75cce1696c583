//! Discrete maps `u : Ω → R^N` sampled at grid nodes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Node values of an `N`-component map (`N ∈ {1, 2}`), stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    ncomp: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&ncomp) {
            return Err(Error::InvalidField(format!(
                "{ncomp} components; expected 1 or 2"
            )));
        }
        if values.len() != ncomp * grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                ncomp * grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at node {}",
                pos / ncomp
            )));
        }
        Ok(Field {
            grid,
            ncomp,
            values,
        })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Result<Self> {
        Self::new(grid, ncomp, vec![0.0; ncomp * grid.len()])
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn<F>(grid: Grid, ncomp: usize, mut f: F) -> Result<Self>
    where
        F: FnMut([f64; 2], &mut [f64]),
    {
        let mut values = vec![0.0; ncomp * grid.len()];
        for (idx, chunk) in values.chunks_mut(ncomp).enumerate() {
            f(grid.point(idx), chunk);
        }
        Self::new(grid, ncomp, values)
    }

    /// Scalar convenience for [`Field::from_fn`].
    pub fn from_scalar_fn<F: FnMut([f64; 2]) -> f64>(grid: Grid, mut f: F) -> Result<Self> {
        Self::from_fn(grid, 1, |x, out| out[0] = f(x))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize, comp: usize) -> f64 {
        self.values[idx * self.ncomp + comp]
    }

    pub fn node(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.ncomp..(idx + 1) * self.ncomp]
    }

    pub(crate) fn set(&mut self, idx: usize, comp: usize, v: f64) {
        self.values[idx * self.ncomp + comp] = v;
    }

    /// Multiplies every value by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.ncomp,
            self.values.iter().map(|v| v * s).collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = Grid::unit(1, 10).unwrap();
        assert!(Field::new(g, 1, vec![0.0; 9]).is_err());
        let mut v = vec![0.0; 10];
        v[3] = f64::NAN;
        assert!(Field::new(g, 1, v).is_err());
        assert!(Field::new(g, 3, vec![0.0; 30]).is_err());
    }

    #[test]
    fn sampling_matches_node_coordinates() {
        let g = Grid::unit(2, 9).unwrap();
        let f = Field::from_fn(g, 2, |x, o| {
            o[0] = x[0];
            o[1] = x[1];
        })
        .unwrap();
        for idx in 0..g.len() {
            let p = g.point(idx);
            assert_eq!(f.value(idx, 0), p[0]);
            assert_eq!(f.value(idx, 1), p[1]);
        }
    }
}
