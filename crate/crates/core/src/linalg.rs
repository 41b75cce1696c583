//! 1×1 and 2×2 symmetric matrices: closed-form spectra and Gram products.

use crate::error::{Error, Result};
use crate::math::{hypot, sqrt};

/// Gradient-shaped matrix, `m[α][i] = ∂_i u_α`. Only the leading
/// `N × n` block is meaningful.
pub type Mat2 = [[f64; 2]; 2];

/// Symmetric `n × n` matrix (`n ≤ 2`) stored by its upper triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat {
    dim: usize,
    a11: f64,
    a12: f64,
    a22: f64,
}

impl SymMat {
    pub fn new_1(a11: f64) -> Self {
        SymMat {
            dim: 1,
            a11,
            a12: 0.0,
            a22: 0.0,
        }
    }

    pub fn new_2(a11: f64, a12: f64, a22: f64) -> Self {
        SymMat {
            dim: 2,
            a11,
            a12,
            a22,
        }
    }

    /// `t 𝕀_n`.
    pub fn scaled_identity(dim: usize, t: f64) -> Self {
        if dim == 1 {
            Self::new_1(t)
        } else {
            Self::new_2(t, 0.0, t)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    pub fn trace(&self) -> f64 {
        if self.dim == 1 {
            self.a11
        } else {
            self.a11 + self.a22
        }
    }

    pub fn det(&self) -> f64 {
        if self.dim == 1 {
            self.a11
        } else {
            self.a11 * self.a22 - self.a12 * self.a12
        }
    }

    /// Frobenius distance to `t 𝕀_n`.
    pub fn dist_to_scaled_identity(&self, t: f64) -> f64 {
        if self.dim == 1 {
            (self.a11 - t).abs()
        } else {
            let d1 = self.a11 - t;
            let d2 = self.a22 - t;
            sqrt(d1 * d1 + 2.0 * self.a12 * self.a12 + d2 * d2)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn spectrum(&self) -> Spectrum {
        eigenvalues_sym(self)
    }
}

/// Eigenvalues in ascending order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    dim: usize,
    values: [f64; 2],
}

impl Spectrum {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.dim - 1]
    }
}

/// Closed-form eigenvalues of a symmetric matrix with `n ≤ 2`.
///
/// For `n = 2` the larger-magnitude root comes from `mean ± radius` and the
/// other from `det / root`, which avoids cancellation. Diagonal input is
/// returned exactly.
pub fn eigenvalues_sym(s: &SymMat) -> Spectrum {
    if s.dim == 1 {
        return Spectrum {
            dim: 1,
            values: [s.a11, s.a11],
        };
    }
    let (a, b, c) = (s.a11, s.a12, s.a22);
    if b == 0.0 {
        let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
        return Spectrum {
            dim: 2,
            values: [lo, hi],
        };
    }
    let mean = 0.5 * (a + c);
    let radius = hypot(0.5 * (a - c), b);
    let det = a * c - b * b;
    let (lo, hi) = if mean >= 0.0 {
        let hi = mean + radius;
        (det / hi, hi)
    } else {
        let lo = mean - radius;
        (lo, det / lo)
    };
    // det/root loses accuracy when det itself cancels; fall back to the direct form.
    let lo = if (lo - (mean - radius)).abs() > 1e-8 * radius.max(mean.abs()) {
        mean - radius
    } else {
        lo
    };
    let hi = if (hi - (mean + radius)).abs() > 1e-8 * radius.max(mean.abs()) {
        mean + radius
    } else {
        hi
    };
    Spectrum {
        dim: 2,
        values: [lo.min(hi), lo.max(hi)],
    }
}

/// `Duᵀ Du` for an `n × n` gradient. Errors when `N ≠ n`.
pub fn gram(du: &Mat2, ncomp: usize, dim: usize) -> Result<SymMat> {
    if ncomp != dim {
        return Err(Error::DimensionMismatch {
            components: ncomp,
            dim,
        });
    }
    Ok(gram_rect(du, ncomp, dim))
}

/// `Duᵀ Du` for any `N × n` gradient (`n × n` result).
pub(crate) fn gram_rect(du: &Mat2, ncomp: usize, dim: usize) -> SymMat {
    let entry = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for row in du.iter().take(ncomp) {
            acc += row[i] * row[j];
        }
        acc
    };
    if dim == 1 {
        SymMat::new_1(entry(0, 0))
    } else {
        SymMat::new_2(entry(0, 0), entry(0, 1), entry(1, 1))
    }
}

/// Squared Frobenius norm of the leading `N × n` block.
pub(crate) fn frobenius_sq(du: &Mat2, ncomp: usize, dim: usize) -> f64 {
    let mut acc = 0.0;
    for row in du.iter().take(ncomp) {
        for v in row.iter().take(dim) {
            acc += v * v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn identity_and_diagonal_spectra_are_exact() {
        assert_eq!(
            eigenvalues_sym(&SymMat::new_2(1.0, 0.0, 1.0)).as_slice(),
            &[1.0, 1.0]
        );
        assert_eq!(
            eigenvalues_sym(&SymMat::new_2(3.0, 0.0, 7.0)).as_slice(),
            &[3.0, 7.0]
        );
        assert_eq!(
            eigenvalues_sym(&SymMat::new_2(7.0, 0.0, 3.0)).as_slice(),
            &[3.0, 7.0]
        );
        assert_eq!(eigenvalues_sym(&SymMat::new_1(-2.5)).as_slice(), &[-2.5]);
    }

    #[test]
    fn two_by_two_hand_case() {
        // λ² − 4λ + 3 = (λ − 1)(λ − 3)
        let s = eigenvalues_sym(&SymMat::new_2(2.0, 1.0, 2.0));
        assert!((s.min() - 1.0).abs() < 1e-15);
        assert!((s.max() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn trace_and_determinant_identities_on_random_matrices() {
        let mut rng = SeededRng::new(11);
        for _ in 0..10_000 {
            let scale = libm::pow(10.0, rng.uniform(-3.0, 3.0));
            let s = SymMat::new_2(
                scale * rng.normal(),
                scale * rng.normal(),
                scale * rng.normal(),
            );
            let e = eigenvalues_sym(&s);
            let mag = s
                .get(0, 0)
                .abs()
                .max(s.get(1, 1).abs())
                .max(s.get(0, 1).abs());
            assert!(e.min() <= e.max());
            assert!((e.min() + e.max() - s.trace()).abs() <= 1e-12 * mag.max(1e-300) * 4.0);
            assert!((e.min() * e.max() - s.det()).abs() <= 1e-12 * mag * mag * 4.0);
        }
    }

    #[test]
    fn gram_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(gram(&id, 2, 2).unwrap(), SymMat::new_2(1.0, 0.0, 1.0));
        let a = [[1.0, 2.0], [0.0, 1.0]];
        assert_eq!(gram(&a, 2, 2).unwrap(), SymMat::new_2(1.0, 2.0, 5.0));
        assert!(matches!(
            gram(&a, 1, 2),
            Err(Error::DimensionMismatch {
                components: 1,
                dim: 2
            })
        ));
    }

    #[test]
    fn gram_of_scaled_rotation_is_scaled_identity() {
        let alpha: f64 = 2.7;
        for k in 0..32 {
            let th = k as f64 * 0.37;
            let r = sqrt(alpha);
            let du = [
                [r * libm::cos(th), -r * libm::sin(th)],
                [r * libm::sin(th), r * libm::cos(th)],
            ];
            let g = gram(&du, 2, 2).unwrap();
            assert!(g.dist_to_scaled_identity(alpha) < 1e-12);
        }
    }

    #[test]
    fn gram_is_invariant_under_left_orthogonal_factor() {
        let mut rng = SeededRng::new(5);
        for _ in 0..1000 {
            let a = [[rng.normal(), rng.normal()], [rng.normal(), rng.normal()]];
            let th = rng.uniform(0.0, core::f64::consts::TAU);
            let (c, s) = (libm::cos(th), libm::sin(th));
            let flip = rng.sign();
            let q = [[c, -s * flip], [s, c * flip]];
            let mut qa = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    qa[i][j] = q[i][0] * a[0][j] + q[i][1] * a[1][j];
                }
            }
            let g1 = gram(&a, 2, 2).unwrap();
            let g2 = gram(&qa, 2, 2).unwrap();
            let scale = 1.0 + frobenius_sq(&a, 2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((g1.get(i, j) - g2.get(i, j)).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
