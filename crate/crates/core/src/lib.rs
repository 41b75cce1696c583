//! Crest-factor energies and the eigenvalue Dirichlet problem `|H(D^[k]u)| = Λ`
//! on uniform box grids in one and two space dimensions.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation on in-memory fields; file formats and the command-line front end
//! live in the `crestfield` crate.
//!
//! Module map:
//!
//! - [`grid`], [`field`], [`jet`], [`linalg`]: discretisation and small
//!   symmetric-matrix utilities.
//! - [`expr`], [`supremand`], [`hypotheses`]: the supremand `H(x, X, 𝐗)`, its
//!   conformal form `h(x, X, S)` and sampled structural checks.
//! - [`energy`]: rescaled `L^p` energies, the supremal energy and the crest factor.
//! - [`boundary`], [`eigen`]: boundary data, critical eigenvalues and the
//!   identity-ray inverse.
//! - [`construct`]: explicit and iterative solution constructors.
//! - [`verify`]: residual checks and the minimiser/solution classification.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod boundary;
pub mod construct;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod hypotheses;
pub mod jet;
pub mod linalg;
pub mod rng;
pub mod supremand;
pub mod verify;

mod math;
mod reduce;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid;
pub use jet::{finite_difference_jet, Jet, JetField};
pub use linalg::{eigenvalues_sym, gram, Mat2, Spectrum, SymMat};
pub use supremand::SupremandSpec;
