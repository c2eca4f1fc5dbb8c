//! Tau functions of integrable hierarchies computed three ways: as Fredholm
//! determinants of Grassmannian points, as Jimbo-Miwa-Ueno potentials of a
//! Riemann-Hilbert problem on the unit circle, and as large-size limits of
//! block Toeplitz determinants.
//!
//! The building blocks are
//! - [`loops`]: matrix Fourier series on the circle and quadrature,
//! - [`toeplitz`]: finite block Toeplitz determinants, Hankel operators and
//!   the Szegő-Widom limit,
//! - [`rhfactor`]: Birkhoff factorization, the Malgrange form and Widom's
//!   derivative formula,
//! - [`grassmann`]: Grassmannian points, commuting flows, Baker functions and
//!   tau functions,
//! - [`kacmoody`]: the loop realization of the affine algebra of type A with
//!   its central extension and the Drinfeld-Sokolov tau relation.

pub mod error;
pub mod grassmann;
pub mod kacmoody;
pub mod linalg;
pub mod loops;
pub mod rhfactor;
pub mod toeplitz;

pub use error::{Error, Result};
pub use linalg::CMat;
pub use loops::{BlockLoop, CircleGrid, LoopLiteral, Projection};
pub use num_complex::Complex64;
