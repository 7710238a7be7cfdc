//! Noncommutative complete Bell polynomials and generalized Wronskians.
//!
//! The crate is organized bottom-up:
//!
//! - [`ncbell`]: expansion and evaluation of the noncommutative complete
//!   Bell polynomials `B_m`.
//! - [`jets`]: truncated Taylor arithmetic, used for exact derivatives.
//! - [`exprlang`]: a small expression language for component functions.
//! - [`wronskian`]: frames `Y_f`, companion matrices `X_a`, generalized
//!   Wronskians computed directly and through Bell polynomials, the `Phi`
//!   functionals and coefficient reconstruction.
//! - [`verify`]: sampled identity checks with residual reports, and the
//!   range-equivalence decision for two function tuples.
//!
//! ```
//! use wronski::exprlang::Interval;
//! use wronski::wronskian::{reconstruct_coefficients, Frame};
//!
//! let f = Frame::parse(&["exp(t)", "exp(2*t)"], Interval::REAL_LINE).unwrap();
//! let a = reconstruct_coefficients(&f, 0.5).unwrap();
//! assert!((a[0] - 3.0).abs() < 1e-12 && (a[1] + 2.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod exprlang;
pub mod jets;
pub mod ncbell;
pub mod par;
pub mod verify;
pub mod wronskian;

pub use error::{Error, Result};
