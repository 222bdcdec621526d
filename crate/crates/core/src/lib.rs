//! Matrix ranges of finite tuples of complex matrices.
//!
//! The crate decides membership and inclusion between matrix ranges through
//! Choi-matrix semidefinite programs, extracts separating and exposing
//! pencils, computes minimal presentations of block-diagonal tuples, and
//! recovers the unitary linking two minimal tuples with equal ranges.
//!
//! ```
//! use matrange::{convexity, MatrixTuple, Tolerances};
//!
//! let simplex = MatrixTuple::diagonal(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
//! let bary = MatrixTuple::scalar(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
//! let verdict = convexity::membership(&bary, &simplex, &Tolerances::default()).unwrap();
//! assert!(verdict.is_in());
//! ```

pub mod cli;
pub mod convexity;
pub mod decomp;
pub mod error;
pub mod extreme;
pub mod io;
pub mod linalg;
pub mod matcore;
pub mod random;
pub mod sdp;

pub use error::{Error, Result};
pub use matcore::{Isometry, MatrixTuple};

/// Numerical tolerances shared by every module. All of them are relative to
/// the Frobenius scale of the inputs they are applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub iso_tol: f64,
    pub decomp_tol: f64,
    pub equiv_tol: f64,
    pub feas_tol: f64,
    /// Treat points whose phase-one value lies within `feas_tol` of zero as
    /// members (closed-set semantics) instead of reporting them as marginal.
    pub boundary_in: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm_tol: 1e-8,
            iso_tol: 1e-8,
            decomp_tol: 1e-8,
            equiv_tol: 1e-6,
            feas_tol: 1e-7,
            boundary_in: true,
        }
    }
}

impl Tolerances {
    pub fn sdp_options(&self) -> sdp::SdpOptions {
        sdp::SdpOptions { feas_tol: self.feas_tol, herm_tol: self.herm_tol, ..Default::default() }
    }

    pub(crate) fn closed(&self) -> Self {
        Self { boundary_in: true, ..*self }
    }
}
