//! Seeded random generators for matrices and tuples. Used by the block
//! decomposition and by test fixtures.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, c, ComplexMatrix};
use crate::matcore::{Isometry, MatrixTuple};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// GUE-like Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    linalg::hermitian_part(&gaussian_matrix(rng, n, n))
}

/// Real symmetric matrix with Gaussian entries.
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), 0.0));
    linalg::hermitian_part(&g)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phases of
/// `diag(R)` divided out).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}

pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Isometry {
    let u = random_unitary(rng, rows);
    Isometry::new(u.columns(0, cols).into_owned(), 1e-10).expect("columns of a unitary")
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, 1);
    let norm = linalg::fro_norm(&g);
    g / c(norm, 0.0)
}

/// Random `d`-tuple of `n x n` matrices, Hermitian coordinates when asked.
pub fn random_tuple<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize, hermitian: bool) -> MatrixTuple {
    let mats = (0..d)
        .map(|_| if hermitian { random_hermitian(rng, n) } else { gaussian_matrix(rng, n, n) })
        .collect();
    MatrixTuple::new(mats).expect("well-formed random tuple")
}
