//! Dense complex linear-algebra helpers shared by every module.
//!
//! Everything here works on `nalgebra::DMatrix<Complex<f64>>`; the only spectral
//! primitive is the Hermitian eigendecomposition.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const I: C64 = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a complex matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

pub fn fro_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(M + M*) / 2`
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `(M - M*) / (2i)`, Hermitian for any square `M`.
pub fn skew_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m - m.adjoint()) * c(0.0, -0.5)
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    fro_norm(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && hermitian_deviation(m) <= tol * fro_norm(m).max(1.0)
}

/// `‖V*V − I‖_F`
pub fn isometry_deviation(v: &ComplexMatrix) -> f64 {
    fro_norm(&(v.adjoint() * v - identity(v.ncols())))
}

pub fn unitary_deviation(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    isometry_deviation(u)
}

/// Real part of the Frobenius inner product, `Re tr(A* B)`.
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn block_diag(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut cc) = (0, 0);
    for b in blocks {
        out.view_mut((r, cc), b.shape()).copy_from(b);
        r += b.nrows();
        cc += b.ncols();
    }
    out
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending
/// order. The input is symmetrized first, so tiny anti-Hermitian noise is
/// ignored.
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn lambda_min(m: &ComplexMatrix) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &ComplexMatrix) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

/// Rebuilds `V diag(f(λ)) V*`.
pub fn spectral_map(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let mut scaled = vectors.clone();
    for (k, &l) in values.iter().enumerate() {
        let s = f(l);
        scaled.column_mut(k).scale_mut(s);
    }
    scaled * vectors.adjoint()
}

/// Projection onto the PSD cone in Frobenius norm.
pub fn psd_part(m: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = eigh(m);
    spectral_map(&vals, &vecs, |l| l.max(0.0))
}

/// Inverse square root of a positive definite matrix.
pub fn inv_sqrt_pd(m: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = eigh(m);
    spectral_map(&vals, &vecs, |l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt())
}

/// Orthonormal basis (columns) of the null space of `m`: right singular
/// vectors whose singular value is at most `tol`. Also returns the full list
/// of singular values in descending order.
pub fn null_space(m: &ComplexMatrix, tol: f64) -> (ComplexMatrix, Vec<f64>) {
    let cols = m.ncols();
    if cols == 0 {
        return (zeros(0, 0), Vec::new());
    }
    // Pad to a tall matrix so the SVD returns a full set of right vectors.
    let tall = if m.nrows() < cols {
        let mut t = zeros(cols, cols);
        t.view_mut((0, 0), m.shape()).copy_from(m);
        t
    } else {
        m.clone()
    };
    let svd = tall.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let null_idx: Vec<usize> = sv.iter().filter(|(s, _)| *s <= tol).map(|&(_, k)| k).collect();
    let mut basis = zeros(cols, null_idx.len());
    for (dst, &k) in null_idx.iter().enumerate() {
        let row = v_t.row(k).adjoint();
        basis.set_column(dst, &row);
    }
    (basis, sv.into_iter().map(|(s, _)| s).collect())
}

/// Unitary polar factor of a square matrix (nearest unitary in Frobenius norm).
pub fn polar_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested left singular vectors");
    let v_t = svd.v_t.expect("requested right singular vectors");
    u * v_t
}

/// Column-major vectorization.
pub fn vec_of(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &[C64], rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v)
}

/// Multiplies `m` by the phase that makes its largest-magnitude entry real
/// and positive.
pub fn fix_phase(m: &ComplexMatrix) -> ComplexMatrix {
    let mut best = ZERO;
    for z in m.iter() {
        if z.norm() > best.norm() * (1.0 + 1e-12) {
            best = *z;
        }
    }
    if best.norm() == 0.0 {
        return m.clone();
    }
    m * (best.conj() / best.norm())
}
