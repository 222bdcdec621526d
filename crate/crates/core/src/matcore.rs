//! The `MatrixTuple` type and its structural operations: Hermitian
//! splitting, direct sums, compressions and unitary conjugation.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

/// A `d`-tuple of `n x n` complex matrices. It stands for its matrix range
/// `W(T)`, the set of all images `(φ(T_1), …, φ(T_d))` under unital
/// completely positive maps.
#[derive(Debug, Clone)]
pub struct MatrixTuple {
    n: usize,
    mats: Vec<ComplexMatrix>,
    herm_form: OnceLock<Vec<ComplexMatrix>>,
}

impl PartialEq for MatrixTuple {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.mats == other.mats
    }
}

impl MatrixTuple {
    pub fn new(mats: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::Empty("a tuple needs at least one coordinate".into()));
        };
        let n = first.nrows();
        for (j, m) in mats.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "coordinate {j} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Parse(format!("coordinate {j} has non-finite entries")));
            }
        }
        if n == 0 {
            return Err(Error::Empty("matrices must have side at least 1".into()));
        }
        Ok(Self { n, mats, herm_form: OnceLock::new() })
    }

    /// Tuple of diagonal matrices, one diagonal per coordinate.
    pub fn diagonal(diagonals: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = diagonals.first() else {
            return Err(Error::Empty("no coordinates".into()));
        };
        if diagonals.iter().any(|p| p.len() != first.len()) {
            return Err(Error::DimensionMismatch("diagonals have different lengths".into()));
        }
        Self::new(diagonals.iter().map(|v| linalg::diag_real(v)).collect())
    }

    /// A single point of `R^d` as a tuple of 1x1 matrices.
    pub fn scalar(point: &[f64]) -> Result<Self> {
        Self::new(point.iter().map(|&x| linalg::diag_real(&[x])).collect())
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mats(&self) -> &[ComplexMatrix] {
        &self.mats
    }

    pub fn get(&self, j: usize) -> &ComplexMatrix {
        &self.mats[j]
    }

    pub fn into_mats(self) -> Vec<ComplexMatrix> {
        self.mats
    }

    /// Frobenius norm of the stacked coordinates.
    pub fn norm(&self) -> f64 {
        self.mats.iter().map(|m| linalg::fro_norm(m).powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.mats.iter().all(|m| linalg::is_hermitian(m, tol))
    }

    /// The `2d` Hermitian coordinates `(Re A_1, Im A_1, …)`, cached.
    pub fn herm_coords(&self) -> &[ComplexMatrix] {
        self.herm_form.get_or_init(|| {
            self.mats
                .iter()
                .flat_map(|m| [linalg::hermitian_part(m), linalg::skew_part(m)])
                .collect()
        })
    }

    /// Splits every coordinate into Hermitian real and imaginary parts,
    /// `A_j = H_{2j-1} + i H_{2j}`. With `drop_zero`, coordinates that are
    /// exactly zero are omitted.
    pub fn herm_split(&self, drop_zero: bool) -> MatrixTuple {
        let coords: Vec<ComplexMatrix> = self
            .herm_coords()
            .iter()
            .filter(|h| !drop_zero || h.iter().any(|z| z.re != 0.0 || z.im != 0.0))
            .cloned()
            .collect();
        if coords.is_empty() {
            // Every coordinate vanished; keep a single zero coordinate.
            return MatrixTuple::new(vec![linalg::zeros(self.n, self.n)]).expect("valid shape");
        }
        MatrixTuple::new(coords).expect("split preserves shape")
    }

    /// Hermitian coordinates if the tuple is already Hermitian (within
    /// `tol`), otherwise the full `2d` split. Membership questions are
    /// invariant under this choice.
    pub fn hermitian_view(&self, tol: f64) -> Vec<ComplexMatrix> {
        if self.is_hermitian(tol) {
            self.mats.iter().map(linalg::hermitian_part).collect()
        } else {
            self.herm_coords().to_vec()
        }
    }

    pub fn direct_sum(&self, other: &MatrixTuple) -> Result<MatrixTuple> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch(format!(
                "direct sum of tuples with d = {} and d = {}",
                self.d(),
                other.d()
            )));
        }
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| linalg::direct_sum(a, b))
            .collect();
        MatrixTuple::new(mats)
    }

    pub fn direct_sum_all<'a>(parts: impl IntoIterator<Item = &'a MatrixTuple>) -> Result<MatrixTuple> {
        let parts: Vec<&MatrixTuple> = parts.into_iter().collect();
        let Some(first) = parts.first() else {
            return Err(Error::Empty("direct sum of no tuples".into()));
        };
        let d = first.d();
        if parts.iter().any(|p| p.d() != d) {
            return Err(Error::DimensionMismatch("direct sum of tuples with different d".into()));
        }
        let mats = (0..d)
            .map(|j| linalg::block_diag(&parts.iter().map(|p| p.mats[j].clone()).collect::<Vec<_>>()))
            .collect();
        MatrixTuple::new(mats)
    }

    /// `(V* A_1 V, …, V* A_d V)`
    pub fn compress(&self, v: &Isometry) -> Result<MatrixTuple> {
        let vm = v.matrix();
        if vm.nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, tuple side is {}",
                vm.nrows(),
                self.n
            )));
        }
        let vh = vm.adjoint();
        MatrixTuple::new(self.mats.iter().map(|m| &vh * m * vm).collect())
    }

    /// `(U* A_j U)_j` for a unitary `U`.
    pub fn conjugate(&self, u: &ComplexMatrix, tol: f64) -> Result<MatrixTuple> {
        if u.nrows() != self.n || u.ncols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, tuple side is {}",
                u.nrows(),
                u.ncols(),
                self.n
            )));
        }
        let deviation = linalg::unitary_deviation(u);
        if deviation > tol * (self.n as f64).sqrt().max(1.0) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(self.conjugate_unchecked(u))
    }

    pub(crate) fn conjugate_unchecked(&self, u: &ComplexMatrix) -> MatrixTuple {
        let uh = u.adjoint();
        MatrixTuple::new(self.mats.iter().map(|m| &uh * m * u).collect()).expect("same shape")
    }

    /// Largest coordinate-wise Frobenius distance.
    pub fn max_distance(&self, other: &MatrixTuple) -> f64 {
        if self.d() != other.d() || self.n != other.n {
            return f64::INFINITY;
        }
        self.mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| linalg::fro_norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// Coordinate-wise `tr(M_j)/n`: the barycenter of the first level.
    pub fn normalized_traces(&self) -> Vec<linalg::C64> {
        self.mats.iter().map(|m| m.trace() / self.n as f64).collect()
    }
}

/// A matrix `V` with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry(ComplexMatrix);

impl Isometry {
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if matrix.ncols() > matrix.nrows() || matrix.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "an isometry needs 1 <= cols <= rows, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = linalg::isometry_deviation(&matrix);
        if deviation > tol {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(Self(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Self(linalg::identity(n))
    }

    /// Orthonormalizes the columns of `m` (thin QR) and wraps the result.
    pub fn orthonormalize(m: &ComplexMatrix) -> Result<Self> {
        if m.ncols() > m.nrows() || m.ncols() == 0 {
            return Err(Error::DimensionMismatch("cannot orthonormalize a wide matrix".into()));
        }
        let q = m.clone().qr().q();
        Ok(Self(q.columns(0, m.ncols()).into_owned()))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `V W`
    pub fn then(&self, w: &Isometry) -> Result<Isometry> {
        if self.0.ncols() != w.0.nrows() {
            return Err(Error::DimensionMismatch("isometries do not compose".into()));
        }
        Ok(Isometry(&self.0 * &w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag_real, from_real_rows, fro_norm};
    use crate::random::{random_isometry, random_tuple, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_pair() -> MatrixTuple {
        MatrixTuple::new(vec![
            diag_real(&[1.0, -1.0]),
            from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        ])
        .unwrap()
    }

    #[test]
    fn herm_split_of_hermitian_has_zero_imaginary_part() {
        let a = MatrixTuple::new(vec![diag_real(&[1.0, 2.0])]).unwrap();
        let s = a.herm_split(false);
        assert_eq!(s.d(), 2);
        assert_eq!(s.get(0), &diag_real(&[1.0, 2.0]));
        assert_eq!(fro_norm(s.get(1)), 0.0);
        assert_eq!(a.herm_split(true).d(), 1);
    }

    #[test]
    fn herm_split_of_skew_hermitian() {
        let a = MatrixTuple::new(vec![linalg::identity(2) * c(0.0, 1.0)]).unwrap();
        let s = a.herm_split(false);
        assert_eq!(fro_norm(s.get(0)), 0.0);
        assert!(fro_norm(&(s.get(1) - linalg::identity(2))) < 1e-15);
    }

    #[test]
    fn herm_split_of_nilpotent_reconstructs() {
        let a = MatrixTuple::new(vec![from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])]).unwrap();
        let s = a.herm_split(false);
        let expected_re = from_real_rows(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let mut expected_im = linalg::zeros(2, 2);
        expected_im[(0, 1)] = c(0.0, -0.5);
        expected_im[(1, 0)] = c(0.0, 0.5);
        assert!(fro_norm(&(s.get(0) - expected_re)) < 1e-15);
        assert!(fro_norm(&(s.get(1) - &expected_im)) < 1e-15);
        let back = s.get(0) + s.get(1) * c(0.0, 1.0);
        assert!(fro_norm(&(back - a.get(0))) < 1e-15);
    }

    #[test]
    fn direct_sum_of_scalars() {
        let a = MatrixTuple::scalar(&[1.0]).unwrap();
        let b = MatrixTuple::scalar(&[-1.0]).unwrap();
        assert_eq!(a.direct_sum(&b).unwrap().get(0), &diag_real(&[1.0, -1.0]));
    }

    #[test]
    fn direct_sum_block_layout() {
        let z = MatrixTuple::scalar(&[0.0, 0.0]).unwrap();
        let s = pauli_pair().direct_sum(&z).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.get(1)[(0, 1)], c(1.0, 0.0));
        assert_eq!(s.get(1)[(2, 2)], c(0.0, 0.0));
    }

    #[test]
    fn direct_sum_rejects_mismatched_d() {
        let a = MatrixTuple::scalar(&[1.0]).unwrap();
        let b = MatrixTuple::scalar(&[1.0, 2.0]).unwrap();
        assert!(matches!(a.direct_sum(&b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn compress_to_identity_is_noop() {
        let a = pauli_pair();
        assert_eq!(a.compress(&Isometry::identity(2)).unwrap(), a);
    }

    #[test]
    fn compress_to_a_unit_vector() {
        let theta = std::f64::consts::PI / 8.0;
        let v = from_real_rows(&[&[theta.cos()], &[theta.sin()]]);
        let x = pauli_pair().compress(&Isometry::new(v, 1e-12).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x.get(0)[(0, 0)] - c(h, 0.0)).norm() < 1e-15);
        assert!((x.get(1)[(0, 0)] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn compress_rejects_wrong_rows() {
        assert!(pauli_pair().compress(&Isometry::identity(3)).is_err());
    }

    #[test]
    fn conjugate_by_permutation() {
        let a = MatrixTuple::new(vec![diag_real(&[1.0, -1.0])]).unwrap();
        let u = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(a.conjugate(&u, 1e-8).unwrap().get(0), &diag_real(&[-1.0, 1.0]));
        assert!(matches!(a.conjugate(&(u * c(2.0, 0.0)), 1e-8), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn compress_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_tuple(&mut rng, 3, 5, false);
            let v = random_isometry(&mut rng, 5, 4);
            let w = random_isometry(&mut rng, 4, 2);
            let lhs = a.compress(&v).unwrap().compress(&w).unwrap();
            let rhs = a.compress(&v.then(&w).unwrap()).unwrap();
            assert!(lhs.max_distance(&rhs) < 1e-12);
        }
    }

    #[test]
    fn conjugation_round_trip_and_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = random_tuple(&mut rng, 2, 4, true);
            let u = random_unitary(&mut rng, 4);
            let b = a.conjugate(&u, 1e-8).unwrap();
            let back = b.conjugate(&u.adjoint(), 1e-8).unwrap();
            assert!(back.max_distance(&a) < 1e-12);
            for (x, y) in a.mats().iter().zip(b.mats()) {
                let (ex, ey) = (linalg::eigvalsh(x), linalg::eigvalsh(y));
                for (p, q) in ex.iter().zip(&ey) {
                    assert!((p - q).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_non_square_coordinates() {
        let err = MatrixTuple::new(vec![linalg::identity(2), linalg::zeros(2, 3)]).unwrap_err();
        assert!(err.to_string().contains("coordinate 1"));
    }

    proptest::proptest! {
        #[test]
        fn herm_split_reconstructs(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tuple(&mut rng, 2, 3, false);
            let s = a.herm_split(false);
            for j in 0..a.d() {
                let back = s.get(2 * j) + s.get(2 * j + 1) * c(0.0, 1.0);
                let err = fro_norm(&(back - a.get(j)));
                proptest::prop_assert!(err <= 1e-14 * fro_norm(a.get(j)).max(1.0));
                proptest::prop_assert!(linalg::is_hermitian(s.get(2 * j), 1e-15));
                proptest::prop_assert!(linalg::is_hermitian(s.get(2 * j + 1), 1e-15));
            }
        }
    }
}
