//! Commutants, irreducible block decompositions and unitary equivalence.

use std::cmp::Ordering;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ComplexMatrix};
use crate::matcore::{Isometry, MatrixTuple};
use crate::Tolerances;

/// Residuals above `equiv_tol` but below this are reported as marginal
/// instead of being silently treated as inequivalent.
pub const MARGINAL_EQUIV: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct Block {
    pub tuple: MatrixTuple,
    pub multiplicity: usize,
    /// Set when this block is within `MARGINAL_EQUIV` of another block
    /// without passing the equivalence test.
    pub marginal: bool,
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub base: MatrixTuple,
    /// Columns are grouped block by block, copies of a block adjacent.
    pub unitary: ComplexMatrix,
    pub blocks: Vec<Block>,
    pub block_order: Vec<Vec<f64>>,
}

impl BlockDecomposition {
    /// `⊕ blockᵢ^{(multᵢ)}` in the order of the columns of `unitary`.
    pub fn reassemble(&self) -> MatrixTuple {
        let parts: Vec<&MatrixTuple> = self
            .blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(&b.tuple, b.multiplicity))
            .collect();
        MatrixTuple::direct_sum_all(parts).expect("blocks share d")
    }

    /// Largest coordinate-wise `‖U* A_j U − ⊕ blocks‖_F`.
    pub fn residual(&self) -> f64 {
        self.base.conjugate_unchecked(&self.unitary).max_distance(&self.reassemble())
    }

    /// Distinct blocks, one copy each.
    pub fn distinct(&self) -> Vec<MatrixTuple> {
        self.blocks.iter().map(|b| b.tuple.clone()).collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.blocks.iter().map(|b| b.multiplicity).sum()
    }
}

fn coordinate_scale(t: &MatrixTuple) -> f64 {
    t.herm_coords().iter().map(linalg::fro_norm).fold(0.0, f64::max).max(1.0)
}

/// Stacked `(Hᵀ ⊗ I − I ⊗ K)` over the Hermitian coordinates; its null space is
/// `{X : X H_j = K_j X}` in column-major vectorization.
fn intertwiner_system(h: &[ComplexMatrix], k: &[ComplexMatrix]) -> ComplexMatrix {
    let n_h = h[0].nrows();
    let n_k = k[0].nrows();
    let cols = n_h * n_k;
    let mut sys = linalg::zeros(h.len() * cols, cols);
    let id_h = linalg::identity(n_h);
    let id_k = linalg::identity(n_k);
    for (j, (hj, kj)) in h.iter().zip(k).enumerate() {
        let block = linalg::kron(&hj.transpose(), &id_k) - linalg::kron(&id_h, kj);
        sys.view_mut((j * cols, 0), (cols, cols)).copy_from(&block);
    }
    sys
}

/// Orthonormal (Frobenius) basis of the commutant of the `*`-algebra
/// generated by the tuple. Always contains a multiple of the identity.
pub fn commutant_basis(a: &MatrixTuple, tol: f64) -> Vec<ComplexMatrix> {
    let n = a.n();
    let coords = a.herm_coords();
    let sys = intertwiner_system(coords, coords);
    let (basis, _) = linalg::null_space(&sys, tol * coordinate_scale(a));
    (0..basis.ncols())
        .map(|k| linalg::unvec(basis.column(k).as_slice(), n, n))
        .collect()
}

pub fn is_irreducible(a: &MatrixTuple, tol: f64) -> bool {
    commutant_basis(a, tol).len() == 1
}

/// Ascending eigenvalue clusters: consecutive values closer than `gap` share
/// a cluster. Returns index ranges.
fn clusters(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..values.len());
    out
}

fn split_leaves(
    a: &MatrixTuple,
    basis: ComplexMatrix,
    depth: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
    leaves: &mut Vec<ComplexMatrix>,
) -> Result<()> {
    if depth > a.n() {
        return Err(Error::DegenerateSpectrum { depth });
    }
    let iso = Isometry::new(basis.clone(), 1e-6).map_err(|_| Error::DegenerateSpectrum { depth })?;
    let sub = a.compress(&iso)?;
    let comm = commutant_basis(&sub, tol);
    if comm.len() <= 1 {
        leaves.push(basis);
        return Ok(());
    }
    let m = sub.n();
    for _attempt in 0..4 {
        let mut elem = linalg::zeros(m, m);
        for b in &comm {
            let w: f64 = rng.random_range(-1.0..1.0);
            elem += b * linalg::c(w, 0.0);
        }
        let mut h = linalg::hermitian_part(&elem);
        let shift = linalg::trace_re(&h) / m as f64;
        h -= linalg::identity(m) * linalg::c(shift, 0.0);
        let norm = linalg::fro_norm(&h);
        if norm == 0.0 {
            continue;
        }
        let (vals, vecs) = linalg::eigh(&h);
        let groups = clusters(&vals, tol * norm);
        if groups.len() < 2 {
            continue;
        }
        for g in groups {
            let cols = vecs.columns(g.start, g.len()).into_owned();
            split_leaves(a, &basis * cols, depth + 1, tol, rng, leaves)?;
        }
        return Ok(());
    }
    Err(Error::DegenerateSpectrum { depth })
}

/// Trace moments `tr H_j` and `tr H_j H_k` (`j ≤ k`), unitarily invariant.
pub fn canonical_key(t: &MatrixTuple) -> Vec<f64> {
    let h = t.herm_coords();
    let mut key = vec![t.n() as f64];
    key.extend(h.iter().map(linalg::trace_re));
    for j in 0..h.len() {
        for k in j..h.len() {
            key.push(linalg::inner(&h[j], &h[k]));
        }
    }
    key
}

pub fn compare_keys(a: &[f64], b: &[f64], tol: f64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > tol * x.abs().max(y.abs()).max(1.0) {
            return x.total_cmp(y);
        }
    }
    a.len().cmp(&b.len())
}

/// Intertwining unitary between two tuples together with its residual.
/// `None` when the sizes differ or the intertwiner system has no usable
/// solution.
pub fn best_intertwiner(a: &MatrixTuple, b: &MatrixTuple) -> Option<(ComplexMatrix, f64)> {
    if a.n() != b.n() || a.d() != b.d() {
        return None;
    }
    let n = a.n();
    let sys = intertwiner_system(a.herm_coords(), b.herm_coords());
    // Smallest right singular vector.
    let (basis, _) = linalg::null_space(&sys, f64::INFINITY);
    let last = basis.ncols().checked_sub(1)?;
    let x = linalg::unvec(basis.column(last).as_slice(), n, n);
    // X A = B X with X = U*.
    let u = linalg::fix_phase(&linalg::polar_unitary(&x.adjoint()));
    let residual = a.conjugate_unchecked(&u).max_distance(b);
    Some((u, residual))
}

/// `U` with `U* A_j U = B_j` for all `j`, if the irreducible tuples are
/// unitarily equivalent.
pub fn unitary_equivalent(a: &MatrixTuple, b: &MatrixTuple, tol: &Tolerances) -> Result<Option<ComplexMatrix>> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch(format!("d = {} versus d = {}", a.d(), b.d())));
    }
    for t in [a, b] {
        let dim = commutant_basis(t, tol.decomp_tol).len();
        if dim > 1 {
            return Err(Error::NonIrreducibleInput { commutant_dim: dim });
        }
    }
    Ok(match best_intertwiner(a, b) {
        Some((u, res)) if res <= tol.equiv_tol * coordinate_scale(a) => Some(u),
        _ => None,
    })
}

/// First representative of each unitary equivalence class.
pub fn dedup(blocks: &[MatrixTuple], tol: &Tolerances) -> Result<Vec<MatrixTuple>> {
    let mut kept: Vec<MatrixTuple> = Vec::new();
    for b in blocks {
        let mut duplicate = false;
        for k in &kept {
            if k.d() == b.d() && unitary_equivalent(k, b, tol)?.is_some() {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            kept.push(b.clone());
        }
    }
    Ok(kept)
}

struct Group {
    rep: MatrixTuple,
    bases: Vec<ComplexMatrix>,
    key: Vec<f64>,
    marginal: bool,
}

/// Splits the tuple into irreducible blocks with multiplicities.
/// Deterministic for a fixed seed.
pub fn irreducible_decomposition(a: &MatrixTuple, seed: u64, tol: &Tolerances) -> Result<BlockDecomposition> {
    let n = a.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaves = Vec::new();
    split_leaves(a, linalg::identity(n), 0, tol.decomp_tol, &mut rng, &mut leaves)?;

    let scale = coordinate_scale(a);
    let mut groups: Vec<Group> = Vec::new();
    for basis in leaves {
        let iso = Isometry::new(basis.clone(), 1e-6)?;
        let tuple = a.compress(&iso)?;
        let mut placed = false;
        let mut near = false;
        for g in groups.iter_mut() {
            if let Some((u, res)) = best_intertwiner(&g.rep, &tuple) {
                if res <= tol.equiv_tol * scale {
                    // U* rep U = tuple, so basis·U* compresses A onto rep.
                    g.bases.push(&basis * u.adjoint());
                    placed = true;
                    break;
                } else if res <= MARGINAL_EQUIV * scale {
                    g.marginal = true;
                    near = true;
                }
            }
        }
        if !placed {
            let key = canonical_key(&tuple);
            groups.push(Group { rep: tuple, bases: vec![basis], key, marginal: near });
        }
    }
    groups.sort_by(|x, y| compare_keys(&x.key, &y.key, 1e-9));

    let mut unitary = linalg::zeros(n, n);
    let mut col = 0;
    for g in &groups {
        for b in &g.bases {
            unitary.view_mut((0, col), b.shape()).copy_from(b);
            col += b.ncols();
        }
    }
    let blocks = groups
        .iter()
        .map(|g| Block { tuple: g.rep.clone(), multiplicity: g.bases.len(), marginal: g.marginal })
        .collect();
    let block_order = groups.into_iter().map(|g| g.key).collect();
    Ok(BlockDecomposition { base: a.clone(), unitary, blocks, block_order })
}

/// Unitary that carries `⊕ parts` in the given order back onto `A` through
/// `decomposition.unitary`, for callers that reorder blocks.
pub fn permutation_of_blocks(sizes: &[usize], order: &[usize]) -> ComplexMatrix {
    let n: usize = sizes.iter().sum();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for s in sizes {
        offsets.push(acc);
        acc += s;
    }
    let mut p = linalg::zeros(n, n);
    let mut dst = 0;
    for &src in order {
        for r in 0..sizes[src] {
            p[(offsets[src] + r, dst + r)] = C64::new(1.0, 0.0);
        }
        dst += sizes[src];
    }
    p
}

/// Singular values of the commutant system, for diagnostics.
pub fn commutant_spectrum(a: &MatrixTuple) -> DVector<f64> {
    let coords = a.herm_coords();
    let (_, sv) = linalg::null_space(&intertwiner_system(coords, coords), 0.0);
    DVector::from_vec(sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, from_real_rows};
    use crate::random::{random_tuple, random_unitary};
    use proptest::prelude::*;

    fn pauli() -> MatrixTuple {
        MatrixTuple::new(vec![diag_real(&[1.0, -1.0]), from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])]).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn commutant_dimensions() {
        let a = MatrixTuple::new(vec![diag_real(&[1.0, 2.0])]).unwrap();
        assert_eq!(commutant_basis(&a, 1e-8).len(), 2);
        assert_eq!(commutant_basis(&pauli(), 1e-8).len(), 1);
        let xx = pauli().direct_sum(&pauli()).unwrap();
        assert_eq!(commutant_basis(&xx, 1e-8).len(), 4);
    }

    #[test]
    fn commutant_basis_is_orthonormal_and_commutes() {
        let xx = pauli().direct_sum(&pauli()).unwrap();
        let basis = commutant_basis(&xx, 1e-8);
        for (i, b) in basis.iter().enumerate() {
            for h in xx.mats() {
                assert!(linalg::fro_norm(&(b * h - h * b)) < 1e-10);
            }
            for (j, c) in basis.iter().enumerate() {
                let g = (b.adjoint() * c).trace();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - linalg::c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pauli_is_one_block() {
        let dec = irreducible_decomposition(&pauli(), 1, &tol()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!(dec.blocks[0].multiplicity, 1);
        assert!(dec.residual() < 1e-10);
    }

    #[test]
    fn simplex_splits_into_vertices() {
        let simplex = MatrixTuple::diagonal(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let dec = irreducible_decomposition(&simplex, 3, &tol()).unwrap();
        assert_eq!(dec.blocks.len(), 3);
        let mut points: Vec<(f64, f64)> = dec
            .blocks
            .iter()
            .map(|b| {
                assert_eq!(b.multiplicity, 1);
                (b.tuple.get(0)[(0, 0)].re, b.tuple.get(1)[(0, 0)].re)
            })
            .collect();
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)];
        for (p, e) in points.iter().zip(expect) {
            assert!((p.0 - e.0).abs() < 1e-12 && (p.1 - e.1).abs() < 1e-12);
        }
        // Canonical order: smallest trace moments first.
        assert!(dec.block_order.windows(2).all(|w| compare_keys(&w[0], &w[1], 1e-9) != Ordering::Greater));
    }

    #[test]
    fn doubled_pauli_has_multiplicity_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xx = pauli().direct_sum(&pauli()).unwrap();
        let u = random_unitary(&mut rng, 4);
        let mixed = xx.conjugate(&u, 1e-8).unwrap();
        let dec = irreducible_decomposition(&mixed, 5, &tol()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!(dec.blocks[0].multiplicity, 2);
        assert!(dec.residual() < 1e-8 * mixed.norm());
        assert!(!dec.blocks[0].marginal);
    }

    #[test]
    fn equivalence_examples() {
        let a = pauli();
        let u = unitary_equivalent(&a, &a, &tol()).unwrap().unwrap();
        assert!(a.conjugate_unchecked(&u).max_distance(&a) < 1e-10);

        let b = MatrixTuple::new(vec![diag_real(&[1.0, -1.0]), from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]])]).unwrap();
        let u = unitary_equivalent(&a, &b, &tol()).unwrap().unwrap();
        assert!(a.conjugate_unchecked(&u).max_distance(&b) < 1e-10);
        // Up to phase the intertwiner is diag(1, -1).
        assert!(u[(0, 1)].norm() < 1e-10 && (u[(0, 0)] + u[(1, 1)]).norm() < 1e-10);

        let one = MatrixTuple::scalar(&[1.0]).unwrap();
        let zero = MatrixTuple::scalar(&[0.0]).unwrap();
        assert!(unitary_equivalent(&one, &zero, &tol()).unwrap().is_none());
    }

    #[test]
    fn equivalence_rejects_reducible() {
        let xx = pauli().direct_sum(&pauli()).unwrap();
        assert!(matches!(
            unitary_equivalent(&xx, &xx, &tol()),
            Err(Error::NonIrreducibleInput { commutant_dim: 4 })
        ));
    }

    #[test]
    fn dedup_examples() {
        let x = pauli();
        assert_eq!(dedup(&[x.clone(), x.clone()], &tol()).unwrap().len(), 1);
        let p = |a: f64, b: f64| MatrixTuple::scalar(&[a, b]).unwrap();
        let out = dedup(&[p(1.0, 0.0), p(0.0, 1.0), p(1.0, 0.0)], &tol()).unwrap();
        assert_eq!(out, vec![p(1.0, 0.0), p(0.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(&mut rng, 2);
        assert_eq!(dedup(&[x.clone(), x.conjugate(&u, 1e-8).unwrap()], &tol()).unwrap().len(), 1);
    }

    #[test]
    fn decomposition_is_idempotent_on_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_tuple(&mut rng, 2, 2, false);
        let b = random_tuple(&mut rng, 2, 3, false);
        let t = a.direct_sum(&b).unwrap().direct_sum(&a).unwrap();
        let u = random_unitary(&mut rng, t.n());
        let t = t.conjugate(&u, 1e-8).unwrap();
        let dec = irreducible_decomposition(&t, 0, &tol()).unwrap();
        assert_eq!(dec.total_multiplicity(), 3);
        let sizes: usize = dec.blocks.iter().map(|b| b.tuple.n() * b.multiplicity).sum();
        assert_eq!(sizes, t.n());
        for b in &dec.blocks {
            let again = irreducible_decomposition(&b.tuple, 7, &tol()).unwrap();
            assert_eq!(again.blocks.len(), 1);
            assert_eq!(again.blocks[0].multiplicity, 1);
        }
    }

    #[test]
    fn decomposition_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_tuple(&mut rng, 2, 2, true);
        let t = a.direct_sum(&random_tuple(&mut rng, 2, 2, true)).unwrap();
        let u = random_unitary(&mut rng, 4);
        let t = t.conjugate(&u, 1e-8).unwrap();
        let d1 = irreducible_decomposition(&t, 42, &tol()).unwrap();
        let d2 = irreducible_decomposition(&t, 42, &tol()).unwrap();
        assert_eq!(d1.unitary, d2.unitary);
    }

    #[test]
    fn block_permutation_reorders() {
        let p = permutation_of_blocks(&[1, 2], &[1, 0]);
        let t = MatrixTuple::new(vec![diag_real(&[1.0, 2.0, 3.0])]).unwrap();
        let r = t.conjugate(&p, 1e-8).unwrap();
        assert!(linalg::fro_norm(&(r.get(0) - diag_real(&[2.0, 3.0, 1.0]))) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reassembly_and_symmetry(seed in 0u64..10_000, n1 in 1usize..=3, n2 in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tuple(&mut rng, 2, n1, false);
            let b = random_tuple(&mut rng, 2, n2, false);
            let t = a.direct_sum(&b).unwrap();
            let u = random_unitary(&mut rng, t.n());
            let t = t.conjugate(&u, 1e-8).unwrap();
            let dec = irreducible_decomposition(&t, seed, &tol()).unwrap();
            prop_assert!(dec.residual() <= 1e-8 * t.norm());
            let total: usize = dec.blocks.iter().map(|b| b.tuple.n() * b.multiplicity).sum();
            prop_assert_eq!(total, t.n());
            prop_assert!(linalg::unitary_deviation(&dec.unitary) < 1e-8);

            let w = random_unitary(&mut rng, n1);
            let a2 = a.conjugate(&w, 1e-8).unwrap();
            let fwd = unitary_equivalent(&a, &a2, &tol()).unwrap();
            let back = unitary_equivalent(&a2, &a, &tol()).unwrap();
            prop_assert_eq!(fwd.is_some(), back.is_some());
            if let Some(u) = fwd {
                prop_assert!(linalg::unitary_deviation(&u) < 1e-8);
            }
        }

        #[test]
        fn dedup_is_permutation_invariant(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tuple(&mut rng, 2, 2, false);
            let b = random_tuple(&mut rng, 2, 2, false);
            let a2 = a.conjugate(&random_unitary(&mut rng, 2), 1e-8).unwrap();
            let list = vec![a.clone(), b.clone(), a2.clone()];
            let rev: Vec<MatrixTuple> = list.iter().rev().cloned().collect();
            let x = dedup(&list, &tol()).unwrap();
            let y = dedup(&rev, &tol()).unwrap();
            prop_assert_eq!(x.len(), 2);
            prop_assert_eq!(y.len(), 2);
            for p in &x {
                prop_assert!(y.iter().any(|q| unitary_equivalent(p, q, &tol()).unwrap().is_some()));
            }
        }
    }
}
