//! Matrix-range membership via Choi matrices, separating and exposing
//! pencils, and the polytope bodies `Wmin(K)` / `Wmax(K)`.
//!
//! A point `B` (side `m`) lies in the matrix range of `A` (side `n`) when a
//! unital completely positive map sends every coordinate of `A` to the
//! matching coordinate of `B`. The map is represented by its Choi matrix
//! `C` of side `n·m`, indexed `(a, p) ↦ a·m + p` (input ⊗ output), with
//! `Φ(X) = Tr_input[(Xᵀ ⊗ I) C]`.
//!
//! Before any program is built the range is put in a normalized frame: its
//! Hermitian coordinates are translated by their barycenter `tr(H_j)/n`
//! (a point in the relative interior of the first level) and re-expressed in
//! an orthonormal basis of their span. Directions along which the range is
//! flat are kept aside as linear relations the point must also satisfy.
//! Pencils are always reported in the original coordinates.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::matcore::MatrixTuple;
use crate::random::random_unit_vector;
use crate::sdp::{self, Constraint, SdpProblem, SdpStatus};
use crate::Tolerances;

/// Choi matrix of a unital completely positive map `M_n → M_m`.
#[derive(Debug, Clone)]
pub struct ChoiCertificate {
    pub choi: ComplexMatrix,
    /// `(n, m)`: input side, output side.
    pub map_dims: (usize, usize),
}

impl ChoiCertificate {
    /// `Φ(X) = Σ_ab X_ab C[(a,·),(b,·)]`
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (n, m) = self.map_dims;
        let mut out = linalg::zeros(m, m);
        for a in 0..n {
            for b in 0..n {
                let w = x[(a, b)];
                if w.re != 0.0 || w.im != 0.0 {
                    out += self.choi.view((a * m, b * m), (m, m)) * w;
                }
            }
        }
        out
    }

    /// Largest interpolation residual `‖Φ(A_j) − B_j‖_F` including the unit.
    pub fn residual(&self, range: &MatrixTuple, point: &MatrixTuple) -> f64 {
        let (n, m) = self.map_dims;
        let unit = linalg::fro_norm(&(self.apply(&linalg::identity(n)) - linalg::identity(m)));
        range
            .mats()
            .iter()
            .zip(point.mats())
            .map(|(a, b)| linalg::fro_norm(&(self.apply(a) - b)))
            .fold(unit, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::lambda_min(&self.choi)
    }

    /// Choi matrix of `X ↦ U Φ(X) U*`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> ChoiCertificate {
        let (n, _) = self.map_dims;
        let big = linalg::kron(&linalg::identity(n), u);
        ChoiCertificate { choi: &big * &self.choi * big.adjoint(), map_dims: self.map_dims }
    }

    /// Choi matrix of `X ↦ ⊕ Φ_i(X)` for maps sharing the input side.
    pub fn direct_sum(parts: &[ChoiCertificate]) -> ChoiCertificate {
        let n = parts[0].map_dims.0;
        let sizes: Vec<usize> = parts.iter().map(|p| p.map_dims.1).collect();
        let m: usize = sizes.iter().sum();
        let mut choi = linalg::zeros(n * m, n * m);
        for a in 0..n {
            for b in 0..n {
                let mut off = 0;
                for (p, &s) in parts.iter().zip(&sizes) {
                    let blk = p.choi.view((a * s, b * s), (s, s));
                    choi.view_mut((a * m + off, b * m + off), (s, s)).copy_from(&blk);
                    off += s;
                }
            }
        }
        ChoiCertificate { choi, map_dims: (n, m) }
    }
}

/// Affine linear pencil `L(X) = G₀ ⊗ I + Σ_j G_j ⊗ X_j` of level `k`, applied
/// to the Hermitian coordinates of a tuple. A tuple `X` satisfies the pencil
/// when `L(X) ⪯ I`.
///
/// The pencil has either `d` coefficients (Hermitian tuples) or `2d`
/// (real and imaginary parts of each coordinate); [`Pencil::value`] picks the
/// coordinates to match.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    pub level: usize,
    pub constant: ComplexMatrix,
    pub coeffs: Vec<ComplexMatrix>,
}

impl Pencil {
    pub fn new(constant: ComplexMatrix, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        let level = constant.nrows();
        for (j, g) in std::iter::once(&constant).chain(&coeffs).enumerate() {
            if g.nrows() != level || g.ncols() != level {
                return Err(Error::DimensionMismatch(format!("pencil coefficient {j} is not {level}x{level}")));
            }
            if !linalg::is_hermitian(g, 1e-8) {
                return Err(Error::NotHermitian { deviation: linalg::hermitian_deviation(g) });
            }
        }
        Ok(Self { level, constant, coeffs })
    }

    pub fn d(&self) -> usize {
        self.coeffs.len()
    }

    pub fn evaluate(&self, coords: &[ComplexMatrix]) -> ComplexMatrix {
        let n = coords.first().map_or(1, |c| c.nrows());
        let mut out = linalg::kron(&self.constant, &linalg::identity(n));
        for (g, x) in self.coeffs.iter().zip(coords) {
            out += linalg::kron(g, x);
        }
        linalg::hermitian_part(&out)
    }

    /// `λ_max(L(X))`
    pub fn value(&self, t: &MatrixTuple) -> Result<f64> {
        Ok(linalg::lambda_max(&self.evaluate(&coords_for(t, self.d())?)))
    }

    pub fn scaled(&self, s: f64) -> Pencil {
        let f = linalg::c(s, 0.0);
        Pencil { level: self.level, constant: &self.constant * f, coeffs: self.coeffs.iter().map(|g| g * f).collect() }
    }

    /// Embeds the pencil as the leading block of a level-`level` pencil.
    pub fn padded(&self, level: usize) -> Pencil {
        if level <= self.level {
            return self.clone();
        }
        let pad = |g: &ComplexMatrix| linalg::direct_sum(g, &linalg::zeros(level - self.level, level - self.level));
        Pencil { level, constant: pad(&self.constant), coeffs: self.coeffs.iter().map(pad).collect() }
    }
}

/// Hermitian coordinates of `t` matching a pencil with `d` coefficients.
pub fn coords_for(t: &MatrixTuple, d: usize) -> Result<Vec<ComplexMatrix>> {
    if d == 2 * t.d() {
        Ok(t.herm_coords().to_vec())
    } else if d == t.d() {
        Ok(t.mats().iter().map(linalg::hermitian_part).collect())
    } else {
        Err(Error::DimensionMismatch(format!("pencil has {d} coefficients, tuple has d = {}", t.d())))
    }
}

/// Hermitian coordinates shared by several tuples: the tuples themselves if
/// all are Hermitian, otherwise every real/imaginary split.
fn shared_coords(tuples: &[&MatrixTuple], tol: f64) -> Vec<Vec<ComplexMatrix>> {
    let hermitian = tuples.iter().all(|t| t.is_hermitian(tol));
    tuples
        .iter()
        .map(|t| {
            if hermitian {
                t.mats().iter().map(linalg::hermitian_part).collect()
            } else {
                t.herm_coords().to_vec()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    In,
    Out,
    Marginal,
}

#[derive(Debug, Clone)]
pub struct MembershipVerdict {
    pub status: Status,
    /// In: smallest Choi eigenvalue relative to its average eigenvalue;
    /// Out: `λ_max(L(point)) − 1` for the separator; Marginal: best estimate.
    pub margin: f64,
    pub witness: Option<ChoiCertificate>,
    pub separator: Option<Pencil>,
}

impl MembershipVerdict {
    pub fn is_in(&self) -> bool {
        self.status == Status::In
    }

    pub fn is_out(&self) -> bool {
        self.status == Status::Out
    }

    fn marginal(margin: f64) -> Self {
        Self { status: Status::Marginal, margin, witness: None, separator: None }
    }

    /// Re-checks the attached certificate by direct computation:
    /// the Choi witness is PSD, unital and interpolating (residual ≤
    /// `1e-6·scale`); the separator satisfies `L(range) ⪯ I + 1e-6` and
    /// `λ_max(L(point)) ≥ 1 + margin − 1e-6`.
    pub fn validate(&self, point: &MatrixTuple, range: &MatrixTuple) -> Result<()> {
        const TOL: f64 = 1e-6;
        match self.status {
            Status::In => {
                let Some(w) = &self.witness else {
                    return Ok(());
                };
                let scale = range.norm().max(point.norm()).max(1.0);
                let res = w.residual(range, point);
                if res > TOL * scale {
                    return Err(Error::VerifierFailure(format!("Choi interpolation residual {res:.3e}")));
                }
                let lmin = w.min_eigenvalue();
                if lmin < -TOL {
                    return Err(Error::VerifierFailure(format!("Choi matrix eigenvalue {lmin:.3e}")));
                }
            }
            Status::Out => {
                let p = self
                    .separator
                    .as_ref()
                    .ok_or_else(|| Error::VerifierFailure("out verdict without separator".into()))?;
                let inside = p.value(range)?;
                if inside > 1.0 + TOL {
                    return Err(Error::VerifierFailure(format!("separator reaches {inside:.9} on the range")));
                }
                let outside = p.value(point)?;
                if outside < 1.0 + self.margin - TOL || self.margin <= 0.0 {
                    return Err(Error::VerifierFailure(format!(
                        "separator reaches only {outside:.9} on the point (margin {:.3e})",
                        self.margin
                    )));
                }
            }
            Status::Marginal => {}
        }
        Ok(())
    }
}

/// Orthonormal Hermitian basis of `M_m`: `E_pp`, `(E_pq + E_qp)/√2`,
/// `i(E_pq − E_qp)/√2`.
pub fn hermitian_basis(m: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(m * m);
    for p in 0..m {
        let mut e = linalg::zeros(m, m);
        e[(p, p)] = linalg::ONE;
        out.push(e);
    }
    for p in 0..m {
        for q in p + 1..m {
            let mut re = linalg::zeros(m, m);
            re[(p, q)] = linalg::c(s, 0.0);
            re[(q, p)] = linalg::c(s, 0.0);
            out.push(re);
            let mut im = linalg::zeros(m, m);
            im[(p, q)] = linalg::c(0.0, s);
            im[(q, p)] = linalg::c(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Column-stacked real coordinates of a Hermitian matrix, isometric for the
/// real Frobenius inner product.
fn hvec(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        v.push(h[(i, i)].re);
        for j in i + 1..n {
            v.push(s * h[(i, j)].re);
            v.push(s * h[(i, j)].im);
        }
    }
    v
}

/// Normalized coordinates of a range tuple.
#[derive(Debug, Clone)]
pub struct Frame {
    pub n: usize,
    /// Barycenter `p_j = tr(H_j)/n` of the first level.
    pub center: Vec<f64>,
    /// `H''_i = Σ_j transform[(i, j)] (H_j − p_j I)`, orthonormal and traceless.
    pub transform: DMatrix<f64>,
    pub coords: Vec<ComplexMatrix>,
    /// Unit vectors `u` with `Σ_j u_j (H_j − p_j I) ≈ 0`, with the size of
    /// that combination.
    pub relations: Vec<(Vec<f64>, f64)>,
    pub scale: f64,
}

impl Frame {
    pub fn new(coords: &[ComplexMatrix]) -> Self {
        let n = coords[0].nrows();
        let dcount = coords.len();
        let center: Vec<f64> = coords.iter().map(|h| linalg::trace_re(h) / n as f64).collect();
        let shifted: Vec<ComplexMatrix> = coords
            .iter()
            .zip(&center)
            .map(|(h, p)| h - linalg::identity(n) * linalg::c(*p, 0.0))
            .collect();
        let scale = coords.iter().map(linalg::fro_norm).fold(0.0, f64::max).max(1.0);

        let rows = n * n;
        let mut w = DMatrix::<f64>::zeros(rows.max(dcount), dcount);
        for (j, h) in shifted.iter().enumerate() {
            for (r, v) in hvec(h).into_iter().enumerate() {
                w[(r, j)] = v;
            }
        }
        let svd = w.svd(false, true);
        let v_t = svd.v_t.expect("right vectors");
        let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cut = (1e-10 * sigma_max).max(1e-13 * scale);

        let mut kept = Vec::new();
        let mut relations = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > cut {
                kept.push(i);
            } else {
                relations.push((v_t.row(i).iter().copied().collect(), s));
            }
        }
        let mut transform = DMatrix::zeros(kept.len(), dcount);
        let mut frame_coords = Vec::with_capacity(kept.len());
        for (row, &i) in kept.iter().enumerate() {
            let s = svd.singular_values[i];
            for j in 0..dcount {
                transform[(row, j)] = v_t[(i, j)] / s;
            }
            let mut h = linalg::zeros(n, n);
            for (j, sh) in shifted.iter().enumerate() {
                h += sh * linalg::c(transform[(row, j)], 0.0);
            }
            frame_coords.push(linalg::hermitian_part(&h));
        }
        Self { n, center, transform, coords: frame_coords, relations, scale }
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    fn shifted(&self, point: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        let m = point[0].nrows();
        point
            .iter()
            .zip(&self.center)
            .map(|(k, p)| k - linalg::identity(m) * linalg::c(*p, 0.0))
            .collect()
    }

    /// Frame coordinates `K''_i` of a point.
    pub fn transform_point(&self, point: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        let m = point[0].nrows();
        let shifted = self.shifted(point);
        (0..self.rank())
            .map(|i| {
                let mut k = linalg::zeros(m, m);
                for (j, sh) in shifted.iter().enumerate() {
                    k += sh * linalg::c(self.transform[(i, j)], 0.0);
                }
                linalg::hermitian_part(&k)
            })
            .collect()
    }

    /// A relation of the range broken by the point beyond tolerance, as a
    /// level-1 pencil separating them.
    fn broken_relation(&self, point: &[ComplexMatrix], feas_tol: f64) -> Option<(Pencil, f64)> {
        let shifted = self.shifted(point);
        let m = point[0].nrows();
        for (u, size) in &self.relations {
            let mut r = linalg::zeros(m, m);
            for (j, sh) in shifted.iter().enumerate() {
                r += sh * linalg::c(u[j], 0.0);
            }
            let (vals, _) = linalg::eigh(&r);
            let (lo, hi) = (vals[0], vals[m - 1]);
            let (mu, sign) = if hi >= -lo { (hi, 1.0) } else { (-lo, -1.0) };
            if mu > 10.0 * size + feas_tol * self.scale {
                // g_j = c·sign·u_j on X − p, so the range stays near 0 and the point reaches 2.
                let c = 2.0 * sign / mu;
                let coeffs: Vec<ComplexMatrix> = u.iter().map(|uj| linalg::diag_real(&[c * uj])).collect();
                let constant = -u.iter().zip(&self.center).map(|(uj, pj)| c * uj * pj).sum::<f64>();
                let pencil = Pencil { level: 1, constant: linalg::diag_real(&[constant]), coeffs };
                return Some((pencil, 1.0));
            }
        }
        None
    }

    /// Converts a frame pencil `Σ G̃_i ⊗ X''_i` to original coordinates.
    pub fn pencil_to_original(&self, frame_coeffs: &[ComplexMatrix], level: usize) -> Pencil {
        let dcount = self.center.len();
        let mut coeffs = vec![linalg::zeros(level, level); dcount];
        for (i, g) in frame_coeffs.iter().enumerate() {
            for (j, out) in coeffs.iter_mut().enumerate() {
                *out += g * linalg::c(self.transform[(i, j)], 0.0);
            }
        }
        let mut constant = linalg::zeros(level, level);
        for (g, p) in coeffs.iter().zip(&self.center) {
            constant -= g * linalg::c(*p, 0.0);
        }
        Pencil { level, constant: linalg::hermitian_part(&constant), coeffs: coeffs.iter().map(linalg::hermitian_part).collect() }
    }
}

/// The Choi program for `point ∈ W_m(range)` in frame coordinates.
fn choi_problem(frame: &Frame, point_frame: &[ComplexMatrix], m: usize) -> SdpProblem {
    let n = frame.n;
    let basis = hermitian_basis(m);
    let identity_n = linalg::identity(n);
    let identity_m = linalg::identity(m);
    let mut constraints = Vec::with_capacity((frame.rank() + 1) * m * m);
    let inputs = std::iter::once((&identity_n, &identity_m)).chain(frame.coords.iter().zip(point_frame));
    for (h, target) in inputs {
        let ht = h.transpose();
        for s in &basis {
            constraints.push(Constraint { matrix: linalg::kron(&ht, s), rhs: linalg::inner(s, target) });
        }
    }
    SdpProblem::feasibility(n * m, constraints)
}

/// Separating pencil from the Farkas multipliers of the Choi program.
fn separator_from_dual(
    frame: &Frame,
    point_frame: &[ComplexMatrix],
    m: usize,
    multipliers: &[f64],
) -> Option<(Pencil, f64)> {
    let n = frame.n;
    let basis = hermitian_basis(m);
    let per = m * m;
    let ys: Vec<ComplexMatrix> = (0..=frame.rank())
        .map(|c| {
            let mut y = linalg::zeros(m, m);
            for (k, s) in basis.iter().enumerate() {
                y += s * linalg::c(multipliers[c * per + k], 0.0);
            }
            y
        })
        .collect();
    // P = Y₀ᵀ ⊗ I + Σ Y_iᵀ ⊗ H''_i ⪰ 0 up to rounding.
    let mut p = linalg::kron(&ys[0].transpose(), &linalg::identity(n));
    for (y, h) in ys[1..].iter().zip(&frame.coords) {
        p += linalg::kron(&y.transpose(), h);
    }
    let eta = (-linalg::lambda_min(&p)).max(0.0);
    let value: f64 = linalg::trace_re(&ys[0])
        + ys[1..].iter().zip(point_frame).map(|(y, k)| linalg::inner(y, k)).sum::<f64>();
    if value >= 0.0 || eta * m as f64 >= 0.5 * value.abs() {
        return None;
    }
    let delta = value.abs() / (2.0 * m as f64) + eta;
    let g0 = ys[0].transpose() + linalg::identity(m) * linalg::c(delta, 0.0);
    let norm = linalg::inv_sqrt_pd(&g0);
    let frame_coeffs: Vec<ComplexMatrix> = ys[1..]
        .iter()
        .map(|y| linalg::hermitian_part(&(&norm * (-y.transpose()) * &norm)))
        .collect();
    let mut at_point = linalg::zeros(m * m, m * m);
    for (g, k) in frame_coeffs.iter().zip(point_frame) {
        at_point += linalg::kron(g, k);
    }
    let margin = linalg::lambda_max(&at_point) - 1.0;
    if margin <= 0.0 {
        return None;
    }
    Some((frame.pencil_to_original(&frame_coeffs, m), margin))
}

/// Membership of a point given by Hermitian coordinates in a framed range.
fn membership_in_frame(frame: &Frame, point: &[ComplexMatrix], tol: &Tolerances) -> Result<MembershipVerdict> {
    let m = point[0].nrows();
    if let Some((pencil, margin)) = frame.broken_relation(point, tol.feas_tol) {
        return Ok(MembershipVerdict { status: Status::Out, margin, witness: None, separator: Some(pencil.padded(m)) });
    }
    let point_frame = frame.transform_point(point);
    let problem = choi_problem(frame, &point_frame, m);
    let outcome = sdp::solve(&problem, &tol.sdp_options())?;
    Ok(match outcome.status {
        SdpStatus::Feasible => {
            if !tol.boundary_in && outcome.phase_one_value.abs() < tol.feas_tol {
                MembershipVerdict::marginal(outcome.phase_one_value)
            } else {
                let choi = outcome.primal.expect("feasible outcome carries a primal");
                MembershipVerdict {
                    status: Status::In,
                    margin: outcome.margin,
                    witness: Some(ChoiCertificate { choi, map_dims: (frame.n, m) }),
                    separator: None,
                }
            }
        }
        SdpStatus::Infeasible => {
            let cert = outcome.dual_certificate.expect("infeasible outcome carries a certificate");
            match separator_from_dual(frame, &point_frame, m, &cert.multipliers) {
                Some((pencil, margin)) if margin > tol.feas_tol => {
                    MembershipVerdict { status: Status::Out, margin, witness: None, separator: Some(pencil) }
                }
                _ => MembershipVerdict::marginal(-outcome.margin),
            }
        }
        SdpStatus::Marginal => MembershipVerdict::marginal(outcome.phase_one_value),
    })
}

fn check_d(point: &MatrixTuple, range: &MatrixTuple) -> Result<()> {
    if point.d() != range.d() {
        return Err(Error::DimensionMismatch(format!("point has d = {}, range has d = {}", point.d(), range.d())));
    }
    Ok(())
}

/// Decides `point ∈ W_m(range)` where `m = point.n()`.
pub fn membership(point: &MatrixTuple, range: &MatrixTuple, tol: &Tolerances) -> Result<MembershipVerdict> {
    check_d(point, range)?;
    let coords = shared_coords(&[range, point], tol.herm_tol);
    let frame = Frame::new(&coords[0]);
    membership_in_frame(&frame, &coords[1], tol)
}

/// `W(a) ⊆ W(b)`, i.e. `a ∈ W_{a.n}(b)`.
pub fn inclusion(a: &MatrixTuple, b: &MatrixTuple, tol: &Tolerances) -> Result<MembershipVerdict> {
    membership(a, b, tol)
}

/// Membership of `U (⊕ parts) U*` in `W(range)`, one Choi program per part.
/// The witness is assembled from the per-part maps; an Out verdict carries
/// the separator of the first part that fails, padded to the full level.
pub fn membership_of_blocks(
    parts: &[MatrixTuple],
    unitary: Option<&ComplexMatrix>,
    range: &MatrixTuple,
    tol: &Tolerances,
) -> Result<MembershipVerdict> {
    if parts.is_empty() {
        return Err(Error::Empty("no blocks".into()));
    }
    for p in parts {
        check_d(p, range)?;
    }
    let mut all: Vec<&MatrixTuple> = vec![range];
    all.extend(parts.iter());
    let coords = shared_coords(&all, tol.herm_tol);
    let frame = Frame::new(&coords[0]);
    let verdicts: Vec<Result<MembershipVerdict>> =
        coords[1..].par_iter().map(|c| membership_in_frame(&frame, c, tol)).collect();
    let verdicts: Vec<MembershipVerdict> = verdicts.into_iter().collect::<Result<_>>()?;
    let total: usize = parts.iter().map(|p| p.n()).sum();

    if let Some(out) = verdicts.iter().find(|v| v.is_out()) {
        let pencil = out.separator.as_ref().map(|p| p.padded(total));
        return Ok(MembershipVerdict { status: Status::Out, margin: out.margin, witness: None, separator: pencil });
    }
    if let Some(m) = verdicts.iter().find(|v| v.status == Status::Marginal) {
        return Ok(MembershipVerdict::marginal(m.margin));
    }
    let witnesses: Vec<ChoiCertificate> = verdicts.iter().map(|v| v.witness.clone().expect("in verdict")).collect();
    let mut witness = ChoiCertificate::direct_sum(&witnesses);
    if let Some(u) = unitary {
        witness = witness.conjugated(u);
    }
    let margin = verdicts.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    Ok(MembershipVerdict { status: Status::In, margin, witness: Some(witness), separator: None })
}

#[derive(Debug, Clone)]
pub struct Separation {
    pub pencil: Pencil,
    pub margin: f64,
}

/// Pencil `G` of level `point.n()` with `L_G(range) ⪯ I` and
/// `λ_max(L_G(point)) ≥ 1 + margin`.
pub fn separating_pencil(range: &MatrixTuple, point: &MatrixTuple, tol: &Tolerances) -> Result<Separation> {
    let v = membership(point, range, tol)?;
    match (v.status, v.separator) {
        (Status::Out, Some(pencil)) => Ok(Separation { pencil, margin: v.margin }),
        (status, _) => Err(Error::NotSeparable { status: format!("{status:?}").to_lowercase() }),
    }
}

#[derive(Debug, Clone)]
pub struct Exposure {
    pub pencil: Pencil,
    pub gap: f64,
}

/// Pencil touching `summands[index]` at value 1 while every other summand
/// stays at most `1 − gap`.
pub fn exposing_pencil(summands: &[MatrixTuple], index: usize, tol: &Tolerances) -> Result<Exposure> {
    let y = summands
        .get(index)
        .ok_or_else(|| Error::DimensionMismatch(format!("summand index {index} out of {}", summands.len())))?;
    let others: Vec<&MatrixTuple> = summands.iter().enumerate().filter(|(i, _)| *i != index).map(|(_, t)| t).collect();
    if others.is_empty() {
        return Ok(Exposure { pencil: lone_exposing_pencil(y, tol), gap: 1.0 });
    }
    let rest = MatrixTuple::direct_sum_all(others.iter().copied())?;
    let verdict = membership(y, &rest, &tol.closed())?;
    let pencil = match (verdict.status, verdict.separator) {
        (Status::Out, Some(p)) => p,
        (Status::In, _) => return Err(Error::NoGap { best: 1.0 }),
        _ => return Err(Error::NoGap { best: 1.0 - verdict.margin.abs() }),
    };
    exposure_from_separator(&pencil, y, &rest, tol)
}

/// Rescales a separator of `y` from `rest` so that it touches `y`.
pub fn exposure_from_separator(pencil: &Pencil, y: &MatrixTuple, rest: &MatrixTuple, tol: &Tolerances) -> Result<Exposure> {
    let mu = pencil.value(y)?;
    if mu <= 1.0 {
        return Err(Error::NoGap { best: 1.0 });
    }
    let scaled = pencil.scaled(1.0 / mu);
    let best = scaled.value(rest)?;
    let gap = 1.0 - best;
    if gap <= tol.feas_tol {
        return Err(Error::NoGap { best });
    }
    Ok(Exposure { pencil: scaled.padded(y.n()), gap })
}

fn lone_exposing_pencil(y: &MatrixTuple, tol: &Tolerances) -> Pencil {
    let coords = shared_coords(&[y], tol.herm_tol).remove(0);
    let frame = Frame::new(&coords);
    let n = y.n();
    if frame.rank() == 0 {
        // A scalar point: the constant pencil equal to 1 touches it.
        return Pencil {
            level: n,
            constant: linalg::identity(n),
            coeffs: vec![linalg::zeros(n, n); coords.len()],
        };
    }
    let frame_coeffs: Vec<ComplexMatrix> = frame.coords.iter().map(|h| h.transpose()).collect();
    let mut at_y = linalg::zeros(n * n, n * n);
    for (g, h) in frame_coeffs.iter().zip(&frame.coords) {
        at_y += linalg::kron(g, h);
    }
    let top = linalg::lambda_max(&at_y);
    let scaled: Vec<ComplexMatrix> = frame_coeffs.iter().map(|g| g * linalg::c(1.0 / top, 0.0)).collect();
    frame.pencil_to_original(&scaled, n)
}

/// Compact convex polytope given by points (vertices or more).
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeBody {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl PolytopeBody {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).ok_or_else(|| Error::Empty("no vertices".into()))?;
        if dim == 0 {
            return Err(Error::Empty("zero-dimensional points".into()));
        }
        if let Some(bad) = vertices.iter().position(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(format!("vertex {bad} has {} coordinates, expected {dim}", vertices[bad].len())));
        }
        Ok(Self { dim, vertices })
    }

    /// `(diag(v_i[0])_i, …, diag(v_i[d-1])_i)`; its range is `Wmin(K)`.
    pub fn diagonal_tuple(&self) -> MatrixTuple {
        let coords: Vec<Vec<f64>> = (0..self.dim).map(|j| self.vertices.iter().map(|v| v[j]).collect()).collect();
        MatrixTuple::diagonal(&coords).expect("non-empty polytope")
    }
}

/// H-representation `{x : a_i · x ≤ b_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspaces {
    pub dim: usize,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl Halfspaces {
    pub fn new(rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let dim = rows.first().map(|r| r.0.len()).ok_or_else(|| Error::Empty("no halfspaces".into()))?;
        if let Some(bad) = rows.iter().position(|r| r.0.len() != dim) {
            return Err(Error::DimensionMismatch(format!("halfspace {bad} has the wrong length")));
        }
        Ok(Self { dim, rows })
    }

    /// The box `[-r, r]^d`.
    pub fn cube(dim: usize, r: f64) -> Self {
        let mut rows = Vec::new();
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut a = vec![0.0; dim];
                a[j] = s;
                rows.push((a, r));
            }
        }
        Self { dim, rows }
    }
}

fn point_coords(x: &MatrixTuple, dim: usize, tol: &Tolerances) -> Result<Vec<ComplexMatrix>> {
    if x.d() != dim {
        return Err(Error::DimensionMismatch(format!("tuple has d = {}, body has dimension {dim}", x.d())));
    }
    if !x.is_hermitian(tol.herm_tol) {
        return Err(Error::NotHermitian { deviation: x.mats().iter().map(linalg::hermitian_deviation).fold(0.0, f64::max) });
    }
    Ok(x.mats().iter().map(linalg::hermitian_part).collect())
}

/// `X ∈ Wmin(K)`: membership in the range of the vertex-diagonal tuple.
pub fn wmin_membership(x: &MatrixTuple, body: &PolytopeBody, tol: &Tolerances) -> Result<MembershipVerdict> {
    point_coords(x, body.dim, tol)?;
    membership(x, &body.diagonal_tuple(), tol)
}

/// `X ∈ Wmax(K)`: every halfspace holds as `Σ a_ij X_j ⪯ b_i I`. An Out
/// verdict carries the most violated halfspace as a level-1 pencil.
pub fn wmax_membership(x: &MatrixTuple, body: &Halfspaces, tol: &Tolerances) -> Result<MembershipVerdict> {
    let coords = point_coords(x, body.dim, tol)?;
    let n = x.n();
    let mut worst: Option<(usize, f64)> = None;
    for (i, (a, b)) in body.rows.iter().enumerate() {
        let mut m = linalg::zeros(n, n);
        for (aj, xj) in a.iter().zip(&coords) {
            m += xj * linalg::c(*aj, 0.0);
        }
        let excess = linalg::lambda_max(&m) - b;
        if worst.is_none_or(|(_, w)| excess > w) {
            worst = Some((i, excess));
        }
    }
    let (i, excess) = worst.expect("non-empty halfspaces");
    let band = tol.feas_tol * body.rows[i].1.abs().max(1.0);
    if excess > band {
        let (a, b) = &body.rows[i];
        let pencil = Pencil {
            level: 1,
            constant: linalg::diag_real(&[1.0 - b]),
            coeffs: a.iter().map(|aj| linalg::diag_real(&[*aj])).collect(),
        };
        return Ok(MembershipVerdict { status: Status::Out, margin: excess, witness: None, separator: Some(pencil) });
    }
    if !tol.boundary_in && excess.abs() <= band {
        return Ok(MembershipVerdict::marginal(-excess));
    }
    Ok(MembershipVerdict { status: Status::In, margin: -excess, witness: None, separator: None })
}

/// Points `(⟨v, H_j v⟩)_j` of the first level for random unit vectors `v`.
pub fn first_level_samples(t: &MatrixTuple, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = if t.is_hermitian(1e-8) {
        t.mats().iter().map(linalg::hermitian_part).collect()
    } else {
        t.herm_coords().to_vec()
    };
    (0..count)
        .map(|_| {
            let v = random_unit_vector(&mut rng, t.n());
            coords.iter().map(|h| (v.adjoint() * h * &v)[(0, 0)].re).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, from_real_rows};
    use crate::random::{random_isometry, random_tuple, random_unitary};
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pauli() -> MatrixTuple {
        MatrixTuple::new(vec![diag_real(&[1.0, -1.0]), from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])]).unwrap()
    }

    fn simplex() -> MatrixTuple {
        MatrixTuple::diagonal(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    fn square() -> MatrixTuple {
        MatrixTuple::diagonal(&[vec![1.0, -1.0, -1.0, 1.0], vec![1.0, 1.0, -1.0, -1.0]]).unwrap()
    }

    fn checked(point: &MatrixTuple, range: &MatrixTuple) -> MembershipVerdict {
        let v = membership(point, range, &tol()).unwrap();
        v.validate(point, range).unwrap();
        v
    }

    #[test]
    fn choi_ordering_golden() {
        // The identity channel on M_2 has Choi matrix Σ E_ab ⊗ E_ab.
        let mut choi = linalg::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                choi[(a * 2 + a, b * 2 + b)] = linalg::ONE;
            }
        }
        let cert = ChoiCertificate { choi, map_dims: (2, 2) };
        let x = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(cert.apply(&x), x);
        // Transpose map would instead give xᵀ with the swapped layout.
        let mut choi_t = linalg::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                choi_t[(a * 2 + b, b * 2 + a)] = linalg::ONE;
            }
        }
        let cert_t = ChoiCertificate { choi: choi_t, map_dims: (2, 2) };
        assert_eq!(cert_t.apply(&x), x.transpose());
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let b = hermitian_basis(3);
        assert_eq!(b.len(), 9);
        for (i, x) in b.iter().enumerate() {
            assert!(linalg::is_hermitian(x, 1e-15));
            for (j, y) in b.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::inner(x, y) - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn compression_is_in() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_tuple(&mut rng, 2, 3, false);
        let v = random_isometry(&mut rng, 3, 2);
        let b = a.compress(&v).unwrap();
        assert!(checked(&b, &a).is_in());
    }

    #[test]
    fn simplex_barycenter_is_in() {
        let bary = MatrixTuple::scalar(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let v = checked(&bary, &simplex());
        assert!(v.is_in());
        // Any witness is the convex combination with weights 1/3.
        let w = v.witness.unwrap();
        for a in 0..3 {
            assert!((w.choi[(a, a)].re - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pauli_is_out_of_square_wmin() {
        let v = checked(&pauli(), &square());
        assert!(v.is_out());
        assert_eq!(v.separator.as_ref().unwrap().level, 2);
        assert!(v.margin > 1e-3);
    }

    #[test]
    fn inclusion_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_tuple(&mut rng, 2, 2, false);
        let b = random_tuple(&mut rng, 2, 2, false);
        assert!(checked(&a, &a).is_in());
        assert!(checked(&a, &a.direct_sum(&b).unwrap()).is_in());
        assert!(checked(&square(), &pauli()).is_out());
        assert!(checked(&pauli(), &square()).is_out());
    }

    #[test]
    fn scalar_separation() {
        let a = MatrixTuple::scalar(&[0.0]).unwrap();
        let b = MatrixTuple::scalar(&[1.0]).unwrap();
        let sep = separating_pencil(&a, &b, &tol()).unwrap();
        assert!(sep.pencil.value(&a).unwrap() <= 1.0 + 1e-12);
        assert!(sep.pencil.value(&b).unwrap() >= 1.0 + sep.margin - 1e-12);
        assert!(sep.margin > 0.0);
        assert!(matches!(separating_pencil(&b, &b, &tol()), Err(Error::NotSeparable { .. })));
    }

    #[test]
    fn point_outside_simplex_gets_halfplane() {
        let b = MatrixTuple::scalar(&[1.0, 1.0]).unwrap();
        let sep = separating_pencil(&simplex(), &b, &tol()).unwrap();
        let p = &sep.pencil;
        assert_eq!(p.level, 1);
        let (g1, g2) = (p.coeffs[0][(0, 0)].re, p.coeffs[1][(0, 0)].re);
        // The only way to cut (1,1) from the simplex is a functional growing along (1,1).
        assert!(g1 + g2 > 0.0);
        let value = |x: f64, y: f64| p.constant[(0, 0)].re + g1 * x + g2 * y;
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
            assert!(value(x, y) <= 1.0 + 1e-9);
        }
        assert!(value(1.0, 1.0) > 1.0);
    }

    #[test]
    fn flat_range_relation() {
        // Range is the segment {(t, t)}; (1, 0) breaks the relation.
        let seg = MatrixTuple::diagonal(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let frame = Frame::new(seg.mats());
        assert_eq!(frame.rank(), 1);
        assert_eq!(frame.relations.len(), 1);
        let off = MatrixTuple::scalar(&[1.0, 0.0]).unwrap();
        assert!(checked(&off, &seg).is_out());
        let on = MatrixTuple::scalar(&[0.25, 0.25]).unwrap();
        assert!(checked(&on, &seg).is_in());
        let beyond = MatrixTuple::scalar(&[1.5, 1.5]).unwrap();
        assert!(checked(&beyond, &seg).is_out());
    }

    #[test]
    fn scalar_range() {
        let a = MatrixTuple::new(vec![diag_real(&[2.0, 2.0])]).unwrap();
        assert!(checked(&MatrixTuple::scalar(&[2.0]).unwrap(), &a).is_in());
        assert!(checked(&MatrixTuple::scalar(&[2.5]).unwrap(), &a).is_out());
    }

    #[test]
    fn frame_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_tuple(&mut rng, 3, 3, true);
        let frame = Frame::new(a.mats());
        for (i, x) in frame.coords.iter().enumerate() {
            assert!(linalg::trace_re(x).abs() < 1e-12);
            for (j, y) in frame.coords.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::inner(x, y) - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_policy() {
        let edge = MatrixTuple::scalar(&[0.5, 0.5]).unwrap();
        assert!(membership(&edge, &simplex(), &tol()).unwrap().is_in());
        let strict = Tolerances { boundary_in: false, ..tol() };
        assert_eq!(membership(&edge, &simplex(), &strict).unwrap().status, Status::Marginal);
        let inside = MatrixTuple::scalar(&[0.2, 0.2]).unwrap();
        assert!(membership(&inside, &simplex(), &strict).unwrap().is_in());
    }

    #[test]
    fn blocks_match_direct_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let range = random_tuple(&mut rng, 2, 3, false);
        let p1 = range.compress(&random_isometry(&mut rng, 3, 2)).unwrap();
        let p2 = range.compress(&random_isometry(&mut rng, 3, 1)).unwrap();
        let u = random_unitary(&mut rng, 3);
        let sum = p1.direct_sum(&p2).unwrap();
        let point = sum.conjugate(&u.adjoint(), 1e-8).unwrap();
        let v = membership_of_blocks(&[p1.clone(), p2.clone()], Some(&u), &range, &tol()).unwrap();
        assert!(v.is_in());
        v.validate(&point, &range).unwrap();

        let far = MatrixTuple::scalar(&[10.0, 0.0, 0.0, 0.0]).unwrap();
        let far = MatrixTuple::new(vec![far.get(0).clone(), far.get(1).clone()]).unwrap();
        let v = membership_of_blocks(&[p1.clone(), far.clone()], None, &range, &tol()).unwrap();
        assert!(v.is_out());
        v.validate(&p1.direct_sum(&far).unwrap(), &range).unwrap();
    }

    fn wmax_family(x: f64) -> MatrixTuple {
        let s = (1.0 - x * x).sqrt();
        MatrixTuple::new(vec![diag_real(&[1.0, -1.0]), from_real_rows(&[&[x, s], &[s, -x]])]).unwrap()
    }

    #[test]
    fn wmax_corner_gap_closes() {
        let corner = MatrixTuple::scalar(&[1.0, 1.0]).unwrap();
        let mut last = f64::INFINITY;
        for x in [0.9, 0.99, 0.999] {
            let e = exposing_pencil(&[corner.clone(), wmax_family(x)], 0, &tol()).unwrap();
            assert!(e.gap > 0.0 && e.gap < last, "x = {x}: gap {}", e.gap);
            last = e.gap;
        }
        assert!(last < 1e-3);
        let near = exposing_pencil(&[corner, wmax_family(1.0 - 1e-12)], 0, &tol());
        assert!(matches!(near, Err(Error::NoGap { .. })), "{near:?}");
    }

    #[test]
    fn simplex_vertex_exposed() {
        let pts: Vec<MatrixTuple> =
            [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]].iter().map(|p| MatrixTuple::scalar(p).unwrap()).collect();
        let e = exposing_pencil(&pts, 0, &tol()).unwrap();
        assert!((e.pencil.value(&pts[0]).unwrap() - 1.0).abs() < 1e-9);
        assert!(e.gap > 0.1);
        let e0 = exposing_pencil(&pts, 1, &tol()).unwrap();
        // Exposing the origin needs a functional decreasing along x + y.
        let p = &e0.pencil;
        assert!(p.coeffs[0][(0, 0)].re < 0.0 && p.coeffs[1][(0, 0)].re < 0.0);
        assert!(e0.gap > 1e-6);
    }

    #[test]
    fn redundant_summand_has_no_gap() {
        let pts: Vec<MatrixTuple> = [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.3, 0.3]]
            .iter()
            .map(|p| MatrixTuple::scalar(p).unwrap())
            .collect();
        assert!(matches!(exposing_pencil(&pts, 3, &tol()), Err(Error::NoGap { .. })));
    }

    #[test]
    fn lone_summand_exposed() {
        let e = exposing_pencil(&[pauli()], 0, &tol()).unwrap();
        assert!((e.pencil.value(&pauli()).unwrap() - 1.0).abs() < 1e-9);
        let s = MatrixTuple::scalar(&[0.3, 0.4]).unwrap();
        let e = exposing_pencil(std::slice::from_ref(&s), 0, &tol()).unwrap();
        assert!((e.pencil.value(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wmin_examples() {
        let body = PolytopeBody::new(vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]]).unwrap();
        let commuting = MatrixTuple::new(vec![diag_real(&[0.5, -0.2]), diag_real(&[0.1, 0.9])]).unwrap();
        assert!(wmin_membership(&commuting, &body, &tol()).unwrap().is_in());
        assert!(wmin_membership(&pauli(), &body, &tol()).unwrap().is_out());
        let half = MatrixTuple::new(pauli().mats().iter().map(|m| m * linalg::c(0.5, 0.0)).collect()).unwrap();
        let v = wmin_membership(&half, &body, &tol()).unwrap();
        assert!(v.is_in());
        v.validate(&half, &body.diagonal_tuple()).unwrap();
    }

    #[test]
    fn wmax_examples() {
        let cube = Halfspaces::cube(2, 1.0);
        assert!(wmax_membership(&pauli(), &cube, &tol()).unwrap().is_in());
        let far = MatrixTuple::scalar(&[2.0, 0.0]).unwrap();
        let v = wmax_membership(&far, &cube, &tol()).unwrap();
        assert!(v.is_out());
        let p = v.separator.unwrap();
        assert_eq!(p.coeffs[0][(0, 0)].re, 1.0);
        assert_eq!(p.coeffs[1][(0, 0)].re, 0.0);
        assert!((p.value(&far).unwrap() - 2.0).abs() < 1e-12);
        let strict = Tolerances { boundary_in: false, ..tol() };
        assert_eq!(wmax_membership(&pauli(), &cube, &strict).unwrap().status, Status::Marginal);
    }

    #[test]
    fn wmax_random_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let cube = Halfspaces::cube(2, 1.0);
        for _ in 0..100 {
            let n = rand::Rng::random_range(&mut rng, 1..=4);
            let coords: Vec<Vec<f64>> =
                (0..2).map(|_| (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect()).collect();
            let x = MatrixTuple::diagonal(&coords).unwrap();
            assert!(wmax_membership(&x, &cube, &tol()).unwrap().is_in());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = MatrixTuple::scalar(&[1.0]).unwrap();
        assert!(matches!(membership(&a, &pauli(), &tol()), Err(Error::DimensionMismatch(_))));
        assert!(PolytopeBody::new(vec![]).is_err());
        assert!(Halfspaces::new(vec![]).is_err());
    }

    #[test]
    fn level_one_samples_lie_in_numerical_range() {
        let s = first_level_samples(&pauli(), 50, 4);
        assert!(s.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn unitary_invariance(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tuple(&mut rng, 2, 3, true);
            let b = random_tuple(&mut rng, 2, 2, true);
            let b = MatrixTuple::new(b.mats().iter().map(|m| m * linalg::c(0.6, 0.0)).collect()).unwrap();
            let v1 = membership(&b, &a, &tol()).unwrap();
            let ua = random_unitary(&mut rng, 3);
            let ub = random_unitary(&mut rng, 2);
            let a2 = a.conjugate(&ua, 1e-8).unwrap();
            let b2 = b.conjugate(&ub, 1e-8).unwrap();
            let v2 = membership(&b2, &a2, &tol()).unwrap();
            v1.validate(&b, &a).unwrap();
            v2.validate(&b2, &a2).unwrap();
            if v1.status != Status::Marginal && v2.status != Status::Marginal {
                prop_assert_eq!(v1.status, v2.status);
            }
        }

        #[test]
        fn monotone_under_compression(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tuple(&mut rng, 2, 3, false);
            let b = a.compress(&random_isometry(&mut rng, 3, 2)).unwrap();
            prop_assert!(checked(&b, &a).is_in());
            let v = random_isometry(&mut rng, 2, 1);
            let c = b.compress(&v).unwrap();
            prop_assert!(checked(&c, &a).is_in());
        }

        #[test]
        fn direct_sum_range_contains_summand(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tuple(&mut rng, 2, 2, false);
            let b = random_tuple(&mut rng, 2, 2, false);
            prop_assert!(checked(&a, &a.direct_sum(&b).unwrap()).is_in());
        }
    }
}
