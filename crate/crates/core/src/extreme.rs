//! Minimal presentations, crucial summands and unitary recovery.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{
    self, exposing_pencil, exposure_from_separator, membership, membership_of_blocks, ChoiCertificate,
    MembershipVerdict, Pencil, PolytopeBody, Status,
};
use crate::decomp::{self, irreducible_decomposition, BlockDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::matcore::MatrixTuple;
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummandStatus {
    Crucial,
    RedundantDuplicate,
    RedundantAbsorbed,
}

#[derive(Debug, Clone)]
pub enum Certificate {
    /// Separates the summand from the range of the other summands.
    Separator { pencil: Pencil, margin: f64 },
    /// Realizes the summand as a point of the range of the others.
    Witness(ChoiCertificate),
    /// `U* rep U = summand` for the earlier summand `of`.
    Duplicate { of: usize, unitary: ComplexMatrix },
    /// Nothing to compare against (a single summand).
    Alone,
}

#[derive(Debug, Clone)]
pub enum Classification {
    Crucial(Certificate),
    Redundant(Certificate),
}

impl Classification {
    pub fn is_crucial(&self) -> bool {
        matches!(self, Classification::Crucial(_))
    }
}

/// Crucial iff `summands[index] ∉ W(⊕_{j≠index} summands[j])`.
pub fn classify_crucial(index: usize, summands: &[MatrixTuple], tol: &Tolerances) -> Result<Classification> {
    let y = summands
        .get(index)
        .ok_or_else(|| Error::DimensionMismatch(format!("summand index {index} out of {}", summands.len())))?;
    if summands.len() == 1 {
        return Ok(Classification::Crucial(Certificate::Alone));
    }
    let others = summands.iter().enumerate().filter(|(i, _)| *i != index).map(|(_, t)| t);
    let rest = MatrixTuple::direct_sum_all(others)?;
    let verdict = membership(y, &rest, tol)?;
    classification_from(verdict, index)
}

fn classification_from(verdict: MembershipVerdict, index: usize) -> Result<Classification> {
    match verdict.status {
        Status::Out => Ok(Classification::Crucial(Certificate::Separator {
            pencil: verdict.separator.expect("out verdict carries a separator"),
            margin: verdict.margin,
        })),
        Status::In => Ok(Classification::Redundant(Certificate::Witness(
            verdict.witness.expect("in verdict carries a witness"),
        ))),
        Status::Marginal => Err(Error::Indeterminate(format!(
            "summand {index} lies within tolerance of the range of the others (margin {:.3e})",
            verdict.margin
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct SummandReport {
    pub tuple: MatrixTuple,
    pub status: SummandStatus,
    pub exposing_gap: Option<f64>,
    pub exposing_pencil: Option<Pencil>,
    pub certificate: Certificate,
}

#[derive(Debug, Clone)]
pub struct MinimalReport {
    pub input: MatrixTuple,
    pub minimal: MatrixTuple,
    pub summands: Vec<SummandReport>,
    /// `W(minimal) = W(input)` confirmed by both inclusion programs.
    pub verified: bool,
    /// Certificate of `W(input) ⊆ W(minimal)`.
    pub forward: MembershipVerdict,
    /// Certificate of `W(minimal) ⊆ W(input)`.
    pub backward: MembershipVerdict,
    pub decomposition: BlockDecomposition,
    /// Some pair of blocks was close to equivalent without passing the test.
    pub marginal_blocks: bool,
}

impl MinimalReport {
    pub fn crucial(&self) -> impl Iterator<Item = &SummandReport> {
        self.summands.iter().filter(|s| s.status == SummandStatus::Crucial)
    }

    pub fn count(&self, status: SummandStatus) -> usize {
        self.summands.iter().filter(|s| s.status == status).count()
    }

    pub fn is_fully_compressed(&self) -> bool {
        self.summands.iter().all(|s| s.status == SummandStatus::Crucial)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "input: d = {}, n = {}", self.input.d(), self.input.n());
        let _ = writeln!(out, "minimal: n = {} ({} crucial summands)", self.minimal.n(), self.count(SummandStatus::Crucial));
        let _ = writeln!(out, "decomposition residual: {:.3e}", self.decomposition.residual());
        for (i, s) in self.summands.iter().enumerate() {
            let status = match s.status {
                SummandStatus::Crucial => "crucial",
                SummandStatus::RedundantDuplicate => "redundant (duplicate)",
                SummandStatus::RedundantAbsorbed => "redundant (absorbed)",
            };
            let gap = s.exposing_gap.map_or_else(|| "-".to_string(), |g| format!("{g:.6e}"));
            let _ = writeln!(out, "  [{i}] size {} {status:<22} gap {gap}", s.tuple.n());
            if s.tuple.n() == 1 {
                let pt: Vec<String> = s.tuple.mats().iter().map(|m| format!("{:.6}", m[(0, 0)].re)).collect();
                let _ = writeln!(out, "       point ({})", pt.join(", "));
            }
        }
        let _ = writeln!(out, "verified: {}", self.verified);
        if self.marginal_blocks {
            let _ = writeln!(out, "warning: some blocks are nearly but not numerically equivalent");
        }
        out
    }
}

/// Decomposes, removes duplicates and absorbed summands to a fixed point,
/// then checks that the result has the same matrix range as the input.
pub fn minimal_presentation(t: &MatrixTuple, seed: u64, tol: &Tolerances) -> Result<MinimalReport> {
    let dec = irreducible_decomposition(t, seed, tol)?;
    let distinct = dec.distinct();

    let mut reports: Vec<Option<SummandReport>> = vec![None; distinct.len()];
    let mut duplicates = Vec::new();
    for (i, b) in dec.blocks.iter().enumerate() {
        for _ in 1..b.multiplicity {
            duplicates.push(SummandReport {
                tuple: b.tuple.clone(),
                status: SummandStatus::RedundantDuplicate,
                exposing_gap: None,
                exposing_pencil: None,
                certificate: Certificate::Duplicate { of: i, unitary: linalg::identity(b.tuple.n()) },
            });
        }
    }

    let mut active: Vec<usize> = (0..distinct.len()).collect();
    let mut last: Vec<(usize, Classification)>;
    loop {
        let current: Vec<MatrixTuple> = active.iter().map(|&i| distinct[i].clone()).collect();
        let results: Vec<Result<Classification>> =
            (0..current.len()).into_par_iter().map(|k| classify_crucial(k, &current, tol)).collect();
        last = Vec::with_capacity(active.len());
        for (k, r) in results.into_iter().enumerate() {
            last.push((active[k], r?));
        }
        let redundant: Vec<usize> = last.iter().filter(|(_, c)| !c.is_crucial()).map(|(i, _)| *i).collect();
        if redundant.is_empty() {
            break;
        }
        for (i, c) in last.iter() {
            if let Classification::Redundant(cert) = c {
                reports[*i] = Some(SummandReport {
                    tuple: distinct[*i].clone(),
                    status: SummandStatus::RedundantAbsorbed,
                    exposing_gap: None,
                    exposing_pencil: None,
                    certificate: cert.clone(),
                });
            }
        }
        active.retain(|i| !redundant.contains(i));
    }

    let crucial: Vec<MatrixTuple> = active.iter().map(|&i| distinct[i].clone()).collect();
    let minimal = MatrixTuple::direct_sum_all(&crucial)?;

    // Exposing gaps from the final separators.
    let gaps: Vec<Result<(Option<f64>, Option<Pencil>)>> = last
        .par_iter()
        .enumerate()
        .map(|(k, (_, c))| {
            let y = &crucial[k];
            let exposure = match c {
                Classification::Crucial(Certificate::Separator { pencil, .. }) => {
                    let rest = MatrixTuple::direct_sum_all(crucial.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, t)| t))?;
                    exposure_from_separator(pencil, y, &rest, tol)
                }
                _ => exposing_pencil(&crucial, k, tol),
            };
            match exposure {
                Ok(e) => Ok((Some(e.gap), Some(e.pencil))),
                Err(Error::NoGap { .. }) => Ok((None, None)),
                Err(e) => Err(e),
            }
        })
        .collect();
    for ((i, c), g) in last.into_iter().zip(gaps) {
        let (gap, pencil) = g?;
        let Classification::Crucial(cert) = c else { unreachable!("fixed point has only crucial summands") };
        reports[i] = Some(SummandReport {
            tuple: distinct[i].clone(),
            status: SummandStatus::Crucial,
            exposing_gap: gap,
            exposing_pencil: pencil,
            certificate: cert,
        });
    }

    // Both inclusions, one block at a time.
    let closed = tol.closed();
    let copies: Vec<MatrixTuple> = dec
        .blocks
        .iter()
        .flat_map(|b| std::iter::repeat_n(b.tuple.clone(), b.multiplicity))
        .collect();
    let forward = membership_of_blocks(&copies, Some(&dec.unitary), &minimal, &closed)?;
    let backward = membership_of_blocks(&crucial, None, t, &closed)?;
    let verified = forward.is_in()
        && backward.is_in()
        && forward.validate(t, &minimal).is_ok()
        && backward.validate(&minimal, t).is_ok();
    if !verified {
        return Err(Error::Indeterminate(format!(
            "range check of the reduced tuple failed (forward {:?}, backward {:?})",
            forward.status, backward.status
        )));
    }

    let mut summands: Vec<SummandReport> = reports.into_iter().map(|r| r.expect("every summand classified")).collect();
    summands.extend(duplicates);
    let marginal_blocks = dec.blocks.iter().any(|b| b.marginal);
    Ok(MinimalReport {
        input: t.clone(),
        minimal,
        summands,
        verified,
        forward,
        backward,
        decomposition: dec,
        marginal_blocks,
    })
}

/// True when the minimal presentation keeps every block of `t` once.
pub fn is_fully_compressed(t: &MatrixTuple, seed: u64, tol: &Tolerances) -> Result<(bool, MinimalReport)> {
    let report = minimal_presentation(t, seed, tol)?;
    Ok((report.is_fully_compressed(), report))
}

#[derive(Debug, Clone)]
pub struct EquivalenceWitness {
    pub unitary: ComplexMatrix,
    /// Block `i` of `S` (canonical order) corresponds to block
    /// `block_permutation[i]` of `T`.
    pub block_permutation: Vec<usize>,
    /// Largest coordinate-wise `‖U* S_j U − T_j‖_F`.
    pub residual: f64,
}

/// Unitary `U` with `U* S U = T` for minimal tuples with equal ranges.
pub fn recover_unitary(s: &MatrixTuple, t: &MatrixTuple, seed: u64, tol: &Tolerances) -> Result<EquivalenceWitness> {
    if s.d() != t.d() {
        return Err(Error::DimensionMismatch(format!("d = {} versus d = {}", s.d(), t.d())));
    }
    let ds = irreducible_decomposition(s, seed, tol)?;
    let dt = irreducible_decomposition(t, seed, tol)?;
    let closed = tol.closed();
    let sb = ds.distinct();
    let tb = dt.distinct();

    // Equal ranges first, so differing ranges report a separator.
    let fwd = membership_of_blocks(&sb, None, t, &closed)?;
    if fwd.is_out() {
        return Err(Error::NotEquivalent { separator: fwd.separator.map(Box::new) });
    }
    let bwd = membership_of_blocks(&tb, None, s, &closed)?;
    if bwd.is_out() {
        return Err(Error::NotEquivalent { separator: bwd.separator.map(Box::new) });
    }
    if !fwd.is_in() || !bwd.is_in() {
        return Err(Error::Indeterminate("range comparison is marginal".into()));
    }

    for (name, dec, blocks) in [("first", &ds, &sb), ("second", &dt, &tb)] {
        if dec.blocks.iter().any(|b| b.multiplicity > 1) {
            return Err(Error::NotMinimal(format!("{name} tuple has repeated blocks")));
        }
        for k in 0..blocks.len() {
            if !classify_crucial(k, blocks, tol)?.is_crucial() {
                return Err(Error::NotMinimal(format!("block {k} of the {name} tuple is absorbed by the others")));
            }
        }
    }
    if sb.len() != tb.len() {
        return Err(Error::NotEquivalent { separator: None });
    }

    let mut used = vec![false; tb.len()];
    let mut perm = Vec::with_capacity(sb.len());
    let mut per_block = Vec::with_capacity(sb.len());
    for x in &sb {
        let mut found = None;
        for (k, y) in tb.iter().enumerate() {
            if used[k] || x.n() != y.n() {
                continue;
            }
            if let Some(w) = decomp::unitary_equivalent(x, y, tol)? {
                found = Some((k, w));
                break;
            }
        }
        let (k, w) = found.ok_or(Error::NotEquivalent { separator: None })?;
        used[k] = true;
        perm.push(k);
        per_block.push(w);
    }

    // U = U_S · (⊕ W_i) · P · U_T*.
    let d_mat = linalg::block_diag(&per_block);
    let sizes: Vec<usize> = sb.iter().map(|x| x.n()).collect();
    let mut order = vec![0; perm.len()];
    for (i, &k) in perm.iter().enumerate() {
        order[k] = i;
    }
    let p = decomp::permutation_of_blocks(&sizes, &order);
    let unitary = &ds.unitary * d_mat * p * dt.unitary.adjoint();
    let residual = s.conjugate_unchecked(&unitary).max_distance(t);
    let scale = s.norm().max(1.0);
    if residual > tol.equiv_tol * scale {
        return Err(Error::NotEquivalent { separator: None });
    }
    Ok(EquivalenceWitness { unitary, block_permutation: perm, residual })
}

/// Distinct hull vertices of `K` and their diagonal tuple, whose range is
/// `Wmin(K)`.
pub fn wmin_minimal_tuple(body: &PolytopeBody, tol: &Tolerances) -> Result<(MatrixTuple, Vec<Vec<f64>>)> {
    let scale = body.vertices.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut points: Vec<Vec<f64>> = Vec::new();
    for v in &body.vertices {
        let dup = points.iter().any(|p| p.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-12 * scale));
        if !dup {
            points.push(v.clone());
        }
    }
    let closed = tol.closed();
    let keep: Vec<Result<bool>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            if points.len() == 1 {
                return Ok(true);
            }
            let others: Vec<Vec<f64>> = points.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            let rest = PolytopeBody::new(others)?.diagonal_tuple();
            let pt = MatrixTuple::scalar(&points[i])?;
            Ok(membership(&pt, &rest, &closed)?.is_out())
        })
        .collect();
    let mut vertices = Vec::new();
    for (p, k) in points.into_iter().zip(keep) {
        if k? {
            vertices.push(p);
        }
    }
    let tuple = PolytopeBody::new(vertices.clone())?.diagonal_tuple();
    Ok((tuple, vertices))
}

/// Direct reading of minimality for a block-diagonal tuple: no single
/// block can be dropped while keeping both inclusions.
pub fn no_removable_block(blocks: &[MatrixTuple], tol: &Tolerances) -> Result<Option<bool>> {
    if blocks.len() <= 1 {
        return Ok(Some(true));
    }
    let full = MatrixTuple::direct_sum_all(blocks)?;
    let mut any_marginal = false;
    for i in 0..blocks.len() {
        let rest = MatrixTuple::direct_sum_all(blocks.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, b)| b))?;
        let a = convexity::inclusion(&full, &rest, tol)?;
        let b = convexity::inclusion(&rest, &full, tol)?;
        match (a.status, b.status) {
            (Status::In, Status::In) => return Ok(Some(false)),
            (Status::Marginal, _) | (_, Status::Marginal) => any_marginal = true,
            _ => {}
        }
    }
    Ok(if any_marginal { None } else { Some(true) })
}
