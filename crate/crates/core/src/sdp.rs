//! Dense semidefinite feasibility and optimization with certificates.
//!
//! Problems are stated over complex Hermitian matrices:
//!
//! ```text
//!   maximize ⟨C, X⟩   subject to   ⟨F_k, X⟩ = b_k,   X ⪰ 0,
//! ```
//!
//! with `⟨M, N⟩ = Re tr(M* N)`. Feasibility is decided through the phase-one
//! program `max t  s.t.  ⟨F_k, X⟩ = b_k,  X ⪰ t I`, which is strictly feasible on
//! both sides once the constraint system is reduced to full rank and the
//! trace of `X` is pinned by the constraints. Its optimal value `t*` separates
//! the cases: a primal matrix with `λ_min ≥ −feas_tol` is a feasibility
//! witness, and the optimal dual multipliers form a Farkas pair
//! `Σ y_k F_k ⪰ 0`, `Σ y_k b_k < 0` when `t* < 0`.
//!
//! The program is solved with an infeasible-start primal-dual interior-point
//! method (HKM direction, Mehrotra predictor-corrector). Every Feasible or
//! Infeasible outcome is re-validated by [`verify`] against the original
//! constraint list before it is returned.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

#[derive(Debug, Clone)]
pub struct Constraint {
    pub matrix: ComplexMatrix,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub psd_side: usize,
    /// Maximized when present; pure feasibility otherwise.
    pub objective: Option<ComplexMatrix>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub feas_tol: f64,
    pub herm_tol: f64,
    /// Relative eigenvalue threshold on the constraint Gram matrix below
    /// which a direction counts as dependent.
    pub rank_tol: f64,
    pub max_iter: usize,
    /// Interior-point stopping tolerance on relative gap and infeasibilities.
    pub ipm_tol: f64,
    /// Trace bound imposed when the constraints do not pin `tr X`.
    pub trace_bound: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            herm_tol: 1e-8,
            rank_tol: 1e-13,
            max_iter: 150,
            ipm_tol: 1e-10,
            trace_bound: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    Marginal,
}

/// Farkas multipliers `y` with `slack = Σ y_k F_k (+ y_bound I) ⪰ 0` and
/// `Σ y_k b_k (+ y_bound · bound) < 0`.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub multipliers: Vec<f64>,
    pub slack: ComplexMatrix,
    /// Multiplier of the artificial trace bound; zero when `tr X` is pinned.
    pub bound_multiplier: f64,
    pub bound: f64,
}

impl DualCertificate {
    pub fn value(&self, problem: &SdpProblem) -> f64 {
        let lin: f64 = self.multipliers.iter().zip(&problem.constraints).map(|(y, c)| y * c.rhs).sum();
        lin + self.bound_multiplier * self.bound
    }
}

#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    pub primal: Option<ComplexMatrix>,
    pub dual_certificate: Option<DualCertificate>,
    pub objective_value: Option<f64>,
    /// Upper bound on the objective from the dual program.
    pub dual_bound: Option<f64>,
    /// Feasible: `λ_min(primal) / scale`; Infeasible: `−Σ y_k b_k / scale`
    /// for the normalized certificate; Marginal: the best of the two.
    pub margin: f64,
    /// Phase-one optimum `t*` divided by `scale`.
    pub phase_one_value: f64,
    /// Average eigenvalue `tr X / n` of any feasible point.
    pub scale: f64,
    pub iterations: usize,
}

fn hermitian_check(m: &ComplexMatrix, side: usize, tol: f64, what: &str) -> Result<()> {
    if m.nrows() != side || m.ncols() != side {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {side}x{side}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IllConditioned(format!("{what} has non-finite entries")));
    }
    let deviation = linalg::hermitian_deviation(m);
    if deviation > tol * linalg::fro_norm(m).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

impl SdpProblem {
    pub fn feasibility(psd_side: usize, constraints: Vec<Constraint>) -> Self {
        Self { psd_side, objective: None, constraints }
    }

    pub fn validate(&self, herm_tol: f64) -> Result<()> {
        if self.psd_side == 0 {
            return Err(Error::Empty("psd_side must be positive".into()));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            hermitian_check(&c.matrix, self.psd_side, herm_tol, &format!("constraint {k}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::IllConditioned(format!("constraint {k} has a non-finite right-hand side")));
            }
        }
        if let Some(obj) = &self.objective {
            hermitian_check(obj, self.psd_side, herm_tol, "objective")?;
        }
        Ok(())
    }

    fn rhs_scale(&self) -> f64 {
        self.constraints.iter().map(|c| c.rhs.abs()).fold(1.0, f64::max)
    }

    /// `(⟨F_k, X⟩ − b_k)_k`
    pub fn residuals(&self, x: &ComplexMatrix) -> Vec<f64> {
        self.constraints.iter().map(|c| linalg::inner(&c.matrix, x) - c.rhs).collect()
    }
}

/// A linear system over Hermitian matrices reduced to orthonormal rows:
/// `rows[i] = Σ_k combo[(i, k)] F_k`, `rhs = combo · b`.
struct Reduced {
    rows: Vec<ComplexMatrix>,
    rhs: Vec<f64>,
    combo: DMatrix<f64>,
}

enum Reduction {
    Ok(Reduced),
    /// A dependent direction `u` with `Σ u_k F_k ≈ 0` and `u · b < 0`.
    Inconsistent(Vec<f64>),
}

fn combine(mats: &[ComplexMatrix], coeffs: &[f64], side: usize) -> ComplexMatrix {
    let mut out = linalg::zeros(side, side);
    for (m, &w) in mats.iter().zip(coeffs) {
        if w != 0.0 {
            out.zip_apply(m, |o, v| *o += v * w);
        }
    }
    out
}

fn gram(mats: &[ComplexMatrix]) -> DMatrix<f64> {
    let k = mats.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = linalg::inner(&mats[i], &mats[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn reduce(mats: &[ComplexMatrix], rhs: &[f64], side: usize, opts: &SdpOptions) -> Result<Reduction> {
    let k = mats.len();
    if k == 0 {
        return Ok(Reduction::Ok(Reduced { rows: Vec::new(), rhs: Vec::new(), combo: DMatrix::zeros(0, 0) }));
    }
    let g = gram(mats);
    let eig = SymmetricEigen::new(g);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        // Every constraint matrix is zero.
        if let Some((idx, _)) = rhs.iter().enumerate().find(|(_, b)| b.abs() > opts.feas_tol) {
            let mut u = vec![0.0; k];
            u[idx] = -rhs[idx].signum();
            return Ok(Reduction::Inconsistent(u));
        }
        return Ok(Reduction::Ok(Reduced { rows: Vec::new(), rhs: Vec::new(), combo: DMatrix::zeros(0, k) }));
    }
    let b = DVector::from_column_slice(rhs);
    let b_norm = b.norm().max(1.0);
    let mut keep = Vec::new();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let rel = lambda / top;
        let u = eig.eigenvectors.column(idx);
        if rel > opts.rank_tol * 100.0 {
            keep.push(idx);
        } else if rel <= opts.rank_tol {
            let ub = u.dot(&b);
            if ub.abs() > opts.feas_tol * b_norm {
                let sign = -ub.signum();
                return Ok(Reduction::Inconsistent(u.iter().map(|v| v * sign).collect()));
            }
        } else {
            return Err(Error::IllConditioned(format!(
                "constraint Gram matrix has an eigenvalue at {rel:.2e} of its largest"
            )));
        }
    }
    let mut combo = DMatrix::zeros(keep.len(), k);
    for (row, &idx) in keep.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[idx].sqrt();
        for col in 0..k {
            combo[(row, col)] = eig.eigenvectors[(col, idx)] * s;
        }
    }
    let rows = (0..keep.len())
        .map(|i| combine(mats, combo.row(i).transpose().as_slice(), side))
        .collect();
    let rhs = (&combo * b).iter().copied().collect();
    Ok(Reduction::Ok(Reduced { rows, rhs, combo }))
}

struct IpmResult {
    x: ComplexMatrix,
    y: Vec<f64>,
    iterations: usize,
}

/// Largest `α ≥ 0` (capped at `cap`) with `M + α D ⪰ 0`, for `M ≻ 0`.
fn max_step(m: &ComplexMatrix, d: &ComplexMatrix, cap: f64) -> f64 {
    let Some(chol) = m.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.try_inverse() else {
        return 0.0;
    };
    let scaled = &linv * d * linv.adjoint();
    let lmin = linalg::lambda_min(&scaled);
    if lmin >= 0.0 {
        cap
    } else {
        (-1.0 / lmin).min(cap)
    }
}

fn apply_ops(rows: &[ComplexMatrix], x: &ComplexMatrix) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|f| linalg::inner(f, x)))
}

/// Primal-dual interior point for
/// `min ⟨C,X⟩ s.t. ⟨F_i,X⟩ = b_i, X ⪰ 0` / `max b·y s.t. Σ y_i F_i + Z = C, Z ⪰ 0`
/// with orthonormal `F_i`.
fn interior_point(rows: &[ComplexMatrix], b: &[f64], cost: &ComplexMatrix, opts: &SdpOptions) -> IpmResult {
    let n = cost.nrows();
    let k = rows.len();
    let nf = n as f64;
    let b = DVector::from_column_slice(b);
    let c_norm = linalg::fro_norm(cost);
    let b_norm = b.norm();

    let xi = (1.0 + b.amax()).max(nf.sqrt()).max(1.0);
    let eta = (1.0 + c_norm).max(nf.sqrt()).max(1.0);
    let mut x = linalg::identity(n) * linalg::c(xi, 0.0);
    let mut z = linalg::identity(n) * linalg::c(eta, 0.0);
    let mut y = DVector::<f64>::zeros(k);
    let mut iterations = 0;
    // Near a singular optimum the Schur solve loses accuracy and the
    // iterates can drift; keep the best one seen.
    let mut best: Option<(f64, ComplexMatrix, DVector<f64>)> = None;
    let mut stalled = 0;

    let adjoint = |v: &DVector<f64>| combine(rows, v.as_slice(), n);

    for it in 0..opts.max_iter {
        iterations = it;
        let rp = &b - apply_ops(rows, &x);
        let rd = cost - adjoint(&y) - &z;
        let xz = linalg::inner(&x, &z);
        let mu = xz / nf;
        let pobj = linalg::inner(cost, &x);
        let dobj = b.dot(&y);
        let relgap = xz.abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = linalg::fro_norm(&rd) / (1.0 + c_norm);
        let merit = relgap.max(pinf).max(dinf);
        if best.as_ref().is_none_or(|(m, _, _)| merit < *m) {
            best = Some((merit, x.clone(), y.clone()));
            stalled = 0;
        } else {
            stalled += 1;
        }
        if merit < opts.ipm_tol || (stalled >= 8 && best.as_ref().is_some_and(|(m, _, _)| *m < 1e-7)) {
            break;
        }

        let Some(zchol) = z.clone().cholesky() else { break };
        let zinv = zchol.inverse();
        let zinv = linalg::hermitian_part(&zinv);

        // Schur complement M_ij = Re tr(F_i X F_j Z^{-1}).
        let g: Vec<ComplexMatrix> = rows.iter().map(|f| &x * f * &zinv).collect();
        let mut schur = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = 0.5 * (linalg::inner(&rows[i], &g[j]) + linalg::inner(&rows[j], &g[i]));
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let diag_max = (0..k).map(|i| schur[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let factor = match schur.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let mut reg = schur.clone();
                for i in 0..k {
                    reg[(i, i)] += 1e-14 * diag_max;
                }
                match reg.cholesky() {
                    Some(ch) => ch,
                    None => break,
                }
            }
        };

        let x_rd_zinv = &x * &rd * &zinv;
        let base_rhs = &b + apply_ops(rows, &x_rd_zinv);

        let direction = |sigma_mu: f64, second_order: Option<&ComplexMatrix>| {
            // Target matrix T = σμ I − ΔX_p ΔZ_p, so ΔX = T Z^{-1} − X − X ΔZ Z^{-1}.
            let mut target = linalg::identity(n) * linalg::c(sigma_mu, 0.0);
            if let Some(so) = second_order {
                target -= so;
            }
            let t_zinv = &target * &zinv;
            let rhs = &base_rhs - apply_ops(rows, &t_zinv);
            let dy = factor.solve(&rhs);
            let dz = &rd - adjoint(&dy);
            let dx_raw = &t_zinv - &x - &x * &dz * &zinv;
            let dx = linalg::hermitian_part(&dx_raw);
            (dx, dy, linalg::hermitian_part(&dz))
        };

        let (dx_p, _dy_p, dz_p) = direction(0.0, None);
        let ap = max_step(&x, &dx_p, 1.0);
        let ad = max_step(&z, &dz_p, 1.0);
        let mu_aff = linalg::inner(&(&x + &dx_p * linalg::c(ap, 0.0)), &(&z + &dz_p * linalg::c(ad, 0.0))) / nf;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let second = &dx_p * &dz_p;
        let (dx, dy, dz) = direction(sigma * mu, Some(&second));

        let gamma = 0.9 + 0.09 * ap.min(ad);
        let step_p = (gamma * max_step(&x, &dx, 1.0 / gamma)).min(1.0);
        let step_d = (gamma * max_step(&z, &dz, 1.0 / gamma)).min(1.0);
        if step_p < 1e-12 && step_d < 1e-12 {
            break;
        }
        x += &dx * linalg::c(step_p, 0.0);
        x = linalg::hermitian_part(&x);
        y += &dy * step_d;
        z += &dz * linalg::c(step_d, 0.0);
        z = linalg::hermitian_part(&z);
        iterations = it + 1;
    }
    let rp = &b - apply_ops(rows, &x);
    let rd = cost - adjoint(&y) - &z;
    let xz = linalg::inner(&x, &z);
    let merit = (xz.abs() / (1.0 + linalg::inner(cost, &x).abs() + b.dot(&y).abs()))
        .max(rp.norm() / (1.0 + b_norm))
        .max(linalg::fro_norm(&rd) / (1.0 + c_norm));
    if let Some((m, bx, by)) = best {
        if m < merit {
            x = bx;
            y = by;
        }
    }
    IpmResult { x, y: y.iter().copied().collect(), iterations }
}

/// Solves the problem and certifies the answer.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpOutcome> {
    problem.validate(opts.herm_tol)?;
    let n = problem.psd_side;
    let identity = linalg::identity(n);

    let mut mats: Vec<ComplexMatrix> = problem.constraints.iter().map(|c| c.matrix.clone()).collect();
    let mut rhs: Vec<f64> = problem.constraints.iter().map(|c| c.rhs).collect();

    // Does the identity lie in the span of the constraints? Then tr X is pinned.
    let trace_pinned = {
        let g = gram(&mats);
        let a_i = DVector::from_iterator(mats.len(), mats.iter().map(|f| linalg::inner(f, &identity)));
        match pseudo_solve(&g, &a_i) {
            Some(w) => {
                let back = combine(&mats, w.as_slice(), n);
                linalg::fro_norm(&(back - &identity)) <= 1e-9 * (n as f64).sqrt()
            }
            None => false,
        }
    };
    // Otherwise embed X ↦ X ⊕ s with the extra constraint tr X + s = bound.
    let embedded = !trace_pinned;
    let side = if embedded { n + 1 } else { n };
    let bound = opts.trace_bound * problem.rhs_scale();
    if embedded {
        mats = mats.into_iter().map(|m| linalg::direct_sum(&m, &linalg::zeros(1, 1))).collect();
        mats.push(linalg::identity(side));
        rhs.push(bound);
    }

    let reduced = match reduce(&mats, &rhs, side, opts)? {
        Reduction::Ok(r) => r,
        Reduction::Inconsistent(u) => {
            return finish_inconsistent(problem, &mats, &rhs, u, embedded, bound, side, opts);
        }
    };

    // w with Σ w_k F_k = I, in the original indexing.
    let id_side = linalg::identity(side);
    let w_red: Vec<f64> = reduced.rows.iter().map(|f| linalg::inner(f, &id_side)).collect();
    let w = reduced.combo.transpose() * DVector::from_column_slice(&w_red);
    let tau = w.dot(&DVector::from_column_slice(&rhs));
    let scale = (tau / side as f64).abs().max(f64::MIN_POSITIVE);

    if tau <= opts.feas_tol {
        // tr X ≤ 0 is forced; y = −w certifies infeasibility unless X = 0 works.
        let zero_ok = rhs.iter().all(|b| b.abs() <= opts.feas_tol);
        if zero_ok {
            let outcome = SdpOutcome {
                status: SdpStatus::Feasible,
                primal: Some(linalg::zeros(n, n)),
                dual_certificate: None,
                objective_value: problem.objective.as_ref().map(|_| 0.0),
                dual_bound: None,
                margin: 0.0,
                phase_one_value: 0.0,
                scale: 1.0,
                iterations: 0,
            };
            verify(problem, &outcome, opts)?;
            return Ok(outcome);
        }
        if tau < -opts.feas_tol {
            let y: Vec<f64> = w.iter().copied().collect();
            return finish_inconsistent(problem, &mats, &rhs, y, embedded, bound, side, opts);
        }
        return Ok(marginal(problem, 0.0, 1.0, 0));
    }

    // Phase one: X = X' + t I, min tr X' with traceless constraint rows.
    let nf = side as f64;
    let traceless: Vec<ComplexMatrix> = reduced
        .rows
        .iter()
        .map(|f| {
            let t = linalg::trace_re(f) / nf;
            f - &id_side * linalg::c(t, 0.0)
        })
        .collect();
    let shifted_rhs: Vec<f64> = reduced
        .rows
        .iter()
        .zip(&reduced.rhs)
        .map(|(f, b)| b - tau / nf * linalg::trace_re(f))
        .collect();
    let phase = match reduce(&traceless, &shifted_rhs, side, opts)? {
        Reduction::Ok(r) => r,
        // The shifted system is consistent by construction of tau.
        Reduction::Inconsistent(_) => return Ok(marginal(problem, 0.0, scale, 0)),
    };
    let ipm = interior_point(&phase.rows, &phase.rhs, &id_side, opts);

    // Primal candidate: correct X' onto the affine set, then X = X' + t I.
    let mut xp = ipm.x.clone();
    let res = DVector::from_column_slice(&phase.rhs) - apply_ops(&phase.rows, &xp);
    xp += combine(&phase.rows, res.as_slice(), side);
    let t = (tau - linalg::trace_re(&xp)) / nf;
    let x_full = &xp + &id_side * linalg::c(t, 0.0);
    let lam_primal = linalg::lambda_min(&x_full);

    // Dual candidate mapped back to the original multipliers.
    let y_phase = DVector::from_column_slice(&ipm.y);
    let v = reduced.combo.transpose() * (phase.combo.transpose() * &y_phase);
    let s_corr: f64 = v.iter().zip(&mats).map(|(vk, f)| vk * linalg::trace_re(f)).sum();
    let c_shift = 1.0 + s_corr / nf;
    let mut y_hat: Vec<f64> = v.iter().zip(w.iter()).map(|(vk, wk)| (-vk + c_shift * wk) / nf).collect();
    let mut slack = combine(&mats, &y_hat, side);
    let lam_dual = linalg::lambda_min(&slack);
    if lam_dual < 0.0 {
        // Shift by a multiple of w so the slack is PSD with room for rounding.
        let delta = -lam_dual * (1.0 + 1e-6) + 1e-14 * linalg::fro_norm(&slack);
        for (yk, wk) in y_hat.iter_mut().zip(w.iter()) {
            *yk += delta * wk;
        }
        slack = combine(&mats, &y_hat, side);
    }
    let dual_value: f64 = y_hat.iter().zip(&rhs).map(|(a, b)| a * b).sum();
    let phase_one_value = t / scale;

    let primal_margin = lam_primal / scale;
    let dual_margin = -dual_value / scale;
    let residual_ok = {
        let r = problem.residuals(&x_full.view((0, 0), (n, n)).into_owned());
        r.iter().all(|v| v.abs() <= opts.feas_tol * problem.rhs_scale())
    };

    let mut outcome = if primal_margin >= -opts.feas_tol && residual_ok {
        SdpOutcome {
            status: SdpStatus::Feasible,
            primal: Some(x_full.view((0, 0), (n, n)).into_owned()),
            dual_certificate: None,
            objective_value: None,
            dual_bound: None,
            margin: primal_margin,
            phase_one_value,
            scale,
            iterations: ipm.iterations,
        }
    } else if dual_margin > opts.feas_tol {
        let (multipliers, bound_multiplier) = split_multipliers(&y_hat, embedded);
        SdpOutcome {
            status: SdpStatus::Infeasible,
            primal: None,
            dual_certificate: Some(DualCertificate {
                multipliers,
                slack: slack.view((0, 0), (n, n)).into_owned(),
                bound_multiplier,
                bound: if embedded { bound } else { 0.0 },
            }),
            objective_value: None,
            dual_bound: None,
            margin: dual_margin,
            phase_one_value,
            scale,
            iterations: ipm.iterations,
        }
    } else {
        marginal(problem, primal_margin.max(-dual_margin), scale, ipm.iterations)
    };
    if outcome.status == SdpStatus::Marginal {
        outcome.phase_one_value = phase_one_value;
    }

    if outcome.status == SdpStatus::Feasible {
        if let Some(obj) = &problem.objective {
            let cost = if embedded { -linalg::direct_sum(obj, &linalg::zeros(1, 1)) } else { -obj.clone() };
            let p2 = interior_point(&reduced.rows, &reduced.rhs, &cost, opts);
            let mut x2 = p2.x.clone();
            let res = DVector::from_column_slice(&reduced.rhs) - apply_ops(&reduced.rows, &x2);
            x2 += combine(&reduced.rows, res.as_slice(), side);
            let x2 = x2.view((0, 0), (n, n)).into_owned();
            outcome.objective_value = Some(linalg::inner(obj, &x2));
            // Dual of min ⟨−C,X⟩ gives max ⟨C,X⟩ ≤ −b·y.
            let y2 = DVector::from_column_slice(&p2.y);
            outcome.dual_bound = Some(-DVector::from_column_slice(&reduced.rhs).dot(&y2));
            if linalg::lambda_min(&x2) >= -opts.feas_tol * scale {
                outcome.primal = Some(x2);
            }
            outcome.iterations += p2.iterations;
        }
    }
    verify(problem, &outcome, opts)?;
    Ok(outcome)
}

fn split_multipliers(y: &[f64], embedded: bool) -> (Vec<f64>, f64) {
    if embedded {
        let (head, tail) = y.split_at(y.len() - 1);
        (head.to_vec(), tail[0])
    } else {
        (y.to_vec(), 0.0)
    }
}

fn marginal(problem: &SdpProblem, margin: f64, scale: f64, iterations: usize) -> SdpOutcome {
    let _ = problem;
    SdpOutcome {
        status: SdpStatus::Marginal,
        primal: None,
        dual_certificate: None,
        objective_value: None,
        dual_bound: None,
        margin,
        phase_one_value: margin,
        scale,
        iterations,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_inconsistent(
    problem: &SdpProblem,
    mats: &[ComplexMatrix],
    rhs: &[f64],
    u: Vec<f64>,
    embedded: bool,
    bound: f64,
    side: usize,
    opts: &SdpOptions,
) -> Result<SdpOutcome> {
    let n = problem.psd_side;
    // Normalize so that Σ u_k b_k = −1, then make the slack PSD by adding a
    // small multiple of the identity combination when one exists.
    let ub: f64 = u.iter().zip(rhs).map(|(a, b)| a * b).sum();
    let mut y: Vec<f64> = u.iter().map(|v| v / ub.abs()).collect();
    let mut slack = combine(mats, &y, side);
    let lam = linalg::lambda_min(&slack);
    if lam < 0.0 {
        let identity = linalg::identity(side);
        let g = gram(mats);
        let a_i = DVector::from_iterator(mats.len(), mats.iter().map(|f| linalg::inner(f, &identity)));
        if let Some(w) = pseudo_solve(&g, &a_i) {
            let delta = -lam * (1.0 + 1e-6) + 1e-14;
            for (yk, wk) in y.iter_mut().zip(w.iter()) {
                *yk += delta * wk;
            }
            slack = combine(mats, &y, side);
        }
    }
    let value: f64 = y.iter().zip(rhs).map(|(a, b)| a * b).sum();
    if value >= -opts.feas_tol || linalg::lambda_min(&slack) < -1e-12 * linalg::fro_norm(&slack).max(1.0) {
        return Ok(marginal(problem, 0.0, 1.0, 0));
    }
    let (multipliers, bound_multiplier) = split_multipliers(&y, embedded);
    let outcome = SdpOutcome {
        status: SdpStatus::Infeasible,
        primal: None,
        dual_certificate: Some(DualCertificate {
            multipliers,
            slack: slack.view((0, 0), (n, n)).into_owned(),
            bound_multiplier,
            bound: if embedded { bound } else { 0.0 },
        }),
        objective_value: None,
        dual_bound: None,
        margin: -value,
        phase_one_value: f64::NEG_INFINITY,
        scale: 1.0,
        iterations: 0,
    };
    verify(problem, &outcome, opts)?;
    Ok(outcome)
}

/// Least-squares solution of the symmetric PSD system `G w = a`.
fn pseudo_solve(g: &DMatrix<f64>, a: &DVector<f64>) -> Option<DVector<f64>> {
    if g.nrows() == 0 {
        return None;
    }
    let eig = SymmetricEigen::new(g.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return None;
    }
    let mut w = DVector::zeros(g.nrows());
    for (idx, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 1e-13 * top {
            let u = eig.eigenvectors.column(idx);
            w += u * (u.dot(a) / l);
        }
    }
    Some(w)
}

/// Independent post-hoc check of an outcome against the original problem.
/// Recomputes residuals, inner products and eigenvalues from scratch.
pub fn verify(problem: &SdpProblem, outcome: &SdpOutcome, opts: &SdpOptions) -> Result<()> {
    let n = problem.psd_side;
    match outcome.status {
        SdpStatus::Feasible => {
            let x = outcome
                .primal
                .as_ref()
                .ok_or_else(|| Error::VerifierFailure("feasible outcome without a primal matrix".into()))?;
            if x.nrows() != n || x.ncols() != n {
                return Err(Error::VerifierFailure("primal has the wrong side".into()));
            }
            let lmin = linalg::lambda_min(x);
            if lmin < -opts.feas_tol * outcome.scale.max(1e-300) * (1.0 + 1e-6) {
                return Err(Error::VerifierFailure(format!("primal has eigenvalue {lmin:.3e}")));
            }
            let worst = problem.residuals(x).into_iter().map(f64::abs).fold(0.0, f64::max);
            if worst > opts.feas_tol * problem.rhs_scale() {
                return Err(Error::VerifierFailure(format!("primal residual {worst:.3e}")));
            }
            if let (Some(p), Some(d)) = (outcome.objective_value, outcome.dual_bound) {
                let scale = problem.objective.as_ref().map_or(1.0, |c| linalg::fro_norm(c).max(1.0))
                    * problem.rhs_scale();
                if p > d + 1e-6 * scale {
                    return Err(Error::VerifierFailure(format!("weak duality violated: {p} > {d}")));
                }
            }
        }
        SdpStatus::Infeasible => {
            let cert = outcome
                .dual_certificate
                .as_ref()
                .ok_or_else(|| Error::VerifierFailure("infeasible outcome without a certificate".into()))?;
            if cert.multipliers.len() != problem.constraints.len() {
                return Err(Error::VerifierFailure("certificate has the wrong length".into()));
            }
            let mut s = linalg::identity(n) * linalg::c(cert.bound_multiplier, 0.0);
            for (y, c) in cert.multipliers.iter().zip(&problem.constraints) {
                s += &c.matrix * linalg::c(*y, 0.0);
            }
            let lmin = linalg::lambda_min(&s);
            if lmin < -1e-10 * linalg::fro_norm(&s).max(1.0) {
                return Err(Error::VerifierFailure(format!("certificate slack has eigenvalue {lmin:.3e}")));
            }
            let value = cert.value(problem);
            if value >= 0.0 {
                return Err(Error::VerifierFailure(format!("certificate value {value:.3e} is not negative")));
            }
        }
        SdpStatus::Marginal => {}
    }
    Ok(())
}

/// Maximizes the concave function `t ↦ λ_min(M0 + t M1)` over `[lo, hi]`
/// by golden-section search. Returns `(t*, λ*)`.
pub fn max_mineig(m0: &ComplexMatrix, m1: &ComplexMatrix, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::DimensionMismatch(format!("empty interval [{lo}, {hi}]")));
    }
    if m0.shape() != m1.shape() || !m0.is_square() {
        return Err(Error::DimensionMismatch("pencil matrices differ in shape".into()));
    }
    let f = |t: f64| linalg::lambda_min(&(m0 + m1 * linalg::c(t, 0.0)));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    // The optimum may sit on an endpoint of the interval.
    let candidates = [(0.5 * (a + b), f(0.5 * (a + b))), (lo, f(lo)), (hi, f(hi))];
    let best = candidates.into_iter().fold((lo, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    Ok(best)
}
