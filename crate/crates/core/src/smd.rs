//! Structural matrix decomposition `A = V Uᵀ` under (0,1) support masks,
//! and full-DoF beam design for `Mt + Mr ≥ K+1`.
//!
//! A pair of masks with unit diagonals whose sum `Vbar + Ubarᵀ` has no zero
//! entry admits a decomposition of a generic `A`: the Jacobian of
//! `t ↦ vec(V Uᵀ)` has full row rank `K^2` at `V = U = I`. The solver uses
//! that point as the start of a homotopy `A(s) = (1-s) I + s A`, tracking the
//! solution with an Euler predictor and a minimum-norm Gauss-Newton
//! corrector. Normalization `u_kk = 1` removes the diagonal scaling freedom.
//!
//! The mask conditions are sufficient, not known to be necessary: an
//! infeasible verdict means "not covered", not "no decomposition exists".

use serde::{Deserialize, Serialize};

use crate::channel::CooperationPattern;
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::{Error, Result};

/// A square (0,1) support mask, indexed `(row, col)` from 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<u8>>", try_from = "Vec<Vec<u8>>")]
pub struct SMatrix {
    k: usize,
    bits: Vec<bool>,
}

impl SMatrix {
    pub fn from_fn(k: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..k * k).map(|n| f(n / k, n % k)).collect();
        SMatrix { k, bits }
    }

    pub fn identity(k: usize) -> Self {
        Self::from_fn(k, |i, j| i == j)
    }

    pub fn ones(k: usize) -> Self {
        Self::from_fn(k, |_, _| true)
    }

    /// Lower-triangular mask (including the diagonal).
    pub fn lower(k: usize) -> Self {
        Self::from_fn(k, |i, j| j <= i)
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.k + j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.k, |i, j| self.get(j, i))
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Whether `m` is supported inside this mask (exact zeros elsewhere).
    pub fn conforms(&self, m: &CMatrix) -> bool {
        m.nrows() == self.k
            && m.ncols() == self.k
            && (0..self.k).all(|i| (0..self.k).all(|j| self.get(i, j) || m[(i, j)] == C64::new(0.0, 0.0)))
    }
}

impl From<SMatrix> for Vec<Vec<u8>> {
    fn from(s: SMatrix) -> Self {
        (0..s.k).map(|i| (0..s.k).map(|j| s.get(i, j) as u8).collect()).collect()
    }
}

impl TryFrom<Vec<Vec<u8>>> for SMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<u8>>) -> std::result::Result<Self, String> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err("S-matrix must be square".into());
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err("S-matrix entries must be 0 or 1".into());
        }
        Ok(SMatrix::from_fn(k, |i, j| rows[i][j] == 1))
    }
}

/// Transmit and receive beams with their masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamPair {
    pub v: CMatrix,
    pub u: CMatrix,
    pub vbar: SMatrix,
    pub ubar: SMatrix,
}

impl BeamPair {
    /// `Uᵀ H V`, the effective channel after beamforming.
    pub fn effective_channel(&self, h: &CMatrix) -> CMatrix {
        self.u.transpose() * h * &self.v
    }

    /// Entrywise max of `|UᵀHV - I|`.
    pub fn diagonalization_residual(&self, h: &CMatrix) -> f64 {
        let k = h.nrows();
        linalg::max_abs(&(self.effective_channel(h) - CMatrix::identity(k, k)))
    }

    pub fn respects_masks(&self) -> bool {
        self.vbar.conforms(&self.v) && self.ubar.conforms(&self.u)
    }
}

/// Masks of the spiral cooperation pattern: `Vbar_ik = 1 ⇔ i ∈ k↑Mt` and
/// `Ubar_ik = 1 ⇔ i ∈ k↑Mr`.
pub fn comp_smatrices(k: usize, mt: usize, mr: usize) -> Result<(SMatrix, SMatrix)> {
    let p = CooperationPattern::new(k, mt, mr, 1)?;
    let vbar = SMatrix::from_fn(k, |i, c| p.transmit_set(c as i64 + 1).contains(i + 1));
    let ubar = SMatrix::from_fn(k, |i, c| p.receive_set(c as i64 + 1).contains(i + 1));
    Ok((vbar, ubar))
}

/// Unit diagonals in both masks and no zero in `Vbar + Ubarᵀ`. These
/// conditions are sufficient for a decomposition to exist; `false` does not
/// prove that none exists.
pub fn smd_feasible(vbar: &SMatrix, ubar: &SMatrix) -> bool {
    let k = vbar.size();
    ubar.size() == k
        && (0..k).all(|i| vbar.get(i, i) && ubar.get(i, i))
        && (0..k).all(|i| (0..k).all(|j| vbar.get(i, j) || ubar.get(j, i)))
}

/// Free entries of `V` and `U` (the diagonal of `U` is fixed to 1).
#[derive(Clone, Debug)]
struct Layout {
    k: usize,
    v: Vec<(usize, usize)>,
    u: Vec<(usize, usize)>,
}

impl Layout {
    fn new(vbar: &SMatrix, ubar: &SMatrix) -> Self {
        let k = vbar.size();
        let cells = |m: &SMatrix, skip_diag: bool| -> Vec<(usize, usize)> {
            (0..k)
                .flat_map(|i| (0..k).map(move |j| (i, j)))
                .filter(|&(i, j)| m.get(i, j) && !(skip_diag && i == j))
                .collect()
        };
        Layout { k, v: cells(vbar, false), u: cells(ubar, true) }
    }

    fn len(&self) -> usize {
        self.v.len() + self.u.len()
    }

    fn unpack(&self, t: &CVector) -> (CMatrix, CMatrix) {
        let mut v = CMatrix::zeros(self.k, self.k);
        let mut u = CMatrix::identity(self.k, self.k);
        for (n, &(i, j)) in self.v.iter().enumerate() {
            v[(i, j)] = t[n];
        }
        for (n, &(i, j)) in self.u.iter().enumerate() {
            u[(i, j)] = t[self.v.len() + n];
        }
        (v, u)
    }

    fn pack(&self, v: &CMatrix, u: &CMatrix) -> CVector {
        let vals = self.v.iter().map(|&(i, j)| v[(i, j)]).chain(self.u.iter().map(|&(i, j)| u[(i, j)]));
        CVector::from_iterator(self.len(), vals)
    }

    /// `vec(V Uᵀ - target)`, row-major.
    fn residual(&self, t: &CVector, target: &CMatrix) -> CVector {
        let (v, u) = self.unpack(t);
        let r = v * u.transpose() - target;
        CVector::from_iterator(self.k * self.k, r.transpose().iter().copied())
    }

    /// `∂(VUᵀ)_pq/∂v_ij = δ_pi u_qj`, `∂(VUᵀ)_pq/∂u_ij = δ_qi v_pj`.
    fn jacobian(&self, t: &CVector) -> CMatrix {
        let k = self.k;
        let (v, u) = self.unpack(t);
        let mut jac = CMatrix::zeros(k * k, self.len());
        for (n, &(i, j)) in self.v.iter().enumerate() {
            for q in 0..k {
                jac[(i * k + q, n)] = u[(q, j)];
            }
        }
        let off = self.v.len();
        for (n, &(i, j)) in self.u.iter().enumerate() {
            for p in 0..k {
                jac[(p * k + i, off + n)] = v[(p, j)];
            }
        }
        jac
    }
}

/// Numeric rank of the Jacobian of `t ↦ vec(V Uᵀ)` at `V = U = I`.
pub fn smd_jacobian_rank_at_identity(vbar: &SMatrix, ubar: &SMatrix) -> Result<usize> {
    if !smd_feasible(vbar, ubar) {
        return Err(Error::arg("masks do not satisfy the unit-diagonal and full-cover conditions"));
    }
    let layout = Layout::new(vbar, ubar);
    let k = vbar.size();
    let start = layout.pack(&CMatrix::identity(k, k), &CMatrix::identity(k, k));
    linalg::rank_with_tol(&layout.jacobian(&start), crate::algebra::DEFAULT_RANK_TOL)
}

/// Controls for [`smd_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmdOptions {
    /// Accept when `max|VUᵀ - A| ≤ tol · max|A|`.
    pub tol: f64,
    /// Initial number of continuation steps.
    pub steps: usize,
    /// Step halvings allowed below the initial step size.
    pub max_refinements: u32,
    /// Corrector stopping threshold on the residual, relative to `max(1, max|A(s)|)`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for SmdOptions {
    fn default() -> Self {
        Self { tol: 1e-10, steps: 10, max_refinements: 10, newton_tol: 1e-12, max_newton_iters: 50 }
    }
}

/// Diagnostics of a successful solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmdSolution {
    pub beams: BeamPair,
    /// `max|VUᵀ - A|`.
    pub residual: f64,
    pub continuation_steps: usize,
    pub rejected_steps: usize,
}

/// Minimum-norm solution of the underdetermined system `J x = b` through
/// the normal equations `J Jᴴ y = b`, `x = Jᴴ y`; falls back to the SVD
/// when `J Jᴴ` is not numerically positive definite.
fn min_norm_step(jac: &CMatrix, b: &CVector) -> Option<CVector> {
    let gram = jac * jac.adjoint();
    match gram.cholesky() {
        Some(ch) => Some(jac.adjoint() * ch.solve(b)),
        None => linalg::min_norm_solve(jac, b).ok(),
    }
}

fn max_abs_vec(x: &CVector) -> f64 {
    x.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Gauss-Newton with minimum-norm steps and backtracking. Returns the
/// converged point, or `None` if the residual stalls or diverges.
fn correct(layout: &Layout, mut t: CVector, target: &CMatrix, tol: f64, max_iters: usize) -> Option<CVector> {
    let mut r = layout.residual(&t, target);
    let mut rn = max_abs_vec(&r);
    for _ in 0..max_iters {
        if rn <= tol {
            return Some(t);
        }
        let dt = min_norm_step(&layout.jacobian(&t), &(-&r))?;
        let mut alpha = 1.0;
        loop {
            let trial = &t + &dt * C64::new(alpha, 0.0);
            let tr = layout.residual(&trial, target);
            let tn = max_abs_vec(&tr);
            if tn.is_finite() && tn < rn {
                t = trial;
                r = tr;
                rn = tn;
                break;
            }
            alpha *= 0.5;
            if alpha < 1.0 / 16.0 {
                return None;
            }
        }
    }
    (rn <= tol).then_some(t)
}

/// Decomposes `A = V Uᵀ` with `V`, `U` supported on `vbar`, `ubar` and
/// `u_kk = 1`.
pub fn smd_solve(a: &CMatrix, vbar: &SMatrix, ubar: &SMatrix, opts: &SmdOptions) -> Result<SmdSolution> {
    let k = a.nrows();
    if !a.is_square() || vbar.size() != k || ubar.size() != k {
        return Err(Error::arg("target and masks must be square of equal size"));
    }
    if !smd_feasible(vbar, ubar) {
        return Err(Error::arg("masks do not satisfy the unit-diagonal and full-cover conditions"));
    }
    if !linalg::is_finite(a) {
        return Err(Error::arg("target matrix has non-finite entries"));
    }
    if opts.steps == 0 {
        return Err(Error::arg("need at least one continuation step"));
    }
    let layout = Layout::new(vbar, ubar);
    let eye = CMatrix::identity(k, k);
    let direction = a - &eye;
    let target_at = |s: f64| &eye * C64::new(1.0 - s, 0.0) + a * C64::new(s, 0.0);
    let newton_tol = |s: f64| opts.newton_tol * linalg::max_abs(&target_at(s)).max(1.0);
    let dir_vec = CVector::from_iterator(k * k, direction.transpose().iter().copied());

    let h_max = 1.0 / opts.steps as f64;
    let h_min = h_max / f64::from(1u32 << opts.max_refinements.min(30));
    let mut t = layout.pack(&eye, &eye);
    let (mut s, mut h) = (0.0_f64, h_max);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    while s < 1.0 {
        let step = h.min(1.0 - s);
        let s_next = if step >= 1.0 - s { 1.0 } else { s + step };
        let predicted = match min_norm_step(&layout.jacobian(&t), &dir_vec) {
            Some(dt) => &t + dt * C64::new(s_next - s, 0.0),
            None => t.clone(),
        };
        match correct(&layout, predicted, &target_at(s_next), newton_tol(s_next), opts.max_newton_iters) {
            Some(next) => {
                t = next;
                s = s_next;
                accepted += 1;
                h = (2.0 * h).min(h_max);
            }
            None => {
                rejected += 1;
                h *= 0.5;
                if h < h_min * (1.0 - 1e-9) {
                    return Err(Error::failure(format!(
                        "continuation stalled at s = {s:.6}; the target may lie near the exceptional set"
                    )));
                }
            }
        }
    }
    let polished = correct(&layout, t.clone(), a, newton_tol(1.0), opts.max_newton_iters).unwrap_or(t);
    let (v, u) = layout.unpack(&polished);
    let residual = linalg::max_abs(&(&v * u.transpose() - a));
    let scale = linalg::max_abs(a).max(f64::MIN_POSITIVE);
    if !residual.is_finite() || residual > opts.tol * scale {
        return Err(Error::failure(format!("decomposition residual {residual:.3e} exceeds {:.1e} relative", opts.tol)));
    }
    Ok(SmdSolution {
        beams: BeamPair { v, u, vbar: vbar.clone(), ubar: ubar.clone() },
        residual,
        continuation_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Largest allowed `max|UᵀHV - I|` for full-DoF beams.
pub const FULL_DOF_TOL: f64 = 1e-8;

/// Beams with `UᵀHV = I` for `Mt + Mr ≥ K+1`, from the decomposition of
/// `H^{-1}` under the cooperation masks.
pub fn full_dof_beams(h: &CMatrix, mt: usize, mr: usize) -> Result<SmdSolution> {
    full_dof_beams_with(h, mt, mr, &SmdOptions::default())
}

pub fn full_dof_beams_with(h: &CMatrix, mt: usize, mr: usize, opts: &SmdOptions) -> Result<SmdSolution> {
    let k = h.nrows();
    if !h.is_square() {
        return Err(Error::arg("channel matrix must be square"));
    }
    let (vbar, ubar) = comp_smatrices(k, mt, mr)?;
    if mt + mr < k + 1 {
        return Err(Error::arg(format!("full-DoF beams need Mt + Mr >= K + 1; got {mt} + {mr} with K = {k}")));
    }
    let a = linalg::checked_inverse(h, "channel matrix")?;
    let sol = smd_solve(&a, &vbar, &ubar, opts)?;
    let res = sol.beams.diagonalization_residual(h);
    if res > FULL_DOF_TOL {
        return Err(Error::failure(format!("max|UᵀHV - I| = {res:.3e} exceeds {FULL_DOF_TOL:e}")));
    }
    Ok(sol)
}
