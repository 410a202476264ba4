//! Closed-form alignment for `Mt = K-1`, `Mr = 2`.
//!
//! With `M = HV`, the receive matrix `U = M^{-T}` has the two-band support
//! of `Mr = 2` exactly when, for every `k`, the two interfering directions
//! `H(T_k, T_{k-1}) v_{k-1}` and `H(T_k, T_{k-2}) v_{k-2}` are parallel. For
//! generic `H` this is `v_{k+1} ∝ B_k v_k` with
//! `B_k = H(T_{k+2}, T_{k+1})^{-1} H(T_{k+2}, T_k)`, so `v_1` must be an
//! eigenvector of `B_K ⋯ B_1`.
//!
//! Steps, as implemented:
//! 1. build `B_1, .., B_K` ([`alignment_matrices`]);
//! 2. take `v_1` as a unit eigenvector of `B_K ⋯ B_1`;
//! 3. set `v_{k+1} = B_k v_k` for `k = 1..K-1`;
//! 4. place `v_k` in column `k` of `V` on rows `T_k`;
//! 5. set `U = (HV)^{-T}`.

use serde::{Deserialize, Serialize};

use crate::channel::{down_set, submatrix, up_set, CooperationPattern, IndexSet};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::smd::{comp_smatrices, BeamPair};
use crate::{Error, Result};

/// Relative rank tolerance for the alignment conditions. Looser than the
/// crate default because `M = HV` inherits the conditioning of the chain
/// product, whose entries can span several orders of magnitude at `K = 8`.
pub const ALIGNMENT_RANK_TOL: f64 = 1e-8;

/// The alignment matrices `B_k` and their ordered product `B_K ⋯ B_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentChain {
    /// `b[k-1]` is `B_k`, of size `(K-1) x (K-1)`.
    pub b: Vec<CMatrix>,
    pub product: CMatrix,
}

fn pattern(k: usize) -> Result<CooperationPattern> {
    if k < 3 {
        return Err(Error::arg(format!("closed-form alignment needs K >= 3, got {k}")));
    }
    CooperationPattern::new(k, k - 1, 2, 1)
}

/// `B_k = H(T_{k+2}, T_{k+1})^{-1} H(T_{k+2}, T_k)` for one `k` in `1..=K`.
pub fn alignment_matrix(h: &CMatrix, k: usize) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::arg("channel matrix must be square"));
    }
    let p = pattern(h.nrows())?;
    if k == 0 || k > p.k {
        return Err(Error::arg(format!("index {k} outside 1..={}", p.k)));
    }
    let kk = k as i64;
    let rows = p.transmit_set(kk + 2);
    let inner = submatrix(h, &rows, &p.transmit_set(kk + 1))?;
    let inv = linalg::checked_inverse(&inner, &format!("H(T_{}, T_{})", k + 2, k + 1))?;
    Ok(inv * submatrix(h, &rows, &p.transmit_set(kk))?)
}

/// All `B_k` for `k = 1..K` and the product `B_K ⋯ B_1`.
pub fn alignment_matrices(h: &CMatrix) -> Result<AlignmentChain> {
    let k = h.nrows();
    pattern(k)?;
    let b = (1..=k).map(|kk| alignment_matrix(h, kk)).collect::<Result<Vec<_>>>()?;
    let product = b.iter().fold(CMatrix::identity(k - 1, k - 1), |acc, bk| bk * acc);
    Ok(AlignmentChain { b, product })
}

/// Chain plus eigen-decomposition, reusable across eigenvector choices.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    h: CMatrix,
    pub chain: AlignmentChain,
    /// Eigenpairs of the product, by descending `|λ|`, ties by ascending `arg λ`.
    pub eigenpairs: Vec<(C64, CVector)>,
}

/// Beams for one eigenvector choice plus structure diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub eig_index: usize,
    pub eigenvalue: C64,
    /// `U` has its out-of-band entries set to zero after measuring them.
    pub beams: BeamPair,
    /// `max|UᵀHV - I|` with the cleaned `U`.
    pub residual: f64,
    /// Largest out-of-band `|u_ik|` of the raw `(HV)^{-T}`, relative to `max|U|`.
    pub leakage: f64,
}

impl ClosedForm {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let chain = alignment_matrices(h)?;
        let eigenpairs = linalg::eigenpairs(&chain.product)?;
        Ok(Self { h: h.clone(), chain, eigenpairs })
    }

    pub fn users(&self) -> usize {
        self.h.nrows()
    }

    /// Beams from the `eig_index`-th eigenvector (1-based).
    pub fn beams(&self, eig_index: usize) -> Result<ClosedFormSolution> {
        let k = self.users();
        if eig_index == 0 || eig_index > k - 1 {
            return Err(Error::arg(format!("eigenvector index {eig_index} outside 1..={}", k - 1)));
        }
        let (lambda, v1) = &self.eigenpairs[eig_index - 1];
        self.beams_from(v1.clone(), eig_index, *lambda)
    }

    /// Beams from an arbitrary starting vector `v_1`.
    pub fn beams_from(&self, v1: CVector, eig_index: usize, eigenvalue: C64) -> Result<ClosedFormSolution> {
        let k = self.users();
        let p = pattern(k)?;
        let mut v = CMatrix::zeros(k, k);
        let mut vk = v1;
        for kk in 1..=k {
            for (r, i) in p.transmit_set(kk as i64).iter().enumerate() {
                v[(i - 1, kk - 1)] = vk[r];
            }
            if kk < k {
                vk = &self.chain.b[kk - 1] * vk;
            }
        }
        let m = &self.h * &v;
        let mut u = linalg::checked_inverse(&m, "HV").map_err(|e| Error::failure(format!("{e}")))?.transpose();
        let (vbar, ubar) = comp_smatrices(k, k - 1, 2)?;
        let leakage = u_leakage(&u, &ubar);
        for i in 0..k {
            for j in 0..k {
                if !ubar.get(i, j) {
                    u[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
        let beams = BeamPair { v, u, vbar, ubar };
        let residual = beams.diagonalization_residual(&self.h);
        Ok(ClosedFormSolution { eig_index, eigenvalue, beams, residual, leakage })
    }
}

/// Closed-form beams for the `eig_index`-th eigenvector (1-based).
pub fn closed_form_beams(h: &CMatrix, eig_index: usize) -> Result<ClosedFormSolution> {
    ClosedForm::new(h)?.beams(eig_index)
}

/// Largest `|u_ik|` outside `ubar`, divided by `max|U|`.
pub fn u_leakage(u: &CMatrix, ubar: &crate::smd::SMatrix) -> f64 {
    let scale = linalg::max_abs(u).max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            if !ubar.get(i, j) {
                worst = worst.max(u[(i, j)].norm());
            }
        }
    }
    worst / scale
}

/// Ranks of the two equivalent forms of the alignment conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub expected_rank: usize,
    /// `rank M(R_k, K∖{k})` for `k = 1..K`.
    pub column_ranks: Vec<usize>,
    /// `rank M(K∖{k-1}, (k-1)↓Mr)` for `k = 1..K`.
    pub row_ranks: Vec<usize>,
}

impl AlignmentReport {
    pub fn column_form_holds(&self) -> bool {
        self.column_ranks.iter().all(|&r| r == self.expected_rank)
    }

    pub fn row_form_holds(&self) -> bool {
        self.row_ranks.iter().all(|&r| r == self.expected_rank)
    }

    pub fn holds(&self) -> bool {
        self.column_form_holds() && self.row_form_holds()
    }
}

fn rank_normalized(mut m: CMatrix) -> Result<usize> {
    linalg::normalize_columns(&mut m);
    linalg::rank_with_tol(&m, ALIGNMENT_RANK_TOL)
}

/// Evaluates both forms of the alignment conditions on `M = HV` for receive
/// cooperation order `mr`. Each form says `M^{-T}` has the `Mr`-band support.
pub fn alignment_report(m: &CMatrix, mr: usize) -> Result<AlignmentReport> {
    if !m.is_square() {
        return Err(Error::arg("alignment conditions need a square matrix"));
    }
    let k = m.nrows();
    if k < 2 || mr == 0 || mr > k {
        return Err(Error::arg(format!("Mr = {mr} invalid for K = {k}")));
    }
    let mut column_ranks = Vec::with_capacity(k);
    let mut row_ranks = Vec::with_capacity(k);
    for kk in 1..=k {
        let others = IndexSet::new(vec![kk])?.complement(k);
        column_ranks.push(rank_normalized(submatrix(m, &up_set(kk, mr, k)?, &others)?)?);
        let prev = crate::channel::wrap(kk as i64 - 1, k);
        let rows = IndexSet::new(vec![prev])?.complement(k);
        row_ranks.push(rank_normalized(submatrix(m, &rows, &down_set(prev, mr, k)?)?)?);
    }
    Ok(AlignmentReport { expected_rank: mr - 1, column_ranks, row_ranks })
}

/// True iff both forms of the alignment conditions hold.
pub fn verify_alignment_conditions(m: &CMatrix, mr: usize) -> bool {
    alignment_report(m, mr).is_ok_and(|r| r.holds())
}
