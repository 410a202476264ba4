//! Cadambe-Jafar alignment subspaces over `L` parallel channels and
//! full-rank decodability checks for the two derived-channel schemes.
//!
//! Given diagonal generators `G_1..G_N` (stored as their diagonals), the
//! order-`n` CJ matrix has one column `(Π_i G_i^{a_i}) · 1` per exponent
//! vector `a` with `Σ a_i ≤ n`. Every transmitter uses the order-`n` matrix
//! `V` as its beam; interference then lands inside the order-`n+1` matrix
//! `INT`, and receiver `k` decodes iff its matrix `M_k` has full column rank.

use serde::{Deserialize, Serialize};

use crate::derived::{interference_generators, DerivedChannel, Scheme};
use crate::linalg::{self, CMatrix, C64};
use crate::{Error, Rational, Result};

/// Largest exponent list [`enumerate_exponents`] will build.
pub const MAX_EXPONENTS: u128 = 1_000_000;
/// Hard cap on the number of parallel channels of a decodability check.
pub const MAX_PARALLEL: usize = 4096;
/// Above this many parallel channels the rank decisions are reported with a
/// conditioning warning.
pub const CONDITIONING_WARN_PARALLEL: usize = 512;
/// Relative rank tolerance for `M_k`: singular values at most
/// `CJ_RANK_TOL · σ_max` of the equilibrated matrix (rows, then columns
/// scaled to unit norm) count as zero.
pub const CJ_RANK_TOL: f64 = 1e-9;

/// `C(a + b, b)`, or `None` past `u128`.
pub fn binomial(top: u64, bottom: u64) -> Option<u128> {
    let bottom = bottom.min(top - bottom.min(top));
    let mut acc: u128 = 1;
    for i in 0..bottom {
        acc = acc.checked_mul((top - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// All exponent vectors of length `n_gen` with total degree `≤ order`,
/// graded by degree and lexicographically descending within a degree.
pub fn enumerate_exponents(n_gen: usize, order: u32) -> Result<Vec<Vec<u32>>> {
    if n_gen == 0 {
        return Err(Error::arg("at least one generator is required"));
    }
    let count = binomial(n_gen as u64 + order as u64, order as u64).unwrap_or(u128::MAX);
    if count > MAX_EXPONENTS {
        return Err(Error::Resource(format!(
            "{count} exponent vectors for N = {n_gen}, n = {order} exceeds the limit of {MAX_EXPONENTS}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0u32; n_gen];
    for degree in 0..=order {
        fill(&mut current, 0, degree, &mut out);
    }
    Ok(out)
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.to_vec());
        return;
    }
    for a in (0..=remaining).rev() {
        current[pos] = a;
        fill(current, pos + 1, remaining - a, out);
    }
    current[pos] = 0;
}

/// Order-`n` CJ matrix with its generators and exponent list.
#[derive(Clone, Debug, PartialEq)]
pub struct CjBasis {
    /// Diagonals of the generators, each of length `L`.
    pub generators: Vec<Vec<C64>>,
    pub order: u32,
    pub exponents: Vec<Vec<u32>>,
    pub matrix: CMatrix,
}

impl CjBasis {
    pub fn new(generators: Vec<Vec<C64>>, order: u32) -> Result<Self> {
        let l = generators.first().map(Vec::len).ok_or_else(|| Error::arg("at least one generator is required"))?;
        if l == 0 || generators.iter().any(|g| g.len() != l) {
            return Err(Error::arg("generator diagonals must share one nonzero length"));
        }
        let exponents = enumerate_exponents(generators.len(), order)?;
        let matrix = CMatrix::from_fn(l, exponents.len(), |r, c| {
            exponents[c].iter().zip(&generators).filter(|(a, _)| **a > 0).map(|(&a, g)| g[r].powu(a)).product()
        });
        Ok(CjBasis { generators, order, exponents, matrix })
    }

    pub fn l(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn columns(&self) -> usize {
        self.matrix.ncols()
    }
}

/// The order-`n` CJ matrix of the diagonals `generators`.
pub fn cj_matrix(generators: &[Vec<C64>], order: u32) -> Result<CMatrix> {
    Ok(CjBasis::new(generators.to_vec(), order)?.matrix)
}

/// `diag(d) · m`.
pub fn scale_rows(d: &[C64], m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| d[r] * m[(r, c)])
}

/// Column counts and the square-making `L` of a scheme at order `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CjDimensions {
    pub generators: usize,
    pub v_columns: usize,
    pub int_columns: usize,
    pub l: usize,
}

fn dims(generators: usize, signal_blocks: usize, order: u32) -> Result<CjDimensions> {
    let v = binomial(generators as u64 + order as u64, order as u64);
    let int = binomial(generators as u64 + order as u64 + 1, order as u64 + 1);
    let l = match (v, int) {
        (Some(v), Some(int)) => (signal_blocks as u128).checked_mul(v).and_then(|x| x.checked_add(int)),
        _ => None,
    };
    match (v, int, l) {
        (Some(v), Some(int), Some(l)) if l <= MAX_PARALLEL as u128 => {
            Ok(CjDimensions { generators, v_columns: v as usize, int_columns: int as usize, l: l as usize })
        }
        _ => Err(Error::Resource(format!(
            "alignment order {order} with {generators} generators needs more than {MAX_PARALLEL} parallel channels"
        ))),
    }
}

/// Dimensions of the `Mt = K-2` scheme: `N = K·Mt`, `L = Mt|V| + |INT|`.
pub fn km2_dimensions(k: usize, order: u32) -> Result<CjDimensions> {
    let gens = interference_generators(Scheme::Km2, k, k.saturating_sub(2))?.len();
    dims(gens, k - 2, order)
}

/// Dimensions of the general scheme: `N = (K-Mt+1)(K+Mt-2)`, `L = |V| + |INT|`.
pub fn general_dimensions(k: usize, mt: usize, order: u32) -> Result<CjDimensions> {
    let gens = interference_generators(Scheme::General, k, mt)?.len();
    dims(gens, 1, order)
}

/// Required `L` for a scheme, so callers can sample the channel.
pub fn required_parallel_channels(scheme: Scheme, k: usize, mt: usize, order: u32) -> Result<usize> {
    match scheme {
        Scheme::Km2 => {
            if mt + 2 != k {
                return Err(Error::arg(format!("Mt = K-2 scheme needs Mt = {}, got {mt}", k.saturating_sub(2))));
            }
            Ok(km2_dimensions(k, order)?.l)
        }
        Scheme::General => Ok(general_dimensions(k, mt, order)?.l),
        Scheme::Cellular => Err(Error::arg("the Mt < K-2 cellular transform has no alignment scheme")),
    }
}

fn check_l(dc: &DerivedChannel, want: usize) -> Result<()> {
    if dc.l != want {
        return Err(Error::arg(format!("this scheme and order need L = {want} parallel channels, got {}", dc.l)));
    }
    if want > CONDITIONING_WARN_PARALLEL {
        log::warn!("L = {want}: rank decisions on matrices this large may be poorly conditioned");
    }
    Ok(())
}

fn basis(dc: &DerivedChannel, order: u32) -> Result<CjBasis> {
    let gens = interference_generators(dc.scheme, dc.k, dc.mt)?
        .into_iter()
        .map(|(i, j, m)| dc.series(i, j, m).to_vec())
        .collect();
    CjBasis::new(gens, order)
}

/// `M_k = [G_kk^(1) V .. G_kk^(Mt) V  INT]` for every receiver, each `L x L`.
pub fn build_mk_km2(dc: &DerivedChannel, order: u32) -> Result<Vec<CMatrix>> {
    if dc.scheme != Scheme::Km2 {
        return Err(Error::arg("build_mk_km2 needs an Mt = K-2 derived channel"));
    }
    check_l(dc, km2_dimensions(dc.k, order)?.l)?;
    let v = basis(dc, order)?;
    let int = cj_matrix(&v.generators, order + 1)?;
    Ok((1..=dc.k)
        .map(|k| {
            let mut blocks: Vec<CMatrix> = (1..=dc.mt).map(|m| scale_rows(dc.series(k, k, m), &v.matrix)).collect();
            blocks.push(int.clone());
            hcat(&blocks)
        })
        .collect())
}

/// `M_k = [G_kk^(1) V  G_kk^(2) V]` for receivers `k < Mt` (tall) and
/// `M_k = [G_kk^(1) V  INT]` (square) for `k ≥ Mt`.
pub fn build_mk_general(dc: &DerivedChannel, order: u32) -> Result<Vec<CMatrix>> {
    if dc.scheme != Scheme::General {
        return Err(Error::arg("build_mk_general needs a general-scheme derived channel"));
    }
    check_l(dc, general_dimensions(dc.k, dc.mt, order)?.l)?;
    let v = basis(dc, order)?;
    let int = cj_matrix(&v.generators, order + 1)?;
    Ok((1..=dc.k)
        .map(|k| {
            let first = scale_rows(dc.series(k, k, 1), &v.matrix);
            let second = if k < dc.mt { scale_rows(dc.series(k, k, 2), &v.matrix) } else { int.clone() };
            hcat(&[first, second])
        })
        .collect())
}

fn hcat(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks[0].nrows();
    let cols = blocks.iter().map(CMatrix::ncols).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiverRank {
    pub receiver: usize,
    pub rows: usize,
    pub columns: usize,
    pub rank: usize,
    /// `σ_min / σ_max` of the equilibrated matrix.
    pub rcond: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodabilityReport {
    pub l: usize,
    pub rank_tol: f64,
    pub receivers: Vec<ReceiverRank>,
    pub pass: bool,
}

/// Numeric rank of every `M_k` after row and column equilibration; passes iff each
/// has full column rank. Non-finite matrices count as rank 0.
pub fn verify_decodability(mks: &[CMatrix]) -> DecodabilityReport {
    let receivers: Vec<ReceiverRank> = mks
        .iter()
        .enumerate()
        .map(|(idx, m)| {
            // Diagonal scaling leaves the rank unchanged; monomial columns
            // span many orders of magnitude across rows without it.
            let mut normalized = m.clone();
            linalg::normalize_rows(&mut normalized);
            linalg::normalize_columns(&mut normalized);
            let (rank, rcond) = if linalg::is_finite(&normalized) {
                let sv = linalg::singular_values(&normalized);
                let smax = sv.first().copied().unwrap_or(0.0);
                let thresh = CJ_RANK_TOL * smax;
                let rank = if smax > 0.0 { sv.iter().filter(|&&s| s > thresh).count() } else { 0 };
                let rcond = if smax > 0.0 && sv.len() == m.ncols() { sv[sv.len() - 1] / smax } else { 0.0 };
                (rank, rcond)
            } else {
                (0, 0.0)
            };
            ReceiverRank {
                receiver: idx + 1,
                rows: m.nrows(),
                columns: m.ncols(),
                rank,
                rcond,
                pass: rank == m.ncols(),
            }
        })
        .collect();
    let pass = !receivers.is_empty() && receivers.iter().all(|r| r.pass);
    DecodabilityReport { l: mks.first().map_or(0, CMatrix::nrows), rank_tol: CJ_RANK_TOL, receivers, pass }
}

/// Alignment order: a finite `n`, or the `n → ∞` limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentOrder {
    Finite(u32),
    Limit,
}

/// Exact sum DoF of a scheme:
/// - `Km2`: `K·Mt / (Mt + 1 + K·Mt/(n+1))`, limit `K·Mt/(Mt+1)`.
/// - `General`: `(K+Mt-1) / (2 + N/(n+1))`, limit `(K+Mt-1)/2`.
pub fn achievable_dof(k: usize, mt: usize, scheme: Scheme, order: AlignmentOrder) -> Result<Rational> {
    let (streams, fixed, gens) = match scheme {
        Scheme::Km2 => {
            if k < 4 || mt + 2 != k {
                return Err(Error::arg(format!("Mt = K-2 scheme needs K >= 4 and Mt = K-2, got K = {k}, Mt = {mt}")));
            }
            (k * mt, mt + 1, k * mt)
        }
        Scheme::General => (k + mt - 1, 2, interference_generators(scheme, k, mt)?.len()),
        Scheme::Cellular => return Err(Error::arg("the Mt < K-2 cellular transform has no alignment scheme")),
    };
    let (streams, fixed, gens) = (streams as i64, fixed as i64, gens as i64);
    Ok(match order {
        AlignmentOrder::Limit => Rational::new(streams, fixed),
        AlignmentOrder::Finite(n) => {
            let n1 = n as i64 + 1;
            Rational::new(streams * n1, fixed * n1 + gens)
        }
    })
}
