//! Zero-forcing transforms from the CoMP channel to derived
//! cellular-uplink-like channels.
//!
//! Cell `j` owns the transmit set `T_j` and drives one or more virtual
//! inputs `X_j^(m)` through beams supported on `T_j`. Receiver `i` sees
//! `g_ij^(m) = H(i, T_j) v_j^(m)`. Two beam designs are provided:
//!
//! - [`Scheme::Km2`] (`Mt = K-2`): `V_j = H(T_{j+1}, T_j)^{-1}` makes every
//!   coefficient into `T_{j+1}` equal to 0 or 1, leaving `g_jj^(m)` and
//!   `g_{j-1,j}^(m)` as the only nontrivial ones.
//! - [`Scheme::General`] (`2 ≤ Mt ≤ K-1`): cofactor beams that keep
//!   receivers `1..Mt-1` free of interference. Cells `j ≥ Mt` send one stream
//!   on `T_j` nulled at `1..Mt-1`; cells `j < Mt` send two streams, on the
//!   first and on the last `Mt-1` antennas of `T_j`, each nulled at
//!   `{1..Mt-1} ∖ {j}`.
//!
//! Transforms act on each parallel channel independently.

use serde::{Deserialize, Serialize};

use crate::algebra::{RationalMap, RowInverseMap, RowInverseTerm};
use crate::channel::{submatrix, up_set, ChannelRealization, CooperationPattern, IndexSet};
use crate::linalg::{self, CMatrix, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Km2,
    General,
    /// `V_k = H(T_{k+1}, T_k)^{-1}` with `Mt < K-2`.
    Cellular,
}

/// Whether a derived coefficient is free or pinned by the beam design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    Free,
    ForcedZero,
    ForcedOne,
}

impl Triviality {
    pub fn forced_value(self) -> Option<C64> {
        match self {
            Triviality::Free => None,
            Triviality::ForcedZero => Some(C64::new(0.0, 0.0)),
            Triviality::ForcedOne => Some(C64::new(1.0, 0.0)),
        }
    }
}

/// Derived coefficients `g_ij^(m)(ℓ)` with their triviality mask.
///
/// Storage is 0-based (`coeffs[i-1][j-1][m-1][ℓ-1]`); the accessors take
/// 1-based receiver, cell, stream and channel indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedChannel {
    pub k: usize,
    pub mt: usize,
    pub l: usize,
    pub scheme: Scheme,
    /// Number of streams of each cell.
    pub streams: Vec<usize>,
    pub coeffs: Vec<Vec<Vec<Vec<C64>>>>,
    pub mask: Vec<Vec<Vec<Triviality>>>,
}

impl DerivedChannel {
    fn empty(k: usize, mt: usize, l: usize, scheme: Scheme, streams: Vec<usize>) -> Self {
        let coeffs = (0..k).map(|_| streams.iter().map(|&s| vec![vec![C64::new(0.0, 0.0); l]; s]).collect()).collect();
        let mask = (0..k).map(|_| streams.iter().map(|&s| vec![Triviality::Free; s]).collect()).collect();
        DerivedChannel { k, mt, l, scheme, streams, coeffs, mask }
    }

    pub fn streams_of(&self, j: usize) -> usize {
        self.streams[j - 1]
    }

    pub fn coeff(&self, i: usize, j: usize, m: usize, ell: usize) -> C64 {
        self.coeffs[i - 1][j - 1][m - 1][ell - 1]
    }

    /// `g_ij^(m)(ℓ)` for `ℓ = 1..L`: the diagonal of `G_ij^(m)`.
    pub fn series(&self, i: usize, j: usize, m: usize) -> &[C64] {
        &self.coeffs[i - 1][j - 1][m - 1]
    }

    pub fn triviality(&self, i: usize, j: usize, m: usize) -> Triviality {
        self.mask[i - 1][j - 1][m - 1]
    }

    /// All `(i, j, m)` triples, 1-based, in storage order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (1..=self.k)
            .flat_map(move |i| (1..=self.k).flat_map(move |j| (1..=self.streams[j - 1]).map(move |m| (i, j, m))))
    }

    /// Triples whose coefficient is not pinned by the beam design.
    pub fn free_links(&self) -> Vec<(usize, usize, usize)> {
        self.links().filter(|&(i, j, m)| self.triviality(i, j, m) == Triviality::Free).collect()
    }

    /// Cells `j` with a free link into receiver `i` other than `j = i`.
    pub fn interferers_of(&self, i: usize) -> Vec<(usize, usize)> {
        self.free_links().into_iter().filter(|&(r, j, _)| r == i && j != i).map(|(_, j, m)| (j, m)).collect()
    }
}

/// Beam supported on `support` that vanishes at the receivers `nulls`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZfBeam {
    pub support: IndexSet,
    pub nulls: IndexSet,
    pub coefficients: Vec<C64>,
    /// True when `H(nulls, support)` is rank deficient and the cofactor
    /// beam collapsed to zero.
    pub degenerate: bool,
}

/// Cofactor beam: `c_j = (-1)^{n+j} det H(nulls, support ∖ {support_j})`
/// with `n = |support|`, so that `H(i, support) · c = det H(nulls ∪ {i}, support)`
/// with row `i` placed last.
pub fn zf_beam_from_nulls(h: &CMatrix, support: &IndexSet, nulls: &IndexSet) -> Result<ZfBeam> {
    let n = support.len();
    if n != nulls.len() + 1 {
        return Err(Error::arg(format!(
            "a cofactor beam needs |support| = |nulls| + 1, got {} and {}",
            n,
            nulls.len()
        )));
    }
    let block = submatrix(h, nulls, support)?;
    let coefficients: Vec<C64> = (0..n)
        .map(|c| {
            let minor = block.clone().remove_column(c);
            let sign = if (n + c + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
            linalg::determinant(&minor) * sign
        })
        .collect();
    let scale = linalg::max_abs(&block).max(f64::MIN_POSITIVE).powi(n as i32 - 1);
    let degenerate = coefficients.iter().all(|z| z.norm() <= 1e-13 * scale);
    Ok(ZfBeam { support: support.clone(), nulls: nulls.clone(), coefficients, degenerate })
}

impl ZfBeam {
    /// `H(i, support) · beam` for a 1-based receiver `i`.
    pub fn gain(&self, h: &CMatrix, i: usize) -> C64 {
        self.support.iter().zip(&self.coefficients).map(|(s, c)| h[(i - 1, s - 1)] * c).sum()
    }
}

fn check_realization(real: &ChannelRealization) -> Result<()> {
    if !real.is_finite() {
        return Err(Error::arg("channel realization has non-finite entries"));
    }
    Ok(())
}

/// `Mt = K-2` transform: `V_k = H(T_{k+1}, T_k)^{-1}` in every cell.
pub fn zf_transform_km2(real: &ChannelRealization) -> Result<DerivedChannel> {
    if real.k < 4 {
        return Err(Error::arg(format!("the Mt = K-2 construction needs K >= 4, got {}", real.k)));
    }
    cellular_transform(real, real.k - 2)
}

/// Cellular transform with `V_k = H(T_{k+1}, T_k)^{-1}` for any `1 ≤ Mt ≤ K-2`.
/// Coefficients into `T_{k+1}` are pinned to 0/1; for `Mt < K-2` each virtual
/// transmitter still interferes at `K - Mt` receivers.
pub fn cellular_transform(real: &ChannelRealization, mt: usize) -> Result<DerivedChannel> {
    check_realization(real)?;
    let k = real.k;
    if mt == 0 || mt + 2 > k {
        return Err(Error::arg(format!("cellular transform needs 1 <= Mt <= K-2, got Mt = {mt}, K = {k}")));
    }
    let p = CooperationPattern::new(k, mt, 1, real.l)?;
    let scheme = if mt == k - 2 { Scheme::Km2 } else { Scheme::Cellular };
    let mut dc = DerivedChannel::empty(k, mt, real.l, scheme, vec![mt; k]);
    for cell in 1..=k {
        let tx = p.transmit_set(cell as i64);
        let next = p.transmit_set(cell as i64 + 1);
        for i in next.iter() {
            for m in 1..=mt {
                let one = crate::channel::wrap((cell + m) as i64, k) == i;
                dc.mask[i - 1][cell - 1][m - 1] = if one { Triviality::ForcedOne } else { Triviality::ForcedZero };
            }
        }
        for (ell, h) in real.parallel.iter().enumerate() {
            let inner = submatrix(h, &next, &tx)?;
            let vk = linalg::checked_inverse(&inner, &format!("H(T_{}, T_{cell}) on channel {}", cell + 1, ell + 1))?;
            let g = submatrix(h, &IndexSet::full(k), &tx)? * vk;
            for i in 0..k {
                for m in 0..mt {
                    dc.coeffs[i][cell - 1][m][ell] = g[(i, m)];
                }
            }
        }
    }
    Ok(dc)
}

/// Support and null set of every stream of the general design, indexed
/// `[cell - 1][stream - 1]`.
pub fn general_beam_layout(k: usize, mt: usize) -> Result<Vec<Vec<(IndexSet, IndexSet)>>> {
    if mt < 2 || mt >= k {
        return Err(Error::arg(format!("general transform needs 2 <= Mt <= K-1, got Mt = {mt}, K = {k}")));
    }
    let p = CooperationPattern::new(k, mt, 1, 1)?;
    let protected = IndexSet::full(mt - 1);
    let mut layout = Vec::with_capacity(k);
    for j in 1..=k {
        if j < mt {
            let nulls = protected.without(j);
            let first = up_set(j, mt - 1, k)?;
            let last = up_set(crate::channel::wrap(j as i64 + 1, k), mt - 1, k)?;
            layout.push(vec![(first, nulls.clone()), (last, nulls)]);
        } else {
            layout.push(vec![(p.transmit_set(j as i64), protected.clone())]);
        }
    }
    Ok(layout)
}

/// General transform with cofactor beams; receivers `1..Mt-1` see only
/// their own two streams.
pub fn zf_transform_general(real: &ChannelRealization, mt: usize) -> Result<DerivedChannel> {
    check_realization(real)?;
    let k = real.k;
    let layout = general_beam_layout(k, mt)?;
    let streams = layout.iter().map(Vec::len).collect();
    let mut dc = DerivedChannel::empty(k, mt, real.l, Scheme::General, streams);
    for (j, cell) in layout.iter().enumerate() {
        for (m, (support, nulls)) in cell.iter().enumerate() {
            for i in nulls.iter() {
                dc.mask[i - 1][j][m] = Triviality::ForcedZero;
            }
            for (ell, h) in real.parallel.iter().enumerate() {
                let beam = zf_beam_from_nulls(h, support, nulls)?;
                if beam.degenerate {
                    log::warn!(
                        "degenerate zero-forcing beam for cell {} stream {} on channel {}",
                        j + 1,
                        m + 1,
                        ell + 1
                    );
                }
                for i in 1..=k {
                    dc.coeffs[i - 1][j][m][ell] = beam.gain(h, i);
                }
            }
        }
    }
    Ok(dc)
}

/// Whether every pinned coefficient equals its pinned value to within
/// `tol · max(1, s)`, where `s` is the largest free coefficient of the same
/// stream on the same parallel channel.
pub fn verify_triviality(dc: &DerivedChannel, tol: f64) -> bool {
    triviality_error(dc) <= tol
}

/// Largest scaled deviation of a pinned coefficient from its pinned value.
pub fn triviality_error(dc: &DerivedChannel) -> f64 {
    let mut worst = 0.0_f64;
    for j in 1..=dc.k {
        for m in 1..=dc.streams_of(j) {
            for ell in 0..dc.l {
                let scale = (1..=dc.k)
                    .filter(|&i| dc.triviality(i, j, m) == Triviality::Free)
                    .map(|i| dc.coeffs[i - 1][j - 1][m - 1][ell].norm())
                    .fold(1.0_f64, f64::max);
                for i in 1..=dc.k {
                    if let Some(v) = dc.triviality(i, j, m).forced_value() {
                        let dev = (dc.coeffs[i - 1][j - 1][m - 1][ell] - v).norm() / scale;
                        worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
                    }
                }
            }
        }
    }
    worst
}

/// Interference generators `(i, j, m)` of the alignment scheme.
///
/// - `Km2`: `g_{i,i+1}^(m)` for `i = 1..K`, `m = 1..Mt` (`K·Mt` of them).
/// - `General`: `g_ij^(1), g_ij^(2)` for `i ≥ Mt`, `j < Mt`, then `g_ij^(1)`
///   for `i ≠ j`, both `≥ Mt`; `(K-Mt+1)(K+Mt-2)` in total.
pub fn interference_generators(scheme: Scheme, k: usize, mt: usize) -> Result<Vec<(usize, usize, usize)>> {
    match scheme {
        Scheme::Km2 => {
            if k < 4 || mt != k - 2 {
                return Err(Error::arg(format!("Mt = K-2 scheme needs K >= 4 and Mt = K-2, got K = {k}, Mt = {mt}")));
            }
            Ok((1..=k).flat_map(|i| (1..=mt).map(move |m| (i, crate::channel::wrap(i as i64 + 1, k), m))).collect())
        }
        Scheme::General => {
            general_beam_layout(k, mt)?;
            let mut g = Vec::new();
            for i in mt..=k {
                for j in 1..mt {
                    g.push((i, j, 1));
                    g.push((i, j, 2));
                }
            }
            for i in mt..=k {
                for j in mt..=k {
                    if i != j {
                        g.push((i, j, 1));
                    }
                }
            }
            Ok(g)
        }
        Scheme::Cellular => Err(Error::arg("the Mt < K-2 cellular transform has no alignment scheme")),
    }
}

/// Determinants `det H(rows, cols)` of listed submatrices, as a map from the
/// row-major `K^2` channel entries. Row order matters for the sign.
#[derive(Clone, Debug)]
pub struct MinorMap {
    pub k: usize,
    pub minors: Vec<(IndexSet, IndexSet)>,
}

impl MinorMap {
    /// Exact Jacobian: `∂ det X / ∂ x_pq` is the `(p, q)` cofactor.
    pub fn analytic_jacobian(&self, t: &[C64]) -> Result<CMatrix> {
        let k = self.k;
        let h = CMatrix::from_row_slice(k, k, t);
        let mut jac = CMatrix::zeros(self.minors.len(), k * k);
        for (out, (rows, cols)) in self.minors.iter().enumerate() {
            let x = submatrix(&h, rows, cols)?;
            let n = x.nrows();
            for (p, i) in rows.iter().enumerate() {
                for (q, j) in cols.iter().enumerate() {
                    let minor = x.clone().remove_row(p).remove_column(q);
                    let sign = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
                    let cof = if n == 1 { C64::new(1.0, 0.0) } else { linalg::determinant(&minor) };
                    jac[(out, (i - 1) * k + (j - 1))] += cof * sign;
                }
            }
        }
        Ok(jac)
    }
}

impl RationalMap for MinorMap {
    fn n_inputs(&self) -> usize {
        self.k * self.k
    }

    fn n_outputs(&self) -> usize {
        self.minors.len()
    }

    fn eval(&self, t: &[C64]) -> Result<Vec<C64>> {
        if t.len() != self.k * self.k {
            return Err(Error::arg(format!("expected {} channel entries, got {}", self.k * self.k, t.len())));
        }
        let h = CMatrix::from_row_slice(self.k, self.k, t);
        self.minors.iter().map(|(rows, cols)| Ok(linalg::determinant(&submatrix(&h, rows, cols)?))).collect()
    }
}

/// Coefficients that must be algebraically independent for receiver
/// `receiver` of the general scheme to decode: its own signal gains
/// (`g_kk^(1), g_kk^(2)` when `k < Mt`, `g_kk^(1)` otherwise) followed by
/// every interference generator. Each is `det H(nulls ∪ {i}, support)`.
pub fn general_coefficient_map(k: usize, mt: usize, receiver: usize) -> Result<MinorMap> {
    if receiver == 0 || receiver > k {
        return Err(Error::arg(format!("receiver {receiver} outside 1..={k}")));
    }
    let layout = general_beam_layout(k, mt)?;
    let own = if receiver < mt { 2 } else { 1 };
    let mut links: Vec<(usize, usize, usize)> = (1..=own).map(|m| (receiver, receiver, m)).collect();
    links.extend(interference_generators(Scheme::General, k, mt)?);
    let minors = links
        .into_iter()
        .map(|(i, j, m)| {
            let (support, nulls) = &layout[j - 1][m - 1];
            (nulls.with(i), support.clone())
        })
        .collect();
    Ok(MinorMap { k, minors })
}

/// Coefficients seen by `receiver` in the cellular transform with
/// `1 ≤ Mt ≤ K-2`: `g_kk^(m)` and, for every cell `i`, `g_{i,i+d}^(m)` with
/// `d = 1..K-Mt-1`. There are `(1 + (K-Mt-1)K)·Mt` of them; for `Mt = K-2`
/// this is the `(K+1)·Mt` family whose independence drives the alignment.
pub fn cellular_coefficient_map(k: usize, mt: usize, receiver: usize) -> Result<RowInverseMap> {
    if mt == 0 || mt + 2 > k {
        return Err(Error::arg(format!("cellular transform needs 1 <= Mt <= K-2, got Mt = {mt}, K = {k}")));
    }
    if receiver == 0 || receiver > k {
        return Err(Error::arg(format!("receiver {receiver} outside 1..={k}")));
    }
    let p = CooperationPattern::new(k, mt, 1, 1)?;
    let term =
        |row: usize, cell: i64| RowInverseTerm { row, cols: p.transmit_set(cell), rows: p.transmit_set(cell + 1) };
    let mut terms = vec![term(receiver, receiver as i64)];
    for i in 1..=k {
        for d in 1..=(k - mt - 1) as i64 {
            terms.push(term(i, i as i64 + d));
        }
    }
    RowInverseMap::new(k, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{is_algebraically_independent, numeric_jacobian, regular_point, DEFAULT_STEP};
    use crate::channel::sample_channel;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn km2_topology_for_four_users() {
        let real = sample_channel(4, 3, 1).unwrap();
        let dc = zf_transform_km2(&real).unwrap();
        assert!(verify_triviality(&dc, 1e-10));
        for i in 1..=4 {
            let mut signal = 0;
            let mut free_interference = 0;
            let mut unit = 0;
            for j in 1..=4 {
                for m in 1..=2 {
                    match (dc.triviality(i, j, m), i == j) {
                        (Triviality::Free, true) => signal += 1,
                        (Triviality::Free, false) => free_interference += 1,
                        (Triviality::ForcedOne, _) => unit += 1,
                        _ => {}
                    }
                }
            }
            assert_eq!((signal, free_interference, unit), (2, 2, 2), "receiver {i}");
        }
        // dotted links of the 4-user figure: X_1^(1) -> Y_2, X_1^(2) -> Y_3
        assert_eq!(dc.triviality(2, 1, 1), Triviality::ForcedOne);
        assert_eq!(dc.triviality(3, 1, 2), Triviality::ForcedOne);
        assert_eq!(dc.triviality(4, 1, 1), Triviality::Free);
    }

    #[test]
    fn km2_five_users_interfere_at_two_receivers() {
        let real = sample_channel(5, 2, 4).unwrap();
        let dc = zf_transform_km2(&real).unwrap();
        for j in 1..=5 {
            for m in 1..=3 {
                let hit: Vec<usize> =
                    (1..=5).filter(|&i| i != j && dc.triviality(i, j, m) != Triviality::ForcedZero).collect();
                assert_eq!(hit.len(), 2, "cell {j} stream {m}");
            }
        }
        assert_eq!(dc.free_links().len(), 2 * 5 * 3);
    }

    #[test]
    fn corrupted_forced_entry_fails_triviality() {
        let real = sample_channel(4, 1, 2).unwrap();
        let mut dc = zf_transform_km2(&real).unwrap();
        assert!(verify_triviality(&dc, 1e-10));
        dc.coeffs[1][0][0][0] += C64::new(1e-3, 0.0);
        assert!(!verify_triviality(&dc, 1e-10));
        let mut all_free = dc.clone();
        for row in all_free.mask.iter_mut().flatten().flatten() {
            *row = Triviality::Free;
        }
        assert!(verify_triviality(&all_free, 1e-10));
    }

    #[test]
    fn cofactor_beam_examples() {
        let h = crate::channel::sample_matrix(5, 6);
        let support = set(&[2, 3, 4]);
        let nulls = set(&[1, 5]);
        let beam = zf_beam_from_nulls(&h, &support, &nulls).unwrap();
        let scale: f64 = beam.coefficients.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in nulls.iter() {
            assert!(beam.gain(&h, i).norm() < 1e-12 * scale);
        }
        for i in [2, 3, 4] {
            let direct = linalg::determinant(&submatrix(&h, &nulls.with(i), &support).unwrap());
            assert!((beam.gain(&h, i) - direct).norm() < 1e-10 * direct.norm().max(1.0));
        }
        let h2 = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(4.0, 0.0)],
        );
        let b = zf_beam_from_nulls(&h2, &set(&[1, 2]), &set(&[1])).unwrap();
        assert_eq!(b.coefficients, vec![C64::new(-2.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(zf_beam_from_nulls(&h2, &set(&[1]), &set(&[1])).is_err());
        let zero = CMatrix::zeros(3, 3);
        assert!(zf_beam_from_nulls(&zero, &set(&[1, 2]), &set(&[3])).unwrap().degenerate);
    }

    #[test]
    fn general_topology_for_four_users() {
        let real = sample_channel(4, 2, 3).unwrap();
        let dc = zf_transform_general(&real, 2).unwrap();
        assert_eq!(dc.streams, vec![2, 1, 1, 1]);
        assert!(verify_triviality(&dc, 1e-10));
        assert!(dc.interferers_of(1).is_empty());
        for i in 2..=4 {
            let expect: usize = (1..=4).filter(|&j| j != i).map(|j| dc.streams_of(j)).sum();
            assert_eq!(dc.interferers_of(i).len(), expect, "receiver {i}");
        }
    }

    #[test]
    fn general_protected_receivers_are_interference_free() {
        for k in 4..=6 {
            for mt in 2..=3 {
                let real = sample_channel(k, 2, (k * 10 + mt) as u64).unwrap();
                let dc = zf_transform_general(&real, mt).unwrap();
                assert!(verify_triviality(&dc, 1e-10), "K = {k}, Mt = {mt}");
                for i in 1..mt {
                    assert!(dc.interferers_of(i).is_empty());
                }
            }
        }
    }

    #[test]
    fn general_gain_is_a_determinant() {
        let real = sample_channel(5, 1, 8).unwrap();
        let h = &real.parallel[0];
        let dc = zf_transform_general(&real, 3).unwrap();
        // cell j >= Mt: g_ij = det H({1, .., Mt-1, i}, T_j)
        let direct = linalg::determinant(&submatrix(h, &set(&[1, 2, 4]), &set(&[3, 4, 5])).unwrap());
        assert!((dc.coeff(4, 3, 1, 1) - direct).norm() < 1e-10 * direct.norm().max(1.0));
        // cell 1 < Mt, stream 2 on antennas {2, 3}, nulled at {2}
        let direct = linalg::determinant(&submatrix(h, &set(&[2, 5]), &set(&[2, 3])).unwrap());
        assert!((dc.coeff(5, 1, 2, 1) - direct).norm() < 1e-10 * direct.norm().max(1.0));
    }

    #[test]
    fn scaling_degrees() {
        for seed in 0..5 {
            let real = sample_channel(5, 1, seed).unwrap();
            let c = C64::new(1.3, -0.4);
            let scaled = ChannelRealization::from_matrices(vec![&real.parallel[0] * c]).unwrap();
            let a = zf_transform_general(&real, 3).unwrap();
            let b = zf_transform_general(&scaled, 3).unwrap();
            for (i, j, m) in a.free_links() {
                let degree = if j >= 3 { 3 } else { 2 };
                let expect = a.coeff(i, j, m, 1) * c.powu(degree);
                assert!((b.coeff(i, j, m, 1) - expect).norm() < 1e-10 * expect.norm().max(1.0));
            }
            let a = zf_transform_km2(&real).unwrap();
            let b = zf_transform_km2(&scaled).unwrap();
            for (i, j, m) in a.free_links() {
                assert!(
                    (b.coeff(i, j, m, 1) - a.coeff(i, j, m, 1)).norm() < 1e-10 * a.coeff(i, j, m, 1).norm().max(1.0)
                );
            }
        }
    }

    #[test]
    fn generator_counts() {
        assert_eq!(interference_generators(Scheme::Km2, 4, 2).unwrap().len(), 8);
        assert_eq!(interference_generators(Scheme::General, 4, 2).unwrap().len(), 12);
        for k in 3..=8 {
            for mt in 2..k {
                let n = interference_generators(Scheme::General, k, mt).unwrap().len();
                assert_eq!(n, (k - mt + 1) * (k + mt - 2));
            }
        }
    }

    #[test]
    fn minor_map_analytic_jacobian_matches_numeric() {
        let map = general_coefficient_map(5, 3, 1).unwrap();
        let t = regular_point(&map, 4).unwrap();
        let a = map.analytic_jacobian(&t).unwrap();
        let n = numeric_jacobian(&map, &t, DEFAULT_STEP).unwrap();
        assert!((&a - &n).norm() < 1e-7 * a.norm());
    }

    #[test]
    fn cellular_map_matches_km2_coefficients() {
        let real = sample_channel(5, 1, 12).unwrap();
        let dc = zf_transform_km2(&real).unwrap();
        let t: Vec<C64> = real.parallel[0].transpose().iter().copied().collect();
        let out = cellular_coefficient_map(5, 3, 2).unwrap().eval(&t).unwrap();
        let mut expect: Vec<C64> = (1..=3).map(|m| dc.coeff(2, 2, m, 1)).collect();
        for i in 1..=5 {
            expect.extend((1..=3).map(|m| dc.coeff(i, crate::channel::wrap(i as i64 + 1, 5), m, 1)));
        }
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-10 * b.norm().max(1.0));
        }
    }

    #[test]
    fn km2_coefficients_are_independent() {
        let map = cellular_coefficient_map(4, 2, 1).unwrap();
        assert_eq!(map.n_outputs(), 10);
        assert!(is_algebraically_independent(&map, 3, 0).unwrap());
    }

    #[test]
    fn cellular_coefficients_are_dependent_below_k_minus_two() {
        let map = cellular_coefficient_map(5, 2, 1).unwrap();
        assert_eq!(map.n_outputs(), 22);
        assert!(map.n_outputs() < map.n_inputs());
        assert!(!is_algebraically_independent(&map, 3, 0).unwrap());
        let t = regular_point(&map, 9).unwrap();
        let jac = map.analytic_jacobian(&t).unwrap();
        assert_eq!(crate::algebra::numeric_rank(&jac, 1e-10).unwrap(), 20);
    }

    #[test]
    fn general_coefficients_are_independent() {
        for (k, mt) in [(4, 2), (5, 3)] {
            for r in 1..=k {
                let map = general_coefficient_map(k, mt, r).unwrap();
                let own = if r < mt { 2 } else { 1 };
                assert_eq!(map.n_outputs(), own + (k - mt + 1) * (k + mt - 2));
                assert!(is_algebraically_independent(&map, 3, r as u64).unwrap(), "K = {k}, Mt = {mt}, receiver {r}");
            }
        }
    }
}
