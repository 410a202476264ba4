//! Index arithmetic, cooperation sets and channel sampling.
//!
//! `k ↑ m = {k, k+1, .., k+m-1}` and `k ↓ m = {k, k-1, .., k-m+1}` with
//! indices wrapped into `1..=K`. Message `k` is transmitted from
//! `T_k = k ↑ Mt` and decoded from `R_k = k ↑ Mr`.

use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, C64};
use crate::rng::ComplexNormal;
use crate::{Error, Result};

/// Soft limit on the user count; larger values are allowed but logged.
pub const SOFT_MAX_USERS: usize = 16;
/// Soft limit on the number of parallel channels.
pub const SOFT_MAX_PARALLEL: usize = 4096;

/// Ordered, duplicate-free list of 1-based user indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = indices.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != indices.len() {
            return Err(Error::arg(format!("index set {indices:?} has duplicates")));
        }
        if indices.contains(&0) {
            return Err(Error::arg("index sets are 1-based; found 0"));
        }
        Ok(IndexSet(indices))
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    /// `{1, .., k}`.
    pub fn full(k: usize) -> Self {
        IndexSet((1..=k).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.0.iter().all(|i| other.contains(*i))
    }

    /// Indices of `1..=k` not in this set, ascending.
    pub fn complement(&self, k: usize) -> IndexSet {
        IndexSet((1..=k).filter(|i| !self.contains(*i)).collect())
    }

    /// Set with `i` appended at the end (no-op if already present).
    pub fn with(&self, i: usize) -> IndexSet {
        let mut v = self.0.clone();
        if !v.contains(&i) {
            v.push(i);
        }
        IndexSet(v)
    }

    /// Set with `i` removed.
    pub fn without(&self, i: usize) -> IndexSet {
        IndexSet(self.0.iter().copied().filter(|&x| x != i).collect())
    }

    /// Bitmask with bit `i-1` set for each member.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &i| m | (1 << (i - 1)))
    }

    pub fn from_mask(mask: u64, k: usize) -> IndexSet {
        IndexSet((1..=k).filter(|i| mask & (1 << (i - 1)) != 0).collect())
    }
}

impl std::fmt::Display for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Wraps an arbitrary integer index into `1..=k`.
pub fn wrap(i: i64, k: usize) -> usize {
    (i - 1).rem_euclid(k as i64) as usize + 1
}

fn check_window(k: usize, m: usize, users: usize) -> Result<()> {
    if users == 0 {
        return Err(Error::arg("user count must be positive"));
    }
    if k == 0 || k > users {
        return Err(Error::arg(format!("index {k} outside 1..={users}")));
    }
    if m == 0 || m > users {
        return Err(Error::arg(format!("window length {m} outside 1..={users}")));
    }
    Ok(())
}

/// `k ↑ m`: `{k, k+1, .., k+m-1}` wrapped into `1..=users`.
pub fn up_set(k: usize, m: usize, users: usize) -> Result<IndexSet> {
    check_window(k, m, users)?;
    Ok(IndexSet((0..m).map(|t| wrap((k + t) as i64, users)).collect()))
}

/// `k ↓ m`: `{k, k-1, .., k-m+1}` wrapped into `1..=users`.
pub fn down_set(k: usize, m: usize, users: usize) -> Result<IndexSet> {
    check_window(k, m, users)?;
    Ok(IndexSet((0..m).map(|t| wrap(k as i64 - t as i64, users)).collect()))
}

/// `(K, Mt, Mr, L)` with the spiral transmit and receive sets it induces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooperationPattern {
    pub k: usize,
    pub mt: usize,
    pub mr: usize,
    pub l: usize,
}

impl CooperationPattern {
    pub fn new(k: usize, mt: usize, mr: usize, l: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::arg(format!("K = {k}; need at least 2 users")));
        }
        if mt == 0 || mt > k {
            return Err(Error::arg(format!("Mt = {mt} outside 1..={k}")));
        }
        if mr == 0 || mr > k {
            return Err(Error::arg(format!("Mr = {mr} outside 1..={k}")));
        }
        if l == 0 {
            return Err(Error::arg("L must be at least 1"));
        }
        if k > SOFT_MAX_USERS {
            log::warn!("K = {k} exceeds the soft limit of {SOFT_MAX_USERS} users");
        }
        Ok(Self { k, mt, mr, l })
    }

    /// `T_k = k ↑ Mt`; `k` may be any integer and is wrapped first.
    pub fn transmit_set(&self, k: i64) -> IndexSet {
        up_set(wrap(k, self.k), self.mt, self.k).expect("validated pattern")
    }

    /// `R_k = k ↑ Mr`; `k` may be any integer and is wrapped first.
    pub fn receive_set(&self, k: i64) -> IndexSet {
        up_set(wrap(k, self.k), self.mr, self.k).expect("validated pattern")
    }
}

/// `K x K` complex coefficients `h_ij(ℓ)` for each of `L` parallel channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub k: usize,
    pub l: usize,
    pub seed: u64,
    /// One `K x K` matrix per parallel channel; entry `(i-1, j-1)` is `h_ij`.
    pub parallel: Vec<CMatrix>,
}

impl ChannelRealization {
    /// Wraps explicit matrices (seed recorded as 0).
    pub fn from_matrices(parallel: Vec<CMatrix>) -> Result<Self> {
        let first = parallel.first().ok_or_else(|| Error::arg("no parallel channels"))?;
        let k = first.nrows();
        if parallel.iter().any(|h| h.nrows() != k || h.ncols() != k) {
            return Err(Error::arg("parallel channel matrices must all be K x K"));
        }
        Ok(Self { k, l: parallel.len(), seed: 0, parallel })
    }

    /// Coefficient `h_ij(ℓ)` with 1-based `i`, `j`, `ell`.
    pub fn coeff(&self, i: usize, j: usize, ell: usize) -> C64 {
        self.parallel[ell - 1][(i - 1, j - 1)]
    }

    pub fn is_finite(&self) -> bool {
        self.parallel.iter().all(crate::linalg::is_finite)
    }
}

/// I.i.d. complex standard normal coefficients, a pure function of
/// `(k, l, seed)`. Entries are drawn in order `ℓ`, then row, then column.
pub fn sample_channel(k: usize, l: usize, seed: u64) -> Result<ChannelRealization> {
    if k < 2 {
        return Err(Error::arg(format!("K = {k}; need at least 2 users")));
    }
    if l == 0 {
        return Err(Error::arg("L must be at least 1"));
    }
    if k > SOFT_MAX_USERS || l > SOFT_MAX_PARALLEL {
        log::warn!("channel {k}x{k}x{l} exceeds the soft limits K <= {SOFT_MAX_USERS}, L <= {SOFT_MAX_PARALLEL}");
    }
    let mut gen = ComplexNormal::new(seed);
    let parallel = (0..l).map(|_| CMatrix::from_row_iterator(k, k, gen.sample_vec(k * k))).collect();
    Ok(ChannelRealization { k, l, seed, parallel })
}

/// Single generic `K x K` matrix drawn from the channel generator.
pub fn sample_matrix(k: usize, seed: u64) -> CMatrix {
    let mut gen = ComplexNormal::new(seed);
    CMatrix::from_row_iterator(k, k, gen.sample_vec(k * k))
}

/// `H(rows, cols)` in the given index order.
pub fn submatrix(h: &CMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<CMatrix> {
    if let Some(&i) = rows.as_slice().iter().find(|&&i| i > h.nrows()) {
        return Err(Error::arg(format!("row index {i} outside 1..={}", h.nrows())));
    }
    if let Some(&j) = cols.as_slice().iter().find(|&&j| j > h.ncols()) {
        return Err(Error::arg(format!("column index {j} outside 1..={}", h.ncols())));
    }
    Ok(CMatrix::from_fn(rows.len(), cols.len(), |r, c| h[(rows.as_slice()[r] - 1, cols.as_slice()[c] - 1)]))
}

/// `a_ij = 1` if `j = i` or `j = i-1 (mod K)`, else 0.
pub fn circulant_test_point(k: usize) -> Result<CMatrix> {
    if k < 3 {
        return Err(Error::arg(format!("circulant test point needs K >= 3, got {k}")));
    }
    Ok(CMatrix::from_fn(
        k,
        k,
        |i, j| {
            if j == i || j == (i + k - 1) % k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn up_set_examples() {
        assert_eq!(up_set(4, 3, 5).unwrap(), set(&[4, 5, 1]));
        assert_eq!(up_set(1, 1, 7).unwrap(), set(&[1]));
        assert_eq!(up_set(3, 2, 4).unwrap(), set(&[3, 4]));
    }

    #[test]
    fn down_set_examples() {
        assert_eq!(down_set(1, 2, 4).unwrap(), set(&[1, 4]));
        assert_eq!(down_set(3, 1, 3).unwrap(), set(&[3]));
        assert_eq!(down_set(2, 3, 5).unwrap(), set(&[2, 1, 5]));
    }

    #[test]
    fn window_arguments_are_checked() {
        assert!(up_set(0, 1, 3).is_err());
        assert!(up_set(4, 1, 3).is_err());
        assert!(down_set(1, 0, 3).is_err());
        assert!(down_set(1, 4, 3).is_err());
    }

    #[test]
    fn pattern_sets() {
        let p = CooperationPattern::new(5, 3, 2, 1).unwrap();
        assert_eq!(p.transmit_set(4), set(&[4, 5, 1]));
        assert_eq!(p.receive_set(5), set(&[5, 1]));
        assert_eq!(p.transmit_set(7), set(&[2, 3, 4]));
        assert!(CooperationPattern::new(3, 4, 1, 1).is_err());
        assert!(CooperationPattern::new(3, 1, 1, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_seed_sensitive() {
        let a = sample_channel(3, 1, 7).unwrap();
        let b = sample_channel(3, 1, 7).unwrap();
        let c = sample_channel(3, 1, 8).unwrap();
        assert_eq!(a, b);
        let bits = |r: &ChannelRealization| -> Vec<u64> {
            r.parallel[0].iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a.parallel, c.parallel);
    }

    #[test]
    fn sampling_shape() {
        let r = sample_channel(4, 2, 1).unwrap();
        assert_eq!((r.k, r.l, r.parallel.len()), (4, 2, 2));
        assert!(r.parallel.iter().all(|h| h.nrows() == 4 && h.ncols() == 4));
        assert!(r.is_finite());
    }

    #[test]
    fn submatrix_examples() {
        let eye = CMatrix::identity(3, 3);
        assert_eq!(submatrix(&eye, &set(&[2]), &set(&[2])).unwrap(), CMatrix::identity(1, 1));
        let h = sample_matrix(3, 5);
        assert_eq!(submatrix(&h, &IndexSet::full(3), &IndexSet::full(3)).unwrap(), h);
        let a = submatrix(&h, &set(&[2, 1]), &set(&[1])).unwrap();
        let b = submatrix(&h, &set(&[1, 2]), &set(&[1])).unwrap();
        assert_eq!(a[(0, 0)], b[(1, 0)]);
        assert_eq!(a[(1, 0)], b[(0, 0)]);
        assert!(submatrix(&h, &set(&[4]), &set(&[1])).is_err());
    }

    #[test]
    fn circulant_examples() {
        let a = circulant_test_point(4).unwrap();
        let expect = [[1, 0, 0, 1], [1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[(i, j)].re, expect[i][j] as f64);
                assert_eq!(a[(i, j)].im, 0.0);
            }
        }
        for k in 3..9 {
            let a = circulant_test_point(k).unwrap();
            for row in a.row_iter() {
                assert_eq!(row.iter().map(|z| z.re).sum::<f64>(), 2.0);
            }
        }
        let nz = circulant_test_point(5).unwrap().iter().filter(|z| z.norm() != 0.0).count();
        assert_eq!(nz, 10);
        assert!(circulant_test_point(2).is_err());
    }

    proptest! {
        #[test]
        fn up_down_duality(users in 1usize..13, i in 1usize..13, j in 1usize..13, m in 1usize..13) {
            prop_assume!(i <= users && j <= users && m <= users);
            let up = up_set(j, m, users).unwrap();
            let down = down_set(i, m, users).unwrap();
            prop_assert_eq!(up.contains(i), down.contains(j));
        }

        #[test]
        fn up_reversed_is_down_from_last(users in 1usize..13, k in 1usize..13, m in 1usize..13) {
            prop_assume!(k <= users && m <= users);
            let mut up: Vec<usize> = up_set(k, m, users).unwrap().iter().collect();
            up.reverse();
            let last = wrap((k + m - 1) as i64, users);
            let down: Vec<usize> = down_set(last, m, users).unwrap().iter().collect();
            prop_assert_eq!(up, down);
        }

        #[test]
        fn up_set_has_m_distinct_members(users in 1usize..13, k in 1usize..13, m in 1usize..13) {
            prop_assume!(k <= users && m <= users);
            let s = up_set(k, m, users).unwrap();
            prop_assert_eq!(s.len(), m);
            prop_assert!(s.iter().all(|i| (1..=users).contains(&i)));
        }
    }
}
