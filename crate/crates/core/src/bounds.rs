//! Exact rational DoF outer bounds and known-DoF reference values.
//!
//! The region bound says that for any transmitter set `A` and receiver set
//! `B`, the messages with `T_k ⊆ A` or `R_k ⊆ B` carry at most
//! `max(|A|, |B|)` DoF in total.

use serde::{Deserialize, Serialize};

use crate::channel::{CooperationPattern, IndexSet};
use crate::rational::Rational;
use crate::{Error, Result};

/// Largest `K` for which region constraints are enumerated.
pub const MAX_ENUMERATION_USERS: usize = 12;

/// `Σ_{k ∈ users} d_k ≤ bound`, generated by the pair `(set_a, set_b)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionConstraint {
    pub users: IndexSet,
    pub bound: usize,
    pub set_a: IndexSet,
    pub set_b: IndexSet,
}

/// Which `(A, B)` pairs [`region_constraints_with`] enumerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Enumeration {
    /// Only `|A| = |B|`. Unequal pairs are implied: enlarging the smaller set
    /// adds users without changing the bound.
    #[default]
    EqualSize,
    /// Every pair of subsets.
    All,
}

struct Masks {
    k: usize,
    tx: Vec<u64>,
    rx: Vec<u64>,
}

impl Masks {
    fn new(p: &CooperationPattern) -> Self {
        let tx = (1..=p.k).map(|k| p.transmit_set(k as i64).mask()).collect();
        let rx = (1..=p.k).map(|k| p.receive_set(k as i64).mask()).collect();
        Masks { k: p.k, tx, rx }
    }

    fn users(&self, a: u64, b: u64) -> u64 {
        (0..self.k).fold(0, |acc, i| {
            if self.tx[i] & a == self.tx[i] || self.rx[i] & b == self.rx[i] {
                acc | (1 << i)
            } else {
                acc
            }
        })
    }
}

/// The constraint produced by one specific pair of sets.
pub fn constraint_for(p: &CooperationPattern, a: &IndexSet, b: &IndexSet) -> Result<RegionConstraint> {
    let full = IndexSet::full(p.k);
    if !a.is_subset_of(&full) || !b.is_subset_of(&full) {
        return Err(Error::arg(format!("sets {a} and {b} must lie in 1..={}", p.k)));
    }
    let users = Masks::new(p).users(a.mask(), b.mask());
    Ok(RegionConstraint {
        users: IndexSet::from_mask(users, p.k),
        bound: a.len().max(b.len()),
        set_a: a.clone(),
        set_b: b.clone(),
    })
}

fn check_enumeration_size(k: usize) -> Result<()> {
    if k > MAX_ENUMERATION_USERS {
        return Err(Error::Resource(format!(
            "region enumeration is exponential in K; K = {k} exceeds {MAX_ENUMERATION_USERS}"
        )));
    }
    Ok(())
}

/// Equal-size region constraints with `|A| = |B| ≤ max_set_size`.
pub fn region_constraints(p: &CooperationPattern, max_set_size: usize) -> Result<Vec<RegionConstraint>> {
    region_constraints_with(p, max_set_size, Enumeration::EqualSize)
}

/// Region constraints for all pairs allowed by `mode` with both sets of size
/// at most `max_set_size`. Pairs covering no user are dropped; pairs with the
/// same user set keep only the smallest bound (first pair found wins ties).
pub fn region_constraints_with(
    p: &CooperationPattern,
    max_set_size: usize,
    mode: Enumeration,
) -> Result<Vec<RegionConstraint>> {
    check_enumeration_size(p.k)?;
    let masks = Masks::new(p);
    let n = 1u64 << p.k;
    let limit = max_set_size.min(p.k) as u32;
    let mut best: std::collections::HashMap<u64, (usize, u64, u64)> = Default::default();
    for a in 0..n {
        if a.count_ones() > limit {
            continue;
        }
        for b in 0..n {
            let (ca, cb) = (a.count_ones(), b.count_ones());
            if cb > limit || (mode == Enumeration::EqualSize && ca != cb) {
                continue;
            }
            let users = masks.users(a, b);
            if users == 0 {
                continue;
            }
            let bound = ca.max(cb) as usize;
            best.entry(users)
                .and_modify(|e| {
                    if bound < e.0 {
                        *e = (bound, a, b);
                    }
                })
                .or_insert((bound, a, b));
        }
    }
    let mut out: Vec<RegionConstraint> = best
        .into_iter()
        .map(|(users, (bound, a, b))| RegionConstraint {
            users: IndexSet::from_mask(users, p.k),
            bound,
            set_a: IndexSet::from_mask(a, p.k),
            set_b: IndexSet::from_mask(b, p.k),
        })
        .collect();
    out.sort_by_key(|x| (x.bound, x.users.mask()));
    Ok(out)
}

/// Whether `d` satisfies every region constraint, in exact arithmetic.
pub fn check_dof_vector(p: &CooperationPattern, d: &[Rational]) -> Result<bool> {
    Ok(first_violation(p, d)?.is_none())
}

/// The first violated constraint (smallest bound first), if any.
pub fn first_violation(p: &CooperationPattern, d: &[Rational]) -> Result<Option<RegionConstraint>> {
    if d.len() != p.k {
        return Err(Error::arg(format!("DoF vector has {} entries, expected K = {}", d.len(), p.k)));
    }
    if let Some(x) = d.iter().find(|x| x.is_negative()) {
        return Err(Error::arg(format!("DoF entries must be non-negative, got {x}")));
    }
    let constraints = region_constraints(p, p.k)?;
    Ok(constraints.into_iter().find(|c| {
        let total: Rational = c.users.iter().map(|k| d[k - 1]).sum();
        total > Rational::integer(c.bound as i64)
    }))
}

fn check_orders(k: usize, mt: usize, mr: usize) -> Result<()> {
    CooperationPattern::new(k, mt, mr, 1).map(|_| ())
}

/// Sum-DoF outer bound: `K` when `Mt + Mr ≥ K+1`; otherwise
/// `(K+Mt+Mr-2)/2` for even `K+Mt+Mr` and `K/(K-1)·(K+Mt+Mr-3)/2` for odd,
/// capped at `K`.
pub fn sum_dof_outer_bound(k: usize, mt: usize, mr: usize) -> Result<Rational> {
    check_orders(k, mt, mr)?;
    let kk = Rational::integer(k as i64);
    if full_dof_condition(k, mt, mr)? {
        return Ok(kk);
    }
    let s = (k + mt + mr) as i64;
    let bound =
        if s % 2 == 0 { Rational::integer((s - 2) / 2) } else { Rational::new(k as i64 * (s - 3), 2 * (k as i64 - 1)) };
    Ok(bound.min(kk))
}

/// `Mt + Mr ≥ K + 1`: the condition for `K` DoF.
pub fn full_dof_condition(k: usize, mt: usize, mr: usize) -> Result<bool> {
    check_orders(k, mt, mr)?;
    Ok(mt + mr > k)
}

/// Exactly known DoF values; `None` where only bounds or conjectures exist.
pub fn known_dof(k: usize, mt: usize, mr: usize) -> Result<Option<Rational>> {
    check_orders(k, mt, mr)?;
    let ki = k as i64;
    if mt.max(mr) == k || mt + mr > k {
        return Ok(Some(Rational::integer(ki)));
    }
    if (mt, mr) == (1, 1) {
        return Ok(Some(Rational::new(ki, 2)));
    }
    if (mt, mr) == (k - 1, 1) || (mt, mr) == (1, k - 1) {
        return Ok(Some(Rational::integer(ki - 1)));
    }
    if mr == 1 && k >= 3 && mt == k - 2 {
        return Ok(Some(Rational::new(ki * (ki - 2), ki - 1)));
    }
    if mr == 1 && (k + mt) % 2 == 1 && k < 10 {
        return Ok(Some(Rational::new(ki + mt as i64 - 1, 2)));
    }
    Ok(None)
}

/// `K·Mt/(Mt+1)`: the DoF of the MISO interference channel with `Mt`
/// transmit antennas, used as a comparison point.
pub fn miso_reference_dof(k: usize, mt: usize) -> Result<Rational> {
    if mt == 0 || mt >= k {
        return Err(Error::arg(format!("need 1 <= Mt < K, got Mt = {mt}, K = {k}")));
    }
    Ok(Rational::new((k * mt) as i64, mt as i64 + 1))
}

/// `(1, .., 1, 1/2, .., 1/2)` with `Mt - 1` ones, achieving `(K+Mt-1)/2`.
pub fn asymmetric_dof_vector(k: usize, mt: usize) -> Result<Vec<Rational>> {
    check_orders(k, mt, 1)?;
    Ok((1..=k).map(|i| if i < mt { Rational::integer(1) } else { Rational::new(1, 2) }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(k: usize, mt: usize, mr: usize) -> CooperationPattern {
        CooperationPattern::new(k, mt, mr, 1).unwrap()
    }

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn single_pair_constraints() {
        let c = constraint_for(&pat(3, 1, 1), &set(&[1]), &set(&[1])).unwrap();
        assert_eq!((c.users, c.bound), (set(&[1]), 1));
        let c = constraint_for(&pat(3, 3, 1), &IndexSet::empty(), &set(&[1])).unwrap();
        assert_eq!((c.users, c.bound), (set(&[1]), 1));
        let c = constraint_for(&pat(4, 2, 1), &set(&[1, 2, 3]), &set(&[3, 4])).unwrap();
        assert_eq!((c.users, c.bound), (set(&[1, 2, 3, 4]), 3));
    }

    #[test]
    fn enumeration_dedups_and_limits() {
        let cs = region_constraints(&pat(3, 1, 1), 3).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in &cs {
            assert!(seen.insert(c.users.mask()));
            assert!(!c.users.is_empty());
            assert_eq!(c.set_a.len(), c.set_b.len());
        }
        let single = cs.iter().find(|c| c.users == set(&[1, 2])).unwrap();
        assert_eq!(single.bound, 1);
        assert!(region_constraints(&pat(13, 1, 1), 2).is_err());
    }

    #[test]
    fn asymmetric_mode_adds_nothing_stronger() {
        let p = pat(5, 2, 2);
        let eq = region_constraints(&p, 5).unwrap();
        let all = region_constraints_with(&p, 5, Enumeration::All).unwrap();
        for c in &all {
            let e = eq.iter().find(|e| e.users == c.users).unwrap();
            assert_eq!(e.bound, c.bound);
        }
    }

    #[test]
    fn dof_vector_examples() {
        let d = vec![r(1, 1), r(1, 1), r(1, 2), r(1, 2), r(1, 2)];
        assert!(check_dof_vector(&pat(5, 3, 1), &d).unwrap());
        assert!(check_dof_vector(&pat(4, 2, 2), &[Rational::zero(); 4]).unwrap());
        assert!(!check_dof_vector(&pat(3, 1, 1), &[r(1, 1); 3]).unwrap());
        assert!(check_dof_vector(&pat(3, 1, 1), &[r(1, 2); 3]).unwrap());
        assert!(check_dof_vector(&pat(3, 1, 1), &[r(-1, 2), r(0, 1), r(0, 1)]).is_err());
        assert!(check_dof_vector(&pat(3, 1, 1), &[r(0, 1)]).is_err());
    }

    #[test]
    fn outer_bound_examples() {
        assert_eq!(sum_dof_outer_bound(4, 2, 1).unwrap(), r(8, 3));
        assert_eq!(sum_dof_outer_bound(3, 2, 2).unwrap(), r(3, 1));
        assert_eq!(sum_dof_outer_bound(10, 3, 2).unwrap(), r(20, 3));
        assert_eq!(sum_dof_outer_bound(5, 3, 1).unwrap(), r(15, 4));
        assert_eq!(sum_dof_outer_bound(5, 2, 1).unwrap(), r(3, 1));
    }

    #[test]
    fn full_dof_examples() {
        assert!(full_dof_condition(3, 2, 2).unwrap());
        assert!(!full_dof_condition(3, 2, 1).unwrap());
        for k in 2..10 {
            assert!(full_dof_condition(k, k, 1).unwrap());
        }
    }

    #[test]
    fn known_dof_examples() {
        assert_eq!(known_dof(4, 2, 1).unwrap(), Some(r(8, 3)));
        assert_eq!(known_dof(7, 1, 1).unwrap(), Some(r(7, 2)));
        assert_eq!(known_dof(6, 3, 2).unwrap(), None);
        assert_eq!(known_dof(5, 4, 1).unwrap(), Some(r(4, 1)));
        assert_eq!(known_dof(6, 3, 1).unwrap(), Some(r(4, 1)));
        assert_eq!(known_dof(10, 3, 1).unwrap(), None);
        assert_eq!(known_dof(6, 2, 1).unwrap(), None);
    }

    #[test]
    fn miso_examples() {
        assert_eq!(miso_reference_dof(5, 2).unwrap(), r(10, 3));
        assert_eq!(miso_reference_dof(4, 2).unwrap(), known_dof(4, 2, 1).unwrap().unwrap());
        assert!(sum_dof_outer_bound(5, 2, 1).unwrap() < miso_reference_dof(5, 2).unwrap());
        assert!(miso_reference_dof(3, 3).is_err());
    }

    #[test]
    fn known_values_respect_outer_bound() {
        for k in 2..=12 {
            for mt in 1..=k {
                for mr in 1..=k {
                    let ob = sum_dof_outer_bound(k, mt, mr).unwrap();
                    if let Some(v) = known_dof(k, mt, mr).unwrap() {
                        assert!(v <= ob, "({k},{mt},{mr}): {v} > {ob}");
                    }
                    assert_eq!(ob == Rational::integer(k as i64), full_dof_condition(k, mt, mr).unwrap());
                }
            }
        }
    }
}
