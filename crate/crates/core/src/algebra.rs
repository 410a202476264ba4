//! Numeric Jacobians, rank oracles and algebraic-independence tests.
//!
//! Rational functions `f_1, .., f_m` of `n` variables are algebraically
//! independent exactly when their Jacobian has rank `m` at a generic point.
//! The tests here evaluate that rank at random complex normal points. They
//! are probabilistic certificates, not symbolic proofs: a rank drop found at
//! every sampled point is strong evidence of dependence, and full rank at a
//! single point proves independence up to floating-point error.

use crate::channel::{circulant_test_point, CooperationPattern, IndexSet};
use crate::linalg::{self, CMatrix, C64};
use crate::rng::{derive_seed, ComplexNormal};
use crate::{Error, Result};

/// Default relative step for central differences.
pub const DEFAULT_STEP: f64 = 1e-6;
/// Default relative tolerance for [`numeric_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default number of generic points used by [`structural_rank`].
pub const DEFAULT_TRIALS: usize = 3;
/// Attempts at drawing a regular point before giving up.
const MAX_RESAMPLES: usize = 20;

/// A map `C^n -> C^m` given by rational functions, evaluated as a black box.
pub trait RationalMap {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;

    /// Evaluates the map; returns a numerical-domain error at singular points.
    fn eval(&self, t: &[C64]) -> Result<Vec<C64>>;

    /// Cheap pre-check for points where the map is undefined.
    fn is_regular(&self, _t: &[C64]) -> bool {
        true
    }
}

type EvalFn = dyn Fn(&[C64]) -> Result<Vec<C64>> + Send + Sync;
type GuardFn = dyn Fn(&[C64]) -> bool + Send + Sync;

/// A [`RationalMap`] built from closures.
pub struct FnMap {
    n_inputs: usize,
    n_outputs: usize,
    f: Box<EvalFn>,
    guard: Option<Box<GuardFn>>,
}

impl FnMap {
    pub fn new<F>(n_inputs: usize, n_outputs: usize, f: F) -> Self
    where
        F: Fn(&[C64]) -> Result<Vec<C64>> + Send + Sync + 'static,
    {
        Self { n_inputs, n_outputs, f: Box::new(f), guard: None }
    }

    /// Map defined by infallible closure (polynomial maps).
    pub fn polynomial<F>(n_inputs: usize, n_outputs: usize, f: F) -> Self
    where
        F: Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static,
    {
        Self::new(n_inputs, n_outputs, move |t| Ok(f(t)))
    }

    pub fn with_guard<G>(mut self, guard: G) -> Self
    where
        G: Fn(&[C64]) -> bool + Send + Sync + 'static,
    {
        self.guard = Some(Box::new(guard));
        self
    }
}

impl RationalMap for FnMap {
    fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    fn eval(&self, t: &[C64]) -> Result<Vec<C64>> {
        if t.len() != self.n_inputs {
            return Err(Error::arg(format!("map takes {} inputs, got {}", self.n_inputs, t.len())));
        }
        let out = (self.f)(t)?;
        if out.len() != self.n_outputs {
            return Err(Error::arg(format!("map declared {} outputs, produced {}", self.n_outputs, out.len())));
        }
        Ok(out)
    }

    fn is_regular(&self, t: &[C64]) -> bool {
        self.guard.as_ref().is_none_or(|g| g(t))
    }
}

fn eval_checked(f: &dyn RationalMap, t: &[C64]) -> Result<Vec<C64>> {
    if !f.is_regular(t) {
        return Err(Error::domain("map evaluated at a singular point"));
    }
    let out = f.eval(t)?;
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain("map produced a non-finite value"));
    }
    Ok(out)
}

/// Central-difference Jacobian (`m x n`) with step `step * max(1, |t_j|)`
/// along the real axis of each variable. For holomorphic components this is
/// the complex derivative.
pub fn numeric_jacobian(f: &dyn RationalMap, point: &[C64], step: f64) -> Result<CMatrix> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::arg(format!("step must be positive, got {step}")));
    }
    if point.len() != f.n_inputs() {
        return Err(Error::arg(format!("point has {} coordinates, map takes {}", point.len(), f.n_inputs())));
    }
    eval_checked(f, point)?;
    let m = f.n_outputs();
    let mut jac = CMatrix::zeros(m, point.len());
    let mut probe = point.to_vec();
    for j in 0..point.len() {
        let delta = step * point[j].norm().max(1.0);
        probe[j] = point[j] + delta;
        let plus = eval_checked(f, &probe)?;
        probe[j] = point[j] - delta;
        let minus = eval_checked(f, &probe)?;
        probe[j] = point[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * delta);
        }
    }
    Ok(jac)
}

/// Number of singular values above `rel_tol * sigma_max * max(rows, cols)`.
pub fn numeric_rank(m: &CMatrix, rel_tol: f64) -> Result<usize> {
    linalg::rank_with_tol(m, rel_tol)
}

/// Draws a complex normal point at which `f` evaluates without error.
/// The `attempt`-th draw comes from its own derived stream, so the sequence
/// does not depend on how many earlier draws were rejected.
pub fn regular_point(f: &dyn RationalMap, seed: u64) -> Result<Vec<C64>> {
    for attempt in 0..MAX_RESAMPLES as u64 {
        let t = ComplexNormal::new(derive_seed(seed, attempt)).sample_vec(f.n_inputs());
        match eval_checked(f, &t) {
            Ok(_) => return Ok(t),
            Err(Error::NumericalDomain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::domain(format!("no regular point found in {MAX_RESAMPLES} draws")))
}

/// Options for the rank-based independence tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankOptions {
    pub trials: usize,
    pub step: f64,
    pub rel_tol: f64,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self { trials: DEFAULT_TRIALS, step: DEFAULT_STEP, rel_tol: DEFAULT_RANK_TOL }
    }
}

/// Largest Jacobian rank seen over `trials` generic points. Trial `t` always
/// uses the same point for a given seed, so the result is non-decreasing in
/// `trials`.
pub fn structural_rank(f: &dyn RationalMap, trials: usize, seed: u64) -> Result<usize> {
    structural_rank_with(f, seed, RankOptions { trials, ..Default::default() })
}

pub fn structural_rank_with(f: &dyn RationalMap, seed: u64, opts: RankOptions) -> Result<usize> {
    if opts.trials == 0 {
        return Err(Error::arg("structural rank needs at least one trial"));
    }
    let mut best = 0;
    for trial in 0..opts.trials as u64 {
        let point = regular_point(f, derive_seed(seed, trial))?;
        let mut jac = numeric_jacobian(f, &point, opts.step)?;
        // Row scaling does not change rank but evens out outputs of very
        // different magnitude before the relative threshold is applied.
        for mut row in jac.row_iter_mut() {
            let n = row.norm();
            if n > 0.0 {
                row /= C64::new(n, 0.0);
            }
        }
        best = best.max(numeric_rank(&jac, opts.rel_tol)?);
        if best == f.n_outputs().min(f.n_inputs()) {
            break;
        }
    }
    Ok(best)
}

/// Jacobian criterion: true iff the structural rank equals the number of
/// outputs. Maps with more outputs than inputs are never independent.
pub fn is_algebraically_independent(f: &dyn RationalMap, trials: usize, seed: u64) -> Result<bool> {
    is_algebraically_independent_with(f, seed, RankOptions { trials, ..Default::default() })
}

pub fn is_algebraically_independent_with(f: &dyn RationalMap, seed: u64, opts: RankOptions) -> Result<bool> {
    if f.n_outputs() > f.n_inputs() {
        return Ok(false);
    }
    Ok(structural_rank_with(f, seed, opts)? == f.n_outputs())
}

/// Non-negative integer exponents, one per output of a map.
pub type ExponentVector = Vec<u32>;

fn monomial(s: &[C64], a: &[u32]) -> C64 {
    s.iter().zip(a).fold(C64::new(1.0, 0.0), |acc, (z, &e)| acc * z.powu(e))
}

/// `p x q` matrix whose row `r` is `(s(r)^{a_1}, .., s(r)^{a_q})` with
/// `s(r) = f(t(r))` at an independent generic point `t(r)`.
pub fn monomial_matrix(f: &dyn RationalMap, exponents: &[ExponentVector], p: usize, seed: u64) -> Result<CMatrix> {
    let q = exponents.len();
    if p < q {
        return Err(Error::arg(format!("need at least as many rows as monomials ({p} < {q})")));
    }
    if let Some(a) = exponents.iter().find(|a| a.len() != f.n_outputs()) {
        return Err(Error::arg(format!("exponent vector {a:?} does not match {} outputs", f.n_outputs())));
    }
    let mut m = CMatrix::zeros(p, q);
    for r in 0..p {
        let t = regular_point(f, derive_seed(seed, r as u64))?;
        let s = f.eval(&t)?;
        for (c, a) in exponents.iter().enumerate() {
            m[(r, c)] = monomial(&s, a);
        }
    }
    Ok(m)
}

/// Whether the square monomial matrix has full rank. Columns are normalized
/// first, which leaves the rank unchanged.
pub fn monomial_matrix_full_rank(f: &dyn RationalMap, exponents: &[ExponentVector], seed: u64) -> Result<bool> {
    let mut m = monomial_matrix(f, exponents, exponents.len(), seed)?;
    linalg::normalize_columns(&mut m);
    Ok(numeric_rank(&m, DEFAULT_RANK_TOL)? == exponents.len())
}

/// One block of outputs `H(row, cols) · H(rows, cols)^{-1}` (a row vector of
/// length `|cols|`), with `H` read from a row-major `K x K` input vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowInverseTerm {
    pub row: usize,
    pub cols: IndexSet,
    pub rows: IndexSet,
}

/// Map from the `K^2` channel entries to a list of [`RowInverseTerm`]
/// blocks. This is the form taken by the zero-forced coefficients of the
/// `Mt = K-2` derived channel.
#[derive(Clone, Debug)]
pub struct RowInverseMap {
    pub k: usize,
    pub terms: Vec<RowInverseTerm>,
}

impl RowInverseMap {
    pub fn new(k: usize, terms: Vec<RowInverseTerm>) -> Result<Self> {
        for t in &terms {
            if t.cols.len() != t.rows.len() {
                return Err(Error::arg("row-inverse term needs a square inner block"));
            }
            let full = IndexSet::full(k);
            if t.row == 0 || t.row > k || !t.cols.is_subset_of(&full) || !t.rows.is_subset_of(&full) {
                return Err(Error::arg(format!("row-inverse term indices outside 1..={k}")));
            }
        }
        Ok(Self { k, terms })
    }

    fn matrix(&self, t: &[C64]) -> CMatrix {
        CMatrix::from_row_slice(self.k, self.k, t)
    }

    /// Exact Jacobian from `d(r X^{-1}) = dr X^{-1} - r X^{-1} dX X^{-1}`.
    pub fn analytic_jacobian(&self, t: &[C64]) -> Result<CMatrix> {
        let h = self.matrix(t);
        let k = self.k;
        let mut jac = CMatrix::zeros(self.n_outputs(), k * k);
        let mut out = 0;
        for term in &self.terms {
            let x = crate::channel::submatrix(&h, &term.rows, &term.cols)?;
            let xinv = linalg::checked_inverse(&x, "inner block")?;
            let r = crate::channel::submatrix(&h, &IndexSet::new(vec![term.row])?, &term.cols)?;
            let g = &r * &xinv;
            let w = term.cols.len();
            for (c, q) in term.cols.iter().enumerate() {
                let var = (term.row - 1) * k + (q - 1);
                for m in 0..w {
                    jac[(out + m, var)] += xinv[(c, m)];
                }
            }
            for (rr, p) in term.rows.iter().enumerate() {
                for (cc, q) in term.cols.iter().enumerate() {
                    let var = (p - 1) * k + (q - 1);
                    for m in 0..w {
                        jac[(out + m, var)] -= g[(0, rr)] * xinv[(cc, m)];
                    }
                }
            }
            out += w;
        }
        Ok(jac)
    }
}

impl RationalMap for RowInverseMap {
    fn n_inputs(&self) -> usize {
        self.k * self.k
    }

    fn n_outputs(&self) -> usize {
        self.terms.iter().map(|t| t.cols.len()).sum()
    }

    fn eval(&self, t: &[C64]) -> Result<Vec<C64>> {
        if t.len() != self.k * self.k {
            return Err(Error::arg(format!("expected {} channel entries, got {}", self.k * self.k, t.len())));
        }
        let h = self.matrix(t);
        let mut out = Vec::with_capacity(self.n_outputs());
        for term in &self.terms {
            let x = crate::channel::submatrix(&h, &term.rows, &term.cols)?;
            let xinv = linalg::checked_inverse(&x, "inner block")?;
            let r = crate::channel::submatrix(&h, &IndexSet::new(vec![term.row])?, &term.cols)?;
            out.extend((&r * &xinv).iter().copied());
        }
        Ok(out)
    }
}

/// The `(K+1)·Mt` coefficients seen by receiver `receiver` in the `Mt = K-2`
/// derived channel: its own signal gains `g_kk^(m)` followed by the
/// interference gains `g_{i,i+1}^(m)` for `i = 1..K`.
pub fn km2_coefficient_map(k: usize, receiver: usize) -> Result<RowInverseMap> {
    if k < 4 {
        return Err(Error::arg(format!("the Mt = K-2 construction needs K >= 4, got {k}")));
    }
    if receiver == 0 || receiver > k {
        return Err(Error::arg(format!("receiver {receiver} outside 1..={k}")));
    }
    crate::derived::cellular_coefficient_map(k, k - 2, receiver)
}

/// Column indices (into the row-major `K^2` inputs) of the square Jacobian
/// block: `h_0 = (h_11, .., h_{Mt,Mt})`, then for each `i` the entries
/// `H(i, T_{i+1}) = (h_{i,i+1}, .., h_{i,i-2})`.
pub fn jacobian_block_columns(k: usize) -> Result<Vec<usize>> {
    if k < 4 {
        return Err(Error::arg(format!("the Mt = K-2 construction needs K >= 4, got {k}")));
    }
    let mt = k - 2;
    let p = CooperationPattern::new(k, mt, 1, 1)?;
    let mut cols: Vec<usize> = (1..=mt).map(|d| (d - 1) * k + (d - 1)).collect();
    for i in 1..=k {
        cols.extend(p.transmit_set(i as i64 + 1).iter().map(|j| (i - 1) * k + (j - 1)));
    }
    Ok(cols)
}

/// How the Jacobian in [`jacobian_block`] is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Differentiation {
    Numeric,
    Analytic,
}

/// The `(K+1)(K-2)` square Jacobian block of the receiver-1 coefficient map
/// of the `Mt = K-2` derived channel, evaluated at the circulant test point.
pub fn jacobian_block(k: usize, how: Differentiation) -> Result<CMatrix> {
    let map = km2_coefficient_map(k, 1)?;
    let a = circulant_test_point(k)?;
    let point: Vec<C64> = a.transpose().iter().copied().collect();
    let full = match how {
        Differentiation::Numeric => numeric_jacobian(&map, &point, DEFAULT_STEP),
        Differentiation::Analytic => map.analytic_jacobian(&point),
    }
    .map_err(|e| Error::failure(format!("Jacobian at the circulant test point: {e}")))?;
    let cols = jacobian_block_columns(k)?;
    Ok(full.select_columns(&cols))
}

/// Determinant of [`jacobian_block`] computed by central differences.
/// Its modulus is 1, which certifies the independence of the receiver
/// coefficients and hence full rank of the alignment matrices.
pub fn jacobian_block_determinant(k: usize) -> Result<C64> {
    Ok(linalg::determinant(&jacobian_block(k, Differentiation::Numeric)?))
}

/// Same as [`jacobian_block_determinant`] with the exact derivative.
pub fn jacobian_block_determinant_analytic(k: usize) -> Result<C64> {
    Ok(linalg::determinant(&jacobian_block(k, Differentiation::Analytic)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn re(x: f64) -> C64 {
        c(x, 0.0)
    }

    #[test]
    fn jacobian_examples() {
        let sq = FnMap::polynomial(1, 1, |t| vec![t[0] * t[0]]);
        let j = numeric_jacobian(&sq, &[re(3.0)], 1e-6).unwrap();
        assert!((j[(0, 0)] - re(6.0)).norm() < 1e-6);

        let id = FnMap::polynomial(2, 2, |t| t.to_vec());
        let j = numeric_jacobian(&id, &[c(0.3, 1.0), c(-2.0, 0.5)], 1e-6).unwrap();
        assert!((j - CMatrix::identity(2, 2)).norm() < 1e-9);

        let inv =
            FnMap::new(1, 1, |t| if t[0].norm() == 0.0 { Err(Error::domain("1/0")) } else { Ok(vec![t[0].inv()]) });
        let j = numeric_jacobian(&inv, &[re(2.0)], 1e-6).unwrap();
        assert!((j[(0, 0)] - re(-0.25)).norm() < 1e-6);
    }

    #[test]
    fn jacobian_of_complex_polynomial_is_holomorphic_derivative() {
        let f = FnMap::polynomial(1, 1, |t| vec![t[0].powu(3)]);
        let t = c(0.7, -1.2);
        let j = numeric_jacobian(&f, &[t], 1e-6).unwrap();
        assert!((j[(0, 0)] - 3.0 * t * t).norm() < 1e-8);
    }

    #[test]
    fn singular_probe_is_domain_error() {
        let f = FnMap::polynomial(1, 1, |t| vec![t[0].inv()]).with_guard(|t| t[0].norm() > 1e-3);
        assert!(matches!(numeric_jacobian(&f, &[re(0.0)], 1e-6), Err(Error::NumericalDomain(_))));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numeric_rank(&CMatrix::identity(4, 4), DEFAULT_RANK_TOL).unwrap(), 4);
        let u = CMatrix::from_column_slice(3, 1, &[c(1.0, 1.0), re(2.0), c(0.0, -1.0)]);
        let v = CMatrix::from_column_slice(4, 1, &[re(1.0), re(-3.0), c(0.5, 0.5), re(2.0)]);
        assert_eq!(numeric_rank(&(&u * v.adjoint()), DEFAULT_RANK_TOL).unwrap(), 1);
        assert_eq!(numeric_rank(&CMatrix::zeros(3, 3), DEFAULT_RANK_TOL).unwrap(), 0);
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 0)] = re(f64::NAN);
        assert!(numeric_rank(&bad, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn structural_rank_examples() {
        let f = FnMap::polynomial(2, 3, |t| vec![t[0], t[1], t[0] + t[1]]);
        assert_eq!(structural_rank(&f, 3, 1).unwrap(), 2);
        let f = FnMap::polynomial(2, 2, |t| vec![t[0] * t[1], t[0] + t[1]]);
        assert_eq!(structural_rank(&f, 3, 1).unwrap(), 2);
        let f = FnMap::polynomial(1, 2, |t| vec![t[0] * t[0], t[0].powu(4)]);
        assert_eq!(structural_rank(&f, 3, 1).unwrap(), 1);
    }

    #[test]
    fn independence_examples() {
        let f = FnMap::polynomial(1, 2, |t| vec![t[0], t[0] * t[0]]);
        assert!(!is_algebraically_independent(&f, 3, 0).unwrap());
        let f = FnMap::polynomial(2, 2, |t| t.to_vec());
        assert!(is_algebraically_independent(&f, 3, 0).unwrap());
        // (t1 t2, t1^2 t2^2) is dependent although it has as many outputs as inputs.
        let f = FnMap::polynomial(2, 2, |t| vec![t[0] * t[1], (t[0] * t[1]).powu(2)]);
        assert!(!is_algebraically_independent(&f, 3, 0).unwrap());
    }

    #[test]
    fn monomial_matrix_examples() {
        let f = FnMap::polynomial(2, 2, |t| t.to_vec());
        let m = monomial_matrix(&f, &[vec![1, 0], vec![0, 1]], 2, 5).unwrap();
        for r in 0..2 {
            let t = regular_point(&f, derive_seed(5, r as u64)).unwrap();
            assert_eq!(m[(r, 0)], t[0]);
            assert_eq!(m[(r, 1)], t[1]);
        }
        let g = FnMap::polynomial(1, 2, |t| vec![t[0], t[0] * t[0]]);
        for seed in 0..10 {
            let m = monomial_matrix(&g, &[vec![2, 0], vec![0, 1]], 2, seed).unwrap();
            assert_eq!(numeric_rank(&m, DEFAULT_RANK_TOL).unwrap(), 1);
            assert!(!monomial_matrix_full_rank(&g, &[vec![2, 0], vec![0, 1]], seed).unwrap());
        }
        let m = monomial_matrix(&f, &[vec![0, 0]], 3, 1).unwrap();
        assert!(m.iter().all(|z| *z == re(1.0)));
        let h = FnMap::polynomial(1, 1, |t| t.to_vec());
        assert!(monomial_matrix_full_rank(&h, &[vec![0], vec![1]], 3).unwrap());
        assert!(monomial_matrix(&f, &[vec![1, 0], vec![0, 1]], 1, 0).is_err());
        assert!(monomial_matrix(&f, &[vec![1]], 1, 0).is_err());
    }

    #[test]
    fn jacobian_block_columns_for_four_users() {
        // h11, h22, then H(i, T_{i+1}) for i = 1..4 (row-major, 0-based).
        assert_eq!(jacobian_block_columns(4).unwrap(), vec![0, 5, 1, 2, 6, 7, 11, 8, 12, 13]);
    }

    #[test]
    fn jacobian_block_analytic_matches_numeric() {
        for k in 4..=6 {
            let a = jacobian_block(k, Differentiation::Analytic).unwrap();
            let n = jacobian_block(k, Differentiation::Numeric).unwrap();
            assert!((a - n).norm() < 1e-7, "K = {k}");
        }
    }

    #[test]
    fn analytic_jacobian_matches_numeric_at_generic_point() {
        let map = km2_coefficient_map(5, 2).unwrap();
        let t = regular_point(&map, 9).unwrap();
        let a = map.analytic_jacobian(&t).unwrap();
        let n = numeric_jacobian(&map, &t, DEFAULT_STEP).unwrap();
        assert!((&a - &n).norm() < 1e-6 * a.norm(), "{}", (&a - &n).norm());
    }

    #[test]
    fn jacobian_block_determinant_has_unit_modulus() {
        for k in 4..=5 {
            assert!((jacobian_block_determinant(k).unwrap().norm() - 1.0).abs() < 1e-6);
            assert!((jacobian_block_determinant_analytic(k).unwrap().norm() - 1.0).abs() < 1e-12);
        }
        assert!(jacobian_block_determinant(3).is_err());
    }
}
