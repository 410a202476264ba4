//! Monte-Carlo sum-rate sweeps for the full-DoF beam designs and
//! DoF-slope estimation.
//!
//! Symbols have unit power and receivers unit noise. The beams are scaled by
//! one global factor `α` so that the most loaded transmit antenna uses
//! exactly `P = 10^(snr_db/10)`. Receiver `k` filters with column `u_k` of
//! `U`; all residual off-diagonal terms of `UᵀHV` count as interference.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::sample_matrix;
use crate::closed_form::ClosedForm;
use crate::linalg::{self, CMatrix};
use crate::rng::{derive_seed, GENERATOR_VERSION};
use crate::smd::{comp_smatrices, full_dof_beams, BeamPair};
use crate::{Error, Result};

/// Resampling attempts per trial before the trial is counted as lost.
pub const MAX_TRIAL_ATTEMPTS: u64 = 10;
/// Fraction of trials that may need resampling before a sweep aborts.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;
/// Significant digits kept by [`SweepResult::rounded`] and the exporters.
pub const EXPORT_DIGITS: usize = 12;

/// Which eigenvector of `B_K ⋯ B_1` seeds the closed-form beams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenPolicy {
    /// Always the first eigenvector (largest `|λ|`).
    Fixed,
    /// The eigenvector with the largest sum-rate, per realization and SNR.
    Best,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeamScheme {
    /// `(Mt, Mr) = (K, 1)`: `V = H^{-1}`, `U = I`.
    ZfBroadcast,
    /// `(Mt, Mr) = (K-1, 2)`: closed-form alignment.
    ClosedForm { policy: EigenPolicy },
    /// Any `Mt + Mr ≥ K+1` through the structured decomposition.
    FullDofSmd { mt: usize, mr: usize },
}

impl BeamScheme {
    pub fn orders(&self, k: usize) -> (usize, usize) {
        match *self {
            BeamScheme::ZfBroadcast => (k, 1),
            BeamScheme::ClosedForm { .. } => (k - 1, 2),
            BeamScheme::FullDofSmd { mt, mr } => (mt, mr),
        }
    }

    /// Short label used in exports: `zf`, `cf`, `cf-best`, `smd-<Mt>-<Mr>`.
    pub fn label(&self) -> String {
        match *self {
            BeamScheme::ZfBroadcast => "zf".into(),
            BeamScheme::ClosedForm { policy: EigenPolicy::Fixed } => "cf".into(),
            BeamScheme::ClosedForm { policy: EigenPolicy::Best } => "cf-best".into(),
            BeamScheme::FullDofSmd { mt, mr } => format!("smd-{mt}-{mr}"),
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "zf" => Ok(BeamScheme::ZfBroadcast),
            "cf" | "cf-fixed" => Ok(BeamScheme::ClosedForm { policy: EigenPolicy::Fixed }),
            "cf-best" => Ok(BeamScheme::ClosedForm { policy: EigenPolicy::Best }),
            other => {
                let parts: Vec<&str> = other.split('-').collect();
                match parts.as_slice() {
                    ["smd", mt, mr] => match (mt.parse(), mr.parse()) {
                        (Ok(mt), Ok(mr)) => Ok(BeamScheme::FullDofSmd { mt, mr }),
                        _ => Err(Error::arg(format!("bad scheme label {other:?}"))),
                    },
                    _ => Err(Error::arg(format!("unknown scheme {other:?}; use zf, cf, cf-best or smd-<Mt>-<Mr>"))),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub k: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<BeamScheme>,
}

impl LinkBudget {
    /// `0:5:60` dB, 100 trials.
    pub fn new(k: usize, schemes: Vec<BeamScheme>, seed: u64) -> Self {
        LinkBudget { k, snr_db: snr_grid(0.0, 5.0, 60.0).unwrap_or_default(), trials: 100, seed, schemes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("at least one trial is required"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|x| x.is_nan()) {
            return Err(Error::arg("SNR grid must be nonempty and free of NaN"));
        }
        if self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("SNR grid must be strictly increasing"));
        }
        if self.schemes.is_empty() {
            return Err(Error::arg("at least one scheme is required"));
        }
        for s in &self.schemes {
            let (mt, mr) = s.orders(self.k);
            if self.k < 2 && !matches!(s, BeamScheme::ZfBroadcast) {
                return Err(Error::arg(format!("scheme {} needs K >= 2", s.label())));
            }
            if matches!(s, BeamScheme::ClosedForm { .. }) && self.k < 3 {
                return Err(Error::arg("closed-form alignment needs K >= 3"));
            }
            if mt == 0 || mr == 0 || mt > self.k || mr > self.k || mt + mr < self.k + 1 {
                return Err(Error::arg(format!(
                    "scheme {} needs 1 <= Mt, Mr <= K and Mt + Mr >= K + 1 (K = {}, Mt = {mt}, Mr = {mr})",
                    s.label(),
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// `start, start+step, .., stop` (inclusive when it lands on the grid).
pub fn snr_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::arg(format!("bad SNR grid {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(Error::Resource(format!("SNR grid with {n} points")));
    }
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

/// Sum of `log₂(1 + SINR_k)` with per-antenna power normalization.
pub fn sum_rate(h: &CMatrix, beams: &BeamPair, snr_db: f64) -> Result<f64> {
    let k = h.nrows();
    let p = 10f64.powf(snr_db / 10.0);
    let load = (0..k).map(|i| beams.v.row(i).norm_squared()).fold(0.0_f64, f64::max);
    if load <= 0.0 || !load.is_finite() {
        return Err(Error::failure("transmit beams have zero or non-finite power"));
    }
    let alpha2 = p / load;
    let e = beams.effective_channel(h);
    let mut total = 0.0;
    for kk in 0..k {
        let noise = beams.u.column(kk).norm_squared();
        let interference: f64 = (0..k).filter(|&j| j != kk).map(|j| e[(kk, j)].norm_sqr()).sum();
        let signal = alpha2 * e[(kk, kk)].norm_sqr();
        let denom = noise + alpha2 * interference;
        let sinr = if signal == 0.0 { 0.0 } else { signal / denom };
        if !sinr.is_finite() {
            return Err(Error::failure(format!("non-finite SINR for user {}", kk + 1)));
        }
        total += (1.0 + sinr).log2();
    }
    Ok(total)
}

fn zf_beams(h: &CMatrix) -> Result<BeamPair> {
    let k = h.nrows();
    let v = linalg::checked_inverse(h, "H")?;
    let (vbar, ubar) = comp_smatrices(k, k, 1)?;
    Ok(BeamPair { v, u: CMatrix::identity(k, k), vbar, ubar })
}

/// Rates of one scheme on one channel across the SNR grid.
fn scheme_rates(h: &CMatrix, scheme: BeamScheme, grid: &[f64]) -> Result<Vec<f64>> {
    let rates = |b: &BeamPair| grid.iter().map(|&s| sum_rate(h, b, s)).collect::<Result<Vec<f64>>>();
    match scheme {
        BeamScheme::ZfBroadcast => rates(&zf_beams(h)?),
        BeamScheme::FullDofSmd { mt, mr } => rates(&full_dof_beams(h, mt, mr)?.beams),
        BeamScheme::ClosedForm { policy } => {
            let cf = ClosedForm::new(h)?;
            let candidates = match policy {
                EigenPolicy::Fixed => 1,
                EigenPolicy::Best => h.nrows() - 1,
            };
            let mut best: Option<Vec<f64>> = None;
            for idx in 1..=candidates {
                let sol = match cf.beams(idx) {
                    Ok(sol) => sol,
                    Err(e) if idx > 1 => {
                        log::debug!("eigenvector {idx} skipped: {e}");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let r = rates(&sol.beams)?;
                best = Some(match best {
                    None => r,
                    Some(b) => b.iter().zip(&r).map(|(x, y)| x.max(*y)).collect(),
                });
            }
            best.ok_or_else(|| Error::failure("no usable eigenvector"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub scheme: BeamScheme,
    pub label: String,
    pub mt: usize,
    pub mr: usize,
    pub mean_sum_rate: Vec<f64>,
    pub stddev: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k: usize,
    pub seed: u64,
    pub trials: usize,
    pub generator: String,
    /// Trials whose first channel draw was unusable and had to be redrawn.
    pub resampled_trials: usize,
    pub snr_db: Vec<f64>,
    pub curves: Vec<Curve>,
}

/// Runs every scheme on the same per-trial channel. Trial `t` draws
/// `H` from `derive_seed(seed, t)`; if any scheme fails on it, the trial is
/// redrawn from `derive_seed(derive_seed(seed, t), a)` for `a = 1, 2, ..`.
pub fn sweep(budget: &LinkBudget) -> Result<SweepResult> {
    budget.validate()?;
    let grid = &budget.snr_db;
    let ns = budget.schemes.len();
    // rates[s][t][g]
    let mut rates = vec![Vec::with_capacity(budget.trials); ns];
    let mut resampled = 0usize;
    let max_failures = (MAX_FAILURE_FRACTION * budget.trials as f64).floor() as usize;
    for t in 0..budget.trials {
        let base = derive_seed(budget.seed, t as u64);
        let mut done = false;
        for attempt in 0..MAX_TRIAL_ATTEMPTS {
            let seed = if attempt == 0 { base } else { derive_seed(base, attempt) };
            let h = sample_matrix(budget.k, seed);
            let trial: Result<Vec<Vec<f64>>> = budget.schemes.iter().map(|&s| scheme_rates(&h, s, grid)).collect();
            match trial {
                Ok(per_scheme) => {
                    for (s, r) in per_scheme.into_iter().enumerate() {
                        rates[s].push(r);
                    }
                    done = true;
                    break;
                }
                Err(e) => {
                    log::warn!("trial {t} attempt {attempt}: {e}");
                    if attempt == 0 {
                        resampled += 1;
                    }
                }
            }
        }
        if !done || resampled > max_failures {
            return Err(Error::failure(format!(
                "beam design failed on {resampled} of {} trials (limit {max_failures})",
                t + 1
            )));
        }
    }
    let curves = budget
        .schemes
        .iter()
        .zip(&rates)
        .map(|(&scheme, r)| {
            let (mt, mr) = scheme.orders(budget.k);
            let (mean, stddev) = (0..grid.len()).map(|g| mean_std(r.iter().map(|trial| trial[g]))).unzip();
            Curve { scheme, label: scheme.label(), mt, mr, mean_sum_rate: mean, stddev }
        })
        .collect();
    Ok(SweepResult {
        k: budget.k,
        seed: budget.seed,
        trials: budget.trials,
        generator: GENERATOR_VERSION.to_string(),
        resampled_trials: resampled,
        snr_db: grid.clone(),
        curves,
    })
}

/// Mean and sample standard deviation (0 for a single sample), summed in
/// trial order.
fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 { xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

impl SweepResult {
    pub fn curve(&self, label: &str) -> Result<&Curve> {
        self.curves.iter().find(|c| c.label == label).ok_or_else(|| Error::arg(format!("no curve labelled {label:?}")))
    }

    /// Copy with every real number rounded to [`EXPORT_DIGITS`] significant
    /// digits; this is exactly what the exporters write.
    pub fn rounded(&self) -> SweepResult {
        let r = |v: &Vec<f64>| v.iter().map(|&x| round_sig(x, EXPORT_DIGITS)).collect();
        SweepResult {
            snr_db: r(&self.snr_db),
            curves: self
                .curves
                .iter()
                .map(|c| Curve { mean_sum_rate: r(&c.mean_sum_rate), stddev: r(&c.stddev), ..c.clone() })
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,snr_db,mean_sum_rate,stddev,trials\n");
        for c in &self.curves {
            for (g, snr) in self.snr_db.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.label,
                    fmt_sig(*snr),
                    fmt_sig(c.mean_sum_rate[g]),
                    fmt_sig(c.stddev[g]),
                    self.trials
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rounded())?)
    }

    pub fn from_json(text: &str) -> Result<SweepResult> {
        Ok(serde_json::from_str(text)?)
    }

    /// Least-squares slope of the mean sum-rate over `lo ≤ snr_db ≤ hi`,
    /// converted from bits per dB to DoF (`× 10 / log₂ 10`).
    pub fn estimate_dof_slope(&self, label: &str, window: (f64, f64)) -> Result<f64> {
        let curve = self.curve(label)?;
        let pts: Vec<(f64, f64)> = self
            .snr_db
            .iter()
            .zip(&curve.mean_sum_rate)
            .filter(|(x, _)| **x >= window.0 && **x <= window.1)
            .map(|(x, y)| (*x, *y))
            .collect();
        if pts.len() < 2 {
            return Err(Error::arg(format!("window {:?} holds fewer than 2 grid points", window)));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx * 10.0 / 10f64.log2())
    }

    /// Mean horizontal distance in dB between two curves at matched rate:
    /// for each grid point of `worse` inside `window`, the SNR at which
    /// `better` reaches the same mean rate (by linear interpolation) is
    /// subtracted from that grid point. Positive when `better` is ahead.
    pub fn horizontal_gap_db(&self, better: &str, worse: &str, window: (f64, f64)) -> Result<f64> {
        let b = self.curve(better)?;
        let w = self.curve(worse)?;
        let gaps: Vec<f64> = self
            .snr_db
            .iter()
            .zip(&w.mean_sum_rate)
            .filter(|(x, _)| **x >= window.0 && **x <= window.1)
            .filter_map(|(x, rate)| interpolate_snr(&self.snr_db, &b.mean_sum_rate, *rate).map(|s| x - s))
            .collect();
        if gaps.is_empty() {
            return Err(Error::arg("no matched-rate points inside the window"));
        }
        Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

fn interpolate_snr(snr: &[f64], rate: &[f64], target: f64) -> Option<f64> {
    (1..snr.len()).find_map(|i| {
        let (r0, r1) = (rate[i - 1], rate[i]);
        if r0 <= target && target <= r1 && r1 > r0 {
            Some(snr[i - 1] + (target - r0) / (r1 - r0) * (snr[i] - snr[i - 1]))
        } else {
            None
        }
    })
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn fmt_sig(x: f64) -> String {
    format!("{}", round_sig(x, EXPORT_DIGITS))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

pub fn export(result: &SweepResult, format: ExportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => result.to_csv(),
        ExportFormat::Json => result.to_json()?,
    };
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use proptest::prelude::*;

    fn synthetic(d: f64) -> SweepResult {
        let snr_db = snr_grid(0.0, 5.0, 60.0).unwrap();
        let mean = snr_db.iter().map(|s| d * (10f64.powf(s / 10.0)).log2()).collect();
        SweepResult {
            k: 3,
            seed: 0,
            trials: 1,
            generator: GENERATOR_VERSION.into(),
            resampled_trials: 0,
            curves: vec![Curve {
                scheme: BeamScheme::ZfBroadcast,
                label: "zf".into(),
                mt: 3,
                mr: 1,
                mean_sum_rate: mean,
                stddev: vec![0.0; snr_db.len()],
            }],
            snr_db,
        }
    }

    #[test]
    fn single_user_closed_form() {
        let h = CMatrix::from_element(1, 1, C64::new(0.6, -0.8));
        let beams = BeamPair {
            v: CMatrix::from_element(1, 1, C64::new(2.0, 0.0)),
            u: CMatrix::from_element(1, 1, C64::new(0.5, 0.5)),
            vbar: crate::smd::SMatrix::ones(1),
            ubar: crate::smd::SMatrix::ones(1),
        };
        let p = 100.0;
        let gain = (C64::new(0.5, 0.5) * C64::new(0.6, -0.8) * 2.0).norm_sqr() / 4.0;
        let expect = (1.0 + p * gain / 0.5).log2();
        assert!((sum_rate(&h, &beams, 20.0).unwrap() - expect).abs() < 1e-12);
        assert!(sum_rate(&h, &beams, -400.0).unwrap() < 1e-30);
    }

    #[test]
    fn beam_scale_is_normalized_away() {
        let h = sample_matrix(3, 2);
        let b = zf_beams(&h).unwrap();
        let mut scaled = b.clone();
        scaled.v *= C64::new(2.0, 0.0);
        for snr in [0.0, 20.0, 45.0] {
            assert!((sum_rate(&h, &b, snr).unwrap() - sum_rate(&h, &scaled, snr).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_interference_is_counted() {
        let h = sample_matrix(3, 4);
        let mut b = zf_beams(&h).unwrap();
        let clean = sum_rate(&h, &b, 40.0).unwrap();
        b.v[(0, 1)] += C64::new(0.3, 0.0);
        assert!(sum_rate(&h, &b, 40.0).unwrap() < clean);
    }

    #[test]
    fn slope_of_exact_line() {
        for d in [1.0, 2.5, 3.0] {
            let r = synthetic(d);
            assert!((r.estimate_dof_slope("zf", (40.0, 60.0)).unwrap() - d).abs() < 1e-9);
        }
        assert!(synthetic(1.0).estimate_dof_slope("zf", (41.0, 44.0)).is_err());
        assert!(synthetic(1.0).estimate_dof_slope("cf", (40.0, 60.0)).is_err());
    }

    #[test]
    fn horizontal_gap_of_shifted_lines() {
        let mut r = synthetic(3.0);
        let mut shifted = r.curves[0].clone();
        shifted.label = "cf".into();
        shifted.mean_sum_rate = r.snr_db.iter().map(|s| 3.0 * (s - 3.0) / 10.0 * 10f64.log2()).collect();
        r.curves.push(shifted);
        assert!((r.horizontal_gap_db("zf", "cf", (20.0, 60.0)).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn budget_validation() {
        let mut b = LinkBudget::new(3, vec![BeamScheme::ZfBroadcast], 0);
        assert!(b.validate().is_ok());
        b.snr_db = vec![0.0, 0.0];
        assert!(b.validate().is_err());
        let b = LinkBudget::new(3, vec![BeamScheme::FullDofSmd { mt: 1, mr: 2 }], 0);
        assert!(b.validate().is_err());
        let mut b = LinkBudget::new(3, vec![BeamScheme::ZfBroadcast], 0);
        b.trials = 0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn labels_round_trip() {
        for s in [
            BeamScheme::ZfBroadcast,
            BeamScheme::ClosedForm { policy: EigenPolicy::Fixed },
            BeamScheme::ClosedForm { policy: EigenPolicy::Best },
            BeamScheme::FullDofSmd { mt: 2, mr: 3 },
        ] {
            assert_eq!(BeamScheme::from_label(&s.label()).unwrap(), s);
        }
        assert!(BeamScheme::from_label("mmse").is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(snr_grid(0.0, 5.0, 60.0).unwrap().len(), 13);
        assert_eq!(snr_grid(0.0, 0.1, 0.3).unwrap().len(), 4);
        assert!(snr_grid(0.0, 0.0, 1.0).is_err());
        assert!(snr_grid(5.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(x in -1e12f64..1e12) {
            let r = round_sig(x, 12);
            prop_assert_eq!(round_sig(r, 12), r);
            prop_assert!((r - x).abs() <= 1e-11 * x.abs());
        }
    }
}
