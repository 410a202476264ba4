//! `comp-dof`: command-line front end for the comp-dof toolkit.
//!
//! Results go to stdout (JSON with `--json`, `key: value` lines otherwise),
//! diagnostics to stderr. Exit codes: 0 success, 2 a checked property
//! failed, 3 numerical failure, 64 usage error, 74 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compdof::algebra::{self, Differentiation, RationalMap};
use compdof::bounds;
use compdof::channel::{sample_channel, sample_matrix, CooperationPattern};
use compdof::cj::{self, AlignmentOrder};
use compdof::closed_form::{alignment_report, ClosedForm};
use compdof::derived::{self, Scheme};
use compdof::simulator::{self, BeamScheme, ExportFormat, LinkBudget};
use compdof::smd::{self, SmdOptions};
use compdof::{CMatrix, Error, Rational, C64};
use serde::Serialize;
use serde_json::{json, Map, Value};

const EXIT_VERIFICATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser, Debug)]
#[command(
    name = "comp-dof",
    version,
    about = "DoF toolkit for interference channels with CoMP transmission and reception"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Global {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Override the acceptance tolerance of the checked property.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Outer bound, known DoF and region check for a cooperation pattern.
    Bounds(BoundsArgs),
    /// Structured decomposition A = V Uᵀ of a random target.
    SmdSolve(PatternArgs),
    /// Full-DoF beams for Mt + Mr ≥ K + 1 on a random channel.
    FullDof(PatternArgs),
    /// Closed-form alignment for Mt = K-1, Mr = 2.
    AlignClosedForm(AlignArgs),
    /// Zero-forcing transform to a derived channel.
    Derive(DeriveArgs),
    /// Full-rank decodability of the alignment scheme.
    CjVerify(CjArgs),
    /// Jacobian independence test of derived-channel coefficients.
    Independence(IndependenceArgs),
    /// Determinant of the square Jacobian block at the circulant point.
    #[command(name = "claim2")]
    JacobianBlock(JacobianBlockArgs),
    /// Monte-Carlo sum-rate sweep.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    mt: usize,
    #[arg(long)]
    mr: usize,
    /// Comma-separated DoF vector to test against the region bound, e.g. `1,1/2,1/2`.
    #[arg(long)]
    dof_vector: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct PatternArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    mt: usize,
    #[arg(long)]
    mr: usize,
    /// Initial number of continuation steps.
    #[arg(long, default_value_t = 10)]
    steps: usize,
}

#[derive(Args, Debug, Serialize)]
struct AlignArgs {
    #[arg(long)]
    k: usize,
    /// 1-based eigenvector index (descending |λ|).
    #[arg(long, conflicts_with = "best_eig")]
    eig: Option<usize>,
    /// Pick the eigenvector with the largest sum-rate at `--snr-db`.
    #[arg(long)]
    best_eig: bool,
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemeArg {
    Km2,
    General,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum IndependenceScheme {
    Km2,
    General,
    Cellular,
}

#[derive(Args, Debug, Serialize)]
struct DeriveArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long)]
    k: usize,
    /// Transmit cooperation order (defaults to K-2 for km2).
    #[arg(long)]
    mt: Option<usize>,
    /// Number of parallel channels.
    #[arg(long, default_value_t = 1)]
    l: usize,
}

#[derive(Args, Debug, Serialize)]
struct CjArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    mt: Option<usize>,
    /// Alignment order n.
    #[arg(long, default_value_t = 1)]
    order: u32,
}

#[derive(Args, Debug, Serialize)]
struct IndependenceArgs {
    #[arg(long, value_enum)]
    scheme: IndependenceScheme,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    mt: Option<usize>,
    /// Single receiver to test (default: all).
    #[arg(long)]
    receiver: Option<usize>,
    #[arg(long, default_value_t = algebra::DEFAULT_TRIALS)]
    trials: usize,
}

#[derive(Args, Debug, Serialize)]
struct JacobianBlockArgs {
    #[arg(long)]
    k: usize,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Comma-separated schemes: zf, cf, cf-best, smd-<Mt>-<Mr>.
    #[arg(long, default_value = "zf,cf")]
    schemes: String,
    /// SNR grid in dB as start:step:stop.
    #[arg(long, default_value = "0:5:60")]
    snr: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// CSV or JSON (by extension) output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the best eigenvector for `cf`.
    #[arg(long)]
    best_eig: bool,
    /// SNR window in dB for the slope estimate, as lo:hi.
    #[arg(long, default_value = "40:60")]
    window: String,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<Report, Failure>;

/// Structured result plus an optional failed check.
struct Report {
    fields: Map<String, Value>,
    failed: Option<String>,
}

impl Report {
    fn new(fields: Value) -> Self {
        let fields = match fields {
            Value::Object(m) => m,
            other => Map::from_iter([("result".to_string(), other)]),
        };
        Report { fields, failed: None }
    }

    fn check(mut self, ok: bool, what: impl Into<String>) -> Self {
        if !ok && self.failed.is_none() {
            self.failed = Some(what.into());
        }
        self
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, config, outcome) = dispatch(&cli);
    match outcome {
        Ok(report) => {
            let mut out = Map::new();
            out.insert("command".into(), json!(name));
            out.insert("config".into(), config);
            out.extend(report.fields);
            emit(&Value::Object(out), cli.global.json);
            match report.failed {
                None => ExitCode::SUCCESS,
                Some(what) => {
                    eprintln!("verification failed: {what}");
                    ExitCode::from(EXIT_VERIFICATION)
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Argument(_) | Error::Resource(_) => EXIT_USAGE,
                Error::NumericalDomain(_) | Error::NumericalFailure(_) => EXIT_NUMERICAL,
                Error::Io { .. } => EXIT_IO,
                Error::Serialization(_) => EXIT_SOFTWARE,
            })
        }
    }
}

fn config<T: Serialize>(global: &Global, args: &T) -> Value {
    let mut v = serde_json::to_value(global).unwrap_or(Value::Null);
    if let (Value::Object(g), Ok(Value::Object(a))) = (&mut v, serde_json::to_value(args)) {
        g.extend(a);
    }
    v
}

fn dispatch(cli: &Cli) -> (&'static str, Value, Outcome) {
    let g = &cli.global;
    match &cli.command {
        Command::Bounds(a) => ("bounds", config(g, a), run_bounds(a)),
        Command::SmdSolve(a) => ("smd-solve", config(g, a), run_smd_solve(g, a)),
        Command::FullDof(a) => ("full-dof", config(g, a), run_full_dof(g, a)),
        Command::AlignClosedForm(a) => ("align-closed-form", config(g, a), run_align(g, a)),
        Command::Derive(a) => ("derive", config(g, a), run_derive(g, a)),
        Command::CjVerify(a) => ("cj-verify", config(g, a), run_cj(g, a)),
        Command::Independence(a) => ("independence", config(g, a), run_independence(g, a)),
        Command::JacobianBlock(a) => ("claim2", config(g, a), run_jacobian_block(g, a)),
        Command::Simulate(a) => ("simulate", config(g, a), run_simulate(g, a)),
    }
}

fn emit(v: &Value, as_json: bool) {
    if as_json {
        println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
        return;
    }
    if let Value::Object(m) = v {
        for (key, val) in m {
            match val {
                Value::String(s) => println!("{key}: {s}"),
                Value::Array(items) if items.iter().any(|x| x.is_array() || x.is_object()) => {
                    println!("{key}: [{} entries; use --json]", items.len())
                }
                other => println!("{key}: {other}"),
            }
        }
    }
}

fn tol_or(g: &Global, default: f64) -> Result<f64, Failure> {
    match g.tol {
        None => Ok(default),
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(Failure::Usage(format!("--tol must be positive and finite, got {t}"))),
    }
}

fn cplx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cplx(m[(i, j)])).collect())).collect())
}

fn rational_opt(r: Option<Rational>) -> Value {
    r.map_or(Value::Null, |r| json!(r.to_string()))
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(Failure::Usage(format!("bad {what} {text:?}; expected lo:hi"))),
        },
        _ => Err(Failure::Usage(format!("bad {what} {text:?}; expected lo:hi"))),
    }
}

fn run_bounds(a: &BoundsArgs) -> Outcome {
    let outer = bounds::sum_dof_outer_bound(a.k, a.mt, a.mr)?;
    let known = bounds::known_dof(a.k, a.mt, a.mr)?;
    let full = bounds::full_dof_condition(a.k, a.mt, a.mr)?;
    let mut fields = json!({
        "outer_bound": outer.to_string(),
        "known_dof": rational_opt(known),
        "full_dof": full,
    });
    let mut ok = true;
    if let Some(text) = &a.dof_vector {
        let d = text
            .split(',')
            .map(|s| s.trim().parse::<Rational>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| Failure::Usage(format!("bad DoF vector {text:?}")))?;
        let p = CooperationPattern::new(a.k, a.mt, a.mr, 1)?;
        let violation = bounds::first_violation(&p, &d)?;
        ok = violation.is_none();
        let sum: Rational = d.iter().copied().sum();
        fields["dof_vector"] = json!({
            "entries": d.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "sum": sum.to_string(),
            "within_region": ok,
            "violated_constraint": violation.map(|c| json!({
                "users": c.users.as_slice(),
                "bound": c.bound,
                "set_a": c.set_a.as_slice(),
                "set_b": c.set_b.as_slice(),
            })),
        });
    }
    Ok(Report::new(fields).check(ok, "DoF vector violates the region bound"))
}

fn smd_opts(g: &Global, steps: usize, default_tol: f64) -> Result<SmdOptions, Failure> {
    if steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    Ok(SmdOptions { steps, tol: tol_or(g, default_tol)?.min(default_tol), ..SmdOptions::default() })
}

fn run_smd_solve(g: &Global, a: &PatternArgs) -> Outcome {
    let tol = tol_or(g, 1e-10)?;
    CooperationPattern::new(a.k, a.mt, a.mr, 1)?;
    let (vbar, ubar) = smd::comp_smatrices(a.k, a.mt, a.mr)?;
    if !smd::smd_feasible(&vbar, &ubar) {
        return Err(Failure::Usage(format!(
            "the sufficient decomposition conditions do not hold for (K, Mt, Mr) = ({}, {}, {}); they need Mt + Mr >= K + 1",
            a.k, a.mt, a.mr
        )));
    }
    let target = sample_matrix(a.k, g.seed);
    let sol = smd::smd_solve(&target, &vbar, &ubar, &smd_opts(g, a.steps, 1e-10)?)?;
    let relative = sol.residual / compdof::linalg::max_abs(&target);
    let masks = sol.beams.respects_masks();
    let fields = json!({
        "residual": sol.residual,
        "relative_residual": relative,
        "masks_respected": masks,
        "continuation_steps": sol.continuation_steps,
        "rejected_steps": sol.rejected_steps,
        "target": matrix(&target),
        "v": matrix(&sol.beams.v),
        "u": matrix(&sol.beams.u),
    });
    Ok(Report::new(fields)
        .check(relative <= tol && masks, format!("relative residual {relative:e} above {tol:e} or mask violated")))
}

fn run_full_dof(g: &Global, a: &PatternArgs) -> Outcome {
    let tol = tol_or(g, smd::FULL_DOF_TOL)?;
    CooperationPattern::new(a.k, a.mt, a.mr, 1)?;
    if a.mt + a.mr < a.k + 1 {
        return Err(Failure::Usage(format!(
            "full DoF needs Mt + Mr >= K + 1, got K = {}, Mt = {}, Mr = {}",
            a.k, a.mt, a.mr
        )));
    }
    let h = sample_matrix(a.k, g.seed);
    let sol = smd::full_dof_beams_with(&h, a.mt, a.mr, &smd_opts(g, a.steps, 1e-10)?)?;
    let residual = sol.beams.diagonalization_residual(&h);
    let masks = sol.beams.respects_masks();
    let fields = json!({
        "residual": residual,
        "masks_respected": masks,
        "continuation_steps": sol.continuation_steps,
        "rejected_steps": sol.rejected_steps,
        "h": matrix(&h),
        "v": matrix(&sol.beams.v),
        "u": matrix(&sol.beams.u),
    });
    Ok(Report::new(fields).check(residual < tol && masks, format!("max|UᵀHV - I| = {residual:e} not below {tol:e}")))
}

fn run_align(g: &Global, a: &AlignArgs) -> Outcome {
    let tol = tol_or(g, 1e-8)?;
    if a.k < 3 {
        return Err(Failure::Usage("closed-form alignment needs K >= 3".into()));
    }
    let h = sample_matrix(a.k, g.seed);
    let cf = ClosedForm::new(&h)?;
    let sol = if a.best_eig {
        let mut best: Option<(f64, _)> = None;
        for idx in 1..a.k {
            let s = cf.beams(idx)?;
            let rate = simulator::sum_rate(&h, &s.beams, a.snr_db)?;
            if best.as_ref().is_none_or(|(r, _)| rate > *r) {
                best = Some((rate, s));
            }
        }
        best.map(|(_, s)| s).ok_or_else(|| Failure::Core(Error::NumericalFailure("no eigenvector".into())))?
    } else {
        let idx = a.eig.unwrap_or(1);
        if idx == 0 || idx >= a.k {
            return Err(Failure::Usage(format!("--eig must lie in 1..={}", a.k - 1)));
        }
        cf.beams(idx)?
    };
    let report = alignment_report(&(&h * &sol.beams.v), 2)?;
    let holds = report.holds();
    let fields = json!({
        "eig_index": sol.eig_index,
        "eigenvalue": cplx(sol.eigenvalue),
        "residual": sol.residual,
        "leakage": sol.leakage,
        "alignment_conditions_hold": holds,
        "alignment_ranks": {
            "expected": report.expected_rank,
            "column_form": report.column_ranks,
            "row_form": report.row_ranks,
        },
        "sum_rate_bits": simulator::sum_rate(&h, &sol.beams, a.snr_db)?,
        "h": matrix(&h),
        "v": matrix(&sol.beams.v),
        "u": matrix(&sol.beams.u),
    });
    let ok = sol.residual < tol && sol.leakage < tol && holds;
    Ok(Report::new(fields).check(ok, "residual, U-structure leakage or alignment conditions out of tolerance"))
}

fn scheme_mt(scheme: SchemeArg, k: usize, mt: Option<usize>) -> Result<(Scheme, usize), Failure> {
    match scheme {
        SchemeArg::Km2 => {
            let want = k.checked_sub(2).filter(|_| k >= 4).ok_or_else(|| Failure::Usage("km2 needs K >= 4".into()))?;
            match mt {
                Some(m) if m != want => Err(Failure::Usage(format!("km2 needs Mt = K-2 = {want}, got {m}"))),
                _ => Ok((Scheme::Km2, want)),
            }
        }
        SchemeArg::General => {
            let mt = mt.ok_or_else(|| Failure::Usage("general scheme needs --mt".into()))?;
            Ok((Scheme::General, mt))
        }
    }
}

fn transform(scheme: Scheme, k: usize, mt: usize, l: usize, seed: u64) -> Result<derived::DerivedChannel, Failure> {
    let real = sample_channel(k, l, seed)?;
    Ok(match scheme {
        Scheme::Km2 => derived::zf_transform_km2(&real)?,
        _ => derived::zf_transform_general(&real, mt)?,
    })
}

fn run_derive(g: &Global, a: &DeriveArgs) -> Outcome {
    let tol = tol_or(g, 1e-10)?;
    let (scheme, mt) = scheme_mt(a.scheme, a.k, a.mt)?;
    let dc = transform(scheme, a.k, mt, a.l, g.seed)?;
    let err = derived::triviality_error(&dc);
    let coefficients: Vec<Value> = dc
        .links()
        .map(|(i, j, m)| {
            json!({
                "receiver": i,
                "cell": j,
                "stream": m,
                "mask": dc.triviality(i, j, m),
                "values": dc.series(i, j, m).iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let fields = json!({
        "scheme": scheme,
        "k": dc.k,
        "mt": dc.mt,
        "l": dc.l,
        "streams": dc.streams,
        "free_links": dc.free_links().len(),
        "triviality_error": err,
        "triviality_holds": err <= tol,
        "coefficients": coefficients,
    });
    Ok(Report::new(fields).check(err <= tol, format!("pinned coefficient off by {err:e}")))
}

fn run_cj(g: &Global, a: &CjArgs) -> Outcome {
    let (scheme, mt) = scheme_mt(a.scheme, a.k, a.mt)?;
    let dims = match scheme {
        Scheme::Km2 => cj::km2_dimensions(a.k, a.order)?,
        _ => cj::general_dimensions(a.k, mt, a.order)?,
    };
    let dc = transform(scheme, a.k, mt, dims.l, g.seed)?;
    let mks = match scheme {
        Scheme::Km2 => cj::build_mk_km2(&dc, a.order)?,
        _ => cj::build_mk_general(&dc, a.order)?,
    };
    let report = cj::verify_decodability(&mks);
    let finite = cj::achievable_dof(a.k, mt, scheme, AlignmentOrder::Finite(a.order))?;
    let limit = cj::achievable_dof(a.k, mt, scheme, AlignmentOrder::Limit)?;
    let pass = report.pass;
    let fields = json!({
        "scheme": scheme,
        "dimensions": dims,
        "triviality_error": derived::triviality_error(&dc),
        "report": report,
        "achievable_dof": finite.to_string(),
        "achievable_dof_limit": limit.to_string(),
        "outer_bound": bounds::sum_dof_outer_bound(a.k, mt, 1)?.to_string(),
    });
    Ok(Report::new(fields).check(pass, "some M_k lacks full column rank"))
}

fn run_independence(g: &Global, a: &IndependenceArgs) -> Outcome {
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let mt = match (a.scheme, a.mt) {
        (IndependenceScheme::Km2, Some(m)) if m + 2 != a.k => {
            return Err(Failure::Usage(format!("km2 needs Mt = K-2, got {m}")));
        }
        (IndependenceScheme::Km2, _) => a.k.saturating_sub(2),
        (_, Some(m)) => m,
        (_, None) => return Err(Failure::Usage("this scheme needs --mt".into())),
    };
    let receivers: Vec<usize> = match a.receiver {
        Some(r) => vec![r],
        None => (1..=a.k).collect(),
    };
    let opts = algebra::RankOptions {
        trials: a.trials,
        rel_tol: g.tol.unwrap_or(algebra::DEFAULT_RANK_TOL),
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut all_independent = true;
    for r in receivers {
        let map: Box<dyn RationalMap> = match a.scheme {
            IndependenceScheme::Km2 => Box::new(algebra::km2_coefficient_map(a.k, r)?),
            IndependenceScheme::General => Box::new(derived::general_coefficient_map(a.k, mt, r)?),
            IndependenceScheme::Cellular => Box::new(derived::cellular_coefficient_map(a.k, mt, r)?),
        };
        let rank = algebra::structural_rank_with(map.as_ref(), g.seed, opts)?;
        let independent = rank == map.n_outputs();
        all_independent &= independent;
        rows.push(json!({
            "receiver": r,
            "functions": map.n_outputs(),
            "variables": map.n_inputs(),
            "structural_rank": rank,
            "independent": independent,
        }));
    }
    let expects_independence = !matches!(a.scheme, IndependenceScheme::Cellular);
    let fields = json!({
        "expects_independence": expects_independence,
        "all_independent": all_independent,
        "receivers": rows,
    });
    Ok(Report::new(fields).check(!expects_independence || all_independent, "coefficient family is not independent"))
}

fn run_jacobian_block(g: &Global, a: &JacobianBlockArgs) -> Outcome {
    let tol = tol_or(g, 1e-6)?;
    let det = algebra::jacobian_block_determinant(a.k)?;
    let exact = algebra::jacobian_block_determinant_analytic(a.k)?;
    let jac = algebra::jacobian_block(a.k, Differentiation::Analytic)?;
    let fields = json!({
        "size": jac.nrows(),
        "determinant": cplx(det),
        "abs_determinant": det.norm(),
        "analytic_determinant": cplx(exact),
        "abs_analytic_determinant": exact.norm(),
    });
    let ok = (det.norm() - 1.0).abs() <= tol && (exact.norm() - 1.0).abs() <= tol;
    Ok(Report::new(fields).check(ok, format!("|det| = {} differs from 1 by more than {tol:e}", det.norm())))
}

fn run_simulate(g: &Global, a: &SimulateArgs) -> Outcome {
    let parts: Vec<&str> = a.snr.split(':').collect();
    let grid = match parts.as_slice() {
        [s, step, e] => match (s.parse(), step.parse(), e.parse()) {
            (Ok(s), Ok(step), Ok(e)) => simulator::snr_grid(s, step, e)?,
            _ => return Err(Failure::Usage(format!("bad --snr {:?}; expected start:step:stop", a.snr))),
        },
        _ => return Err(Failure::Usage(format!("bad --snr {:?}; expected start:step:stop", a.snr))),
    };
    let window = parse_pair(&a.window, "--window")?;
    let schemes = a
        .schemes
        .split(',')
        .map(|s| {
            let s = s.trim();
            let s = if a.best_eig && s == "cf" { "cf-best" } else { s };
            BeamScheme::from_label(s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let budget = LinkBudget { k: a.k, snr_db: grid, trials: a.trials, seed: g.seed, schemes };
    let result = simulator::sweep(&budget)?;
    if let Some(path) = &a.out {
        simulator::export(&result, ExportFormat::from_path(path), path)?;
    }
    let slopes: Map<String, Value> = result
        .curves
        .iter()
        .map(|c| {
            let s = result
                .estimate_dof_slope(&c.label, window)
                .ok()
                .map(|x| simulator::round_sig(x, simulator::EXPORT_DIGITS));
            (c.label.clone(), json!(s))
        })
        .collect();
    let fields = json!({
        "estimated_dof": slopes,
        "result": serde_json::to_value(result.rounded()).map_err(Error::from)?,
    });
    Ok(Report::new(fields))
}
