//! Command-line front end: load an array or sampling spec, compute certified
//! bounds, run Monte Carlo or exact verification, and emit JSON reports.
//!
//! Exit codes: 0 success, 1 malformed input, 2 precondition violation,
//! 3 internal check failure.

use clap::{Args, Parser, Subcommand};
use permsum_core::array::ArraySpec;
use permsum_core::bounds::{self, ConcentrationConstants, SrsSpec};
use permsum_core::error::Error;
use permsum_core::exact;
use permsum_core::perm::{dkw_epsilon, EmpiricalSample};
use permsum_core::{theorem_bound, CLT_CONSTANT};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "permsum",
    about = "Certified Berry-Esseen bounds for permutation statistics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Center, standardize, and report the certified bound 451*gamma.
    Bound(BoundArgs),
    /// Monte Carlo Kolmogorov distance with a DKW confidence band.
    Mc(McArgs),
    /// Exhaustive verification of the exact-enumeration checks (n <= 10).
    Verify(VerifyArgs),
    /// Concentration constants and the final coefficient at (n, m, c0).
    Constants(ConstantsArgs),
    /// Bound for sampling without replacement, cross-checked against the
    /// row-copy array construction.
    Srs(SrsArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Array spec JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    input: PathBuf,
    /// Number of Monte Carlo replicates.
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    /// Base seed; replicate r uses the derived stream (seed, r).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// DKW band level: the true distance is within ks +/- eps with
    /// probability at least 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Dump the sorted sample as CSV (header `w`, one value per line).
    #[arg(long)]
    dump_samples: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = CLT_CONSTANT)]
    c0: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SrsArgs {
    /// Sampling spec JSON file: {"n": .., "k": .., "y": [cells]}.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Bound(args) => {
            let array: ArraySpec = load_json(&args.input)?;
            let standardized = array.center()?.standardize()?;
            let report = theorem_bound(&standardized.summarize()?);
            emit(&report, args.output.as_deref())
        }
        Command::Mc(args) => cmd_mc(args),
        Command::Verify(args) => {
            let array: ArraySpec = load_json(&args.input)?;
            let report = run_verify(&array)?;
            emit(&report, args.output.as_deref())?;
            if report.all_pass {
                Ok(())
            } else {
                Err(Error::InternalCheck("one or more verification checks failed".into()))
            }
        }
        Command::Constants(args) => {
            let report = cmd_constants(args.n, args.m, args.c0)?;
            emit(&report, args.output.as_deref())?;
            if report.final_coefficient.is_none() {
                Err(Error::ThetaNonpositive { theta: report.constants.theta })
            } else {
                Ok(())
            }
        }
        Command::Srs(args) => {
            let spec: SrsSpec = load_json(&args.input)?;
            let report = cmd_srs(&spec)?;
            emit(&report, args.output.as_deref())?;
            if report.consistent {
                Ok(())
            } else {
                Err(Error::InternalCheck(format!(
                    "direct bound {} and row-copy bound {} disagree",
                    report.bound, report.row_copy_bound
                )))
            }
        }
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(report: &T, output: Option<&Path>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InternalCheck(format!("report serialization failed: {e}")))?;
    text.push('\n');
    print!("{text}");
    if let Some(path) = output {
        fs::write(path, &text)
            .map_err(|e| Error::Schema(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct McReport {
    n: usize,
    replicates: usize,
    seed: u64,
    alpha: f64,
    gamma: f64,
    bound: f64,
    ks: f64,
    dkw_eps: f64,
    /// ks - dkw_eps <= 451 * gamma.
    within_certificate: bool,
}

fn cmd_mc(args: McArgs) -> Result<(), Error> {
    if args.replicates == 0 {
        return Err(Error::InvalidArguments("need --replicates >= 1".into()));
    }
    let array: ArraySpec = load_json(&args.input)?;
    let standardized = array.center()?.standardize()?;
    let summary = standardized.summarize()?;

    let dkw_eps = dkw_epsilon(args.replicates, args.alpha)?;
    let sample = EmpiricalSample::draw(&standardized, args.replicates, args.seed)?;
    if let Some(path) = &args.dump_samples {
        let file = fs::File::create(path)
            .map_err(|e| Error::Schema(format!("cannot create {}: {e}", path.display())))?;
        sample
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::Schema(format!("cannot write {}: {e}", path.display())))?;
    }
    let ks = permsum_core::perm::ks_distance_to_normal(&sample);
    let bound = CLT_CONSTANT * summary.gamma;
    let report = McReport {
        n: summary.n,
        replicates: args.replicates,
        seed: args.seed,
        alpha: args.alpha,
        gamma: summary.gamma,
        bound,
        ks,
        dkw_eps,
        within_certificate: ks - dkw_eps <= bound,
    };
    emit(&report, args.output.as_deref())
}

#[derive(Serialize)]
struct ConstantsReport {
    constants: ConcentrationConstants,
    /// None when theta <= 0 (constants inapplicable at this n).
    final_coefficient: Option<f64>,
    /// final_coefficient < c0: the bound constant is certified at this n.
    certificate_ok: bool,
}

fn cmd_constants(n: u64, m: u32, c0: f64) -> Result<ConstantsReport, Error> {
    let constants = bounds::concentration_constants(n, m, c0)?;
    let final_coefficient = if constants.theta > 0.0 {
        Some(bounds::final_coefficient(n, c0)?)
    } else {
        None
    };
    let certificate_ok = final_coefficient.map(|v| v < c0).unwrap_or(false);
    Ok(ConstantsReport { constants, final_coefficient, certificate_ok })
}

#[derive(Serialize)]
struct SrsReport {
    n: usize,
    k: usize,
    sigma2: f64,
    /// Direct evaluation of the corollary bound.
    bound: f64,
    /// The same bound through center/standardize on the row-copy array.
    row_copy_bound: f64,
    relative_gap: f64,
    consistent: bool,
}

fn cmd_srs(spec: &SrsSpec) -> Result<SrsReport, Error> {
    let moments = spec.moments()?;
    let bound = bounds::srs_bound(spec)?;
    let standardized = spec.row_copy_array()?.center()?.standardize()?;
    let row_copy_bound = theorem_bound(&standardized.summarize()?).bound;
    let relative_gap = (bound - row_copy_bound).abs() / bound.abs().max(1e-300);
    Ok(SrsReport {
        n: spec.n(),
        k: spec.k(),
        sigma2: moments.sigma2,
        bound,
        row_copy_bound,
        relative_gap,
        consistent: relative_gap <= 1e-9,
    })
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    centering_applied: bool,
    checks: Vec<CheckResult>,
    all_pass: bool,
}

/// Runs every enumeration check applicable to a deterministic array of the
/// input's size.
fn run_verify(array: &ArraySpec) -> Result<VerifyReport, Error> {
    let n = array.n();
    if n > exact::MAX_EXACT_N {
        return Err(Error::SizeLimitExceeded { n, max: exact::MAX_EXACT_N });
    }
    let summary = array.summarize()?;
    if summary.variances.iter().flatten().any(|&v| v > 0.0) {
        return Err(Error::InvalidArguments(
            "verify needs a deterministic array (all cells point masses)".into(),
        ));
    }
    let centering_applied = !summary.centered_ok;
    let centered = array.center()?.into_spec();
    let c = centered.mean_matrix();
    let summary = centered.summarize()?;
    let mut checks = Vec::new();

    let dist = exact::exact_w_distribution(&c)?;
    checks.push(CheckResult {
        name: "mean_zero".into(),
        pass: dist.mean().abs() <= 1e-12,
        detail: format!("enumerated E W = {:.3e}", dist.mean()),
    });
    let var_gap = (dist.variance() - summary.var_w).abs();
    checks.push(CheckResult {
        name: "variance_identity".into(),
        pass: var_gap <= 1e-10,
        detail: format!(
            "enumerated Var(W) = {:.12}, formula = {:.12}, gap = {var_gap:.3e}",
            dist.variance(),
            summary.var_w
        ),
    });
    // the bound presumes Var(W) = 1, so the KS comparison runs on the
    // standardized matrix when the variance is not degenerate
    if summary.var_w > permsum_core::array::DEGENERATE_VAR_CUTOFF {
        let scale = 1.0 / summary.var_w.sqrt();
        let c_std: Vec<Vec<f64>> =
            c.iter().map(|row| row.iter().map(|v| v * scale).collect()).collect();
        let ks = exact::exact_w_distribution(&c_std)?.ks_to_normal();
        let bound = CLT_CONSTANT * summary.gamma * scale.powi(3);
        checks.push(CheckResult {
            name: "exact_ks_within_bound".into(),
            pass: ks <= bound,
            detail: format!("exact KS = {ks:.6}, 451*gamma = {bound:.6}"),
        });
    }

    if n <= 8 {
        let residual = exact::verify_linearity(&c)?;
        checks.push(CheckResult {
            name: "linearity_condition".into(),
            pass: residual <= 1e-10,
            detail: format!("max conditional residual = {residual:.3e}"),
        });
    }

    for m in 2..=4u32 {
        if n >= m as usize + 2 {
            let s = exact::exact_s_statistics(&c, m)?;
            checks.push(CheckResult {
                name: format!("reduced_second_moment_identity_m{m}"),
                pass: (s.es2 - s.es2_formula).abs() <= 1e-10,
                detail: format!("enumeration = {:.12}, expansion = {:.12}", s.es2, s.es2_formula),
            });
        }
    }

    if n >= 4 {
        let spread = summary.var_w.sqrt().max(1e-6);
        for (a, b) in [(-0.5, 0.5), (-1.0, 1.0), (-2.0 * spread, 2.0 * spread)] {
            let chk = exact::exact_concentration_check(&c, 2, a, b, CLT_CONSTANT)?;
            checks.push(CheckResult {
                name: format!("concentration_on_[{a},{b}]"),
                pass: chk.inequality_ok,
                detail: format!(
                    "lhs = {:.6}, rhs = {:.6}, applicable = {}",
                    chk.lhs, chk.rhs_lemma, chk.applicable
                ),
            });
        }
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { n, centering_applied, checks, all_pass })
}
