//! `dvrforge`: build Gaussian DVR matrices, emulate the recursive oracle,
//! evaluate resource-cost models, verify the unitary constructions and
//! solve small pseudospectral eigenproblems.
//!
//! Family grammar: `name[:p1[,p2]]` — `hermite`, `legendre`, `chebyshev1`,
//! `chebyshev2`, `laguerre[:alpha]` (alpha defaults to 0),
//! `jacobi:alpha,beta`.
//!
//! Exit codes: 0 success, 2 validation error, 3 tolerance failure, 4 i/o.

use clap::{Args, Parser, Subcommand};
use dvrforge_core::cost::{self, CountUnit, FStrategy, Method};
use dvrforge_core::dvr::{self, DvrHamiltonian};
use dvrforge_core::error::Error;
use dvrforge_core::fixed_point::{CostLedger, FxConfig, FxMode};
use dvrforge_core::io;
use dvrforge_core::linalg::Mat;
use dvrforge_core::oracle::{self, EmulatorOptions, OracleArithmetic, QromModel, SegmentSpec};
use dvrforge_core::polyfam::PolynomialFamily;
use dvrforge_core::quadrature;
use dvrforge_core::synthesis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dvrforge",
    about = "Gaussian DVR transformation matrices, recursive-oracle emulation and quantum resource models",
    long_about = None,
    after_help = "Family grammar: name[:p1[,p2]] -- hermite | legendre | chebyshev1 | chebyshev2 | \
                  laguerre[:alpha] (alpha defaults to 0) | jacobi:alpha,beta",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian quadrature nodes and weights as CSV (17 significant digits)
    Quadrature(QuadratureArgs),
    /// Build a DVR matrix; writes binary, CSV and a properties report
    Build(BuildArgs),
    /// Emulate the segmented recursive oracle and compare to the direct build
    Emulate(EmulateArgs),
    /// Evaluate one resource-cost model
    Estimate(EstimateArgs),
    /// Volume comparison grid over (N, m) with the advantage boundary
    Sweep(SweepArgs),
    /// Unitary-construction verifications
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Solve a small pseudospectral eigenproblem
    Solve(SolveArgs),
}

#[derive(Args)]
struct QuadratureArgs {
    /// Family spec, e.g. `hermite` or `jacobi:0.5,0.5`
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Output prefix; writes <prefix>.dvr1, <prefix>.csv, <prefix>.report.json
    #[arg(long, default_value = "dvr")]
    out_prefix: PathBuf,
    /// Seed for the randomized round-trip probe in the properties report
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct EmulateArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Segmentation parameter (power of two, 4 <= F <= N)
    #[arg(long)]
    f: usize,
    /// `double`, `fx`, or `fx:m=<bits>[,frac=<bits>]`
    #[arg(long, default_value = "double")]
    arith: String,
    /// Register width in bits for the cost model and fixed-point runs
    #[arg(long, default_value_t = 16)]
    m: u32,
    /// Fractional bits for fixed-point runs (default m-2)
    #[arg(long)]
    frac: Option<u32>,
    /// QROM model for initialization: `select` or `selswap`
    #[arg(long, default_value = "select")]
    qrom: String,
    /// Load only the upper half and reflect (parity families only)
    #[arg(long)]
    parity_half_load: bool,
    /// Accumulate the exact product and round once, instead of rounding
    /// the product before the accumulate
    #[arg(long)]
    accumulate_then_round: bool,
    /// Double-mode error tolerance (exit code 3 beyond it)
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value = "emulation")]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// lks | rec | rec-lks | rec-parity | reflections | be-qrom | be-arith
    #[arg(long)]
    method: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: u32,
    /// Segmentation parameter (oracle methods)
    #[arg(long, default_value_t = 8)]
    f: usize,
    /// Polynomial terms (be-arith)
    #[arg(long, default_value_t = 5)]
    p_terms: usize,
    /// Halve the data loads for parity-conserving matrices
    #[arg(long)]
    parity: bool,
    /// Dominant terms only (comparison-table rows)
    #[arg(long)]
    dominant: bool,
    /// `toffoli` or `tgate` (1 Toffoli = 4 T)
    #[arg(long, default_value = "toffoli")]
    unit: String,
    /// Optional JSON output path (report always prints to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// N range as `lo..hi` (powers of two are swept)
    #[arg(long, default_value = "16..16384")]
    n: String,
    /// m range as `lo..hi`
    #[arg(long, default_value = "4..32")]
    m: String,
    /// Evaluate at the continuous optimum F = N/(2m) instead of powers of two
    #[arg(long)]
    continuous_f: bool,
    /// Grid CSV output
    #[arg(long)]
    out: PathBuf,
    /// Advantage-boundary CSV output
    #[arg(long)]
    boundary_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Multiply out the N reflections and identify the anti-block pairing
    VerifyReflections(VerifyReflectionsArgs),
    /// Emit the state-preparation angle tree of one column as JSON
    Angles(AnglesArgs),
    /// Arcsin oracle values or one fixed-point polynomial evaluation
    Arcsin(ArcsinArgs),
}

#[derive(Args)]
struct VerifyReflectionsArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct AnglesArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Column index
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ArcsinArgs {
    /// Evaluate the Taylor polynomial at one point
    #[arg(long)]
    x: Option<f64>,
    #[arg(long, default_value_t = 5)]
    p_terms: usize,
    #[arg(long, default_value_t = 24)]
    m: u32,
    /// Entries above this magnitude are flagged for direct loading
    #[arg(long, default_value_t = synthesis::ARCSIN_TAYLOR_THRESHOLD)]
    tau: f64,
    /// Emit the full (2/pi) arcsin table of a DVR matrix instead
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// `harmonic`, `quartic:<lambda>` or `file:<path>` (one value per grid point)
    #[arg(long)]
    potential: String,
    #[arg(long, default_value_t = 5)]
    eigs: usize,
    /// Number of direct-product dimensions
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Kinetic matrix CSV (required for non-Hermite families)
    #[arg(long)]
    kinetic: Option<PathBuf>,
    /// Convergence ladder, e.g. `8,12,16,24,32` (1-D only)
    #[arg(long)]
    n_ladder: Option<String>,
    /// Reference size for the ladder error column
    #[arg(long, default_value_t = 64)]
    reference_n: usize,
    #[arg(long, default_value = "eigs.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DVRFORGE_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::ShapeMismatch { .. }
        | Error::SingularScaling(_)
        | Error::Resource(_) => 2,
        Error::Numeric(_) | Error::Synthesis(_) => 3,
        Error::Io(_) | Error::Json(_) => 4,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Quadrature(a) => cmd_quadrature(a),
        Command::Build(a) => cmd_build(a),
        Command::Emulate(a) => cmd_emulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => match a {
            SynthCommand::VerifyReflections(a) => cmd_verify_reflections(a),
            SynthCommand::Angles(a) => cmd_angles(a),
            SynthCommand::Arcsin(a) => cmd_arcsin(a),
        },
        Command::Solve(a) => cmd_solve(a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn cmd_quadrature(a: QuadratureArgs) -> Result<ExitCode, Error> {
    let family = PolynomialFamily::parse(&a.family)?;
    let quad = quadrature::nodes_weights(&family, a.n)?;
    io::write_quadrature_csv(&a.out, &quad)?;
    println!(
        "{}: {} nodes in [{}, {}], written to {}",
        family.tag(),
        a.n,
        quad.nodes[0],
        quad.nodes[a.n - 1],
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BuildReport {
    family: String,
    n: usize,
    unitarity_defect: f64,
    parity_residual: Option<f64>,
    kronecker_residual: Option<f64>,
    round_trip_error: f64,
    seed: u64,
}

fn cmd_build(a: BuildArgs) -> Result<ExitCode, Error> {
    let family = PolynomialFamily::parse(&a.family)?;
    let t = dvr::build_dvr(&family, a.n)?;
    if t.unitarity_defect > 1e-6 {
        eprintln!(
            "warning: unitarity defect {} exceeds 1e-6",
            t.unitarity_defect
        );
    }
    // randomized round-trip probe
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let v: Vec<f64> = (0..a.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let back = dvr::dvr_to_fbr(&t, &dvr::fbr_to_dvr(&t, &v)?)?;
    let round_trip_error = v
        .iter()
        .zip(&back)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    // the Kronecker sweep is O(N^3) basis evaluations; skip it for large N
    let kronecker_residual = if a.n <= 64 {
        Some(t.kronecker_residual()?)
    } else {
        None
    };
    let report = BuildReport {
        family: family.tag(),
        n: a.n,
        unitarity_defect: t.unitarity_defect,
        parity_residual: t.parity_residual(),
        kronecker_residual,
        round_trip_error,
        seed: a.seed,
    };
    let bin = a.out_prefix.with_extension("dvr1");
    let csv = a.out_prefix.with_extension("csv");
    let rep = a.out_prefix.with_extension("report.json");
    io::write_dvr1(&bin, &family.tag(), a.n, t.matrix().data())?;
    io::write_matrix_csv(&csv, a.n, t.matrix().data())?;
    write_json(&rep, &report)?;
    println!(
        "{} N={}: unitarity defect {:.3e}; wrote {}, {}, {}",
        family.tag(),
        a.n,
        report.unitarity_defect,
        bin.display(),
        csv.display(),
        rep.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// `double`, `fx`, or the inline form `fx:m=16[,frac=14]` (inline values
/// override the --m/--frac flags).
fn parse_arith(spec: &str, m_flag: u32, frac_flag: Option<u32>) -> Result<OracleArithmetic, Error> {
    if spec == "double" {
        return Ok(OracleArithmetic::Double { cost_bits: m_flag });
    }
    let Some(rest) = spec.strip_prefix("fx") else {
        return Err(Error::invalid(format!(
            "unknown arithmetic {spec:?}; use `double`, `fx` or `fx:m=<bits>`"
        )));
    };
    let (mut m, mut frac) = (m_flag, frac_flag);
    if let Some(params) = rest.strip_prefix(':') {
        for piece in params.split(',') {
            match piece.trim().split_once('=') {
                Some(("m", v)) => {
                    m = v
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad bit count {v:?}")))?
                }
                Some(("frac", v)) => {
                    frac = Some(
                        v.parse()
                            .map_err(|_| Error::invalid(format!("bad frac count {v:?}")))?,
                    )
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "bad arithmetic parameter {piece:?}"
                    )))
                }
            }
        }
    } else if !rest.is_empty() {
        return Err(Error::invalid(format!("unknown arithmetic {spec:?}")));
    }
    let frac = frac.unwrap_or(m.saturating_sub(2));
    Ok(OracleArithmetic::Fixed(FxConfig::new(
        m,
        frac,
        FxMode::Truncating,
    )?))
}

fn cmd_emulate(a: EmulateArgs) -> Result<ExitCode, Error> {
    let family = PolynomialFamily::parse(&a.family)?;
    let spec = SegmentSpec::new(a.n, a.f)?;
    let arith = parse_arith(&a.arith, a.m, a.frac)?;
    let options = EmulatorOptions {
        qrom: match a.qrom.as_str() {
            "select" => QromModel::Select,
            "selswap" => QromModel::SelSwap,
            other => return Err(Error::invalid(format!("unknown QROM model {other:?}"))),
        },
        parity_half_load: a.parity_half_load,
        round_before_accumulate: !a.accumulate_then_round,
    };
    let report = oracle::run_recursion(&spec, &family, arith, &options)?;
    let json_path = a.out_prefix.with_extension("report.json");
    let bin_path = a.out_prefix.with_extension("dvr1");
    write_json(&json_path, &report)?;
    io::write_dvr1(&bin_path, &family.tag(), a.n, &report.matrix)?;
    let note = if spec.pairs() == 0 {
        " (recursion loop empty at F=4: initialization plus one iteration)"
    } else {
        ""
    };
    println!(
        "{} N={} F={} [{}]: max |error| {:.3e}, ledger {} Toffoli{}; wrote {}, {}",
        family.tag(),
        a.n,
        a.f,
        report.arithmetic,
        report.max_abs_error,
        report.ledger.toffoli,
        note,
        json_path.display(),
        bin_path.display()
    );
    if matches!(arith, OracleArithmetic::Double { .. }) && report.max_abs_error > a.tolerance {
        eprintln!(
            "error: double-mode deviation {:.3e} exceeds tolerance {:.3e}",
            report.max_abs_error, a.tolerance
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_method(s: &str) -> Result<Method, Error> {
    Ok(match s {
        "lks" => Method::Lks,
        "rec" => Method::Rec,
        "rec-lks" => Method::RecLks,
        "rec-parity" => Method::RecParity,
        "reflections" => Method::Reflections,
        "be-qrom" => Method::BeQrom,
        "be-arith" => Method::BeArith,
        other => return Err(Error::invalid(format!("unknown method {other:?}"))),
    })
}

fn parse_unit(s: &str) -> Result<CountUnit, Error> {
    Ok(match s {
        "toffoli" => CountUnit::Toffoli,
        "tgate" => CountUnit::TGate,
        other => return Err(Error::invalid(format!("unknown unit {other:?}"))),
    })
}

fn cmd_estimate(a: EstimateArgs) -> Result<ExitCode, Error> {
    let method = parse_method(&a.method)?;
    let unit = parse_unit(&a.unit)?;
    let report = match method {
        Method::Lks | Method::Rec | Method::RecLks | Method::RecParity => {
            cost::cost_oracle(method, a.n, a.m, a.f, a.parity, a.dominant, unit)?
        }
        Method::Reflections | Method::BeQrom | Method::BeArith => {
            cost::cost_unitary(method, a.n, a.m, a.p_terms, unit)?
        }
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_range(s: &str) -> Result<(usize, usize), Error> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| Error::invalid(format!("range {s:?} must look like lo..hi")))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad range bound in {s:?}")))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad range bound in {s:?}")))?;
    Ok((lo, hi))
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode, Error> {
    let n_range = parse_range(&a.n)?;
    let (m_lo, m_hi) = parse_range(&a.m)?;
    let strategy = if a.continuous_f {
        FStrategy::Continuous
    } else {
        FStrategy::PowersOfTwo
    };
    let sweep = cost::volume_sweep(n_range, (m_lo as u32, m_hi as u32), strategy)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    writeln!(w, "n,m,f_opt,t_lks,t_rec,q_lks,q_rec,vol_lks,vol_rec,ratio")?;
    for r in &sweep.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n, r.m, r.f_opt, r.t_lks, r.t_rec, r.q_lks, r.q_rec, r.vol_lks, r.vol_rec, r.ratio
        )?;
    }
    w.flush()?;
    if let Some(bpath) = &a.boundary_out {
        let mut w = BufWriter::new(File::create(bpath)?);
        writeln!(w, "m,n_first_advantage")?;
        for b in &sweep.boundary {
            match b.n_first_advantage {
                Some(n) => writeln!(w, "{},{}", b.m, n)?,
                None => writeln!(w, "{},", b.m)?,
            }
        }
        w.flush()?;
    }
    if let Some(h) = &sweep.headline {
        println!("{}", h.note);
    }
    println!(
        "wrote {} grid cells to {}",
        sweep.rows.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_reflections(a: VerifyReflectionsArgs) -> Result<ExitCode, Error> {
    let family = PolynomialFamily::parse(&a.family)?;
    let t = dvr::build_dvr(&family, a.n)?;
    let prod = synthesis::reflection_product(&t)?;
    println!(
        "{} N={}: product realizes {:?}; residual [[0,T],[T^T,0]] = {:.3e}, \
         residual [[0,T^T],[T,0]] = {:.3e}, unitarity defect = {:.3e}",
        family.tag(),
        a.n,
        prod.realized,
        prod.residual_upper,
        prod.residual_lower,
        prod.matrix.orthogonality_defect()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_angles(a: AnglesArgs) -> Result<ExitCode, Error> {
    let family = PolynomialFamily::parse(&a.family)?;
    let t = dvr::build_dvr(&family, a.n)?;
    let tree = synthesis::angle_tree(&t, a.k)?;
    // verify before emitting
    synthesis::simulate_state_prep(&t, &tree)?;
    write_json(&a.out, &tree)?;
    println!(
        "column {} of {} N={}: {} levels written to {}",
        a.k,
        family.tag(),
        a.n,
        tree.levels.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ArcsinPointReport {
    x: f64,
    p_terms: usize,
    m: u32,
    value: f64,
    reference: f64,
    abs_error: f64,
    above_threshold: bool,
    ledger: CostLedger,
}

fn cmd_arcsin(a: ArcsinArgs) -> Result<ExitCode, Error> {
    match (&a.family, a.x) {
        (Some(fam), _) => {
            let family = PolynomialFamily::parse(fam)?;
            let n =
                a.n.ok_or_else(|| Error::invalid("--n is required with --family"))?;
            let t = dvr::build_dvr(&family, n)?;
            let oracle = synthesis::arcsin_oracle_values(&t, a.m)?;
            println!(
                "{} N={n}: (2/pi) arcsin table at m={} bits, max rotation-recovery error {:.3e}",
                family.tag(),
                a.m,
                oracle.max_recovery_error
            );
            if let Some(out) = &a.out {
                io::write_matrix_csv(out, n, &oracle.values)?;
                println!("wrote {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        (None, Some(x)) => {
            let cfg = FxConfig::truncating(a.m)?;
            let mut ledger = CostLedger::new();
            let eval = synthesis::arcsin_taylor(x, a.p_terms, &cfg, &mut ledger, a.tau)?;
            let value = dvrforge_core::fixed_point::fx_decode(&eval.value);
            let report = ArcsinPointReport {
                x,
                p_terms: a.p_terms,
                m: a.m,
                value,
                reference: x.asin(),
                abs_error: (value - x.asin()).abs(),
                above_threshold: eval.above_threshold,
                ledger,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(out) = &a.out {
                write_json(out, &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        (None, None) => Err(Error::invalid(
            "synth arcsin needs either --x or --family/--n".to_string(),
        )),
    }
}

enum Potential {
    Harmonic,
    Quartic(f64),
    File(PathBuf),
}

fn parse_potential(s: &str) -> Result<Potential, Error> {
    if s == "harmonic" {
        return Ok(Potential::Harmonic);
    }
    if let Some(lambda) = s.strip_prefix("quartic:") {
        let lambda = lambda
            .parse()
            .map_err(|_| Error::invalid(format!("bad quartic coefficient in {s:?}")))?;
        return Ok(Potential::Quartic(lambda));
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(Potential::File(PathBuf::from(path)));
    }
    Err(Error::invalid(format!(
        "unknown potential {s:?}; use harmonic, quartic:<lambda> or file:<path>"
    )))
}

fn grid_potential(pot: &Potential, dims: &[dvr::DvrMatrix]) -> Result<Vec<f64>, Error> {
    let total: usize = dims.iter().map(|d| d.n).product();
    match pot {
        Potential::File(path) => {
            let m = io::read_matrix_csv(path)?;
            let vals: Vec<f64> = m.data().to_vec();
            if vals.len() != total {
                return Err(Error::ShapeMismatch {
                    expected: total,
                    got: vals.len(),
                });
            }
            Ok(vals)
        }
        _ => {
            let mut v = vec![0.0; total];
            for (idx, value) in v.iter_mut().enumerate() {
                let mut rest = idx;
                let mut acc = 0.0;
                for d in dims.iter().rev() {
                    let i = rest % d.n;
                    rest /= d.n;
                    let x = d.quadrature.nodes[i];
                    acc += match pot {
                        Potential::Harmonic => x * x / 2.0,
                        Potential::Quartic(lambda) => x * x / 2.0 + lambda * x.powi(4),
                        Potential::File(_) => unreachable!(),
                    };
                }
                *value = acc;
            }
            Ok(v)
        }
    }
}

fn kinetic_for(
    family: &PolynomialFamily,
    n: usize,
    kinetic_path: &Option<PathBuf>,
) -> Result<Mat, Error> {
    if let Some(path) = kinetic_path {
        let k = io::read_matrix_csv(path)?;
        if k.rows() != n || k.cols() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: k.rows(),
            });
        }
        return Ok(k);
    }
    if family.tag() == "hermite" {
        Ok(dvr::hermite_kinetic(n))
    } else {
        Err(Error::invalid(format!(
            "no built-in kinetic matrix for {}; pass --kinetic <csv>",
            family.tag()
        )))
    }
}

fn solve_once(
    family: &PolynomialFamily,
    n: usize,
    dims: usize,
    pot: &Potential,
    kinetic_path: &Option<PathBuf>,
    n_eigs: usize,
) -> Result<Vec<f64>, Error> {
    let t = dvr::build_dvr(family, n)?;
    let k = kinetic_for(family, n, kinetic_path)?;
    let dvrs: Vec<dvr::DvrMatrix> = (0..dims).map(|_| t.clone()).collect();
    let kinetics: Vec<Mat> = (0..dims).map(|_| k.clone()).collect();
    let total: usize = dvrs.iter().map(|d| d.n).product();
    if total > 4096 {
        return Err(Error::invalid(format!(
            "total dimension {total} exceeds the dense-solver limit 4096"
        )));
    }
    let v = grid_potential(pot, &dvrs)?;
    let h = DvrHamiltonian::new(dvrs, kinetics, v)?;
    let (vals, _) = dvr::solve_schrodinger(&h, n_eigs.min(total))?;
    Ok(vals)
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode, Error> {
    let family = PolynomialFamily::parse(&a.family)?;
    let pot = parse_potential(&a.potential)?;
    let vals = solve_once(&family, a.n, a.dims, &pot, &a.kinetic, a.eigs)?;

    let mut w = BufWriter::new(File::create(&a.out)?);
    writeln!(w, "level,energy")?;
    for (i, e) in vals.iter().enumerate() {
        writeln!(w, "{i},{e}")?;
    }
    w.flush()?;
    println!(
        "{} N={} D={}: lowest {} levels written to {}",
        family.tag(),
        a.n,
        a.dims,
        vals.len(),
        a.out.display()
    );
    for (i, e) in vals.iter().enumerate() {
        println!("  E_{i} = {e}");
    }

    if let Some(ladder) = &a.n_ladder {
        if a.dims != 1 {
            return Err(Error::invalid("--n-ladder supports 1-D problems only"));
        }
        let sizes: Vec<usize> = ladder
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("bad ladder entry {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        let reference = solve_once(&family, a.reference_n, 1, &pot, &a.kinetic, a.eigs)?;
        let ladder_path = a.out.with_extension("convergence.csv");
        let mut w = BufWriter::new(File::create(&ladder_path)?);
        writeln!(w, "n,ground_energy,abs_error_vs_reference")?;
        let mut previous = f64::INFINITY;
        let mut monotone = true;
        for &size in &sizes {
            let v = solve_once(&family, size, 1, &pot, &a.kinetic, a.eigs)?;
            let err = (v[0] - reference[0]).abs();
            writeln!(w, "{size},{},{}", v[0], err)?;
            if err > previous {
                monotone = false;
            }
            previous = err;
        }
        w.flush()?;
        println!(
            "convergence ladder vs N={} written to {} (monotone: {monotone})",
            a.reference_n,
            ladder_path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}
