//! Command-line interface. The binary is a thin shell around the library:
//! every subcommand parses arguments, calls one library entry point, and
//! writes CSV or JSON artifacts with a manifest sidecar.

use crate::asymptotics::{self, FluxSide};
use crate::error::{Error, Result};
use crate::inversion::{self, FitOptions, Monotonicity};
use crate::laplace_domain;
use crate::model::{self, ProblemSpec, Side};
use crate::time_domain::{self, ContourConfig, FluxSeries, SeriesDomain};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "vosub", version, about = "Variable-order subdiffusion: forward solvers, flux asymptotics, and order recovery")]
struct Cli {
    /// Number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized internals.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for the verification checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and tabulate boundary fluxes.
    Forward(ForwardArgs),
    /// Compute the small-p expansion of the boundary flux.
    Asymptotics(AsymptoticsArgs),
    /// Laplace-transform a measured time series.
    Transform(TransformArgs),
    /// Recover the variable order from flux data.
    Invert(InvertArgs),
    /// Run the internal verification suite on a problem.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Laplace,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MonotoneArg {
    Inc,
    Dec,
    None,
}

#[derive(Args)]
struct ForwardArgs {
    /// Problem description (JSON).
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Laplace grid, lo:hi:logN or lo:hi:linN.
    #[arg(long)]
    p_grid: Option<String>,
    /// Time grid, lo:hi:logN or lo:hi:linN.
    #[arg(long)]
    t_grid: Option<String>,
    /// Contour angle in units of pi (time mode).
    #[arg(long, default_value_t = 0.75)]
    theta: f64,
    /// Contour arc radius scale (time mode).
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Quadrature nodes per contour segment (time mode).
    #[arg(long, default_value_t = 240)]
    quad_nodes: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Which boundary flux to expand.
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    side: SideArg,
    /// Also check the remainder decay rate numerically.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    /// Time-domain CSV: either (t, flux) or the forward output
    /// (t, flux_left, flux_right).
    #[arg(long)]
    input: PathBuf,
    /// Problem description supplying the tail growth powers.
    #[arg(long)]
    problem: PathBuf,
    /// Column to transform when the input has both sides.
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    side: SideArg,
    #[arg(long)]
    p_grid: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataDomain {
    Laplace,
    Time,
}

#[derive(Args)]
struct InvertArgs {
    /// Flux CSV: either (abscissa, flux) or (abscissa, flux_left, flux_right).
    #[arg(long)]
    data: PathBuf,
    /// Domain of the data abscissa. Time data is transformed first, which
    /// requires --medium for the excitation and the tail growth powers.
    #[arg(long, value_enum, default_value_t = DataDomain::Laplace)]
    domain: DataDomain,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    side: SideArg,
    /// Problem file providing the known medium and excitation, or "none"
    /// to recover the exponent range only.
    #[arg(long, default_value = "none")]
    medium: String,
    /// Monotonicity of the order along x.
    #[arg(long, value_enum, default_value_t = MonotoneArg::None)]
    monotone: MonotoneArg,
    #[arg(long, default_value_t = 3)]
    max_terms: usize,
    /// Fit window lo,hi in p.
    #[arg(long)]
    p_window: Option<String>,
    #[arg(long, default_value_t = 0.02)]
    merge_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses "lo:hi:logN" or "lo:hi:linN".
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid '{s}' is not lo:hi:logN or lo:hi:linN")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid bound '{}'", parts[1])))?;
    let (log, nstr) = if let Some(n) = parts[2].strip_prefix("log") {
        (true, n)
    } else if let Some(n) = parts[2].strip_prefix("lin") {
        (false, n)
    } else {
        return Err(Error::Parse(format!("grid spacing '{}' must start with log or lin", parts[2])));
    };
    let n: usize = nstr
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid count '{nstr}'")))?;
    if n < 2 || !(hi > lo) || (log && !(lo > 0.0)) {
        return Err(Error::Parse(format!("grid '{s}' is not a valid range")));
    }
    let pts = (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(f)
            } else {
                lo + (hi - lo) * f
            }
        })
        .collect();
    Ok(pts)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes to a temporary sibling first, then renames into place, so readers
/// never observe a partial artifact.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_manifest(
    out: &Path,
    command: &str,
    inputs: &[&Path],
    parameters: serde_json::Value,
    started: Instant,
) -> Result<()> {
    let mut hashes = BTreeMap::new();
    for p in inputs {
        hashes.insert(p.display().to_string(), sha256_file(p)?);
    }
    let manifest = json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": hashes,
        "parameters": parameters,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    let path = out.with_file_name(format!(
        "{}.manifest.json",
        out.file_name().and_then(|f| f.to_str()).unwrap_or("out")
    ));
    write_atomic(&path, &serde_json::to_string_pretty(&manifest)?)
}

fn csv_rows(header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = String::with_capacity(rows.len() * 64 + header.len() + 1);
    s.push_str(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn read_csv_series(path: &Path, side: Side) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if ln == 0 && cells[0].parse::<f64>().is_err() {
            continue; // header
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad number '{s}' on line {}", ln + 1)))
        };
        let a = parse(cells[0])?;
        let v = match cells.len() {
            2 => parse(cells[1])?,
            3 => match side {
                Side::Left => parse(cells[1])?,
                Side::Right => parse(cells[2])?,
            },
            n => {
                return Err(Error::Parse(format!(
                    "line {} has {n} columns; expected 2 or 3",
                    ln + 1
                )))
            }
        };
        rows.push((a, v));
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{} contains no data rows", path.display())));
    }
    Ok(rows)
}

fn load_problem_checked(path: &Path) -> Result<ProblemSpec> {
    if !path.exists() {
        return Err(Error::Validation(vec![format!(
            "problem file {} does not exist",
            path.display()
        )]));
    }
    model::load_problem(path)
}

fn run_forward(args: &ForwardArgs) -> Result<()> {
    let started = Instant::now();
    let spec = load_problem_checked(&args.problem)?;
    match args.mode {
        Mode::Laplace => {
            let grid = parse_grid(
                args.p_grid
                    .as_deref()
                    .ok_or_else(|| Error::Validation(vec!["--p-grid is required in laplace mode".into()]))?,
            )?;
            let mut rows = Vec::with_capacity(grid.len());
            for &p in &grid {
                let sol = laplace_domain::solve_bvp(&spec, p)?;
                rows.push(vec![p, sol.flux_left, sol.flux_right]);
            }
            write_atomic(&args.out, &csv_rows("p,flux_left,flux_right", &rows))?;
            write_manifest(
                &args.out,
                "forward",
                &[&args.problem],
                json!({"mode": "laplace", "p_grid": args.p_grid, "n_points": grid.len()}),
                started,
            )
        }
        Mode::Time => {
            let grid = parse_grid(
                args.t_grid
                    .as_deref()
                    .ok_or_else(|| Error::Validation(vec!["--t-grid is required in time mode".into()]))?,
            )?;
            let contour = ContourConfig {
                theta: args.theta * std::f64::consts::PI,
                delta: args.delta,
                quad_nodes: args.quad_nodes,
            };
            contour.validate()?;
            let out = time_domain::forward_flux_time(&spec, &contour, &grid)?;
            let rows: Vec<Vec<f64>> = out.iter().map(|&(t, l, r)| vec![t, l, r]).collect();
            write_atomic(&args.out, &csv_rows("t,flux_left,flux_right", &rows))?;
            write_manifest(
                &args.out,
                "forward",
                &[&args.problem],
                json!({
                    "mode": "time", "t_grid": args.t_grid,
                    "theta": contour.theta, "delta": contour.delta,
                    "quad_nodes": contour.quad_nodes,
                }),
                started,
            )
        }
    }
}

fn run_asymptotics(args: &AsymptoticsArgs) -> Result<()> {
    let started = Instant::now();
    let spec = load_problem_checked(&args.problem)?;
    let side = match args.side {
        SideArg::Left => FluxSide::LeftFlux,
        SideArg::Right => FluxSide::RightFlux,
    };
    let expansion = asymptotics::expansion_coefficients(&spec, side)?;
    let verify = if args.verify {
        let grid = parse_grid("1e-6:1e-3:log24")?;
        Some(asymptotics::verify_expansion(&spec, side, &grid, &expansion)?)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Report<'a> {
        expansion: &'a asymptotics::AsymptoticExpansion,
        #[serde(skip_serializing_if = "Option::is_none")]
        verify: Option<asymptotics::VerifyReport>,
    }
    let report = Report {
        expansion: &expansion,
        verify,
    };
    write_atomic(&args.out, &serde_json::to_string_pretty(&report)?)?;
    write_manifest(
        &args.out,
        "asymptotics",
        &[&args.problem],
        json!({"side": format!("{:?}", args.side), "verify": args.verify}),
        started,
    )
}

fn run_transform(args: &TransformArgs) -> Result<()> {
    let started = Instant::now();
    let spec = load_problem_checked(&args.problem)?;
    if !args.input.exists() {
        return Err(Error::Validation(vec![format!(
            "input file {} does not exist",
            args.input.display()
        )]));
    }
    let samples = read_csv_series(&args.input, args.side.into())?;
    let series = FluxSeries {
        domain: SeriesDomain::Time,
        side: args.side.into(),
        samples,
    };
    let p_grid = parse_grid(&args.p_grid)?;
    let n = spec.excitation.degree() as f64;
    let tail = [n, n - spec.order.min_alpha()];
    let out = time_domain::laplace_from_time(&series, &p_grid, &tail)?;
    let rows: Vec<Vec<f64>> = out.samples.iter().map(|&(p, f)| vec![p, f]).collect();
    write_atomic(&args.out, &csv_rows("p,flux", &rows))?;
    write_manifest(
        &args.out,
        "transform",
        &[&args.input, &args.problem],
        json!({"p_grid": args.p_grid, "side": format!("{:?}", args.side), "tail_powers": tail}),
        started,
    )
}

fn run_invert(args: &InvertArgs) -> Result<()> {
    let started = Instant::now();
    if !args.data.exists() {
        return Err(Error::Validation(vec![format!(
            "data file {} does not exist",
            args.data.display()
        )]));
    }
    let samples = read_csv_series(&args.data, args.side.into())?;
    let p_window = match &args.p_window {
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("--p-window '{s}' is not lo,hi")));
            }
            let lo: f64 = parts[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad window bound '{}'", parts[0])))?;
            let hi: f64 = parts[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad window bound '{}'", parts[1])))?;
            Some((lo, hi))
        }
        None => None,
    };
    let opts = FitOptions {
        p_window,
        merge_tol: args.merge_tol,
        max_terms: args.max_terms,
        seed: 0,
    };
    let medium_spec = if args.medium == "none" {
        None
    } else {
        Some(load_problem_checked(Path::new(&args.medium))?)
    };
    let series = match args.domain {
        DataDomain::Laplace => FluxSeries {
            domain: SeriesDomain::Laplace,
            side: args.side.into(),
            samples,
        },
        DataDomain::Time => {
            let spec = medium_spec.as_ref().ok_or_else(|| {
                Error::Validation(vec![
                    "time-domain data needs --medium for the transform tail powers".into(),
                ])
            })?;
            let time_series = FluxSeries {
                domain: SeriesDomain::Time,
                side: args.side.into(),
                samples,
            };
            let (lo, hi) = p_window.unwrap_or((1e-8, 1e-3));
            let grid: Vec<f64> = (0..48)
                .map(|i| lo * (hi / lo).powf(i as f64 / 47.0))
                .collect();
            let n = spec.excitation.degree() as f64;
            let tail = [n, n - spec.order.min_alpha()];
            time_domain::laplace_from_time(&time_series, &grid, &tail)?
        }
    };
    let fit = inversion::fit_exponents(
        &series,
        medium_spec.as_ref().map(|s| &s.excitation),
        &opts,
    )?;
    let mut report = json!({
        "fit": fit,
        "range_hat": inversion::recover_range(&fit),
    });
    if let Some(spec) = &medium_spec {
        let monotone = match args.monotone {
            MonotoneArg::Inc => Monotonicity::Increasing,
            MonotoneArg::Dec => Monotonicity::Decreasing,
            MonotoneArg::None => Monotonicity::None,
        };
        let recovered =
            inversion::recover_breakpoints(&fit, &spec.medium, args.side.into(), monotone)?;
        report["recovered"] = serde_json::to_value(&recovered)?;
    }
    write_atomic(&args.out, &serde_json::to_string_pretty(&report)?)?;
    let mut inputs: Vec<&Path> = vec![&args.data];
    let medium_path = PathBuf::from(&args.medium);
    if args.medium != "none" {
        inputs.push(&medium_path);
    }
    write_manifest(
        &args.out,
        "invert",
        &inputs,
        json!({
            "side": format!("{:?}", args.side), "medium": args.medium,
            "monotone": format!("{:?}", args.monotone),
            "domain": format!("{:?}", args.domain),
            "max_terms": args.max_terms, "p_window": args.p_window,
            "merge_tol": args.merge_tol,
        }),
        started,
    )
}

fn run_verify(args: &VerifyArgs, tol: f64) -> Result<()> {
    let started = Instant::now();
    let spec = load_problem_checked(&args.problem)?;
    let mut checks: Vec<(String, String)> = Vec::new();
    let mut failed = false;
    let mut push = |name: &str, status: std::result::Result<String, String>| match status {
        Ok(detail) => checks.push((name.to_string(), format!("PASS {detail}"))),
        Err(detail) => {
            checks.push((name.to_string(), format!("FAIL {detail}")));
        }
    };

    // Structural analysis: factor signs, table positivity, profile gluing.
    let analysis = asymptotics::analyze(&spec);
    match &analysis {
        Ok(a) => {
            let m_err = a
                .profiles
                .m_factors
                .iter()
                .map(|m| (m - 1.0).abs())
                .fold(0.0f64, f64::max);
            if spec.order.n_interfaces() == 0 {
                push("interface_factors", Ok("vacuous (no interfaces)".into()));
                push("profile_gluing", Ok("vacuous (no interfaces)".into()));
            } else {
                push(
                    "interface_factors",
                    if m_err < tol {
                        Ok(format!("max |M_i - 1| = {m_err:.2e}"))
                    } else {
                        Err(format!("max |M_i - 1| = {m_err:.2e}"))
                    },
                );
                let jump = a
                    .profiles
                    .max_u_value_jump
                    .max(a.profiles.max_u_deriv_jump)
                    .max(a.profiles.max_ubar_value_jump)
                    .max(a.profiles.max_ubar_deriv_jump);
                push(
                    "profile_gluing",
                    if jump < tol {
                        Ok(format!("max interface jump = {jump:.2e}"))
                    } else {
                        Err(format!("max interface jump = {jump:.2e}"))
                    },
                );
            }
        }
        Err(e) => {
            push("interface_factors", Err(format!("{e}")));
            push("profile_gluing", Err(format!("{e}")));
        }
    }

    // Trace identities of the interface recursion at a small p.
    let eigsys: Result<Vec<_>> = (0..spec.order.values.len())
        .map(|j| {
            let iv = (spec.order.breakpoints[j], spec.order.breakpoints[j + 1]);
            crate::sturm_liouville::eigenpairs(
                &spec.medium,
                iv,
                spec.discretization.eigenpairs,
                spec.discretization.resolved_grid(),
            )
        })
        .collect();
    for &p in &[1e-6, 1e-5, 1e-4] {
        let name = format!("trace_identities_p{p:.0e}");
        if spec.order.n_interfaces() == 0 {
            push(&name, Ok("vacuous (no interfaces)".into()));
            continue;
        }
        let res = (|| -> Result<f64> {
            let sol = laplace_domain::solve_bvp(&spec, p)?;
            let a = analysis.as_ref().map_err(|e| Error::Solver(format!("{e}")))?;
            let eigsys = eigsys.as_ref().map_err(|e| Error::Solver(format!("{e}")))?;
            let aux: Result<Vec<_>> = (0..spec.order.values.len())
                .map(|j| {
                    let iv = (spec.order.breakpoints[j], spec.order.breakpoints[j + 1]);
                    crate::sturm_liouville::auxiliary_series(
                        &eigsys[j],
                        (spec.medium.sigma.eval(iv.0), spec.medium.sigma.eval(iv.1)),
                        p,
                        spec.order.values[j],
                        &a.stars[j],
                    )
                })
                .collect();
            let (c, d) = laplace_domain::cd_factors(&spec, &a.pairs, &aux?)?;
            let state = laplace_domain::interface_recursion(&c, &d);
            let rep = laplace_domain::verify_coefficient_identities(&sol, &state);
            Ok(rep
                .res_r
                .max(rep.res_r_tilde)
                .max(rep.tridiag_residuals.iter().cloned().fold(0.0, f64::max)))
        })();
        match res {
            Ok(r) if r < tol => push(&name, Ok(format!("max residual = {r:.2e}"))),
            Ok(r) => push(&name, Err(format!("max residual = {r:.2e}"))),
            Err(e) => push(&name, Err(format!("{e}"))),
        }
    }

    // Remainder decay of the flux expansion.
    let grid = parse_grid("1e-6:1e-3:log16")?;
    match asymptotics::expansion_coefficients(&spec, FluxSide::LeftFlux)
        .and_then(|e| asymptotics::verify_expansion(&spec, FluxSide::LeftFlux, &grid, &e))
    {
        Ok(v) => push(
            "remainder_decay",
            if v.pass {
                Ok(format!("slope = {:.3} >= {:.3}", v.slope, v.threshold))
            } else {
                Err(format!("slope = {:.3} < {:.3}", v.slope, v.threshold))
            },
        ),
        Err(e) => push("remainder_decay", Err(format!("{e}"))),
    }

    for (name, status) in &checks {
        println!("{status:<60} {name}");
        if status.starts_with("FAIL") {
            failed = true;
        }
    }
    if let Some(out) = &args.out {
        let report: Vec<_> = checks
            .iter()
            .map(|(n, s)| json!({"check": n, "status": s}))
            .collect();
        write_atomic(out, &serde_json::to_string_pretty(&json!({ "checks": report }))?)?;
        write_manifest(out, "verify", &[&args.problem], json!({}), started)?;
    }
    if failed {
        return Err(Error::Solver("verification suite reported failures".into()));
    }
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Parse(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
        Error::Solver(_) => 3,
        Error::NonConvergence(_) => 4,
    }
}

/// Parses argv, dispatches, and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore failure when a pool already exists (e.g. repeated calls in
        // tests); the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Forward(a) => run_forward(a),
        Command::Asymptotics(a) => run_asymptotics(a),
        Command::Transform(a) => run_transform(a),
        Command::Invert(a) => run_invert(a),
        Command::Verify(a) => run_verify(a, cli.tol),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
