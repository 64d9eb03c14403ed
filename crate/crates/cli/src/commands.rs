use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cayley_gibbs::oracle::{check_kolmogorov, finite_volume_measure, root_marginal_ratio, KOLMOGOROV_TOL};
use cayley_gibbs::scheme::{classify as classify_scheme, enumerate_schemes, nonuniqueness_criterion, scheme_count};
use cayley_gibbs::solver::solve_system;
use cayley_gibbs::sweep::{sweep_rows, theta_grid, SWEEP_COLUMNS};
use cayley_gibbs::tree::{assign_fields, build_tree};
use cayley_gibbs::{Coupling, FieldLabel, FieldPair, ReducedParams, SchemeMatrix, SolverConfig};
use clap::Args;
use serde::Serialize;

use crate::config::{ConfigFile, SolverArgs};
use crate::error::{CliError, EXIT_VERIFY_FAILED};
use crate::format::{g12, write_header, write_sweep_row};
use crate::SchemeArgs;

pub const MAX_SWEEP_POINTS: u64 = 10_000_000;
pub const MAX_ENUMERATE_K: u32 = 8;
pub const COMPAT_TOL: f64 = 1e-9;
pub const RATIO_TOL: f64 = 1e-10;

type CmdResult = Result<ExitCode, CliError>;

fn check_theta(theta: f64) -> Result<(), CliError> {
    if theta.is_finite() && theta != 0.0 && theta.abs() < 1.0 {
        Ok(())
    } else {
        Err(CliError::theta(format!("theta must satisfy 0 < |theta| < 1, got {theta}")))
    }
}

fn row(v: &[i64], name: &str) -> Result<[u32; 4], CliError> {
    let bad = || CliError::usage(format!("--{name} needs four non-negative counts, got {v:?}"));
    if v.len() != 4 {
        return Err(bad());
    }
    let mut out = [0u32; 4];
    for (o, &x) in out.iter_mut().zip(v) {
        *o = u32::try_from(x).map_err(|_| bad())?;
    }
    Ok(out)
}

impl SchemeArgs {
    fn matrix(&self) -> Result<SchemeMatrix, CliError> {
        Ok(SchemeMatrix::new(self.k, row(&self.a, "a")?, row(&self.b, "b")?)?)
    }
}

/// `a1,a2,a3,a4/b1,b2,b3,b4`.
fn parse_scheme(k: u32, s: &str) -> Result<SchemeMatrix, CliError> {
    let bad = || CliError::usage(format!("scheme {s:?} is not of the form a1,a2,a3,a4/b1,b2,b3,b4"));
    let (a, b) = s.split_once('/').ok_or_else(bad)?;
    let parse_row = |r: &str| -> Result<Vec<i64>, CliError> {
        r.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| bad())).collect()
    };
    Ok(SchemeMatrix::new(k, row(&parse_row(a)?, "a")?, row(&parse_row(b)?, "b")?)?)
}

fn write_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::create(p).map_err(|e| CliError::io(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

#[derive(Serialize)]
struct SchemeJson {
    k: u32,
    a: [u32; 4],
    b: [u32; 4],
}

impl From<&SchemeMatrix> for SchemeJson {
    fn from(m: &SchemeMatrix) -> Self {
        Self { k: m.k(), a: m.a_row(), b: m.b_row() }
    }
}

#[derive(Serialize)]
struct SolutionJson {
    h: f64,
    l: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SolveJson {
    reduced: ReducedParams,
    criterion: bool,
    solutions: Vec<SolutionJson>,
    family: String,
}

pub fn solve(scheme: &SchemeArgs, theta: f64, config: Option<&Path>, solver: &SolverArgs) -> CmdResult {
    let m = scheme.matrix()?;
    check_theta(theta)?;
    let cfg = solver.resolve(&ConfigFile::load(config)?)?;
    let r = m.reduce();
    let sols = solve_system(&r, theta, &cfg)?;
    for w in sols.warnings() {
        eprintln!("warning: {w}");
    }
    write_json(&SolveJson {
        reduced: r,
        criterion: nonuniqueness_criterion(&r, theta),
        solutions: sols.iter_with_residuals().map(|(p, residual)| SolutionJson { h: p.h, l: p.l, residual }).collect(),
        family: classify_scheme(&m, &sols.largest_nonneg()).to_string(),
    })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    theta_lo: Option<f64>,
    #[arg(long)]
    theta_hi: Option<f64>,
    /// Number of θ values, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
    /// Restrict to one scheme, `a1,a2,a3,a4/b1,b2,b3,b4`; repeatable.
    /// Every scheme of order k when absent.
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// CSV output path; standard output when absent or `-`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Warnings sidecar JSON; defaults to `<out>.sidecar.json` when `--out` is a file.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Serialize)]
struct WarningJson {
    scheme: String,
    theta: f64,
    warning: cayley_gibbs::SolverWarning,
}

#[derive(Serialize)]
struct SidecarJson {
    generated_at: String,
    command: &'static str,
    k: u32,
    theta_lo: f64,
    theta_hi: f64,
    steps: usize,
    rows: usize,
    solver: SolverConfig,
    warnings: Vec<WarningJson>,
}

pub fn sweep(args: &SweepArgs) -> CmdResult {
    let file = ConfigFile::load(args.config.as_deref())?;
    let need = |what: &str| CliError::usage(format!("sweep needs --{what} (or `{}` in the config file)", what.replace('-', "_")));
    let k: u32 = file.pick(args.k, "k")?.ok_or_else(|| need("k"))?;
    let lo: f64 = file.pick(args.theta_lo, "theta_lo")?.ok_or_else(|| need("theta-lo"))?;
    let hi: f64 = file.pick(args.theta_hi, "theta_hi")?.ok_or_else(|| need("theta-hi"))?;
    let steps: usize = file.pick(args.steps, "steps")?.ok_or_else(|| need("steps"))?;
    let jobs: usize = file.pick(args.jobs, "jobs")?.unwrap_or(0);
    let out: Option<PathBuf> = file.pick(args.out.clone(), "out")?;
    let sidecar: Option<PathBuf> = file.pick(args.sidecar.clone(), "sidecar")?.or_else(|| {
        out.as_ref().filter(|p| p.as_os_str() != "-").map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".sidecar.json");
            PathBuf::from(s)
        })
    });
    let cfg = args.solver.resolve(&file)?;

    if k == 0 {
        return Err(CliError::usage("k must be >= 1"));
    }
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(CliError::theta(format!("sweep needs 0 < theta_lo < theta_hi < 1, got [{lo}, {hi}]")));
    }
    let thetas = theta_grid(lo, hi, steps).map_err(|e| CliError::usage(e.to_string()))?;

    let scheme_specs: Vec<String> = if args.schemes.is_empty() {
        match file.get_raw("schemes") {
            Some(list) if list.trim() != "all" => list.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            _ => Vec::new(),
        }
    } else {
        args.schemes.clone()
    };
    let total = if scheme_specs.is_empty() { scheme_count(k) } else { scheme_specs.len() as u64 };
    if total.saturating_mul(steps as u64) > MAX_SWEEP_POINTS {
        return Err(CliError::capacity(format!(
            "{total} schemes x {steps} steps exceeds {MAX_SWEEP_POINTS} grid points"
        )));
    }
    let schemes: Vec<SchemeMatrix> = if scheme_specs.is_empty() {
        enumerate_schemes(k).collect()
    } else {
        scheme_specs.iter().map(|s| parse_scheme(k, s)).collect::<Result<_, _>>()?
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {jobs} workers: {e}")))?;
    let rows = pool.install(|| sweep_rows(&schemes, &thetas, &cfg))?;

    let mut w = open_output(out.as_deref())?;
    let io = |e: std::io::Error| CliError::io(format!("writing sweep table: {e}"));
    write_header(&mut w, &SWEEP_COLUMNS).map_err(io)?;
    for (r, _) in &rows {
        write_sweep_row(&mut w, r).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let warnings: Vec<WarningJson> = schemes
        .iter()
        .flat_map(|m| thetas.iter().map(move |&t| (m, t)))
        .zip(&rows)
        .flat_map(|((m, theta), (_, ws))| {
            ws.iter().map(move |w| WarningJson { scheme: m.to_string(), theta, warning: w.clone() })
        })
        .collect();
    for w in &warnings {
        eprintln!("warning: {} theta={}: {}", w.scheme, g12(w.theta), w.warning);
    }
    if let Some(path) = sidecar {
        let doc = SidecarJson {
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: "sweep",
            k,
            theta_lo: lo,
            theta_hi: hi,
            steps,
            rows: rows.len(),
            solver: cfg,
            warnings,
        };
        let f = File::create(&path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        let mut bw = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut bw, &doc).map_err(|e| CliError::io(e.to_string()))?;
        writeln!(bw).and_then(|_| bw.flush()).map_err(io)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn enumerate(k: u32, out: Option<&Path>) -> CmdResult {
    if k == 0 {
        return Err(CliError::usage("k must be >= 1"));
    }
    if k > MAX_ENUMERATE_K {
        return Err(CliError::capacity(format!(
            "enumerate supports k <= {MAX_ENUMERATE_K}; k = {k} has {} schemes",
            scheme_count(k)
        )));
    }
    let mut w = open_output(out)?;
    let io = |e: std::io::Error| CliError::io(format!("writing scheme table: {e}"));
    write_header(&mut w, &["k", "a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4", "a", "b", "c", "d", "family"])
        .map_err(io)?;
    for m in enumerate_schemes(k) {
        let [a1, a2, a3, a4] = m.a_row();
        let [b1, b2, b3, b4] = m.b_row();
        let r = m.reduce();
        let family = classify_scheme(&m, &FieldPair::ZERO);
        writeln!(w, "{k},{a1},{a2},{a3},{a4},{b1},{b2},{b3},{b4},{},{},{},{},{family}", r.a, r.b, r.c, r.d)
            .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ClassifyJson {
    scheme: SchemeJson,
    reduced: ReducedParams,
    theta: Option<f64>,
    h: f64,
    l: f64,
    family: String,
    family_tag: &'static str,
    family_param: Option<u32>,
}

pub fn classify(scheme: &SchemeArgs, theta: Option<f64>, config: Option<&Path>, solver: &SolverArgs) -> CmdResult {
    let m = scheme.matrix()?;
    let fields = match theta {
        Some(t) => {
            check_theta(t)?;
            let cfg = solver.resolve(&ConfigFile::load(config)?)?;
            solve_system(&m.reduce(), t, &cfg)?.largest_nonneg()
        }
        None => FieldPair::ZERO,
    };
    let family = classify_scheme(&m, &fields);
    write_json(&ClassifyJson {
        scheme: (&m).into(),
        reduced: m.reduce(),
        theta,
        h: fields.h,
        l: fields.l,
        family: family.to_string(),
        family_tag: family.tag(),
        family_param: family.param(),
    })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    /// Tree depth n; the oracle enumerates all 2^|V_n| configurations.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    /// Index into the sorted solution list; the largest non-negative
    /// solution when absent.
    #[arg(long)]
    solution_index: Option<usize>,
    /// Label of the root: +H, -H, +L or -L.
    #[arg(long, default_value = "+H", allow_hyphen_values = true)]
    root_label: String,
    /// Added to h before verifying, to check that non-solutions are rejected.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb_h: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb_l: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Serialize)]
struct CheckJson {
    value: f64,
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct RootRatioJson {
    observed: f64,
    predicted: f64,
    relative_deviation: f64,
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyJson {
    scheme: SchemeJson,
    theta: f64,
    depth: u32,
    root_label: String,
    solution_index: Option<usize>,
    h: f64,
    l: f64,
    compatibility: CheckJson,
    kolmogorov: CheckJson,
    root_ratio: RootRatioJson,
    pass: bool,
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    let m = args.scheme.matrix()?;
    check_theta(args.theta)?;
    let root: FieldLabel = args.root_label.parse()?;
    if args.depth == 0 {
        return Err(CliError::usage("verify needs --depth >= 1"));
    }
    let cfg = args.solver.resolve(&ConfigFile::load(args.config.as_deref())?)?;
    let sols = solve_system(&m.reduce(), args.theta, &cfg)?;
    let base = match args.solution_index {
        Some(i) => *sols.solutions().get(i).ok_or_else(|| {
            CliError::usage(format!("solution index {i} out of range: {} solutions", sols.len()))
        })?,
        None => sols.largest_nonneg(),
    };
    let fields = FieldPair::new(base.h + args.perturb_h, base.l + args.perturb_l);

    let tree = build_tree(m.k(), args.depth)?;
    let asg = assign_fields(&tree, &m, root, fields)?;
    let coupling = Coupling::from_theta(args.theta)?;

    let compat = asg.verify_compatibility(args.theta, COMPAT_TOL)?;
    let mut measures = Vec::with_capacity(args.depth as usize + 1);
    for n in 0..=args.depth {
        measures.push(finite_volume_measure(&asg, &coupling, n)?);
    }
    let mut kol = 0.0f64;
    for w in measures.windows(2) {
        kol = kol.max(check_kolmogorov(&w[1], &w[0])?.max_discrepancy);
    }
    let observed = root_marginal_ratio(measures.last().unwrap());
    let predicted = (-2.0 * asg.numeric_field(0)?).exp();
    let deviation = (observed / predicted - 1.0).abs();

    let report = VerifyJson {
        scheme: (&m).into(),
        theta: args.theta,
        depth: args.depth,
        root_label: root.to_string(),
        solution_index: args.solution_index,
        h: fields.h,
        l: fields.l,
        compatibility: CheckJson { value: compat.max_residual, tol: COMPAT_TOL, pass: compat.pass },
        kolmogorov: CheckJson { value: kol, tol: KOLMOGOROV_TOL, pass: kol < KOLMOGOROV_TOL },
        root_ratio: RootRatioJson {
            observed,
            predicted,
            relative_deviation: deviation,
            tol: RATIO_TOL,
            pass: deviation < RATIO_TOL,
        },
        pass: compat.pass && kol < KOLMOGOROV_TOL && deviation < RATIO_TOL,
    };
    write_json(&report)?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY_FAILED) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_strings() {
        let m = parse_scheme(2, "2,0,0,0/0,0,2,0").unwrap();
        assert_eq!(m.a_row(), [2, 0, 0, 0]);
        assert_eq!(parse_scheme(2, "2,0,0/0,0,2,0").unwrap_err().code, 2);
        assert_eq!(parse_scheme(2, "3,0,0,0/0,0,2,0").unwrap_err().code, 2);
        assert_eq!(parse_scheme(2, "-1,3,0,0/0,0,2,0").unwrap_err().code, 2);
    }

    #[test]
    fn theta_checks() {
        assert!(check_theta(0.5).is_ok());
        assert!(check_theta(-0.5).is_ok());
        for t in [0.0, 1.0, -1.0, f64::NAN, 2.0] {
            assert_eq!(check_theta(t).unwrap_err().code, 3);
        }
    }
}
