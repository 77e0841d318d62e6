//! Batch experiment harness for robust matrix completion: single recovery
//! trials, phase-diagram grids, concentration-bound Monte Carlo, golfing
//! decay traces, and dual-certificate validation.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on solver errors.
//! `ROBUSTMC_THREADS` caps worker parallelism; results are bit-identical
//! for any thread count.

mod config;

use clap::{Args, Parser, Subcommand};
use config::Config;
use robustmc::error::Error as CoreError;
use robustmc::experiment::{
    run_grid, run_trial, write_grid_csv, write_grid_pgm, GridAxis, GridSpec, LambdaChoice,
    DEFAULT_SUCCESS_TOL,
};
use robustmc::mat::DenseMatrix;
use robustmc::operators::{project_tangent, ColumnSet, ObservationMask, TangentSpace};
use robustmc::rng::Rng;
use robustmc::solver::{SolverConfig, SparsityMode};
use robustmc::synth::{
    build_instance, sample_batch_replacement, CorruptionScheme, ProblemInstance,
};
use robustmc::theory::{
    dual_certificate_check, golfing_run, lambda_select, lemma_monte_carlo, random_orthonormal,
    CertificateInput, LambdaRule, LemmaKind, TheoremParams,
};
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "robustmc", version, about = "Robust matrix completion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded recovery trial and report the scored outcome.
    Trial(TrialArgs),
    /// Sweep a success-frequency grid over two parameter axes.
    Grid(GridArgs),
    /// Monte-Carlo validation of one concentration bound; emits CSV.
    Lemma(LemmaArgs),
    /// Golfing recursion decay trace on a random tangent-space target.
    Golfing(GolfingArgs),
    /// Validate a dual certificate stored in a directory.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct CommonInstance {
    /// key=value file supplying defaults for any flag
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// single_adversarial | neutral_gaussian | adversarial_copy
    #[arg(long)]
    scheme: Option<String>,
    /// spike value used by the single_adversarial scheme
    #[arg(long)]
    magnitude: Option<f64>,
    /// column_sparse | entry_sparse | completion_only (comma list for grids)
    #[arg(long)]
    mode: Option<String>,
    /// fixed penalty weight (overrides --lambda-rule)
    #[arg(long)]
    lambda: Option<f64>,
    /// theorem1 | corollary1 | corollary2 | corollary3 | theorem2
    #[arg(long = "lambda-rule")]
    lambda_rule: Option<String>,
    /// incoherence estimate used by rule-based lambda selection
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "success-tol")]
    success_tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// solver convergence tolerance
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: CommonInstance,
    /// write the report (key=value lines) here as well as stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// save the generated instance to this directory
    #[arg(long = "dump-instance")]
    dump_instance: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonInstance,
    /// first axis, e.g. rho=0.05:0.95:0.1 or r=1,2,3
    #[arg(long)]
    axis1: Option<String>,
    /// second axis, e.g. r=1:10:1 or gamma=0.025:0.25:0.025
    #[arg(long)]
    axis2: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// output path; with several modes the mode name is appended
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | pgm
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// L5_inf | L6_op_inf | L7_inf2_order2 | L8_inf2_order1
    #[arg(long)]
    which: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GolfingArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// entries per batch
    #[arg(long)]
    q: Option<usize>,
    /// number of batches
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// directory holding q_hat.txt, u_hat.txt, v_hat.txt, c_hat.txt,
    /// i0.txt, omega.txt and a manifest.txt with lambda= and m=
    #[arg(long)]
    dir: PathBuf,
}

/// Error carrying the process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::NoConvergence { .. } => Self::solver(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Trial(args) => cmd_trial(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Lemma(args) => cmd_lemma(args),
        Command::Golfing(args) => cmd_golfing(args),
        Command::Certify(args) => cmd_certify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("ROBUSTMC_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, CliError> {
    match path {
        Some(p) => Config::load(p).map_err(CliError::config),
        None => Ok(Config::default()),
    }
}

struct ResolvedInstance {
    p: usize,
    n: usize,
    r: usize,
    rho: f64,
    gamma: f64,
    scheme: CorruptionScheme,
    modes: Vec<SparsityMode>,
    lambda: LambdaChoice,
    mu0: f64,
    seed: u64,
    success_tol: f64,
    max_iter: usize,
    tol: f64,
}

fn resolve_common(common: &CommonInstance, cfg: &Config) -> Result<ResolvedInstance, CliError> {
    let ce = CliError::config;
    let p = cfg.resolve(common.p, "p", 80).map_err(ce)?;
    let n = cfg.resolve(common.n, "n", 80).map_err(ce)?;
    let r = cfg.resolve(common.r, "r", 2).map_err(ce)?;
    let rho = cfg.resolve(common.rho, "rho", 0.7).map_err(ce)?;
    let gamma = cfg.resolve(common.gamma, "gamma", 0.0).map_err(ce)?;
    let magnitude = cfg.resolve(common.magnitude, "magnitude", 10.0).map_err(ce)?;
    let scheme_name = cfg
        .resolve(common.scheme.clone(), "scheme", "single_adversarial".to_string())
        .map_err(ce)?;
    let scheme = CorruptionScheme::parse(&scheme_name, magnitude).map_err(CliError::from_core)?;
    let mode_list =
        cfg.resolve(common.mode.clone(), "mode", "column_sparse".to_string()).map_err(ce)?;
    let modes = mode_list
        .split(',')
        .map(|m| SparsityMode::parse(m.trim()).map_err(CliError::from_core))
        .collect::<Result<Vec<_>, _>>()?;
    let mu0 = cfg.resolve(common.mu0, "mu0", 1.0).map_err(ce)?;
    let lambda_flag = cfg.resolve_opt(common.lambda, "lambda").map_err(ce)?;
    let rule_flag = cfg.resolve_opt(common.lambda_rule.clone(), "lambda_rule").map_err(ce)?;
    let lambda = match (lambda_flag, rule_flag) {
        (Some(l), _) => LambdaChoice::Fixed(l),
        (None, Some(rule)) => {
            LambdaChoice::Rule(LambdaRule::parse(&rule).map_err(CliError::from_core)?)
        }
        (None, None) => LambdaChoice::Rule(LambdaRule::Corollary1),
    };
    Ok(ResolvedInstance {
        p,
        n,
        r,
        rho,
        gamma,
        scheme,
        modes,
        lambda,
        mu0,
        seed: cfg.resolve(common.seed, "seed", 0).map_err(ce)?,
        success_tol: cfg
            .resolve(common.success_tol, "success_tol", DEFAULT_SUCCESS_TOL)
            .map_err(ce)?,
        max_iter: cfg.resolve(common.max_iter, "max_iter", 500).map_err(ce)?,
        tol: cfg.resolve(common.tol, "tol", 1e-6).map_err(ce)?,
    })
}

fn fixed_lambda(inst: &ResolvedInstance) -> Result<f64, CliError> {
    match inst.lambda {
        LambdaChoice::Fixed(l) => Ok(l),
        LambdaChoice::Rule(rule) => {
            let k = (inst.gamma * inst.n as f64).round() as usize;
            let n1 = inst.n.saturating_sub(k).max(1);
            let params =
                TheoremParams::new(inst.p, inst.n, n1, inst.r.max(1), inst.gamma, inst.rho, inst.mu0);
            lambda_select(rule, &params).map_err(CliError::from_core)
        }
    }
}

fn cmd_trial(args: TrialArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common.config)?;
    let resolved = resolve_common(&args.common, &cfg)?;
    let lambda = fixed_lambda(&resolved)?;
    let instance: ProblemInstance<f64> = build_instance(
        resolved.p,
        resolved.n,
        resolved.r,
        resolved.gamma,
        resolved.rho,
        resolved.scheme,
        resolved.seed,
    )
    .map_err(CliError::from_core)?;
    if let Some(dir) = &args.dump_instance {
        instance.save_dir(dir).map_err(CliError::from_core)?;
    }
    let mode = resolved.modes[0];
    let mut solver_cfg = SolverConfig::new(lambda, mode);
    solver_cfg.max_iter = resolved.max_iter;
    solver_cfg.tol = resolved.tol;
    let report = run_trial(&instance, &solver_cfg, resolved.success_tol);
    if let Some(reason) = &report.error {
        return Err(CliError::solver(reason.clone()));
    }
    let text = format!(
        "success={}\nclean_rel_error={}\nsupport_exact={}\ncolspace_ok={}\niterations={}\nconverged={}\nwall_time={:.3}\nlambda={}\nmode={}\n",
        report.success,
        report.clean_rel_error,
        report.support_exact,
        report.colspace_ok,
        report.iterations,
        report.converged,
        report.wall_time,
        lambda,
        mode.name(),
    );
    print!("{text}");
    if let Some(out) = &args.out {
        fs::write(out, text).map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(())
}

fn parse_axis(spec: &str) -> Result<GridAxis, CliError> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("axis {spec:?}: expected name=values")))?;
    let floats: Vec<f64> = if values.contains(':') {
        let parts: Vec<&str> = values.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::config(format!("axis {spec:?}: expected start:end:step")));
        }
        let start: f64 = parts[0].parse().map_err(|_| CliError::config("bad axis start"))?;
        let end: f64 = parts[1].parse().map_err(|_| CliError::config("bad axis end"))?;
        let step: f64 = parts[2].parse().map_err(|_| CliError::config("bad axis step"))?;
        if step <= 0.0 || end < start {
            return Err(CliError::config("axis range must increase"));
        }
        let count = ((end - start) / step + 1.5).floor() as usize;
        (0..count).map(|i| start + i as f64 * step).filter(|v| *v <= end + 1e-12).collect()
    } else {
        values
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::config(format!("axis {spec:?}: bad value list")))?
    };
    if floats.is_empty() {
        return Err(CliError::config(format!("axis {spec:?} is empty")));
    }
    match name.trim() {
        "rho" => Ok(GridAxis::Rho(floats)),
        "gamma" => Ok(GridAxis::Gamma(floats)),
        "r" => Ok(GridAxis::Rank(floats.iter().map(|v| v.round() as usize).collect())),
        other => Err(CliError::config(format!("unknown axis {other:?} (rho, gamma, r)"))),
    }
}

fn cmd_grid(args: GridArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common.config)?;
    let resolved = resolve_common(&args.common, &cfg)?;
    let axis1_spec = cfg
        .resolve(args.axis1.clone(), "axis1", "rho=0.05:0.95:0.1".to_string())
        .map_err(CliError::config)?;
    let axis2_spec = cfg
        .resolve(args.axis2.clone(), "axis2", "r=1:10:1".to_string())
        .map_err(CliError::config)?;
    let trials = cfg.resolve(args.trials, "trials", 5).map_err(CliError::config)?;
    let format = cfg
        .resolve(args.format.clone(), "format", "csv".to_string())
        .map_err(CliError::config)?;
    if format != "csv" && format != "pgm" {
        return Err(CliError::config(format!("unknown format {format:?}")));
    }
    let out = match args.out.clone() {
        Some(p) => Some(p),
        None => cfg.raw("out").map(PathBuf::from),
    };

    let spec = GridSpec {
        axis1: parse_axis(&axis1_spec)?,
        axis2: parse_axis(&axis2_spec)?,
        p: resolved.p,
        n: resolved.n,
        r: resolved.r,
        gamma: resolved.gamma,
        rho: resolved.rho,
        scheme: resolved.scheme,
        modes: resolved.modes.clone(),
        lambda: resolved.lambda,
        mu0_estimate: resolved.mu0,
        trials_per_cell: trials,
        base_seed: resolved.seed,
        success_tol: resolved.success_tol,
        max_iter: resolved.max_iter,
        tol: resolved.tol,
    };
    let result = run_grid::<f64>(&spec).map_err(CliError::from_core)?;

    for grid in &result.grids {
        let mut buf = Vec::new();
        match format.as_str() {
            "csv" => write_grid_csv(&result.axis2_labels, &grid.freq, &mut buf)
                .map_err(CliError::from_core)?,
            "pgm" => write_grid_pgm(&grid.freq, &mut buf).map_err(CliError::from_core)?,
            other => return Err(CliError::config(format!("unknown format {other:?}"))),
        }
        match &out {
            Some(path) => {
                let target = if result.grids.len() == 1 {
                    path.clone()
                } else {
                    suffixed_path(path, grid.mode.name())
                };
                fs::write(&target, &buf).map_err(|e| CliError::config(e.to_string()))?;
            }
            None => {
                if result.grids.len() > 1 {
                    println!("# mode {}", grid.mode.name());
                }
                print!("{}", String::from_utf8_lossy(&buf));
            }
        }
    }
    Ok(())
}

fn suffixed_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned());
    let name = match ext {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn cmd_lemma(args: LemmaArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let ce = CliError::config;
    let which_name =
        cfg.resolve(args.which.clone(), "which", "L7_inf2_order2".to_string()).map_err(ce)?;
    let which = LemmaKind::parse(&which_name).map_err(CliError::from_core)?;
    let p = cfg.resolve(args.p, "p", 30).map_err(ce)?;
    let n1 = cfg.resolve(args.n1, "n1", 60).map_err(ce)?;
    let r = cfg.resolve(args.r, "r", 1).map_err(ce)?;
    let m0 = cfg.resolve(args.m0, "m0", (p * n1) / 2).map_err(ce)?;
    let beta = cfg.resolve(args.beta, "beta", 1.5).map_err(ce)?;
    let trials = cfg.resolve(args.trials, "trials", 100).map_err(ce)?;
    let seed = cfg.resolve(args.seed, "seed", 0).map_err(ce)?;
    let rng = Rng::new(seed);
    let report = lemma_monte_carlo::<f64>(which, p, n1, r, m0, beta, trials, &rng)
        .map_err(CliError::from_core)?;
    eprintln!(
        "{}: {} trials, {} violations, precondition held in all trials: {}",
        which.name(),
        report.trials,
        report.violations,
        report.bound_applicable
    );
    write_csv_out(&args.out, |w| report.write_csv(w))
}

fn cmd_golfing(args: GolfingArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let ce = CliError::config;
    let p = cfg.resolve(args.p, "p", 40).map_err(ce)?;
    let n1 = cfg.resolve(args.n1, "n1", 40).map_err(ce)?;
    let r = cfg.resolve(args.r, "r", 1).map_err(ce)?;
    let q = cfg.resolve(args.q, "q", p * n1 / 2).map_err(ce)?;
    let s = cfg.resolve(args.s, "s", 6).map_err(ce)?;
    let seed = cfg.resolve(args.seed, "seed", 0).map_err(ce)?;
    if r > p.min(n1) {
        return Err(CliError::config(format!("rank {r} infeasible for {p}x{n1}")));
    }
    let mut rng = Rng::new(seed);
    let u: DenseMatrix<f64> = random_orthonormal(p, r, &mut rng);
    let v: DenseMatrix<f64> = random_orthonormal(n1, r, &mut rng);
    let t = TangentSpace::new(u, v).map_err(CliError::from_core)?;
    let g = DenseMatrix::from_fn(p, n1, |_, _| rng.gaussian());
    let target = project_tangent(&g, &t, false).map_err(CliError::from_core)?;
    let batches = sample_batch_replacement(p, n1, s, q, &mut rng).map_err(CliError::from_core)?;
    let (_, trace) = golfing_run(&target, &batches, &t, q).map_err(CliError::from_core)?;
    write_csv_out(&args.out, |w| {
        writeln!(w, "step,error")?;
        for (i, err) in trace.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, err)?;
        }
        Ok(())
    })
}

fn write_csv_out(
    out: &Option<PathBuf>,
    write: impl Fn(&mut Vec<u8>) -> Result<(), CoreError>,
) -> Result<(), CliError> {
    let mut buf: Vec<u8> = Vec::new();
    write(&mut buf).map_err(CliError::from_core)?;
    match out {
        Some(path) => fs::write(path, buf).map_err(|e| CliError::config(e.to_string())),
        None => {
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<(), CliError> {
    let dir = &args.dir;
    let read_mat = |name: &str| -> Result<DenseMatrix<f64>, CliError> {
        let f = fs::File::open(dir.join(name))
            .map_err(|e| CliError::config(format!("{name}: {e}")))?;
        DenseMatrix::read_text(&mut BufReader::new(f)).map_err(CliError::from_core)
    };
    let q_hat = read_mat("q_hat.txt")?;
    let u_hat = read_mat("u_hat.txt")?;
    let v_hat = read_mat("v_hat.txt")?;
    let c_hat = read_mat("c_hat.txt")?;
    let uv_t = if dir.join("uv_t.txt").exists() {
        read_mat("uv_t.txt")?
    } else {
        u_hat.matmul_transb(&v_hat).map_err(CliError::from_core)?
    };
    let omega_file = fs::File::open(dir.join("omega.txt"))
        .map_err(|e| CliError::config(format!("omega.txt: {e}")))?;
    let omega = ObservationMask::read_text(&mut BufReader::new(omega_file))
        .map_err(CliError::from_core)?;
    let i0_file = fs::File::open(dir.join("i0.txt"))
        .map_err(|e| CliError::config(format!("i0.txt: {e}")))?;
    let i0 = ColumnSet::read_text(&mut BufReader::new(i0_file)).map_err(CliError::from_core)?;

    let manifest = Config::load(&dir.join("manifest.txt")).map_err(CliError::config)?;
    let lambda: f64 = manifest
        .raw("lambda")
        .ok_or_else(|| CliError::config("manifest missing lambda"))?
        .parse()
        .map_err(|_| CliError::config("bad lambda in manifest"))?;
    let m: usize = manifest
        .raw("m")
        .ok_or_else(|| CliError::config("manifest missing m"))?
        .parse()
        .map_err(|_| CliError::config("bad m in manifest"))?;

    let t_hat = TangentSpace::new(u_hat, v_hat).map_err(CliError::from_core)?;
    let input = CertificateInput { q_hat, t_hat, uv_t, c_hat, i0, omega, lambda, m };
    let report = dual_certificate_check(&input).map_err(CliError::from_core)?;
    for check in report.checks() {
        println!(
            "{}: {} (lhs={:.6e} rhs={:.6e} slack={:.6e})",
            check.name,
            if check.holds { "PASS" } else { "FAIL" },
            check.lhs,
            check.rhs,
            check.slack
        );
    }
    println!("certificate: {}", if report.all_hold() { "VALID" } else { "NOT VALIDATED" });
    Ok(())
}
