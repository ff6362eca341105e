//! Command-line front end for the solver library.
//!
//! Four subcommands: `generate` draws an instance with known solution data,
//! `solve` runs one algorithm on an instance file, `bench` executes a suite
//! of paired runs and emits CSV rows plus per-solve traces, and `oracle`
//! sweeps the dense dual reference across the weight range.
//!
//! Exit codes: 0 on success, 2 when a solve reports failure, 1 on usage or
//! input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gtrs::core::{read_instance, write_instance};
use gtrs::dual_oracle::{dense_dual, dense_gamma_star};
use gtrs::gamma::Side;
use gtrs::gen::{full_nnz, generate, GenConfig};
use gtrs::solver::{solver_by_name, SolveReport, TraceRecord};

#[derive(Parser)]
#[command(name = "gtrs", version, about = "Sparse trust-region subproblem toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance with known solution data.
    Generate(GenerateArgs),
    /// Solve an instance file with one registered algorithm.
    Solve(SolveArgs),
    /// Run a benchmark suite and emit CSV rows, traces, and a summary.
    Bench(BenchArgs),
    /// Sweep the dense dual reference across the weight range.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(side: SideArg) -> Self {
        match side {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: usize,
    /// Target number of nonzeros per matrix, counting both triangles.
    #[arg(long)]
    nnz: usize,
    /// Target curvature level at the dual argmax.
    #[arg(long)]
    mu_star: f64,
    /// Side of the reference weight for the dual argmax.
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    side: SideArg,
    /// Curvature floor declared at the reference weight.
    #[arg(long, default_value_t = 0.1)]
    xi: f64,
    /// Seed for the generation stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output instance file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file produced by `generate` (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Target accuracy on the objective.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Admissible failure probability for the randomized subroutines.
    #[arg(long, default_value_t = 1e-2)]
    fail_prob: f64,
    /// Seed for the solve stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Algorithm name from the registry.
    #[arg(long, default_value = "wlk21")]
    alg: String,
    /// Optional trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Optional report JSON path; a summary prints to stdout regardless.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite configuration JSON.
    #[arg(long)]
    suite: PathBuf,
    /// Directory for bench.csv, summary.csv, and per-solve traces.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance file to inspect.
    #[arg(long)]
    instance: PathBuf,
    /// Number of sweep points across [0, zeta].
    #[arg(long, default_value_t = 200)]
    grid_points: usize,
    /// Output CSV for the sweep.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => run_generate(&args),
        Command::Solve(args) => run_solve(&args),
        Command::Bench(args) => run_bench(&args),
        Command::Oracle(args) => run_oracle(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run_generate(args: &GenerateArgs) -> Result<ExitCode> {
    // Mirror the generator's own range checks so bad flags exit as usage
    // errors instead of panics.
    if !(2..=2000).contains(&args.n) {
        bail!("--n must lie in [2, 2000]");
    }
    if args.nnz < args.n || args.nnz > args.n * args.n {
        bail!("--nnz must lie in [n, n^2]");
    }
    if !(args.xi > 0.0 && args.xi <= 0.5) {
        bail!("--xi must lie in (0, 1/2]");
    }
    if !(args.mu_star > 0.0 && args.mu_star <= 0.5 * args.xi) {
        bail!("--mu-star must lie in (0, xi/2]");
    }
    let cfg = GenConfig {
        n: args.n,
        nnz_target: args.nnz,
        mu_star_target: args.mu_star,
        xi: args.xi,
        side: args.side.into(),
        seed: args.seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (inst, truth) = generate(&cfg, &mut rng)
        .with_context(|| "instance generation failed")?;
    write_instance(&args.out, &inst, Some(&truth))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} (n={}, nnz={}, gamma_star={:.6}, mu_star={:.3e})",
        args.out.display(),
        inst.n(),
        full_nnz(&inst.q1.a),
        truth.gamma_star,
        truth.mu_star
    );
    Ok(ExitCode::SUCCESS)
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    let (inst, truth) = read_instance(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let strategy = solver_by_name(&args.alg)
        .ok_or_else(|| anyhow!("unknown algorithm {:?}; known: wlk21, wk20", args.alg))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let outcome = strategy.run(&inst, truth.as_ref(), args.eps, args.fail_prob, &mut rng);
    match outcome {
        Ok(report) => {
            if let Some(path) = &args.trace {
                write_trace(path, &report.trace)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = &args.out {
                let json = report_json(&report, &args.alg)?;
                fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            }
            println!(
                "{}: outcome={} phi={:.3e} reform_s={:.3} solve_s={:.3} error={} error_cr={} q1={:.3e}",
                args.alg,
                report.outcome.kind(),
                report.phi,
                report.reform_seconds,
                report.solve_seconds,
                fmt_opt(report.error),
                fmt_opt(report.error_cr),
                inst.q1.eval(&report.x_tilde),
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(err) => {
            eprintln!("solve failed: {err}");
            Ok(ExitCode::from(2))
        }
    }
}

fn report_json(report: &SolveReport, alg: &str) -> Result<String> {
    let value = serde_json::json!({
        "algorithm": alg,
        "outcome": report.outcome.kind(),
        "phi": report.phi,
        "error": report.error,
        "error_cr": report.error_cr,
        "reform_seconds": report.reform_seconds,
        "solve_seconds": report.solve_seconds,
        "eig_calls": report.diagnostics.eig_calls,
        "cg_calls": report.diagnostics.cg_calls,
        "coherence": report.diagnostics.coherence,
        "phases": report.diagnostics.phases,
        "x_tilde": report.x_tilde,
    });
    Ok(serde_json::to_string_pretty(&value)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"))
}

fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    for record in trace {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

/// One benchmark case: a problem shape solved `reps` times per algorithm.
#[derive(Debug, Deserialize)]
struct SuiteCase {
    n: usize,
    nnz: usize,
    mu_star: f64,
    eps: f64,
    p: f64,
    reps: usize,
    algs: Vec<String>,
    /// Optional curvature floor; defaults to 0.1.
    #[serde(default = "default_xi")]
    xi: f64,
}

fn default_xi() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
struct SuiteConfig {
    cases: Vec<SuiteCase>,
    master_seed: u64,
}

/// One CSV row of benchmark output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct BenchRow {
    instance_id: String,
    algorithm: String,
    n: usize,
    nnz: usize,
    mu_star_target: f64,
    eps: f64,
    seed: u64,
    wall_s: f64,
    reform_s: f64,
    solve_s: f64,
    error: Option<f64>,
    error_cr: Option<f64>,
    outcome: String,
}

/// Splittable deterministic seed stream: one value per (case, rep, lane).
fn derive_seed(master: u64, case: usize, rep: usize, lane: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(1 + case as u64))
        .wrapping_add(0xbf58_476d_1ce4_e5b9u64.wrapping_mul(1 + rep as u64))
        .wrapping_add(0x94d0_49bb_1331_11ebu64.wrapping_mul(1 + lane));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn run_bench(args: &BenchArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.suite)
        .with_context(|| format!("reading {}", args.suite.display()))?;
    let suite: SuiteConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.suite.display()))?;
    for (ci, case) in suite.cases.iter().enumerate() {
        for alg in &case.algs {
            if solver_by_name(alg).is_none() {
                bail!("case {ci}: unknown algorithm {alg:?}; known: wlk21, wk20");
            }
        }
    }
    let trace_dir = args.out_dir.join("traces");
    fs::create_dir_all(&trace_dir)
        .with_context(|| format!("creating {}", trace_dir.display()))?;

    // One work unit per (case, rep): the generated instance is shared by
    // every algorithm of the case so comparisons are paired.
    let units: Vec<(usize, usize)> = suite
        .cases
        .iter()
        .enumerate()
        .flat_map(|(ci, case)| (0..case.reps).map(move |ri| (ci, ri)))
        .collect();
    let mut rows: Vec<BenchRow> = units
        .par_iter()
        .map(|&(ci, ri)| bench_unit(&suite, ci, ri, &trace_dir))
        .collect::<Result<Vec<Vec<BenchRow>>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        a.instance_id
            .cmp(&b.instance_id)
            .then_with(|| a.algorithm.cmp(&b.algorithm))
    });

    let rows_path = args.out_dir.join("bench.csv");
    let mut writer = csv::Writer::from_path(&rows_path)
        .with_context(|| format!("writing {}", rows_path.display()))?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    write_summary(&args.out_dir.join("summary.csv"), &suite, &rows)?;
    println!(
        "wrote {} rows to {} (traces under {})",
        rows.len(),
        rows_path.display(),
        trace_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn bench_unit(
    suite: &SuiteConfig,
    ci: usize,
    ri: usize,
    trace_dir: &Path,
) -> Result<Vec<BenchRow>> {
    let case = &suite.cases[ci];
    let instance_id = format!("case{ci:03}_rep{ri:03}");
    let gen_seed = derive_seed(suite.master_seed, ci, ri, 0);
    let cfg = GenConfig {
        n: case.n,
        nnz_target: case.nnz,
        mu_star_target: case.mu_star,
        xi: case.xi,
        side: Side::Left,
        seed: gen_seed,
    };
    let mut gen_rng = ChaCha8Rng::seed_from_u64(gen_seed);
    let generated = generate(&cfg, &mut gen_rng);
    let mut rows = Vec::with_capacity(case.algs.len());
    match generated {
        Ok((inst, truth)) => {
            for (ai, alg) in case.algs.iter().enumerate() {
                let solve_seed = derive_seed(suite.master_seed, ci, ri, 1 + ai as u64);
                let strategy = solver_by_name(alg).expect("validated before dispatch");
                let mut rng = ChaCha8Rng::seed_from_u64(solve_seed);
                let started = Instant::now();
                let outcome = strategy.run(&inst, Some(&truth), case.eps, case.p, &mut rng);
                let wall_s = started.elapsed().as_secs_f64();
                let row = match outcome {
                    Ok(report) => {
                        let trace_path =
                            trace_dir.join(format!("{instance_id}_{alg}.csv"));
                        write_trace(&trace_path, &report.trace)?;
                        BenchRow {
                            instance_id: instance_id.clone(),
                            algorithm: alg.clone(),
                            n: case.n,
                            nnz: full_nnz(&inst.q1.a),
                            mu_star_target: case.mu_star,
                            eps: case.eps,
                            seed: solve_seed,
                            wall_s,
                            reform_s: report.reform_seconds,
                            solve_s: report.solve_seconds,
                            error: report.error,
                            error_cr: report.error_cr,
                            outcome: report.outcome.kind().to_string(),
                        }
                    }
                    Err(_) => BenchRow {
                        instance_id: instance_id.clone(),
                        algorithm: alg.clone(),
                        n: case.n,
                        nnz: full_nnz(&inst.q1.a),
                        mu_star_target: case.mu_star,
                        eps: case.eps,
                        seed: solve_seed,
                        wall_s,
                        reform_s: 0.0,
                        solve_s: 0.0,
                        error: None,
                        error_cr: None,
                        outcome: "failed".to_string(),
                    },
                };
                rows.push(row);
            }
        }
        Err(err) => {
            // Generation failures take the whole rep down but never the
            // suite; each algorithm lane records a failed row.
            eprintln!("{instance_id}: generation failed: {err}");
            for (ai, alg) in case.algs.iter().enumerate() {
                rows.push(BenchRow {
                    instance_id: instance_id.clone(),
                    algorithm: alg.clone(),
                    n: case.n,
                    nnz: case.nnz,
                    mu_star_target: case.mu_star,
                    eps: case.eps,
                    seed: derive_seed(suite.master_seed, ci, ri, 1 + ai as u64),
                    wall_s: 0.0,
                    reform_s: 0.0,
                    solve_s: 0.0,
                    error: None,
                    error_cr: None,
                    outcome: "failed".to_string(),
                });
            }
        }
    }
    Ok(rows)
}

/// Per-(case, algorithm) mean errors and time split.
#[derive(Debug, Serialize)]
struct SummaryRow {
    case: usize,
    algorithm: String,
    n: usize,
    mu_star_target: f64,
    eps: f64,
    rows: usize,
    failed: usize,
    mean_error: Option<f64>,
    mean_error_cr: Option<f64>,
    mean_wall_s: f64,
    mean_reform_s: f64,
    mean_solve_s: f64,
}

fn write_summary(path: &Path, suite: &SuiteConfig, rows: &[BenchRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for (ci, case) in suite.cases.iter().enumerate() {
        let prefix = format!("case{ci:03}_");
        for alg in &case.algs {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.instance_id.starts_with(&prefix) && &r.algorithm == alg)
                .collect();
            let failed = group.iter().filter(|r| r.outcome == "failed").count();
            let errors: Vec<f64> = group.iter().filter_map(|r| r.error).collect();
            let errors_cr: Vec<f64> = group.iter().filter_map(|r| r.error_cr).collect();
            let mean = |vals: &[f64]| {
                if vals.is_empty() {
                    None
                } else {
                    Some(vals.iter().sum::<f64>() / vals.len() as f64)
                }
            };
            let time_mean = |pick: fn(&BenchRow) -> f64| {
                if group.is_empty() {
                    0.0
                } else {
                    group.iter().map(|r| pick(r)).sum::<f64>() / group.len() as f64
                }
            };
            writer.serialize(SummaryRow {
                case: ci,
                algorithm: alg.clone(),
                n: case.n,
                mu_star_target: case.mu_star,
                eps: case.eps,
                rows: group.len(),
                failed,
                mean_error: mean(&errors),
                mean_error_cr: mean(&errors_cr),
                mean_wall_s: time_mean(|r| r.wall_s),
                mean_reform_s: time_mean(|r| r.reform_s),
                mean_solve_s: time_mean(|r| r.solve_s),
            })?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// One row of the dual sweep emitted by `oracle`.
#[derive(Debug, Serialize)]
struct SweepRow {
    gamma: f64,
    mu: f64,
    d: Option<f64>,
    nu: Option<f64>,
}

fn run_oracle(args: &OracleArgs) -> Result<ExitCode> {
    if args.grid_points < 2 {
        bail!("--grid-points must be at least 2");
    }
    let (inst, _) = read_instance(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let mut writer = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    for k in 0..args.grid_points {
        let gamma = inst.zeta * k as f64 / (args.grid_points - 1) as f64;
        let eval = dense_dual(&inst, gamma).map_err(|e| anyhow!("dual sweep failed: {e}"))?;
        writer.serialize(SweepRow {
            gamma,
            mu: eval.mu,
            d: eval.d.is_finite().then_some(eval.d),
            nu: eval.nu,
        })?;
    }
    writer.flush()?;
    match dense_gamma_star(&inst, 1e-12) {
        Ok(truth) => println!(
            "gamma_star={:.9} mu_star={:.6e} opt={:.9e} (sweep: {})",
            truth.gamma_star,
            truth.mu_star,
            truth.opt,
            args.out.display()
        ),
        Err(e) => println!("sweep written to {}; argmax unavailable: {e}", args.out.display()),
    }
    Ok(ExitCode::SUCCESS)
}
