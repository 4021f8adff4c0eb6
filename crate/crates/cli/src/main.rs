//! `discrep`: coloring, projection and diagnostics for sparse matrices.
//!
//! Exit codes: 0 success, 1 usage/IO/parse error, 2 solver failure.

use anyhow::{Context, Result};
use discrep_cli::{mmio, report};
use clap::{Args, Parser, Subcommand, ValueEnum};
use discrep_core::coloring::{run_hereditary_minimize, ColoringConfig};
use discrep_core::error::Error as CoreError;
use discrep_core::leverage::implicit_leverage_scores;
use discrep_core::oracles::{
    brute_force_disc, brute_force_herdisc, disc_of, exact_leverage_scores,
    herdisc_eigen_lower_bound_sweep, random_coloring_baseline, DISC_MAX_COLS, HERDISC_MAX_COLS,
};
use discrep_core::projection::{
    fast_project_to_small_rows, slow_project_to_small_rows, ProjectionConfig,
};
use discrep_core::basis::row_norms_exact;
use discrep_core::bench::projection_scaling_bench;
use discrep_core::rng::RngStream;

use report::{RunReport, StageTimes};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "discrep", version, about = "Sparse-input discrepancy minimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a full +-1 coloring minimizing ||Ax||_inf.
    Color(ColorArgs),
    /// Run only the hereditary-projection stage and report residual norms.
    Project(ProjectArgs),
    /// Estimate leverage scores, with the exact oracle when affordable.
    Leverage(LeverageArgs),
    /// Run the oracle cross-check suite on a tiny instance.
    Verify(VerifyArgs),
    /// Time the projection stage across an nnz sweep at fixed n.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fast,
    Slow,
}

impl Mode {
    fn name(&self) -> &'static str {
        match self {
            Mode::Fast => "fast",
            Mode::Slow => "slow",
        }
    }
}

#[derive(Args)]
struct ColorArgs {
    /// Matrix Market input (coordinate real general).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    delta_final: f64,
    #[arg(long, default_value_t = 0.529)]
    batch_exponent: f64,
    #[arg(long, value_enum, default_value_t = Mode::Fast)]
    mode: Mode,
    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the coloring (one +-1 per line) here.
    #[arg(long)]
    coloring_out: Option<PathBuf>,
    /// Include the per-k spectral lower bound sweep in the report.
    #[arg(long, default_value_t = false)]
    k_sweep: bool,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Fast)]
    mode: Mode,
    /// Optional path for the basis rows (text, one row per line).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LeverageArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    eps_sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    delta_sigma: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Comma-separated density sweep.
    #[arg(long, default_value = "0.01,0.02,0.04")]
    densities: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let run = match cli.cmd {
        Cmd::Color(args) => cmd_color(args),
        Cmd::Project(args) => cmd_project(args),
        Cmd::Leverage(args) => cmd_leverage(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            // solver give-up is exit 2, everything else 1
            let solver_fail = e
                .downcast_ref::<CoreError>()
                .map(|c| matches!(c, CoreError::RetriesExhausted { .. }))
                .unwrap_or(false);
            eprintln!("error: {e:#}");
            ExitCode::from(if solver_fail { 2 } else { 1 })
        }
    }
}

fn cmd_color(args: ColorArgs) -> Result<ExitCode> {
    let total_start = Instant::now();
    let parse_start = Instant::now();
    let a = mmio::read_matrix_market(&args.input)?;
    let parse_ms = parse_start.elapsed().as_secs_f64() * 1e3;

    let cfg = ColoringConfig {
        batch_exponent: args.batch_exponent,
        slow_mode: matches!(args.mode, Mode::Slow),
        ..ColoringConfig::default()
    };
    let solve_start = Instant::now();
    let run = run_hereditary_minimize(&a, args.delta_final, &cfg, RngStream::from_seed(args.seed))?;
    let solve_ms = solve_start.elapsed().as_secs_f64() * 1e3;

    let disc = disc_of(&a, &run.coloring)?;
    let sweep = herdisc_eigen_lower_bound_sweep(&a)?;
    let best_bound = sweep.iter().cloned().fold(0.0f64, f64::max);

    if let Some(path) = &args.coloring_out {
        mmio::write_coloring(path, &run.coloring)?;
    }
    let (beta, eta, n_used, k_used) = run
        .first_round
        .as_ref()
        .map(|r| (r.beta, r.eta, r.iteration_budget, r.batch_size))
        .unwrap_or((0.0, 0.0, 0, 0));
    let report = RunReport {
        input_path: args.input.display().to_string(),
        m: a.n_rows(),
        n: a.n_cols(),
        nnz: a.nnz(),
        seed: args.seed,
        mode: args.mode.name().to_string(),
        disc_achieved: disc,
        herdisc_lower_bound: best_bound,
        beta_used: beta,
        eta_used: eta,
        n_used,
        k_used,
        outer_rounds: run.outer_rounds,
        retries_per_round: run.retries_per_round.clone(),
        wall_time_ms: StageTimes {
            parse: parse_ms,
            solve: solve_ms,
            total: total_start.elapsed().as_secs_f64() * 1e3,
        },
        outcome: "success".to_string(),
        k_sweep: if args.k_sweep { Some(sweep) } else { None },
    };
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &args.report {
        std::fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_project(args: ProjectArgs) -> Result<ExitCode> {
    let a = mmio::read_matrix_market(&args.input)?;
    let cfg = ProjectionConfig::default();
    let start = Instant::now();
    let res = match args.mode {
        Mode::Fast => fast_project_to_small_rows(&a, &cfg, RngStream::from_seed(args.seed))?,
        Mode::Slow => slow_project_to_small_rows(&a, &cfg)?,
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let norms = row_norms_exact(&a, &res.basis)?;
    let max = norms.iter().cloned().fold(0.0f64, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len().max(1) as f64;
    if let Some(path) = &args.output {
        let mut text = String::new();
        for i in 0..res.basis.len() {
            let row: Vec<String> = res.basis.row(i).iter().map(|v| v.to_string()).collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        std::fs::write(path, text)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "m": a.n_rows(),
            "n": a.n_cols(),
            "nnz": a.nnz(),
            "mode": args.mode.name(),
            "basis_rows": res.basis.len(),
            "basis_row_cap": a.n_cols() / 4,
            "gram_error": res.basis.gram_max_error(),
            "residual_max": max,
            "residual_mean": mean,
            "rounds": res.per_round_stats.len(),
            "wall_time_ms": ms,
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_leverage(args: LeverageArgs) -> Result<ExitCode> {
    let a = mmio::read_matrix_market(&args.input)?;
    let v = discrep_core::basis::OrthonormalBasis::empty(a.n_cols());
    let est = implicit_leverage_scores(
        &a,
        &v,
        args.eps_sigma,
        args.delta_sigma,
        RngStream::from_seed(args.seed),
    )?;
    let exact = if a.n_rows() * a.n_cols() <= 1_000_000 {
        Some(exact_leverage_scores(&a, &v)?)
    } else {
        None
    };
    let max_rel = exact.as_ref().map(|ex| {
        est.scores
            .iter()
            .zip(ex.iter())
            .map(|(&e, &x)| if x > 1e-12 { (e / x - 1.0).abs() } else { 0.0 })
            .fold(0.0f64, f64::max)
    });
    println!(
        "{}",
        serde_json::json!({
            "m": a.n_rows(),
            "n": a.n_cols(),
            "eps_sigma": args.eps_sigma,
            "scores": est.scores,
            "exact": exact,
            "max_relative_error": max_rel,
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let a = mmio::read_matrix_market(&args.input)?;
    if a.n_cols() > HERDISC_MAX_COLS.min(12) {
        anyhow::bail!(
            "verify needs n <= {} columns, got {}",
            HERDISC_MAX_COLS.min(12),
            a.n_cols()
        );
    }
    if a.n_cols() > DISC_MAX_COLS {
        anyhow::bail!("verify needs n <= {DISC_MAX_COLS}");
    }
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    let d = brute_force_disc(&a)?;
    let recomputed = disc_of(&a, &d.witness)?;
    check(
        "disc witness recomputes",
        (recomputed - d.value).abs() == 0.0,
        format!("disc = {}, recomputed = {recomputed}", d.value),
    );

    let hd = brute_force_herdisc(&a)?;
    check(
        "herdisc dominates disc",
        hd >= d.value,
        format!("herdisc = {hd}, disc = {}", d.value),
    );

    let sweep = herdisc_eigen_lower_bound_sweep(&a)?;
    let bound_ok = sweep.iter().all(|&b| b <= hd + 1e-9);
    check(
        "eigen lower bound below herdisc for all k",
        bound_ok,
        format!("max bound = {:.6}, herdisc = {hd}", sweep.iter().cloned().fold(0.0f64, f64::max)),
    );

    let mut monotone_ok = true;
    if a.n_cols() >= 2 {
        for keep in [
            (0..a.n_cols() - 1).collect::<Vec<_>>(),
            (0..a.n_cols()).step_by(2).collect::<Vec<_>>(),
        ] {
            if keep.is_empty() {
                continue;
            }
            let sub = a.select_columns(&keep)?;
            monotone_ok &= brute_force_herdisc(&sub)? <= hd;
        }
    }
    check(
        "herdisc monotone under column deletion",
        monotone_ok,
        String::new(),
    );

    let base = random_coloring_baseline(&a, 200, RngStream::from_seed(args.seed))?;
    check(
        "random colorings never beat the exhaustive optimum",
        base.min >= d.value,
        format!("baseline min = {}, disc = {}", base.min, d.value),
    );

    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let densities: Vec<f64> = args
        .densities
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .context("parsing --densities")?;
    if densities.is_empty() {
        anyhow::bail!("--densities must list at least one density");
    }
    let rows = projection_scaling_bench(args.n, &densities, args.seed)?;
    println!("nnz,projection_ms");
    for r in &rows {
        println!("{},{:.3}", r.nnz, r.projection_ms);
    }
    for w in rows.windows(2) {
        let ratio = w[1].projection_ms / w[0].projection_ms.max(1e-9);
        eprintln!(
            "# nnz {} -> {}: time ratio {ratio:.2}{}",
            w[0].nnz,
            w[1].nnz,
            if ratio > 2.5 { " (FLAG: super-linear)" } else { "" }
        );
    }
    Ok(ExitCode::SUCCESS)
}
