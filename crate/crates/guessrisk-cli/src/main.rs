//! Command-line front end: entropy queries, strategy construction and
//! simulation, bound verification sweeps, and asymptotic tables.
//!
//! Exit codes: 0 success, 2 validation or domain error, 3 verification
//! failure (some sweep row failed its bound checks), 4 resource-cap error.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use guessrisk::bounds::{asymptotic_table, cost_lower_bound, cost_upper_bound, AsymptoticsRow};
use guessrisk::construct::{brute_force_optimum, build_achievable_strategy};
use guessrisk::dist::{Pmf, DEFAULT_ATOM_CAP};
use guessrisk::entropy::{
    renyi_entropy, smooth_renyi_entropy, smooth_renyi_oracle, truncate_tail,
};
use guessrisk::guessing::{evaluate, simulate, GuessingStrategy, StrategyEvaluation};

const ATOM_CAP_ENV: &str = "GUESSRISK_ATOM_CAP";

#[derive(Parser)]
#[command(
    name = "guessrisk",
    version,
    about = "Soft guessing under log-loss distortion: smooth Renyi entropies, strategies, cost bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputOpts {
    /// Output format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Renyi and smooth Renyi entropy of a distribution
    Entropy {
        /// Inline JSON {"p": [..]} or a path to a JSON file
        #[arg(long)]
        dist: String,
        /// Entropy order (in (0,1) when --eps > 0)
        #[arg(long)]
        alpha: f64,
        /// Smoothing level in [0,1)
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Also run the vertex-enumeration oracle and report the delta
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Build, evaluate, or simulate guessing strategies
    Strategy {
        #[command(subcommand)]
        action: StrategyAction,
    },
    /// Check lower bound <= brute-force optimum <= upper bound per sweep row
    Verify {
        /// Explicit distribution(s); omit to sweep random instances
        #[arg(long)]
        dist: Vec<String>,
        /// Number of random instances when no --dist is given
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Seed for the random instance sweep
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Comma-separated distortion grid
        #[arg(long, default_value = "0,0.5,1,1.5849625007211562")]
        d_grid: String,
        /// Comma-separated rho grid
        #[arg(long, default_value = "0.5,1,2")]
        rho_grid: String,
        /// Comma-separated epsilon grid
        #[arg(long, default_value = "0,0.1,0.3")]
        eps_grid: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Exact vs second-order expansion of the n-letter smooth entropy
    Asymptotics {
        #[arg(long)]
        dist: String,
        /// Entropy order in (0,1); exactly one of --alpha / --rho
        #[arg(long)]
        alpha: Option<f64>,
        /// Cost moment; converted via alpha = 1/(1+rho)
        #[arg(long)]
        rho: Option<f64>,
        /// Smoothing level in (0,1)
        #[arg(long)]
        eps: f64,
        /// Comma-separated blocklengths
        #[arg(long, default_value = "8,16,32,64,128,256,512")]
        n_list: String,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Subcommand)]
enum StrategyAction {
    /// Construct the block strategy for (dist, D, eps) and evaluate it
    Build {
        #[arg(long)]
        dist: String,
        #[arg(long = "D")]
        d_level: f64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Cost moment used for the attached evaluation
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Evaluate a strategy JSON file exactly
    Eval {
        #[arg(long)]
        dist: String,
        /// Path to strategy JSON (bare strategy or `strategy build` output)
        #[arg(long)]
        strategy: String,
        #[arg(long = "D")]
        d_level: f64,
        #[arg(long)]
        rho: f64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Monte Carlo simulation of a strategy
    Simulate {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        strategy: String,
        #[arg(long = "D")]
        d_level: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
}

enum CliError {
    Validation(String),
    VerifyFailed(usize),
    Resource(String),
}

impl From<guessrisk::Error> for CliError {
    fn from(e: guessrisk::Error) -> Self {
        if e.is_resource() {
            CliError::Resource(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::VerifyFailed(rows)) => {
            eprintln!("error: {rows} sweep row(s) failed verification");
            ExitCode::from(3)
        }
        Err(CliError::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Entropy {
            dist,
            alpha,
            eps,
            oracle,
            output,
        } => cmd_entropy(&dist, alpha, eps, oracle, &output),
        Command::Strategy { action } => match action {
            StrategyAction::Build {
                dist,
                d_level,
                eps,
                rho,
                output,
            } => cmd_build(&dist, d_level, eps, rho, &output),
            StrategyAction::Eval {
                dist,
                strategy,
                d_level,
                rho,
                output,
            } => cmd_eval(&dist, &strategy, d_level, rho, &output),
            StrategyAction::Simulate {
                dist,
                strategy,
                d_level,
                rho,
                trials,
                seed,
                output,
            } => cmd_simulate(&dist, &strategy, d_level, rho, trials, seed, &output),
        },
        Command::Verify {
            dist,
            instances,
            seed,
            d_grid,
            rho_grid,
            eps_grid,
            output,
        } => cmd_verify(
            &dist, instances, seed, &d_grid, &rho_grid, &eps_grid, &output,
        ),
        Command::Asymptotics {
            dist,
            alpha,
            rho,
            eps,
            n_list,
            output,
        } => cmd_asymptotics(&dist, alpha, rho, eps, &n_list, &output),
    }
}

// ---------------------------------------------------------------------------
// input parsing and output plumbing

#[derive(Deserialize)]
struct DistInput {
    p: Vec<f64>,
}

fn parse_dist(input: &str) -> CliResult<Pmf> {
    let text = if input.trim_start().starts_with('{') {
        input.to_string()
    } else {
        fs::read_to_string(input)?
    };
    let input: DistInput = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad distribution JSON: {e}")))?;
    Ok(Pmf::from_weights(&input.p)?)
}

fn parse_grid(name: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("bad {name} entry {s:?}: {e}")))
        })
        .collect()
}

fn write_output(output: &OutputOpts, text: &str) -> CliResult<()> {
    match &output.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Format with 12 significant digits, '.' decimal separator.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..=12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

// ---------------------------------------------------------------------------
// entropy

#[derive(Serialize)]
struct EntropyReport {
    m: usize,
    alpha: f64,
    eps: f64,
    renyi: f64,
    smooth: f64,
    i_star: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_delta: Option<f64>,
}

fn cmd_entropy(
    dist: &str,
    alpha: f64,
    eps: f64,
    oracle: bool,
    output: &OutputOpts,
) -> CliResult<()> {
    let p = parse_dist(dist)?;
    let renyi = renyi_entropy(&p, alpha)?;
    let smooth = if eps == 0.0 {
        renyi
    } else {
        smooth_renyi_entropy(&p, alpha, eps)?
    };
    let (i_star, _) = truncate_tail(&p, eps)?;
    let oracle_value = if oracle {
        Some(smooth_renyi_oracle(&p, alpha, eps)?)
    } else {
        None
    };
    let report = EntropyReport {
        m: p.len(),
        alpha,
        eps,
        renyi,
        smooth,
        i_star,
        oracle: oracle_value,
        oracle_delta: oracle_value.map(|o| smooth - o),
    };
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("m,alpha,eps,renyi,smooth,i_star,oracle,oracle_delta\n");
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                report.m,
                sig(report.alpha),
                sig(report.eps),
                sig(report.renyi),
                sig(report.smooth),
                report.i_star,
                report.oracle.map(sig).unwrap_or_default(),
                report.oracle_delta.map(sig).unwrap_or_default(),
            ));
            s
        }
    };
    write_output(output, &text)
}

// ---------------------------------------------------------------------------
// strategy

#[derive(Serialize)]
struct BuildReport {
    strategy: GuessingStrategy,
    evaluation: StrategyEvaluation,
}

fn cmd_build(dist: &str, d_level: f64, eps: f64, rho: f64, output: &OutputOpts) -> CliResult<()> {
    if output.format == Some(Format::Csv) {
        return Err(CliError::Validation(
            "--format csv is not supported for strategy build; the payload is a strategy object"
                .into(),
        ));
    }
    let p = parse_dist(dist)?;
    let strategy = build_achievable_strategy(&p, d_level, eps)?;
    let evaluation = evaluate(&strategy, &p, d_level, rho)?;
    write_output(output, &to_json(&BuildReport { strategy, evaluation })?)
}

fn load_strategy(path: &str) -> CliResult<GuessingStrategy> {
    let text = fs::read_to_string(path)?;
    if let Ok(s) = serde_json::from_str::<GuessingStrategy>(&text) {
        return Ok(s);
    }
    #[derive(Deserialize)]
    struct Wrapped {
        strategy: GuessingStrategy,
    }
    serde_json::from_str::<Wrapped>(&text)
        .map(|w| w.strategy)
        .map_err(|e| CliError::Validation(format!("bad strategy JSON in {path}: {e}")))
}

fn cmd_eval(
    dist: &str,
    strategy: &str,
    d_level: f64,
    rho: f64,
    output: &OutputOpts,
) -> CliResult<()> {
    let p = parse_dist(dist)?;
    let s = load_strategy(strategy)?;
    let evaluation = evaluate(&s, &p, d_level, rho)?;
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&evaluation)?,
        Format::Csv => {
            let join = |v: &[f64]| v.iter().map(|&x| sig(x)).collect::<Vec<_>>().join(";");
            let mut s = String::from("error_prob,expected_cost,pz,survival,guess_index\n");
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                sig(evaluation.error_prob),
                sig(evaluation.expected_cost),
                join(&evaluation.pz),
                join(&evaluation.survival),
                evaluation
                    .guess_index
                    .iter()
                    .map(|g| g.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            ));
            s
        }
    };
    write_output(output, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    dist: &str,
    strategy: &str,
    d_level: f64,
    rho: f64,
    trials: u64,
    seed: u64,
    output: &OutputOpts,
) -> CliResult<()> {
    let p = parse_dist(dist)?;
    let s = load_strategy(strategy)?;
    let report = simulate(&s, &p, d_level, rho, trials, seed)?;
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("trials,est_error_prob,est_cost,se_error,se_cost,seed\n");
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                report.trials,
                sig(report.est_error_prob),
                sig(report.est_cost),
                sig(report.std_errors.0),
                sig(report.std_errors.1),
                report.seed,
            ));
            s
        }
    };
    write_output(output, &text)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct VerifyRow {
    m: usize,
    dist: String,
    d_level: f64,
    rho: f64,
    eps: f64,
    lower: f64,
    c_star: f64,
    constructed: f64,
    upper: f64,
    pass: bool,
}

fn verify_row(p: &Pmf, d_level: f64, rho: f64, eps: f64) -> Result<VerifyRow, guessrisk::Error> {
    let lower = cost_lower_bound(p, d_level, rho, eps)?;
    let upper = cost_upper_bound(p, d_level, rho, eps)?;
    let c_star = brute_force_optimum(p, d_level, rho, eps)?.c_star;
    let strategy = build_achievable_strategy(p, d_level, eps)?;
    let evaluation = evaluate(&strategy, p, d_level, rho)?;
    let constructed = evaluation.expected_cost;
    let pass = lower - 1e-9 <= c_star
        && c_star <= upper + 1e-9
        && constructed >= c_star - 1e-9
        && constructed <= upper + 1e-9
        && (evaluation.error_prob - eps).abs() <= 1e-9;
    Ok(VerifyRow {
        m: p.len(),
        dist: p.probs().iter().map(|&x| sig(x)).collect::<Vec<_>>().join(";"),
        d_level,
        rho,
        eps,
        lower,
        c_star,
        constructed,
        upper,
        pass,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    dists: &[String],
    instances: usize,
    seed: u64,
    d_grid: &str,
    rho_grid: &str,
    eps_grid: &str,
    output: &OutputOpts,
) -> CliResult<()> {
    let d_grid = parse_grid("--d-grid", d_grid)?;
    let rho_grid = parse_grid("--rho-grid", rho_grid)?;
    let eps_grid = parse_grid("--eps-grid", eps_grid)?;
    for &d in &d_grid {
        if d < 0.0 || !d.is_finite() {
            return Err(CliError::Validation(format!(
                "distortion {d} outside [0,inf)"
            )));
        }
    }
    for &r in &rho_grid {
        if r <= 0.0 || !r.is_finite() {
            return Err(CliError::Validation(format!("rho {r} must be > 0")));
        }
    }
    for &e in &eps_grid {
        if !(0.0..1.0).contains(&e) {
            return Err(CliError::Validation(format!("epsilon {e} outside [0,1)")));
        }
    }

    // one task per row; random instances draw their own parameters
    let tasks: Vec<(Pmf, f64, f64, f64)> = if dists.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..instances)
            .map(|_| {
                let m = rng.random_range(2..=8);
                let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
                let p = Pmf::from_weights(&w).expect("positive weights");
                let d = d_grid[rng.random_range(0..d_grid.len())];
                let rho = rho_grid[rng.random_range(0..rho_grid.len())];
                let eps = eps_grid[rng.random_range(0..eps_grid.len())];
                (p, d, rho, eps)
            })
            .collect()
    } else {
        let mut tasks = Vec::new();
        for source in dists {
            let p = parse_dist(source)?;
            for &d in &d_grid {
                for &rho in &rho_grid {
                    for &eps in &eps_grid {
                        tasks.push((p.clone(), d, rho, eps));
                    }
                }
            }
        }
        tasks
    };

    let rows: Vec<VerifyRow> = tasks
        .par_iter()
        .map(|(p, d, rho, eps)| verify_row(p, *d, *rho, *eps))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;

    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut s =
                String::from("m,dist,d_level,rho,eps,lower,c_star,constructed,upper,pass\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.m,
                    r.dist,
                    sig(r.d_level),
                    sig(r.rho),
                    sig(r.eps),
                    sig(r.lower),
                    sig(r.c_star),
                    sig(r.constructed),
                    sig(r.upper),
                    if r.pass { "pass" } else { "fail" },
                ));
            }
            s
        }
    };
    write_output(output, &text)?;
    let failures = rows.iter().filter(|r| !r.pass).count();
    if failures > 0 {
        return Err(CliError::VerifyFailed(failures));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// asymptotics

fn cmd_asymptotics(
    dist: &str,
    alpha: Option<f64>,
    rho: Option<f64>,
    eps: f64,
    n_list: &str,
    output: &OutputOpts,
) -> CliResult<()> {
    let p = parse_dist(dist)?;
    let alpha = match (alpha, rho) {
        (Some(a), None) => a,
        (None, Some(r)) => {
            if r <= 0.0 || !r.is_finite() {
                return Err(CliError::Validation(format!("rho {r} must be > 0")));
            }
            1.0 / (1.0 + r)
        }
        _ => {
            return Err(CliError::Validation(
                "exactly one of --alpha / --rho is required".into(),
            ))
        }
    };
    let ns: Vec<u64> = n_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| CliError::Validation(format!("bad --n-list entry {s:?}: {e}")))
        })
        .collect::<CliResult<_>>()?;
    let cap = match std::env::var(ATOM_CAP_ENV) {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|e| CliError::Validation(format!("bad {ATOM_CAP_ENV} value {v:?}: {e}")))?,
        Err(_) => DEFAULT_ATOM_CAP,
    };
    let rows: Vec<AsymptoticsRow> = asymptotic_table(&p, alpha, eps, &ns, cap)?;
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut s = String::from("n,exact,expansion,residual,normalized_so\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.n,
                    sig(r.exact_entropy),
                    sig(r.expansion),
                    sig(r.residual),
                    sig(r.normalized_second_order),
                ));
            }
            s
        }
    };
    write_output(output, &text)
}
