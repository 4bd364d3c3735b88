//! `mkfactor`: simulation, estimation, rank selection, rolling validation and
//! timing for matrix factor models fitted with matrix Kendall's tau.
//!
//! Settings resolve as flag > `--config` file > default. Exit codes: 0 success,
//! 2 config error, 3 data/format error, 4 numerical/degeneracy error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mkfactor::error::{Error, Result};
use mkfactor::estimator::{Method, RankConfig};
use mkfactor::harness::bench::{run_bench, write_bench, BenchConfig};
use mkfactor::harness::estimate::{run_estimate, write_estimate, EstimateConfig};
use mkfactor::harness::rank::{run_rank, write_rank, RankRunConfig};
use mkfactor::harness::rolling::{run_rolling, write_rolling, RollingConfig, RollingParams};
use mkfactor::harness::simulate::{run_simulate, write_simulate, Scenario, SimulateConfig};
use mkfactor::harness::{with_threads, CsvList, Settings};
use mkfactor::io::SeriesFormat;
use mkfactor::sim::Dist;

#[derive(Parser)]
#[command(name = "mkfactor", version, about = "Robust matrix factor models via matrix Kendall's tau")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo replications of a synthetic scenario.
    Simulate(SimulateArgs),
    /// Fit loadings and factors to a series file.
    Estimate(EstimateArgs),
    /// Eigenvalue-ratio factor-number selection for a series file.
    Rank(RankArgs),
    /// Rolling out-of-sample validation on a series file.
    Rolling(RollingArgs),
    /// Time the Kendall statistics and the full fit over a T/p grid.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value (TOML) config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RankFlags {
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long = "ridge-c")]
    ridge_c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct InputFlags {
    #[arg(long)]
    input: Option<PathBuf>,
    /// `long-csv` or `mkt-binary`; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    p1: Option<usize>,
    #[arg(long)]
    p2: Option<usize>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    /// Override the scenario's factor AR coefficient.
    #[arg(long)]
    phi: Option<f64>,
    /// Override the scenario's noise AR coefficient.
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long = "fixed-loadings")]
    fixed_loadings: bool,
    #[command(flatten)]
    rank: RankFlags,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: InputFlags,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    /// Select both ranks from the data (also implied when k1/k2 are omitted).
    #[arg(long = "auto-rank")]
    auto_rank: bool,
    #[command(flatten)]
    rank: RankFlags,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: InputFlags,
    #[arg(long)]
    methods: Option<String>,
    #[command(flatten)]
    rank: RankFlags,
}

#[derive(Args)]
struct RollingArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: InputFlags,
    /// Training window length.
    #[arg(long)]
    window: Option<usize>,
    /// Test block length.
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated T values.
    #[arg(long = "bench-T")]
    bench_t: Option<String>,
    /// Comma-separated p values (p1 = p2 = p).
    #[arg(long = "bench-p")]
    bench_p: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

fn settings(common: &Common, command: &str) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::from_file(path).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            other => other,
        })?,
        None => Settings::new(),
    };
    s.get("command", None, command.to_string())?;
    Ok(s)
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Parameter(m) => Error::Config(m),
        other => other,
    }
}

fn rank_config(s: &mut Settings, flags: &RankFlags) -> Result<RankConfig> {
    let d = RankConfig::default();
    Ok(RankConfig {
        kmax: s.get("kmax", flags.kmax, d.kmax)?,
        c: s.get("ridge-c", flags.ridge_c, d.c)?,
        epsilon: s.get("epsilon", flags.epsilon, d.epsilon)?,
    })
}

fn input_path(s: &mut Settings, flags: &InputFlags) -> Result<(PathBuf, Option<SeriesFormat>)> {
    let input: String = s
        .get_opt("input", flags.input.as_ref().map(|p| p.display().to_string()))?
        .ok_or_else(|| Error::Config("--input is required".into()))?;
    let format = s
        .get_opt("format", flags.format.clone())?
        .map(|f| f.parse::<SeriesFormat>())
        .transpose()?;
    Ok((PathBuf::from(input), format))
}

fn out_dir(s: &mut Settings, common: &Common) -> Result<PathBuf> {
    let out: String = s.get_quiet(
        "out",
        common.out.as_ref().map(|p| p.display().to_string()),
        "out".to_string(),
    )?;
    Ok(PathBuf::from(out))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut s = settings(&a.common, "simulate")?;
    let scenario: Scenario = s.get("scenario", a.scenario, "A".to_string())?.parse()?;
    let dist: Dist = s.get("dist", a.dist, "normal".to_string())?.parse()?;
    let (phi0, psi0) = scenario.ar_coefficients();
    let methods: CsvList<String> = s.get(
        "methods",
        a.methods.map(|m| m.parse()).transpose().map_err(Error::Config)?,
        CsvList(vec!["mrts".into(), "apca".into()]),
    )?;
    let cfg = SimulateConfig {
        scenario,
        dist,
        t: s.get("T", a.t, 50)?,
        p1: s.get("p1", a.p1, 50)?,
        p2: s.get("p2", a.p2, 50)?,
        k1: s.get("k1", a.k1, 3)?,
        k2: s.get("k2", a.k2, 3)?,
        phi: s.get("phi", a.phi, phi0)?,
        psi: s.get("psi", a.psi, psi0)?,
        reps: s.get("reps", a.reps, 100)?,
        methods: methods
            .0
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_>>()?,
        rank: rank_config(&mut s, &a.rank)?,
        seed: s.get("seed", a.common.seed, 1)?,
        threads: s.get_quiet("threads", a.common.threads, 1)?,
        fixed_loadings: s.get("fixed-loadings", a.fixed_loadings.then_some(true), false)?,
    };
    let out = out_dir(&mut s, &a.common)?;
    let report = run_simulate(&cfg)?;
    let paths = write_simulate(&report, &s.echo(), &out)?;
    for m in &report.summary {
        eprintln!(
            "{}: D_R {:.4} D_C {:.4} MSE {:.4} exact(k1,k2) ({:.3}, {:.3})",
            m.method, m.d_r.0, m.d_c.0, m.mse.0, m.exact_k1, m.exact_k2
        );
    }
    eprintln!("wrote {} and {}", paths.reps.display(), paths.summary.display());
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let mut s = settings(&a.common, "estimate")?;
    let (input, format) = input_path(&mut s, &a.input)?;
    let method: Method = s.get("method", a.method, "mrts".to_string())?.parse()?;
    let auto = s.get("auto-rank", a.auto_rank.then_some(true), false)?;
    let (k1, k2) = if auto {
        (None, None)
    } else {
        (s.get_opt("k1", a.k1)?, s.get_opt("k2", a.k2)?)
    };
    let cfg = EstimateConfig {
        input,
        format,
        method,
        k1,
        k2,
        rank: rank_config(&mut s, &a.rank)?,
    };
    let out = out_dir(&mut s, &a.common)?;
    let threads = s.get_quiet("threads", a.common.threads, 1)?;
    let result = with_threads(threads, || run_estimate(&cfg))??;
    let paths = write_estimate(&result, &cfg, &out)?;
    let (k1, k2) = result.ranks();
    eprintln!("ranks ({k1}, {k2}); wrote {}", paths.metadata.display());
    Ok(())
}

fn cmd_rank(a: RankArgs) -> Result<()> {
    let mut s = settings(&a.common, "rank")?;
    let (input, format) = input_path(&mut s, &a.input)?;
    let methods: CsvList<String> = s.get(
        "methods",
        a.methods.map(|m| m.parse()).transpose().map_err(Error::Config)?,
        CsvList(vec!["mrts".into(), "apca".into()]),
    )?;
    let cfg = RankRunConfig {
        input,
        format,
        methods: methods
            .0
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_>>()?,
        rank: rank_config(&mut s, &a.rank)?,
    };
    let out = out_dir(&mut s, &a.common)?;
    let threads = s.get_quiet("threads", a.common.threads, 1)?;
    let traces = with_threads(threads, || run_rank(&cfg))?.map_err(config_err_if_kmax)?;
    let path = write_rank(&traces, &s.echo(), &out)?;
    for t in &traces {
        eprintln!("{} {}: k_hat = {}", t.method, t.side.name(), t.selection.k_hat);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn config_err_if_kmax(e: Error) -> Error {
    match e {
        Error::Parameter(m) if m.contains("kmax") => Error::Config(m),
        other => other,
    }
}

fn cmd_rolling(a: RollingArgs) -> Result<()> {
    let mut s = settings(&a.common, "rolling")?;
    let (input, format) = input_path(&mut s, &a.input)?;
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| Error::Config(format!("--{name} is required")));
    let params = RollingParams {
        window: need(s.get_opt("window", a.window)?, "window")?,
        block: s.get("block", a.block, 12)?,
        k1: need(s.get_opt("k1", a.k1)?, "k1")?,
        k2: need(s.get_opt("k2", a.k2)?, "k2")?,
        method: s.get("method", a.method, "mrts".to_string())?.parse()?,
    };
    let cfg = RollingConfig {
        input,
        format,
        params,
    };
    let out = out_dir(&mut s, &a.common)?;
    let threads = s.get_quiet("threads", a.common.threads, 1)?;
    let report = with_threads(threads, || run_rolling(&cfg))?.map_err(|e| match e {
        Error::Parameter(m) if m.contains("window") => Error::Config(m),
        other => other,
    })?;
    let path = write_rolling(&report, &s.echo(), &out)?;
    eprintln!(
        "{} windows: mean MSE {:.4}, mean rho {:.4}; wrote {}",
        report.windows.len(),
        report.mean_mse,
        report.mean_rho,
        path.display()
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut s = settings(&a.common, "bench")?;
    let d = BenchConfig::default();
    let parse_list = |v: Option<String>| -> Result<Option<CsvList<usize>>> {
        v.map(|x| x.parse::<CsvList<usize>>()).transpose().map_err(Error::Config)
    };
    let cfg = BenchConfig {
        ts: s.get("bench-T", parse_list(a.bench_t)?, CsvList(d.ts.clone()))?.0,
        ps: s.get("bench-p", parse_list(a.bench_p)?, CsvList(d.ps.clone()))?.0,
        repeats: s.get("repeats", a.repeats, d.repeats)?,
        k: s.get("k", a.k, d.k)?,
        seed: s.get("seed", a.common.seed, d.seed)?,
        threads: s.get("threads", a.common.threads, d.threads)?,
    };
    let out = out_dir(&mut s, &a.common)?;
    let rows = run_bench(&cfg).map_err(config_err)?;
    let path = write_bench(&rows, &s.echo(), &out)?;
    for r in &rows {
        eprintln!(
            "T={} p={}: kendall {:.4}s, mrts {:.4}s",
            r.t, r.p, r.kendall_secs, r.mrts_secs
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Rolling(a) => cmd_rolling(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
