//! `ncmart`: run the martingale verification suites from the command line.
//!
//! Subcommands: `verify` (weak-type + regular suites), `constants` (ratio
//! report over a p-grid), `bmo`, `khintchine`, and `demo` (the worked 4×4
//! example with every intermediate object printed).
//!
//! Exit codes: 0 when all thresholds pass, 1 on a threshold failure (the
//! worst trial's seed is printed), 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncmartingale::*;
use serde::Deserialize;

type CliResult<T> = std::result::Result<T, String>;

mod demo;

#[derive(Parser)]
#[command(
    name = "ncmart",
    version,
    about = "Noncommutative martingale laboratory: verification suites and reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the weak-type and k-regular verification suites.
    Verify(CommonArgs),
    /// Measure norm-equivalence ratios over a p-grid.
    Constants(CommonArgs),
    /// BMO bounds for sums of independent mean-zero elements.
    Bmo(BmoArgs),
    /// BMO ratio band for coefficient sums against independent elements.
    Khintchine(KhintchineArgs),
    /// Walk the 4×4 worked example, printing every intermediate object.
    Demo(DemoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FiltrationArg {
    Pinching,
    Tensor,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Ambient matrix dimension d.
    #[arg(long)]
    dim: Option<usize>,
    /// Number of filtration levels N.
    #[arg(long)]
    levels: Option<usize>,
    /// Number of random trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; NCMART_SEED overrides the built-in default.
    #[arg(long)]
    seed: Option<u64>,
    /// Filtration family for the ensemble.
    #[arg(long, value_enum)]
    filtration: Option<FiltrationArg>,
    /// Regularity constant for the k-regular suite.
    #[arg(long)]
    k: Option<f64>,
    /// Comma-separated exponent grid, e.g. 1.1,1.5,2,4.
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    /// Residual tolerance for the informational checks printed by demo.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// JSON config file supplying any of the above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write per-martingale norm rows (CSV, one per trial per p) here.
    #[arg(long)]
    norms_out: Option<PathBuf>,
    /// Write the stopping projections and layers of trial 0 to
    /// projections.json.
    #[arg(long, default_value_t = false)]
    dump_projections: bool,
    /// Write the decompositions of trial 0 to decomposition.json.
    #[arg(long, default_value_t = false)]
    dump_decomposition: bool,
}

#[derive(Args)]
struct BmoArgs {
    /// Comma-separated tensor factor dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct KhintchineArgs {
    /// Comma-separated tensor factor dimensions for the independent elements.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Dimension of the coefficient algebra.
    #[arg(long)]
    b_dim: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DemoArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// Optional JSON config mirroring the flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dim: Option<usize>,
    levels: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    filtration: Option<String>,
    k: Option<f64>,
    p_grid: Option<Vec<f64>>,
    tol: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
}

/// Fully resolved options: flag > config file > NCMART_SEED (seed default) >
/// built-in default.
pub(crate) struct Resolved {
    pub(crate) dim: usize,
    pub(crate) levels: usize,
    pub(crate) trials: usize,
    pub(crate) seed: u64,
    pub(crate) family: FiltrationFamily,
    pub(crate) k: f64,
    pub(crate) p_grid: Vec<f64>,
    pub(crate) tol: f64,
    pub(crate) out: Option<PathBuf>,
    pub(crate) format: FormatArg,
    pub(crate) dump_projections: bool,
    pub(crate) dump_decomposition: bool,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn resolve(args: &CommonArgs) -> CliResult<Resolved> {
    let config: ConfigFile = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let env_seed = std::env::var("NCMART_SEED")
        .ok()
        .map(|v| v.parse::<u64>().map_err(|_| format!("NCMART_SEED is not a u64: {v}")))
        .transpose()?;
    let filtration = match &args.filtration {
        Some(FiltrationArg::Pinching) => FiltrationFamily::Pinching,
        Some(FiltrationArg::Tensor) => FiltrationFamily::Tensor,
        None => match config.filtration.as_deref() {
            Some("pinching") | None => FiltrationFamily::Pinching,
            Some("tensor") => FiltrationFamily::Tensor,
            Some(other) => return Err(format!("unknown filtration family {other:?}")),
        },
    };
    let format = match args.format {
        Some(f) => f,
        None => match config.format.as_deref() {
            Some("csv") => FormatArg::Csv,
            Some("json") | None => FormatArg::Json,
            Some(other) => return Err(format!("unknown format {other:?}")),
        },
    };
    Ok(Resolved {
        dim: args.dim.or(config.dim).unwrap_or(8),
        levels: args.levels.or(config.levels).unwrap_or(4),
        trials: args.trials.or(config.trials).unwrap_or(200),
        seed: args.seed.or(config.seed).or(env_seed).unwrap_or(7),
        family: filtration,
        k: args.k.or(config.k).unwrap_or(2.0),
        p_grid: args
            .p_grid
            .clone()
            .or(config.p_grid)
            .unwrap_or_else(|| vec![1.1, 1.25, 1.5, 2.0, 4.0, 8.0]),
        tol: args.tol.or(config.tol).unwrap_or(1e-8),
        out: args.out.clone().or(config.out),
        format,
        dump_projections: args.dump_projections,
        dump_decomposition: args.dump_decomposition,
    })
}

fn emit(opts: &Resolved, text: &str) -> CliResult<()> {
    match &opts.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub(crate) fn dump_dir(opts: &Resolved) -> PathBuf {
    opts.out
        .as_deref()
        .and_then(Path::parent)
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub(crate) fn write_projection_dump(m: &Martingale, dir: &Path) -> CliResult<()> {
    let fams = dyadic_families(m).map_err(|e| e.to_string())?;
    let ls = layers_from(m, &fams).map_err(|e| e.to_string())?;
    let mut map = serde_json::Map::new();
    for fam in fams.iter() {
        for n in 1..=m.levels() {
            let key = format!("q(lambda={},n={n})", fam.lambda());
            map.insert(key, serde_json::to_value(fam.q(n).as_operator()).unwrap());
        }
    }
    for n in 1..=m.levels() {
        for i in 0..ls.layer_count() {
            let key = format!("p(i={i},n={n})");
            map.insert(key, serde_json::to_value(ls.layer(i, n).as_operator()).unwrap());
        }
    }
    let path = dir.join("projections.json");
    fs::write(&path, serde_json::to_string_pretty(&map).unwrap())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub(crate) fn write_decomposition_dump(m: &Martingale, dir: &Path) -> CliResult<()> {
    let triple = abc_decompose(m).map_err(|e| e.to_string())?;
    let pair = yz_decompose(m).map_err(|e| e.to_string())?;
    let value = serde_json::json!({
        "a": triple.a,
        "b": triple.b,
        "c": triple.c,
        "dy": pair.y.differences(),
        "dz": pair.z.differences(),
    });
    let path = dir.join("decomposition.json");
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn suite_csv(results: &[&SuiteResult]) -> String {
    let mut out =
        String::from("suite,name,max_observed,threshold,pass,worst_trial,worst_trial_seed\n");
    for result in results {
        for c in &result.checks {
            out.push_str(&format!(
                "{},{},{:.12e},{},{},{},{}\n",
                result.suite,
                c.name,
                c.max_observed,
                c.threshold.map(|t| format!("{t:.12e}")).unwrap_or_default(),
                c.pass,
                c.worst_trial.map(|t| t.to_string()).unwrap_or_default(),
                c.worst_trial_seed.map(|s| s.to_string()).unwrap_or_default(),
            ));
        }
    }
    out
}

fn print_failures(result: &SuiteResult) {
    for check in result.failures() {
        eprintln!(
            "FAIL {}/{}: observed {:.6e} over threshold {:?}; replay trial {:?} with seed {:?}",
            result.suite,
            check.name,
            check.max_observed,
            check.threshold,
            check.worst_trial,
            check.worst_trial_seed
        );
    }
}

fn run_verify(args: &CommonArgs) -> CliResult<ExitCode> {
    let opts = resolve(args)?;
    let weak_spec = EnsembleSpec {
        dim: opts.dim,
        levels: opts.levels,
        family: opts.family,
        trials: opts.trials,
        seed: opts.seed,
        mode: EnsembleMode::PositiveNormalized,
    };
    let weak = run_weak_type_suite(&weak_spec).map_err(|e| e.to_string())?;
    let regular_spec = EnsembleSpec { mode: EnsembleMode::KRegular { k: opts.k }, ..weak_spec };
    let regular = run_regular_suite(&regular_spec).map_err(|e| e.to_string())?;
    if opts.dump_projections || opts.dump_decomposition {
        let f = weak_spec.filtration().map_err(|e| e.to_string())?;
        let m = weak_spec.trial_martingale(&f, 0);
        let dir = dump_dir(&opts);
        if opts.dump_projections {
            write_projection_dump(&m, &dir)?;
        }
        if opts.dump_decomposition {
            write_decomposition_dump(&m, &dir)?;
        }
    }
    let text = match opts.format {
        FormatArg::Json => {
            serde_json::to_string_pretty(&serde_json::json!([weak, regular])).unwrap()
        }
        FormatArg::Csv => suite_csv(&[&weak, &regular]),
    };
    emit(&opts, &text)?;
    let pass = weak.all_pass() && regular.all_pass();
    if !pass {
        print_failures(&weak);
        print_failures(&regular);
        return Ok(ExitCode::from(1));
    }
    eprintln!(
        "verify: {} checks passed ({} weak-type, {} regular; seed {})",
        weak.checks.len() + regular.checks.len(),
        weak.checks.len(),
        regular.checks.len(),
        opts.seed
    );
    Ok(ExitCode::SUCCESS)
}

fn run_constants(args: &CommonArgs) -> CliResult<ExitCode> {
    let opts = resolve(args)?;
    let spec = EnsembleSpec {
        dim: opts.dim,
        levels: opts.levels,
        family: opts.family,
        trials: opts.trials,
        seed: opts.seed,
        mode: EnsembleMode::PositiveNormalized,
    };
    let report = estimate_constants(&spec, &opts.p_grid).map_err(|e| e.to_string())?;
    if let Some(path) = &args.norms_out {
        let rows = norm_report_csv(&spec, &opts.p_grid).map_err(|e| e.to_string())?;
        fs::write(path, rows).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    let text = match opts.format {
        FormatArg::Json => report.to_json(),
        FormatArg::Csv => report.to_csv(),
    };
    emit(&opts, &text)?;
    if opts.p_grid.contains(&2.0) && !report.p2_gate() {
        eprintln!("FAIL constants: the p=2 ratios deviate from 1 beyond 1e-8 (seed {})", opts.seed);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_bmo(args: &BmoArgs) -> CliResult<ExitCode> {
    let opts = resolve(&args.common)?;
    let dims = args.dims.clone().unwrap_or_else(|| vec![2, 2, 2, 2]);
    let trials = args.common.trials.unwrap_or(100);
    let result = run_bmo_suite(&dims, trials, opts.seed).map_err(|e| e.to_string())?;
    let text = match opts.format {
        FormatArg::Json => result.to_json(),
        FormatArg::Csv => result.to_csv(),
    };
    emit(&opts, &text)?;
    if !result.all_pass() {
        print_failures(&result);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_khintchine(args: &KhintchineArgs) -> CliResult<ExitCode> {
    let opts = resolve(&args.common)?;
    let dims = args.dims.clone().unwrap_or_else(|| vec![2, 2, 2]);
    let b_dim = args.b_dim.unwrap_or(2);
    let trials = args.common.trials.unwrap_or(50);
    let report = run_khintchine_scenario(&dims, b_dim, trials, opts.seed)
        .map_err(|e| e.to_string())?;
    let text = match opts.format {
        FormatArg::Json => report.to_json(),
        FormatArg::Csv => {
            let mut out = String::from("trial,ratio\n");
            for (i, r) in report.ratios.iter().enumerate() {
                out.push_str(&format!("{i},{r:.12e}\n"));
            }
            out
        }
    };
    emit(&opts, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Constants(args) => run_constants(args),
        Command::Bmo(args) => run_bmo(args),
        Command::Khintchine(args) => run_khintchine(args),
        Command::Demo(args) => match resolve(&args.common) {
            Ok(opts) => demo::run(&opts).map_err(|e| e.to_string()).map(|()| ExitCode::SUCCESS),
            Err(e) => return usage_error(&e),
        },
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => usage_error(&msg),
    }
}
