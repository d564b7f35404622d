mod commands;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use commands::{CliError, Loaded, Overrides, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK};

#[derive(Parser)]
#[command(name = "proxkit", version, about = "Run proximal splitting problems and operator checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver named in a problem file; writes a CSV trace and a JSON summary.
    Solve(SolveArgs),
    /// Run a sampled predicate; prints a JSON report.
    Check(CheckArgs),
    /// Evaluate a single proximity operator at a point.
    Prox(ProxArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Print the parsed file with defaults filled in and exit.
    #[arg(long)]
    dump_normalized: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["spec", "batch"]))]
struct SolveArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Run every `*.json` file in a directory, concurrently.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Directory for `<name>.csv` and `<name>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ProxArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    gamma: f64,
    /// Comma-separated coordinates, e.g. `2,-0.5`.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Prox(args) => cmd_prox(&args),
    };
    ExitCode::from(code)
}

fn report_error(e: &CliError) -> u8 {
    eprintln!("error: {e}");
    EXIT_ERROR
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        file: path.display().to_string(),
        line: 0,
        column: 0,
        message: e.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Where the trace and summary of one run go: `--out` wins, then the file's
/// `output` section (relative to the file), then the current directory.
fn output_paths(loaded: &Loaded, out: Option<&Path>) -> (PathBuf, PathBuf) {
    let stem = loaded.path.file_stem().map(PathBuf::from).unwrap_or_else(|| "run".into());
    let named = |dir: &Path| (dir.join(stem.with_extension("csv")), dir.join(stem.with_extension("json")));
    if let Some(dir) = out {
        return named(dir);
    }
    let (mut trace, mut summary) = named(Path::new("."));
    if let Some(o) = &loaded.spec.output {
        let base = loaded.path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &o.trace {
            trace = base.join(t);
        }
        if let Some(s) = &o.summary {
            summary = base.join(s);
        }
    }
    (trace, summary)
}

fn solve_one(path: &Path, args: &SolveArgs, overrides: &Overrides) -> Result<(u8, String), CliError> {
    let loaded = Loaded::read(path, overrides)?;
    if args.common.dump_normalized {
        return Ok((EXIT_OK, loaded.normalized()));
    }
    let solved = commands::solve(&loaded)?;
    let (trace, summary) = output_paths(&loaded, args.out.as_deref());
    let json = serde_json::to_string_pretty(&solved.summary).expect("summaries serialize") + "\n";
    write_file(&trace, &solved.csv)?;
    write_file(&summary, &json)?;
    Ok((solved.exit_code(), json))
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("PROXKIT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("PROXKIT_THREADS must be a positive integer, got `{v}`")),
        },
    }
}

fn cmd_solve(args: &SolveArgs) -> u8 {
    let overrides = Overrides {
        seed: args.common.seed,
        max_iter: args.max_iter,
        tol: args.tol,
    };
    if let Some(path) = &args.spec {
        return match solve_one(path, args, &overrides) {
            Ok((code, out)) => {
                print!("{out}");
                code
            }
            Err(e) => report_error(&e),
        };
    }
    let dir = args.batch.as_ref().expect("clap requires --spec or --batch");
    let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => return report_error(&io_error(dir, e)),
    };
    files.sort();
    if args.out.is_none() && !args.common.dump_normalized {
        eprintln!("error: --batch needs --out");
        return EXIT_ERROR;
    }
    let pool = match thread_cap() {
        Ok(cap) => {
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(n) = cap {
                b = b.num_threads(n.min(rayon::current_num_threads()));
            }
            b.build().expect("thread pool")
        }
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_ERROR;
        }
    };
    let results: Vec<_> = pool.install(|| files.par_iter().map(|p| solve_one(p, args, &overrides)).collect());
    // Worst outcome wins: error, then diverged, then max_iter.
    let rank = |c: u8| [0, 3, 1, 2][c as usize];
    let mut worst = EXIT_OK;
    for (path, result) in files.iter().zip(results) {
        let code = match result {
            Ok((code, _)) => {
                println!("{}\texit {code}", path.display());
                code
            }
            Err(e) => {
                println!("{}\texit {EXIT_ERROR}", path.display());
                report_error(&e)
            }
        };
        if rank(code) > rank(worst) {
            worst = code;
        }
    }
    worst
}

fn cmd_check(args: &CheckArgs) -> u8 {
    let overrides = Overrides {
        seed: args.common.seed,
        ..Overrides::default()
    };
    let loaded = match Loaded::read(&args.spec, &overrides) {
        Ok(l) => l,
        Err(e) => return report_error(&e),
    };
    if args.common.dump_normalized {
        print!("{}", loaded.normalized());
        return EXIT_OK;
    }
    let report = match commands::check(&loaded) {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    if let Some(out) = &args.out {
        if let Err(e) = write_file(out, &json) {
            return report_error(&e);
        }
    }
    print!("{json}");
    if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn cmd_prox(args: &ProxArgs) -> u8 {
    let overrides = Overrides {
        seed: args.common.seed,
        ..Overrides::default()
    };
    let loaded = match Loaded::read(&args.spec, &overrides) {
        Ok(l) => l,
        Err(e) => return report_error(&e),
    };
    if args.common.dump_normalized {
        print!("{}", loaded.normalized());
        return EXIT_OK;
    }
    match commands::prox(&loaded, args.gamma, &args.point) {
        Ok(line) => {
            println!("{line}");
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}
