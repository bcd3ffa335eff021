mod commands;
mod io;
mod pipeline;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use tracedist::trace_functions::Method;
use tracedist::GroupKind;

/// Exit status when an enabled check fails.
const EXIT_ASSERTION: u8 = 2;
/// Exit status for bad arguments, bad inputs and unmet preconditions.
const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tracedist",
    version,
    about = "Short sums of trace functions against their random-matrix model"
)]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true, env = "TRACEDIST_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print p, e, q, the generator and the modulus of F_q as JSON.
    FieldInfo(FieldArgs),
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Normalized short sums over every shifted origin.
    Sums(SumsArgs),
    /// Goodness-of-fit report for an ensemble.
    Gof(GofArgs),
    #[command(subcommand)]
    Moments(MomentsCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
    #[command(subcommand)]
    Repro(ReproCmd),
    /// Field, table, ensemble and report from one JSON config.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Clone)]
struct FieldArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    e: u32,
    /// Monic irreducible polynomial such as `X^2+1` (default: canonical choice).
    #[arg(long)]
    modulus: Option<String>,
}

#[derive(Subcommand, Debug)]
enum TraceCmd {
    /// Tabulate a trace function over F_q.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// e.g. `kloosterman(n=2)`, `birch`, `kummer(chi=1/2;f=X^3+X)`; a bare `kloosterman` takes `--n`.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    method: Method,
    /// Replace values at singular points by 0.
    #[arg(long)]
    exclude_singular: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("window").required(true).args(["h", "offsets"]))]
struct SumsArgs {
    #[arg(long)]
    table: PathBuf,
    /// Interval length; shorthand for `--offsets interval:H`.
    #[arg(long = "H")]
    h: Option<usize>,
    /// `interval:H`, `box:d1xd2` or `explicit:i1,i2,...`
    #[arg(long)]
    offsets: Option<String>,
    #[arg(long)]
    exclude_singular: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GofArgs {
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, default_value_t = 4)]
    moment_order: u32,
    /// Half-width R of the square [-R, R]^2 covered by the rectangle grid.
    #[arg(long, default_value_t = 3.0)]
    grid_range: f64,
    /// Cells per axis of the rectangle grid.
    #[arg(long, default_value_t = 5)]
    grid_cells: usize,
    /// Also bin the ensemble into this many histogram bins over [-R, R].
    #[arg(long)]
    hist_bins: Option<usize>,
    #[arg(long, default_value = "re")]
    hist_axis: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Either a single (k, r) or every pair with k + r ≤ kmax.
#[derive(Args, Debug, Clone, Copy)]
#[command(group = clap::ArgGroup::new("orders").required(true).args(["k", "kmax"]))]
struct Orders {
    #[arg(long, requires = "r")]
    k: Option<u32>,
    #[arg(long, requires = "k")]
    r: Option<u32>,
    #[arg(long)]
    kmax: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum MomentsCmd {
    /// Exact moments E[tr(g)^k conj(tr(g))^r] of a compact group.
    Rmt {
        #[arg(long)]
        group: GroupKind,
        #[command(flatten)]
        orders: Orders,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moments of the normalized H-step random walk on the group.
    Model {
        #[arg(long)]
        group: GroupKind,
        #[command(flatten)]
        orders: Orders,
        #[arg(long = "H")]
        h: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moments of the limiting real or complex Gaussian.
    Gaussian {
        #[arg(long, conflicts_with = "self_dual")]
        group: Option<GroupKind>,
        #[arg(long)]
        self_dual: bool,
        #[command(flatten)]
        orders: Orders,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical moments of an ensemble file.
    Empirical {
        #[arg(long)]
        ensemble: PathBuf,
        #[command(flatten)]
        orders: Orders,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Exact group moments against Haar Monte Carlo.
    Rmt {
        /// Comma-separated list such as `sl:2,sp:4,so:3`.
        #[arg(long, value_delimiter = ',', required = true)]
        groups: Vec<GroupKind>,
        #[arg(long, default_value_t = 6)]
        kmax: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete sums of shifted products against their limit.
    Sumproduct {
        #[arg(long)]
        table: PathBuf,
        /// Element indices of the shifts.
        #[arg(long, value_delimiter = ',', required = true)]
        shifts: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<u32>,
        /// Pass iff gap ≤ tolerance · budget.
        #[arg(long, default_value_t = 25.0)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sup-norm bound |t(x)| ≤ rank away from singular points.
    Weil {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Growth bound on the model moment M(N, N; H).
    Bounds {
        #[arg(long)]
        group: GroupKind,
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "H")]
        h: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ReproCmd {
    /// Scatter and histogram data of the two distribution figures (p = 7927).
    Figures {
        #[arg(long)]
        outdir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(json!(s))
        .map_err(|_| format!("unknown method '{s}' (auto, brute_force, fast)"))
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    use tracedist::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Incompatible { .. }) => "incompatible",
        Some(E::Budget { .. }) => "budget",
        Some(E::Parse(_)) => "parse",
        Some(_) => "invalid_parameter",
        None if e.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "usage",
    }
}

fn report_error(e: &anyhow::Error) {
    let mut body = json!({ "kind": error_kind(e), "message": format!("{e:#}") });
    if let Some(tracedist::Error::Incompatible { max_terms }) = e.downcast_ref() {
        body["max_terms"] = json!(max_terms);
    }
    eprintln!("{}", json!({ "error": body }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Some(t) = cli.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
        if t == 0 || pool.is_err() {
            report_error(&anyhow::anyhow!("--threads must be a positive integer"));
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            report_error(&e);
            ExitCode::from(EXIT_USAGE)
        }
    }
}
