mod commands;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "tangency", version, about = "Directed lattice paths, their limit shapes and tangent envelopes")]
struct Cli {
    /// Directory receiving the TSV files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate L(t), the saddle point and the prefactor estimate.
    Lagrangean(LagrangeanArgs),
    /// Weighted path count between two sites.
    Count(CountArgs),
    /// Exact conditioned sampling with per-column histograms.
    Sample(SampleArgs),
    /// Asymptotic passage and first-passage laws.
    Passage(PassageArgs),
    /// Constrained maximizer of the action in a domain.
    Optimize(OptimizeArgs),
    /// Tangent family, its envelope and most likely entry points.
    Tangent(TangentArgs),
    /// Canned desk-scale pipelines.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
pub struct LagrangeanArgs {
    #[arg(long)]
    pub walk: PathBuf,
    /// `from:to:count`, evenly spaced and inclusive.
    #[arg(long, value_parser = parse_range)]
    pub t_range: (f64, f64, usize),
    /// Lengths used for the prefactor column; empty skips it.
    #[arg(long, value_delimiter = ',', default_value = "100,200")]
    pub nhat_n: Vec<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CountMode {
    Exact,
    Log,
}

#[derive(Args)]
pub struct CountArgs {
    #[arg(long)]
    pub walk: PathBuf,
    #[arg(long, value_parser = parse_site)]
    pub target: (i64, i64),
    #[arg(long, value_parser = parse_site, default_value = "0,0")]
    pub start: (i64, i64),
    /// Overrides the walk file's `q`.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Lattice scale of the domain; defaults to the target's abscissa.
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: CountMode,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub walk: PathBuf,
    #[arg(long, value_parser = parse_site, default_value = "0,0")]
    pub start: (i64, i64),
    #[arg(long, value_parser = parse_site)]
    pub end: (i64, i64),
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub n_samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<i64>,
    /// Histogram first visits instead of all visits.
    #[arg(long)]
    pub first_passage: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PassageLaw {
    Gaussian,
    Entry,
    Bulk,
}

#[derive(Args)]
pub struct PassageArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub law: PassageLaw,
    /// Needed for the gaussian law.
    #[arg(long)]
    pub walk: Option<PathBuf>,
    /// Rescaled endpoint `(a, b)`.
    #[arg(long, value_parser = parse_point, default_value = "1,1")]
    pub end: (f64, f64),
    #[arg(long)]
    pub n: i64,
    /// Lattice columns for the gaussian law.
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<i64>,
    /// Half-width of the tabulated window in standard deviations.
    #[arg(long, default_value_t = 6.0)]
    pub width: f64,
    #[arg(long)]
    pub a_c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub walk: PathBuf,
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub start: (f64, f64),
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub end: (f64, f64),
    #[arg(long, default_value_t = tangency_core::variational::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Args)]
pub struct TangentArgs {
    #[arg(long)]
    pub walk: PathBuf,
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, alias = "ends", value_parser = parse_point, allow_hyphen_values = true)]
    pub end: (f64, f64),
    /// `x0,y0:x1,y1:count`, evenly spaced and inclusive.
    #[arg(long, value_parser = parse_starts, allow_hyphen_values = true)]
    pub starts: Starts,
    /// Lattice scale; adds the most likely entry site of every start.
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, default_value_t = tangency_core::variational::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig4,
    Fig5,
}

#[derive(Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Weight of the horizontal Schröder step.
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
}

fn parse_range(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, count] = parts[..] else {
        return Err("expected `from:to:count`".into());
    };
    let a: f64 = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    let count: usize = count.trim().parse().map_err(|e| format!("bad count `{count}`: {e}"))?;
    if count < 1 || (count > 1 && !(b > a)) {
        return Err("need count >= 1 and from < to".into());
    }
    Ok((a, b, count))
}

fn pair<T: std::str::FromStr>(text: &str) -> Result<(T, T), String>
where
    T::Err: std::fmt::Display,
{
    let (a, b) = text.split_once(',').ok_or("expected `a,b`")?;
    let parse = |s: &str| s.trim().parse::<T>().map_err(|e| format!("bad number `{s}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_site(text: &str) -> Result<(i64, i64), String> {
    pair(text)
}

fn parse_point(text: &str) -> Result<(f64, f64), String> {
    pair(text)
}

#[derive(Clone)]
pub struct Starts(pub Vec<(f64, f64)>);

fn parse_starts(text: &str) -> Result<Starts, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [from, to, count] = parts[..] else {
        return Err("expected `x0,y0:x1,y1:count`".into());
    };
    let (from, to) = (parse_point(from)?, parse_point(to)?);
    let count: usize = count.trim().parse().map_err(|e| format!("bad count `{count}`: {e}"))?;
    if count < 1 {
        return Err("need at least one start".into());
    }
    let xs = linspace(from.0, to.0, count);
    let ys = linspace(from.1, to.1, count);
    Ok(Starts(xs.into_iter().zip(ys).collect()))
}

/// Grid `from..=to` with `count` points.
pub fn linspace(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![from];
    }
    (0..count)
        .map(|k| from + (to - from) * k as f64 / (count - 1) as f64)
        .collect()
}

/// Command line without `--out-dir`, so a rerun elsewhere yields identical files.
fn recorded_args(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for arg in args {
        if skip_next {
            skip_next = false;
        } else if arg == "--out-dir" {
            skip_next = true;
        } else if !arg.starts_with("--out-dir=") {
            out.push(arg);
        }
    }
    out
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("TANGENCY_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("TANGENCY_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let argv = recorded_args(std::env::args().skip(1));
    let out = cli.out_dir;
    let result = match cli.command {
        Command::Lagrangean(args) => commands::lagrangean(args, argv, &out),
        Command::Count(args) => commands::count(args, argv, &out),
        Command::Sample(args) => commands::sample(args, argv, &out),
        Command::Passage(args) => commands::passage(args, argv, &out),
        Command::Optimize(args) => commands::optimize(args, argv, &out),
        Command::Tangent(args) => commands::tangent(args, argv, &out),
        Command::Reproduce(args) => reproduce::run(args, argv, &out),
    };
    match result {
        Ok(paths) => {
            for path in paths {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
