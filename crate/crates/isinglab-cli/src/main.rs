//! `isinglab`: run exact, sampling, contour, coarse-graining, random-field and audit experiments.
//!
//! Settings resolve as flag, then `ISINGLAB_*` environment variable, then config file, then default.
//! Exit status is 0 on success, 2 when an audit fails, 1 on any error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isinglab::exact::MAX_EXACT_SITES;
use isinglab::lattice::Point;
use isinglab::rfield::Disorder;
use isinglab::sampler::{McRun, Observable};

use commands::Common;
use config::{FileConfig, Kind, Lemma, ModelArgs, Task};
use report::Sink;

#[derive(Parser)]
#[command(name = "isinglab", version, about = "Finite-volume Ising experiments and audits")]
struct Cli {
    /// TOML config file
    #[arg(long, global = true, env = "ISINGLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON artifacts; nothing is written without it
    #[arg(long, global = true, env = "ISINGLAB_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "ISINGLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads for parallel enumeration
    #[arg(long, global = true, env = "ISINGLAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "ISINGLAB_MAX_EXACT_SITES")]
    max_exact_sites: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Gibbs state by enumeration
    #[command(allow_negative_numbers = true)]
    Exact(ExactArgs),
    /// Metropolis sampling, checked against exact values on small regions
    #[command(allow_negative_numbers = true)]
    Sample(SampleArgs),
    /// Peierls contour census on a small box
    #[command(allow_negative_numbers = true)]
    Contour(ContourArgs),
    /// Coarse-graining lemmas and covering estimates
    #[command(allow_negative_numbers = true)]
    Coarse(CoarseArgs),
    /// Random-field tasks
    #[command(allow_negative_numbers = true)]
    Rfield(RfieldArgs),
    /// Correlation-inequality audit
    #[command(allow_negative_numbers = true)]
    Audit(AuditArgs),
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Tabulate the wall free energy on [0, LAMBDA]
    #[arg(long)]
    wall_lambda_max: Option<f64>,
    #[arg(long)]
    wall_points: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chain: Option<u64>,
    /// Also record the per-layer magnetization profile
    #[arg(long)]
    profile: bool,
    /// Skip the comparison with the exact state
    #[arg(long)]
    no_exact_check: bool,
}

#[derive(Args)]
struct ContourArgs {
    #[arg(long = "box", value_name = "NxM")]
    box_: Option<String>,
}

#[derive(Args)]
struct CoarseArgs {
    #[arg(long, value_enum)]
    lemma: Option<Lemma>,
    #[arg(long, value_name = "NxM")]
    rect: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "box", value_name = "NxM")]
    box_: Option<String>,
    #[arg(long)]
    ell_max: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    ladder_depth: Option<u32>,
}

#[derive(Args)]
struct RfieldArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    task: Option<Task>,
    #[arg(long, value_parser = parse_disorder)]
    dist: Option<Disorder>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Points of A, e.g. "0,0;0,1"
    #[arg(long, value_parser = parse_points)]
    set: Option<PointList>,
    #[arg(long, value_parser = parse_points)]
    set_prime: Option<PointList>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    fields: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    suite: Option<String>,
    #[arg(long = "box", value_name = "NxM")]
    box_: Option<String>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

fn parse_disorder(s: &str) -> Result<Disorder, String> {
    match s {
        "gaussian" => Ok(Disorder::Gaussian),
        "bernoulli" => Ok(Disorder::Bernoulli),
        _ => Err(format!("unknown distribution `{s}` (gaussian or bernoulli)")),
    }
}

#[derive(Clone, Debug)]
struct PointList(Vec<Point>);

fn parse_points(s: &str) -> Result<PointList, String> {
    let pts: Result<Vec<Point>, String> = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let c: Result<Vec<i32>, _> = t.split(',').map(|v| v.trim().parse::<i32>()).collect();
            c.map(|c| Point::new(&c)).map_err(|_| format!("bad point `{t}`"))
        })
        .collect();
    pts.map(PointList)
}

fn run(cli: Cli) -> Result<bool, String> {
    let file: FileConfig = match &cli.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let common = Common {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        max_exact_sites: cli.max_exact_sites.or(file.max_exact_sites).unwrap_or(MAX_EXACT_SITES),
    };
    let sink = Sink::new(cli.out.clone().or(file.out.clone()));
    let model = file.model.as_ref();
    match cli.command {
        Command::Exact(a) => {
            let f = file.exact.clone().unwrap_or_default();
            let p = commands::ExactParams {
                model: config::resolve_model(model, &a.model)?,
                wall_lambda_max: a.wall_lambda_max.or(f.wall_lambda_max),
                wall_points: a.wall_points.or(f.wall_points).unwrap_or(21),
            };
            commands::exact(&p, &common, &sink)
        }
        Command::Sample(a) => {
            let f = file.sample.clone().unwrap_or_default();
            let mut run = McRun::new(
                config::resolve_model(model, &a.model)?,
                a.sweeps.or(f.sweeps).unwrap_or(10_000),
                a.burn_in.or(f.burn_in).unwrap_or(1_000),
                common.seed,
            );
            run.thin = a.thin.or(f.thin).unwrap_or(1);
            run.chain = a.chain.or(f.chain).unwrap_or(0);
            let p = commands::SampleParams {
                run,
                observables: f
                    .observables
                    .unwrap_or_else(|| vec![Observable::Magnetization, Observable::Energy]),
                profile: a.profile || f.profile.unwrap_or(false),
                exact_check: !a.no_exact_check && f.exact_check.unwrap_or(true),
            };
            commands::sample(&p, &common, &sink)
        }
        Command::Contour(a) => {
            let f = file.contour.clone().unwrap_or_default();
            let p = commands::ContourParams {
                box_: a.box_.or(f.box_).unwrap_or_else(|| "4x4".into()),
            };
            commands::contour(&p, &common, &sink)
        }
        Command::Coarse(a) => {
            let f = file.coarse.clone().unwrap_or_default();
            let p = commands::CoarseParams {
                lemma: a
                    .lemma
                    .or(f.lemma)
                    .ok_or("coarse needs --lemma (geo1, geo2, census or covering)")?,
                rect: a.rect.or(f.rect).unwrap_or_else(|| "3x3".into()),
                lambda: a.lambda.or(f.lambda).unwrap_or(isinglab::coarse::DEFAULT_LAMBDA),
                levels: a.levels.or(f.levels).unwrap_or_else(|| vec![0, 1]),
                samples: a.samples.or(f.samples).unwrap_or(2_000),
                box_: a.box_.or(f.box_).unwrap_or_else(|| "4x4".into()),
                ell_max: a.ell_max.or(f.ell_max).unwrap_or(3),
                sizes: a.sizes.or(f.sizes),
                eps: a.eps.or(f.eps).unwrap_or(isinglab::coarse::DEFAULT_EPSILON),
                ladder_depth: a.ladder_depth.or(f.ladder_depth).unwrap_or(6),
            };
            commands::coarse(&p, &common, &sink)
        }
        Command::Rfield(a) => {
            let f = file.rfield.clone().unwrap_or_default();
            let task = a
                .task
                .or(f.task)
                .ok_or("rfield needs --task (animal, tail, joint or bad-event)")?;
            let has_region = a.model.box_.is_some()
                || model.is_some_and(|m| m.box_.is_some() || m.sites.is_some());
            let p = commands::RfieldParams {
                task,
                dist: a.dist.or(f.dist).unwrap_or(Disorder::Gaussian),
                eps: a.eps.or(f.eps).unwrap_or(0.5),
                dim: a.dim.or(f.dim).unwrap_or(2),
                k_max: a.k_max.or(f.k_max).unwrap_or(8),
                kind: a.kind.or(f.kind).unwrap_or(Kind::Exterior),
                seeds: a.seeds.or(f.seeds).unwrap_or(50),
                model: if has_region {
                    Some(config::resolve_model(model, &a.model)?)
                } else {
                    None
                },
                set: a.set.map(|p| p.0).or(f.set).unwrap_or_default(),
                set_prime: a.set_prime.map(|p| p.0).or(f.set_prime).unwrap_or_default(),
                samples: a.samples.or(f.samples).unwrap_or(10_000),
                lambdas: a.lambdas.or(f.lambdas).unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
                c: a.c.or(f.c).unwrap_or(1.0),
                fields: a.fields.or(f.fields).unwrap_or(200),
                sizes: a.sizes.or(f.sizes),
            };
            commands::rfield(&p, &common, &sink)
        }
        Command::Audit(a) => {
            let f = file.audit.clone().unwrap_or_default();
            let p = commands::AuditParams {
                suite: a.suite.or(f.suite).unwrap_or_else(|| "all".into()),
                box_: a.box_.or(f.box_).unwrap_or_else(|| "2x2".into()),
                draws: a.draws.or(f.draws).unwrap_or(200),
                tolerance: a.tolerance.or(f.tolerance).unwrap_or(1e-10),
            };
            commands::audit(&p, &common, &sink)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
