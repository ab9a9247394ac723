//! `bmcouple`: simulate couplings, run verification suites, print tables.
//!
//! Exit codes: 0 success, 1 failed checks or I/O error, 2 configuration
//! error, 3 runtime infeasibility.

mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bmcouple::config::SimConfig;
use bmcouple::sim::run_ensemble;
use bmcouple::verify::laws::DistanceLaw;
use bmcouple::verify::report::Summary;
use bmcouple::verify::suites::{run_suite, SuiteId, SuiteOptions};
use bmcouple::verify::trajectory::{rows_of, write_csv};
use bmcouple::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bmcouple", version, about = "Couplings of Brownian motions on model spaces")]
struct Cli {
    /// Worker threads for path-parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate an ensemble and write trajectories plus a JSON summary.
    Simulate(SimulateArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Print a plot-ready table.
    Table(table::TableArgs),
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    /// `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `sphere:D`, `euclidean:D` or `hyperbolic:D`.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    rho0: Option<String>,
    /// Comma-separated ambient coordinates of the first start point.
    #[arg(long, allow_negative_numbers = true)]
    x: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    y: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long = "T")]
    t_end: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Defaults to $BMCOUPLE_SEED, then 0.
    #[arg(long)]
    seed: Option<String>,
    /// Target rate of the rotation coupling.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<String>,
    /// Fixed rotation angle, overriding `k`.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<String>,
    /// Cut-locus patching margin.
    #[arg(long)]
    eps: Option<String>,
    /// Diagonal patching radius.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl SimulateArgs {
    fn pairs(&self) -> BTreeMap<String, String> {
        let flags = [
            ("space", &self.space),
            ("strategy", &self.strategy),
            ("rho0", &self.rho0),
            ("x", &self.x),
            ("y", &self.y),
            ("h", &self.h),
            ("T", &self.t_end),
            ("paths", &self.paths),
            ("seed", &self.seed),
            ("k", &self.k),
            ("alpha", &self.alpha),
            ("eps", &self.eps),
            ("eta", &self.eta),
            ("record_every", &self.record_every),
        ];
        let mut map: BTreeMap<String, String> = flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if let Some(dir) = &self.out_dir {
            map.insert("out_dir".into(), dir.display().to_string());
        }
        map
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// algebra, index-forms, exact-invariants, distance-laws, consistency,
    /// marginals, infeasibility, patching, max-principle or all.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the law-check reports as a JSON array.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_runtime() => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let mut cfg = SimConfig::with_env_defaults()?;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        cfg = cfg.apply(&bmcouple::config::parse_pairs(&text)?)?;
    }
    cfg = cfg.apply(&args.pairs())?;
    if threads.is_some() {
        cfg.threads = threads;
    }
    let (coupling, x, y, grid) = cfg.validate()?;
    init_threads(cfg.threads)?;
    let records = run_ensemble(&coupling, x, y, &grid, cfg.seed, cfg.n_paths)?;

    let strategy = coupling.strategy();
    let rho0 = coupling.space().distance(&x, &y)?;
    let law = DistanceLaw::for_strategy(
        strategy.kind,
        coupling.space(),
        rho0,
        strategy.rotation.k,
        strategy.rotation.alpha_override,
    )
    .ok()
    .filter(|_| cfg.eps.is_none() && cfg.eta.is_none());
    let sup_err = law.map(|law| {
        let n_samples = records[0].times.len();
        (0..n_samples)
            .map(|i| {
                let t = records[0].times[i];
                records
                    .iter()
                    .map(|r| (law.observe(r.rhos[i]) - law.eval_observable(t)).abs())
                    .sum::<f64>()
                    / records.len() as f64
            })
            .fold(0.0, f64::max)
    });
    let summary = Summary {
        strategy: strategy.kind.id().into(),
        law: law.map_or("none".into(), |l| l.id()),
        n_paths: cfg.n_paths,
        h_ladder: if sup_err.is_some() { vec![cfg.h] } else { Vec::new() },
        sup_err: sup_err.into_iter().collect(),
        fitted_order: None,
        z_scores: Vec::new(),
        pass: true,
    };

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let csv_path = cfg.out_dir.join("trajectories.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    write_csv(std::io::BufWriter::new(file), &rows_of(&records))?;
    fs::write(cfg.out_dir.join("summary.json"), summary.to_json()?)?;
    fs::write(cfg.out_dir.join("config.txt"), cfg.render())?;
    println!(
        "simulated {} paths of {} on {} ({} steps each); wrote {}",
        cfg.n_paths,
        strategy.kind,
        cfg.space,
        grid.steps()?,
        cfg.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let suite: SuiteId = args.suite.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    init_threads(threads)?;
    let mut opts = SuiteOptions::default();
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    let outcomes = run_suite(suite, &opts)?;
    let mut pass = true;
    for o in &outcomes {
        println!("{}", o.table());
        pass &= o.pass();
    }
    if let Some(path) = &args.json {
        let reports: Vec<Summary> = outcomes
            .iter()
            .flat_map(|o| o.law_reports.iter().map(Summary::from))
            .collect();
        fs::write(path, serde_json::to_string_pretty(&reports)? + "\n")?;
    }
    println!("{}: {}", suite, if pass { "PASS" } else { "FAIL" });
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args, cli.threads),
        Command::Verify(args) => verify(args, cli.threads),
        Command::Table(args) => init_threads(cli.threads).and_then(|_| table::run(args)),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            let code = exit_code(&err);
            let kind = match code {
                3 => "runtime infeasibility",
                2 => "configuration error",
                _ => "error",
            };
            eprintln!("bmcouple: {kind}: {err:#}");
            ExitCode::from(code)
        }
    }
}
