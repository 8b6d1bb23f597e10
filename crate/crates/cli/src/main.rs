//! `gqg`: single runs, ε-sweeps, the linear and well-prepared checks, and
//! snapshot tools for the channel solver. A JSON config (or the built-in
//! defaults) is read first; flags override its keys.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gpvqg::harness::{
    decompose, inspect, run_eps_sweep, run_linear_validation, run_simulation, run_wellprepared_comparison, EpsSpec,
    Formulation, OutputConfig, RunConfig,
};
use gpvqg::init::{InitialData, P0Term, Trig};
use gpvqg::integrate::{IntegratorConfig, TimeStep};
use gpvqg::{ChannelGrid, Error, Result};

#[derive(Parser)]
#[command(
    name = "gqg",
    version,
    about = "Rotating Boussinesq channel solver: GPV, primitive and fast-rotation limit runs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance one formulation to t_end, writing diagnostics and snapshots.
    Simulate(RunArgs),
    /// ε-system runs for every ε against one limit run.
    Sweep(RunArgs),
    /// Linear run against the closed-form solution.
    LinearCheck(RunArgs),
    /// Balanced data: ε-system against classical QG.
    QgCompare(RunArgs),
    /// Split a snapshot into GPV and fast-filtered fields.
    Decompose {
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a snapshot header without loading the arrays.
    Inspect { snapshot: PathBuf },
}

#[derive(Args, Clone, Debug, Default)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One ε or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// NX,NY,NZ (NZ is the Chebyshev degree; NZ + 1 vertical nodes).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Fixed step, or `auto` for the stability rule.
    #[arg(long, value_parser = parse_dt)]
    dt: Option<TimeStep>,
    #[arg(long, value_parser = parse_formulation)]
    formulation: Option<Formulation>,
    #[arg(long)]
    disable_nonlinear: bool,
    /// Concurrent sweep members.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of random initial data.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn parse_grid(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad grid entry {p:?}: {e}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    <[usize; 3]>::try_from(v).map_err(|v| format!("expected NX,NY,NZ, got {} values", v.len()))
}

fn parse_dt(s: &str) -> std::result::Result<TimeStep, String> {
    if s == "auto" {
        return Ok(TimeStep::Auto);
    }
    s.parse::<f64>()
        .map(TimeStep::Fixed)
        .map_err(|e| format!("dt must be a number or `auto`: {e}"))
}

fn parse_formulation(s: &str) -> std::result::Result<Formulation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Copy, PartialEq)]
enum Driver {
    Simulate,
    Sweep,
    Linear,
    Qg,
}

/// Built-in configuration used when `--config` is absent.
fn default_config(driver: Driver) -> RunConfig {
    let random = InitialData::RandomSeeded {
        seed: 0,
        bandwidth: 3,
        amplitude: 0.2,
        vertical_modes: 3,
    };
    let (eps, initial_data) = match driver {
        Driver::Simulate | Driver::Linear => (EpsSpec::One(0.1), random),
        Driver::Sweep => (EpsSpec::Many(vec![0.2, 0.1, 0.05, 0.025]), random),
        Driver::Qg => (
            EpsSpec::Many(vec![0.2, 0.1, 0.05]),
            InitialData::Balanced {
                p0: vec![P0Term {
                    amplitude: 0.02,
                    kx: 1,
                    ky: 1,
                    m: 1,
                    x: Trig::Sin,
                    y: Trig::Sin,
                    z: Trig::Sin,
                }],
            },
        ),
    };
    RunConfig {
        grid: ChannelGrid::new(32, 32, 32, 1.0).expect("valid default grid"),
        eps,
        t_end: 0.5,
        integrator: IntegratorConfig::default(),
        initial_data,
        formulation: Formulation::Gpv,
        outputs: OutputConfig::default(),
        samples: 10,
    }
}

fn resolve(args: &RunArgs, driver: Driver) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => default_config(driver),
    };
    if let Some(eps) = &args.eps {
        cfg.eps = match eps.as_slice() {
            [e] => EpsSpec::One(*e),
            v => EpsSpec::Many(v.to_vec()),
        };
    }
    if let Some([nx, ny, nz]) = args.grid {
        cfg.grid = ChannelGrid { nx, ny, nz, ..cfg.grid };
    }
    if let Some(t) = args.t_end {
        cfg.t_end = t;
        cfg.integrator.t_end = None;
    }
    if let Some(dt) = args.dt {
        cfg.integrator.dt = dt;
    }
    if let Some(f) = args.formulation {
        cfg.formulation = f;
    }
    if args.disable_nonlinear {
        cfg.integrator.nonlinear = false;
    }
    if let Some(out) = &args.out {
        cfg.outputs.out_dir = Some(out.clone());
    }
    if let Some(s) = args.seed {
        match &mut cfg.initial_data {
            InitialData::RandomSeeded { seed, .. } => *seed = s,
            _ => {
                return Err(Error::Config(
                    "--seed applies to random_seeded initial data only".into(),
                ))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run_driver(args: &RunArgs, driver: Driver) -> Result<()> {
    let cfg = resolve(args, driver)?;
    if args.print_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(());
    }
    let jobs = args.jobs.max(1);
    match driver {
        Driver::Simulate => print_json(&run_simulation(&cfg)?.summary),
        Driver::Sweep => {
            let r = run_eps_sweep(&cfg, jobs)?;
            print!("{}", r.to_csv());
            Ok(())
        }
        Driver::Linear => print_json(&run_linear_validation(&cfg)?),
        Driver::Qg => {
            let r = run_wellprepared_comparison(&cfg, jobs)?;
            print!("{}", r.sweep.to_csv());
            log::info!(
                "Φ order {:?}, fast error max {:.3e}, max|Φ_p| drift {:.3e}",
                r.phi_order,
                r.fast_error_max,
                r.limit_phi_max_drift
            );
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Simulate(a) => run_driver(&a, Driver::Simulate),
        Command::Sweep(a) => run_driver(&a, Driver::Sweep),
        Command::LinearCheck(a) => run_driver(&a, Driver::Linear),
        Command::QgCompare(a) => run_driver(&a, Driver::Qg),
        Command::Decompose { snapshot, out } => {
            let out = out
                .or_else(|| std::env::var_os(gpvqg::harness::OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            print_json(&decompose(snapshot, out)?)
        }
        Command::Inspect { snapshot } => print_json(&inspect(snapshot)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gqg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
