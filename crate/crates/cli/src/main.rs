use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{info, warn};

use xflow::diagnostics::{beta_link, dissipation_balance, duality_residual, estimate_monitors, DEFAULT_RATIO_CAP};
use xflow::io::{self, emit_config, emit_plot_data, load_config, write_table_csv, ConfigError, ConfigFile};
use xflow::limits::{
    barenblatt_validation, incompressible_limit_study, vanishing_viscosity_study, Aborted, BarenblattSpec,
    LimitsError, StudySpec, Sweep, Tabular,
};
use xflow::solver::{run, SolverError, Stepper};

const EXIT_CONFIG: u8 = 2;
const EXIT_ABORT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "xflow", version, about = "Two-species cross-diffusion simulator")]
struct Cli {
    /// Directory under which run and study outputs are created.
    #[arg(long, env = "XFLOW_OUTPUT_ROOT", default_value = "runs", global = true)]
    output_root: PathBuf,
    /// Worker threads for sweeps and large grids (0: all cores).
    #[arg(long, env = "XFLOW_THREADS", default_value_t = 0, global = true)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs one simulation and writes a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; defaults to <output-root>/<config stem>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the balance, estimate monitors and duality checks of a run directory.
    Report {
        dir: PathBuf,
        /// Checkpoint to evaluate (default: last).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RATIO_CAP)]
        cap: f64,
    },
    /// Compares each viscosity against the inviscid run.
    ViscosityStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Sweeps the power-law exponent toward the saturated limit.
    IncompressibleStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        exponents: Vec<f64>,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Checks the solver against a closed-form solution.
    Validate {
        #[command(subcommand)]
        case: ValidateCase,
    },
    /// Prints a config in canonical form (a minimal template without --config).
    EmitConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct StudyArgs {
    /// Comparison time (default: the config's t_end).
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 50)]
    checkpoints: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ValidateCase {
    Barenblatt {
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [128usize, 256, 512])]
        grids: Vec<usize>,
        #[arg(long, default_value_t = 0.6)]
        t_end: f64,
        #[arg(long, default_value_t = 0.1)]
        t0: f64,
        #[arg(long, default_value_t = 8.0)]
        length: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const TEMPLATE: &str = r#"[grid]
dim = 1
cells = 256
length = 4.0

[energy]
family = "power"
m = 2.0

[time]
t_end = 0.5
snapshot_every = 0.05

[initial.rho1]
kind = "gaussian"
amplitude = 1.0
width = 0.3
"#;

struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn config(err: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            err: err.into(),
        }
    }

    fn io(err: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_IO,
            err: err.into(),
        }
    }

    fn abort(err: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_ABORT,
            err: err.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => Failure::io(e),
            _ => Failure::config(e),
        }
    }
}

impl From<LimitsError> for Failure {
    fn from(e: LimitsError) -> Self {
        match e {
            LimitsError::Solver(SolverError::NonFinite { .. } | SolverError::Saturated { .. }) => Failure::abort(e),
            _ => Failure::config(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            warn!("thread pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Run { config, out } => cmd_run(cli, config, out.as_deref()),
        Cmd::Report { dir, t, cap } => cmd_report(dir, *t, *cap),
        Cmd::ViscosityStudy { config, gammas, study } => {
            let mut sorted = gammas.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let (spec, out) = study_spec(cli, config, Sweep::Gamma(sorted), study, "viscosity")?;
            let table = vanishing_viscosity_study(&spec)?;
            println!("{:>12} {:>14} {:>14} {:>10}", "gamma", "distance", "|grad q|", "relative");
            for r in &table.rows {
                println!(
                    "{:>12.3e} {:>14.6e} {:>14.6e} {:>10.3e}",
                    r.gamma,
                    r.distance,
                    r.grad_q_norm,
                    r.distance / table.reference_norm
                );
            }
            finish_study(&table, &out, "viscosity", table.aborted.as_ref())
        }
        Cmd::IncompressibleStudy {
            config,
            exponents,
            study,
        } => {
            let (spec, out) = study_spec(cli, config, Sweep::Exponent(exponents.clone()), study, "incompressible")?;
            let table = incompressible_limit_study(&spec)?;
            println!(
                "{:>6} {:>12} {:>16} {:>12} {:>10}",
                "m", "overshoot", "complementarity", "cauchy", "max rho"
            );
            for r in &table.rows {
                println!(
                    "{:>6} {:>12.4e} {:>16.4e} {:>12.4e} {:>10.6}",
                    r.m, r.overshoot, r.complementarity, r.cauchy, r.max_rho
                );
            }
            finish_study(&table, &out, "incompressible", table.aborted.as_ref())
        }
        Cmd::Validate {
            case:
                ValidateCase::Barenblatt {
                    m,
                    grids,
                    t_end,
                    t0,
                    length,
                    out,
                },
        } => {
            let mut spec = BarenblattSpec::new(*m, grids.clone(), *t_end);
            spec.t0 = *t0;
            spec.length = *length;
            let table = barenblatt_validation(&spec)?;
            println!("{:>6} {:>14} {:>8} {:>10}", "N", "L1 error", "order", "steps");
            for r in &table.rows {
                println!("{:>6} {:>14.6e} {:>8.3} {:>10}", r.cells, r.l1_error, r.order, r.steps);
            }
            let out = out.clone().unwrap_or_else(|| cli.output_root.join("barenblatt"));
            finish_study(&table, &out, "barenblatt", table.aborted.as_ref())
        }
        Cmd::EmitConfig { config } => {
            let file: ConfigFile = match config {
                Some(p) => load_config(p)?.0,
                None => toml_template()?,
            };
            print!("{}", emit_config(&file));
            Ok(())
        }
    }
}

fn toml_template() -> Result<ConfigFile, Failure> {
    Ok(io::parse_config(TEMPLATE)?.0)
}

fn cmd_run(cli: &Cli, config: &Path, out: Option<&Path>) -> Outcome {
    let (file, sim) = load_config(config)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => cli.output_root.join(stem(config)),
    };
    let started = io::rundir::now_seconds();
    let traj = run(&sim).map_err(Failure::config)?;
    io::write_run(&dir, &file, &traj, started).map_err(Failure::io)?;
    info!("{} steps, {} snapshots in {}", traj.steps, traj.snapshots.len(), dir.display());
    if let Some(e) = &traj.abort {
        return Err(Failure::abort(anyhow::anyhow!("run aborted at t = {}: {e}", traj.last().t)));
    }
    Ok(())
}

fn cmd_report(dir: &Path, t: Option<f64>, cap: f64) -> Outcome {
    let loaded = io::read_run(dir).map_err(|e| match e {
        io::RunDirError::Config(c) => Failure::from(c),
        other => Failure::io(other),
    })?;
    let sim = &loaded.sim;
    let t_eval = t.unwrap_or_else(|| loaded.ledger.final_time().unwrap_or(0.0));
    let balance = dissipation_balance(&loaded.ledger, t_eval, sim).map_err(Failure::config)?;
    println!(
        "balance at t = {}: B = {:.6e}, B/scale = {:.6e}, tol = {:.4e} ({}) {}",
        balance.t,
        balance.balance,
        balance.relative,
        balance.tol,
        if balance.one_sided { "one-sided" } else { "two-sided" },
        balance.verdict
    );
    for m in estimate_monitors(&loaded.ledger, sim, Some(t_eval), cap).map_err(Failure::config)? {
        println!(
            "{:<28} t = {:<10} lhs = {:<14.6e} rhs = {:<14.6e} ratio = {:<12.6e} {}",
            m.name, m.t, m.lhs, m.rhs, m.ratio, m.verdict
        );
    }
    let k = loaded
        .manifest
        .snapshots
        .iter()
        .rposition(|s| s.t <= t_eval)
        .unwrap_or(0);
    let snap = loaded.snapshot(dir, k).map_err(Failure::io)?;
    let state = snap.state();
    let residual = duality_residual(&state, sim).map_err(Failure::abort)?;
    let derived = Stepper::new(sim)
        .and_then(|s| s.derived_fields(&state))
        .map_err(Failure::abort)?;
    let link = beta_link(&sim.energy, &derived.q);
    println!("duality residual at t = {}: {residual:.3e}", snap.t);
    println!(
        "beta link: beta = {:.6}, sup truncation = {:.6e}, worst margin = {:.3e} {}",
        link.beta, link.truncation_sup, link.worst_margin, link.verdict
    );
    if let Some(a) = &loaded.manifest.abort {
        println!("run aborted: {a}");
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn study_spec(
    cli: &Cli,
    config: &Path,
    sweep: Sweep,
    args: &StudyArgs,
    kind: &str,
) -> Result<(StudySpec, PathBuf), Failure> {
    let (file, sim) = load_config(config)?;
    let t = args.t.unwrap_or(sim.t_end);
    let mut spec = StudySpec::new(sim, sweep, t);
    spec.initial = Some(file.initial);
    spec.checkpoints = args.checkpoints;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cli.output_root.join(format!("{}-{kind}", stem(config))));
    Ok((spec, out))
}

fn finish_study(table: &dyn Tabular, out: &Path, name: &str, aborted: Option<&Aborted>) -> Outcome {
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(Failure::io)?;
    let csv_path = out.join(format!("{name}.csv"));
    let file = std::fs::File::create(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))
        .map_err(Failure::io)?;
    write_table_csv(table, file).map_err(Failure::io)?;
    let dat = out.join(format!("{name}.dat"));
    emit_plot_data(table, &dat)
        .with_context(|| format!("writing {}", dat.display()))
        .map_err(Failure::io)?;
    info!("wrote {} and {}", csv_path.display(), dat.display());
    match aborted {
        Some(a) => Err(Failure::abort(anyhow::anyhow!("member {} aborted: {}", a.member, a.error))),
        None => Ok(()),
    }
}
