//! `pentao`: generate Ising instances, run Penta-O, sweep benchmark families
//! and evaluate the time-to-solution model.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pentao::metrics::ConvergenceRule;
use pentao::Scaling;

use config::{usage, CliError, DistKind, FamilyKind, JobConfig, ModeKind};

#[derive(Parser)]
#[command(name = "pentao", version, about = "Level-wise QAOA parameter setting on Ising problems")]
struct Cli {
    /// JSON or TOML job file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all hardware threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write instance JSON files, one per replica.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Run Penta-O on one instance file (.json, .g6 or edge list).
    Run {
        instance: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run Penta-O on every replica of a family and aggregate per level.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Tabulate quantum and classical time-to-solution over a size range.
    Tts {
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        n_step: Option<usize>,
        /// quadratic, linear or log (default: all three).
        #[arg(long)]
        scaling: Option<String>,
    },
}

#[derive(Args)]
struct FamilyArgs {
    /// u3r, wdr, sk, grid or graph6.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Degree of wdr graphs.
    #[arg(long)]
    d: Option<usize>,
    /// Weight law for wdr: unit, poisson, normal or pm1.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    std_dev: Option<f64>,
    /// SK field values: a comma list or start:stop:step.
    #[arg(long)]
    h0: Option<String>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// graph6 file for the graph6 family.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Keep raw weights instead of dividing by the largest magnitude.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    p_max: Option<usize>,
    /// exact or shots.
    #[arg(long)]
    mode: Option<String>,
    /// Shots per probe in shots mode.
    #[arg(long = "M")]
    shots: Option<usize>,
    /// Stop once a level improves by less than the convergence threshold.
    #[arg(long)]
    stop_on_convergence: bool,
    #[arg(long)]
    epsilon_conv: Option<f64>,
    /// ratio_gain or relative_energy_gap (default: by instance type).
    #[arg(long)]
    convergence_rule: Option<String>,
    /// Sample the final state with this many shots.
    #[arg(long)]
    final_shots: Option<usize>,
    #[arg(long)]
    low_energy_threshold: Option<f64>,
}

fn parse_h0(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || usage(format!("cannot parse --h0 '{s}'"));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(usage(format!("empty --h0 range '{s}'")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // round away accumulated drift so 0:1:0.1 yields 0.3, not 0.30000000000000004
        Ok((0..count)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
    }
}

fn apply_family(job: &mut JobConfig, a: FamilyArgs) -> Result<(), CliError> {
    let f = &mut job.family;
    if let Some(k) = a.family {
        f.kind = Some(FamilyKind::parse(&k)?);
    }
    if let Some(d) = a.dist {
        f.dist = DistKind::parse(&d)?;
    }
    if let Some(h) = a.h0 {
        f.h0 = parse_h0(&h)?;
    }
    f.n = a.n.or(f.n);
    f.d = a.d.unwrap_or(f.d);
    f.lambda = a.lambda.unwrap_or(f.lambda);
    f.mean = a.mean.unwrap_or(f.mean);
    f.std_dev = a.std_dev.unwrap_or(f.std_dev);
    f.rows = a.rows.or(f.rows);
    f.cols = a.cols.or(f.cols);
    f.file = a.file.or(f.file.take());
    if a.no_normalize {
        f.normalize = false;
    }
    job.replicas = a.replicas.unwrap_or(job.replicas);
    Ok(())
}

fn apply_solver(job: &mut JobConfig, a: SolverArgs) -> Result<(), CliError> {
    let s = &mut job.solver;
    s.gamma0 = a.gamma0.unwrap_or(s.gamma0);
    s.p_max = a.p_max.unwrap_or(s.p_max);
    if let Some(m) = a.mode {
        s.mode = match m.as_str() {
            "exact" => ModeKind::Exact,
            "shots" => ModeKind::Shots,
            other => return Err(usage(format!("unknown mode '{other}' (exact or shots)"))),
        };
    }
    s.shots = a.shots.unwrap_or(s.shots);
    s.stop_on_convergence |= a.stop_on_convergence;
    s.epsilon_conv = a.epsilon_conv.unwrap_or(s.epsilon_conv);
    if let Some(r) = a.convergence_rule {
        s.convergence_rule = Some(match r.as_str() {
            "ratio_gain" => ConvergenceRule::RatioGain,
            "relative_energy_gap" => ConvergenceRule::RelativeEnergyGap,
            other => return Err(usage(format!("unknown convergence rule '{other}'"))),
        });
    }
    s.final_shots = a.final_shots.or(s.final_shots);
    s.low_energy_threshold = a.low_energy_threshold.unwrap_or(s.low_energy_threshold);
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut job = match &cli.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };
    job.seed = cli.seed.unwrap_or(job.seed);
    job.out = cli.out.unwrap_or(job.out);
    job.threads = cli.threads.or(job.threads);
    if let Some(t) = job.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(config::runtime)?;
    }

    match cli.command {
        Command::Gen { family } => {
            apply_family(&mut job, family)?;
            commands::cmd_gen(&job)
        }
        Command::Run { instance, solver } => {
            job.instance = instance.or(job.instance);
            apply_solver(&mut job, solver)?;
            commands::cmd_run(&job)
        }
        Command::Sweep { family, solver } => {
            apply_family(&mut job, family)?;
            apply_solver(&mut job, solver)?;
            commands::cmd_sweep(&job)
        }
        Command::Tts {
            n_min,
            n_max,
            n_step,
            scaling,
        } => {
            let t = &mut job.tts;
            t.n_min = n_min.unwrap_or(t.n_min);
            t.n_max = n_max.unwrap_or(t.n_max);
            t.n_step = n_step.unwrap_or(t.n_step);
            if let Some(s) = scaling {
                t.scaling = Some(match s.as_str() {
                    "quadratic" => Scaling::Quadratic,
                    "linear" => Scaling::Linear,
                    "log" => Scaling::Log,
                    other => return Err(usage(format!("unknown scaling '{other}'"))),
                });
            }
            commands::cmd_tts(&job)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
