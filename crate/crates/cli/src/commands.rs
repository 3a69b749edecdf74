use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pentao::metrics::BoxStats;
use pentao::{
    crossover, p_scaling, parse_edge_list, parse_graph6_lines, penta_o_run, tts_classical,
    tts_quantum, Hamiltonian, Instance, RunReport, Scaling, TtsParams,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{generate, runtime, usage, CliError, JobConfig};

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const CSV_FORMAT_VERSION: &str = "pentao-csv/1";
pub const INSTANCE_FORMAT_VERSION: &str = "pentao-instance/1";

/// Instance JSON as written by `gen`.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format_version: String,
    config: serde_json::Value,
    group: String,
    replica: usize,
    seed: u64,
    instance: Instance,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| runtime(format!("writing {}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_csv_header(w: &mut impl Write, kind: &str, job: &JobConfig) -> std::io::Result<()> {
    writeln!(w, "# format: {CSV_FORMAT_VERSION} {kind}")?;
    writeln!(w, "# config: {}", job.to_header())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_gen(job: &JobConfig) -> Result<(), CliError> {
    let replicas = generate(job)?;
    ensure_dir(&job.out)?;
    let config = job.to_json();
    let mut failed = 0;
    for r in replicas {
        let instance = match r.instance {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{} replica {}: {e}", r.group, r.index);
                failed += 1;
                continue;
            }
        };
        let name = format!("{}-{:03}.json", sanitize(&r.group), r.index);
        let path = job.out.join(name);
        let file = InstanceFile {
            format_version: INSTANCE_FORMAT_VERSION.into(),
            config: config.clone(),
            group: r.group,
            replica: r.index,
            seed: r.seed,
            instance,
        };
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &file).map_err(runtime)?;
        writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        say!("{}", path.display());
    }
    if failed > 0 {
        return Err(runtime(format!("{failed} replica(s) could not be generated")));
    }
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

/// Instance JSON (raw or as written by `gen`), graph6 (one graph) or an
/// edge list, chosen by extension.
pub fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read instance {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let fail = |e: String| runtime(format!("{}: {e}", path.display()));
    match ext {
        "json" => {
            if let Ok(f) = serde_json::from_str::<InstanceFile>(&text) {
                return Ok(f.instance);
            }
            serde_json::from_str::<Instance>(&text).map_err(|e| fail(e.to_string()))
        }
        "g6" | "graph6" => {
            let mut graphs = parse_graph6_lines(&text).map_err(|e| fail(e.to_string()))?;
            if graphs.len() != 1 {
                return Err(usage(format!(
                    "{} holds {} graphs; run takes one (use sweep --family graph6 for several)",
                    path.display(),
                    graphs.len()
                )));
            }
            Ok(graphs.remove(0).to_unit_instance(stem))
        }
        _ => parse_edge_list(&text)
            .map(|i| i.with_label(stem))
            .map_err(|e| fail(e.to_string())),
    }
}

pub fn cmd_run(job: &JobConfig) -> Result<(), CliError> {
    let path = job
        .instance
        .as_ref()
        .ok_or_else(|| usage("run needs an instance file"))?;
    let instance = read_instance(path)?;
    let cfg = job.solver.to_pentao(job.seed)?;
    let h = Hamiltonian::new(instance).map_err(runtime)?;
    let (_, mut report) = penta_o_run(&h, &cfg).map_err(runtime)?;
    report.config = Some(job.to_json());

    ensure_dir(&job.out)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let json_path = job.out.join(format!("{stem}.report.json"));
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(runtime)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(&json_path))?;

    let csv_path = job.out.join(format!("{stem}.levels.csv"));
    let mut w = create(&csv_path)?;
    write_csv_header(&mut w, "levels", job)
        .and_then(|_| report.write_levels_csv(&mut w, &TtsParams::new(Scaling::Log)))
        .and_then(|_| w.flush())
        .map_err(io_err(&csv_path))?;

    let last = report.j_trajectory.last().copied().unwrap_or(report.j_initial);
    say!(
        "{}: p = {}, J = {last}, trials = {}{}",
        report.label,
        report.depth(),
        report.trials,
        report
            .r_trajectory
            .as_ref()
            .and_then(|r| r.last())
            .map(|r| format!(", r = {r}"))
            .unwrap_or_default()
    );
    say!("{}", json_path.display());
    say!("{}", csv_path.display());
    Ok(())
}

struct ReplicaResult {
    group: String,
    index: usize,
    seed: u64,
    outcome: Result<RunReport, String>,
}

/// Per-level series of one quantity, as `(name, values)`.
fn series(report: &RunReport) -> Vec<(&'static str, Option<&Vec<f64>>)> {
    vec![
        ("r", report.r_trajectory.as_ref()),
        ("normalized_energy", report.normalized_energy_trajectory.as_ref()),
        ("low_energy_probability", report.low_energy_trajectory.as_ref()),
    ]
}

/// Values at convergence (or at the last level when no rule applies).
fn converged_values(report: &RunReport) -> Vec<(&'static str, f64)> {
    let level = report
        .convergence
        .as_ref()
        .map(|c| c.level)
        .unwrap_or(report.depth());
    let at = |v: Option<&Vec<f64>>| v.map(|v| v[level - 1]);
    let mut out = vec![("p_c", level as f64)];
    if let Some(r) = at(report.r_trajectory.as_ref()) {
        out.push(("r_c", r));
    }
    if let Some(ne) = at(report.normalized_energy_trajectory.as_ref()) {
        out.push(("normalized_energy_c", ne));
    }
    if let Some(p) = at(report.low_energy_trajectory.as_ref()) {
        out.push(("low_energy_probability_c", p));
    }
    out
}

const STATS_COLUMNS: &str = "count,mean,min,q1,median,q3,max,whisker_lo,whisker_hi";

fn stats_row(s: &BoxStats) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        s.count, s.mean, s.min, s.q1, s.median, s.q3, s.max, s.whisker_lo, s.whisker_hi
    )
}

pub fn cmd_sweep(job: &JobConfig) -> Result<(), CliError> {
    let replicas = generate(job)?;
    let solver = job.solver.to_pentao(job.seed)?;
    let results: Vec<ReplicaResult> = replicas
        .into_par_iter()
        .map(|r| {
            let cfg = pentao::PentaOConfig {
                seed: r.seed,
                ..solver.clone()
            };
            let outcome = r.instance.and_then(|inst| {
                let h = Hamiltonian::new(inst).map_err(|e| e.to_string())?;
                penta_o_run(&h, &cfg).map(|x| x.1).map_err(|e| e.to_string())
            });
            ReplicaResult {
                group: r.group,
                index: r.index,
                seed: r.seed,
                outcome,
            }
        })
        .collect();

    ensure_dir(&job.out)?;
    let mut groups: Vec<String> = Vec::new();
    for r in &results {
        if !groups.contains(&r.group) {
            groups.push(r.group.clone());
        }
    }

    let path = job.out.join("replicas.csv");
    let mut w = create(&path)?;
    let write_replicas = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        write_csv_header(w, "replicas", job)?;
        writeln!(w, "group,replica,seed,status,depth,convergence_level,convergence_met,trials,message")?;
        for r in &results {
            match &r.outcome {
                Ok(rep) => {
                    let (lvl, met) = rep
                        .convergence
                        .as_ref()
                        .map(|c| (c.level.to_string(), c.met.to_string()))
                        .unwrap_or_default();
                    writeln!(
                        w,
                        "{},{},{},ok,{},{lvl},{met},{},",
                        r.group,
                        r.index,
                        r.seed,
                        rep.depth(),
                        rep.trials
                    )?;
                }
                Err(e) => writeln!(
                    w,
                    "{},{},{},failed,,,,,\"{}\"",
                    r.group,
                    r.index,
                    r.seed,
                    e.replace('"', "'")
                )?,
            }
        }
        w.flush()
    };
    write_replicas(&mut w).map_err(io_err(&path))?;

    let path = job.out.join("trajectories.csv");
    let mut w = create(&path)?;
    let write_traj = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        write_csv_header(w, "trajectories", job)?;
        writeln!(w, "group,replica,level,gamma,theta,J,r,normalized_energy,low_energy_probability")?;
        for r in &results {
            let Ok(rep) = &r.outcome else { continue };
            for l in 0..rep.depth() {
                let pick = |v: Option<&Vec<f64>>| opt(v.map(|v| v[l]));
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    r.group,
                    r.index,
                    l + 1,
                    rep.schedule[l].0,
                    rep.schedule[l].1,
                    rep.j_trajectory[l],
                    pick(rep.r_trajectory.as_ref()),
                    pick(rep.normalized_energy_trajectory.as_ref()),
                    pick(rep.low_energy_trajectory.as_ref()),
                )?;
            }
        }
        w.flush()
    };
    write_traj(&mut w).map_err(io_err(&path))?;

    // replicas that stopped early carry their last value forward
    let path = job.out.join("levels.csv");
    let mut w = create(&path)?;
    let write_levels = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        write_csv_header(w, "levels", job)?;
        writeln!(w, "group,level,metric,{STATS_COLUMNS}")?;
        for g in &groups {
            let reps: Vec<&RunReport> = results
                .iter()
                .filter(|r| &r.group == g)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let depth = reps.iter().map(|r| r.depth()).max().unwrap_or(0);
            for l in 0..depth {
                let mut per_metric: BTreeMap<usize, (&str, Vec<f64>)> = BTreeMap::new();
                for rep in &reps {
                    for (k, (name, v)) in series(rep).into_iter().enumerate() {
                        if let Some(v) = v {
                            let x = v[l.min(v.len() - 1)];
                            per_metric.entry(k).or_insert((name, Vec::new())).1.push(x);
                        }
                    }
                }
                for (name, values) in per_metric.values() {
                    if let Some(s) = BoxStats::from_values(values) {
                        writeln!(w, "{g},{},{name},{}", l + 1, stats_row(&s))?;
                    }
                }
            }
        }
        w.flush()
    };
    write_levels(&mut w).map_err(io_err(&path))?;

    let path = job.out.join("summary.csv");
    let mut w = create(&path)?;
    let write_summary = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        write_csv_header(w, "summary", job)?;
        writeln!(w, "group,quantity,{STATS_COLUMNS}")?;
        for g in &groups {
            let mut per_q: Vec<(&str, Vec<f64>)> = Vec::new();
            for rep in results
                .iter()
                .filter(|r| &r.group == g)
                .filter_map(|r| r.outcome.as_ref().ok())
            {
                for (name, x) in converged_values(rep) {
                    match per_q.iter_mut().find(|(n, _)| *n == name) {
                        Some((_, v)) => v.push(x),
                        None => per_q.push((name, vec![x])),
                    }
                }
            }
            for (name, values) in &per_q {
                if let Some(s) = BoxStats::from_values(values) {
                    writeln!(w, "{g},{name},{}", stats_row(&s))?;
                }
            }
        }
        w.flush()
    };
    write_summary(&mut w).map_err(io_err(&path))?;

    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    say!(
        "{} replicas in {} group(s), {failed} failed; wrote {}",
        results.len(),
        groups.len(),
        job.out.display()
    );
    if failed > 0 {
        return Err(runtime(format!("{failed} replica(s) failed; see replicas.csv")));
    }
    Ok(())
}

pub fn cmd_tts(job: &JobConfig) -> Result<(), CliError> {
    let t = &job.tts;
    if t.n_step == 0 || t.n_min == 0 || t.n_min > t.n_max {
        return Err(usage(format!(
            "empty size range: n_min = {}, n_max = {}, n_step = {}",
            t.n_min, t.n_max, t.n_step
        )));
    }
    let sizes: Vec<usize> = (t.n_min..=t.n_max).step_by(t.n_step).collect();
    let laws: Vec<Scaling> = match t.scaling {
        Some(s) => vec![s],
        None => Scaling::ALL.to_vec(),
    };
    ensure_dir(&job.out)?;
    let path: PathBuf = job.out.join("tts.csv");
    let mut w = create(&path)?;
    let mut summary = Vec::new();
    for &law in &laws {
        let params = TtsParams::new(law);
        let cross = crossover(&params, t.n_min..=t.n_max).map_err(runtime)?;
        summary.push(match cross {
            Some(n) => {
                let p = p_scaling(n, &params).map_err(runtime)?;
                let tq = tts_quantum(p, n, &params).map_err(runtime)?;
                format!("{} N={n} p={p} T_q={tq:e}", law.name())
            }
            None => format!("{} none", law.name()),
        });
    }
    let mut body = || -> std::io::Result<()> {
        write_csv_header(&mut w, "tts", job)?;
        writeln!(w, "N,scaling,alpha,p,T_q,T_c")?;
        for &n in &sizes {
            let tc = tts_classical(n).map_err(std::io::Error::other)?;
            for &law in &laws {
                let params = TtsParams::new(law);
                let p = p_scaling(n, &params).map_err(std::io::Error::other)?;
                let tq = tts_quantum(p, n, &params).map_err(std::io::Error::other)?;
                writeln!(w, "{n},{},{},{p},{tq},{tc}", law.name(), params.alpha)?;
            }
        }
        writeln!(w, "# crossover: {}", summary.join("; "))?;
        w.flush()
    };
    body().map_err(io_err(&path))?;
    say!("crossover: {}", summary.join("; "));
    say!("{}", path.display());
    Ok(())
}
