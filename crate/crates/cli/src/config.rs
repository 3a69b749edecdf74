//! Job configuration: file values, overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use pentao::metrics::{ConvergenceRule, DEFAULT_EPSILON_CONV, DEFAULT_LOW_ENERGY_THRESHOLD};
use pentao::{
    assign_weights, derive_seed, gen_regular, gen_sk, grid_graph, parse_graph6_lines, EvalMode,
    Instance, PentaOConfig, Scaling, Seed, WeightDistribution,
};
use serde::{Deserialize, Serialize};

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad parameters or missing inputs (exit 2).
    Usage(String),
    /// Anything that goes wrong while computing (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Library input errors raised while building jobs are the caller's fault.
pub fn classify(e: pentao::Error) -> CliError {
    match e {
        pentao::Error::Input(m) => CliError::Usage(m),
        other => CliError::Runtime(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    U3r,
    Wdr,
    Sk,
    Grid,
    Graph6,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "u3r" => FamilyKind::U3r,
            "wdr" => FamilyKind::Wdr,
            "sk" => FamilyKind::Sk,
            "grid" => FamilyKind::Grid,
            "graph6" => FamilyKind::Graph6,
            other => {
                return Err(usage(format!(
                    "unknown family '{other}' (expected u3r, wdr, sk, grid or graph6)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    Unit,
    Poisson,
    Normal,
    Pm1,
}

impl DistKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "unit" => DistKind::Unit,
            "poisson" => DistKind::Poisson,
            "normal" => DistKind::Normal,
            "pm1" => DistKind::Pm1,
            other => {
                return Err(usage(format!(
                    "unknown weight distribution '{other}' (expected unit, poisson, normal or pm1)"
                )))
            }
        })
    }
}

/// Instance family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: Option<FamilyKind>,
    pub n: Option<usize>,
    /// Degree for `wdr` (3 for `u3r`).
    pub d: usize,
    pub dist: DistKind,
    pub lambda: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// Field values for `sk`; one replica group per value.
    pub h0: Vec<f64>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub file: Option<PathBuf>,
    /// Divide weights by the largest coupling magnitude.
    pub normalize: bool,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            kind: None,
            n: None,
            d: 3,
            dist: DistKind::Poisson,
            lambda: 1.0,
            mean: 0.0,
            std_dev: 1.0,
            h0: vec![0.0],
            rows: None,
            cols: None,
            file: None,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Exact,
    Shots,
}

/// Penta-O settings as they appear in files and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub gamma0: f64,
    pub gammas: Vec<f64>,
    pub p_max: usize,
    pub mode: ModeKind,
    /// Shots per probe in shots mode.
    #[serde(rename = "M")]
    pub shots: usize,
    pub stop_on_convergence: bool,
    pub epsilon_conv: f64,
    pub convergence_rule: Option<ConvergenceRule>,
    pub final_shots: Option<usize>,
    pub low_energy_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma0: 0.2,
            gammas: Vec::new(),
            p_max: 10,
            mode: ModeKind::Exact,
            shots: 3000,
            stop_on_convergence: false,
            epsilon_conv: DEFAULT_EPSILON_CONV,
            convergence_rule: None,
            final_shots: None,
            low_energy_threshold: DEFAULT_LOW_ENERGY_THRESHOLD,
        }
    }
}

impl SolverConfig {
    pub fn to_pentao(&self, seed: Seed) -> Result<PentaOConfig, CliError> {
        let cfg = PentaOConfig {
            gamma0: self.gamma0,
            gammas: self.gammas.clone(),
            p_max: self.p_max,
            mode: match self.mode {
                ModeKind::Exact => EvalMode::Exact,
                ModeKind::Shots => EvalMode::Shots { shots: self.shots },
            },
            stop_on_convergence: self.stop_on_convergence,
            epsilon_conv: self.epsilon_conv,
            seed,
            final_shots: self.final_shots,
            low_energy_threshold: self.low_energy_threshold,
            convergence_rule: self.convergence_rule,
        };
        cfg.validate().map_err(classify)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtsConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
    /// Restrict to one scaling law; all three when absent.
    pub scaling: Option<Scaling>,
}

impl Default for TtsConfig {
    fn default() -> Self {
        TtsConfig {
            n_min: 100,
            n_max: 1000,
            n_step: 50,
            scaling: None,
        }
    }
}

/// Everything a subcommand needs, after merging file and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub seed: Seed,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub replicas: usize,
    /// Instance file for `run`.
    pub instance: Option<PathBuf>,
    pub family: FamilyConfig,
    pub solver: SolverConfig,
    pub tts: TtsConfig,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            seed: 0,
            out: PathBuf::from("."),
            threads: None,
            replicas: 1,
            instance: None,
            family: FamilyConfig::default(),
            solver: SolverConfig::default(),
            tts: TtsConfig::default(),
        }
    }
}

impl JobConfig {
    /// Load a JSON or TOML file, picked by extension (`.toml` or anything else).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Single-line JSON, for CSV comment headers.
    pub fn to_header(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// One generated instance, with the group it belongs to.
pub struct Replica {
    pub group: String,
    pub index: usize,
    pub seed: Seed,
    pub instance: Result<Instance, String>,
}

/// Instances for every replica of every group, in a fixed order.
pub fn generate(job: &JobConfig) -> Result<Vec<Replica>, CliError> {
    let fam = &job.family;
    let kind = fam
        .kind
        .ok_or_else(|| usage("no family given (use --family or a config file)"))?;
    if job.replicas == 0 && kind != FamilyKind::Graph6 {
        return Err(usage("replica count must be at least 1"));
    }
    let need_n = || fam.n.ok_or_else(|| usage("this family needs --n"));
    let finish = |inst: Instance| -> Result<Instance, String> {
        if fam.normalize && kind != FamilyKind::Grid && kind != FamilyKind::U3r {
            inst.normalize().map_err(|e| e.to_string())
        } else {
            Ok(inst)
        }
    };

    let mut out = Vec::new();
    match kind {
        FamilyKind::Grid => {
            let (rows, cols) = fam
                .rows
                .zip(fam.cols)
                .ok_or_else(|| usage("grid needs --rows and --cols"))?;
            let g = grid_graph(rows, cols).map_err(classify)?;
            let tag = format!("grid{rows}x{cols}");
            out.push(Replica {
                group: tag.clone(),
                index: 0,
                seed: job.seed,
                instance: Ok(g.to_unit_instance(tag)),
            });
        }
        FamilyKind::U3r | FamilyKind::Wdr => {
            let n = need_n()?;
            let d = if kind == FamilyKind::U3r { 3 } else { fam.d };
            let dist = match (kind, fam.dist) {
                (FamilyKind::U3r, _) | (_, DistKind::Unit) => WeightDistribution::Unit,
                (_, DistKind::Poisson) => WeightDistribution::Poisson { lambda: fam.lambda },
                (_, DistKind::Normal) => WeightDistribution::Normal {
                    mean: fam.mean,
                    std_dev: fam.std_dev,
                },
                (_, DistKind::Pm1) => WeightDistribution::PlusMinusOne,
            };
            dist.validate().map_err(classify)?;
            // surface infeasible (n, d) as a usage error before fanning out
            gen_regular(n, d, job.seed).map_err(classify)?;
            let group = match kind {
                FamilyKind::U3r => format!("u3r-n{n}"),
                _ => format!("w{d}r-n{n}-{}", dist.short_name().replace(',', ";")),
            };
            for k in 0..job.replicas {
                let seed = derive_seed(job.seed, k as u64);
                let instance = gen_regular(n, d, seed)
                    .and_then(|g| assign_weights(&g, dist, derive_seed(seed, 1)))
                    .map_err(|e| e.to_string())
                    .and_then(|i| {
                        let i = i.with_label(format!("{group}/replica={k}/seed={seed}"));
                        finish(i)
                    });
                out.push(Replica {
                    group: group.clone(),
                    index: k,
                    seed,
                    instance,
                });
            }
        }
        FamilyKind::Sk => {
            let n = need_n()?;
            if fam.h0.is_empty() {
                return Err(usage("sk needs at least one --h0 value"));
            }
            for (gi, &h0) in fam.h0.iter().enumerate() {
                gen_sk(n, h0, job.seed).map_err(classify)?;
                let group = format!("sk-n{n}-h0={h0}");
                let base = derive_seed(job.seed, gi as u64);
                for k in 0..job.replicas {
                    let seed = derive_seed(base, k as u64);
                    out.push(Replica {
                        group: group.clone(),
                        index: k,
                        seed,
                        instance: gen_sk(n, h0, seed).map_err(|e| e.to_string()),
                    });
                }
            }
        }
        FamilyKind::Graph6 => {
            let path = fam
                .file
                .as_ref()
                .ok_or_else(|| usage("graph6 family needs --file"))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let graphs = parse_graph6_lines(&text).map_err(runtime)?;
            if graphs.is_empty() {
                return Err(usage(format!("{} holds no graphs", path.display())));
            }
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "graph6".into());
            for (k, g) in graphs.iter().enumerate() {
                out.push(Replica {
                    group: stem.clone(),
                    index: k,
                    seed: job.seed,
                    instance: Ok(g.to_unit_instance(format!("{stem}/{k}"))),
                });
            }
        }
    }
    Ok(out)
}
