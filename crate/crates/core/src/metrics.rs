//! Benchmark metrics, the time-to-solution model, and run reports.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingInstance, Spectrum};
use crate::pentao::StepRecord;
use crate::scalar::Real;
use crate::simulator::StateVector;

/// Version tag written into every report and CSV header.
pub const REPORT_FORMAT_VERSION: &str = "pentao-report/1";

/// Default convergence threshold on per-level improvement.
pub const DEFAULT_EPSILON_CONV: f64 = 5.0 / 1000.0;
/// Normalized-energy cutoff defining a low-energy state.
pub const DEFAULT_LOW_ENERGY_THRESHOLD: f64 = 0.1;

/// Inapproximability threshold for general MaxCut.
pub const RATIO_NP_HARD_GENERAL: f64 = 16.0 / 17.0;
/// Goemans-Williamson guarantee.
pub const RATIO_GW: f64 = 0.8786;
/// Best classical guarantee on cubic graphs.
pub const RATIO_U3R: f64 = 0.9326;
/// Inapproximability threshold on cubic graphs.
pub const RATIO_NP_HARD_U3R: f64 = 331.0 / 332.0;

/// Definition of the total weight `W` in the approximation ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioConvention {
    SumWeights,
    SumAbsWeights,
}

impl RatioConvention {
    /// `SumAbsWeights` whenever a coupling is negative.
    pub fn for_instance<T: Real>(inst: &IsingInstance<T>) -> Self {
        if inst.has_negative_couplings() {
            RatioConvention::SumAbsWeights
        } else {
            RatioConvention::SumWeights
        }
    }
}

/// `r = (W - J) / (W - e_min)`.
pub fn approx_ratio<T: Real>(
    inst: &IsingInstance<T>,
    j: T,
    e_min: T,
    conv: RatioConvention,
) -> Result<T> {
    let w = match conv {
        RatioConvention::SumWeights => {
            if inst.has_negative_couplings() {
                return Err(Error::input(
                    "negative couplings require the sum-of-absolute-weights convention",
                ));
            }
            inst.total_weight(false)
        }
        RatioConvention::SumAbsWeights => inst.total_weight(true),
    };
    let denom = w - e_min;
    if !(denom > T::zero()) {
        return Err(Error::input(format!(
            "approximation ratio is singular: W - e_min = {denom}"
        )));
    }
    Ok((w - j) / denom)
}

/// First level `l` (1-based) whose successor improves `r` by less than `eps`.
///
/// Returns `(l, r_l)`, or the last level when the criterion is never met.
pub fn convergence_point<T: Real>(r_traj: &[T], eps: T) -> Result<(usize, T)> {
    check_trajectory(r_traj, eps)?;
    for (idx, w) in r_traj.windows(2).enumerate() {
        if w[1] - w[0] < eps {
            return Ok((idx + 1, w[0]));
        }
    }
    Ok((r_traj.len(), r_traj[r_traj.len() - 1]))
}

/// Like [`convergence_point`] but for a gap trajectory that decreases toward
/// zero, with the improvement measured relative to the current gap:
/// stop at the first `l` with `gap_l - gap_{l+1} < eps * gap_l`.
pub fn relative_convergence_point<T: Real>(gap_traj: &[T], eps: T) -> Result<(usize, T)> {
    check_trajectory(gap_traj, eps)?;
    for (idx, w) in gap_traj.windows(2).enumerate() {
        if w[0] - w[1] < eps * w[0] {
            return Ok((idx + 1, w[0]));
        }
    }
    Ok((gap_traj.len(), gap_traj[gap_traj.len() - 1]))
}

fn check_trajectory<T: Real>(traj: &[T], eps: T) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::input("empty trajectory"));
    }
    if !(eps > T::zero()) {
        return Err(Error::input("convergence threshold must be positive"));
    }
    Ok(())
}

/// Total probability on basis states with normalized energy below `threshold`.
pub fn low_energy_probability<T: Real>(
    psi: &StateVector<T>,
    spec: &Spectrum<T>,
    threshold: T,
) -> Result<T> {
    if psi.amplitudes().len() != spec.energies().len() {
        return Err(Error::input("state and spectrum dimensions differ"));
    }
    let mut p = T::zero();
    for (a, &e) in psi.amplitudes().iter().zip(spec.energies()) {
        if spec.normalized_energy(e)? < threshold {
            p += a.norm_sqr();
        }
    }
    Ok(p)
}

/// How the level count is assumed to grow with problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Quadratic,
    Linear,
    Log,
}

impl Scaling {
    pub const ALL: [Scaling; 3] = [Scaling::Quadratic, Scaling::Linear, Scaling::Log];

    fn shape(self, n: f64) -> f64 {
        match self {
            Scaling::Quadratic => n * n,
            Scaling::Linear => n,
            Scaling::Log => n.ln(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scaling::Quadratic => "quadratic",
            Scaling::Linear => "linear",
            Scaling::Log => "log",
        }
    }
}

/// Parameters of the quantum time-to-solution model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtsParams {
    /// Two-qubit gate time in seconds.
    pub tau: f64,
    /// Shots per trial.
    pub shots: f64,
    pub scaling: Scaling,
    /// `p(N) = ceil(alpha * shape(N))`.
    pub alpha: f64,
}

impl TtsParams {
    pub const REFERENCE_N: f64 = 20.0;
    pub const REFERENCE_P: f64 = 30.0;

    /// Defaults (`tau` = 500 ns, 1000 shots) with `alpha` fixed by `p(20) = 30`.
    pub fn new(scaling: Scaling) -> Self {
        TtsParams {
            tau: 500e-9,
            shots: 1e3,
            scaling,
            alpha: Self::calibrated_alpha(scaling),
        }
    }

    pub fn calibrated_alpha(scaling: Scaling) -> f64 {
        Self::REFERENCE_P / scaling.shape(Self::REFERENCE_N)
    }

    /// Time for one single-level preparation: `N` layers of two-qubit gates.
    pub fn layer_time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.shots > 0.0 && self.alpha > 0.0) {
            return Err(Error::input("tau, shots and alpha must be positive"));
        }
        Ok(())
    }
}

/// `[5p(p+1)/2 + p] * M * t0` with `t0 = N * tau`.
pub fn tts_quantum(p: u64, n: usize, params: &TtsParams) -> Result<f64> {
    if p == 0 || n == 0 {
        return Err(Error::input("p and N must be at least 1"));
    }
    params.validate()?;
    let p = p as f64;
    Ok((5.0 * p * (p + 1.0) / 2.0 + p) * params.shots * params.layer_time(n))
}

/// Classical solver fit `1e-5 * exp(0.04029 N)` seconds.
pub fn tts_classical(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("N must be at least 1"));
    }
    Ok(1e-5 * (0.04029 * n as f64).exp())
}

/// Level count for size `n`, at least 1.
pub fn p_scaling(n: usize, params: &TtsParams) -> Result<u64> {
    if n == 0 {
        return Err(Error::input("N must be at least 1"));
    }
    params.validate()?;
    let raw = params.alpha * params.scaling.shape(n as f64);
    // absorb rounding so that e.g. 30 * ln(400) / ln(20) lands on 60
    let p = (raw - 1e-9 * raw.abs().max(1.0)).ceil();
    Ok(p.max(1.0) as u64)
}

/// Smallest `N` in the range where the quantum model beats the classical one.
pub fn crossover(params: &TtsParams, range: impl IntoIterator<Item = usize>) -> Result<Option<usize>> {
    for n in range {
        let p = p_scaling(n, params)?;
        if tts_quantum(p, n, params)? < tts_classical(n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Box-plot summary with 1.5 IQR whiskers; quantiles interpolate linearly
/// between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let q3 = quantile_sorted(&v, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        Some(BoxStats {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            q1,
            median: quantile_sorted(&v, 0.5),
            q3,
            max: v[v.len() - 1],
            whisker_lo: v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(v[0]),
            whisker_hi: v.iter().rev().copied().find(|&x| x <= hi_fence).unwrap_or(v[v.len() - 1]),
        })
    }
}

/// Which quantity the convergence rule was applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceRule {
    /// Absolute per-level gain in approximation ratio (field-free instances).
    RatioGain,
    /// Per-level decrease of normalized energy relative to its current value
    /// (instances with local fields).
    RelativeEnergyGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub rule: ConvergenceRule,
    pub epsilon: f64,
    /// Converged level `p_c` (1-based).
    pub level: usize,
    /// Approximation ratio or normalized energy at `p_c`.
    pub value: f64,
    /// Whether the criterion was actually met before the level budget ran out.
    pub met: bool,
}

/// Shot-based readout of the final state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSample {
    pub shots: usize,
    pub seed: u64,
    pub estimated_energy: f64,
    pub ground_state_frequency: f64,
    pub low_energy_frequency: Option<f64>,
}

/// Everything a Penta-O run produces, in plot-ready form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: String,
    pub label: String,
    pub n: usize,
    pub has_fields: bool,
    pub mode: String,
    /// `(gamma, theta)` per level.
    pub schedule: Vec<(f64, f64)>,
    /// Energy of `|+>` before any level.
    pub j_initial: f64,
    /// Exact energy expectation after each level.
    pub j_trajectory: Vec<f64>,
    pub r_trajectory: Option<Vec<f64>>,
    pub ratio_convention: Option<RatioConvention>,
    pub normalized_energy_trajectory: Option<Vec<f64>>,
    pub convergence: Option<Convergence>,
    pub e_min: f64,
    pub e_max: f64,
    pub ground_state_probability: f64,
    pub low_energy_threshold: f64,
    pub low_energy_probability: Option<f64>,
    /// Low-energy probability after each level.
    pub low_energy_trajectory: Option<Vec<f64>>,
    /// Probe trials per level, in order.
    pub probes_per_level: Vec<usize>,
    /// Total trials including a final sampling run, if any.
    pub trials: usize,
    pub final_sample: Option<FinalSample>,
    pub steps: Vec<StepRecord>,
    pub wall_clock_seconds: f64,
    /// Resolved job configuration, filled in by front-ends.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
}

impl RunReport {
    pub fn depth(&self) -> usize {
        self.j_trajectory.len()
    }

    /// Per-level CSV: `level,J,r,trials,cumulative_time_model`.
    ///
    /// `trials` is cumulative; the time model charges each probe at level `l`
    /// with `l * M * t0`. `r` is empty when not defined for the instance.
    pub fn write_levels_csv<W: Write>(&self, mut w: W, tts: &TtsParams) -> io::Result<()> {
        writeln!(w, "level,J,r,trials,cumulative_time_model")?;
        let mut trials = 0usize;
        let mut time = 0.0;
        let t0 = tts.layer_time(self.n);
        for (idx, j) in self.j_trajectory.iter().enumerate() {
            let level = idx + 1;
            let probes = self.probes_per_level[idx];
            trials += probes;
            time += probes as f64 * level as f64 * tts.shots * t0;
            let r = self
                .r_trajectory
                .as_ref()
                .map(|r| format!("{}", r[idx]))
                .unwrap_or_default();
            writeln!(w, "{level},{j},{r},{trials},{time}")?;
        }
        Ok(())
    }
}
