//! Level-wise parameter setting without a classical outer loop.
//!
//! With every earlier level fixed, the energy after level `p` depends on the
//! final mixer angle only through
//!
//! ```text
//! J(theta) = A sin(4 theta + phi) + A' sin(2 theta + phi') + C
//! ```
//!
//! so five evaluations of `J` (three when all local fields vanish and
//! `A' = 0`) determine the whole curve. Each level probes the curve, fits it,
//! and fixes `theta` at the fitted minimum. The cost angle is held at
//! `gamma0` for every level.
//!
//! Because `J(0)` equals the previous level's energy, the minimum of an exact
//! fit never increases the energy.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{derive_seed, Seed};
use crate::metrics::{
    self, approx_ratio, Convergence, ConvergenceRule, FinalSample, RatioConvention, RunReport,
    DEFAULT_EPSILON_CONV, DEFAULT_LOW_ENERGY_THRESHOLD, REPORT_FORMAT_VERSION,
};
use crate::scalar::Real;
use crate::simulator::{init_plus, CostHamiltonian, LevelParams, Schedule, StateVector};

/// Points in the dense scan used when the model has both harmonics.
pub const ARGMIN_SCAN_POINTS: usize = 4096;

const PARALLEL_PROBE_MIN_QUBITS: usize = 12;
const FINAL_SAMPLE_STREAM: u64 = u64::MAX;

/// `A sin(4θ + φ) + A' sin(2θ + φ') + C` in canonical form: amplitudes are
/// non-negative and phases lie in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrigModel<T: Real> {
    pub a: T,
    pub phi: T,
    pub a_prime: T,
    pub phi_prime: T,
    pub c: T,
}

fn wrap_phase<T: Real>(phi: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut p = phi % two_pi;
    if p <= -T::PI() {
        p += two_pi;
    } else if p > T::PI() {
        p -= two_pi;
    }
    p
}

impl<T: Real> TrigModel<T> {
    /// Build from coefficients of `sin 4θ, cos 4θ, sin 2θ, cos 2θ, 1`.
    pub fn from_basis(s4: T, c4: T, s2: T, c2: T, c: T) -> Self {
        // A sin(4θ+φ) = A cos φ sin 4θ + A sin φ cos 4θ
        let phase = |s: T, c: T| {
            if s == T::zero() && c == T::zero() {
                T::zero()
            } else {
                wrap_phase(c.atan2(s))
            }
        };
        TrigModel {
            a: s4.hypot(c4),
            phi: phase(s4, c4),
            a_prime: s2.hypot(c2),
            phi_prime: phase(s2, c2),
            c,
        }
    }

    pub fn constant(c: T) -> Self {
        TrigModel {
            c,
            ..Default::default()
        }
    }

    pub fn eval(&self, theta: T) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        self.a * (four * theta + self.phi).sin()
            + self.a_prime * (two * theta + self.phi_prime).sin()
            + self.c
    }

    pub fn derivative(&self, theta: T) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        four * self.a * (four * theta + self.phi).cos()
            + two * self.a_prime * (two * theta + self.phi_prime).cos()
    }

    fn second_derivative(&self, theta: T) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        -T::lit(16.0) * self.a * (four * theta + self.phi).sin()
            - four * self.a_prime * (two * theta + self.phi_prime).sin()
    }

    /// Minimizer in `[0, π)` and the minimum value.
    ///
    /// Single-harmonic models use the closed form, mapped into `[0, π/2)`.
    /// Otherwise the curve is scanned on [`ARGMIN_SCAN_POINTS`] points and
    /// every discrete local minimum is refined by safeguarded Newton steps on
    /// the derivative. Ties go to the smallest angle; a constant model
    /// returns `θ = 0`.
    pub fn argmin(&self) -> (T, T) {
        let pi = T::PI();
        let half_pi = pi / T::lit(2.0);
        if self.a == T::zero() && self.a_prime == T::zero() {
            return (T::zero(), self.c);
        }
        if self.a_prime == T::zero() {
            // 4θ + φ = 3π/2 (mod 2π)
            let raw = (T::lit(1.5) * pi - self.phi) / T::lit(4.0);
            let mut theta = raw % half_pi;
            if theta < T::zero() {
                theta += half_pi;
            }
            if theta >= half_pi {
                theta = T::zero();
            }
            return (theta, self.c - self.a);
        }
        if self.a == T::zero() {
            // 2θ + φ' = 3π/2 (mod 2π)
            let raw = (T::lit(1.5) * pi - self.phi_prime) / T::lit(2.0);
            let mut theta = raw % pi;
            if theta < T::zero() {
                theta += pi;
            }
            if theta >= pi {
                theta = T::zero();
            }
            return (theta, self.c - self.a_prime);
        }

        let m = ARGMIN_SCAN_POINTS;
        let h = pi / T::from_count(m);
        let values: Vec<T> = (0..m).map(|k| self.eval(T::from_count(k) * h)).collect();
        let mut best: Option<(T, T)> = None;
        let scale = self.a + self.a_prime + self.c.abs();
        let tie = T::lit(1e-12) * (T::one() + scale);
        for k in 0..m {
            let prev = values[(k + m - 1) % m];
            let next = values[(k + 1) % m];
            if values[k] > prev || values[k] > next {
                continue;
            }
            let centre = T::from_count(k) * h;
            let (theta, j) = self.refine(centre - h, centre + h, centre);
            let mut theta = theta % pi;
            if theta < T::zero() {
                theta += pi;
            }
            if theta >= pi {
                theta = T::zero();
            }
            best = match best {
                None => Some((theta, j)),
                Some((bt, bj)) => {
                    if j < bj - tie || ((j - bj).abs() <= tie && theta < bt) {
                        Some((theta, j.min(bj)))
                    } else {
                        Some((bt, bj))
                    }
                }
            };
        }
        best.unwrap_or((T::zero(), self.eval(T::zero())))
    }

    fn refine(&self, mut lo: T, mut hi: T, start: T) -> (T, T) {
        let slope_scale = T::lit(4.0) * self.a + T::lit(2.0) * self.a_prime;
        let tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon() * slope_scale);
        let (dlo, dhi) = (self.derivative(lo), self.derivative(hi));
        if !(dlo <= T::zero() && dhi >= T::zero()) {
            return (start, self.eval(start));
        }
        let mut x = start;
        for _ in 0..200 {
            let d = self.derivative(x);
            if d.abs() <= tol {
                break;
            }
            if d < T::zero() {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= T::lit(4.0) * T::epsilon() * (T::one() + x.abs()) {
                break;
            }
            let dd = self.second_derivative(x);
            let newton = x - d / dd;
            x = if dd > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) / T::lit(2.0)
            };
        }
        (x, self.eval(x))
    }
}

/// `A sin(4θ + φ) + A' sin(2θ + φ') + C`.
pub fn model_eval<T: Real>(m: &TrigModel<T>, theta: T) -> T {
    m.eval(theta)
}

/// See [`TrigModel::argmin`].
pub fn argmin_model<T: Real>(m: &TrigModel<T>) -> (T, T) {
    m.argmin()
}

/// How a probe value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeMode {
    Exact,
    Shots { shots: usize, seed: Seed },
}

/// One evaluation of the level objective at a probe angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProbeRecord<T: Real> {
    pub theta: T,
    pub j_value: T,
    pub mode: ProbeMode,
}

/// How the objective is evaluated at each probe angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalMode {
    /// Exact statevector expectation.
    Exact,
    /// Mean energy over `shots` fresh samples per probe.
    Shots { shots: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PentaOConfig {
    /// Cost angle used at every level.
    pub gamma0: f64,
    /// Optional per-level cost angles; levels past the end use `gamma0`.
    pub gammas: Vec<f64>,
    pub p_max: usize,
    pub mode: EvalMode,
    /// Stop early once the per-level improvement falls below `epsilon_conv`.
    pub stop_on_convergence: bool,
    pub epsilon_conv: f64,
    pub seed: Seed,
    /// Sample the final state with this many shots (counts as one trial).
    pub final_shots: Option<usize>,
    pub low_energy_threshold: f64,
    /// Early-stopping rule; `None` picks ratio gain for field-free
    /// instances and the relative energy gap otherwise.
    pub convergence_rule: Option<ConvergenceRule>,
}

impl Default for PentaOConfig {
    fn default() -> Self {
        PentaOConfig {
            gamma0: 0.2,
            gammas: Vec::new(),
            p_max: 10,
            mode: EvalMode::Exact,
            stop_on_convergence: false,
            epsilon_conv: DEFAULT_EPSILON_CONV,
            seed: 0,
            final_shots: None,
            low_energy_threshold: DEFAULT_LOW_ENERGY_THRESHOLD,
            convergence_rule: None,
        }
    }
}

impl PentaOConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma0.is_finite() || self.gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::input("cost angles must be finite"));
        }
        if self.p_max == 0 {
            return Err(Error::input("p_max must be at least 1"));
        }
        if let EvalMode::Shots { shots: 0 } = self.mode {
            return Err(Error::input("shots mode needs at least one shot per probe"));
        }
        if self.final_shots == Some(0) {
            return Err(Error::input("final sampling needs at least one shot"));
        }
        if !(self.epsilon_conv > 0.0) {
            return Err(Error::input("convergence threshold must be positive"));
        }
        Ok(())
    }

    /// Cost angle for 1-based `level`.
    pub fn gamma_for(&self, level: usize) -> f64 {
        self.gammas.get(level - 1).copied().unwrap_or(self.gamma0)
    }

    fn probe_seed(&self, level: usize, probe: usize) -> Seed {
        derive_seed(derive_seed(self.seed, level as u64), probe as u64)
    }
}

/// Counts objective evaluations (trials).
#[derive(Debug, Default)]
pub struct TrialCounter(AtomicUsize);

impl TrialCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn count(&self) -> usize {
        self.0.load(Ordering::Relaxed)
    }
}

/// Probe angles: `kπ/6, k = 1..5` with fields, `kπ/8, k = 1..3` without.
pub fn probe_angles<T: Real>(has_fields: bool) -> Vec<T> {
    let (den, count) = if has_fields { (6.0, 5) } else { (8.0, 3) };
    (1..=count)
        .map(|k| T::PI() * T::lit(k as f64) / T::lit(den))
        .collect()
}

/// Exactly solve for the model through the probe values.
///
/// Five probes fit `{sin 4θ, cos 4θ, sin 2θ, cos 2θ, 1}`; three probes
/// (field-free) fit `{sin 4θ, cos 4θ, 1}` and leave `A' = φ' = 0`.
pub fn fit_trig<T: Real>(probes: &[ProbeRecord<T>], has_fields: bool) -> Result<TrigModel<T>> {
    let k = if has_fields { 5 } else { 3 };
    if probes.len() != k {
        return Err(Error::input(format!(
            "{} mode needs {k} probes, got {}",
            if has_fields { "field" } else { "field-free" },
            probes.len()
        )));
    }
    let describe = || {
        probes
            .iter()
            .map(|p| format!("{:.6}", p.theta.as_f64()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let period = if has_fields { T::PI() } else { T::PI() / T::lit(2.0) };
    for (i, a) in probes.iter().enumerate() {
        for b in &probes[i + 1..] {
            let d = ((a.theta - b.theta) % period).abs();
            let d = d.min(period - d);
            if d <= T::epsilon() * T::lit(64.0) {
                return Err(Error::Numerical(format!(
                    "probe angles coincide modulo the period: [{}]",
                    describe()
                )));
            }
        }
    }
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let rows: Vec<Vec<T>> = probes
        .iter()
        .map(|p| {
            let t = p.theta;
            if has_fields {
                vec![(four * t).sin(), (four * t).cos(), (two * t).sin(), (two * t).cos(), T::one()]
            } else {
                vec![(four * t).sin(), (four * t).cos(), T::one()]
            }
        })
        .collect();
    let inv = invert(&rows).ok_or_else(|| {
        Error::Numerical(format!("singular probe system for angles [{}]", describe()))
    })?;
    let cond = norm1(&rows) * norm1(&inv);
    let max_cond = T::one() / (T::epsilon() * T::lit(1e3));
    if !(cond < max_cond) {
        return Err(Error::Numerical(format!(
            "ill-conditioned probe system (condition {:.3e}) for angles [{}]",
            cond.as_f64(),
            describe()
        )));
    }
    let coeff: Vec<T> = inv
        .iter()
        .map(|row| row.iter().zip(probes).map(|(&m, p)| m * p.j_value).sum())
        .collect();
    Ok(if has_fields {
        TrigModel::from_basis(coeff[0], coeff[1], coeff[2], coeff[3], coeff[4])
    } else {
        TrigModel::from_basis(coeff[0], coeff[1], T::zero(), T::zero(), coeff[2])
    })
}

fn norm1<T: Real>(m: &[Vec<T>]) -> T {
    let cols = m[0].len();
    (0..cols)
        .map(|c| m.iter().map(|r| r[c].abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert<T: Real>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        if !(a[piv][col].abs() > T::epsilon()) {
            return None;
        }
        a.swap(col, piv);
        let p = a[col][col];
        a[col].iter_mut().for_each(|x| *x /= p);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != T::zero() {
                    for c in 0..2 * n {
                        let v = a[col][c];
                        a[r][c] -= f * v;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Coefficients computed directly from Pauli observables on
/// `U_C(γ)|ψ_prior>`, independently of any probe.
pub fn coefficients_from_observables<T: Real>(
    h: &CostHamiltonian<T>,
    prior: &Schedule<T>,
    gamma: T,
) -> Result<TrigModel<T>> {
    let psi = h.apply_cost(&h.run_qaoa(prior)?, gamma)?;
    let o = h.pauli_expectations(&psi)?;
    let half = T::lit(0.5);
    // J = c²·zz + s²·yy + cs·zy + c·z + s·y with c = cos 2θ, s = sin 2θ
    Ok(TrigModel::from_basis(
        half * o.zy,
        half * (o.zz - o.yy),
        o.y,
        o.z,
        half * (o.zz + o.yy),
    ))
}

/// Outcome of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T: Real> {
    pub level: usize,
    pub gamma: T,
    pub theta: T,
    /// Model value at `theta`.
    pub j_predicted: T,
    pub model: TrigModel<T>,
    pub probes: Vec<ProbeRecord<T>>,
}

/// Serialized per-level record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub level: usize,
    pub gamma: f64,
    /// `(θ_x, J)` pairs.
    pub probes: Vec<(f64, f64)>,
    pub model: TrigModel<f64>,
    pub theta_star: f64,
    pub j_star: f64,
    pub trials_so_far: usize,
}

impl<T: Real> StepOutcome<T> {
    pub fn record(&self, trials_so_far: usize) -> StepRecord {
        StepRecord {
            level: self.level,
            gamma: self.gamma.as_f64(),
            probes: self
                .probes
                .iter()
                .map(|p| (p.theta.as_f64(), p.j_value.as_f64()))
                .collect(),
            model: TrigModel {
                a: self.model.a.as_f64(),
                phi: self.model.phi.as_f64(),
                a_prime: self.model.a_prime.as_f64(),
                phi_prime: self.model.phi_prime.as_f64(),
                c: self.model.c.as_f64(),
            },
            theta_star: self.theta.as_f64(),
            j_star: self.j_predicted.as_f64(),
            trials_so_far,
        }
    }
}

/// One level on top of `prior`. Returns the outcome and the new state.
pub fn step_from_state<T: Real>(
    h: &CostHamiltonian<T>,
    prior: &StateVector<T>,
    level: usize,
    cfg: &PentaOConfig,
    trials: &TrialCounter,
) -> Result<(StepOutcome<T>, StateVector<T>)> {
    let has_fields = h.instance().has_fields();
    let gamma = T::lit(cfg.gamma_for(level));
    let phased = h.apply_cost(prior, gamma)?;
    let angles = probe_angles::<T>(has_fields);

    let evaluate = |(k, &theta): (usize, &T)| -> Result<ProbeRecord<T>> {
        let psi = phased.apply_mixer(theta);
        trials.record();
        match cfg.mode {
            EvalMode::Exact => Ok(ProbeRecord {
                theta,
                j_value: h.expectation(&psi)?,
                mode: ProbeMode::Exact,
            }),
            EvalMode::Shots { shots } => {
                let seed = cfg.probe_seed(level, k);
                let sample = psi.sample(shots, seed)?;
                Ok(ProbeRecord {
                    theta,
                    j_value: h.estimate_energy(&sample)?,
                    mode: ProbeMode::Shots { shots, seed },
                })
            }
        }
    };
    let probes: Vec<ProbeRecord<T>> = if h.n() >= PARALLEL_PROBE_MIN_QUBITS {
        angles.par_iter().enumerate().map(evaluate).collect::<Result<_>>()?
    } else {
        angles.iter().enumerate().map(evaluate).collect::<Result<_>>()?
    };

    let lo = probes.iter().map(|p| p.j_value).fold(T::infinity(), T::min);
    let hi = probes.iter().map(|p| p.j_value).fold(T::neg_infinity(), T::max);
    let (model, theta, j_predicted) = if hi - lo <= T::lit(1e-12) * T::one().max(hi.abs()) {
        let mean = probes.iter().map(|p| p.j_value).sum::<T>() / T::from_count(probes.len());
        (TrigModel::constant(mean), T::zero(), mean)
    } else {
        let model = fit_trig(&probes, has_fields)?;
        let (theta, j) = model.argmin();
        (model, theta, j)
    };

    let mut next = phased;
    next.apply_mixer_in_place(theta);
    Ok((
        StepOutcome {
            level,
            gamma,
            theta,
            j_predicted,
            model,
            probes,
        },
        next,
    ))
}

/// One level on top of the schedule `prior`.
pub fn penta_o_step<T: Real>(
    h: &CostHamiltonian<T>,
    prior: &Schedule<T>,
    cfg: &PentaOConfig,
) -> Result<StepOutcome<T>> {
    cfg.validate()?;
    let psi = h.run_qaoa(prior)?;
    let counter = TrialCounter::new();
    step_from_state(h, &psi, prior.depth() + 1, cfg, &counter).map(|(out, _)| out)
}

/// Whether the step from `previous` to `current` counts as converged.
/// The metric is the approximation ratio for [`ConvergenceRule::RatioGain`]
/// and the normalized energy for [`ConvergenceRule::RelativeEnergyGap`].
fn stalled(rule: ConvergenceRule, epsilon: f64, previous: f64, current: f64) -> bool {
    match rule {
        ConvergenceRule::RatioGain => current - previous < epsilon,
        ConvergenceRule::RelativeEnergyGap => previous - current < epsilon * previous,
    }
}

/// Stack levels `1..=p_max` (or until convergence, when enabled).
pub fn penta_o_run<T: Real>(
    h: &CostHamiltonian<T>,
    cfg: &PentaOConfig,
) -> Result<(Schedule<T>, RunReport)> {
    cfg.validate()?;
    let started = Instant::now();
    let inst = h.instance();
    let spec = h.spectrum();
    let has_fields = inst.has_fields();
    let e_min = spec.e_min().as_f64();
    let e_max = spec.e_max().as_f64();
    let degenerate = !(e_max > e_min);

    let ratio_conv = (!has_fields).then(|| RatioConvention::for_instance(inst));
    let ratio = |j: T| -> Option<f64> {
        ratio_conv.and_then(|c| approx_ratio(inst, j, spec.e_min(), c).ok().map(|r| r.as_f64()))
    };
    let normalized = |j: T| -> Option<f64> {
        (!degenerate).then(|| (j.as_f64() - e_min) / (e_max - e_min))
    };
    let ratio_available = ratio(spec.e_min()).is_some();

    let rule = match cfg.convergence_rule {
        Some(ConvergenceRule::RatioGain) if !ratio_available => {
            return Err(Error::input(
                "ratio-gain convergence needs a field-free instance with a defined ratio",
            ))
        }
        Some(ConvergenceRule::RelativeEnergyGap) if degenerate => {
            return Err(Error::input(
                "relative-gap convergence needs a non-degenerate spectrum",
            ))
        }
        Some(rule) => Some(rule),
        None if has_fields => (!degenerate).then_some(ConvergenceRule::RelativeEnergyGap),
        None => ratio_available.then_some(ConvergenceRule::RatioGain),
    };
    let metric = |j: T| -> Option<f64> {
        match rule? {
            ConvergenceRule::RatioGain => ratio(j),
            ConvergenceRule::RelativeEnergyGap => normalized(j),
        }
    };
    let threshold = T::lit(cfg.low_energy_threshold);

    let counter = TrialCounter::new();
    let mut psi = init_plus::<T>(h.n())?;
    let j_initial = h.expectation(&psi)?;
    let mut schedule = Schedule::default();
    let mut steps = Vec::with_capacity(cfg.p_max);
    let mut probes_per_level = Vec::with_capacity(cfg.p_max);
    let mut low_energy_trajectory = Vec::with_capacity(cfg.p_max);

    for level in 1..=cfg.p_max {
        let before = counter.count();
        let (outcome, next) = step_from_state(h, &psi, level, cfg, &counter)?;
        let j = h.expectation(&next)?;
        probes_per_level.push(counter.count() - before);
        steps.push(outcome.record(counter.count()));
        schedule.push(
            LevelParams {
                gamma: outcome.gamma,
                theta: outcome.theta,
            },
            j,
        );
        if !degenerate {
            low_energy_trajectory.push(h.low_energy_probability(&next, threshold)?.as_f64());
        }
        psi = next;

        if cfg.stop_on_convergence && level >= 2 {
            let traj = &schedule.objective_trajectory;
            if let (Some(rule), Some(prev), Some(cur)) =
                (rule, metric(traj[level - 2]), metric(traj[level - 1]))
            {
                if stalled(rule, cfg.epsilon_conv, prev, cur) {
                    break;
                }
            }
        }
    }

    // re-prepare from scratch with the full schedule
    let final_state = h.run_qaoa(&schedule)?;
    let low_energy_probability = if degenerate {
        None
    } else {
        Some(h.low_energy_probability(&final_state, threshold)?.as_f64())
    };

    let final_sample = match cfg.final_shots {
        Some(shots) => {
            let seed = derive_seed(cfg.seed, FINAL_SAMPLE_STREAM);
            let sample = final_state.sample(shots, seed)?;
            counter.record();
            let energies = spec.energies();
            Some(FinalSample {
                shots,
                seed,
                estimated_energy: h.estimate_energy(&sample)?.as_f64(),
                ground_state_frequency: sample.frequency(|k| spec.is_ground(energies[k])),
                low_energy_frequency: (!degenerate).then(|| {
                    sample.frequency(|k| {
                        spec.normalized_energy(energies[k])
                            .map(|e| e < threshold)
                            .unwrap_or(false)
                    })
                }),
            })
        }
        None => None,
    };

    let j_trajectory: Vec<f64> = schedule.objective_trajectory.iter().map(|j| j.as_f64()).collect();
    let r_trajectory: Option<Vec<f64>> = schedule.objective_trajectory.iter().map(|&j| ratio(j)).collect();
    let normalized_energy_trajectory: Option<Vec<f64>> =
        schedule.objective_trajectory.iter().map(|&j| normalized(j)).collect();

    let convergence = match (rule, &r_trajectory, &normalized_energy_trajectory) {
        (Some(rule @ ConvergenceRule::RatioGain), Some(traj), _)
        | (Some(rule @ ConvergenceRule::RelativeEnergyGap), _, Some(traj)) => {
            let (level, value) = match rule {
                ConvergenceRule::RatioGain => metrics::convergence_point(traj, cfg.epsilon_conv)?,
                ConvergenceRule::RelativeEnergyGap => {
                    metrics::relative_convergence_point(traj, cfg.epsilon_conv)?
                }
            };
            Some(Convergence {
                rule,
                epsilon: cfg.epsilon_conv,
                level,
                value,
                met: level < traj.len(),
            })
        }
        _ => None,
    };

    let mode = match cfg.mode {
        EvalMode::Exact => "exact".to_string(),
        EvalMode::Shots { shots } => format!("shots(M={shots})"),
    };
    let report = RunReport {
        format_version: REPORT_FORMAT_VERSION.to_string(),
        label: inst.label().to_string(),
        n: h.n(),
        has_fields,
        mode,
        schedule: schedule
            .levels
            .iter()
            .map(|l| (l.gamma.as_f64(), l.theta.as_f64()))
            .collect(),
        j_initial: j_initial.as_f64(),
        j_trajectory,
        r_trajectory,
        ratio_convention: ratio_conv,
        normalized_energy_trajectory,
        convergence,
        e_min,
        e_max,
        ground_state_probability: h.ground_state_probability(&final_state)?.as_f64(),
        low_energy_threshold: cfg.low_energy_threshold,
        low_energy_probability,
        low_energy_trajectory: (!degenerate).then_some(low_energy_trajectory),
        probes_per_level,
        trials: counter.count(),
        final_sample,
        steps,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config: None,
    };
    Ok((schedule, report))
}
