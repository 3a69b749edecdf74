//! Dense statevector simulation of the alternating cost / mixer ansatz.
//!
//! Parameter convention: `gamma` multiplies the cost Hamiltonian and `theta`
//! the mixer. The mixer layer is `exp(-i theta sum_i X_i)`, i.e. the same
//! X rotation on every qubit, which gives the Heisenberg-picture identity
//! `U^dag Z_i U = cos(2 theta) Z_i + sin(2 theta) Y_i`.

use std::io::{self, Read, Write};

use num_complex::Complex;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{rng_for, Seed};
use crate::ising::{self, IsingInstance, SpinConfig, Spectrum, DEFAULT_QUBIT_CAP};
use crate::scalar::Real;

const PARALLEL_MIN_QUBITS: usize = 14;
const REDUCTION_CHUNK: usize = 1 << 12;

/// `2^n` complex amplitudes indexed by the crate bit convention.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Wrap raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::input(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        Ok(StateVector {
            n: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    /// Computational basis state `|k>`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        *amps
            .get_mut(k)
            .ok_or_else(|| Error::input(format!("basis index {k} out of range")))? =
            Complex::new(T::one(), T::zero());
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> T {
        chunked_sum(&self.amps, |a| a.norm_sqr())
    }

    /// Multiply amplitude `k` by `exp(-i gamma energies[k])`.
    pub fn apply_cost_in_place(&mut self, spectrum: &Spectrum<T>, gamma: T) -> Result<()> {
        if spectrum.energies().len() != self.amps.len() {
            return Err(Error::input(format!(
                "state has {} qubits, cost diagonal has {}",
                self.n,
                spectrum.n()
            )));
        }
        let phase = |a: &mut Complex<T>, e: T| {
            let (s, c) = (gamma * e).sin_cos();
            *a = *a * Complex::new(c, -s);
        };
        if self.n >= PARALLEL_MIN_QUBITS {
            self.amps
                .par_iter_mut()
                .zip(spectrum.energies().par_iter())
                .for_each(|(a, &e)| phase(a, e));
        } else {
            self.amps
                .iter_mut()
                .zip(spectrum.energies())
                .for_each(|(a, &e)| phase(a, e));
        }
        Ok(())
    }

    /// Apply `exp(-i theta X)` to every qubit.
    pub fn apply_mixer_in_place(&mut self, theta: T) {
        let (s, c) = theta.sin_cos();
        let rot = |a: &mut Complex<T>, b: &mut Complex<T>| {
            let (x, y) = (*a, *b);
            // [c, -is; -is, c]
            *a = Complex::new(c * x.re + s * y.im, c * x.im - s * y.re);
            *b = Complex::new(c * y.re + s * x.im, c * y.im - s * x.re);
        };
        let parallel = self.n >= PARALLEL_MIN_QUBITS;
        for q in 0..self.n {
            let half = 1usize << q;
            let kernel = |block: &mut [Complex<T>]| {
                let (lo, hi) = block.split_at_mut(half);
                lo.iter_mut().zip(hi.iter_mut()).for_each(|(a, b)| rot(a, b));
            };
            if parallel {
                self.amps.par_chunks_mut(2 * half).for_each(kernel);
            } else {
                self.amps.chunks_mut(2 * half).for_each(kernel);
            }
        }
    }

    pub fn apply_mixer(&self, theta: T) -> Self {
        let mut out = self.clone();
        out.apply_mixer_in_place(theta);
        out
    }

    /// `M` i.i.d. computational-basis draws from `|a_k|^2`.
    pub fn sample(&self, shots: usize, seed: Seed) -> Result<ShotSet> {
        if shots == 0 {
            return Err(Error::input("shot count must be at least 1"));
        }
        let weights: Vec<f64> = self.amps.iter().map(|a| a.norm_sqr().as_f64()).collect();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Numerical(format!("cannot sample state: {e}")))?;
        let mut rng = rng_for(seed);
        let mut counts = std::collections::BTreeMap::<usize, usize>::new();
        for _ in 0..shots {
            *counts.entry(dist.sample(&mut rng)).or_default() += 1;
        }
        Ok(ShotSet {
            n: self.n,
            counts: counts.into_iter().collect(),
            shots,
        })
    }

    /// Debug dump: `n` as little-endian u64, then interleaved re/im f64 values.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.as_f64().to_le_bytes())?;
            w.write_all(&a.im.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> io::Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        if n > DEFAULT_QUBIT_CAP {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "qubit count over cap"));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for _ in 0..(1usize << n) {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            amps.push(Complex::new(T::lit(re), T::lit(im)));
        }
        Ok(StateVector { n, amps })
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::input("state needs at least one qubit"));
    }
    if n > DEFAULT_QUBIT_CAP {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the statevector cap of {DEFAULT_QUBIT_CAP}"
        )));
    }
    Ok(())
}

/// Fixed-chunk reduction: partial sums are combined in index order, so the
/// result does not depend on the thread count.
fn chunked_sum<A: Sync, T: Real>(xs: &[A], f: impl Fn(&A) -> T + Sync) -> T {
    if xs.len() <= REDUCTION_CHUNK {
        return xs.iter().map(&f).sum();
    }
    let partials: Vec<T> = xs
        .par_chunks(REDUCTION_CHUNK)
        .map(|c| c.iter().map(&f).sum())
        .collect();
    partials.into_iter().sum()
}

/// Equal superposition `|+>^n`.
pub fn init_plus<T: Real>(n: usize) -> Result<StateVector<T>> {
    check_qubits(n)?;
    let a = T::one() / T::from_count(1usize << n).sqrt();
    Ok(StateVector {
        n,
        amps: vec![Complex::new(a, T::zero()); 1 << n],
    })
}

/// Angles of one ansatz level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LevelParams<T: Real> {
    pub gamma: T,
    pub theta: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Schedule<T: Real> {
    pub levels: Vec<LevelParams<T>>,
    /// Energy expectation after each level, when recorded.
    pub objective_trajectory: Vec<T>,
}

impl<T: Real> Schedule<T> {
    pub fn new(levels: Vec<LevelParams<T>>) -> Self {
        Schedule {
            levels,
            objective_trajectory: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn push(&mut self, level: LevelParams<T>, objective: T) {
        self.levels.push(level);
        self.objective_trajectory.push(objective);
    }
}

/// Measurement outcomes with multiplicities, sorted by basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSet {
    n: usize,
    counts: Vec<(usize, usize)>,
    shots: usize,
}

impl ShotSet {
    pub fn from_counts(n: usize, counts: Vec<(usize, usize)>) -> Self {
        let mut counts: Vec<_> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        counts.sort_unstable();
        let shots = counts.iter().map(|c| c.1).sum();
        ShotSet { n, counts, shots }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    /// `(basis index, multiplicity)` pairs.
    pub fn counts(&self) -> &[(usize, usize)] {
        &self.counts
    }

    pub fn samples(&self) -> impl Iterator<Item = (SpinConfig, usize)> + '_ {
        self.counts
            .iter()
            .map(move |&(k, c)| (SpinConfig::from_index(self.n, k), c))
    }

    /// Fraction of shots whose index satisfies `pred`.
    pub fn frequency(&self, pred: impl Fn(usize) -> bool) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        let hits: usize = self.counts.iter().filter(|c| pred(c.0)).map(|c| c.1).sum();
        hits as f64 / self.shots as f64
    }
}

/// Pauli-observable sums evaluated on one state:
/// `zz = sum w_ij <Z_i Z_j>`, `yy = sum w_ij <Y_i Y_j>`,
/// `zy = sum w_ij <Z_i Y_j + Y_i Z_j>`, `z = sum w_ii <Z_i>`, `y = sum w_ii <Y_i>`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ObservableSet<T: Real> {
    pub zz: T,
    pub yy: T,
    pub zy: T,
    pub z: T,
    pub y: T,
}

/// An instance together with its precomputed diagonal.
#[derive(Debug, Clone)]
pub struct CostHamiltonian<T: Real> {
    instance: IsingInstance<T>,
    spectrum: Spectrum<T>,
}

impl<T: Real> CostHamiltonian<T> {
    pub fn new(instance: IsingInstance<T>) -> Result<Self> {
        Self::with_cap(instance, DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(instance: IsingInstance<T>, cap: usize) -> Result<Self> {
        let spectrum = ising::diagonal_with_cap(&instance, cap)?;
        Ok(CostHamiltonian { instance, spectrum })
    }

    pub fn instance(&self) -> &IsingInstance<T> {
        &self.instance
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    fn check(&self, psi: &StateVector<T>) -> Result<()> {
        if psi.n != self.n() {
            return Err(Error::input(format!(
                "state has {} qubits, instance has {}",
                psi.n,
                self.n()
            )));
        }
        Ok(())
    }

    pub fn apply_cost(&self, psi: &StateVector<T>, gamma: T) -> Result<StateVector<T>> {
        let mut out = psi.clone();
        out.apply_cost_in_place(&self.spectrum, gamma)?;
        Ok(out)
    }

    /// `|+>` followed by cost then mixer for each level in order.
    pub fn run_qaoa(&self, schedule: &Schedule<T>) -> Result<StateVector<T>> {
        let mut psi = init_plus(self.n())?;
        for lvl in &schedule.levels {
            psi.apply_cost_in_place(&self.spectrum, lvl.gamma)?;
            psi.apply_mixer_in_place(lvl.theta);
        }
        Ok(psi)
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &StateVector<T>) -> Result<T> {
        self.check(psi)?;
        let e = self.spectrum.energies();
        if psi.amps.len() <= REDUCTION_CHUNK {
            return Ok(psi.amps.iter().zip(e).map(|(a, &x)| a.norm_sqr() * x).sum());
        }
        let partials: Vec<T> = psi
            .amps
            .par_chunks(REDUCTION_CHUNK)
            .zip(e.par_chunks(REDUCTION_CHUNK))
            .map(|(a, x)| a.iter().zip(x).map(|(a, &x)| a.norm_sqr() * x).sum())
            .collect();
        Ok(partials.into_iter().sum())
    }

    pub fn pauli_expectations(&self, psi: &StateVector<T>) -> Result<ObservableSet<T>> {
        self.check(psi)?;
        let a = &psi.amps;
        let sign = |k: usize, i: usize| if (k >> i) & 1 == 0 { T::one() } else { -T::one() };
        let mut obs = ObservableSet::default();
        for &(i, j, w) in self.instance.couplings() {
            let (mi, mj) = (1usize << i, 1usize << j);
            let (mut zz, mut yy, mut zy) = (T::zero(), T::zero(), T::zero());
            for (k, &ak) in a.iter().enumerate() {
                let zizj = sign(k, i) * sign(k, j);
                zz += ak.norm_sqr() * zizj;
                // Y|b> = i z_b |b^1>, so Y_i Y_j |k> = -z_i z_j |k ^ mi ^ mj>
                yy -= zizj * (a[k ^ mi ^ mj].conj() * ak).re;
                // Z_i Y_j |k> = i z_i z_j |k ^ mj>, and symmetrically
                let t = a[k ^ mj].conj() * ak + a[k ^ mi].conj() * ak;
                zy -= zizj * t.im;
            }
            obs.zz += w * zz;
            obs.yy += w * yy;
            obs.zy += w * zy;
        }
        for &(i, w) in self.instance.fields() {
            let mi = 1usize << i;
            let (mut z, mut y) = (T::zero(), T::zero());
            for (k, &ak) in a.iter().enumerate() {
                let zi = sign(k, i);
                z += ak.norm_sqr() * zi;
                // <Y_i> = sum_k conj(a_{k^mi}) i z_i a_k
                y -= zi * (a[k ^ mi].conj() * ak).im;
            }
            obs.z += w * z;
            obs.y += w * y;
        }
        Ok(obs)
    }

    /// Multiplicity-weighted mean energy over a shot set.
    pub fn estimate_energy(&self, shots: &ShotSet) -> Result<T> {
        if shots.shots() == 0 {
            return Err(Error::input("cannot estimate energy from an empty shot set"));
        }
        if shots.n() != self.n() {
            return Err(Error::input(format!(
                "shots have {} qubits, instance has {}",
                shots.n(),
                self.n()
            )));
        }
        let e = self.spectrum.energies();
        let total: T = shots
            .counts()
            .iter()
            .map(|&(k, c)| e[k] * T::from_count(c))
            .sum();
        Ok(total / T::from_count(shots.shots()))
    }

    /// Probability mass on basis states whose normalized energy is below
    /// `threshold`.
    pub fn low_energy_probability(&self, psi: &StateVector<T>, threshold: T) -> Result<T> {
        self.check(psi)?;
        crate::metrics::low_energy_probability(psi, &self.spectrum, threshold)
    }

    /// Probability of measuring a ground state.
    pub fn ground_state_probability(&self, psi: &StateVector<T>) -> Result<T> {
        self.check(psi)?;
        Ok(psi
            .amps
            .iter()
            .zip(self.spectrum.energies())
            .filter(|(_, &e)| self.spectrum.is_ground(e))
            .map(|(a, _)| a.norm_sqr())
            .sum())
    }
}
