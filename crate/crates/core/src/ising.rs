//! Ising / QUBO cost Hamiltonians and exhaustive spectrum evaluation.
//!
//! Bit convention (shared by every module): bit `i` of a basis index is the
//! `i`-th least significant bit, and maps to the spin `z_i = 1 - 2 x_i`.
//! Qubit indices are 0-based.

use std::collections::BTreeSet;
use std::convert::TryFrom;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default ceiling on the qubit count for anything that materializes `2^n`
/// entries.
pub const DEFAULT_QUBIT_CAP: usize = 26;

const PARALLEL_MIN_QUBITS: usize = 16;

/// Cost Hamiltonian `H = sum_{i<j} w_ij Z_i Z_j + sum_i w_ii Z_i`.
///
/// Couplings are kept sorted by `(i, j)` and fields by `i`, so two instances
/// with the same terms serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance<T>", bound = "T: Real")]
pub struct IsingInstance<T: Real> {
    n: usize,
    couplings: Vec<(usize, usize, T)>,
    fields: Vec<(usize, T)>,
    label: String,
}

#[derive(Deserialize)]
#[serde(bound = "T: Real")]
struct RawInstance<T: Real> {
    n: usize,
    #[serde(default)]
    couplings: Vec<(usize, usize, T)>,
    #[serde(default)]
    fields: Vec<(usize, T)>,
    #[serde(default)]
    label: String,
}

impl<T: Real> TryFrom<RawInstance<T>> for IsingInstance<T> {
    type Error = Error;

    fn try_from(raw: RawInstance<T>) -> Result<Self> {
        IsingInstance::new(raw.n, raw.couplings, raw.fields, raw.label)
    }
}

impl<T: Real> IsingInstance<T> {
    /// Validates and canonicalizes the terms. A coupling given as `(j, i)` with
    /// `j > i` is stored as `(i, j)`; a pair that appears twice (in either
    /// orientation) is rejected, as is a repeated field index.
    pub fn new(
        n: usize,
        couplings: Vec<(usize, usize, T)>,
        fields: Vec<(usize, T)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("instance needs at least one qubit"));
        }
        let mut seen = BTreeSet::new();
        let mut cs = Vec::with_capacity(couplings.len());
        for (a, b, w) in couplings {
            if a == b {
                return Err(Error::input(format!("coupling ({a}, {b}) is a self-loop")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::input(format!(
                    "coupling ({a}, {b}) out of range for n = {n}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::input(format!("coupling ({i}, {j}) has non-finite weight")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::input(format!("duplicate coupling ({i}, {j})")));
            }
            cs.push((i, j, w));
        }
        cs.sort_by_key(|&(i, j, _)| (i, j));

        let mut seen = BTreeSet::new();
        let mut fs = Vec::with_capacity(fields.len());
        for (i, w) in fields {
            if i >= n {
                return Err(Error::input(format!("field on qubit {i} out of range for n = {n}")));
            }
            if !w.is_finite() {
                return Err(Error::input(format!("field on qubit {i} has non-finite weight")));
            }
            if !seen.insert(i) {
                return Err(Error::input(format!("duplicate field on qubit {i}")));
            }
            fs.push((i, w));
        }
        fs.sort_by_key(|&(i, _)| i);

        Ok(IsingInstance {
            n,
            couplings: cs,
            fields: fs,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[(usize, usize, T)] {
        &self.couplings
    }

    pub fn fields(&self) -> &[(usize, T)] {
        &self.fields
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// True iff some local field is nonzero.
    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&(_, w)| w != T::zero())
    }

    pub fn has_negative_couplings(&self) -> bool {
        self.couplings.iter().any(|&(_, _, w)| w < T::zero())
    }

    /// Convert to another scalar type.
    pub fn cast<U: Real>(&self) -> IsingInstance<U> {
        IsingInstance {
            n: self.n,
            couplings: self
                .couplings
                .iter()
                .map(|&(i, j, w)| (i, j, U::lit(w.as_f64())))
                .collect(),
            fields: self.fields.iter().map(|&(i, w)| (i, U::lit(w.as_f64()))).collect(),
            label: self.label.clone(),
        }
    }

    /// `H` evaluated on a spin configuration.
    pub fn energy(&self, s: &SpinConfig) -> Result<T> {
        if s.len() != self.n {
            return Err(Error::input(format!(
                "spin configuration has length {}, instance has n = {}",
                s.len(),
                self.n
            )));
        }
        let z = |i: usize| if s.bit(i) { -T::one() } else { T::one() };
        let mut e = T::zero();
        for &(i, j, w) in &self.couplings {
            e += w * z(i) * z(j);
        }
        for &(i, w) in &self.fields {
            e += w * z(i);
        }
        Ok(e)
    }

    /// Energy of basis index `k` under the crate bit convention.
    #[inline]
    pub(crate) fn energy_of_index(&self, k: usize) -> T {
        let mut e = T::zero();
        for &(i, j, w) in &self.couplings {
            // z_i z_j = +1 iff the two bits agree
            if ((k >> i) ^ (k >> j)) & 1 == 0 {
                e += w;
            } else {
                e -= w;
            }
        }
        for &(i, w) in &self.fields {
            if (k >> i) & 1 == 0 {
                e += w;
            } else {
                e -= w;
            }
        }
        e
    }

    /// Divide every weight by the largest coupling magnitude.
    ///
    /// Falls back to the largest field magnitude when all couplings vanish.
    pub fn normalize(&self) -> Result<Self> {
        let max_c = self
            .couplings
            .iter()
            .fold(T::zero(), |m, &(_, _, w)| m.max(w.abs()));
        let scale = if max_c > T::zero() {
            max_c
        } else {
            self.fields.iter().fold(T::zero(), |m, &(_, w)| m.max(w.abs()))
        };
        if scale == T::zero() {
            return Err(Error::input("cannot normalize an instance with all-zero weights"));
        }
        Ok(IsingInstance {
            n: self.n,
            couplings: self.couplings.iter().map(|&(i, j, w)| (i, j, w / scale)).collect(),
            fields: self.fields.iter().map(|&(i, w)| (i, w / scale)).collect(),
            label: self.label.clone(),
        })
    }

    /// Sum of coupling weights, or of their magnitudes.
    pub fn total_weight(&self, absolute: bool) -> T {
        self.couplings
            .iter()
            .map(|&(_, _, w)| if absolute { w.abs() } else { w })
            .sum()
    }
}

/// A computational basis state as a bitstring `x_0 .. x_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig {
    bits: Vec<bool>,
}

impl SpinConfig {
    pub fn new(bits: Vec<bool>) -> Self {
        SpinConfig { bits }
    }

    /// Bitstring of basis index `k` (bit `i` is the `i`-th LSB).
    pub fn from_index(n: usize, k: usize) -> Self {
        SpinConfig {
            bits: (0..n).map(|i| (k >> i) & 1 == 1).collect(),
        }
    }

    /// Parse `"0110"`-style text where character `i` is `x_i`.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::input(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SpinConfig::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Spin `z_i = 1 - 2 x_i`.
    pub fn spin(&self, i: usize) -> i8 {
        if self.bits[i] {
            -1
        } else {
            1
        }
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0usize, |k, (i, &b)| if b { k | (1 << i) } else { k })
    }

    pub fn complement(&self) -> Self {
        SpinConfig {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Diagonal of the cost Hamiltonian in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    energies: Vec<T>,
    e_min: T,
    e_max: T,
}

impl<T: Real> Spectrum<T> {
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn e_min(&self) -> T {
        self.e_min
    }

    pub fn e_max(&self) -> T {
        self.e_max
    }

    pub fn n(&self) -> usize {
        self.energies.len().trailing_zeros() as usize
    }

    /// Absolute tolerance for treating two energies as equal: a few thousand
    /// ulps of the largest energy magnitude. Symmetric partners (for example
    /// spin-flip complements) can differ in the last bits because their terms
    /// are summed with different signs.
    pub fn tolerance(&self) -> T {
        let scale = self.e_min.abs().max(self.e_max.abs()).max(T::one());
        T::lit(1024.0) * T::epsilon() * scale
    }

    /// Whether `e` is a ground-state energy, up to [`Spectrum::tolerance`].
    pub fn is_ground(&self, e: T) -> bool {
        e <= self.e_min + self.tolerance()
    }

    /// Min-max normalized energy `(e - e_min) / (e_max - e_min)`.
    pub fn normalized_energy(&self, e: T) -> Result<T> {
        let span = self.e_max - self.e_min;
        if span <= T::zero() {
            return Err(Error::input("degenerate spectrum: e_max == e_min"));
        }
        Ok((e - self.e_min) / span)
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= usize::BITS as usize {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the exhaustive-evaluation cap of {cap}"
        )));
    }
    Ok(())
}

/// Full diagonal with the default qubit cap.
pub fn diagonal<T: Real>(inst: &IsingInstance<T>) -> Result<Spectrum<T>> {
    diagonal_with_cap(inst, DEFAULT_QUBIT_CAP)
}

pub fn diagonal_with_cap<T: Real>(inst: &IsingInstance<T>, cap: usize) -> Result<Spectrum<T>> {
    check_cap(inst.n, cap)?;
    let dim = 1usize << inst.n;
    let mut energies = vec![T::zero(); dim];
    if inst.n >= PARALLEL_MIN_QUBITS {
        energies
            .par_iter_mut()
            .enumerate()
            .for_each(|(k, e)| *e = inst.energy_of_index(k));
    } else {
        for (k, e) in energies.iter_mut().enumerate() {
            *e = inst.energy_of_index(k);
        }
    }
    let (e_min, e_max) = energies
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    Ok(Spectrum {
        energies,
        e_min,
        e_max,
    })
}

/// Ground-state energy and every minimizing bitstring, ascending by index.
pub fn ground_state<T: Real>(inst: &IsingInstance<T>) -> Result<(T, Vec<SpinConfig>)> {
    let spec = diagonal(inst)?;
    Ok(ground_state_of(&spec))
}

pub fn ground_state_of<T: Real>(spec: &Spectrum<T>) -> (T, Vec<SpinConfig>) {
    let n = spec.n();
    let argmins = spec
        .energies
        .iter()
        .enumerate()
        .filter(|&(_, &e)| spec.is_ground(e))
        .map(|(k, _)| SpinConfig::from_index(n, k))
        .collect();
    (spec.e_min, argmins)
}
