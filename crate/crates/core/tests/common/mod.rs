//! Reference implementations shared by the integration tests.
//!
//! Nothing here calls into the simulator: energies are recomputed per
//! bitstring, operators are explicit dense matrices built from Kronecker
//! products (qubit 0 is the least significant bit), and time evolution uses a
//! Taylor-series matrix exponential.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use pentao::{Instance, LevelParams, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `sum w_ij z_i z_j + sum h_i z_i` with `z = 1 - 2x` and `x` the bits of `k`.
pub fn brute_energy(inst: &Instance, k: usize) -> f64 {
    let z = |i: usize| if (k >> i) & 1 == 1 { -1.0 } else { 1.0 };
    let pair: f64 = inst.couplings().iter().map(|&(i, j, w)| w * z(i) * z(j)).sum();
    let single: f64 = inst.fields().iter().map(|&(i, h)| h * z(i)).sum();
    pair + single
}

pub fn brute_spectrum(inst: &Instance) -> Vec<f64> {
    (0..1usize << inst.n()).map(|k| brute_energy(inst, k)).collect()
}

/// Random instance with Gaussian couplings on a random edge subset.
pub fn random_instance(rng: &mut ChaCha20Rng, n: usize, with_fields: bool) -> Instance {
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.6 {
                couplings.push((i, j, rng.sample::<f64, _>(StandardNormal)));
            }
        }
    }
    if couplings.is_empty() && n >= 2 {
        couplings.push((0, 1, 1.0));
    }
    let fields = if with_fields {
        let mut f = Vec::new();
        for i in 0..n {
            if rng.random::<f64>() < 0.7 {
                f.push((i, rng.sample::<f64, _>(StandardNormal)));
            }
        }
        if f.is_empty() {
            f.push((0, 0.5));
        }
        f
    } else {
        Vec::new()
    };
    Instance::new(n, couplings, fields, "random").unwrap()
}

pub fn random_schedule(rng: &mut ChaCha20Rng, p: usize) -> Schedule<f64> {
    Schedule::new(
        (0..p)
            .map(|_| LevelParams {
                gamma: rng.random_range(0.0..1.0),
                theta: rng.random_range(0.0..std::f64::consts::PI),
            })
            .collect(),
    )
}

/// Row-major square complex matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub dim: usize,
    pub data: Vec<C>,
}

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Dense {
            dim,
            data: vec![C::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C]]) -> Self {
        let dim = rows.len();
        Dense {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn at(&self, r: usize, c: usize) -> C {
        self.data[r * self.dim + c]
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Dense) -> Dense {
        Dense {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: C) -> Dense {
        Dense {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self ⊗ other`; `other` acts on the low-order bits.
    pub fn kron(&self, other: &Dense) -> Dense {
        let (a, b) = (self.dim, other.dim);
        let mut out = Self::zeros(a * b);
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.at(r1, c1);
                for r2 in 0..b {
                    for c2 in 0..b {
                        out.data[(r1 * b + r2) * a * b + c1 * b + c2] = x * other.at(r2, c2);
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        let d = self.dim;
        (0..d)
            .map(|r| (0..d).map(|c| self.data[r * d + c] * v[c]).sum())
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `exp(-i t H)` by scaling and squaring a truncated Taylor series.
    pub fn evolve(&self, t: f64) -> Dense {
        let a = self.scale(C::new(0.0, -t));
        let norm = a.max_abs() * a.dim as f64;
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = a.scale(C::new(0.5f64.powi(squarings as i32), 0.0));
        let mut term = Self::identity(self.dim);
        let mut sum = Self::identity(self.dim);
        for k in 1..30 {
            term = term.mul(&a).scale(C::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }
}

pub fn pauli_x() -> Dense {
    let (o, l) = (C::new(0.0, 0.0), C::new(1.0, 0.0));
    Dense::from_rows(&[&[o, l], &[l, o]])
}

pub fn pauli_y() -> Dense {
    let o = C::new(0.0, 0.0);
    Dense::from_rows(&[&[o, C::new(0.0, -1.0)], &[C::new(0.0, 1.0), o]])
}

pub fn pauli_z() -> Dense {
    let (o, l) = (C::new(0.0, 0.0), C::new(1.0, 0.0));
    Dense::from_rows(&[&[l, o], &[o, -l]])
}

/// Single-qubit operator `m` on qubit `q` of an `n`-qubit register.
pub fn on_qubit(n: usize, q: usize, m: &Dense) -> Dense {
    let mut out = Dense::identity(1);
    for k in (0..n).rev() {
        out = out.kron(&if k == q { m.clone() } else { Dense::identity(2) });
    }
    out
}

/// Cost Hamiltonian assembled from Pauli-Z products.
pub fn dense_cost(inst: &Instance) -> Dense {
    let n = inst.n();
    let mut h = Dense::zeros(1 << n);
    for &(i, j, w) in inst.couplings() {
        let zz = on_qubit(n, i, &pauli_z()).mul(&on_qubit(n, j, &pauli_z()));
        h = h.add(&zz.scale(C::new(w, 0.0)));
    }
    for &(i, w) in inst.fields() {
        h = h.add(&on_qubit(n, i, &pauli_z()).scale(C::new(w, 0.0)));
    }
    h
}

/// `sum_i X_i`.
pub fn dense_x_sum(n: usize) -> Dense {
    (0..n).fold(Dense::zeros(1 << n), |acc, q| acc.add(&on_qubit(n, q, &pauli_x())))
}

pub fn plus_state(n: usize) -> Vec<C> {
    let a = 1.0 / ((1usize << n) as f64).sqrt();
    vec![C::new(a, 0.0); 1 << n]
}

/// `prod_l exp(-i θ_l ΣX) exp(-i γ_l H_C) |+>`.
pub fn dense_qaoa(inst: &Instance, levels: &[(f64, f64)]) -> Vec<C> {
    let n = inst.n();
    let hc = dense_cost(inst);
    let hm = dense_x_sum(n);
    let mut psi = plus_state(n);
    for &(g, t) in levels {
        psi = hc.evolve(g).apply(&psi);
        psi = hm.evolve(t).apply(&psi);
    }
    psi
}

pub fn dense_expectation(op: &Dense, psi: &[C]) -> f64 {
    let v = op.apply(psi);
    psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C>().re
}

/// Summary statistics of a sample: mean and standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
