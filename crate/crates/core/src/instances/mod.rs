//! Benchmark instance families and text import formats.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.
//! The random stream is ChaCha20 seeded via `seed_from_u64`; the identifier
//! [`RNG_ALGORITHM`] is written into generated labels.

mod edge_list;
mod graph6;

pub use edge_list::parse_edge_list;
pub use graph6::{encode_graph6, parse_graph6, parse_graph6_lines};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingInstance;

/// Versioned name of the generator stream, recorded in instance labels.
pub const RNG_ALGORITHM: &str = "chacha20-v1";

/// Attempts made by the pairing model before giving up.
pub const DEFAULT_REGULAR_RETRIES: usize = 1000;

pub type Seed = u64;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `k`-th child stream: `mix64(base ^ k)`.
pub fn derive_seed(base: Seed, k: u64) -> Seed {
    mix64(base ^ k)
}

pub(crate) fn rng_for(seed: Seed) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Simple undirected graph with edges stored as sorted `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut es = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::input(format!("self-loop on vertex {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::input(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            es.push((i, j));
        }
        es.sort_unstable();
        if let Some(w) = es.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::input(format!("duplicate edge {:?}", w[0])));
        }
        Ok(Graph { n, edges: es })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_regular(&self, d: usize) -> bool {
        self.degrees().iter().all(|&k| k == d)
    }

    /// Unweighted MaxCut instance (all weights 1).
    pub fn to_unit_instance(&self, label: impl Into<String>) -> IsingInstance<f64> {
        IsingInstance::new(
            self.n.max(1),
            self.edges.iter().map(|&(i, j)| (i, j, 1.0)).collect(),
            vec![],
            label,
        )
        .expect("graph invariants imply a valid instance")
    }
}

/// Edge-weight law for weighted graph families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution {
    Unit,
    Poisson { lambda: f64 },
    Normal { mean: f64, std_dev: f64 },
    PlusMinusOne,
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightDistribution::Poisson { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::input(format!("Poisson mean must be positive, got {lambda}")))
            }
            WeightDistribution::Normal { mean, std_dev }
                if !(std_dev > 0.0 && std_dev.is_finite() && mean.is_finite()) =>
            {
                Err(Error::input(format!(
                    "Normal needs finite mean and positive std_dev, got ({mean}, {std_dev})"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn short_name(&self) -> String {
        match *self {
            WeightDistribution::Unit => "unit".into(),
            WeightDistribution::Poisson { lambda } => format!("poisson({lambda})"),
            WeightDistribution::Normal { mean, std_dev } => format!("normal({mean},{std_dev})"),
            WeightDistribution::PlusMinusOne => "pm1".into(),
        }
    }

    fn sampler(&self) -> Result<Box<dyn Fn(&mut ChaCha20Rng) -> f64>> {
        self.validate()?;
        Ok(match *self {
            WeightDistribution::Unit => Box::new(|_| 1.0),
            WeightDistribution::Poisson { lambda } => {
                let d = Poisson::new(lambda).map_err(|e| Error::input(e.to_string()))?;
                Box::new(move |rng| d.sample(rng))
            }
            WeightDistribution::Normal { mean, std_dev } => {
                let d = Normal::new(mean, std_dev).map_err(|e| Error::input(e.to_string()))?;
                Box::new(move |rng| d.sample(rng))
            }
            WeightDistribution::PlusMinusOne => {
                Box::new(|rng| if rng.random::<bool>() { 1.0 } else { -1.0 })
            }
        })
    }
}

/// Random `d`-regular simple graph via the pairing (configuration) model.
pub fn gen_regular(n: usize, d: usize, seed: Seed) -> Result<Graph> {
    gen_regular_with_retries(n, d, seed, DEFAULT_REGULAR_RETRIES)
}

pub fn gen_regular_with_retries(n: usize, d: usize, seed: Seed, retries: usize) -> Result<Graph> {
    if d >= n {
        return Err(Error::input(format!("degree {d} must be below vertex count {n}")));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::input(format!("n * d = {} is odd", n * d)));
    }
    let mut rng = rng_for(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adj = vec![false; n * n];
    'attempt: for _ in 0..retries {
        stubs.shuffle(&mut rng);
        adj.iter_mut().for_each(|a| *a = false);
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || adj[a * n + b] {
                continue 'attempt;
            }
            adj[a * n + b] = true;
            adj[b * n + a] = true;
            edges.push((a, b));
        }
        return Graph::new(n, edges);
    }
    Err(Error::Resource(format!(
        "no simple {d}-regular graph on {n} vertices after {retries} pairings"
    )))
}

/// `rows x cols` lattice with 4-neighbour edges; vertex `(r, c)` is `r * cols + c`.
pub fn grid_graph(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::input("grid dimensions must be at least 1"));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// One i.i.d. weight per edge (in sorted edge order); fields are zero.
///
/// Zero weights drawn from a Poisson law are kept as explicit couplings.
pub fn assign_weights(
    g: &Graph,
    dist: WeightDistribution,
    seed: Seed,
) -> Result<IsingInstance<f64>> {
    let draw = dist.sampler()?;
    let mut rng = rng_for(seed);
    let couplings = g
        .edges()
        .iter()
        .map(|&(i, j)| (i, j, draw(&mut rng)))
        .collect();
    IsingInstance::new(
        g.n().max(1),
        couplings,
        vec![],
        format!(
            "weighted(n={},m={},dist={})/seed={seed}/rng={RNG_ALGORITHM}",
            g.n(),
            g.edges().len(),
            dist.short_name()
        ),
    )
}

/// Sherrington-Kirkpatrick instance: all-to-all `+-1` couplings with a
/// homogeneous field `h0` on every spin.
pub fn gen_sk(n: usize, h0: f64, seed: Seed) -> Result<IsingInstance<f64>> {
    if n < 2 {
        return Err(Error::input("SK model needs at least 2 spins"));
    }
    if !h0.is_finite() {
        return Err(Error::input("field h0 must be finite"));
    }
    let mut rng = rng_for(seed);
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = if rng.random::<bool>() { 1.0 } else { -1.0 };
            couplings.push((i, j, w));
        }
    }
    IsingInstance::new(
        n,
        couplings,
        (0..n).map(|i| (i, h0)).collect(),
        format!("sk(n={n},h0={h0})/seed={seed}/rng={RNG_ALGORITHM}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_is_the_only_cubic_graph_on_four_vertices() {
        let g = gen_regular(4, 3, 11).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn regular_degree_audit() {
        for seed in 0..50 {
            let g = gen_regular(8, 3, seed).unwrap();
            assert!(g.is_regular(3));
            assert_eq!(g.edges().len(), 12);
        }
        let g = gen_regular(8, 3, 7).unwrap();
        assert_eq!(g.degrees(), vec![3; 8]);
    }

    #[test]
    fn regular_rejects_infeasible() {
        assert!(matches!(gen_regular(5, 3, 0), Err(Error::Input(_))));
        assert!(matches!(gen_regular(3, 3, 0), Err(Error::Input(_))));
    }

    #[test]
    fn regular_is_seed_deterministic() {
        assert_eq!(gen_regular(20, 3, 5).unwrap(), gen_regular(20, 3, 5).unwrap());
        assert_ne!(gen_regular(20, 3, 5).unwrap(), gen_regular(20, 3, 6).unwrap());
    }

    #[test]
    fn regular_retry_budget() {
        // K4 from a single pairing attempt almost always fails
        let failures = (0..20)
            .filter(|&s| gen_regular_with_retries(4, 3, s, 1).is_err())
            .count();
        assert!(failures > 0);
        assert!(matches!(
            (0..20)
                .map(|s| gen_regular_with_retries(4, 3, s, 1))
                .find(|r| r.is_err())
                .unwrap(),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn grid_edge_counts() {
        let g = grid_graph(2, 3).unwrap();
        assert_eq!((g.n(), g.edges().len()), (6, 7));
        assert_eq!(grid_graph(1, 2).unwrap().edges(), &[(0, 1)]);
        assert_eq!(grid_graph(3, 3).unwrap().edges().len(), 12);
        assert!(grid_graph(0, 3).is_err());
    }

    #[test]
    fn unit_weights_on_grid() {
        let inst = assign_weights(&grid_graph(2, 3).unwrap(), WeightDistribution::Unit, 0).unwrap();
        assert!(inst.couplings().iter().all(|&(_, _, w)| w == 1.0));
        assert!(!inst.has_fields());
    }

    #[test]
    fn normal_weights_include_negatives() {
        let g = gen_regular(14, 3, 1).unwrap();
        let inst = assign_weights(
            &g,
            WeightDistribution::Normal {
                mean: 0.0,
                std_dev: 1.0,
            },
            3,
        )
        .unwrap();
        assert!(inst.has_negative_couplings());
    }

    #[test]
    fn poisson_mean_audit() {
        let g = gen_regular(14, 3, 2).unwrap();
        let draws: Vec<f64> = (0..500u64)
            .flat_map(|s| {
                assign_weights(&g, WeightDistribution::Poisson { lambda: 1.0 }, s)
                    .unwrap()
                    .couplings()
                    .iter()
                    .map(|c| c.2)
                    .collect::<Vec<_>>()
            })
            .collect();
        assert!(draws.len() >= 10_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // variance of Poisson(1) is 1
        let sigma = 1.0 / (draws.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "mean {mean}");
        assert!(draws.iter().all(|&w| w >= 0.0 && w.fract() == 0.0));
    }

    #[test]
    fn invalid_distributions() {
        let g = grid_graph(1, 2).unwrap();
        assert!(assign_weights(&g, WeightDistribution::Poisson { lambda: 0.0 }, 0).is_err());
        assert!(assign_weights(
            &g,
            WeightDistribution::Normal {
                mean: 0.0,
                std_dev: -1.0
            },
            0
        )
        .is_err());
    }

    #[test]
    fn sk_shapes() {
        let a = gen_sk(3, 0.0, 1).unwrap();
        assert_eq!(a.couplings().len(), 3);
        assert!(!a.has_fields());
        let b = gen_sk(10, 0.5, 1).unwrap();
        assert_eq!(b.couplings().len(), 45);
        assert_eq!(b.fields().len(), 10);
        assert!(b.fields().iter().all(|&(_, w)| w == 0.5));
        assert!(b.couplings().iter().all(|&(_, _, w)| w == 1.0 || w == -1.0));
        assert!(gen_sk(1, 0.0, 0).is_err());
    }

    #[test]
    fn sk_h0_grid_has_eleven_points() {
        let insts: Vec<_> = (0..=10)
            .map(|k| gen_sk(14, k as f64 / 10.0, 42).unwrap())
            .collect();
        assert_eq!(insts.len(), 11);
        // same seed, same couplings across the field sweep
        assert!(insts.windows(2).all(|w| w[0].couplings() == w[1].couplings()));
    }

    #[test]
    fn sk_sign_balance() {
        let mut plus = 0usize;
        let mut total = 0usize;
        for s in 0..250u64 {
            for &(_, _, w) in gen_sk(10, 0.0, s).unwrap().couplings() {
                total += 1;
                plus += (w > 0.0) as usize;
            }
        }
        assert!(total >= 10_000);
        let frac = plus as f64 / total as f64;
        let sigma = 0.5 / (total as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "fraction {frac}");
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::BTreeSet<_> = (0..1000).map(|k| derive_seed(7, k)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
