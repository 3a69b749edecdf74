//! Statevector QAOA for Ising cost functions, with level-wise angle setting
//! from a fitted closed-form energy curve.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common double-precision types.
//!
//! ```
//! use pentao::{grid_graph, penta_o_run, Hamiltonian, PentaOConfig};
//!
//! let inst = grid_graph(2, 3).unwrap().to_unit_instance("grid");
//! let h = Hamiltonian::new(inst).unwrap();
//! let cfg = PentaOConfig { gamma0: 0.2, p_max: 3, ..Default::default() };
//! let (schedule, report) = penta_o_run(&h, &cfg).unwrap();
//! assert_eq!(schedule.depth(), 3);
//! assert!(report.j_trajectory[2] < report.j_initial);
//! ```

mod error;
pub mod instances;
pub mod ising;
pub mod metrics;
pub mod pentao;
mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use instances::{
    assign_weights, derive_seed, encode_graph6, gen_regular, gen_regular_with_retries, gen_sk,
    grid_graph, parse_edge_list, parse_graph6, parse_graph6_lines, Graph, Seed,
    WeightDistribution, RNG_ALGORITHM,
};
pub use ising::{diagonal, diagonal_with_cap, ground_state, IsingInstance, SpinConfig, Spectrum};
pub use metrics::{
    approx_ratio, convergence_point, crossover, p_scaling, tts_classical, tts_quantum,
    BoxStats, RatioConvention, RunReport, Scaling, TtsParams,
};
pub use pentao::{
    argmin_model, coefficients_from_observables, fit_trig, model_eval, penta_o_run, penta_o_step, probe_angles, EvalMode,
    PentaOConfig, ProbeMode, ProbeRecord, StepOutcome, StepRecord, TrialCounter, TrigModel,
};
pub use scalar::Real;
pub use simulator::{
    init_plus, CostHamiltonian, LevelParams, ObservableSet, Schedule, ShotSet, StateVector,
};

pub type Instance = IsingInstance<f64>;
pub type Instance32 = IsingInstance<f32>;
pub type State = StateVector<f64>;
pub type State32 = StateVector<f32>;
pub type Hamiltonian = CostHamiltonian<f64>;
pub type Hamiltonian32 = CostHamiltonian<f32>;
pub type Model = TrigModel<f64>;
pub type Model32 = TrigModel<f32>;
