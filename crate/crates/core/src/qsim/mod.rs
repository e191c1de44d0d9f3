//! Open-system simulation of qubits dispersively read out through a cavity.

pub mod dataset;
pub mod liouville;
pub mod master;
pub mod ops;
pub mod pointer;
pub mod sme;
pub mod spec;
pub mod state;
pub mod timing;

pub use dataset::{generate_dataset, generate_trajectories, MeasurementDataset};
pub use master::{unconditional_evolve, EvolveOptions, Evolution};
pub use ops::{build_operators, OperatorSet, C64};
pub use pointer::{analytic_cavity_amplitude, steady_state_amplitude};
pub use sme::{simulate_homodyne_trajectory, HomodyneTrajectory, SmeIntegrator, TrajectoryOptions, TrajectoryRun};
pub use spec::{derive_dispersive_params, DispersiveParams, Model, QuantumSystemSpec};
pub use state::DensityMatrix;
pub use timing::Timing;
