//! Digital quantum simulation of a dissipative spin-1 limit-cycle oscillator.
//!
//! A single spin-1 system hosting a limit cycle (the dissipatively stabilized
//! state |0⟩) is encoded in two qubits and driven by a weak external signal.
//! One Trotter timestep is compiled into single-qubit rotations, controlled
//! gates, and ancilla-mediated measure-and-reset dissipation. Many stochastic
//! runs of the circuit realize a photon-counting quantum-trajectory unraveling
//! whose ensemble average reproduces the master equation; an exact
//! density-matrix integrator serves as the independent ground truth.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, Hermitian eigensolver, propagators
//! - [`rng`]: counter-based random streams for reproducible parallel sampling
//! - [`statevec`]: few-qubit pure-state circuit engine
//! - [`spin1`]: spin-1 model parameters, two-qubit encoding, circuit builders
//! - [`lindblad`]: master-equation right-hand side and RK4 reference solver
//! - [`channel`]: deterministic density-matrix propagation of circuits
//! - [`trajectory`]: stochastic shot engine and ensemble statistics
//! - [`noise`]: depolarizing and readout-flip error models
//! - [`tomography`]: simulated-shot state tomography and readout mitigation
//! - [`experiments`]: observable extraction, presets, tabular output
//! - [`verify`]: end-to-end verification suite

pub mod channel;
pub mod experiments;
pub mod lindblad;
pub mod linalg;
pub mod noise;
pub mod rng;
pub mod spin1;
pub mod statevec;
pub mod tomography;
pub mod trajectory;
pub mod verify;

pub use experiments::{run_preset, Engine, ExperimentSpec, Preset, ResultTable};
pub use lindblad::{integrate_lindblad, lindblad_rhs, DensityMatrix, LindbladModel};
pub use noise::NoiseParams;
pub use spin1::{SpinModelParams, SpinState, TrotterVariant};
pub use statevec::{GateOp, QuantumCircuit, StateVector};
pub use trajectory::{run_ensemble, run_trajectory, TrajectoryConfig};

use thiserror::Error;

/// Errors shared across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("control and target coincide on qubit {qubit}")]
    ControlEqualsTarget { qubit: usize },
    #[error("invalid state vector: {0}")]
    InvalidState(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("jump probability {p} outside [0, 1); reduce the rate or the timestep")]
    JumpProbabilityOutOfRange { p: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integrator tolerance {tol} unreachable within the step budget")]
    ToleranceUnreachable { tol: f64 },
    #[error("surplus-state weight {rho_xx} too close to 1; spin block renormalization is degenerate")]
    DegenerateRenormalization { rho_xx: f64 },
    #[error("maximum of {max} Trotter steps in hardware-faithful mode, requested {requested}")]
    HardwareStepLimit { requested: usize, max: usize },
    #[error("empty counts table")]
    EmptyCounts,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid experiment grid: {0}")]
    InvalidGrid(String),
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
