//! Noise simulation for measurement-based quantum computation on small
//! cluster states.
//!
//! The state engine is dense and generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix it to `f64`, which is what the analysis layer and
//! the command-line tool use.
//!
//! ```
//! use mbqc_noise::{ChannelKind, Engine, GateKind, NoiseAssignment};
//!
//! let engine = Engine::default();
//! let noise = NoiseAssignment::new().with(3, ChannelKind::Dephasing.at(0.25).unwrap());
//! let f = engine.formula(&GateKind::Identity, &noise).unwrap().value;
//! assert!((f - 0.75).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod cluster;
pub mod error;
pub mod fidelity;
pub mod noise;
pub mod patterns;
pub mod pauli;
pub mod qstate;
pub mod scalar;

pub use cluster::{
    build_cluster_state, cluster_state_from_stabilizers, stabilizer, stabilizers, Graph,
};
pub use error::{Error, Result};
pub use fidelity::{FidelityEngine, FidelityResult, Method, OracleReport, CROSS_CHECK_TOL};
pub use noise::{ChannelKind, ChannelSpec};
pub use patterns::{Basis, GateKind, MeasurementPattern, Registry};
pub use pauli::{Pauli, PauliString};
pub use qstate::MAX_QUBITS;
pub use scalar::Real;

/// Double-precision aliases.
pub type ComplexMatrix = qstate::ComplexMatrix<f64>;
pub type DensityMatrix = qstate::DensityMatrix<f64>;
pub type KrausChannel = noise::KrausChannel<f64>;
pub type NoiseAssignment = noise::NoiseAssignment<f64>;
pub type PauliSum = pauli::PauliSum<f64>;
pub type FidelityWitness = patterns::FidelityWitness<f64>;
pub type Engine = fidelity::FidelityEngine<f64>;
