//! Surface-code toolkit: rotated lattice construction, Pauli noise, faulty
//! syndrome extraction, space-time matching decoder, logical error estimation,
//! device-topology embedding and Pauli-frame circuit sampling.

pub mod decoder;
pub mod estimate;
pub mod frame;
pub mod layout;
pub mod noise;
pub mod topology;

pub use decoder::{decode, CorrectionSet, DecodeOutcome, Decoder, DecoderConfig, MatchingGraph, SyndromeHistory};
pub use estimate::{logical_error_rate, logical_error_rate_with, wilson_interval, LogicalErrorEstimate};
pub use frame::{apply_corrections, deutsch_jozsa_constant, deutsch_jozsa_demo, pauli_frame_simulate, Circuit, Counts, DemoReport, Gate};
pub use layout::{build_layout, CheckKind, Stabilizer, SurfaceCodeLayout};
pub use noise::{apply_depolarizing, measure_syndromes, true_syndrome, ErrorState, NoiseModel, Pauli, Syndrome};
pub use topology::{generate_decoder_for_topology, DeviceEmbedding, Topology};

#[derive(Debug, thiserror::Error)]
pub enum QecError {
    #[error("code distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),
    #[error("{count} defects exceed the exact matcher limit of {limit}")]
    TooManyDefects { count: usize, limit: usize },
    #[error("inconsistent syndrome history: {0}")]
    InconsistentHistory(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("topology unsupported: {0}")]
    TopologyUnsupported(String),
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),
    #[error("correction covers {found} qubits but outcomes have {expected} bits")]
    LengthMismatch { expected: usize, found: usize },
}

impl QecError {
    pub fn kind(&self) -> &'static str {
        match self {
            QecError::InvalidDistance(_) => "invalid_distance",
            QecError::InvalidProbability { .. } => "invalid_probability",
            QecError::InvalidConfig(_) => "invalid_config",
            QecError::TooManyDefects { .. } => "too_many_defects",
            QecError::InconsistentHistory(_) => "inconsistent_history",
            QecError::InvalidTopology(_) => "invalid_topology",
            QecError::TopologyUnsupported(_) => "topology_unsupported",
            QecError::UnsupportedGate(_) => "unsupported_gate",
            QecError::LengthMismatch { .. } => "length_mismatch",
        }
    }
}
