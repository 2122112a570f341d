//! Cooperative sensor network localization from noisy range measurements by
//! alternating minimization over sensor clusters.

pub mod clustering;
pub mod error;
pub mod experiment;
pub mod instance_io;
pub mod matrices;
pub mod metrics;
pub mod netgen;
pub mod network;
pub mod rng;
pub mod solver;
pub mod sparse;

pub use clustering::{ClusterKind, Clustering};
pub use error::{Error, Result};
pub use matrices::ProblemMatrices;
pub use netgen::{GenSpec, Realization};
pub use network::{Network, NetworkParts, Node};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use metrics::{MessageLedger, MethodKind, RunReport};
