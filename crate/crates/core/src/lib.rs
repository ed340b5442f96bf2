//! Finite-dimensional quantum probability: states, channels and measurements,
//! channel-state duality, joint measurement statistics, and fixed points of
//! channels with the broadcasting and monogamy constructions built on them.

pub mod classical;
pub mod correlations;
pub mod duality;
pub mod error;
pub mod fixedpoints;
pub mod linalg;
pub mod qobjects;
pub mod random;
pub mod tol;

pub use classical::{Distribution, JointDistribution, StochasticMatrix};
pub use correlations::{JointTable, SampleReport};
pub use duality::{BipartiteState, IsoPair};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, Subsystem};
pub use qobjects::{Check, DensityOperator, Ensemble, EnsembleMember, KrausChannel, Povm};
pub use random::Rng64;
pub use fixedpoints::{BroadcastWitness, Decomposition, FixedBlock, FixedSpace};
