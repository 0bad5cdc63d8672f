//! Equilibrium approximation for normal-form games with permutation-equivariant
//! models: games and strategies, exploitability metrics, exact solvers, an MLP
//! approximator with orbit-averaging projections, SGD training and experiments.

pub mod approximator;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod game;
pub mod io;
pub mod metrics;
pub mod solvers;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
pub use game::{Game, GamePermutation, GameShape, JointStrategy, PlayerPermutation, ProductStrategy, Strategy};
pub use metrics::SolutionConcept;
pub use training::TrainConfig;
