//! Rate functions, exact enumeration, conditioned sampling and optimal
//! trajectories for directed lattice walks with weighted steps.

pub mod config;
pub mod domain;
pub mod enumerate;
pub mod exact;
pub mod known;
pub mod lagrangean;
pub mod lattice;
pub mod passage;
pub mod sampler;
pub mod stats;
pub mod tangent;
pub mod variational;
pub mod walk;

pub use enumerate::{count, count_between, count_q, LatticePath, Mode, PartitionValue, QWeight};
pub use lagrangean::{derivatives, lagrangean, solve_saddle, LagrangeanTable, SaddlePoint};
pub use walk::{Step, WalkModel};
