//! Simulation and numerical verification for Crump-Mode-Jagers branching
//! processes and the collaboration random graph.

pub mod cmj;
pub mod coupling;
pub mod error;
pub mod exec;
pub mod graph;
pub mod malthus;
pub mod moments;
pub mod point_process;
pub mod rng;
pub mod stats;

pub use coupling::{FamilyTree, OffspringLaw};
pub use error::{Error, Result};
pub use exec::Threads;
pub use graph::{DegreeMode, GraphPath};
pub use malthus::{SolveReport, Tolerances};
pub use moments::{BoundReport, DeltaReport, MomentSeries};
pub use point_process::{Characteristic, EdgeLife, ModelParams, WeightTable};
pub use stats::Estimate;
