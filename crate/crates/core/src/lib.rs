//! Sparsity-constrained regularized loss minimization through its sparse
//! Lagrangian dual.

mod combin;
pub mod data;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod objective;
pub mod solvers;
pub mod vecops;

pub use combin::{binomial, ENUMERATION_LIMIT};
pub use error::{Error, Result};
pub use losses::{FeasibleInterval, LossModel};
pub use objective::{Dataset, DualState, PrimalState, ProblemInstance};
pub use vecops::{DenseVector, IndexSet, SparseSample};
