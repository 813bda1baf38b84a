//! Verification of feed-forward ReLU networks via symbolic interval
//! propagation with fresh variables and input-splitting branch and bound.

pub mod cli;
pub mod model_io;
pub mod optimizer;
pub mod relaxation;
pub mod symbolic;
pub mod testkit;

pub use model_io::{Hyperrectangle, Network, Objective, VerificationProblem};
pub use optimizer::{solve, SolverConfig, Verdict, VerdictReport};
pub use relaxation::{forward_pass, FreshVarConfig};
pub use symbolic::SymbolicIntervalFV;
