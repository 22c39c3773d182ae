//! Sparse linear bandits in the data-poor regime.
//!
//! The crate provides the environment model ([`model`]), exploration design
//! solvers ([`design`]), a coordinate-descent Lasso ([`lasso`]), the bandit
//! policies ([`algorithms`]), generators for the benchmark environments and
//! theoretical bounds ([`instances`]), and a reproducible experiment harness
//! ([`harness`]).

pub mod algorithms;
pub mod design;
pub mod error;
pub mod harness;
pub mod instances;
pub mod lasso;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    optimal_action, sample_reward, suboptimality_gap, Action, ActionSet, Bandit, InstanceDocument,
    RegretTrajectory, SparseInstance,
};
pub use rng::RngStream;
