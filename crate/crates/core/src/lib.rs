//! Uniform random trees with prescribed vertex degrees at every height.
//!
//! The crate samples such trees from a [`DegreeSchedule`], extracts the
//! genealogical coalescent of uniformly chosen vertices, simulates the
//! continuous growth-coalescent driven by `(nu, rho, Theta)` and compares
//! the two through distance-matrix ensembles. A branching process in varying
//! environment is provided as a generator of schedules.

pub mod compare;
pub mod discrete;
mod error;
pub mod gwve;
pub mod limit;
pub mod rng;
pub mod schedule;
pub mod trail;
pub mod tree;

pub use error::{Error, Result};
pub use schedule::{DegreeSchedule, Row};
pub use tree::{Tree, VertexRef};
