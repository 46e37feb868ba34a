//! Legendrian surfaces in V2(R4) and in the Heisenberg group: exact contact geometry,
//! discrete immersions, the penalized area E_eps with its first variation, Hamiltonian
//! descent, and gauge/monotonicity diagnostics.

pub mod corpus;
pub mod curvature;
pub mod descent;
pub mod energy;
pub mod error;
pub mod flow;
pub mod hamiltonian;
pub mod heisenberg;
pub mod identities;
pub mod immersion;
pub mod linalg;
pub mod mesh;
pub mod monotonicity;
pub mod refinement;
pub mod stationarity;
pub mod stiefel;
pub mod target;

pub use error::{Error, Result};
pub use linalg::Point;
pub use target::Target;
