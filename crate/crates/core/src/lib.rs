//! Model compiler for generation-expansion planning with unit commitment,
//! storage, RoCoF inertia constraints and an SOCP relaxation of AC power flow.

pub mod blocks;
pub mod error;
pub mod inertia;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod socp;
pub mod system;
pub mod temporal;
pub mod workflows;

pub use error::{Error, Result};
