pub mod envs;
pub mod error;
pub mod harness;
pub mod eval;
pub mod masa;
pub mod metrics;
pub mod net;
pub mod offline;
pub mod online;
pub mod seeding;
pub mod symmetry;

pub use error::{Error, Result};
