//! Equivariant shared-parameter policy and invariant critic.
//!
//! Every agent runs the same network Φ on its own view T_j(o) of the robot.
//! The symmetric outputs are used directly for the agent's limb; the central
//! outputs are mapped back to the base frame and averaged. The critic pools
//! Ψ(T_j(o)) by the mean before its head Θ, which makes V (and Q) invariant.

mod check;
mod critic;
mod policy;
mod structure;

pub use check::{critic_residual, policy_residuals, EquivarianceReport};
pub use critic::{Critic, CriticGrads, CriticMode, CriticTape};
pub use policy::{JointAction, Policy, PolicyGrads, PolicyTape};
pub use structure::{ActionMap, InputSpace, Structure};
