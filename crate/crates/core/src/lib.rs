//! Slice-to-learn simulator: AI training services competing for edge CPU and
//! RAN bandwidth, with EXP3 and DQN slicing agents and the experiment harness
//! that compares them.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness and CLI use.

pub mod dqn;
pub mod env;
pub mod exp3;
pub mod harness;
pub mod scalar;

pub use scalar::Real;

pub type Env = env::SlicingEnv<f64>;
pub type EnvConfig = env::EnvConfig<f64>;
pub type StepOutcome = env::StepOutcome<f64>;
pub type Exp3Agent = exp3::Exp3<f64>;
pub type DqnAgent = dqn::DqnAgent<f64>;
