//! Independent checks shared by the test targets of this workspace.
#![allow(dead_code)]

pub mod dqn;
pub mod env_oracle;
pub mod exp3;
