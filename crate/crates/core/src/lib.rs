pub mod chain;
pub mod error;
pub mod exponent;
pub mod game;
pub mod harness;
pub mod learner;
pub mod traffic;
