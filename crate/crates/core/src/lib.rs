//! Secure remote sensing with shared GHZ states: noisy distribution, Lindblad
//! evolution under local optimal control, and Fisher-information-limited
//! estimation of a phase rate held by a remote party.

pub mod channels;
pub mod control;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod metrology;
pub mod protocol;
pub mod quantum;
pub mod runner;

pub use error::{Error, Result};
