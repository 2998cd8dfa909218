//! Local optimal control of Bob's qubits: pulses, Fisher-information
//! objectives, gradient ascent and differential evolution.

mod de;
mod grape;
mod objective;
mod pulse;

use serde::{Deserialize, Serialize};

pub use de::{de_optimize, DeConfig};
pub use grape::{grape_optimize, GrapeConfig, STATIONARY_TOL, STEP_FLOOR};
pub use objective::{
    central_difference_gradient, Figure, FnObjective, PulseObjective, Scenario, ScenarioObjective,
};
pub use pulse::ControlPulse;

pub const DEFAULT_AMPLITUDE_MAX: f64 = 5.0;
/// Pulse segments per unit of evolution time.
pub const SEGMENTS_PER_UNIT_TIME: f64 = 10.0;

fn default_amplitude_max() -> f64 {
    DEFAULT_AMPLITUDE_MAX
}

/// `10·T` segments, at least one.
pub fn default_segments(total_time: f64) -> usize {
    ((SEGMENTS_PER_UNIT_TIME * total_time).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub best_pulse: ControlPulse,
    pub best_value: f64,
    /// Objective of each accepted iterate (GRAPE) or best member per generation (DE).
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub seed: u64,
}
