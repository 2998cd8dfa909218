use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ControlPulse, OptimizerReport, PulseObjective};
use crate::error::{param, Result};

/// Step sizes below this end the ascent.
pub const STEP_FLOOR: f64 = 1e-6;
/// Relative gradient size treated as a stationary point.
pub const STATIONARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrapeConfig {
    pub segments: usize,
    #[serde(default = "super::default_amplitude_max")]
    pub amplitude_max: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_grad_step")]
    pub grad_step: f64,
    /// Half-width of the seeded random restart used when the zero pulse is stationary.
    #[serde(default = "default_kick")]
    pub kick: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_step() -> f64 {
    0.1
}

fn default_iterations() -> usize {
    50
}

fn default_grad_step() -> f64 {
    1e-4
}

fn default_kick() -> f64 {
    0.1
}

impl GrapeConfig {
    /// Defaults with `segments` pieces.
    pub fn with_segments(segments: usize) -> Self {
        Self {
            segments,
            amplitude_max: super::default_amplitude_max(),
            step: default_step(),
            iterations: default_iterations(),
            grad_step: default_grad_step(),
            kick: default_kick(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(param("segments", "at least one segment"));
        }
        if self.iterations == 0 {
            return Err(param("iterations", "at least one iteration"));
        }
        if !(self.amplitude_max >= 0.0 && self.amplitude_max.is_finite()) {
            return Err(param("amplitude_max", "must be finite and >= 0"));
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return Err(param("step", "must be finite and >= 0"));
        }
        if !(self.grad_step > 0.0 && self.grad_step.is_finite()) {
            return Err(param("grad_step", "must be positive"));
        }
        if !(self.kick >= 0.0 && self.kick.is_finite()) {
            return Err(param("kick", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Gradient ascent from the zero pulse, projected onto the amplitude box.
/// A step that fails to improve is halved and retried; once it drops below
/// [`STEP_FLOOR`] the search stops.
///
/// Symmetric noise can make the zero pulse a stationary point (often a
/// saddle). The ascent then restarts once from a seeded uniform pulse in
/// `±kick`. The zero pulse stays the fallback, so the result never falls
/// below the uncontrolled value.
pub fn grape_optimize<O: PulseObjective + ?Sized>(
    objective: &O,
    duration: f64,
    qubits: usize,
    config: &GrapeConfig,
) -> Result<OptimizerReport> {
    config.validate()?;
    let mut pulse = ControlPulse::zero(duration, config.segments, qubits)?;
    let mut current = objective.value(&pulse)?;
    let mut best = (pulse.clone(), current);
    let mut evaluations = 1;
    let mut history = vec![current];
    let mut step = config.step;
    let mut restarted = config.kick == 0.0;
    'outer: for _ in 0..config.iterations {
        if step < STEP_FLOOR {
            break;
        }
        let grad = objective.gradient(&pulse, config.grad_step)?;
        evaluations += 2 * grad.len();
        let size = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if size <= STATIONARY_TOL * current.abs().max(1.0) {
            if restarted {
                break;
            }
            restarted = true;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let amps = (0..pulse.amplitudes().len())
                .map(|_| rng.random_range(-config.kick..=config.kick).clamp(-config.amplitude_max, config.amplitude_max))
                .collect();
            pulse = pulse.with_amplitudes(amps);
            current = objective.value(&pulse)?;
            evaluations += 1;
            continue;
        }
        loop {
            let amps = pulse
                .amplitudes()
                .iter()
                .zip(&grad)
                .map(|(a, g)| (a + step * g).clamp(-config.amplitude_max, config.amplitude_max))
                .collect();
            let candidate = pulse.with_amplitudes(amps);
            let value = objective.value(&candidate)?;
            evaluations += 1;
            if value > current {
                current = value;
                pulse = candidate;
                if value > best.1 {
                    best = (pulse.clone(), value);
                }
                history.push(best.1);
                break;
            }
            step *= 0.5;
            if step < STEP_FLOOR {
                break 'outer;
            }
        }
    }
    Ok(OptimizerReport {
        best_pulse: best.0,
        best_value: best.1,
        history,
        evaluations,
        seed: config.seed,
    })
}
