use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ControlPulse, OptimizerReport, PulseObjective};
use crate::error::{param, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeConfig {
    pub segments: usize,
    #[serde(default = "super::default_amplitude_max")]
    pub amplitude_max: f64,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_f")]
    pub f: f64,
    #[serde(default = "default_cr")]
    pub cr: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_population() -> usize {
    30
}

fn default_generations() -> usize {
    200
}

fn default_f() -> f64 {
    0.8
}

fn default_cr() -> f64 {
    0.9
}

impl DeConfig {
    pub fn with_segments(segments: usize) -> Self {
        Self {
            segments,
            amplitude_max: super::default_amplitude_max(),
            population: default_population(),
            generations: default_generations(),
            f: default_f(),
            cr: default_cr(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(param("segments", "at least one segment"));
        }
        if self.population < 4 {
            return Err(param("population", "rand/1 mutation needs at least 4 members"));
        }
        if !(self.amplitude_max >= 0.0 && self.amplitude_max.is_finite()) {
            return Err(param("amplitude_max", "must be finite and >= 0"));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(param("f", "differential weight must lie in (0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(param("cr", "crossover rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Independent stream for member `index` of generation `generation`, so
/// results do not depend on evaluation order.
fn member_rng(seed: u64, generation: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 32) | index as u64);
    rng
}

const INIT_GENERATION: u64 = u32::MAX as u64;

/// rand/1/bin differential evolution over the flattened amplitudes.
/// Member 0 starts as the zero pulse, the rest uniformly in the box.
pub fn de_optimize<O: PulseObjective + ?Sized>(
    objective: &O,
    duration: f64,
    qubits: usize,
    config: &DeConfig,
) -> Result<OptimizerReport> {
    config.validate()?;
    let template = ControlPulse::zero(duration, config.segments, qubits)?;
    let dim = template.amplitudes().len();
    let a_max = config.amplitude_max;
    let np = config.population;

    let mut members: Vec<Vec<f64>> = (0..np)
        .map(|i| {
            if i == 0 {
                vec![0.0; dim]
            } else {
                let mut rng = member_rng(config.seed, INIT_GENERATION, i);
                (0..dim).map(|_| rng.random_range(-a_max..=a_max)).collect()
            }
        })
        .collect();
    let mut scores: Vec<f64> = members
        .par_iter()
        .map(|x| objective.value(&template.with_amplitudes(x.clone())))
        .collect::<Result<_>>()?;
    let mut evaluations = np;
    let best_of = |scores: &[f64]| {
        scores
            .iter()
            .enumerate()
            .fold(0, |b, (i, s)| if *s > scores[b] { i } else { b })
    };
    let mut history = vec![scores[best_of(&scores)]];

    for generation in 0..config.generations as u64 {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut rng = member_rng(config.seed, generation, i);
                let mut pick = |exclude: &[usize]| loop {
                    let r = rng.random_range(0..np);
                    if !exclude.contains(&r) {
                        return r;
                    }
                };
                let r1 = pick(&[i]);
                let r2 = pick(&[i, r1]);
                let r3 = pick(&[i, r1, r2]);
                let j_rand = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == j_rand || rng.random::<f64>() < config.cr {
                            let v = members[r1][j] + config.f * (members[r2][j] - members[r3][j]);
                            v.clamp(-a_max, a_max)
                        } else {
                            members[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_scores: Vec<f64> = trials
            .par_iter()
            .map(|x| objective.value(&template.with_amplitudes(x.clone())))
            .collect::<Result<_>>()?;
        evaluations += np;
        for (i, (trial, score)) in trials.into_iter().zip(trial_scores).enumerate() {
            if score >= scores[i] {
                members[i] = trial;
                scores[i] = score;
            }
        }
        history.push(scores[best_of(&scores)]);
    }

    let b = best_of(&scores);
    Ok(OptimizerReport {
        best_pulse: template.with_amplitudes(members.swap_remove(b)),
        best_value: scores[b],
        history,
        evaluations,
        seed: config.seed,
    })
}
