use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{ghz, ChannelModel};
use crate::control::{DeConfig, Figure, GrapeConfig, Scenario, DEFAULT_AMPLITUDE_MAX, SEGMENTS_PER_UNIT_TIME};
use crate::dynamics::{
    Derivative, GpdReading, LocalEvolution, NoiseKind, NoiseModel, DEFAULT_DT, DP_RATE, GPD_PHI,
    GPD_RATE, GPD_THETA, PPD_RATE,
};
use crate::entanglement::{death_time, tripartite_negativity, NegativityTrajectory, DEATH_THRESHOLD};
use crate::error::{Error, Result};
use crate::protocol::Source;
use crate::quantum::DensityMatrix;

pub const DEFAULT_CHANNEL_STRENGTH: f64 = 0.06;
pub const DEFAULT_OMEGA: f64 = 1.0;
/// Final time used for the depolarizing family.
pub const DP_FINAL_TIME: f64 = 8.0;
/// Upper limit on the final time derived from the death time.
pub const FINAL_TIME_CAP: f64 = 10.0;
pub const NEGATIVITY_STEP: f64 = 0.5;
pub const NEGATIVITY_HORIZON: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionNoise {
    Gpd,
    Ppd,
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Ideal,
    /// Symmetric (Werner) depolarization, external source.
    Dp,
    /// Asymmetric depolarization of the transmitted qubits, Alice as source.
    Adp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Grape,
    De,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrape {
    step: Option<f64>,
    iterations: Option<usize>,
    grad_step: Option<f64>,
    kick: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDe {
    population: Option<usize>,
    generations: Option<usize>,
    f: Option<f64>,
    cr: Option<f64>,
}

/// Scenario document as written by the user; every field but the evolution
/// noise may be omitted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    evolution_noise: Option<EvolutionNoise>,
    channel: Option<ChannelKind>,
    source: Option<Source>,
    gamma: Option<f64>,
    theta: Option<f64>,
    phi: Option<f64>,
    gpd_reading: Option<GpdReading>,
    lambda_channel: Option<f64>,
    gamma_channel: Option<f64>,
    omega: Option<f64>,
    dt: Option<f64>,
    /// Central-difference step; the exact derivative is used when absent.
    delta_omega: Option<f64>,
    controlled: Option<bool>,
    objective: Option<Figure>,
    optimizer: Option<OptimizerKind>,
    t_final: Option<f64>,
    t_grid: Option<Vec<f64>>,
    negativity_grid: Option<Vec<f64>>,
    t: Option<f64>,
    segments_per_unit_time: Option<f64>,
    amplitude_max: Option<f64>,
    grape: Option<RawGrape>,
    de: Option<RawDe>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrapeParams {
    pub step: f64,
    pub iterations: usize,
    pub grad_step: f64,
    pub kick: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    pub population: usize,
    pub generations: usize,
    pub f: f64,
    pub cr: f64,
}

/// Fully resolved scenario: one evolution noise, one channel, optimizer
/// settings and time grids. Serializes with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub evolution_noise: EvolutionNoise,
    pub channel: ChannelKind,
    pub source: Source,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gpd_reading: Option<GpdReading>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_channel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_channel: Option<f64>,
    pub omega: f64,
    pub dt: f64,
    pub derivative: Derivative,
    pub controlled: bool,
    pub objective: Figure,
    pub optimizer: OptimizerKind,
    pub t_final: f64,
    pub t_grid: Vec<f64>,
    pub negativity_grid: Vec<f64>,
    pub t: f64,
    pub segments_per_unit_time: f64,
    pub amplitude_max: f64,
    pub grape: GrapeParams,
    pub de: DeParams,
    pub seed: u64,
}

fn invalid(field: &str, detail: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {detail}"))
}

fn check_positive(field: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(field, format!("{v} must be positive and finite")));
    }
    Ok(v)
}

fn check_grid(field: &str, grid: &[f64], allow_zero: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(field, "must be strictly increasing"));
    }
    let lo = grid[0];
    if !(lo > 0.0 || (allow_zero && lo == 0.0)) || grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid(field, "times must be finite and positive"));
    }
    Ok(())
}

/// `start, start + step, …` up to and including `end`.
fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_config(path)?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), strip(e))))
    }

    /// One of the nine noise combinations with every default.
    pub fn table_entry(noise: EvolutionNoise, channel: ChannelKind) -> Result<Self> {
        Self::resolve(RawScenario {
            evolution_noise: Some(noise),
            channel: Some(channel),
            ..Default::default()
        })
    }

    /// All nine evolution-noise × channel combinations.
    pub fn table() -> Result<Vec<Self>> {
        let mut out = Vec::with_capacity(9);
        for noise in [EvolutionNoise::Gpd, EvolutionNoise::Ppd, EvolutionNoise::Dp] {
            for channel in [ChannelKind::Ideal, ChannelKind::Dp, ChannelKind::Adp] {
                out.push(Self::table_entry(noise, channel)?);
            }
        }
        Ok(out)
    }

    fn resolve(raw: RawScenario) -> Result<Self> {
        let noise = raw
            .evolution_noise
            .ok_or_else(|| invalid("evolution_noise", "required (gpd, ppd or dp)"))?;
        let channel = raw.channel.unwrap_or(ChannelKind::Ideal);
        let source = match (channel, raw.source) {
            (ChannelKind::Adp, Some(Source::External)) => {
                return Err(invalid("source", "channel adp requires source alice"))
            }
            (ChannelKind::Dp, Some(Source::Alice)) => {
                return Err(invalid("source", "channel dp requires source external"))
            }
            (ChannelKind::Dp, _) => Source::External,
            (_, Some(s)) => s,
            (_, None) => Source::Alice,
        };
        let gamma = raw.gamma.unwrap_or(match noise {
            EvolutionNoise::Gpd => GPD_RATE,
            EvolutionNoise::Ppd => PPD_RATE,
            EvolutionNoise::Dp => DP_RATE,
        });
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("{gamma} must be finite and >= 0")));
        }
        let is_gpd = noise == EvolutionNoise::Gpd;
        if !is_gpd && (raw.theta.is_some() || raw.phi.is_some() || raw.gpd_reading.is_some()) {
            return Err(invalid("theta/phi/gpd_reading", "only valid with evolution_noise gpd"));
        }
        let (theta, phi, gpd_reading) = if is_gpd {
            (
                Some(raw.theta.unwrap_or(GPD_THETA)),
                Some(raw.phi.unwrap_or(GPD_PHI)),
                Some(raw.gpd_reading.unwrap_or_default()),
            )
        } else {
            (None, None, None)
        };
        let lambda_channel = match channel {
            ChannelKind::Dp => Some(raw.lambda_channel.unwrap_or(DEFAULT_CHANNEL_STRENGTH)),
            _ if raw.lambda_channel.is_some() => {
                return Err(invalid("lambda_channel", "only valid with channel dp"))
            }
            _ => None,
        };
        let gamma_channel = match channel {
            ChannelKind::Adp => Some(raw.gamma_channel.unwrap_or(DEFAULT_CHANNEL_STRENGTH)),
            _ if raw.gamma_channel.is_some() => {
                return Err(invalid("gamma_channel", "only valid with channel adp"))
            }
            _ => None,
        };
        let omega = raw.omega.unwrap_or(DEFAULT_OMEGA);
        if !omega.is_finite() {
            return Err(invalid("omega", "must be finite"));
        }
        let dt = check_positive("dt", raw.dt.unwrap_or(DEFAULT_DT))?;
        let derivative = raw.delta_omega.map_or(Derivative::Exact, Derivative::CentralDifference);
        derivative.validate().map_err(|e| invalid("delta_omega", e))?;
        let optimizer = raw.optimizer.unwrap_or(match noise {
            EvolutionNoise::Dp => OptimizerKind::De,
            _ => OptimizerKind::Grape,
        });
        let rg = raw.grape.unwrap_or_default();
        let rd = raw.de.unwrap_or_default();
        let gdef = GrapeConfig::with_segments(1);
        let ddef = DeConfig::with_segments(1);
        let grape = GrapeParams {
            step: rg.step.unwrap_or(gdef.step),
            iterations: rg.iterations.unwrap_or(gdef.iterations),
            grad_step: rg.grad_step.unwrap_or(gdef.grad_step),
            kick: rg.kick.unwrap_or(gdef.kick),
        };
        let de = DeParams {
            population: rd.population.unwrap_or(ddef.population),
            generations: rd.generations.unwrap_or(ddef.generations),
            f: rd.f.unwrap_or(ddef.f),
            cr: rd.cr.unwrap_or(ddef.cr),
        };
        let amplitude_max = raw.amplitude_max.unwrap_or(DEFAULT_AMPLITUDE_MAX);
        let segments_per_unit_time =
            check_positive("segments_per_unit_time", raw.segments_per_unit_time.unwrap_or(SEGMENTS_PER_UNIT_TIME))?;

        let mut spec = ScenarioSpec {
            evolution_noise: noise,
            channel,
            source,
            gamma,
            theta,
            phi,
            gpd_reading,
            lambda_channel,
            gamma_channel,
            omega,
            dt,
            derivative,
            controlled: raw.controlled.unwrap_or(true),
            objective: raw.objective.unwrap_or(Figure::Qfi),
            optimizer,
            t_final: 0.0,
            t_grid: Vec::new(),
            negativity_grid: raw
                .negativity_grid
                .unwrap_or_else(|| uniform_grid(0.0, NEGATIVITY_HORIZON, NEGATIVITY_STEP)),
            t: 0.0,
            segments_per_unit_time,
            amplitude_max,
            grape,
            de,
            seed: raw.seed.unwrap_or(0),
        };
        spec.channel_model().validate().map_err(|e| invalid("channel strength", e))?;
        spec.grape_config(1.0)
            .validate()
            .map_err(|e| invalid("grape", e))?;
        spec.de_config(1.0).validate().map_err(|e| invalid("de", e))?;
        check_grid("negativity_grid", &spec.negativity_grid, true)?;

        spec.t_final = match raw.t_final {
            Some(t) => check_positive("t_final", t)?,
            None => spec.default_final_time()?,
        };
        spec.t_grid = raw
            .t_grid
            .unwrap_or_else(|| uniform_grid(1.0, spec.t_final, 1.0));
        check_grid("t_grid", &spec.t_grid, false)?;
        spec.t = check_positive("t", raw.t.unwrap_or(spec.t_final))?;
        Ok(spec)
    }

    /// 8 for the depolarizing family; otherwise the last whole time before
    /// the uncontrolled tripartite negativity dies, capped at 10.
    fn default_final_time(&self) -> Result<f64> {
        if self.evolution_noise == EvolutionNoise::Dp {
            return Ok(DP_FINAL_TIME);
        }
        let grid = uniform_grid(0.0, FINAL_TIME_CAP + 1.0, NEGATIVITY_STEP);
        let traj = self.uncontrolled_negativity(&grid)?;
        Ok(match death_time(&traj, DEATH_THRESHOLD)? {
            Some(t) => t.floor().clamp(1.0, FINAL_TIME_CAP),
            None => FINAL_TIME_CAP,
        })
    }

    /// Short label such as `GPD`, `DP+PPD` or `ADP+DP`.
    pub fn tag(&self) -> String {
        let noise = match self.evolution_noise {
            EvolutionNoise::Gpd => "GPD",
            EvolutionNoise::Ppd => "PPD",
            EvolutionNoise::Dp => "DP",
        };
        match self.channel {
            ChannelKind::Ideal => noise.to_string(),
            ChannelKind::Dp => format!("DP+{noise}"),
            ChannelKind::Adp => format!("ADP+{noise}"),
        }
    }

    pub fn channel_model(&self) -> ChannelModel {
        match self.channel {
            ChannelKind::Ideal => ChannelModel::Ideal,
            ChannelKind::Dp => ChannelModel::SymmetricDepolarize {
                lambda: self.lambda_channel.unwrap_or(DEFAULT_CHANNEL_STRENGTH),
            },
            ChannelKind::Adp => ChannelModel::AsymmetricDepolarize {
                gamma: self.gamma_channel.unwrap_or(DEFAULT_CHANNEL_STRENGTH),
            },
        }
    }

    pub fn noise_kind(&self) -> NoiseKind {
        match self.evolution_noise {
            EvolutionNoise::Gpd => NoiseKind::Gpd {
                rate: self.gamma,
                theta: self.theta.unwrap_or(GPD_THETA),
                phi: self.phi.unwrap_or(GPD_PHI),
                reading: self.gpd_reading.unwrap_or_default(),
            },
            EvolutionNoise::Ppd => NoiseKind::Ppd { rate: self.gamma },
            EvolutionNoise::Dp => NoiseKind::Dp { rate: self.gamma },
        }
    }

    /// Noise on Bob's two qubits.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise_kind(), vec![1, 2])
    }

    /// GHZ₃ after the distribution channel.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        self.channel_model().apply(&ghz(3)?)
    }

    pub fn scenario_at(&self, total_time: f64) -> Result<Scenario> {
        Scenario::new(self.initial_state()?, self.noise_model()?, self.omega, total_time)?
            .with_dt(self.dt)?
            .with_derivative(self.derivative)
    }

    pub fn segments_at(&self, total_time: f64) -> usize {
        ((self.segments_per_unit_time * total_time).round() as usize).max(1)
    }

    pub fn grape_config(&self, total_time: f64) -> GrapeConfig {
        GrapeConfig {
            segments: self.segments_at(total_time),
            amplitude_max: self.amplitude_max,
            step: self.grape.step,
            iterations: self.grape.iterations,
            grad_step: self.grape.grad_step,
            kick: self.grape.kick,
            seed: self.seed,
        }
    }

    pub fn de_config(&self, total_time: f64) -> DeConfig {
        DeConfig {
            segments: self.segments_at(total_time),
            amplitude_max: self.amplitude_max,
            population: self.de.population,
            generations: self.de.generations,
            f: self.de.f,
            cr: self.de.cr,
            seed: self.seed,
        }
    }

    /// Uncontrolled tripartite negativity on `grid`.
    pub fn uncontrolled_negativity(&self, grid: &[f64]) -> Result<NegativityTrajectory> {
        let init = self.initial_state()?;
        let ev = LocalEvolution::new(3, vec![1, 2], self.noise_model()?)?;
        let values = grid
            .iter()
            .map(|&t| {
                let rho = ev.evolve_matrix(init.data(), self.omega, None, t, self.dt)?;
                let rho = DensityMatrix::from_evolved(
                    rho,
                    init.register().clone(),
                    crate::dynamics::PROPAGATED_TRACE_TOL,
                    crate::dynamics::PROPAGATED_EIGEN_FLOOR,
                )?;
                tripartite_negativity(&rho)
            })
            .collect::<Result<Vec<_>>>()?;
        NegativityTrajectory::new(grid.to_vec(), values, self.tag())
    }
}

pub(crate) fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(s) => s,
        other => other.to_string(),
    }
}
