//! The secure remote-sensing protocol: GHZ distribution, channel
//! verification, encoding, σx measurement rounds and parity estimation.

mod sampling;

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{ghz_on, ChannelModel};
use crate::control::ControlPulse;
use crate::dynamics::{
    LocalEvolution, NoiseKind, NoiseModel, DEFAULT_DT, PROPAGATED_EIGEN_FLOOR, PROPAGATED_TRACE_TOL,
};
use crate::error::{param, Result};
use crate::quantum::{c, DensityMatrix, QubitRegister};

pub use sampling::{measure_round, RoundOutcome, RoundSampler};

/// Who prepares the GHZ states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Alice,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackModel {
    #[default]
    None,
    /// Eve measures a fraction of the transmitted copies in the computational
    /// basis and resends what she saw.
    InterceptResendZ { fraction: f64 },
    /// Extra Z rotation `β·t_s` on every transmitted qubit.
    BiasInjection { beta: f64 },
}

impl AttackModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackModel::None => Ok(()),
            AttackModel::InterceptResendZ { fraction } => {
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(param("fraction", format!("{fraction} not in [0, 1]")));
                }
                Ok(())
            }
            AttackModel::BiasInjection { beta } => {
                if !beta.is_finite() {
                    return Err(param("beta", "must be finite"));
                }
                Ok(())
            }
        }
    }
}

fn default_n() -> usize {
    3
}

fn default_n_a() -> usize {
    1
}

fn default_n_s() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_n_a")]
    pub n_a: usize,
    #[serde(default = "default_n_s")]
    pub n_s: usize,
    /// Total number of distributed states.
    pub p: usize,
    /// States sacrificed to the channel check (even).
    pub p_c: usize,
    pub t_s: f64,
    pub omega: f64,
    #[serde(default = "default_channel")]
    pub channel: ChannelModel,
    #[serde(default)]
    pub source: Source,
    #[serde(default)]
    pub attack: AttackModel,
    /// Noise during encoding; `None` gives ideal unitary phase encoding.
    #[serde(default)]
    pub encoding_noise: Option<NoiseKind>,
    #[serde(default)]
    pub pulse: Option<ControlPulse>,
    #[serde(default)]
    pub seed: u64,
}

fn default_channel() -> ChannelModel {
    ChannelModel::Ideal
}

impl ProtocolConfig {
    /// Ideal 3-qubit run with the given state budget.
    pub fn ideal(p_s: usize, p_c: usize, t_s: f64, omega: f64, seed: u64) -> Self {
        Self {
            n: 3,
            n_a: 1,
            n_s: 2,
            p: p_s + p_c,
            p_c,
            t_s,
            omega,
            channel: ChannelModel::Ideal,
            source: Source::Alice,
            attack: AttackModel::None,
            encoding_noise: None,
            pulse: None,
            seed,
        }
    }

    pub fn p_s(&self) -> usize {
        self.p.saturating_sub(self.p_c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != self.n_a + self.n_s {
            return Err(param("n", format!("{} != n_a + n_s = {}", self.n, self.n_a + self.n_s)));
        }
        if self.n_s == 0 {
            return Err(param("n_s", "at least one sensing qubit"));
        }
        if self.n > 6 {
            return Err(param("n", "at most 6 qubits"));
        }
        if self.p_c % 2 != 0 {
            return Err(param("p_c", format!("{} must be even", self.p_c)));
        }
        if self.p_c >= self.p {
            return Err(param("p", "p - p_c must leave at least one sensing state"));
        }
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return Err(param("t_s", format!("{} must be positive", self.t_s)));
        }
        let phase = self.n_s as f64 * self.omega * self.t_s;
        if !(phase > 0.0 && phase < std::f64::consts::PI) {
            return Err(param(
                "omega",
                format!("N_S·ω·t_s = {phase} outside the identifiable window (0, π)"),
            ));
        }
        self.channel.validate()?;
        match (self.source, self.channel) {
            (Source::External, ChannelModel::AsymmetricDepolarize { .. }) => {
                return Err(param("channel", "asymmetric depolarization needs source = alice"));
            }
            (Source::Alice, ChannelModel::SymmetricDepolarize { .. }) => {
                return Err(param("channel", "symmetric depolarization needs source = external"));
            }
            _ => {}
        }
        self.attack.validate()?;
        if let Some(kind) = self.encoding_noise {
            NoiseModel::new(kind, Vec::new())?;
        }
        if let Some(p) = &self.pulse {
            if p.qubits() != self.n_s {
                return Err(param("pulse", "pulse must drive exactly the sensing qubits"));
            }
            if (p.duration() - self.t_s).abs() > 1e-12 * self.t_s.max(1.0) {
                return Err(param("pulse", "pulse duration must equal t_s"));
            }
        }
        Ok(())
    }

    fn register(&self) -> Result<QubitRegister> {
        QubitRegister::split(self.n_a, self.n_s)
    }

    fn encoding_noise_model(&self) -> Result<Option<NoiseModel>> {
        match self.encoding_noise {
            None | Some(NoiseKind::Noiseless) => Ok(None),
            Some(kind) => Ok(Some(NoiseModel::new(kind, self.register()?.bob_qubits())?)),
        }
    }
}

// Independent random streams per protocol stage.
const STREAM_DISTRIBUTE: u64 = 1;
const STREAM_SECURITY: u64 = 2;
const STREAM_MEASURE: u64 = 3;

pub(crate) fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Full Z-basis measure-and-resend on `qubits`: drops every coherence
/// between different computational values of those qubits.
pub fn intercept_resend_z(rho: &DensityMatrix, qubits: &[usize]) -> Result<DensityMatrix> {
    let reg = rho.register();
    let mut mask = 0;
    for &q in qubits {
        reg.check_index(q)?;
        mask |= reg.mask(q);
    }
    let mut data = rho.data().clone();
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            if (i ^ j) & mask != 0 {
                data[(i, j)] = c(0.0, 0.0);
            }
        }
    }
    Ok(DensityMatrix::from_parts(data, reg.clone()))
}

/// `exp(-i θ/2 Σ σz)` over `qubits`, applied elementwise.
pub fn z_phase(rho: &DensityMatrix, qubits: &[usize], angle: f64) -> Result<DensityMatrix> {
    let reg = rho.register();
    for &q in qubits {
        reg.check_index(q)?;
    }
    let energy = |i: usize| -> f64 {
        qubits
            .iter()
            .map(|&q| if i & reg.mask(q) == 0 { 0.5 } else { -0.5 })
            .sum::<f64>()
            * angle
    };
    let d = rho.dim();
    let e: Vec<f64> = (0..d).map(energy).collect();
    let mut data = rho.data().clone();
    for i in 0..d {
        for j in 0..d {
            data[(i, j)] *= c(0.0, -(e[i] - e[j])).exp();
        }
    }
    Ok(DensityMatrix::from_parts(data, reg.clone()))
}

/// `p` copies of GHZ_N after the channel and Eve. Identical copies share storage.
pub fn distribute(config: &ProtocolConfig) -> Result<Vec<Arc<DensityMatrix>>> {
    config.validate()?;
    let reg = config.register()?;
    let bob = reg.bob_qubits();
    let clean = Arc::new(config.channel.apply(&ghz_on(reg)?)?);
    match config.attack {
        AttackModel::None => Ok(vec![clean; config.p]),
        AttackModel::BiasInjection { beta } => {
            let biased = Arc::new(z_phase(&clean, &bob, beta * config.t_s)?);
            Ok(vec![biased; config.p])
        }
        AttackModel::InterceptResendZ { fraction } => {
            let attacked = Arc::new(intercept_resend_z(&clean, &bob)?);
            let count = ((fraction * config.p as f64).round() as usize).min(config.p);
            let mut out = vec![clean; config.p];
            let mut rng = stage_rng(config.seed, STREAM_DISTRIBUTE);
            for k in sample(&mut rng, config.p, count) {
                out[k] = Arc::clone(&attacked);
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub x_passed: usize,
    pub x_failed: usize,
    pub z_passed: usize,
    pub z_failed: usize,
    pub verdict: Verdict,
    /// No checks were run (`p_c = 0`).
    pub vacuous: bool,
    /// Indices of the sacrificed copies, σx tests first.
    pub checked: Vec<usize>,
}

/// Sacrifices `p_c` random copies: half get a product-σx parity test (pass
/// iff the parity is +1), half a computational-basis test (pass iff all
/// outcomes agree).
pub fn security_check(
    shared: &[Arc<DensityMatrix>],
    config: &ProtocolConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SecurityReport> {
    if config.p_c > shared.len() {
        return Err(param("p_c", "more checks than distributed states"));
    }
    let checked: Vec<usize> = sample(rng, shared.len(), config.p_c).into_vec();
    let half = config.p_c / 2;
    let mut samplers: HashMap<*const DensityMatrix, RoundSampler> = HashMap::new();
    let mut z_tables: HashMap<*const DensityMatrix, sampling::Categorical> = HashMap::new();
    let (mut x_passed, mut z_passed) = (0, 0);
    for (k, &idx) in checked.iter().enumerate() {
        let state = &shared[idx];
        let key = Arc::as_ptr(state);
        if k < half {
            if !samplers.contains_key(&key) {
                samplers.insert(key, RoundSampler::new(state)?);
            }
            if samplers[&key].sample(rng).parity() == 1 {
                x_passed += 1;
            }
        } else {
            if !z_tables.contains_key(&key) {
                let probs: Vec<f64> = (0..state.dim()).map(|i| state.data()[(i, i)].re).collect();
                z_tables.insert(key, sampling::Categorical::new(&probs)?);
            }
            let outcome = z_tables[&key].sample(rng);
            let all_ones = (1usize << state.num_qubits()) - 1;
            if outcome == 0 || outcome == all_ones {
                z_passed += 1;
            }
        }
    }
    let x_failed = half - x_passed;
    let z_failed = (config.p_c - half) - z_passed;
    let verdict = if x_failed + z_failed == 0 {
        Verdict::Accept
    } else {
        Verdict::Abort
    };
    Ok(SecurityReport {
        x_passed,
        x_failed,
        z_passed,
        z_failed,
        verdict,
        vacuous: config.p_c == 0,
        checked,
    })
}

/// Bob's sensing window: ideal phase encoding, or noisy/controlled
/// evolution when a noise model or pulse is given.
pub fn encode(
    state: &DensityMatrix,
    omega: f64,
    t_s: f64,
    noise: Option<&NoiseModel>,
    pulse: Option<&ControlPulse>,
) -> Result<DensityMatrix> {
    if !(t_s >= 0.0 && t_s.is_finite()) {
        return Err(param("t_s", format!("{t_s} must be finite and >= 0")));
    }
    let bob = state.register().bob_qubits();
    if bob.is_empty() {
        return Err(param("state", "register has no sensing (Bob) qubits"));
    }
    if noise.is_none() && pulse.is_none() {
        return z_phase(state, &bob, omega * t_s);
    }
    let noise = noise.cloned().unwrap_or_else(NoiseModel::noiseless);
    let ev = LocalEvolution::new(state.num_qubits(), bob, noise)?;
    let rho = ev.evolve_matrix(state.data(), omega, pulse, t_s, DEFAULT_DT)?;
    DensityMatrix::from_evolved(
        rho,
        state.register().clone(),
        PROPAGATED_TRACE_TOL,
        PROPAGATED_EIGEN_FLOOR,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub omega_hat: f64,
    pub stderr: f64,
    pub plus: usize,
    pub minus: usize,
    pub mean_parity: f64,
    /// `1/√(p_s N_S² t_s²)`.
    pub qcrb: f64,
    /// The mean parity hit ±1 and the estimate sits on a window edge.
    pub boundary: bool,
}

/// `ω̂ = arccos(2n₊/p_s − 1)/(N_S t_s)` with its delta-method standard error.
pub fn estimate(plus: usize, minus: usize, p_s: usize, n_s: usize, t_s: f64) -> Result<EstimationResult> {
    if p_s == 0 || plus + minus != p_s {
        return Err(param("counts", format!("{plus} + {minus} != p_s = {p_s}")));
    }
    if n_s == 0 || !(t_s > 0.0 && t_s.is_finite()) {
        return Err(param("n_s/t_s", "must be positive"));
    }
    let scale = n_s as f64 * t_s;
    let mean = (plus as f64 - minus as f64) / p_s as f64;
    let boundary = plus == p_s || minus == p_s;
    let omega_hat = mean.clamp(-1.0, 1.0).acos() / scale;
    // Var(mean) = (1 − m²)/p_s and |dω/dm| = 1/(scale·√(1 − m²))
    let stderr = 1.0 / (scale * (p_s as f64).sqrt());
    Ok(EstimationResult {
        omega_hat,
        stderr,
        plus,
        minus,
        mean_parity: mean,
        qcrb: 1.0 / (p_s as f64 * scale * scale).sqrt(),
        boundary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub security: SecurityReport,
    /// Absent when the channel check aborted the run.
    pub estimation: Option<EstimationResult>,
}

/// distribute → security_check → encode and measure the remaining states → estimate.
pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolOutcome> {
    let shared = distribute(config)?;
    let mut rng = stage_rng(config.seed, STREAM_SECURITY);
    let security = security_check(&shared, config, &mut rng)?;
    if security.verdict == Verdict::Abort {
        return Ok(ProtocolOutcome {
            security,
            estimation: None,
        });
    }
    let noise = config.encoding_noise_model()?;
    let mut used = vec![false; shared.len()];
    for &k in &security.checked {
        used[k] = true;
    }
    let mut samplers: HashMap<*const DensityMatrix, RoundSampler> = HashMap::new();
    let mut rng = stage_rng(config.seed, STREAM_MEASURE);
    let (mut plus, mut minus) = (0, 0);
    for (state, _) in shared.iter().zip(&used).filter(|(_, u)| !**u) {
        let key = Arc::as_ptr(state);
        if !samplers.contains_key(&key) {
            let encoded = encode(state, config.omega, config.t_s, noise.as_ref(), config.pulse.as_ref())?;
            samplers.insert(key, RoundSampler::new(&encoded)?);
        }
        // Alice's result corrected by Bob's announced parity
        if samplers[&key].sample(&mut rng).parity() == 1 {
            plus += 1;
        } else {
            minus += 1;
        }
    }
    let estimation = estimate(plus, minus, config.p_s(), config.n_s, config.t_s)?;
    Ok(ProtocolOutcome {
        security,
        estimation: Some(estimation),
    })
}
