use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ControlPulse;
use crate::dynamics::{
    Derivative, LocalEvolution, NoiseModel, SegmentedPropagator, DEFAULT_DT,
    PROPAGATED_EIGEN_FLOOR, PROPAGATED_TRACE_TOL,
};
use crate::error::{param, Result};
use crate::metrology::{cfi_matrix, qfi_matrix, sigma_x_product_povm, Povm};
use crate::quantum::{CMatrix, DensityMatrix, OperatorMatrix};

/// Which Fisher information a pulse is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Qfi,
    /// CFI of the joint σx-product measurement.
    Cfi,
}

/// Initial (post-channel) state, noise and encoding for one sensing window.
#[derive(Debug, Clone)]
pub struct Scenario {
    initial: DensityMatrix,
    evolution: LocalEvolution,
    omega: f64,
    total_time: f64,
    dt: f64,
    derivative: Derivative,
    povm: Povm,
}

impl Scenario {
    /// Bob's qubits of `initial` sense ω and carry the controls.
    pub fn new(initial: DensityMatrix, noise: NoiseModel, omega: f64, total_time: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(param("omega", "must be finite"));
        }
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(param("total_time", format!("{total_time} must be positive")));
        }
        let reg = initial.register();
        let evolution = LocalEvolution::new(reg.len(), reg.bob_qubits(), noise)?;
        let povm = sigma_x_product_povm(reg.len())?;
        Ok(Self {
            initial,
            evolution,
            omega,
            total_time,
            dt: DEFAULT_DT,
            derivative: Derivative::Exact,
            povm,
        })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param("dt", format!("{dt} must be positive")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_derivative(mut self, derivative: Derivative) -> Result<Self> {
        derivative.validate()?;
        self.derivative = derivative;
        Ok(self)
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn evolution(&self) -> &LocalEvolution {
        &self.evolution
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn derivative(&self) -> Derivative {
        self.derivative
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// Number of controlled qubits.
    pub fn controlled_qubits(&self) -> usize {
        self.evolution.sensing().len()
    }

    pub fn zero_pulse(&self, segments: usize) -> Result<ControlPulse> {
        ControlPulse::zero(self.total_time, segments, self.controlled_qubits())
    }

    fn evolve_raw(&self, pulse: Option<&ControlPulse>) -> Result<(CMatrix, CMatrix)> {
        self.evolution.evolve_with_derivative_matrix(
            self.initial.data(),
            self.omega,
            pulse,
            self.total_time,
            self.dt,
            self.derivative,
        )
    }

    /// Validated `(ρ_ω(T), ∂_ω ρ_ω(T))`.
    pub fn evolve(&self, pulse: Option<&ControlPulse>) -> Result<(DensityMatrix, OperatorMatrix)> {
        let (rho, drho) = self.evolve_raw(pulse)?;
        let reg = self.initial.register().clone();
        let rho = DensityMatrix::from_evolved(rho, reg.clone(), PROPAGATED_TRACE_TOL, PROPAGATED_EIGEN_FLOOR)?;
        Ok((rho, OperatorMatrix::new(drho, reg)?))
    }

    pub fn figure(&self, figure: Figure, pulse: Option<&ControlPulse>) -> Result<f64> {
        let (rho, drho) = self.evolve_raw(pulse)?;
        self.score(figure, &rho, &drho)
    }

    pub(crate) fn score(&self, figure: Figure, rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
        match figure {
            Figure::Qfi => qfi_matrix(rho, drho),
            Figure::Cfi => cfi_matrix(rho, drho, &self.povm),
        }
    }
}

/// A scalar score of a control pulse, to be maximized.
pub trait PulseObjective: Sync {
    fn value(&self, pulse: &ControlPulse) -> Result<f64>;

    /// ∂value/∂amplitude by central differences of width `step`.
    fn gradient(&self, pulse: &ControlPulse, step: f64) -> Result<Vec<f64>> {
        central_difference_gradient(self, pulse, step)
    }
}

/// Reference gradient: two full objective evaluations per amplitude.
pub fn central_difference_gradient<O: PulseObjective + ?Sized>(
    objective: &O,
    pulse: &ControlPulse,
    step: f64,
) -> Result<Vec<f64>> {
    (0..pulse.amplitudes().len())
        .into_par_iter()
        .map(|i| {
            let mut plus = pulse.amplitudes().to_vec();
            let mut minus = plus.clone();
            plus[i] += step;
            minus[i] -= step;
            let fp = objective.value(&pulse.with_amplitudes(plus))?;
            let fm = objective.value(&pulse.with_amplitudes(minus))?;
            Ok((fp - fm) / (2.0 * step))
        })
        .collect()
}

/// Any `Fn(&ControlPulse) -> Result<f64>` as an objective.
pub struct FnObjective<F>(pub F);

impl<F> PulseObjective for FnObjective<F>
where
    F: Fn(&ControlPulse) -> Result<f64> + Sync,
{
    fn value(&self, pulse: &ControlPulse) -> Result<f64> {
        (self.0)(pulse)
    }
}

/// QFI or CFI of a scenario at its final time.
pub struct ScenarioObjective<'a> {
    scenario: &'a Scenario,
    figure: Figure,
}

impl<'a> ScenarioObjective<'a> {
    pub fn new(scenario: &'a Scenario, figure: Figure) -> Self {
        Self { scenario, figure }
    }

    pub fn figure(&self) -> Figure {
        self.figure
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }
}

impl PulseObjective for ScenarioObjective<'_> {
    fn value(&self, pulse: &ControlPulse) -> Result<f64> {
        self.scenario.figure(self.figure, Some(pulse))
    }

    /// Reuses the unperturbed segment channels: each amplitude costs one
    /// fresh segment map instead of a full propagation.
    fn gradient(&self, pulse: &ControlPulse, step: f64) -> Result<Vec<f64>> {
        let sc = self.scenario;
        if (pulse.duration() - sc.total_time).abs() > 1e-12 * sc.total_time.max(1.0) {
            return Err(param("pulse", "duration differs from the scenario's total time"));
        }
        let cache = SegmentedPropagator::new(&sc.evolution, sc.omega, pulse, sc.derivative)?;
        let rho0 = sc.initial.data();
        let eval = |slot: usize, segment: usize, controls: [f64; 3]| -> Result<f64> {
            let (rho, drho) = cache.perturbed(rho0, slot, segment, controls);
            sc.score(self.figure, &rho, &drho)
        };
        (0..pulse.amplitudes().len())
            .into_par_iter()
            .map(|i| {
                let (channel, segment) = pulse.locate(i);
                let (slot, axis) = (channel / 3, channel % 3);
                let base = pulse.controls(slot, segment);
                let mut up = base;
                let mut down = base;
                up[axis] += step;
                down[axis] -= step;
                Ok((eval(slot, segment, up)? - eval(slot, segment, down)?) / (2.0 * step))
            })
            .collect()
    }
}
