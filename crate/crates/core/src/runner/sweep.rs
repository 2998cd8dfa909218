use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{OptimizerKind, ScenarioSpec};
use crate::control::{de_optimize, grape_optimize, Figure, OptimizerReport, Scenario, ScenarioObjective};
use crate::entanglement::{tripartite_negativity, NegativityTrajectory};
use crate::error::Result;
use crate::metrology::FisherRecord;
use crate::quantum::DensityMatrix;

/// Optimized pulse for one figure at one final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOptimization {
    pub t: f64,
    pub figure: Figure,
    pub optimizer: OptimizerKind,
    pub uncontrolled: f64,
    pub report: OptimizerReport,
}

/// Optimizer seed for the `index`-th time point.
fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn run_optimizer(spec: &ScenarioSpec, scenario: &Scenario, figure: Figure, seed: u64) -> Result<OptimizerReport> {
    let t = scenario.total_time();
    let obj = ScenarioObjective::new(scenario, figure);
    let q = scenario.controlled_qubits();
    match spec.optimizer {
        OptimizerKind::Grape => grape_optimize(&obj, t, q, &crate::control::GrapeConfig { seed, ..spec.grape_config(t) }),
        OptimizerKind::De => de_optimize(&obj, t, q, &crate::control::DeConfig { seed, ..spec.de_config(t) }),
    }
}

pub fn optimize_point(spec: &ScenarioSpec, t: f64, figure: Figure, index: usize) -> Result<PointOptimization> {
    let scenario = spec.scenario_at(t)?;
    let uncontrolled = scenario.figure(figure, None)?;
    let report = run_optimizer(spec, &scenario, figure, point_seed(spec.seed, index))?;
    Ok(PointOptimization {
        t,
        figure,
        optimizer: spec.optimizer,
        uncontrolled,
        report,
    })
}

/// One Fisher sweep row with the states behind it.
#[derive(Debug, Clone)]
pub struct FisherPoint {
    pub record: FisherRecord,
    pub uncontrolled_state: DensityMatrix,
    /// Final states under the QFI- and CFI-optimized pulses.
    pub controlled_states: Option<(DensityMatrix, DensityMatrix)>,
    pub qfi_report: Option<OptimizerReport>,
    pub cfi_report: Option<OptimizerReport>,
}

fn fisher_point(spec: &ScenarioSpec, t: f64, index: usize) -> Result<FisherPoint> {
    let scenario = spec.scenario_at(t)?;
    let (rho, drho) = scenario.evolve(None)?;
    let uc_qfi = crate::metrology::qfi(&rho, &drho)?;
    let uc_cfi = crate::metrology::cfi(&rho, &drho, scenario.povm())?;
    if !spec.controlled {
        return Ok(FisherPoint {
            record: FisherRecord { t, uc_qfi, c_qfi: uc_qfi, uc_cfi, c_cfi: uc_cfi },
            uncontrolled_state: rho,
            controlled_states: None,
            qfi_report: None,
            cfi_report: None,
        });
    }
    let seed = point_seed(spec.seed, index);
    let qr = run_optimizer(spec, &scenario, Figure::Qfi, seed)?;
    let cr = run_optimizer(spec, &scenario, Figure::Cfi, seed)?;
    let (q_state, _) = scenario.evolve(Some(&qr.best_pulse))?;
    let (c_state, _) = scenario.evolve(Some(&cr.best_pulse))?;
    Ok(FisherPoint {
        record: FisherRecord { t, uc_qfi, c_qfi: qr.best_value, uc_cfi, c_cfi: cr.best_value },
        uncontrolled_state: rho,
        controlled_states: Some((q_state, c_state)),
        qfi_report: Some(qr),
        cfi_report: Some(cr),
    })
}

/// Uncontrolled and optimized QFI/CFI at every time of the scenario's grid.
pub fn sweep_fisher(spec: &ScenarioSpec) -> Result<Vec<FisherPoint>> {
    spec.t_grid
        .par_iter()
        .enumerate()
        .map(|(k, &t)| fisher_point(spec, t, k))
        .collect()
}

/// Uncontrolled negativity and the negativity reached under the pulse that
/// optimizes the scenario's objective at each time.
pub fn sweep_negativity(spec: &ScenarioSpec) -> Result<(NegativityTrajectory, NegativityTrajectory)> {
    let grid = &spec.negativity_grid;
    let uncontrolled = spec.uncontrolled_negativity(grid)?;
    if !spec.controlled {
        let copy = NegativityTrajectory::new(grid.clone(), uncontrolled.values().to_vec(), uncontrolled.tag())?;
        return Ok((uncontrolled, copy));
    }
    let controlled = grid
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            if t == 0.0 {
                return tripartite_negativity(&spec.initial_state()?);
            }
            let scenario = spec.scenario_at(t)?;
            let report = run_optimizer(spec, &scenario, spec.objective, point_seed(spec.seed, k))?;
            let (rho, _) = scenario.evolve(Some(&report.best_pulse))?;
            tripartite_negativity(&rho)
        })
        .collect::<Result<Vec<_>>>()?;
    let controlled = NegativityTrajectory::new(grid.clone(), controlled, format!("{} controlled", spec.tag()))?;
    Ok((uncontrolled, controlled))
}
