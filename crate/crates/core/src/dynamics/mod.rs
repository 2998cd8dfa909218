//! Parameter-dependent Hamiltonians, Lindblad generators and piecewise-constant
//! propagation of states and their ω-derivatives.

mod local;

use std::f64::consts::FRAC_PI_4;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use local::{LocalEvolution, Mat2, Super4, Super8};
pub(crate) use local::{check_delta, SegmentedPropagator};

use crate::control::ControlPulse;
use crate::error::{param, Error, Result};
use crate::quantum::{
    c, embed, expm, CMatrix, DensityMatrix, OperatorMatrix,
    QubitRegister, C64,
};

/// Smallest ω step accepted by the central-difference derivative.
pub const MIN_DELTA_OMEGA: f64 = 1e-7;
/// Step used when a central difference is requested without one.
pub const DEFAULT_DELTA_OMEGA: f64 = 1e-4;
pub const DEFAULT_DT: f64 = 0.1;

/// Trace tolerance and eigenvalue floor accepted for propagated states.
pub const PROPAGATED_TRACE_TOL: f64 = 1e-9;
pub const PROPAGATED_EIGEN_FLOOR: f64 = -1e-8;

pub const GPD_RATE: f64 = 0.05;
pub const GPD_THETA: f64 = FRAC_PI_4;
pub const GPD_PHI: f64 = 0.0;
pub const PPD_RATE: f64 = 0.025;
pub const DP_RATE: f64 = 0.02;

/// How `∂ρ/∂ω` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivative {
    /// Propagated alongside ρ through block-triangular generators; exact up
    /// to rounding.
    #[default]
    Exact,
    /// `(ρ_{ω+δ} − ρ_{ω−δ}) / 2δ`, truncation error O(δ²).
    CentralDifference(f64),
}

impl Derivative {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Derivative::Exact => Ok(()),
            Derivative::CentralDifference(delta) => check_delta(delta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: OperatorMatrix,
    omega: f64,
}

impl Hamiltonian {
    pub fn new(matrix: OperatorMatrix, omega: f64) -> Result<Self> {
        let register = matrix.register().clone();
        let matrix = OperatorMatrix::hermitian(matrix.into_data(), register)
            .map_err(|_| Error::InvalidState("Hamiltonian must be Hermitian".into()))?;
        Ok(Self { matrix, omega })
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// `H_ω = (ω/2) Σ_j σz^(j)` over the sensing qubits.
pub fn encoding_hamiltonian(
    omega: f64,
    register: &QubitRegister,
    sensing: &[usize],
) -> Result<Hamiltonian> {
    if sensing.is_empty() {
        return Err(param("sensing", "encoding needs at least one sensing qubit"));
    }
    let d = register.dim();
    let mut h = CMatrix::zeros(d, d);
    let z = OperatorMatrix::pauli_z();
    for &q in sensing {
        h += embed(&z, q, register)?.into_data();
    }
    h *= c(omega / 2.0, 0.0);
    Ok(Hamiltonian {
        matrix: OperatorMatrix::from_parts(h, register.clone()),
        omega,
    })
}

/// `Σ_slot Σ_a c_a σ_a` with one `(x, y, z)` triple per controlled qubit.
pub fn control_hamiltonian(
    register: &QubitRegister,
    controlled: &[usize],
    controls: &[[f64; 3]],
) -> Result<OperatorMatrix> {
    if controls.len() != controlled.len() {
        return Err(Error::Dimension(format!(
            "{} control triples for {} controlled qubits",
            controls.len(),
            controlled.len()
        )));
    }
    let d = register.dim();
    let mut h = CMatrix::zeros(d, d);
    let ops = [
        OperatorMatrix::pauli_x(),
        OperatorMatrix::pauli_y(),
        OperatorMatrix::pauli_z(),
    ];
    for (&q, triple) in controlled.iter().zip(controls) {
        for (op, &amp) in ops.iter().zip(triple) {
            if amp != 0.0 {
                h += embed(op, q, register)?.into_data() * c(amp, 0.0);
            }
        }
    }
    Ok(OperatorMatrix::from_parts(h, register.clone()))
}

/// How to read the three-term sum over a single GPD collapse operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpdReading {
    /// One collapse operator per noisy qubit.
    #[default]
    PerQubit,
    /// Three identical operators per qubit (triple rate).
    Tripled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Noiseless,
    /// Generalized Pauli dephasing along `(sinθ cosφ, sinθ sinφ, cosθ)`.
    Gpd {
        rate: f64,
        theta: f64,
        phi: f64,
        #[serde(default)]
        reading: GpdReading,
    },
    /// Parallel (σz) Pauli dephasing.
    Ppd { rate: f64 },
    /// Depolarizing noise with σx, σy, σz collapse operators.
    Dp { rate: f64 },
}

impl NoiseKind {
    pub fn gpd() -> Self {
        NoiseKind::Gpd {
            rate: GPD_RATE,
            theta: GPD_THETA,
            phi: GPD_PHI,
            reading: GpdReading::PerQubit,
        }
    }

    pub fn ppd() -> Self {
        NoiseKind::Ppd { rate: PPD_RATE }
    }

    pub fn dp() -> Self {
        NoiseKind::Dp { rate: DP_RATE }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            NoiseKind::Noiseless => 0.0,
            NoiseKind::Gpd { rate, .. } | NoiseKind::Ppd { rate } | NoiseKind::Dp { rate } => rate,
        }
    }
}

/// A noise kind applied independently to each target qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    kind: NoiseKind,
    targets: Vec<usize>,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, targets: Vec<usize>) -> Result<Self> {
        let rate = kind.rate();
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(param("rate", format!("{rate} must be finite and >= 0")));
        }
        if let NoiseKind::Gpd { theta, phi, .. } = kind {
            if !theta.is_finite() || !phi.is_finite() {
                return Err(param("theta/phi", "angles must be finite"));
            }
        }
        Ok(Self { kind, targets })
    }

    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::Noiseless,
            targets: Vec::new(),
        }
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// `(rate, L)` pairs acting on a single qubit.
    pub fn single_qubit_jumps(&self) -> Vec<(f64, Mat2)> {
        let [x, y, z] = local::paulis();
        match self.kind {
            NoiseKind::Noiseless => Vec::new(),
            NoiseKind::Gpd {
                rate,
                theta,
                phi,
                reading,
            } => {
                let axis = x * c(theta.sin() * phi.cos(), 0.0)
                    + y * c(theta.sin() * phi.sin(), 0.0)
                    + z * c(theta.cos(), 0.0);
                let rate = match reading {
                    GpdReading::PerQubit => rate,
                    GpdReading::Tripled => 3.0 * rate,
                };
                vec![(rate, axis)]
            }
            NoiseKind::Ppd { rate } => vec![(rate, z)],
            NoiseKind::Dp { rate } => vec![(rate, x), (rate, y), (rate, z)],
        }
    }

    fn full_jumps(&self, register: &QubitRegister) -> Result<Vec<(f64, CMatrix)>> {
        let mut out = Vec::new();
        for &q in &self.targets {
            for (rate, l) in self.single_qubit_jumps() {
                let op = OperatorMatrix::new(
                    CMatrix::from_iterator(2, 2, l.iter().copied()),
                    QubitRegister::anonymous(1)?,
                )?;
                out.push((rate, embed(&op, q, register)?.into_data()));
            }
        }
        Ok(out)
    }
}

/// Generator of `dρ/dt = 𝓛ρ` acting on column-stacked `vec(ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lindbladian {
    superoperator: CMatrix,
    register: QubitRegister,
}

impl Lindbladian {
    pub fn superoperator(&self) -> &CMatrix {
        &self.superoperator
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    /// `exp(t·𝓛)` as a superoperator.
    pub fn channel(&self, t: f64) -> Result<CMatrix> {
        expm(&(&self.superoperator * c(t, 0.0)))
    }
}

/// `-i[H + H_c, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`, vectorized.
pub fn build_lindbladian(
    hamiltonian: &Hamiltonian,
    noise: &NoiseModel,
    controls: Option<&OperatorMatrix>,
) -> Result<Lindbladian> {
    let register = hamiltonian.matrix().register().clone();
    let d = register.dim();
    let mut h = hamiltonian.matrix().data().clone();
    if let Some(hc) = controls {
        if hc.dim() != d {
            return Err(Error::Dimension(format!(
                "control Hamiltonian has dimension {}, expected {d}",
                hc.dim()
            )));
        }
        h += hc.data();
    }
    for &q in noise.targets() {
        register.check_index(q)?;
    }
    let id = CMatrix::identity(d, d);
    let mut sup = (id.kronecker(&h) - h.transpose().kronecker(&id)) * c(0.0, -1.0);
    for (rate, l) in noise.full_jumps(&register)? {
        let ldl = l.adjoint() * &l;
        let term = l.conjugate().kronecker(&l)
            - id.kronecker(&ldl) * c(0.5, 0.0)
            - ldl.transpose().kronecker(&id) * c(0.5, 0.0);
        sup += term * c(rate, 0.0);
    }
    Ok(Lindbladian {
        superoperator: sup,
        register,
    })
}

pub(crate) fn vectorize(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvectorize(v: &DVector<C64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// `ρ(T) = exp(Δt_m 𝓛_m) ⋯ exp(Δt_1 𝓛_1) ρ(0)`.
pub fn propagate(rho0: &DensityMatrix, segments: &[(&Lindbladian, f64)]) -> Result<DensityMatrix> {
    let d = rho0.dim();
    let mut v = vectorize(rho0.data());
    for (k, (l, dt)) in segments.iter().enumerate() {
        if !(*dt > 0.0) {
            return Err(param("dt", format!("segment {k} has nonpositive duration {dt}")));
        }
        if l.superoperator.nrows() != d * d {
            return Err(Error::Dimension(format!(
                "segment {k} generator acts on dimension {}, state has {d}",
                l.register.dim()
            )));
        }
        v = l.channel(*dt)? * v;
    }
    DensityMatrix::from_evolved(
        unvectorize(&v, d),
        rho0.register().clone(),
        PROPAGATED_TRACE_TOL,
        PROPAGATED_EIGEN_FLOOR,
    )
}

/// Noisy controlled evolution of `rho0` for `total_time` at `omega`, with
/// the derivative `∂ρ/∂ω`.
///
/// Bob's qubits of `rho0`'s register sense the parameter and carry the
/// controls; `noise` names its own target qubits.
pub fn propagate_with_derivative(
    rho0: &DensityMatrix,
    omega: f64,
    noise: &NoiseModel,
    controls: Option<&ControlPulse>,
    total_time: f64,
    dt: f64,
    derivative: Derivative,
) -> Result<(DensityMatrix, OperatorMatrix)> {
    let reg = rho0.register();
    let evolution = LocalEvolution::new(reg.len(), reg.bob_qubits(), noise.clone())?;
    let (rho, drho) =
        evolution.evolve_with_derivative_matrix(rho0.data(), omega, controls, total_time, dt, derivative)?;
    let rho = DensityMatrix::from_evolved(rho, reg.clone(), PROPAGATED_TRACE_TOL, PROPAGATED_EIGEN_FLOOR)?;
    let drho = OperatorMatrix::new(crate::quantum::hermitize(&drho), reg.clone())?;
    Ok((rho, drho))
}
