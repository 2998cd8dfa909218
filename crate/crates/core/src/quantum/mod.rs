//! Dense complex linear algebra for few-qubit registers.
//!
//! Basis ordering is big-endian: in an `n`-qubit register, qubit `q` is bit
//! `n - 1 - q` of the computational basis index, so `|q0 q1 q2>` reads left
//! to right. Alice's qubits always come first, then Bob's.

mod expm;
mod ops;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expm::expm;
pub(crate) use expm::expm_fixed;
pub use ops::{
    embed, hermitian_eigen, kron, partial_trace, partial_transpose, trace_norm, trace_norm_matrix,
};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Alice,
    Bob,
}

/// Ordered qubit labels. Registers without an explicit owner are labelled Bob.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QubitRegister {
    labels: Vec<Owner>,
}

impl QubitRegister {
    pub fn with_owners(labels: Vec<Owner>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Dimension("register needs at least one qubit".into()));
        }
        Ok(Self { labels })
    }

    /// `n_alice` Alice qubits followed by `n_bob` Bob qubits.
    pub fn split(n_alice: usize, n_bob: usize) -> Result<Self> {
        let mut labels = vec![Owner::Alice; n_alice];
        labels.extend(std::iter::repeat_n(Owner::Bob, n_bob));
        Self::with_owners(labels)
    }

    pub fn anonymous(n: usize) -> Result<Self> {
        Self::with_owners(vec![Owner::Bob; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.labels.len()
    }

    pub fn labels(&self) -> &[Owner] {
        &self.labels
    }

    pub fn qubits_of(&self, owner: Owner) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == owner)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn alice_qubits(&self) -> Vec<usize> {
        self.qubits_of(Owner::Alice)
    }

    pub fn bob_qubits(&self) -> Vec<usize> {
        self.qubits_of(Owner::Bob)
    }

    pub(crate) fn concat(&self, other: &Self) -> Self {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Self { labels }
    }

    pub(crate) fn select(&self, qubits: &[usize]) -> Self {
        Self {
            labels: qubits.iter().map(|&q| self.labels[q]).collect(),
        }
    }

    pub(crate) fn check_index(&self, q: usize) -> Result<()> {
        if q >= self.len() {
            return Err(Error::QubitIndex {
                index: q,
                n: self.len(),
            });
        }
        Ok(())
    }

    /// Bit mask of qubit `q` in a basis index.
    #[inline]
    pub(crate) fn mask(&self, q: usize) -> usize {
        1 << (self.len() - 1 - q)
    }
}

/// A square operator on a qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    data: CMatrix,
    register: QubitRegister,
}

impl OperatorMatrix {
    pub fn new(data: CMatrix, register: QubitRegister) -> Result<Self> {
        let d = register.dim();
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::Dimension(format!(
                "{}x{} matrix on a {}-qubit register (expected {d}x{d})",
                data.nrows(),
                data.ncols(),
                register.len()
            )));
        }
        Ok(Self { data, register })
    }

    /// Build an operator that is claimed to be Hermitian, validating the claim.
    pub fn hermitian(data: CMatrix, register: QubitRegister) -> Result<Self> {
        let op = Self::new(data, register)?;
        let dev = op.hermiticity_error();
        if dev > HERMITICITY_TOL.max(HERMITICITY_TOL * op.data.norm()) {
            return Err(Error::InvalidState(format!(
                "operator claimed Hermitian deviates by {dev:e}"
            )));
        }
        Ok(op)
    }

    pub fn zeros(register: QubitRegister) -> Self {
        let d = register.dim();
        Self {
            data: CMatrix::zeros(d, d),
            register,
        }
    }

    pub fn identity(register: QubitRegister) -> Self {
        let d = register.dim();
        Self {
            data: CMatrix::identity(d, d),
            register,
        }
    }

    pub(crate) fn from_parts(data: CMatrix, register: QubitRegister) -> Self {
        debug_assert_eq!(data.nrows(), register.dim());
        Self { data, register }
    }

    pub fn pauli_x() -> Self {
        Self::single(pauli_x())
    }

    pub fn pauli_y() -> Self {
        Self::single(pauli_y())
    }

    pub fn pauli_z() -> Self {
        Self::single(pauli_z())
    }

    pub fn single_identity() -> Self {
        Self::single(CMatrix::identity(2, 2))
    }

    fn single(data: CMatrix) -> Self {
        Self {
            data,
            register: QubitRegister {
                labels: vec![Owner::Bob],
            },
        }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.data, &self.data.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn with_register(mut self, register: QubitRegister) -> Result<Self> {
        if register.len() != self.register.len() {
            return Err(Error::Dimension("register size changed".into()));
        }
        self.register = register;
        Ok(self)
    }
}

/// Summary of how far a matrix is from being a valid density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn of(data: &CMatrix) -> Self {
        let hermiticity_error = max_abs_diff(data, &data.adjoint());
        let trace_error = (data.trace() - C64::new(1.0, 0.0)).norm();
        let sym = hermitize(data);
        let min_eigenvalue = hermitian_eigen(&sym)
            .0
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Self {
            hermiticity_error,
            trace_error,
            min_eigenvalue,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.within(HERMITICITY_TOL, TRACE_TOL, EIGENVALUE_FLOOR)
    }

    pub fn within(&self, hermiticity: f64, trace: f64, eigen_floor: f64) -> bool {
        self.hermiticity_error <= hermiticity
            && self.trace_error <= trace
            && self.min_eigenvalue >= eigen_floor
    }
}

impl fmt::Display for StateDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity {:.3e}, trace error {:.3e}, min eigenvalue {:.3e}",
            self.hermiticity_error, self.trace_error, self.min_eigenvalue
        )
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
    register: QubitRegister,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity against the default tolerances.
    pub fn new(data: CMatrix, register: QubitRegister) -> Result<Self> {
        let op = OperatorMatrix::new(data, register)?;
        let diag = StateDiagnostics::of(&op.data);
        if !diag.is_valid() {
            return Err(Error::InvalidState(diag.to_string()));
        }
        Ok(Self {
            data: op.data,
            register: op.register,
        })
    }

    /// Accepts accumulated round-off: the input is re-hermitized as (ρ+ρ†)/2 and
    /// only trace and positivity are checked, with the supplied tolerances.
    pub fn from_evolved(
        data: CMatrix,
        register: QubitRegister,
        trace_tol: f64,
        eigen_floor: f64,
    ) -> Result<Self> {
        let op = OperatorMatrix::new(hermitize(&data), register)?;
        let diag = StateDiagnostics::of(&op.data);
        if diag.trace_error > trace_tol || diag.min_eigenvalue < eigen_floor {
            return Err(Error::InvalidState(diag.to_string()));
        }
        Ok(Self {
            data: op.data,
            register: op.register,
        })
    }

    pub(crate) fn from_parts(data: CMatrix, register: QubitRegister) -> Self {
        debug_assert_eq!(data.nrows(), register.dim());
        Self { data, register }
    }

    pub fn pure(amplitudes: &[C64], register: QubitRegister) -> Result<Self> {
        let d = register.dim();
        if amplitudes.len() != d {
            return Err(Error::Dimension(format!(
                "{} amplitudes for dimension {d}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = nalgebra::DVector::from_iterator(d, amplitudes.iter().map(|a| a / norm));
        Ok(Self {
            data: &psi * psi.adjoint(),
            register,
        })
    }

    pub fn maximally_mixed(register: QubitRegister) -> Self {
        let d = register.dim();
        Self {
            data: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
            register,
        }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics::of(&self.data)
    }

    pub fn as_operator(&self) -> OperatorMatrix {
        OperatorMatrix::from_parts(self.data.clone(), self.register.clone())
    }

    /// Tensor product `self ⊗ other`, with `self`'s qubits first.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            data: self.data.kronecker(&other.data),
            register: self.register.concat(&other.register),
        }
    }

    /// `U ρ U†` for a unitary on the same register.
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<DensityMatrix> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::Dimension("unitary does not match state".into()));
        }
        Ok(Self {
            data: hermitize(&(unitary * &self.data * unitary.adjoint())),
            register: self.register.clone(),
        })
    }

    pub fn with_register(mut self, register: QubitRegister) -> Result<Self> {
        if register.len() != self.register.len() {
            return Err(Error::Dimension("register size changed".into()));
        }
        self.register = register;
        Ok(self)
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_split_orders_alice_first() {
        let r = QubitRegister::split(1, 2).unwrap();
        assert_eq!(r.alice_qubits(), vec![0]);
        assert_eq!(r.bob_qubits(), vec![1, 2]);
        assert_eq!(r.dim(), 8);
        assert!(QubitRegister::split(0, 0).is_err());
    }

    #[test]
    fn density_validation_rejects_bad_trace() {
        let r = QubitRegister::anonymous(1).unwrap();
        let bad = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(bad, r.clone()),
            Err(Error::InvalidState(_))
        ));
        let ok = CMatrix::identity(2, 2) * c(0.5, 0.0);
        assert!(DensityMatrix::new(ok, r).is_ok());
    }

    #[test]
    fn density_validation_rejects_negative_eigenvalue() {
        let r = QubitRegister::anonymous(1).unwrap();
        let m = CMatrix::from_row_slice(2, 2, &[c(1.2, 0.), c(0., 0.), c(0., 0.), c(-0.2, 0.)]);
        assert!(DensityMatrix::new(m, r).is_err());
    }

    #[test]
    fn hermitian_claim_is_checked() {
        let r = QubitRegister::anonymous(1).unwrap();
        assert!(OperatorMatrix::hermitian(pauli_y(), r.clone()).is_ok());
        let m = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(OperatorMatrix::hermitian(m, r).is_err());
    }

    #[test]
    fn from_evolved_rehermitizes() {
        let r = QubitRegister::anonymous(1).unwrap();
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.), c(0.1, 1e-11), c(0.1, 0.), c(0.5, 0.)],
        );
        let rho = DensityMatrix::from_evolved(m, r, 1e-9, -1e-8).unwrap();
        assert!(rho.diagnostics().hermiticity_error == 0.0);
    }
}
