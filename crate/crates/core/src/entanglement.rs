//! Negativity-based entanglement measures and death-time detection.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quantum::{hermitian_eigen, partial_transpose, CMatrix, DensityMatrix};

/// Default level below which entanglement counts as lost.
pub const DEATH_THRESHOLD: f64 = 1e-6;
/// Negative partial-transpose eigenvalues smaller than this are rounding noise.
pub const EIGEN_NOISE: f64 = 1e-12;

/// Sum of `|λ|` over negative eigenvalues of a Hermitian matrix, i.e.
/// `(‖X‖₁ − Tr X)/2`.
fn negative_part(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().filter(|&&v| v < -EIGEN_NOISE).map(|v| -v).sum()
}

/// `(‖ρ^{T_part}‖₁ − 1)/2`.
pub fn negativity(rho: &DensityMatrix, part: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, part)?;
    Ok(negative_part(pt.data()))
}

/// Cube root of the product of the three single-qubit-cut negativities
/// `A|B₁B₂`, `AB₁|B₂` and `AB₂|B₁`.
pub fn tripartite_negativity(rho: &DensityMatrix) -> Result<f64> {
    if rho.num_qubits() != 3 {
        return Err(Error::Dimension(format!(
            "tripartite negativity needs 3 qubits, got {}",
            rho.num_qubits()
        )));
    }
    let mut product = 1.0;
    for part in [[0usize], [2], [1]] {
        let n = negativity(rho, &part)?;
        if n <= 0.0 {
            return Ok(0.0);
        }
        product *= n;
    }
    Ok(product.cbrt())
}

/// Negativity sampled along a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityTrajectory {
    times: Vec<f64>,
    values: Vec<f64>,
    tag: String,
}

impl NegativityTrajectory {
    pub fn new(times: Vec<f64>, values: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(param("times", "must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(param("values", "negativities must be >= 0"));
        }
        Ok(Self {
            times,
            values,
            tag: tag.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when no sample exceeds its predecessor by more than `tol`.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

/// First time the trajectory falls below `threshold`, linearly interpolated
/// between the bracketing samples. `None` if it never does.
pub fn death_time(traj: &NegativityTrajectory, threshold: f64) -> Result<Option<f64>> {
    if traj.is_empty() {
        return Err(param("trajectory", "empty"));
    }
    let (t, v) = (traj.times(), traj.values());
    let Some(k) = v.iter().position(|&x| x < threshold) else {
        return Ok(None);
    };
    if k == 0 {
        return Ok(Some(t[0]));
    }
    let frac = (v[k - 1] - threshold) / (v[k - 1] - v[k]);
    Ok(Some(t[k - 1] + frac * (t[k] - t[k - 1])))
}
