//! Symmetric logarithmic derivative, quantum and classical Fisher information,
//! and Cramér–Rao bounds.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quantum::{
    c, hermitian_eigen, kron, CMatrix, DensityMatrix, OperatorMatrix, QubitRegister, C64,
};

/// Eigenpairs with `λ_i + λ_j` below this are left out of the SLD.
pub const SLD_CUTOFF: f64 = 1e-10;
/// Outcomes less likely than this contribute nothing to the CFI.
pub const CFI_PROBABILITY_FLOOR: f64 = 1e-12;
pub const POVM_TOL: f64 = 1e-10;

fn check_pair(rho: &CMatrix, drho: &CMatrix) -> Result<()> {
    if rho.shape() != drho.shape() {
        return Err(Error::Dimension(format!(
            "state is {:?} but derivative is {:?}",
            rho.shape(),
            drho.shape()
        )));
    }
    Ok(())
}

/// SLD matrix elements in the eigenbasis of ρ, plus that basis and spectrum.
fn sld_eigenbasis(rho: &CMatrix, drho: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let (vals, vecs) = hermitian_eigen(rho);
    let d_eig = vecs.adjoint() * drho * &vecs;
    let n = vals.len();
    let mut l = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s = vals[i] + vals[j];
            if s >= SLD_CUTOFF {
                l[(i, j)] = d_eig[(i, j)] * (2.0 / s);
            }
        }
    }
    (vals, vecs, l)
}

pub fn sld_matrix(rho: &CMatrix, drho: &CMatrix) -> Result<CMatrix> {
    check_pair(rho, drho)?;
    let (_, vecs, l) = sld_eigenbasis(rho, drho);
    Ok(crate::quantum::hermitize(&(&vecs * l * vecs.adjoint())))
}

pub fn sld(rho: &DensityMatrix, drho: &OperatorMatrix) -> Result<OperatorMatrix> {
    let l = sld_matrix(rho.data(), drho.data())?;
    Ok(OperatorMatrix::from_parts(l, rho.register().clone()))
}

/// `Tr[ρ L²] = Σ_ij 2|⟨e_i|∂ρ|e_j⟩|² / (λ_i + λ_j)`.
pub fn qfi_matrix(rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
    check_pair(rho, drho)?;
    let (vals, vecs) = hermitian_eigen(rho);
    let d_eig = vecs.adjoint() * drho * &vecs;
    let n = vals.len();
    let mut f = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = vals[i] + vals[j];
            if s >= SLD_CUTOFF {
                f += 2.0 * d_eig[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(f.max(0.0))
}

pub fn qfi(rho: &DensityMatrix, drho: &OperatorMatrix) -> Result<f64> {
    qfi_matrix(rho.data(), drho.data())
}

/// Measurement given by positive elements that resolve the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
    labels: Vec<Vec<i8>>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>, labels: Vec<Vec<i8>>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| param("povm", "no elements"))?;
        let d = first.nrows();
        if labels.len() != elements.len() {
            return Err(param("povm", "one label per element required"));
        }
        let mut sum = CMatrix::zeros(d, d);
        for (k, m) in elements.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(Error::Dimension(format!("element {k} has shape {:?}", m.shape())));
            }
            let herm = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            if herm > POVM_TOL {
                return Err(param("povm", format!("element {k} is not Hermitian")));
            }
            let (vals, _) = hermitian_eigen(&crate::quantum::hermitize(m));
            if vals[0] < -POVM_TOL {
                return Err(param("povm", format!("element {k} has eigenvalue {}", vals[0])));
            }
            sum += m;
        }
        let err = crate::quantum::max_abs_diff(&sum, &CMatrix::identity(d, d));
        if err > POVM_TOL {
            return Err(param("povm", format!("elements sum to identity only within {err:e}")));
        }
        Ok(Self { elements, labels })
    }

    /// Single outcome `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self {
            elements: vec![CMatrix::identity(dim, dim)],
            labels: vec![Vec::new()],
        }
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[Vec<i8>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `Tr[M_x ρ]` for every element.
    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.elements.iter().map(|m| trace_product(m, rho)).collect()
    }
}

/// `Re Tr[A B]` for Hermitian `A`, `B`.
fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

/// Projectors onto `|±⟩^{⊗n}`, labelled by their σx eigenvalues.
pub fn sigma_x_product_povm(n: usize) -> Result<Povm> {
    if n == 0 {
        return Err(param("n", "at least one qubit"));
    }
    let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
    let minus = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)]);
    let reg1 = QubitRegister::anonymous(1)?;
    let mut elements = Vec::with_capacity(1 << n);
    let mut labels = Vec::with_capacity(1 << n);
    for outcome in 0..(1usize << n) {
        let mut label = Vec::with_capacity(n);
        let mut op: Option<OperatorMatrix> = None;
        for q in 0..n {
            let bit = (outcome >> (n - 1 - q)) & 1;
            label.push(if bit == 0 { 1 } else { -1 });
            let p = OperatorMatrix::from_parts(if bit == 0 { plus.clone() } else { minus.clone() }, reg1.clone());
            op = Some(match op {
                None => p,
                Some(acc) => kron(&acc, &p),
            });
        }
        elements.push(op.expect("n >= 1").into_data());
        labels.push(label);
    }
    Ok(Povm { elements, labels })
}

/// `Σ_x (Tr[M_x ∂ρ])² / Tr[M_x ρ]`.
pub fn cfi_matrix(rho: &CMatrix, drho: &CMatrix, povm: &Povm) -> Result<f64> {
    check_pair(rho, drho)?;
    if povm.dim() != rho.nrows() {
        return Err(Error::Dimension(format!(
            "POVM acts on dimension {}, state has {}",
            povm.dim(),
            rho.nrows()
        )));
    }
    let mut f = 0.0;
    for m in povm.elements() {
        let p = trace_product(m, rho);
        if p < CFI_PROBABILITY_FLOOR {
            continue;
        }
        let dp = trace_product(m, drho);
        f += dp * dp / p;
    }
    Ok(f)
}

pub fn cfi(rho: &DensityMatrix, drho: &OperatorMatrix, povm: &Povm) -> Result<f64> {
    cfi_matrix(rho.data(), drho.data(), povm)
}

/// Outcome of a Cramér–Rao evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PrecisionBound {
    Finite(f64),
    /// Zero Fisher information: no finite bound.
    Unbounded,
}

impl PrecisionBound {
    pub fn value(&self) -> Option<f64> {
        match *self {
            PrecisionBound::Finite(v) => Some(v),
            PrecisionBound::Unbounded => None,
        }
    }
}

/// `1/√(ν F)`.
pub fn qcrb(fisher: f64, repetitions: u64) -> Result<PrecisionBound> {
    if !(fisher >= 0.0 && fisher.is_finite()) {
        return Err(param("fisher", format!("{fisher} must be finite and >= 0")));
    }
    if repetitions == 0 {
        return Err(param("repetitions", "at least one repetition"));
    }
    if fisher == 0.0 {
        return Ok(PrecisionBound::Unbounded);
    }
    Ok(PrecisionBound::Finite(1.0 / (repetitions as f64 * fisher).sqrt()))
}

/// One row of a Fisher-information sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherRecord {
    pub t: f64,
    pub uc_qfi: f64,
    pub c_qfi: f64,
    pub uc_cfi: f64,
    pub c_cfi: f64,
}

impl FisherRecord {
    /// CFI never exceeds QFI within each pairing.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.uc_cfi <= self.uc_qfi + tol && self.c_cfi <= self.c_qfi + tol
    }
}

/// `‖∂ρ − ½(Lρ + ρL)‖₁` restricted to the support of ρ.
pub fn sld_residual(rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
    check_pair(rho, drho)?;
    let (vals, vecs, l) = sld_eigenbasis(rho, drho);
    let n = vals.len();
    let d_eig = vecs.adjoint() * drho * &vecs;
    let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&v| c(v, 0.0))));
    let mut r = d_eig - (&l * &lam + &lam * &l) * c(0.5, 0.0);
    for i in 0..n {
        for j in 0..n {
            if vals[i] + vals[j] < SLD_CUTOFF {
                r[(i, j)] = c(0.0, 0.0);
            }
        }
    }
    Ok(crate::quantum::trace_norm_matrix(&crate::quantum::hermitize(&r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ghz;
    use crate::dynamics::{propagate_with_derivative, Derivative, NoiseKind, NoiseModel, DEFAULT_DT};
    use crate::quantum::max_abs_diff;

    fn encoded(t: f64, noise: &NoiseModel) -> (DensityMatrix, OperatorMatrix) {
        propagate_with_derivative(&ghz(3).unwrap(), 1.0, noise, None, t, DEFAULT_DT, Derivative::Exact).unwrap()
    }

    fn ppd() -> NoiseModel {
        NoiseModel::new(NoiseKind::ppd(), vec![1, 2]).unwrap()
    }

    #[test]
    fn pure_state_sld_is_twice_derivative() {
        let (rho, drho) = encoded(1.3, &NoiseModel::noiseless());
        let l = sld(&rho, &drho).unwrap();
        assert!(max_abs_diff(l.data(), &(drho.data() * c(2.0, 0.0))) < 1e-8);
        assert!(sld_residual(rho.data(), drho.data()).unwrap() < 1e-8);
    }

    #[test]
    fn zero_derivative_gives_zero() {
        let rho = ghz(3).unwrap();
        let zero = OperatorMatrix::zeros(rho.register().clone());
        assert!(sld(&rho, &zero).unwrap().data().iter().all(|z| z.norm() == 0.0));
        assert_eq!(qfi(&rho, &zero).unwrap(), 0.0);
    }

    #[test]
    fn maximally_mixed_sld_scales_derivative() {
        let reg = QubitRegister::anonymous(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(reg.clone());
        let mut d = CMatrix::zeros(4, 4);
        d[(0, 0)] = c(0.1, 0.0);
        d[(3, 3)] = c(-0.1, 0.0);
        d[(1, 2)] = c(0.03, -0.02);
        d[(2, 1)] = c(0.03, 0.02);
        let l = sld_matrix(rho.data(), &d).unwrap();
        assert!(max_abs_diff(&l, &(&d * c(4.0, 0.0))) < 1e-12);
    }

    #[test]
    fn noiseless_ghz_reaches_heisenberg_limit() {
        let povm = sigma_x_product_povm(3).unwrap();
        for t in 1..=5 {
            let t = t as f64;
            let (rho, drho) = encoded(t, &NoiseModel::noiseless());
            let q = qfi(&rho, &drho).unwrap();
            let via_l = {
                let l = sld(&rho, &drho).unwrap();
                (rho.data() * l.data() * l.data()).trace().re
            };
            assert!((q - 4.0 * t * t).abs() < 1e-6, "t={t} qfi={q}");
            assert!((q - via_l).abs() < 1e-8);
            let f = cfi(&rho, &drho, &povm).unwrap();
            assert!((f - q).abs() < 1e-6, "t={t} cfi={f}");
        }
    }

    #[test]
    fn dephased_ghz_qfi_oracle() {
        for &t in &[0.5, 1.0, 3.0] {
            let (rho, drho) = encoded(t, &ppd());
            let q = qfi(&rho, &drho).unwrap();
            let oracle = 4.0 * t * t * (-8.0 * crate::dynamics::PPD_RATE * t).exp();
            assert!((q - oracle).abs() < 1e-7, "t={t}: {q} vs {oracle}");
            let l = sld(&rho, &drho).unwrap();
            let alt = (drho.data() * l.data()).trace().re;
            assert!((q - alt).abs() < 1e-8);
        }
    }

    #[test]
    fn cfi_trivial_and_computational_basis() {
        let (rho, drho) = encoded(1.0, &ppd());
        assert_eq!(cfi(&rho, &drho, &Povm::trivial(8)).unwrap(), 0.0);
        let elements: Vec<CMatrix> = (0..8)
            .map(|k| {
                let mut m = CMatrix::zeros(8, 8);
                m[(k, k)] = c(1.0, 0.0);
                m
            })
            .collect();
        let povm = Povm::new(elements, (0..8).map(|k| vec![k as i8]).collect()).unwrap();
        assert!(cfi(&rho, &drho, &povm).unwrap() < 1e-12);
    }

    #[test]
    fn sigma_x_povm_is_complete() {
        let one = sigma_x_product_povm(1).unwrap();
        assert_eq!(one.labels(), &[vec![1], vec![-1]]);
        assert!(one.elements()[0].iter().all(|z| (z.re - 0.5).abs() < 1e-15));
        let three = sigma_x_product_povm(3).unwrap();
        assert_eq!(three.len(), 8);
        let mut sum = CMatrix::zeros(8, 8);
        for (a, ma) in three.elements().iter().enumerate() {
            sum += ma;
            for (b, mb) in three.elements().iter().enumerate() {
                let prod = ma * mb;
                let expected = if a == b { ma.clone() } else { CMatrix::zeros(8, 8) };
                assert!(max_abs_diff(&prod, &expected) < 1e-14);
            }
        }
        assert!(max_abs_diff(&sum, &CMatrix::identity(8, 8)) < 1e-14);
        assert_eq!(three.labels()[5], vec![-1, 1, -1]);
        assert!(Povm::new(three.elements()[..7].to_vec(), three.labels()[..7].to_vec()).is_err());
        assert!(sigma_x_product_povm(0).is_err());
    }

    #[test]
    fn cfi_independent_of_outcome_order() {
        let (rho, drho) = encoded(2.0, &ppd());
        let povm = sigma_x_product_povm(3).unwrap();
        let mut els = povm.elements().to_vec();
        let mut labels = povm.labels().to_vec();
        els.reverse();
        labels.reverse();
        els.swap(1, 5);
        labels.swap(1, 5);
        let shuffled = Povm::new(els, labels).unwrap();
        let a = cfi(&rho, &drho, &povm).unwrap();
        let b = cfi(&rho, &drho, &shuffled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn qcrb_formula() {
        assert_eq!(qcrb(4.0, 1).unwrap(), PrecisionBound::Finite(0.5));
        let a = qcrb(7.0, 10).unwrap().value().unwrap();
        let b = qcrb(7.0, 40).unwrap().value().unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert_eq!(qcrb(0.0, 3).unwrap(), PrecisionBound::Unbounded);
        assert!(qcrb(-1.0, 3).is_err());
        assert!(qcrb(1.0, 0).is_err());
        // protocol-level bound 1/(p_s N_S² t_s²)
        let (p_s, n_s, t_s) = (1000u64, 2.0, 0.5);
        let v = qcrb(n_s * n_s * t_s * t_s, p_s).unwrap().value().unwrap();
        assert!((v * v - 1.0 / (p_s as f64 * n_s * n_s * t_s * t_s)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let rho = ghz(3).unwrap();
        assert!(qfi_matrix(rho.data(), &CMatrix::zeros(4, 4)).is_err());
        assert!(cfi_matrix(rho.data(), &CMatrix::zeros(8, 8), &Povm::trivial(4)).is_err());
    }
}
