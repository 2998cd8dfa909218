//! GHZ probe states and the communication-channel noise maps.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quantum::{c, CMatrix, DensityMatrix, QubitRegister};

/// Noise picked up while the probe qubits travel to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    Ideal,
    /// `(1-λ)ρ + λ I/d` over the whole register.
    SymmetricDepolarize { lambda: f64 },
    /// Single-qubit depolarizing Kraus map on each transmitted (Bob) qubit.
    AsymmetricDepolarize { gamma: f64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Ideal => Ok(()),
            ChannelModel::SymmetricDepolarize { lambda } => check_lambda(lambda),
            ChannelModel::AsymmetricDepolarize { gamma } => check_gamma(gamma),
        }
    }

    /// Applies the channel; the asymmetric map hits every Bob qubit of the register.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match *self {
            ChannelModel::Ideal => Ok(rho.clone()),
            ChannelModel::SymmetricDepolarize { lambda } => depolarize_symmetric(rho, lambda),
            ChannelModel::AsymmetricDepolarize { gamma } => {
                let bob = rho.register().bob_qubits();
                depolarize_qubits(rho, gamma, &bob)
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(param("lambda", format!("{lambda} not in [0, 1]")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=4.0 / 3.0).contains(&gamma) {
        return Err(param("gamma", format!("{gamma} not in [0, 4/3]")));
    }
    Ok(())
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits; qubit 0 belongs to Alice, the rest to Bob.
pub fn ghz(n: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(param("n", "GHZ state needs at least one qubit"));
    }
    ghz_on(QubitRegister::split(1, n - 1)?)
}

pub fn ghz_on(register: QubitRegister) -> Result<DensityMatrix> {
    let d = register.dim();
    let mut data = CMatrix::zeros(d, d);
    for &i in &[0, d - 1] {
        for &j in &[0, d - 1] {
            data[(i, j)] = c(0.5, 0.0);
        }
    }
    Ok(DensityMatrix::from_parts(data, register))
}

pub fn depolarize_symmetric(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    check_lambda(lambda)?;
    let d = rho.dim();
    let mixed = CMatrix::identity(d, d) * c(lambda / d as f64, 0.0);
    Ok(DensityMatrix::from_parts(
        rho.data() * c(1.0 - lambda, 0.0) + mixed,
        rho.register().clone(),
    ))
}

/// Depolarizing Kraus map `K0 = √(1-3Γ/4) I`, `K1..3 = √(Γ/4) {X, Y, Z}` on the
/// two Bob qubits of a three-qubit state, identity on Alice's qubit.
pub fn depolarize_asymmetric(rho: &DensityMatrix, gamma: f64) -> Result<DensityMatrix> {
    if rho.num_qubits() != 3 {
        return Err(Error::Dimension(format!(
            "asymmetric depolarization expects 3 qubits, got {}",
            rho.num_qubits()
        )));
    }
    depolarize_qubits(rho, gamma, &[1, 2])
}

/// Single-qubit depolarizing map with strength `gamma` on each listed qubit.
pub fn depolarize_qubits(rho: &DensityMatrix, gamma: f64, qubits: &[usize]) -> Result<DensityMatrix> {
    check_gamma(gamma)?;
    let reg = rho.register();
    for &q in qubits {
        reg.check_index(q)?;
    }
    // Σ_k K_k ρ K_k† = (1-Γ)ρ + Γ·(Tr_q ρ)⊗I/2: coherences in the qubit's
    // basis shrink by (1-Γ), populations relax toward 1/2.
    let n = reg.len();
    let mut data = rho.data().clone();
    for &q in qubits {
        let mask = 1usize << (n - 1 - q);
        let d = data.nrows();
        let mut next = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let same = (i & mask) == (j & mask);
                let v = data[(i, j)];
                if same {
                    let partner = data[(i ^ mask, j ^ mask)];
                    next[(i, j)] = v * (1.0 - gamma / 2.0) + partner * (gamma / 2.0);
                } else {
                    next[(i, j)] = v * (1.0 - gamma);
                }
            }
        }
        data = next;
    }
    Ok(DensityMatrix::from_parts(data, reg.clone()))
}

/// Closed-form matrix elements of the asymmetrically depolarized GHZ₃ state,
/// labelled with the Kraus-noised qubits in the first two tensor slots and the
/// untouched qubit in the third (1-based indices as usually printed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetricGhzElements {
    /// ρ₁,₁ = ρ₈,₈
    pub corner_population: f64,
    /// ρ₂,₂ = ρ₇,₇
    pub flipped_both: f64,
    /// ρ₃,₃ = ρ₆,₆ = ρ₄,₄ = ρ₅,₅
    pub flipped_one: f64,
    /// ρ₁,₈ = ρ₈,₁
    pub coherence: f64,
}

impl AsymmetricGhzElements {
    pub fn new(gamma: f64) -> Self {
        let g = gamma;
        let a = ((4.0 - 3.0 * g) * g).abs();
        Self {
            corner_population: (a + (5.0 * g - 12.0) * g + 8.0) / 16.0,
            flipped_both: g * g / 8.0,
            flipped_one: (a + g * g) / 16.0,
            coherence: (-(4.0 - 3.0 * g).abs() * g.abs() + g * (5.0 * g - 12.0) + 8.0) / 16.0,
        }
    }

    /// Full 8×8 matrix in the slot labelling (noised, noised, untouched).
    pub fn slot_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(8, 8);
        let diag = [
            self.corner_population,
            self.flipped_both,
            self.flipped_one,
            self.flipped_one,
            self.flipped_one,
            self.flipped_one,
            self.flipped_both,
            self.corner_population,
        ];
        for (k, v) in diag.iter().enumerate() {
            m[(k, k)] = c(*v, 0.0);
        }
        m[(0, 7)] = c(self.coherence, 0.0);
        m[(7, 0)] = c(self.coherence, 0.0);
        m
    }

    /// Same matrix in register order (Alice, Bob₁, Bob₂).
    pub fn register_matrix(&self) -> CMatrix {
        let slot = self.slot_matrix();
        CMatrix::from_fn(8, 8, |i, j| slot[(register_to_slot(i), register_to_slot(j))])
    }
}

/// Basis index `|a b1 b2⟩` → slot index `|b1 b2 a⟩`.
pub fn register_to_slot(i: usize) -> usize {
    let a = (i >> 2) & 1;
    ((i & 0b11) << 1) | a
}

/// Convert an 8×8 matrix from register order to slot order.
pub fn to_slot_order(m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(8, 8);
    for i in 0..8 {
        for j in 0..8 {
            out[(register_to_slot(i), register_to_slot(j))] = m[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::C64;
    use crate::quantum::{max_abs_diff, pauli_x, pauli_y, pauli_z};

    /// Explicit Σᵢⱼ (I ⊗ Kᵢ ⊗ Kⱼ) ρ (…)† with Alice's identity first.
    fn kraus_oracle(rho: &CMatrix, gamma: f64) -> CMatrix {
        let k = [
            CMatrix::identity(2, 2) * c((1.0 - 3.0 * gamma / 4.0).sqrt(), 0.0),
            pauli_x() * c((gamma / 4.0).sqrt(), 0.0),
            pauli_y() * c((gamma / 4.0).sqrt(), 0.0),
            pauli_z() * c((gamma / 4.0).sqrt(), 0.0),
        ];
        let mut out = CMatrix::zeros(8, 8);
        for ki in &k {
            for kj in &k {
                let op = CMatrix::identity(2, 2).kronecker(ki).kronecker(kj);
                out += &op * rho * op.adjoint();
            }
        }
        out
    }

    #[test]
    fn ghz3_elements() {
        let g = ghz(3).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if (i == 0 || i == 7) && (j == 0 || j == 7) { 0.5 } else { 0.0 };
                assert_eq!(g.data()[(i, j)], c(expected, 0.0));
            }
        }
        assert_eq!(g.register().alice_qubits(), vec![0]);
    }

    #[test]
    fn ghz1_is_plus_state() {
        let g = ghz(1).unwrap();
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        assert_eq!(g.data(), &plus);
    }

    #[test]
    fn ghz_is_pure() {
        for n in 1..=5 {
            assert!((ghz(n).unwrap().purity() - 1.0).abs() < 1e-14);
        }
        assert!(ghz(0).is_err());
    }

    #[test]
    fn symmetric_depolarization_values() {
        let g = ghz(3).unwrap();
        assert_eq!(depolarize_symmetric(&g, 0.0).unwrap().data(), g.data());
        let full = depolarize_symmetric(&g, 1.0).unwrap();
        assert!(max_abs_diff(full.data(), &(CMatrix::identity(8, 8) / c(8.0, 0.0))) < 1e-16);
        let half = depolarize_symmetric(&g, 0.5).unwrap();
        assert!((half.data()[(0, 7)].re - 0.25).abs() < 1e-16);
        assert!((half.data()[(0, 0)].re - (0.25 + 1.0 / 16.0)).abs() < 1e-16);
        assert!(depolarize_symmetric(&g, 1.1).is_err());
        assert!(depolarize_symmetric(&g, -0.1).is_err());
    }

    #[test]
    fn symmetric_depolarization_composes() {
        let g = ghz(3).unwrap();
        let (l1, l2) = (0.2, 0.35);
        let twice = depolarize_symmetric(&depolarize_symmetric(&g, l1).unwrap(), l2).unwrap();
        let once = depolarize_symmetric(&g, 1.0 - (1.0 - l1) * (1.0 - l2)).unwrap();
        assert!(max_abs_diff(twice.data(), once.data()) < 1e-15);
    }

    #[test]
    fn asymmetric_matches_kraus_oracle() {
        let g = ghz(3).unwrap();
        for &gamma in &[0.0, 0.06, 0.5, 1.0, 4.0 / 3.0] {
            let ours = depolarize_asymmetric(&g, gamma).unwrap();
            let oracle = kraus_oracle(g.data(), gamma);
            assert!(max_abs_diff(ours.data(), &oracle) <= 1e-12, "gamma {gamma}");
        }
    }

    #[test]
    fn asymmetric_oracle_on_generic_state() {
        let psi: Vec<C64> = (0..8).map(|k| c(0.1 * k as f64 + 0.2, 0.05 * (k as f64) - 0.1)).collect();
        let rho = DensityMatrix::pure(&psi, QubitRegister::split(1, 2).unwrap()).unwrap();
        let ours = depolarize_asymmetric(&rho, 0.3).unwrap();
        assert!(max_abs_diff(ours.data(), &kraus_oracle(rho.data(), 0.3)) <= 1e-14);
    }

    #[test]
    fn asymmetric_closed_form_values() {
        let e = AsymmetricGhzElements::new(0.06);
        assert!((e.corner_population - 0.47045).abs() < 1e-12);
        assert!((e.coherence - 0.44180).abs() < 1e-12);
        assert!((e.flipped_both - 4.5e-4).abs() < 1e-15);
        let e0 = AsymmetricGhzElements::new(0.0);
        assert_eq!(e0.corner_population, 0.5);
        assert_eq!(e0.coherence, 0.5);
    }

    #[test]
    fn asymmetric_channel_in_slot_order_matches_closed_form() {
        let g = ghz(3).unwrap();
        for &gamma in &[0.0, 0.06, 0.5, 1.0] {
            let out = depolarize_asymmetric(&g, gamma).unwrap();
            let slot = to_slot_order(out.data());
            let expected = AsymmetricGhzElements::new(gamma).slot_matrix();
            assert!(max_abs_diff(&slot, &expected) <= 1e-12, "gamma {gamma}");
            // ρ₂,₂ in slot labelling is the |001⟩ population
            assert!((slot[(1, 1)].re - gamma * gamma / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn asymmetric_rejects_bad_input() {
        assert!(depolarize_asymmetric(&ghz(2).unwrap(), 0.1).is_err());
        assert!(depolarize_asymmetric(&ghz(3).unwrap(), 1.5).is_err());
    }

    #[test]
    fn channel_model_dispatch() {
        let g = ghz(3).unwrap();
        let m = ChannelModel::AsymmetricDepolarize { gamma: 0.06 };
        assert_eq!(
            m.apply(&g).unwrap().data(),
            depolarize_asymmetric(&g, 0.06).unwrap().data()
        );
        assert!(ChannelModel::SymmetricDepolarize { lambda: 2.0 }.validate().is_err());
    }
}
