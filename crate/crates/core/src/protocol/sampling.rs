use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::metrology::sigma_x_product_povm;
use crate::quantum::DensityMatrix;

/// Finite distribution over `0..n`; tiny negative weights from rounding are clamped.
#[derive(Debug, Clone)]
pub(crate) struct Categorical(WeightedIndex<f64>);

impl Categorical {
    pub(crate) fn new(probs: &[f64]) -> Result<Self> {
        let w: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
        WeightedIndex::new(w)
            .map(Categorical)
            .map_err(|e| param("probabilities", e.to_string()))
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.0.sample(rng)
    }
}

/// σx outcomes of one measurement round, +1 or −1 per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub bob: Vec<i8>,
    pub alice: Vec<i8>,
}

impl RoundOutcome {
    /// Product of all outcomes.
    pub fn parity(&self) -> i8 {
        self.bob.iter().chain(&self.alice).product()
    }
}

/// Product-σx statistics of a state, sampled Bob first and then Alice
/// conditioned on Bob's result.
#[derive(Debug, Clone)]
pub struct RoundSampler {
    n_alice: usize,
    n_bob: usize,
    bob: Categorical,
    alice_given_bob: Vec<Option<Categorical>>,
}

impl RoundSampler {
    /// Expects Alice's qubits first, as in every register built by this crate.
    pub fn new(state: &DensityMatrix) -> Result<Self> {
        let reg = state.register();
        let n_alice = reg.alice_qubits().len();
        let n_bob = reg.bob_qubits().len();
        if reg.alice_qubits() != (0..n_alice).collect::<Vec<_>>() {
            return Err(param("register", "Alice's qubits must come first"));
        }
        let joint = sigma_x_product_povm(reg.len())?.probabilities(state.data());
        let nb = 1usize << n_bob;
        let na = 1usize << n_alice;
        let marginal: Vec<f64> = (0..nb)
            .map(|b| (0..na).map(|a| joint[(a << n_bob) | b].max(0.0)).sum())
            .collect();
        let bob = Categorical::new(&marginal)?;
        let alice_given_bob = (0..nb)
            .map(|b| {
                if marginal[b] > 0.0 {
                    let cond: Vec<f64> = (0..na).map(|a| joint[(a << n_bob) | b]).collect();
                    Categorical::new(&cond).ok()
                } else {
                    None
                }
            })
            .collect();
        Ok(Self {
            n_alice,
            n_bob,
            bob,
            alice_given_bob,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundOutcome {
        let b = self.bob.sample(rng);
        let a = match &self.alice_given_bob[b] {
            Some(cat) => cat.sample(rng),
            None => 0,
        };
        RoundOutcome {
            bob: signs(b, self.n_bob),
            alice: signs(a, self.n_alice),
        }
    }
}

fn signs(bits: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|q| if (bits >> (n - 1 - q)) & 1 == 0 { 1 } else { -1 })
        .collect()
}

/// One σx round on `state`.
pub fn measure_round<R: Rng + ?Sized>(state: &DensityMatrix, rng: &mut R) -> Result<RoundOutcome> {
    Ok(RoundSampler::new(state)?.sample(rng))
}
