//! Factorized propagation for generators that are sums of single-qubit terms.
//!
//! Encoding, local controls and the per-qubit noise models never couple
//! qubits, so `exp(t·𝓛)` is a tensor product of 4×4 single-qubit channels.
//! Everything here is checked against the full d²×d² superoperator path.

use std::ops::Mul;

use nalgebra::{Matrix2, Matrix4, SMatrix};

use super::{Derivative, Lindbladian, NoiseModel};
use crate::control::ControlPulse;
use crate::error::{param, Error, Result};
use crate::quantum::{expm_fixed, CMatrix, C64};

pub type Super4 = Matrix4<C64>;
pub type Mat2 = Matrix2<C64>;
/// `[[E, ∂E], [0, E]]` for a single-qubit channel `E` and its ω-derivative.
pub type Super8 = SMatrix<C64, 8, 8>;

pub(crate) fn paulis() -> [Mat2; 3] {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        Mat2::new(o, one, one, o),
        Mat2::new(o, -i, i, o),
        Mat2::new(one, o, o, -one),
    ]
}

/// Column-stacking superoperator of `-i[H, ·] + Σ γ (L·L† - ½{L†L, ·})`.
pub(crate) fn qubit_generator(h: &Mat2, jumps: &[(f64, Mat2)]) -> Super4 {
    let id = Mat2::identity();
    let mut g = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for (rate, l) in jumps {
        let ldl = l.adjoint() * l;
        let term = l.conjugate().kronecker(l)
            - id.kronecker(&ldl) * C64::new(0.5, 0.0)
            - ldl.transpose().kronecker(&id) * C64::new(0.5, 0.0);
        g += term * C64::new(*rate, 0.0);
    }
    g
}

/// In-place application of a single-qubit channel to qubit `q` of an `n`-qubit state.
pub(crate) fn apply_qubit_channel(rho: &mut CMatrix, channel: &Super4, q: usize, n: usize) {
    let mask = 1usize << (n - 1 - q);
    let d = rho.nrows();
    for i0 in (0..d).filter(|i| i & mask == 0) {
        let i1 = i0 | mask;
        for j0 in (0..d).filter(|j| j & mask == 0) {
            let j1 = j0 | mask;
            // column-stacked 2×2 block: (0,0), (1,0), (0,1), (1,1)
            let v = [rho[(i0, j0)], rho[(i1, j0)], rho[(i0, j1)], rho[(i1, j1)]];
            let mut out = [C64::new(0.0, 0.0); 4];
            for (r, o) in out.iter_mut().enumerate() {
                *o = channel[(r, 0)] * v[0]
                    + channel[(r, 1)] * v[1]
                    + channel[(r, 2)] * v[2]
                    + channel[(r, 3)] * v[3];
            }
            rho[(i0, j0)] = out[0];
            rho[(i1, j0)] = out[1];
            rho[(i0, j1)] = out[2];
            rho[(i1, j1)] = out[3];
        }
    }
}

/// Role of one qubit with nontrivial dynamics.
#[derive(Debug, Clone)]
struct ActiveQubit {
    index: usize,
    sensing: bool,
    control_slot: Option<usize>,
    noisy: bool,
}

/// Evolution of a register under `H_ω + H_c(t)` and per-qubit Lindblad noise.
#[derive(Debug, Clone)]
pub struct LocalEvolution {
    n_qubits: usize,
    sensing: Vec<usize>,
    noise: NoiseModel,
    active: Vec<ActiveQubit>,
    jumps: Vec<(f64, Mat2)>,
}

impl LocalEvolution {
    /// Controls act on the sensing qubits, in order.
    pub fn new(n_qubits: usize, sensing: Vec<usize>, noise: NoiseModel) -> Result<Self> {
        if sensing.is_empty() {
            return Err(param("sensing", "at least one sensing qubit required"));
        }
        for &q in sensing.iter().chain(noise.targets()) {
            if q >= n_qubits {
                return Err(Error::QubitIndex {
                    index: q,
                    n: n_qubits,
                });
            }
        }
        let mut indices: Vec<usize> = sensing.iter().chain(noise.targets()).copied().collect();
        indices.sort_unstable();
        indices.dedup();
        let active = indices
            .into_iter()
            .map(|index| ActiveQubit {
                index,
                sensing: sensing.contains(&index),
                control_slot: sensing.iter().position(|&s| s == index),
                noisy: noise.targets().contains(&index),
            })
            .collect();
        let jumps = noise.single_qubit_jumps();
        Ok(Self {
            n_qubits,
            sensing,
            noise,
            active,
            jumps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn sensing(&self) -> &[usize] {
        &self.sensing
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub(crate) fn active_len(&self) -> usize {
        self.active.len()
    }

    pub(crate) fn active_slot(&self, k: usize) -> Option<usize> {
        self.active[k].control_slot
    }

    /// Single-qubit Hamiltonian `(ω/2)σz + Σ c_a σ_a` for active qubit `k`.
    fn qubit_hamiltonian(&self, k: usize, omega: f64, controls: Option<[f64; 3]>) -> Mat2 {
        let q = &self.active[k];
        let [x, y, z] = paulis();
        let mut h = Mat2::zeros();
        if q.sensing {
            h += z * C64::new(omega / 2.0, 0.0);
        }
        if let Some([a, b, cz]) = controls {
            h += x * C64::new(a, 0.0) + y * C64::new(b, 0.0) + z * C64::new(cz, 0.0);
        }
        h
    }

    pub(crate) fn generator(&self, k: usize, omega: f64, controls: Option<[f64; 3]>) -> Super4 {
        let h = self.qubit_hamiltonian(k, omega, controls);
        if self.active[k].noisy {
            qubit_generator(&h, &self.jumps)
        } else {
            qubit_generator(&h, &[])
        }
    }

    pub(crate) fn segment_channel(
        &self,
        k: usize,
        omega: f64,
        controls: Option<[f64; 3]>,
        duration: f64,
    ) -> Super4 {
        expm_fixed(&(self.generator(k, omega, controls) * C64::new(duration, 0.0)))
    }

    /// Segment channel with its ω-derivative in the upper-right block.
    ///
    /// `exp(τ [[𝓛, ∂𝓛], [0, 𝓛]])` carries `∂ exp(τ𝓛)` there, and products of
    /// such blocks follow the product rule, so composing them propagates the
    /// exact derivative.
    pub(crate) fn segment_block(
        &self,
        k: usize,
        omega: f64,
        controls: Option<[f64; 3]>,
        duration: f64,
    ) -> Super8 {
        let g = self.generator(k, omega, controls);
        let mut big = Super8::zeros();
        big.fixed_view_mut::<4, 4>(0, 0).copy_from(&g);
        big.fixed_view_mut::<4, 4>(4, 4).copy_from(&g);
        if self.active[k].sensing {
            let dh = paulis()[2] * C64::new(0.5, 0.0);
            big.fixed_view_mut::<4, 4>(0, 4).copy_from(&qubit_generator(&dh, &[]));
        }
        expm_fixed(&(big * C64::new(duration, 0.0)))
    }

    fn check_pulse(&self, pulse: &ControlPulse) -> Result<()> {
        if pulse.qubits() != self.sensing.len() {
            return Err(Error::Dimension(format!(
                "pulse drives {} qubits, evolution has {} sensing qubits",
                pulse.qubits(),
                self.sensing.len()
            )));
        }
        Ok(())
    }

    /// Per-active-qubit segment maps built by `make(k, controls, τ)`, in time order.
    fn segments<M: Clone>(
        &self,
        pulse: Option<&ControlPulse>,
        total_time: f64,
        dt: f64,
        make: impl Fn(usize, Option<[f64; 3]>, f64) -> M,
    ) -> Result<Vec<Vec<M>>> {
        check_times(total_time, dt)?;
        match pulse {
            Some(p) => {
                self.check_pulse(p)?;
                if (p.duration() - total_time).abs() > 1e-12 * total_time.max(1.0) {
                    return Err(param(
                        "total_time",
                        format!("pulse lasts {} but evolution lasts {total_time}", p.duration()),
                    ));
                }
                let tau = p.segment_duration();
                Ok((0..self.active.len())
                    .map(|k| {
                        (0..p.segments())
                            .map(|s| make(k, self.active[k].control_slot.map(|slot| p.controls(slot, s)), tau))
                            .collect()
                    })
                    .collect())
            }
            None => {
                let steps = step_count(total_time, dt);
                if steps == 0 {
                    return Ok(vec![Vec::new(); self.active.len()]);
                }
                let tau = total_time / steps as f64;
                Ok((0..self.active.len())
                    .map(|k| vec![make(k, None, tau); steps])
                    .collect())
            }
        }
    }

    /// Apply one composed channel per active qubit.
    pub(crate) fn apply_channels(&self, rho0: &CMatrix, totals: &[Super4]) -> CMatrix {
        let mut rho = rho0.clone();
        for (k, ch) in totals.iter().enumerate() {
            apply_qubit_channel(&mut rho, ch, self.active[k].index, self.n_qubits);
        }
        rho
    }

    /// `(ρ, ∂ρ)` from one composed block per active qubit. The derivative of
    /// the product channel is the sum over qubits with one factor differentiated.
    pub(crate) fn apply_blocks(&self, rho0: &CMatrix, totals: &[Super8]) -> (CMatrix, CMatrix) {
        let channels: Vec<Super4> = totals.iter().map(|b| b.fixed_view::<4, 4>(0, 0).into_owned()).collect();
        let rho = self.apply_channels(rho0, &channels);
        let mut drho = CMatrix::zeros(rho0.nrows(), rho0.ncols());
        for (k, b) in totals.iter().enumerate() {
            if !self.active[k].sensing {
                continue;
            }
            let mut parts = channels.clone();
            parts[k] = b.fixed_view::<4, 4>(0, 4).into_owned();
            drho += self.apply_channels(rho0, &parts);
        }
        (crate::quantum::hermitize(&rho), crate::quantum::hermitize(&drho))
    }

    fn check_initial(&self, rho0: &CMatrix) -> Result<()> {
        if rho0.nrows() != 1 << self.n_qubits || rho0.ncols() != rho0.nrows() {
            return Err(Error::Dimension("initial state does not match register".into()));
        }
        Ok(())
    }

    /// ρ(T) as a raw matrix (hermitized).
    pub fn evolve_matrix(
        &self,
        rho0: &CMatrix,
        omega: f64,
        pulse: Option<&ControlPulse>,
        total_time: f64,
        dt: f64,
    ) -> Result<CMatrix> {
        self.check_initial(rho0)?;
        let channels = self.segments(pulse, total_time, dt, |k, c, tau| self.segment_channel(k, omega, c, tau))?;
        let totals: Vec<Super4> = channels.iter().map(|segs| compose(segs, Super4::identity())).collect();
        Ok(crate::quantum::hermitize(&self.apply_channels(rho0, &totals)))
    }

    /// ρ_ω(T) and `∂ρ/∂ω` by the requested method.
    pub fn evolve_with_derivative_matrix(
        &self,
        rho0: &CMatrix,
        omega: f64,
        pulse: Option<&ControlPulse>,
        total_time: f64,
        dt: f64,
        derivative: Derivative,
    ) -> Result<(CMatrix, CMatrix)> {
        derivative.validate()?;
        match derivative {
            Derivative::Exact => {
                self.check_initial(rho0)?;
                let blocks = self.segments(pulse, total_time, dt, |k, c, tau| self.segment_block(k, omega, c, tau))?;
                let totals: Vec<Super8> = blocks.iter().map(|segs| compose(segs, Super8::identity())).collect();
                Ok(self.apply_blocks(rho0, &totals))
            }
            Derivative::CentralDifference(delta) => {
                let rho = self.evolve_matrix(rho0, omega, pulse, total_time, dt)?;
                let plus = self.evolve_matrix(rho0, omega + delta, pulse, total_time, dt)?;
                let minus = self.evolve_matrix(rho0, omega - delta, pulse, total_time, dt)?;
                Ok((rho, (plus - minus) / C64::new(2.0 * delta, 0.0)))
            }
        }
    }

    /// Full superoperator for one segment, built through the general path.
    pub fn full_lindbladian(&self, omega: f64, controls: &[[f64; 3]]) -> Result<Lindbladian> {
        let register = crate::quantum::QubitRegister::anonymous(self.n_qubits)?;
        let h = super::encoding_hamiltonian(omega, &register, &self.sensing)?;
        let hc = if controls.is_empty() {
            None
        } else {
            Some(super::control_hamiltonian(&register, &self.sensing, controls)?)
        };
        super::build_lindbladian(&h, &self.noise, hc.as_ref())
    }
}

pub(crate) fn compose<M: Copy + Mul<Output = M>>(segments: &[M], identity: M) -> M {
    segments.iter().fold(identity, |acc, p| *p * acc)
}

pub(crate) fn check_times(total_time: f64, dt: f64) -> Result<()> {
    if !(total_time >= 0.0 && total_time.is_finite()) {
        return Err(param("total_time", format!("{total_time} must be finite and >= 0")));
    }
    if !(dt > 0.0) {
        return Err(param("dt", format!("{dt} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= super::MIN_DELTA_OMEGA && delta.is_finite()) {
        return Err(param(
            "delta_omega",
            format!("{delta} below {:e}; cancellation would dominate", super::MIN_DELTA_OMEGA),
        ));
    }
    Ok(())
}

pub(crate) fn step_count(total_time: f64, dt: f64) -> usize {
    if total_time == 0.0 {
        0
    } else {
        ((total_time / dt).round() as usize).max(1)
    }
}

/// Cached segment maps with prefix/suffix products, so a single-segment
/// perturbation costs one fresh segment map instead of a full propagation.
struct Track<M> {
    prefix: Vec<M>,
    suffix: Vec<M>,
}

impl<M: Copy + Mul<Output = M>> Track<M> {
    fn new(segs: &[M], identity: M) -> Self {
        let m = segs.len();
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(identity);
        for s in 0..m {
            prefix.push(segs[s] * prefix[s]);
        }
        let mut suffix = vec![identity; m + 1];
        for s in (0..m).rev() {
            suffix[s] = suffix[s + 1] * segs[s];
        }
        Self { prefix, suffix }
    }

    /// Total map with segment `s` replaced by `p`.
    fn with_segment(&self, s: usize, p: M) -> M {
        self.suffix[s + 1] * p * self.prefix[s]
    }

    fn total(&self) -> M {
        self.suffix[0]
    }
}

enum Tracks {
    Exact(Vec<Track<Super8>>),
    /// Branches at ω − δ, ω, ω + δ.
    Difference(f64, [Vec<Track<Super4>>; 3]),
}

pub(crate) struct SegmentedPropagator<'a> {
    evolution: &'a LocalEvolution,
    omega: f64,
    tau: f64,
    tracks: Tracks,
}

impl<'a> SegmentedPropagator<'a> {
    pub(crate) fn new(
        evolution: &'a LocalEvolution,
        omega: f64,
        pulse: &ControlPulse,
        derivative: Derivative,
    ) -> Result<Self> {
        derivative.validate()?;
        evolution.check_pulse(pulse)?;
        let m = pulse.segments();
        let tau = pulse.segment_duration();
        let controls = |k: usize, s: usize| evolution.active_slot(k).map(|sl| pulse.controls(sl, s));
        let tracks = match derivative {
            Derivative::Exact => Tracks::Exact(
                (0..evolution.active_len())
                    .map(|k| {
                        let segs: Vec<Super8> =
                            (0..m).map(|s| evolution.segment_block(k, omega, controls(k, s), tau)).collect();
                        Track::new(&segs, Super8::identity())
                    })
                    .collect(),
            ),
            Derivative::CentralDifference(delta) => {
                let branch = |w: f64| -> Vec<Track<Super4>> {
                    (0..evolution.active_len())
                        .map(|k| {
                            let segs: Vec<Super4> =
                                (0..m).map(|s| evolution.segment_channel(k, w, controls(k, s), tau)).collect();
                            Track::new(&segs, Super4::identity())
                        })
                        .collect()
                };
                Tracks::Difference(delta, [branch(omega - delta), branch(omega), branch(omega + delta)])
            }
        };
        Ok(Self {
            evolution,
            omega,
            tau,
            tracks,
        })
    }

    /// `(ρ, ∂ρ)` when segment `segment` of control slot `slot` uses
    /// `controls` instead of the cached amplitudes.
    pub(crate) fn perturbed(
        &self,
        rho0: &CMatrix,
        slot: usize,
        segment: usize,
        controls: [f64; 3],
    ) -> (CMatrix, CMatrix) {
        let ev = self.evolution;
        let hit = |k: usize| ev.active_slot(k) == Some(slot);
        match &self.tracks {
            Tracks::Exact(tracks) => {
                let totals: Vec<Super8> = tracks
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        if hit(k) {
                            t.with_segment(segment, ev.segment_block(k, self.omega, Some(controls), self.tau))
                        } else {
                            t.total()
                        }
                    })
                    .collect();
                ev.apply_blocks(rho0, &totals)
            }
            Tracks::Difference(delta, branches) => {
                let omegas = [self.omega - delta, self.omega, self.omega + delta];
                let states: Vec<CMatrix> = branches
                    .iter()
                    .zip(omegas)
                    .map(|(tracks, w)| {
                        let totals: Vec<Super4> = tracks
                            .iter()
                            .enumerate()
                            .map(|(k, t)| {
                                if hit(k) {
                                    t.with_segment(segment, ev.segment_channel(k, w, Some(controls), self.tau))
                                } else {
                                    t.total()
                                }
                            })
                            .collect();
                        crate::quantum::hermitize(&ev.apply_channels(rho0, &totals))
                    })
                    .collect();
                let drho = (&states[2] - &states[0]) / C64::new(2.0 * delta, 0.0);
                (states[1].clone(), drho)
            }
        }
    }
}
