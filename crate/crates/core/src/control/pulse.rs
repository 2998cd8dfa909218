use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Piecewise-constant local control amplitudes.
///
/// Each controlled qubit has three channels (σx, σy, σz), so the 3-qubit
/// instance with Bob's two qubits carries six channels `(u1, u2, u3, v1, v2, v3)`.
/// Amplitudes are stored channel-major: `amplitudes[channel * segments + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    duration: f64,
    segments: usize,
    qubits: usize,
    amplitudes: Vec<f64>,
}

impl ControlPulse {
    pub fn zero(duration: f64, segments: usize, qubits: usize) -> Result<Self> {
        Self::from_amplitudes(duration, segments, qubits, vec![0.0; 3 * qubits * segments])
    }

    pub fn from_amplitudes(
        duration: f64,
        segments: usize,
        qubits: usize,
        amplitudes: Vec<f64>,
    ) -> Result<Self> {
        if segments == 0 {
            return Err(param("segments", "a pulse needs at least one segment"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(param("duration", format!("{duration} must be positive")));
        }
        if amplitudes.len() != 3 * qubits * segments {
            return Err(param(
                "amplitudes",
                format!(
                    "expected {} values for {qubits} qubits x {segments} segments, got {}",
                    3 * qubits * segments,
                    amplitudes.len()
                ),
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(param("amplitudes", "non-finite amplitude"));
        }
        Ok(Self {
            duration,
            segments,
            qubits,
            amplitudes,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn channels(&self) -> usize {
        3 * self.qubits
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / self.segments as f64
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    pub fn amplitude(&self, channel: usize, segment: usize) -> f64 {
        self.amplitudes[channel * self.segments + segment]
    }

    /// (σx, σy, σz) coefficients for controlled qubit `slot` during `segment`.
    pub fn controls(&self, slot: usize, segment: usize) -> [f64; 3] {
        let base = 3 * slot;
        [
            self.amplitude(base, segment),
            self.amplitude(base + 1, segment),
            self.amplitude(base + 2, segment),
        ]
    }

    /// Channel and segment of a flat amplitude index.
    pub fn locate(&self, index: usize) -> (usize, usize) {
        (index / self.segments, index % self.segments)
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitudes.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn clip(&mut self, amplitude_max: f64) {
        for a in &mut self.amplitudes {
            *a = a.clamp(-amplitude_max, amplitude_max);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|a| *a == 0.0)
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        Self {
            amplitudes,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_channel_major() {
        let amps: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let p = ControlPulse::from_amplitudes(1.0, 2, 2, amps).unwrap();
        assert_eq!(p.channels(), 6);
        assert_eq!(p.controls(0, 1), [1.0, 3.0, 5.0]);
        assert_eq!(p.controls(1, 0), [6.0, 8.0, 10.0]);
        assert_eq!(p.locate(7), (3, 1));
        assert_eq!(p.segment_duration() * p.segments() as f64, p.duration());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ControlPulse::zero(1.0, 0, 2).is_err());
        assert!(ControlPulse::zero(0.0, 3, 2).is_err());
        assert!(ControlPulse::from_amplitudes(1.0, 2, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn clip_bounds_amplitudes() {
        let mut p = ControlPulse::from_amplitudes(1.0, 1, 1, vec![-7.0, 2.0, 9.0]).unwrap();
        p.clip(5.0);
        assert_eq!(p.amplitudes(), &[-5.0, 2.0, 5.0]);
        assert_eq!(p.max_abs(), 5.0);
    }
}
