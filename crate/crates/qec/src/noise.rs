//! Data-qubit Pauli frames, depolarizing noise and faulty syndrome extraction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::layout::{CheckKind, SurfaceCodeLayout};
use crate::QecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing probability per data qubit per round.
    pub p: f64,
    /// Probability that a reported syndrome bit is flipped.
    pub q: f64,
}

impl NoiseModel {
    pub fn new(p: f64, q: f64) -> Result<Self, QecError> {
        let model = NoiseModel { p, q };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless() -> Self {
        NoiseModel { p: 0.0, q: 0.0 }
    }

    pub fn validate(&self) -> Result<(), QecError> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(QecError::InvalidProbability { name, value: v });
            }
        }
        Ok(())
    }
}

/// Pauli frame over data qubits; `Y` sets both bits.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorState {
    pub x_errors: Vec<bool>,
    pub z_errors: Vec<bool>,
}

impl ErrorState {
    pub fn clean(num_qubits: usize) -> Self {
        ErrorState {
            x_errors: vec![false; num_qubits],
            z_errors: vec![false; num_qubits],
        }
    }

    pub fn len(&self) -> usize {
        self.x_errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_errors.is_empty()
    }

    pub fn apply(&mut self, qubit: usize, pauli: Pauli) {
        let (x, z) = pauli.bits();
        self.x_errors[qubit] ^= x;
        self.z_errors[qubit] ^= z;
    }

    pub fn is_identity(&self) -> bool {
        !self.x_errors.iter().chain(&self.z_errors).any(|&b| b)
    }

    /// Composes another frame (or a correction) into this one.
    pub fn compose(&mut self, x: &[bool], z: &[bool]) {
        for (a, &b) in self.x_errors.iter_mut().zip(x) {
            *a ^= b;
        }
        for (a, &b) in self.z_errors.iter_mut().zip(z) {
            *a ^= b;
        }
    }

    /// With probability `p` per qubit, XORs in X, Y or Z chosen uniformly.
    pub fn depolarize<R: Rng + ?Sized>(&mut self, p: f64, rng: &mut R) {
        if p <= 0.0 {
            return;
        }
        for q in 0..self.len() {
            if rng.random::<f64>() < p {
                let pauli = match rng.random_range(0..3u8) {
                    0 => Pauli::X,
                    1 => Pauli::Y,
                    _ => Pauli::Z,
                };
                self.apply(q, pauli);
            }
        }
    }

    /// True when the frame flips the logical qubit: X part odd on the logical Z
    /// string, or Z part odd on the logical X string.
    pub fn is_logical_error(&self, layout: &SurfaceCodeLayout) -> bool {
        let x_parity = layout.logical_z.iter().filter(|&&q| self.x_errors[q]).count() % 2;
        let z_parity = layout.logical_x.iter().filter(|&&q| self.z_errors[q]).count() % 2;
        x_parity == 1 || z_parity == 1
    }
}

pub fn apply_depolarizing<R: Rng + ?Sized>(
    state: &ErrorState,
    model: &NoiseModel,
    rng: &mut R,
) -> ErrorState {
    let mut out = state.clone();
    out.depolarize(model.p, rng);
    out
}

/// One round of stabilizer outcomes. `x` holds the X-type checks (which fire on
/// Z errors) and `z` the Z-type checks (which fire on X errors).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Syndrome {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl Syndrome {
    pub fn zeros(layout: &SurfaceCodeLayout) -> Self {
        Syndrome {
            x: vec![false; layout.x_stabilizers.len()],
            z: vec![false; layout.z_stabilizers.len()],
        }
    }

    pub fn checks(&self, kind: CheckKind) -> &[bool] {
        match kind {
            CheckKind::X => &self.x,
            CheckKind::Z => &self.z,
        }
    }

    pub fn is_trivial(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    pub fn xor(&self, other: &Syndrome) -> Syndrome {
        Syndrome {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
        }
    }
}

/// Noise-free syndrome of an error frame.
pub fn true_syndrome(state: &ErrorState, layout: &SurfaceCodeLayout) -> Syndrome {
    let parity = |support: &[usize], bits: &[bool]| support.iter().filter(|&&q| bits[q]).count() % 2 == 1;
    Syndrome {
        x: layout
            .x_stabilizers
            .iter()
            .map(|s| parity(&s.support, &state.z_errors))
            .collect(),
        z: layout
            .z_stabilizers
            .iter()
            .map(|s| parity(&s.support, &state.x_errors))
            .collect(),
    }
}

/// Measures every stabilizer, flipping each reported bit independently with
/// probability `q`.
pub fn measure_syndromes<R: Rng + ?Sized>(
    state: &ErrorState,
    layout: &SurfaceCodeLayout,
    q: f64,
    rng: &mut R,
) -> Syndrome {
    let mut syndrome = true_syndrome(state, layout);
    if q > 0.0 {
        for bit in syndrome.x.iter_mut().chain(syndrome.z.iter_mut()) {
            if rng.random::<f64>() < q {
                *bit = !*bit;
            }
        }
    }
    syndrome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::build_layout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_noise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state = ErrorState::clean(50);
        let out = apply_depolarizing(&state, &NoiseModel::noiseless(), &mut rng);
        assert_eq!(out, state);
    }

    #[test]
    fn full_noise_hits_every_qubit_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = apply_depolarizing(&ErrorState::clean(200), &NoiseModel::new(1.0, 0.0).unwrap(), &mut rng);
        for q in 0..200 {
            assert!(out.x_errors[q] || out.z_errors[q]);
        }
    }

    #[test]
    fn depolarizing_statistics() {
        // Binomial 99% interval for n = 100_000, p = 0.3 is about 0.3 +- 0.00373;
        // chi-square with 2 dof at the 1% level is 9.21.
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = apply_depolarizing(&ErrorState::clean(n), &NoiseModel::new(0.3, 0.0).unwrap(), &mut rng);
        let mut counts = [0usize; 3];
        for q in 0..n {
            match (out.x_errors[q], out.z_errors[q]) {
                (true, false) => counts[0] += 1,
                (true, true) => counts[1] += 1,
                (false, true) => counts[2] += 1,
                _ => {}
            }
        }
        let flipped: usize = counts.iter().sum();
        let frac = flipped as f64 / n as f64;
        let half_width = 2.575_829_3 * (0.3 * 0.7 / n as f64).sqrt();
        assert!((frac - 0.3).abs() < half_width, "flip fraction {frac}");
        let expected = flipped as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 9.21, "chi2 {chi2}");
    }

    #[test]
    fn clean_state_has_trivial_syndrome() {
        let layout = build_layout(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = measure_syndromes(&ErrorState::clean(9), &layout, 0.0, &mut rng);
        assert!(s.is_trivial());
    }

    #[test]
    fn single_x_error_fires_adjacent_z_checks() {
        let layout = build_layout(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in 0..9 {
            let mut state = ErrorState::clean(9);
            state.apply(q, Pauli::X);
            let s = measure_syndromes(&state, &layout, 0.0, &mut rng);
            assert!(s.x.iter().all(|&b| !b));
            let fired: Vec<usize> = (0..s.z.len()).filter(|&i| s.z[i]).collect();
            let expected: Vec<usize> = layout
                .z_stabilizers
                .iter()
                .enumerate()
                .filter(|(_, st)| st.support.contains(&q))
                .map(|(i, _)| i)
                .collect();
            assert_eq!(fired, expected);
            // bulk row qubits touch two Z checks, top/bottom rows touch one
            let row = q / 3;
            assert_eq!(fired.len(), if row == 1 { 2 } else { 1 });
        }
    }

    #[test]
    fn certain_measurement_flip_complements() {
        let layout = build_layout(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut state = ErrorState::clean(25);
        state.apply(7, Pauli::Y);
        let truth = true_syndrome(&state, &layout);
        let s = measure_syndromes(&state, &layout, 1.0, &mut rng);
        assert!(s.x.iter().zip(&truth.x).all(|(a, b)| a != b));
        assert!(s.z.iter().zip(&truth.z).all(|(a, b)| a != b));
    }

    #[test]
    fn noise_model_bounds() {
        assert!(NoiseModel::new(-0.1, 0.0).is_err());
        assert!(NoiseModel::new(0.1, 1.5).is_err());
        assert!(NoiseModel::new(1.0, 0.0).is_ok());
    }
}
