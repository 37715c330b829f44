//! Pauli-frame sampling of small Clifford circuits.
//!
//! A single noiseless stabilizer-tableau run fixes a reference measurement
//! record (random outcomes resolved to 0). Each shot then tracks only a Pauli
//! frame relative to that reference. Frames start with a random Z component on
//! every qubit and get a fresh random Z after each measurement, which turns the
//! fixed reference into correctly distributed outcomes.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::CorrectionSet;
use crate::noise::{NoiseModel, Pauli};
use crate::QecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Gate {
    H { qubit: usize },
    X { qubit: usize },
    Z { qubit: usize },
    Cx { control: usize, target: usize },
    Measure { qubit: usize },
    /// Deliberate error on the frame only; not a gate location for noise.
    Inject { qubit: usize, pauli: Pauli },
}

impl Gate {
    fn qubits(&self) -> ([usize; 2], usize) {
        match *self {
            Gate::H { qubit } | Gate::X { qubit } | Gate::Z { qubit } | Gate::Measure { qubit } | Gate::Inject { qubit, .. } => {
                ([qubit, 0], 1)
            }
            Gate::Cx { control, target } => ([control, target], 2),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H { qubit } => write!(f, "h {qubit}"),
            Gate::X { qubit } => write!(f, "x {qubit}"),
            Gate::Z { qubit } => write!(f, "z {qubit}"),
            Gate::Cx { control, target } => write!(f, "cx {control} {target}"),
            Gate::Measure { qubit } => write!(f, "measure {qubit}"),
            Gate::Inject { qubit, pauli } => write!(f, "inject {} {qubit}", format!("{pauli:?}").to_lowercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

/// Histogram keyed by measurement record; character `i` is the `i`-th
/// measurement in circuit order.
pub type Counts = BTreeMap<String, u64>;

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    /// Parses one instruction per line: `h 0`, `x 1`, `z 2`, `cx 0 1`,
    /// `measure 0` and `inject x 0`. `#` starts a comment. The qubit count is
    /// one more than the largest index used.
    pub fn parse(text: &str) -> Result<Self, QecError> {
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap().to_ascii_lowercase();
            let args: Vec<&str> = parts.collect();
            let bad = || QecError::UnsupportedGate(format!("line {}: `{}`", lineno + 1, raw.trim()));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let gate = match (op.as_str(), args.as_slice()) {
                ("h", [q]) => Gate::H { qubit: idx(q)? },
                ("x", [q]) => Gate::X { qubit: idx(q)? },
                ("z", [q]) => Gate::Z { qubit: idx(q)? },
                ("cx" | "cnot", [c, t]) => Gate::Cx {
                    control: idx(c)?,
                    target: idx(t)?,
                },
                ("measure" | "m", [q]) => Gate::Measure { qubit: idx(q)? },
                ("inject", [p, q]) => Gate::Inject {
                    qubit: idx(q)?,
                    pauli: match p.to_ascii_lowercase().as_str() {
                        "x" => Pauli::X,
                        "y" => Pauli::Y,
                        "z" => Pauli::Z,
                        _ => return Err(bad()),
                    },
                },
                _ => return Err(bad()),
            };
            gates.push(gate);
        }
        let num_qubits = gates
            .iter()
            .flat_map(|g| {
                let (qs, n) = g.qubits();
                qs.into_iter().take(n)
            })
            .max()
            .map_or(0, |m| m + 1);
        let circuit = Circuit { num_qubits, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<(), QecError> {
        for g in &self.gates {
            let (qs, n) = g.qubits();
            if qs[..n].iter().any(|&q| q >= self.num_qubits) {
                return Err(QecError::UnsupportedGate(format!("`{g}` addresses a qubit outside 0..{}", self.num_qubits)));
            }
            if let Gate::Cx { control, target } = g {
                if control == target {
                    return Err(QecError::UnsupportedGate(format!("`{g}` uses the same qubit twice")));
                }
            }
        }
        Ok(())
    }

    pub fn num_measurements(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Measure { .. })).count()
    }
}

/// Constant-oracle Deutsch-Jozsa on `n` input qubits: `H^n`, identity oracle,
/// `H^n`, measure all. Ideal outcome is all zeros.
pub fn deutsch_jozsa_constant(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Gate::H { qubit: q });
    }
    for q in 0..n {
        c.push(Gate::H { qubit: q });
    }
    for q in 0..n {
        c.push(Gate::Measure { qubit: q });
    }
    c
}

/// Aaronson-Gottesman tableau, used only for the reference record.
struct Tableau {
    n: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

impl Tableau {
    fn new(n: usize) -> Self {
        let rows = 2 * n + 1;
        let mut x = vec![vec![false; n]; rows];
        let mut z = vec![vec![false; n]; rows];
        for i in 0..n {
            x[i][i] = true;
            z[i + n][i] = true;
        }
        Tableau {
            n,
            x,
            z,
            r: vec![false; rows],
        }
    }

    fn h(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][a];
            let t = self.x[i][a];
            self.x[i][a] = std::mem::replace(&mut self.z[i][a], t);
        }
    }

    fn cx(&mut self, a: usize, b: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][b] && (self.x[i][b] ^ self.z[i][a] ^ true);
            self.x[i][b] ^= self.x[i][a];
            self.z[i][a] ^= self.z[i][b];
        }
    }

    fn pauli_x(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.z[i][a];
        }
    }

    fn pauli_z(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a];
        }
    }

    fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
        match (x1, z1) {
            (false, false) => 0,
            (true, true) => z2 as i32 - x2 as i32,
            (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
            (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
        }
    }

    fn rowsum(&mut self, h: usize, i: usize) {
        let mut sum = 2 * self.r[h] as i32 + 2 * self.r[i] as i32;
        for j in 0..self.n {
            sum += Self::g(self.x[i][j], self.z[i][j], self.x[h][j], self.z[h][j]);
        }
        self.r[h] = sum.rem_euclid(4) == 2;
        for j in 0..self.n {
            self.x[h][j] ^= self.x[i][j];
            self.z[h][j] ^= self.z[i][j];
        }
    }

    /// Z measurement; random outcomes are resolved to 0.
    fn measure(&mut self, a: usize) -> bool {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&p| self.x[p][a]) {
            for i in 0..2 * n {
                if i != p && self.x[i][a] {
                    self.rowsum(i, p);
                }
            }
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = vec![false; n];
            self.z[p] = vec![false; n];
            self.z[p][a] = true;
            self.r[p] = false;
            false
        } else {
            let s = 2 * n;
            self.x[s] = vec![false; n];
            self.z[s] = vec![false; n];
            self.r[s] = false;
            for i in 0..n {
                if self.x[i][a] {
                    self.rowsum(s, i + n);
                }
            }
            self.r[s]
        }
    }
}

/// Noiseless measurement record with random outcomes fixed to 0.
pub fn reference_sample(circuit: &Circuit) -> Result<Vec<bool>, QecError> {
    circuit.validate()?;
    let mut t = Tableau::new(circuit.num_qubits);
    let mut record = Vec::with_capacity(circuit.num_measurements());
    for g in &circuit.gates {
        match *g {
            Gate::H { qubit } => t.h(qubit),
            Gate::X { qubit } => t.pauli_x(qubit),
            Gate::Z { qubit } => t.pauli_z(qubit),
            Gate::Cx { control, target } => t.cx(control, target),
            Gate::Measure { qubit } => record.push(t.measure(qubit)),
            Gate::Inject { .. } => {}
        }
    }
    Ok(record)
}

struct Frame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl Frame {
    fn apply(&mut self, q: usize, pauli: Pauli) {
        let (x, z) = pauli.bits();
        self.x[q] ^= x;
        self.z[q] ^= z;
    }

    fn depolarize<R: Rng>(&mut self, q: usize, p: f64, rng: &mut R) {
        if p > 0.0 && rng.random::<f64>() < p {
            let pauli = match rng.random_range(0..3u8) {
                0 => Pauli::X,
                1 => Pauli::Y,
                _ => Pauli::Z,
            };
            self.apply(q, pauli);
        }
    }
}

/// Samples `shots` noisy runs. Depolarizing noise with probability `model.p`
/// hits every qubit touched by a gate right after the gate, and the measured
/// qubit right before each measurement. Shot `i` uses ChaCha stream `i`.
pub fn pauli_frame_simulate(circuit: &Circuit, model: &NoiseModel, shots: u64, seed: u64) -> Result<Counts, QecError> {
    model.validate()?;
    let reference = reference_sample(circuit)?;
    let n = circuit.num_qubits;
    let mut counts = Counts::new();
    let mut record = String::with_capacity(reference.len());
    for shot in 0..shots {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        let mut frame = Frame {
            x: vec![false; n],
            z: (0..n).map(|_| rng.random::<bool>()).collect(),
        };
        record.clear();
        let mut m = 0;
        for g in &circuit.gates {
            match *g {
                Gate::H { qubit } => {
                    let (x, z) = (frame.x[qubit], frame.z[qubit]);
                    frame.x[qubit] = z;
                    frame.z[qubit] = x;
                    frame.depolarize(qubit, model.p, &mut rng);
                }
                Gate::X { qubit } | Gate::Z { qubit } => frame.depolarize(qubit, model.p, &mut rng),
                Gate::Cx { control, target } => {
                    let xc = frame.x[control];
                    let zt = frame.z[target];
                    frame.x[target] ^= xc;
                    frame.z[control] ^= zt;
                    frame.depolarize(control, model.p, &mut rng);
                    frame.depolarize(target, model.p, &mut rng);
                }
                Gate::Measure { qubit } => {
                    frame.depolarize(qubit, model.p, &mut rng);
                    let bit = reference[m] ^ frame.x[qubit];
                    record.push(if bit { '1' } else { '0' });
                    m += 1;
                    frame.z[qubit] = rng.random::<bool>();
                }
                Gate::Inject { qubit, pauli } => frame.apply(qubit, pauli),
            }
        }
        *counts.entry(record.clone()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// XORs the X corrections into every measured record; Z corrections do not
/// change computational-basis readout.
pub fn apply_corrections(counts: &Counts, corrections: &CorrectionSet) -> Result<Counts, QecError> {
    let mut out = Counts::new();
    for (bits, &n) in counts {
        if bits.chars().count() != corrections.len() {
            return Err(QecError::LengthMismatch {
                expected: bits.chars().count(),
                found: corrections.len(),
            });
        }
        let flipped: String = bits
            .chars()
            .zip(&corrections.x_corrections)
            .map(|(c, &flip)| match (c, flip) {
                ('0', true) => '1',
                ('1', true) => '0',
                (c, _) => c,
            })
            .collect();
        *out.entry(flipped).or_insert(0) += n;
    }
    Ok(out)
}

/// Fraction of shots that produced `outcome`.
pub fn outcome_fraction(counts: &Counts, outcome: &str) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    counts.get(outcome).copied().unwrap_or(0) as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub circuit: Vec<String>,
    pub shots: u64,
    pub seed: u64,
    pub p_noisy: f64,
    pub p_corrected: f64,
    pub ideal: Counts,
    pub noisy: Counts,
    pub corrected: Counts,
    pub ideal_fraction: f64,
    pub noisy_fraction: f64,
    pub corrected_fraction: f64,
}

/// Constant Deutsch-Jozsa before and after error correction. The corrected run
/// is simulated at the lower effective error rate `p_corrected`.
pub fn deutsch_jozsa_demo(n: usize, p_noisy: f64, p_corrected: f64, shots: u64, seed: u64) -> Result<DemoReport, QecError> {
    let circuit = deutsch_jozsa_constant(n);
    let zeros = "0".repeat(n);
    let ideal = pauli_frame_simulate(&circuit, &NoiseModel::noiseless(), shots, seed)?;
    let noisy = pauli_frame_simulate(&circuit, &NoiseModel::new(p_noisy, 0.0)?, shots, seed)?;
    let corrected = pauli_frame_simulate(&circuit, &NoiseModel::new(p_corrected, 0.0)?, shots, seed)?;
    Ok(DemoReport {
        circuit: circuit.gates.iter().map(|g| g.to_string()).collect(),
        shots,
        seed,
        p_noisy,
        p_corrected,
        ideal_fraction: outcome_fraction(&ideal, &zeros),
        noisy_fraction: outcome_fraction(&noisy, &zeros),
        corrected_fraction: outcome_fraction(&corrected, &zeros),
        ideal,
        noisy,
        corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_deutsch_jozsa_is_all_zero() {
        let counts = pauli_frame_simulate(&deutsch_jozsa_constant(3), &NoiseModel::noiseless(), 1000, 1).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts["000"], 1000);
    }

    #[test]
    fn injected_x_flips_bit_zero() {
        let mut c = deutsch_jozsa_constant(3);
        c.gates.insert(6, Gate::Inject { qubit: 0, pauli: Pauli::X });
        let counts = pauli_frame_simulate(&c, &NoiseModel::noiseless(), 500, 2).unwrap();
        assert_eq!(counts.get("100"), Some(&500));
    }

    #[test]
    fn injected_z_is_invisible() {
        let mut c = deutsch_jozsa_constant(2);
        c.gates.insert(4, Gate::Inject { qubit: 1, pauli: Pauli::Z });
        let counts = pauli_frame_simulate(&c, &NoiseModel::noiseless(), 200, 2).unwrap();
        assert_eq!(counts.get("00"), Some(&200));
    }

    #[test]
    fn bell_pair_is_correlated_and_balanced() {
        let c = Circuit::parse("h 0\ncx 0 1\nmeasure 0\nmeasure 1").unwrap();
        assert_eq!(reference_sample(&c).unwrap(), vec![false, false]);
        let counts = pauli_frame_simulate(&c, &NoiseModel::noiseless(), 4000, 3).unwrap();
        assert_eq!(counts.keys().cloned().collect::<Vec<_>>(), vec!["00", "11"]);
        let frac = outcome_fraction(&counts, "00");
        assert!((frac - 0.5).abs() < 0.04, "{frac}");
    }

    #[test]
    fn x_gate_sets_reference() {
        let c = Circuit::parse("x 1\nmeasure 0\nmeasure 1\nh 1\nh 1\nmeasure 1").unwrap();
        assert_eq!(reference_sample(&c).unwrap(), vec![false, true, true]);
        let counts = pauli_frame_simulate(&c, &NoiseModel::noiseless(), 100, 0).unwrap();
        assert_eq!(counts.get("011"), Some(&100));
    }

    #[test]
    fn repeated_measurement_agrees_with_first() {
        let c = Circuit::parse("h 0\nmeasure 0\nmeasure 0").unwrap();
        let counts = pauli_frame_simulate(&c, &NoiseModel::noiseless(), 1000, 9).unwrap();
        assert!(counts.keys().all(|k| k == "00" || k == "11"));
    }

    #[test]
    fn lower_noise_keeps_more_zeros() {
        let c = deutsch_jozsa_constant(3);
        let hi = pauli_frame_simulate(&c, &NoiseModel::new(0.05, 0.0).unwrap(), 10_000, 5).unwrap();
        let lo = pauli_frame_simulate(&c, &NoiseModel::new(0.01, 0.0).unwrap(), 10_000, 5).unwrap();
        assert!(outcome_fraction(&lo, "000") > outcome_fraction(&hi, "000"));
        assert_eq!(hi.values().sum::<u64>(), 10_000);
    }

    #[test]
    fn parse_rejects_unknown_gates() {
        assert!(matches!(Circuit::parse("t 0"), Err(QecError::UnsupportedGate(_))));
        assert!(matches!(Circuit::parse("cx 0 0"), Err(QecError::UnsupportedGate(_))));
        assert!(matches!(Circuit::parse("h zero"), Err(QecError::UnsupportedGate(_))));
    }

    #[test]
    fn corrections_flip_selected_bits() {
        let counts: Counts = [("100".to_string(), 10)].into();
        let mut c = CorrectionSet::empty(3);
        assert_eq!(apply_corrections(&counts, &c).unwrap(), counts);
        c.x_corrections[2] = true;
        c.z_corrections[0] = true;
        let out = apply_corrections(&counts, &c).unwrap();
        assert_eq!(out, [("101".to_string(), 10)].into());
        assert!(matches!(
            apply_corrections(&counts, &CorrectionSet::empty(2)),
            Err(QecError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn circuit_json_shape() {
        let c = Circuit::parse("h 0\ncx 0 1\ninject y 1\nmeasure 1").unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains(r#"{"op":"cx","control":0,"target":1}"#));
        let back: Circuit = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
