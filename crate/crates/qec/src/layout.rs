//! Rotated surface code lattice.
//!
//! Data qubits sit on a `d x d` grid indexed row-major. Stabilizers live on the
//! `(d+1) x (d+1)` grid of plaquette corners: plaquette `(i, j)` touches the data
//! qubits `(i-1, j-1)`, `(i-1, j)`, `(i, j-1)` and `(i, j)` that exist. Bulk
//! plaquettes alternate type in a checkerboard (`X` when `i + j` is even). The top
//! and bottom edges keep only weight-2 `X` plaquettes, the left and right edges
//! keep only weight-2 `Z` plaquettes.

use serde::{Deserialize, Serialize};

use crate::QecError;

/// Pauli type of a stabilizer measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stabilizer {
    pub kind: CheckKind,
    /// Plaquette corner coordinate `(i, j)` with `0 <= i, j <= d`.
    pub position: (usize, usize),
    /// Data qubit indices, ascending.
    pub support: Vec<usize>,
}

impl Stabilizer {
    pub fn weight(&self) -> usize {
        self.support.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceCodeLayout {
    pub distance: usize,
    /// `(row, col)` of every data qubit, indexed by qubit id.
    pub data_qubits: Vec<(usize, usize)>,
    pub x_stabilizers: Vec<Stabilizer>,
    pub z_stabilizers: Vec<Stabilizer>,
    /// Column 0: an X string from the top boundary to the bottom boundary.
    pub logical_x: Vec<usize>,
    /// Row 0: a Z string from the left boundary to the right boundary.
    pub logical_z: Vec<usize>,
}

pub fn build_layout(distance: usize) -> Result<SurfaceCodeLayout, QecError> {
    SurfaceCodeLayout::new(distance)
}

impl SurfaceCodeLayout {
    pub fn new(distance: usize) -> Result<Self, QecError> {
        if distance < 3 || distance.is_multiple_of(2) {
            return Err(QecError::InvalidDistance(distance));
        }
        let d = distance;
        let data_qubits = (0..d * d).map(|q| (q / d, q % d)).collect();

        let mut x_stabilizers = Vec::new();
        let mut z_stabilizers = Vec::new();
        for i in 0..=d {
            for j in 0..=d {
                let kind = if (i + j) % 2 == 0 {
                    CheckKind::X
                } else {
                    CheckKind::Z
                };
                let on_row_edge = i == 0 || i == d;
                let on_col_edge = j == 0 || j == d;
                let keep = match (on_row_edge, on_col_edge) {
                    (false, false) => true,
                    (true, false) => kind == CheckKind::X,
                    (false, true) => kind == CheckKind::Z,
                    (true, true) => false,
                };
                if !keep {
                    continue;
                }
                let mut support = Vec::with_capacity(4);
                for (r, c) in [(i as isize - 1, j as isize - 1), (i as isize - 1, j as isize), (i as isize, j as isize - 1), (i as isize, j as isize)] {
                    if r >= 0 && c >= 0 && (r as usize) < d && (c as usize) < d {
                        support.push(r as usize * d + c as usize);
                    }
                }
                let stab = Stabilizer {
                    kind,
                    position: (i, j),
                    support,
                };
                match kind {
                    CheckKind::X => x_stabilizers.push(stab),
                    CheckKind::Z => z_stabilizers.push(stab),
                }
            }
        }

        Ok(SurfaceCodeLayout {
            distance: d,
            data_qubits,
            x_stabilizers,
            z_stabilizers,
            logical_x: (0..d).map(|r| r * d).collect(),
            logical_z: (0..d).collect(),
        })
    }

    pub fn num_data_qubits(&self) -> usize {
        self.data_qubits.len()
    }

    pub fn stabilizers(&self, kind: CheckKind) -> &[Stabilizer] {
        match kind {
            CheckKind::X => &self.x_stabilizers,
            CheckKind::Z => &self.z_stabilizers,
        }
    }

    pub fn qubit_index(&self, row: usize, col: usize) -> usize {
        row * self.distance + col
    }

    /// For every data qubit, the indices of the `kind` stabilizers acting on it.
    pub fn checks_per_qubit(&self, kind: CheckKind) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_data_qubits()];
        for (s, stab) in self.stabilizers(kind).iter().enumerate() {
            for &q in &stab.support {
                out[q].push(s);
            }
        }
        out
    }
}

#[cfg(test)]
fn overlap(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|q| b.contains(q)).count()
}
