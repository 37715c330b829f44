//! Fitting a rotated surface code onto a declared device coupling map.
//!
//! On a square grid with nearest-neighbour couplers the rotated code is the
//! checkerboard pattern turned by 45 degrees: every ancilla sits next to the
//! (up to four) data qubits of its plaquette. A distance-`d` patch therefore
//! needs a `(2d-1) x (2d-1)` bounding box. The search tries the eight grid
//! symmetries and every translation, largest distance first.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::decoder::DecoderConfig;
use crate::layout::SurfaceCodeLayout;
use crate::QecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceQubit {
    pub id: u32,
    pub x: i64,
    pub y: i64,
}

/// Device description: `{"qubits": [{"id", "x", "y"}], "edges": [[a, b]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub qubits: Vec<DeviceQubit>,
    pub edges: Vec<[u32; 2]>,
}

impl Topology {
    /// Full `width x height` grid with all nearest-neighbour couplers.
    pub fn grid(width: usize, height: usize) -> Self {
        let id = |x: usize, y: usize| (y * width + x) as u32;
        let mut qubits = Vec::with_capacity(width * height);
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                qubits.push(DeviceQubit {
                    id: id(x, y),
                    x: x as i64,
                    y: y as i64,
                });
                if x + 1 < width {
                    edges.push([id(x, y), id(x + 1, y)]);
                }
                if y + 1 < height {
                    edges.push([id(x, y), id(x, y + 1)]);
                }
            }
        }
        Topology { qubits, edges }
    }

    pub fn linear_chain(n: usize) -> Self {
        Topology {
            qubits: (0..n)
                .map(|i| DeviceQubit {
                    id: i as u32,
                    x: i as i64,
                    y: 0,
                })
                .collect(),
            edges: (1..n).map(|i| [i as u32 - 1, i as u32]).collect(),
        }
    }

    pub fn remove_edge(&mut self, a: u32, b: u32) -> bool {
        let before = self.edges.len();
        self.edges.retain(|e| !(e == &[a, b] || e == &[b, a]));
        self.edges.len() != before
    }

    fn index(&self) -> Result<DeviceIndex, QecError> {
        let mut by_coord = HashMap::new();
        let mut ids = HashSet::new();
        for q in &self.qubits {
            if !ids.insert(q.id) {
                return Err(QecError::InvalidTopology(format!("duplicate qubit id {}", q.id)));
            }
            if by_coord.insert((q.x, q.y), q.id).is_some() {
                return Err(QecError::InvalidTopology(format!("two qubits at ({}, {})", q.x, q.y)));
            }
        }
        let mut edges = HashSet::new();
        for &[a, b] in &self.edges {
            if !ids.contains(&a) || !ids.contains(&b) {
                return Err(QecError::InvalidTopology(format!("edge [{a}, {b}] names an unknown qubit")));
            }
            edges.insert((a.min(b), a.max(b)));
        }
        Ok(DeviceIndex { by_coord, edges })
    }
}

struct DeviceIndex {
    by_coord: HashMap<(i64, i64), u32>,
    edges: HashSet<(u32, u32)>,
}

impl DeviceIndex {
    fn coupled(&self, a: u32, b: u32) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// Device qubit assigned to every data qubit and ancilla of a layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceEmbedding {
    pub data_qubits: Vec<u32>,
    pub x_ancillas: Vec<u32>,
    pub z_ancillas: Vec<u32>,
}

impl DeviceEmbedding {
    /// Every (ancilla, data) coupling the layout relies on.
    pub fn required_couplings(&self, layout: &SurfaceCodeLayout) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (stabs, ancillas) in [(&layout.x_stabilizers, &self.x_ancillas), (&layout.z_stabilizers, &self.z_ancillas)] {
            for (stab, &anc) in stabs.iter().zip(ancillas) {
                out.extend(stab.support.iter().map(|&q| (anc, self.data_qubits[q])));
            }
        }
        out
    }
}

/// Site of every layout element in the 45-degree rotated frame.
struct Pattern {
    data: Vec<(i64, i64)>,
    x_anc: Vec<(i64, i64)>,
    z_anc: Vec<(i64, i64)>,
}

impl Pattern {
    fn new(layout: &SurfaceCodeLayout) -> Self {
        let data = layout
            .data_qubits
            .iter()
            .map(|&(r, c)| ((r + c + 1) as i64, r as i64 - c as i64))
            .collect();
        let site = |(i, j): (usize, usize)| ((i + j) as i64, i as i64 - j as i64);
        Pattern {
            data,
            x_anc: layout.x_stabilizers.iter().map(|s| site(s.position)).collect(),
            z_anc: layout.z_stabilizers.iter().map(|s| site(s.position)).collect(),
        }
    }

    fn transformed(&self, sym: usize) -> Pattern {
        let f = |(a, b): (i64, i64)| match sym {
            0 => (a, b),
            1 => (-b, a),
            2 => (-a, -b),
            3 => (b, -a),
            4 => (b, a),
            5 => (-a, b),
            6 => (a, -b),
            _ => (-b, -a),
        };
        let mut p = Pattern {
            data: self.data.iter().copied().map(f).collect(),
            x_anc: self.x_anc.iter().copied().map(f).collect(),
            z_anc: self.z_anc.iter().copied().map(f).collect(),
        };
        let all = || p.data.iter().chain(&p.x_anc).chain(&p.z_anc);
        let min_x = all().map(|s| s.0).min().unwrap();
        let min_y = all().map(|s| s.1).min().unwrap();
        for s in p.data.iter_mut().chain(p.x_anc.iter_mut()).chain(p.z_anc.iter_mut()) {
            s.0 -= min_x;
            s.1 -= min_y;
        }
        p
    }

    fn extent(&self) -> (i64, i64) {
        let all = self.data.iter().chain(&self.x_anc).chain(&self.z_anc);
        all.fold((0, 0), |(w, h), s| (w.max(s.0), h.max(s.1)))
    }
}

fn try_place(
    layout: &SurfaceCodeLayout,
    pattern: &Pattern,
    device: &DeviceIndex,
    (tx, ty): (i64, i64),
) -> Option<DeviceEmbedding> {
    let lookup = |sites: &[(i64, i64)]| -> Option<Vec<u32>> {
        sites
            .iter()
            .map(|&(x, y)| device.by_coord.get(&(x + tx, y + ty)).copied())
            .collect()
    };
    let embedding = DeviceEmbedding {
        data_qubits: lookup(&pattern.data)?,
        x_ancillas: lookup(&pattern.x_anc)?,
        z_ancillas: lookup(&pattern.z_anc)?,
    };
    embedding
        .required_couplings(layout)
        .into_iter()
        .all(|(a, b)| device.coupled(a, b))
        .then_some(embedding)
}

/// Finds a placement of a distance-`d` layout on the device, if any.
pub fn embed_layout(topology: &Topology, layout: &SurfaceCodeLayout) -> Result<Option<DeviceEmbedding>, QecError> {
    let device = topology.index()?;
    Ok(find_embedding(layout, &device, topology))
}

fn find_embedding(layout: &SurfaceCodeLayout, device: &DeviceIndex, topology: &Topology) -> Option<DeviceEmbedding> {
    if topology.qubits.is_empty() {
        return None;
    }
    let (min_x, max_x) = minmax(topology.qubits.iter().map(|q| q.x));
    let (min_y, max_y) = minmax(topology.qubits.iter().map(|q| q.y));
    let base = Pattern::new(layout);
    for sym in 0..8 {
        let pattern = base.transformed(sym);
        let (w, h) = pattern.extent();
        for ty in min_y..=max_y - h {
            for tx in min_x..=max_x - w {
                if let Some(e) = try_place(layout, &pattern, device, (tx, ty)) {
                    return Some(e);
                }
            }
        }
    }
    None
}

fn minmax(it: impl Iterator<Item = i64>) -> (i64, i64) {
    it.fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Largest odd distance whose rotated layout embeds with every data-ancilla
/// coupling present, as a decoder config carrying the placement.
pub fn generate_decoder_for_topology(topology: &Topology) -> Result<DecoderConfig, QecError> {
    let device = topology.index()?;
    let n = topology.qubits.len();
    let mut d = 3;
    while 2 * (d + 2) * (d + 2) - 1 <= n {
        d += 2;
    }
    while d >= 3 {
        if 2 * d * d - 1 <= n {
            let layout = SurfaceCodeLayout::new(d)?;
            if let Some(embedding) = find_embedding(&layout, &device, topology) {
                let mut config = DecoderConfig::new(layout);
                config.embedding = Some(embedding);
                return Ok(config);
            }
        }
        d -= 2;
    }
    Err(QecError::TopologyUnsupported(format!(
        "no distance-3 or larger rotated surface code fits the {n}-qubit coupling map"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_valid(topology: &Topology, config: &DecoderConfig) {
        let device = topology.index().unwrap();
        let e = config.embedding.as_ref().unwrap();
        for (a, b) in e.required_couplings(&config.layout) {
            assert!(device.coupled(a, b), "missing coupling {a}-{b}");
        }
        let mut used: Vec<u32> = e.data_qubits.iter().chain(&e.x_ancillas).chain(&e.z_ancillas).copied().collect();
        let total = used.len();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), total, "device qubit reused");
    }

    #[test]
    fn seven_by_seven_grid_hosts_distance_three() {
        let topo = Topology::grid(7, 7);
        let config = generate_decoder_for_topology(&topo).unwrap();
        assert_eq!(config.layout.distance, 3);
        assert_valid(&topo, &config);
    }

    #[test]
    fn nine_by_nine_grid_hosts_distance_five() {
        let topo = Topology::grid(9, 9);
        let config = generate_decoder_for_topology(&topo).unwrap();
        assert_eq!(config.layout.distance, 5);
        assert_valid(&topo, &config);
    }

    #[test]
    fn chain_is_unsupported() {
        assert!(matches!(
            generate_decoder_for_topology(&Topology::linear_chain(10)),
            Err(QecError::TopologyUnsupported(_))
        ));
    }

    #[test]
    fn tight_grid_with_missing_coupler_is_rejected() {
        // A 5x5 grid admits exactly the distance-3 patch; every coupler matters
        // except the ones between two data qubits or two ancillas.
        let full = Topology::grid(5, 5);
        let config = generate_decoder_for_topology(&full).unwrap();
        let (anc, data) = config.embedding.as_ref().unwrap().required_couplings(&config.layout)[0];
        let mut cut = full.clone();
        assert!(cut.remove_edge(anc, data));
        match generate_decoder_for_topology(&cut) {
            Err(QecError::TopologyUnsupported(_)) => {}
            Ok(other) => {
                assert_valid(&cut, &other);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn bad_topologies_are_reported() {
        let mut t = Topology::grid(3, 3);
        t.edges.push([0, 99]);
        assert!(matches!(generate_decoder_for_topology(&t), Err(QecError::InvalidTopology(_))));
        let mut t = Topology::grid(3, 3);
        t.qubits[1].x = 0;
        t.qubits[1].y = 0;
        assert!(matches!(generate_decoder_for_topology(&t), Err(QecError::InvalidTopology(_))));
    }
}
