//! Space-time minimum-weight matching decoder.
//!
//! X-type and Z-type checks are decoded independently. Each check type gets a
//! matching graph whose nodes are the checks plus one virtual node per open
//! boundary, and whose edges are the data qubits (a qubit seen by two checks
//! joins them, a qubit seen by one check joins it to its boundary). Repeated
//! rounds stack copies of that graph joined by time edges, so the distance
//! between two detection events is `space_weight * hops + time_weight * rounds`.
//!
//! Matching is exact (memoized recursion over defect subsets) up to
//! `max_exact_defects`; above that a greedy nearest-pair pass is used and the
//! result is flagged.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::layout::{CheckKind, SurfaceCodeLayout};
use crate::noise::Syndrome;
use crate::topology::DeviceEmbedding;
use crate::QecError;

pub const DEFAULT_MAX_EXACT_DEFECTS: usize = 16;

const UNREACHABLE: u32 = u32::MAX;

/// Stabilizer outcomes for consecutive rounds. The last row is expected to be
/// the noiseless closing round when decoding a memory experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeHistory {
    outcomes: Vec<Syndrome>,
}

impl SyndromeHistory {
    pub fn new(outcomes: Vec<Syndrome>) -> Result<Self, QecError> {
        if outcomes.is_empty() {
            return Err(QecError::InconsistentHistory("history has no rounds".into()));
        }
        Ok(SyndromeHistory { outcomes })
    }

    pub fn single(round: Syndrome) -> Self {
        SyndromeHistory { outcomes: vec![round] }
    }

    pub fn push(&mut self, round: Syndrome) {
        self.outcomes.push(round);
    }

    pub fn rounds(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Syndrome] {
        &self.outcomes
    }

    /// XOR of consecutive rounds, the first round differenced against zero.
    pub fn detection_events(&self) -> Vec<Syndrome> {
        let mut prev: Option<&Syndrome> = None;
        self.outcomes
            .iter()
            .map(|round| {
                let events = match prev {
                    Some(p) => round.xor(p),
                    None => round.clone(),
                };
                prev = Some(round);
                events
            })
            .collect()
    }

    fn check_shape(&self, layout: &SurfaceCodeLayout) -> Result<(), QecError> {
        for (t, round) in self.outcomes.iter().enumerate() {
            if round.x.len() != layout.x_stabilizers.len() || round.z.len() != layout.z_stabilizers.len() {
                return Err(QecError::InconsistentHistory(format!(
                    "round {t} has {}+{} checks, layout has {}+{}",
                    round.x.len(),
                    round.z.len(),
                    layout.x_stabilizers.len(),
                    layout.z_stabilizers.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub layout: SurfaceCodeLayout,
    pub space_weight: u32,
    pub time_weight: u32,
    pub max_exact_defects: usize,
    /// Use greedy pairing above `max_exact_defects` instead of failing.
    pub greedy_fallback: bool,
    /// Physical placement, present when the config was generated for a device.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<DeviceEmbedding>,
}

impl DecoderConfig {
    pub fn new(layout: SurfaceCodeLayout) -> Self {
        DecoderConfig {
            layout,
            space_weight: 1,
            time_weight: 1,
            max_exact_defects: DEFAULT_MAX_EXACT_DEFECTS,
            greedy_fallback: true,
            embedding: None,
        }
    }

    pub fn for_distance(d: usize) -> Result<Self, QecError> {
        Ok(Self::new(SurfaceCodeLayout::new(d)?))
    }

    pub fn validate(&self) -> Result<(), QecError> {
        if self.space_weight == 0 || self.time_weight == 0 {
            return Err(QecError::InvalidConfig("matching weights must be positive".into()));
        }
        if self.max_exact_defects > 24 {
            return Err(QecError::InvalidConfig("max_exact_defects above 24 is not supported".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionSet {
    pub x_corrections: Vec<bool>,
    pub z_corrections: Vec<bool>,
    #[serde(default)]
    pub fallback_used: bool,
}

impl CorrectionSet {
    pub fn empty(num_qubits: usize) -> Self {
        CorrectionSet {
            x_corrections: vec![false; num_qubits],
            z_corrections: vec![false; num_qubits],
            fallback_used: false,
        }
    }

    pub fn len(&self) -> usize {
        self.x_corrections.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.x_corrections.iter().chain(&self.z_corrections).any(|&b| b)
    }

    pub fn weight(&self) -> usize {
        self.x_corrections
            .iter()
            .zip(&self.z_corrections)
            .filter(|(x, z)| **x || **z)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpaceTimeNode {
    pub round: usize,
    pub check: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partner {
    Defect(SpaceTimeNode),
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub kind: CheckKind,
    pub first: SpaceTimeNode,
    pub second: Partner,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub corrections: CorrectionSet,
    pub pairs: Vec<MatchedPair>,
    pub total_weight: u64,
}

/// Per check-type matching graph with precomputed hop distances.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    kind: CheckKind,
    num_checks: usize,
    num_boundaries: usize,
    /// `(neighbor node, data qubit)` sorted by qubit index.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// `dist[target][node]`, never routing through a boundary node.
    dist: Vec<Vec<u32>>,
}

impl MatchingGraph {
    pub fn new(layout: &SurfaceCodeLayout, kind: CheckKind) -> Self {
        let d = layout.distance;
        let num_checks = layout.stabilizers(kind).len();
        let num_boundaries = 2;
        let num_nodes = num_checks + num_boundaries;
        let mut adjacency = vec![Vec::new(); num_nodes];
        for (q, checks) in layout.checks_per_qubit(kind).into_iter().enumerate() {
            let (row, col) = layout.data_qubits[q];
            match checks.as_slice() {
                [a, b] => {
                    adjacency[*a].push((*b, q));
                    adjacency[*b].push((*a, q));
                }
                [a] => {
                    // Z checks leave the top and bottom rows open, X checks the
                    // left and right columns.
                    let along = match kind {
                        CheckKind::Z => row,
                        CheckKind::X => col,
                    };
                    debug_assert!(along == 0 || along == d - 1);
                    let side = if along == 0 { 0 } else { 1 };
                    adjacency[*a].push((num_checks + side, q));
                    adjacency[num_checks + side].push((*a, q));
                }
                _ => unreachable!("data qubit {q} is seen by {} {kind:?} checks", checks.len()),
            }
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(node, q)| (q, node));
        }
        let mut graph = MatchingGraph {
            kind,
            num_checks,
            num_boundaries,
            adjacency,
            dist: Vec::new(),
        };
        graph.dist = (0..num_nodes).map(|t| graph.bfs(t)).collect();
        graph
    }

    fn is_boundary(&self, node: usize) -> bool {
        node >= self.num_checks
    }

    fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.adjacency.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            if u != source && self.is_boundary(u) {
                continue;
            }
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn kind(&self) -> CheckKind {
        self.kind
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn num_boundaries(&self) -> usize {
        self.num_boundaries
    }

    /// Hop count between two checks.
    pub fn check_distance(&self, a: usize, b: usize) -> u32 {
        self.dist[b][a]
    }

    /// Nearest boundary of a check, lowest boundary index on ties.
    pub fn boundary_distance(&self, check: usize) -> (usize, u32) {
        (0..self.num_boundaries)
            .map(|b| (b, self.dist[self.num_checks + b][check]))
            .min_by_key(|&(b, dist)| (dist, b))
            .expect("graph has boundaries")
    }

    /// Data qubits along the preferred shortest path from `from` to `target`
    /// (a node id; boundaries are `num_checks + b`). At every step the edge
    /// with the smallest row-major qubit index is taken.
    pub fn path_qubits(&self, from: usize, target: usize) -> Vec<usize> {
        let dist = &self.dist[target];
        assert_ne!(dist[from], UNREACHABLE, "no path between nodes {from} and {target}");
        let mut out = Vec::with_capacity(dist[from] as usize);
        let mut u = from;
        while u != target {
            let (v, q) = self.adjacency[u]
                .iter()
                .copied()
                .find(|&(v, _)| dist[v] + 1 == dist[u] && (v == target || !self.is_boundary(v)))
                .expect("shortest path step exists");
            out.push(q);
            u = v;
        }
        out
    }
}

pub struct Decoder {
    config: DecoderConfig,
    x_graph: MatchingGraph,
    z_graph: MatchingGraph,
}

impl Decoder {
    pub fn new(config: DecoderConfig) -> Result<Self, QecError> {
        config.validate()?;
        let x_graph = MatchingGraph::new(&config.layout, CheckKind::X);
        let z_graph = MatchingGraph::new(&config.layout, CheckKind::Z);
        Ok(Decoder {
            config,
            x_graph,
            z_graph,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn graph(&self, kind: CheckKind) -> &MatchingGraph {
        match kind {
            CheckKind::X => &self.x_graph,
            CheckKind::Z => &self.z_graph,
        }
    }

    pub fn decode(&self, history: &SyndromeHistory) -> Result<CorrectionSet, QecError> {
        self.decode_detailed(history).map(|o| o.corrections)
    }

    pub fn decode_detailed(&self, history: &SyndromeHistory) -> Result<DecodeOutcome, QecError> {
        let layout = &self.config.layout;
        history.check_shape(layout)?;
        let events = history.detection_events();
        let mut corrections = CorrectionSet::empty(layout.num_data_qubits());
        let mut pairs = Vec::new();
        let mut total_weight = 0;

        // Z checks see X errors, X checks see Z errors.
        for (graph, target) in [
            (&self.z_graph, &mut corrections.x_corrections),
            (&self.x_graph, &mut corrections.z_corrections),
        ] {
            let defects: Vec<SpaceTimeNode> = events
                .iter()
                .enumerate()
                .flat_map(|(round, syn)| {
                    syn.checks(graph.kind)
                        .iter()
                        .enumerate()
                        .filter(|(_, &b)| b)
                        .map(move |(check, _)| SpaceTimeNode { round, check })
                })
                .collect();
            if defects.is_empty() {
                continue;
            }
            let problem = MatchingProblem::new(graph, &defects, self.config.space_weight, self.config.time_weight);
            let (matching, fallback) = if defects.len() <= self.config.max_exact_defects {
                (problem.solve_exact(), false)
            } else if self.config.greedy_fallback {
                (problem.solve_greedy(), true)
            } else {
                return Err(QecError::TooManyDefects {
                    count: defects.len(),
                    limit: self.config.max_exact_defects,
                });
            };
            corrections.fallback_used |= fallback;

            for (i, partner) in matching {
                let a = defects[i];
                let (path, second, weight) = match partner {
                    Match::Defect(j) => {
                        let b = defects[j];
                        (graph.path_qubits(a.check, b.check), Partner::Defect(b), problem.pair_cost(i, j))
                    }
                    Match::Boundary(side) => (
                        graph.path_qubits(a.check, graph.num_checks + side),
                        Partner::Boundary(side),
                        problem.boundary[i].1,
                    ),
                };
                for q in path {
                    target[q] ^= true;
                }
                total_weight += weight;
                pairs.push(MatchedPair {
                    kind: graph.kind,
                    first: a,
                    second,
                    weight,
                });
            }
        }

        Ok(DecodeOutcome {
            corrections,
            pairs,
            total_weight,
        })
    }
}

pub fn decode(history: &SyndromeHistory, config: &DecoderConfig) -> Result<CorrectionSet, QecError> {
    Decoder::new(config.clone())?.decode(history)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Match {
    Defect(usize),
    Boundary(usize),
}

/// Defect set for one check type, with pairwise and boundary costs.
struct MatchingProblem {
    pairwise: Vec<Vec<u64>>,
    boundary: Vec<(usize, u64)>,
}

impl MatchingProblem {
    fn new(graph: &MatchingGraph, defects: &[SpaceTimeNode], space_weight: u32, time_weight: u32) -> Self {
        let ws = space_weight as u64;
        let wt = time_weight as u64;
        let pairwise = defects
            .iter()
            .map(|a| {
                defects
                    .iter()
                    .map(|b| {
                        ws * graph.check_distance(a.check, b.check) as u64 + wt * a.round.abs_diff(b.round) as u64
                    })
                    .collect()
            })
            .collect();
        let boundary = defects
            .iter()
            .map(|a| {
                let (side, hops) = graph.boundary_distance(a.check);
                (side, ws * hops as u64)
            })
            .collect();
        MatchingProblem { pairwise, boundary }
    }

    fn pair_cost(&self, i: usize, j: usize) -> u64 {
        self.pairwise[i][j]
    }

    /// Minimum-weight matching over defect subsets. The lowest unmatched defect
    /// is always resolved first, trying partners in ascending order and the
    /// boundary last, so among optimal matchings the one with the
    /// lexicographically smallest sorted pair list wins.
    fn solve_exact(&self) -> Vec<(usize, Match)> {
        let m = self.boundary.len();
        let full = (1usize << m) - 1;
        let mut cost = vec![0u64; full + 1];
        let mut choice = vec![Match::Boundary(0); full + 1];
        for mask in 1..=full {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut best = u64::MAX;
            let mut pick = Match::Boundary(self.boundary[i].0);
            let mut others = rest;
            while others != 0 {
                let j = others.trailing_zeros() as usize;
                others &= others - 1;
                let c = self.pairwise[i][j] + cost[rest & !(1 << j)];
                if c < best {
                    best = c;
                    pick = Match::Defect(j);
                }
            }
            let c = self.boundary[i].1 + cost[rest];
            if c < best {
                best = c;
                pick = Match::Boundary(self.boundary[i].0);
            }
            cost[mask] = best;
            choice[mask] = pick;
        }

        let mut out = Vec::with_capacity(m);
        let mut mask = full;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            let pick = choice[mask];
            mask &= !(1 << i);
            if let Match::Defect(j) = pick {
                mask &= !(1 << j);
            }
            out.push((i, pick));
        }
        out
    }

    /// Repeatedly commits the cheapest remaining pair or boundary match.
    fn solve_greedy(&self) -> Vec<(usize, Match)> {
        let m = self.boundary.len();
        let mut open: Vec<bool> = vec![true; m];
        let mut out = Vec::with_capacity(m);
        let mut remaining = m;
        while remaining > 0 {
            let mut best: Option<(u64, usize, usize, Match)> = None;
            for i in (0..m).filter(|&i| open[i]) {
                for j in (i + 1..m).filter(|&j| open[j]) {
                    let key = (self.pairwise[i][j], i, j, Match::Defect(j));
                    if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                        best = Some(key);
                    }
                }
                let key = (self.boundary[i].1, i, m + self.boundary[i].0, Match::Boundary(self.boundary[i].0));
                if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                    best = Some(key);
                }
            }
            let (_, i, _, pick) = best.expect("an open defect remains");
            open[i] = false;
            remaining -= 1;
            if let Match::Defect(j) = pick {
                open[j] = false;
                remaining -= 1;
            }
            out.push((i, pick));
        }
        out.sort_by_key(|&(i, _)| i);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::build_layout;
    use crate::noise::{true_syndrome, ErrorState, Pauli};

    fn decoder(d: usize) -> Decoder {
        Decoder::new(DecoderConfig::for_distance(d).unwrap()).unwrap()
    }

    #[test]
    fn zero_history_gives_empty_correction() {
        let layout = build_layout(3).unwrap();
        let history = SyndromeHistory::new(vec![Syndrome::zeros(&layout); 4]).unwrap();
        let c = decoder(3).decode(&history).unwrap();
        assert!(c.is_empty());
        assert!(!c.fallback_used);
    }

    #[test]
    fn all_single_qubit_errors_are_corrected() {
        let layout = build_layout(3).unwrap();
        let dec = decoder(3);
        for q in 0..9 {
            for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut err = ErrorState::clean(9);
                err.apply(q, pauli);
                let history = SyndromeHistory::single(true_syndrome(&err, &layout));
                let c = dec.decode(&history).unwrap();
                err.compose(&c.x_corrections, &c.z_corrections);
                assert!(true_syndrome(&err, &layout).is_trivial());
                assert!(!err.is_logical_error(&layout), "q={q} {pauli:?}");
            }
        }
    }

    #[test]
    fn decoding_is_deterministic() {
        let layout = build_layout(3).unwrap();
        let mut err = ErrorState::clean(9);
        err.apply(4, Pauli::X);
        let history = SyndromeHistory::single(true_syndrome(&err, &layout));
        let dec = decoder(3);
        assert_eq!(dec.decode_detailed(&history).unwrap(), dec.decode_detailed(&history).unwrap());
    }

    #[test]
    fn measurement_error_matches_in_time() {
        let layout = build_layout(5).unwrap();
        let clean = Syndrome::zeros(&layout);
        let mut flipped = clean.clone();
        flipped.z[3] = true;
        let history = SyndromeHistory::new(vec![clean.clone(), flipped, clean]).unwrap();
        let out = decoder(5).decode_detailed(&history).unwrap();
        assert!(out.corrections.is_empty());
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.total_weight, 1);
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let layout = build_layout(5).unwrap();
        let history = SyndromeHistory::single(Syndrome::zeros(&layout));
        assert!(matches!(
            decoder(3).decode(&history),
            Err(QecError::InconsistentHistory(_))
        ));
        assert!(SyndromeHistory::new(vec![]).is_err());
    }

    #[test]
    fn fallback_is_flagged_or_refused() {
        let layout = build_layout(7).unwrap();
        let mut syn = Syndrome::zeros(&layout);
        for b in syn.z.iter_mut().take(18) {
            *b = true;
        }
        let history = SyndromeHistory::single(syn);
        let mut config = DecoderConfig::for_distance(7).unwrap();
        let c = Decoder::new(config.clone()).unwrap().decode(&history).unwrap();
        assert!(c.fallback_used);
        config.greedy_fallback = false;
        assert!(matches!(
            Decoder::new(config).unwrap().decode(&history),
            Err(QecError::TooManyDefects { count: 18, limit: 16 })
        ));
    }

    #[test]
    fn greedy_clears_syndrome() {
        let layout = build_layout(5).unwrap();
        let mut err = ErrorState::clean(25);
        for q in [0, 6, 12, 13, 19, 21] {
            err.apply(q, Pauli::Y);
        }
        let history = SyndromeHistory::single(true_syndrome(&err, &layout));
        let mut config = DecoderConfig::for_distance(5).unwrap();
        config.max_exact_defects = 0;
        let c = Decoder::new(config).unwrap().decode(&history).unwrap();
        assert!(c.fallback_used);
        err.compose(&c.x_corrections, &c.z_corrections);
        assert!(true_syndrome(&err, &layout).is_trivial());
    }

    #[test]
    fn zero_weights_rejected() {
        let mut config = DecoderConfig::for_distance(3).unwrap();
        config.time_weight = 0;
        assert!(Decoder::new(config).is_err());
    }
}
