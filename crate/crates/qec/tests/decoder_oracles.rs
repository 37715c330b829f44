use proptest::prelude::*;
use qforge_qec::{
    build_layout, true_syndrome, CheckKind, Decoder, DecoderConfig, ErrorState, Pauli, Syndrome, SurfaceCodeLayout,
    SyndromeHistory,
};

const INF: u64 = u64::MAX / 4;

/// Distances between checks of one kind, plus the distance of each check to
/// the nearest open boundary, via Floyd-Warshall over the support tables.
fn oracle_distances(layout: &SurfaceCodeLayout, kind: CheckKind) -> (Vec<Vec<u64>>, Vec<u64>) {
    let checks = layout.stabilizers(kind);
    let n = checks.len();
    let mut dist = vec![vec![INF; n]; n];
    let mut to_boundary = vec![INF; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for q in 0..layout.num_data_qubits() {
        let touching: Vec<usize> = (0..n).filter(|&s| checks[s].support.contains(&q)).collect();
        match touching.as_slice() {
            [a, b] => {
                dist[*a][*b] = 1;
                dist[*b][*a] = 1;
            }
            [a] => to_boundary[*a] = 1,
            _ => panic!("qubit {q} touched by {} checks", touching.len()),
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    let boundary = (0..n)
        .map(|i| (0..n).map(|k| dist[i][k] + to_boundary[k]).min().unwrap())
        .collect();
    (dist, boundary)
}

/// Minimum over every way to pair each defect with another defect or a boundary.
fn brute_force_min(defects: &[usize], dist: &[Vec<u64>], boundary: &[u64]) -> u64 {
    fn go(open: &mut Vec<usize>, dist: &[Vec<u64>], boundary: &[u64]) -> u64 {
        let Some(first) = open.pop() else {
            return 0;
        };
        let mut best = boundary[first] + go(open, dist, boundary);
        for idx in 0..open.len() {
            let other = open.remove(idx);
            best = best.min(dist[first][other] + go(open, dist, boundary));
            open.insert(idx, other);
        }
        open.push(first);
        best
    }
    go(&mut defects.to_vec(), dist, boundary)
}

fn syndrome_from_defects(layout: &SurfaceCodeLayout, kind: CheckKind, defects: &[usize]) -> Syndrome {
    let mut s = Syndrome::zeros(layout);
    let bits = match kind {
        CheckKind::X => &mut s.x,
        CheckKind::Z => &mut s.z,
    };
    for &d in defects {
        bits[d] = true;
    }
    s
}

#[test]
fn every_weight_one_error_is_corrected_at_distance_three() {
    let layout = build_layout(3).unwrap();
    let decoder = Decoder::new(DecoderConfig::new(layout.clone())).unwrap();
    let mut failures = 0;
    for q in 0..9 {
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            let mut err = ErrorState::clean(9);
            err.apply(q, pauli);
            let c = decoder.decode(&SyndromeHistory::single(true_syndrome(&err, &layout))).unwrap();
            err.compose(&c.x_corrections, &c.z_corrections);
            assert!(true_syndrome(&err, &layout).is_trivial());
            failures += err.is_logical_error(&layout) as usize;
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn weight_two_errors_can_defeat_distance_three() {
    // Sanity check of the failure criterion: two X errors down column 0 plus
    // the decoder's weight-1 completion make a logical X.
    let layout = build_layout(3).unwrap();
    let decoder = Decoder::new(DecoderConfig::new(layout.clone())).unwrap();
    let mut any_failure = false;
    for a in 0..9 {
        for b in a + 1..9 {
            let mut err = ErrorState::clean(9);
            err.apply(a, Pauli::X);
            err.apply(b, Pauli::X);
            let c = decoder.decode(&SyndromeHistory::single(true_syndrome(&err, &layout))).unwrap();
            err.compose(&c.x_corrections, &c.z_corrections);
            any_failure |= err.is_logical_error(&layout);
        }
    }
    assert!(any_failure);
}

#[test]
fn exact_matching_is_optimal_for_every_distance_three_defect_set() {
    let layout = build_layout(3).unwrap();
    let decoder = Decoder::new(DecoderConfig::new(layout.clone())).unwrap();
    for kind in [CheckKind::X, CheckKind::Z] {
        let (dist, boundary) = oracle_distances(&layout, kind);
        let n = layout.stabilizers(kind).len();
        for mask in 1u32..(1 << n) {
            let defects: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let history = SyndromeHistory::single(syndrome_from_defects(&layout, kind, &defects));
            let out = decoder.decode_detailed(&history).unwrap();
            assert_eq!(out.total_weight, brute_force_min(&defects, &dist, &boundary), "{kind:?} {defects:?}");
            // corrections clear the syndrome
            let mut residual = ErrorState::clean(9);
            residual.compose(&out.corrections.x_corrections, &out.corrections.z_corrections);
            assert_eq!(true_syndrome(&residual, &layout), history.outcomes()[0]);
        }
    }
}

#[test]
fn repeated_decode_is_identical() {
    let layout = build_layout(3).unwrap();
    let decoder = Decoder::new(DecoderConfig::new(layout.clone())).unwrap();
    let history = SyndromeHistory::single(syndrome_from_defects(&layout, CheckKind::Z, &[0, 3]));
    let first = decoder.decode_detailed(&history).unwrap();
    for _ in 0..5 {
        assert_eq!(decoder.decode_detailed(&history).unwrap(), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_matching_is_optimal_at_distance_five(kind_x in any::<bool>(), picks in proptest::collection::btree_set(0usize..12, 1..=8)) {
        let layout = build_layout(5).unwrap();
        let kind = if kind_x { CheckKind::X } else { CheckKind::Z };
        let defects: Vec<usize> = picks.into_iter().collect();
        let (dist, boundary) = oracle_distances(&layout, kind);
        let decoder = Decoder::new(DecoderConfig::new(layout.clone())).unwrap();
        let out = decoder
            .decode_detailed(&SyndromeHistory::single(syndrome_from_defects(&layout, kind, &defects)))
            .unwrap();
        prop_assert_eq!(out.total_weight, brute_force_min(&defects, &dist, &boundary));
    }

    #[test]
    fn correction_clears_final_syndrome(
        d in prop::sample::select(vec![3usize, 5, 7]),
        seed_errors in proptest::collection::vec((0usize..49, 0u8..3), 0..6),
        flips in proptest::collection::vec((0usize..3, 0usize..24), 0..4),
    ) {
        let layout = build_layout(d).unwrap();
        let n = layout.num_data_qubits();
        let mut err = ErrorState::clean(n);
        for (q, p) in seed_errors {
            err.apply(q % n, [Pauli::X, Pauli::Y, Pauli::Z][p as usize]);
        }
        // Three noisy rounds with arbitrary measurement flips, then a perfect round.
        let truth = true_syndrome(&err, &layout);
        let mut rounds = vec![truth.clone(), truth.clone(), truth.clone()];
        for (t, s) in flips {
            let z = &mut rounds[t].z;
            let len = z.len();
            z[s % len] ^= true;
        }
        rounds.push(truth);
        let history = SyndromeHistory::new(rounds).unwrap();
        let decoder = Decoder::new(DecoderConfig::new(layout.clone())).unwrap();
        let c = decoder.decode(&history).unwrap();
        err.compose(&c.x_corrections, &c.z_corrections);
        prop_assert!(true_syndrome(&err, &layout).is_trivial());
    }
}
