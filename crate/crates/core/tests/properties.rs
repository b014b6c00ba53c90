use proptest::prelude::*;

use spikeplace::eval::{
    correct_match_sparsity, predictions_from_distance, recall_at_n, sequence_match, similarity_to_distance,
    Boundary, DistanceMatrix, GroundTruth, Matrix,
};
use spikeplace::modular::{assign_neurons, ResponseMatrix};

fn square(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_n).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0u32..40, n), n))
        .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect())
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::TruncateRescale), Just(Boundary::ValidOnly)]
}

fn dm(rows: &[Vec<f64>]) -> DistanceMatrix {
    DistanceMatrix::from_rows(rows).unwrap()
}

proptest! {
    #[test]
    fn recall_is_monotone_in_n(rows in square(12), tol in 0usize..3) {
        let d = dm(&rows);
        let n = d.rows();
        let targets: Vec<Option<usize>> = (0..n).map(Some).collect();
        let gt = GroundTruth::from_targets(n, &targets, tol).unwrap();
        let mut prev = 0.0;
        for k in 1..=n {
            let r = recall_at_n(&d, &gt, k).unwrap().recall;
            prop_assert!(r >= prev);
            prev = r;
        }
        prop_assert_eq!(prev, 1.0);
    }

    #[test]
    fn sequence_matching_is_linear(
        (a, b) in (2usize..10).prop_flat_map(|n| {
            let m = prop::collection::vec(prop::collection::vec(0u32..64, n), n);
            (m.clone(), m)
        }),
        x in 0u32..4,
        y in 0u32..4,
        l in 1usize..5,
        rule in boundary(),
    ) {
        // small integers keep every sum exact in f64
        let to_f = |m: &Vec<Vec<u32>>| -> Vec<Vec<f64>> {
            m.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
        };
        let (fa, fb) = (to_f(&a), to_f(&b));
        let mixed: Vec<Vec<f64>> = fa.iter().zip(&fb)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| f64::from(x) * p + f64::from(y) * q).collect())
            .collect();
        let n = fa.len();
        prop_assume!(rule == Boundary::TruncateRescale || l <= n);
        let sa = sequence_match(&dm(&fa), l, rule).unwrap();
        let sb = sequence_match(&dm(&fb), l, rule).unwrap();
        let sm = sequence_match(&dm(&mixed), l, rule).unwrap();
        // the valid-only fill is a maximum, which is not linear
        let full = |r: usize, c: usize| rule == Boundary::TruncateRescale || (r + l <= n && c + l <= n);
        for r in 0..n {
            for c in 0..n {
                if !full(r, c) {
                    continue;
                }
                let want = f64::from(x) * sa.get(r, c) + f64::from(y) * sb.get(r, c);
                prop_assert!((sm.get(r, c) - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
        if rule == Boundary::TruncateRescale {
            prop_assert_eq!(sequence_match(&dm(&fa), 1, rule).unwrap(), dm(&fa));
        }
    }

    #[test]
    fn constant_shift_changes_nothing(rows in square(10), shift in 1u32..50, k in 1usize..4) {
        let d = dm(&rows);
        let shifted = dm(&rows.iter().map(|r| r.iter().map(|v| v + f64::from(shift)).collect()).collect::<Vec<_>>());
        prop_assert_eq!(predictions_from_distance(&d), predictions_from_distance(&shifted));
        let gt = GroundTruth::identity(d.rows());
        let n = k.min(d.rows());
        prop_assert_eq!(recall_at_n(&d, &gt, n).unwrap().recall, recall_at_n(&shifted, &gt, n).unwrap().recall);
    }

    #[test]
    fn distance_reverses_similarity_order(rows in square(10)) {
        let s = Matrix::from_rows(&rows).unwrap();
        let d = similarity_to_distance(&s).unwrap();
        for c in 0..s.cols() {
            for a in 0..s.rows() {
                for b in 0..s.rows() {
                    prop_assert_eq!(s.get(a, c).partial_cmp(&s.get(b, c)), d.get(b, c).partial_cmp(&d.get(a, c)));
                }
            }
        }
    }

    #[test]
    fn sparsity_depends_only_on_argmins(rows in square(12), scale in 1u32..5, shift in 0u32..9) {
        let d = dm(&rows);
        let moved = dm(&rows.iter().map(|r| r.iter().map(|v| v * f64::from(scale) + f64::from(shift)).collect()).collect::<Vec<_>>());
        let gt = GroundTruth::identity(d.rows());
        let a = correct_match_sparsity(&d, &gt).ok();
        let b = correct_match_sparsity(&moved, &gt).ok();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn assignment_matches_row_scan(rows in prop::collection::vec(prop::collection::vec(0u32..6, 5), 1..20)) {
        let ids: Vec<usize> = vec![10, 11, 12, 13, 14];
        let (assigned, inert) = assign_neurons(&ResponseMatrix::from_rows(&rows).unwrap(), &ids);
        for (e, row) in rows.iter().enumerate() {
            let max = row.iter().max().unwrap();
            let first = row.iter().position(|v| v == max).unwrap();
            prop_assert_eq!(assigned[e], ids[first]);
            prop_assert_eq!(inert[e], *max == 0);
        }
    }
}
