//! The reference computations must stand on their own: the windowed grid
//! search is checked against a literal enumeration, and the geometric
//! helpers against hand-constructed shapes.

use eqodds::data::{LabeledPredictions, LossSpec, PredictionRow};
use eqodds_testkit::{gen, oracle};

fn rows(list: &[(f64, u8, &str)]) -> LabeledPredictions {
    LabeledPredictions::new(
        list.iter()
            .map(|&(score, label, group)| PredictionRow {
                score,
                label,
                group: group.to_string(),
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn windowed_oracle_equals_the_literal_enumeration() {
    for seed in 0..30 {
        let mut rng = gen::rng(100 + seed);
        let data = gen::two_group_dataset(&mut rng);
        let loss = gen::random_loss(&mut rng);
        let alpha = gen::oracle_aligned_alpha(&mut rng);
        let windowed = oracle::grid_oracle_loss(&data, &loss, alpha);
        let literal = oracle::grid_oracle_loss_literal(&data, &loss, alpha);
        assert_eq!(
            windowed, literal,
            "seed {seed} alpha {alpha}: windowed {windowed} vs literal {literal}"
        );
    }
}

#[test]
fn direct_roc_counting_matches_hand_enumeration() {
    let neg = [0.2, 0.1];
    let pos = [0.9, 0.8];
    let points = oracle::roc_points_direct(&neg, &pos);
    // Two corners plus one point per distinct score.
    assert_eq!(points.len(), 6);
    for expected in [[0.0, 0.0], [1.0, 1.0], [0.0, 0.5], [0.0, 1.0], [0.5, 1.0]] {
        assert!(points.contains(&expected), "missing {expected:?}");
    }
}

#[test]
fn unprocessed_oracle_on_a_hand_fixture() {
    // Group A separates perfectly; group B scores its single negative above
    // every positive. With false positives five times as costly as false
    // negatives, B prefers predicting all-negative (3 misses at cost 1)
    // over all-positive (1 false alarm at cost 5).
    let data = rows(&[
        (0.9, 1, "A"),
        (0.8, 1, "A"),
        (0.2, 0, "A"),
        (0.1, 0, "A"),
        (0.1, 1, "B"),
        (0.2, 1, "B"),
        (0.3, 1, "B"),
        (0.9, 0, "B"),
    ]);
    let skewed = LossSpec::new(5.0, 1.0).unwrap();
    assert!((oracle::unprocessed_loss_oracle(&data, &skewed) - 3.0 / 8.0).abs() <= 1e-12);
    // Symmetric costs flip B to all-positive: one false alarm.
    let symmetric = LossSpec::symmetric();
    assert!((oracle::unprocessed_loss_oracle(&data, &symmetric) - 1.0 / 8.0).abs() <= 1e-12);
}

#[test]
fn lipschitz_slack_weights_one_grid_step_by_the_costs() {
    let data = rows(&[(0.9, 1, "A"), (0.8, 1, "A"), (0.2, 0, "A"), (0.1, 0, "A")]);
    let loss = LossSpec::new(2.0, 4.0).unwrap();
    let slack = oracle::lipschitz_slack(&data, &loss);
    assert!((slack - 0.02 * (2.0 * 0.5 + 4.0 * 0.5)).abs() <= 1e-15);
}

#[test]
fn clipping_offset_squares_yields_their_overlap() {
    let unit = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let shifted = [[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]];
    let overlap = oracle::convex_intersection(&unit, &shifted);
    let area2: f64 = (0..overlap.len())
        .map(|i| {
            let a = overlap[i];
            let b = overlap[(i + 1) % overlap.len()];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    assert!((area2 / 2.0 - 0.25).abs() <= 1e-12, "area {}", area2 / 2.0);
    for p in &overlap {
        assert!(oracle::in_convex_polygon(&unit, *p, 1e-9));
        assert!(oracle::in_convex_polygon(&shifted, *p, 1e-9));
    }

    let far = [[5.0, 5.0], [6.0, 5.0], [6.0, 6.0], [5.0, 6.0]];
    let empty = oracle::convex_intersection(&unit, &far);
    assert!(!oracle::in_convex_polygon(&empty, [0.5, 0.5], 1e-9));
}

#[test]
fn opposed_triangles_intersect_exactly_on_the_diagonal() {
    let upper = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let lower = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
    let meet = oracle::convex_intersection(&upper, &lower);
    assert!(!meet.is_empty());
    for p in &meet {
        assert!((p[0] - p[1]).abs() <= 1e-9, "off-diagonal point {p:?}");
    }
    assert!(oracle::in_convex_polygon(&meet, [0.5, 0.5], 1e-7));
    assert!(oracle::in_convex_polygon(&meet, [0.0, 0.0], 1e-7));
    assert!(!oracle::in_convex_polygon(&meet, [0.3, 0.7], 1e-7));
}

#[test]
fn polygon_membership_handles_degenerate_shapes() {
    assert!(!oracle::in_convex_polygon(&[], [0.0, 0.0], 1e-9));
    assert!(oracle::in_convex_polygon(&[[0.5, 0.5]], [0.5, 0.5], 1e-9));
    assert!(!oracle::in_convex_polygon(&[[0.5, 0.5]], [0.6, 0.5], 1e-9));

    let segment = [[0.0, 0.0], [1.0, 1.0]];
    assert!(oracle::in_convex_polygon(&segment, [0.25, 0.25], 1e-9));
    assert!(!oracle::in_convex_polygon(&segment, [0.25, 0.35], 1e-9));

    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    assert!(oracle::in_convex_polygon(&square, [0.5, 0.5], 1e-9));
    assert!(oracle::in_convex_polygon(&square, [1.0, 0.5], 1e-9));
    assert!(!oracle::in_convex_polygon(&square, [1.1, 0.5], 1e-9));
}

#[test]
fn grid_oracle_tightens_as_alpha_grows() {
    // Larger windows can only expand the feasible combinations.
    for seed in 0..10 {
        let mut rng = gen::rng(300 + seed);
        let data = gen::two_group_dataset(&mut rng);
        let loss = gen::random_loss(&mut rng);
        let mut previous = f64::INFINITY;
        for k in [0u32, 1, 2, 5, 10, 25, 50] {
            let value = oracle::grid_oracle_loss(&data, &loss, f64::from(k) * 0.02);
            assert!(
                value <= previous + 1e-12,
                "seed {seed}: oracle rose at k={k}"
            );
            previous = value;
        }
    }
}
