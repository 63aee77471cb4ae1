//! Structural guarantees of the synthetic dataset generators.

use eqodds::roc::{build_hull, build_roc, contains};
use eqodds_testkit::gen;

#[test]
fn generators_are_seed_deterministic() {
    let a = gen::random_small_dataset(&mut gen::rng(5));
    let b = gen::random_small_dataset(&mut gen::rng(5));
    assert_eq!(a, b);
}

#[test]
fn small_datasets_fit_the_oracle_budget() {
    for seed in 0..50 {
        let data = gen::random_small_dataset(&mut gen::rng(seed));
        assert!(data.n() <= 40, "seed {seed}: {} rows", data.n());
        let n_groups = data.group_index().len();
        assert!((2..=3).contains(&n_groups));
        for group in data.group_index() {
            // Both labels present, so ROC geometry is defined.
            assert!(build_roc(&data, group).is_ok());
        }
        for row in data.rows() {
            assert!((0.0..=1.0).contains(&row.score));
            // Scores sit on a thousandth grid so they survive the CLI's
            // 12-significant-digit serialization byte-exactly.
            let scaled = row.score * 1000.0;
            assert!(
                (scaled - scaled.round()).abs() <= 1e-6,
                "score {}",
                row.score
            );
        }
    }
}

#[test]
fn two_group_datasets_have_informative_structure() {
    for seed in 0..30 {
        let data = gen::two_group_dataset(&mut gen::rng(seed));
        assert_eq!(data.group_index().len(), 2);
        for group in data.group_index() {
            assert!(build_roc(&data, group).is_ok());
        }
    }
}

#[test]
fn oracle_aligned_alphas_sit_on_the_grid() {
    let mut rng = gen::rng(11);
    for _ in 0..200 {
        let alpha = gen::oracle_aligned_alpha(&mut rng);
        assert!((0.0..=1.0).contains(&alpha));
        let k = alpha / 0.02;
        assert!((k - k.round()).abs() <= 1e-9, "alpha {alpha} off-grid");
    }
}

#[test]
fn calibrated_scores_live_on_the_bucket_midpoints() {
    let data = gen::calibrated_dataset(&mut gen::rng(3), 500);
    assert_eq!(data.group_index().len(), 3);
    assert_eq!(data.n(), 1500);
    for row in data.rows() {
        let k = (row.score * 20.0 - 1.0) / 2.0;
        assert!(
            (k - k.round()).abs() <= 1e-9 && (0.0..10.0).contains(&k),
            "score {} is not a bucket midpoint",
            row.score
        );
    }
    for group in data.group_index() {
        assert!(build_roc(&data, group).is_ok());
    }
}

#[test]
fn mixture_fixture_has_two_viable_groups() {
    let data = gen::mixture_fixture(&mut gen::rng(21));
    assert_eq!(data.group_index().len(), 2);
    assert_eq!(data.n(), 4000);
    for group in data.group_index() {
        assert!(build_roc(&data, group).is_ok());
    }
}

#[test]
fn posterior_pairs_share_rows_and_nest_their_hulls() {
    let mut rng = gen::rng(17);
    let (fine, coarse) = gen::posterior_pair(&mut rng, 5000, 4);
    assert_eq!(fine.n(), coarse.n());
    for (a, b) in fine.rows().iter().zip(coarse.rows()) {
        assert_eq!(a.label, b.label);
        assert_eq!(a.group, b.group);
        assert!(b.score <= a.score + 1e-12);
        let quarters = b.score * 4.0;
        assert!((quarters - quarters.round()).abs() <= 1e-12);
    }
    // Flooring scores is monotone, so the coarse candidate's reachable
    // operating points all lie inside the fine candidate's hulls.
    for group in fine.group_index() {
        let hull_fine = build_hull(&build_roc(&fine, group).unwrap());
        let hull_coarse = build_hull(&build_roc(&coarse, group).unwrap());
        for &v in &hull_coarse.vertices {
            assert!(
                contains(&hull_fine, v, 1e-9),
                "group {group}: coarse vertex {v:?} escapes the fine hull"
            );
        }
    }
}

#[test]
fn scale_dataset_covers_four_groups() {
    let data = gen::scale_dataset(&mut gen::rng(29), 20_000);
    assert_eq!(data.n(), 20_000);
    assert_eq!(data.group_index().len(), 4);
    for group in data.group_index() {
        assert!(build_roc(&data, group).is_ok());
    }
}
