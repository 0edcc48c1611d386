mod support;

use bugsift::metrics::{pr_curve, rank_functions, roc_curve, ScoredExample};
use proptest::prelude::*;
use support::pairwise_auc;

fn data() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..300).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(0u8..10).prop_map(|k| k as f64 / 10.0), 0.0f64..1.0], n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

fn scored(s: &[f64], y: &[bool]) -> Vec<ScoredExample> {
    s.iter().zip(y).map(|(&s, &y)| ScoredExample::new(s, y)).collect()
}

proptest! {
    #[test]
    fn roc_auc_is_pairwise_probability((s, y) in data()) {
        prop_assume!(y.iter().any(|&b| b) && y.iter().any(|&b| !b));
        let auc = roc_curve(&scored(&s, &y)).unwrap().auc;
        prop_assert!((auc - pairwise_auc(&s, &y)).abs() < 1e-9);
    }

    #[test]
    fn monotone_transform_invariance((s, y) in data()) {
        prop_assume!(y.iter().any(|&b| b) && y.iter().any(|&b| !b));
        let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
        let a = scored(&s, &y);
        let b = scored(&t, &y);
        prop_assert!((roc_curve(&a).unwrap().auc - roc_curve(&b).unwrap().auc).abs() < 1e-12);
        prop_assert!((pr_curve(&a).unwrap().auc - pr_curve(&b).unwrap().auc).abs() < 1e-12);
    }

    #[test]
    fn curves_are_bounded_and_monotone((s, y) in data()) {
        prop_assume!(y.iter().any(|&b| b) && y.iter().any(|&b| !b));
        let roc = roc_curve(&scored(&s, &y)).unwrap();
        for w in roc.points.windows(2) {
            prop_assert!(w[1].x >= w[0].x && w[1].y >= w[0].y);
        }
        let last = roc.points.last().unwrap();
        prop_assert_eq!((last.x, last.y), (1.0, 1.0));
        let pr = pr_curve(&scored(&s, &y)).unwrap();
        prop_assert!((0.0..=1.0).contains(&pr.auc));
        prop_assert!(pr.points.iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
    }

    #[test]
    fn ranking_is_sorted(s in prop::collection::vec(0.0f64..1.0, 0..100)) {
        let data: Vec<(String, f64)> = s.iter().enumerate().map(|(i, &x)| (format!("f{i:03}"), x)).collect();
        let r = rank_functions(&data);
        prop_assert_eq!(r.len(), s.len());
        for w in r.windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].function_id < w[1].function_id));
        }
    }
}

#[test]
fn perfect_and_inverted_rankings() {
    let s = [0.9, 0.8, 0.2, 0.1];
    let y = [true, true, false, false];
    assert_eq!(roc_curve(&scored(&s, &y)).unwrap().auc, 1.0);
    assert_eq!(pr_curve(&scored(&s, &y)).unwrap().auc, 1.0);
    let inv = [false, false, true, true];
    assert_eq!(roc_curve(&scored(&s, &inv)).unwrap().auc, 0.0);
}
