use legis_core::metrics::{confusion, f1, mean_ci95, precision, recall, ConfusionMatrix};
use proptest::prelude::*;

fn labels() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (1usize..200).prop_flat_map(|n| (prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n)))
}

proptest! {
    #[test]
    fn confusion_counts_every_row_once((y, p) in labels()) {
        let cm = confusion(&y, &p).unwrap();
        prop_assert_eq!(cm.total() as usize, y.len());
        prop_assert_eq!((cm.tp + cm.fn_) as usize, y.iter().filter(|&&v| v == 1).count());
        prop_assert_eq!((cm.tp + cm.fp) as usize, p.iter().filter(|&&v| v == 1).count());
    }

    #[test]
    fn metrics_ignore_row_order((y, p) in labels(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..y.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let y2: Vec<u8> = order.iter().map(|&i| y[i]).collect();
        let p2: Vec<u8> = order.iter().map(|&i| p[i]).collect();
        prop_assert_eq!(confusion(&y, &p).unwrap(), confusion(&y2, &p2).unwrap());
    }

    #[test]
    fn f1_lies_between_the_smaller_and_larger_of_precision_and_recall(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
        let cm = ConfusionMatrix::new(tp, fp, fn_, tn);
        match (precision(&cm), recall(&cm), f1(&cm)) {
            (Some(p), Some(r), Some(f)) => {
                prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
                prop_assert!((f - 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64).abs() < 1e-12);
            }
            _ => prop_assert_eq!(tp, 0),
        }
    }

    #[test]
    fn interval_is_centered_and_shift_invariant(values in prop::collection::vec(0.0..1.0f64, 2..20), shift in -5.0..5.0f64) {
        let (m, h) = mean_ci95(&values).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let (m2, h2) = mean_ci95(&shifted).unwrap();
        prop_assert!((m2 - m - shift).abs() < 1e-9);
        prop_assert!((h2 - h).abs() < 1e-9);
        prop_assert!(h >= 0.0);
    }
}

#[test]
fn undefined_metrics_are_none() {
    let cm = ConfusionMatrix::new(0, 0, 0, 10);
    assert_eq!((precision(&cm), recall(&cm), f1(&cm)), (None, None, None));
    assert!(mean_ci95(&[0.5]).is_none());
}
