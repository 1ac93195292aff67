use proptest::prelude::*;
use rayreg::detection::{score, Cluster};

fn cluster(row: f64, col: f64) -> Cluster {
    Cluster { row, col, pixels: 9 }
}

/// Largest number of one-to-one cluster/truth pairs within `radius`, by
/// exhaustive search.
fn max_matching(clusters: &[Cluster], truth: &[(f64, f64)], radius: f64) -> usize {
    fn go(i: usize, clusters: &[Cluster], truth: &[(f64, f64)], used: &mut Vec<bool>, radius: f64) -> usize {
        if i == clusters.len() {
            return 0;
        }
        let mut best = go(i + 1, clusters, truth, used, radius);
        for (t, &(r, c)) in truth.iter().enumerate() {
            if !used[t] && (clusters[i].row - r).hypot(clusters[i].col - c) <= radius {
                used[t] = true;
                best = best.max(1 + go(i + 1, clusters, truth, used, radius));
                used[t] = false;
            }
        }
        best
    }
    go(0, clusters, truth, &mut vec![false; truth.len()], radius)
}

#[test]
fn examples() {
    let s = score(&[cluster(5.0, 5.0)], &[(5.0, 5.0)], 10.0, 1.0);
    assert_eq!((s.hits, s.false_alarms, s.missed), (1, 0, 0));
    let truth: Vec<(f64, f64)> = (0..25).map(|i| (i as f64 * 20.0, 0.0)).collect();
    let s = score(&[], &truth, 10.0, 1.0);
    assert_eq!((s.hits, s.false_alarms, s.missed), (0, 0, 25));
    let s = score(&[cluster(0.0, 3.0), cluster(0.0, -4.0)], &[(0.0, 0.0)], 10.0, 1.0);
    assert_eq!((s.hits, s.false_alarms, s.missed), (1, 1, 0));
}

#[test]
fn radius_is_in_meters() {
    let s = score(&[cluster(0.0, 6.0)], &[(0.0, 0.0)], 10.0, 2.0);
    assert_eq!(s.hits, 0);
    let s = score(&[cluster(0.0, 5.0)], &[(0.0, 0.0)], 10.0, 2.0);
    assert_eq!(s.hits, 1);
}

fn points(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..40.0, 0.0f64..40.0), 0..=n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn greedy_is_a_valid_matching_of_at_least_half_the_optimum(c in points(5), t in points(5), radius in 1.0f64..15.0) {
        let clusters: Vec<Cluster> = c.iter().map(|&(r, col)| cluster(r, col)).collect();
        let s = score(&clusters, &t, radius, 1.0);
        let best = max_matching(&clusters, &t, radius);
        prop_assert_eq!(s.hits + s.missed, t.len());
        prop_assert_eq!(s.hits + s.false_alarms, clusters.len());
        prop_assert!(s.hits <= best);
        prop_assert!(2 * s.hits >= best);
    }

    #[test]
    fn greedy_is_optimal_for_well_separated_targets(c in points(5), t in points(5), radius in 1.0f64..6.0) {
        // Truths further apart than twice the radius cannot compete for a cluster.
        let separated = t.iter().enumerate().all(|(i, a)| {
            t.iter().skip(i + 1).all(|b| (a.0 - b.0).hypot(a.1 - b.1) > 2.0 * radius)
        });
        prop_assume!(separated);
        let clusters: Vec<Cluster> = c.iter().map(|&(r, col)| cluster(r, col)).collect();
        prop_assert_eq!(score(&clusters, &t, radius, 1.0).hits, max_matching(&clusters, &t, radius));
    }
}
