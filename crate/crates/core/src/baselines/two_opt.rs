use crate::instances::{Point, ProblemInstance};

/// Improvements smaller than this are treated as ties, so the search
/// cannot cycle on rounding noise.
const MIN_GAIN: f64 = 1e-12;

/// Coordinates of every node, depot first.
pub fn instance_coords(instance: &ProblemInstance) -> Vec<Point> {
    (0..instance.num_nodes()).map(|n| instance.coord(n)).collect()
}

fn length(tour: &[usize], coords: &[Point]) -> f64 {
    tour.windows(2).map(|w| coords[w[0]].distance(coords[w[1]])).sum()
}

/// First-improvement 2-opt on a closed tour given as a node sequence that
/// starts and ends at the depot. Endpoints stay fixed.
pub fn two_opt(tour: &[usize], coords: &[Point]) -> Vec<usize> {
    let mut t = tour.to_vec();
    let n = t.len();
    let d = |a: usize, b: usize| coords[a].distance(coords[b]);
    'search: loop {
        for i in 1..n.saturating_sub(2) {
            for k in i + 1..n - 1 {
                let (a, b, c, e) = (t[i - 1], t[i], t[k], t[k + 1]);
                if d(a, c) + d(b, e) < d(a, b) + d(c, e) - MIN_GAIN {
                    t[i..=k].reverse();
                    continue 'search;
                }
            }
        }
        break;
    }
    debug_assert!(length(&t, coords) <= length(tour, coords) + 1e-9);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn optimal_triangle_is_unchanged() {
        let coords = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(two_opt(&[0, 1, 2, 0], &coords), vec![0, 1, 2, 0]);
    }

    #[test]
    fn uncrosses_square() {
        let coords = pts(&[(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)]);
        let crossed = [0, 1, 2, 3, 0];
        let before = length(&crossed, &coords);
        let out = two_opt(&crossed, &coords);
        let after = length(&out, &coords);
        // Best of all orders of the three customers (the oracle).
        let orders = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
        let best = orders
            .iter()
            .map(|o| length(&[0, o[0], o[1], o[2], 0], &coords))
            .fold(f64::INFINITY, f64::min);
        assert!(after < before);
        assert!((after - best).abs() < 1e-12);
        assert!((after - 4.0).abs() < 1e-12);
    }

    #[test]
    fn short_tours_pass_through() {
        let coords = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(two_opt(&[0, 1, 0], &coords), vec![0, 1, 0]);
        assert_eq!(two_opt(&[0, 0], &coords), vec![0, 0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn never_lengthens(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..10)) {
            let coords = pts(&raw);
            let mut tour: Vec<usize> = (0..coords.len()).collect();
            tour.push(0);
            let out = two_opt(&tour, &coords);
            prop_assert!(length(&out, &coords) <= length(&tour, &coords) + 1e-12);
            prop_assert_eq!(out[0], 0);
            prop_assert_eq!(*out.last().unwrap(), 0);
            let mut sorted = out[1..out.len() - 1].to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..coords.len()).collect::<Vec<_>>());
        }
    }
}
