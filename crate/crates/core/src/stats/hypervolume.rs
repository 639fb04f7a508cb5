//! Exact hypervolume of a point set under maximization.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::search::non_dominated_indices;

/// Volume of the union of boxes `[reference, p]` over `front`.
///
/// Dominated and duplicate points are allowed and contribute nothing extra.
pub fn hypervolume<T: Real>(front: &[Vec<T>], reference: &[T]) -> Result<T> {
    let k = reference.len();
    let mut shifted = Vec::with_capacity(front.len());
    for (i, p) in front.iter().enumerate() {
        if p.len() != k {
            return Err(Error::InvalidArgument(format!("point {i} has {} objectives, expected {k}", p.len())));
        }
        if p.iter().zip(reference).any(|(x, r)| x < r) {
            return Err(Error::BelowReference(i));
        }
        shifted.push(p.iter().zip(reference).map(|(&x, &r)| x - r).collect::<Vec<T>>());
    }
    if k == 0 || shifted.is_empty() {
        return Ok(T::zero());
    }
    Ok(wfg(nondominated(shifted)))
}

/// Hypervolume of confidence vectors against the worst corner `(-1, ..., -1)`.
pub fn confidence_hypervolume<T: Real>(front: &[Vec<T>]) -> Result<T> {
    let k = front.first().map_or(0, Vec::len);
    hypervolume(front, &vec![-T::one(); k])
}

fn nondominated<T: Real>(points: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let keep = non_dominated_indices(&points);
    let mut out: Vec<Vec<T>> = Vec::with_capacity(keep.len());
    for i in keep {
        if !out.iter().any(|q| q == &points[i]) {
            out.push(points[i].clone());
        }
    }
    out
}

fn box_volume<T: Real>(p: &[T]) -> T {
    p.iter().fold(T::one(), |acc, &x| acc * x)
}

/// Points are mutually non-dominated and bounded below by the origin.
fn wfg<T: Real>(mut points: Vec<Vec<T>>) -> T {
    match points.len() {
        0 => return T::zero(),
        1 => return box_volume(&points[0]),
        _ => {}
    }
    let k = points[0].len();
    if k == 1 {
        return points.iter().map(|p| p[0]).fold(T::zero(), T::max);
    }
    if k == 2 {
        return sweep_2d(points);
    }
    // Descending on the last objective keeps limit sets small.
    points.sort_by(|a, b| b[k - 1].partial_cmp(&a[k - 1]).expect("finite objectives"));
    let mut total = T::zero();
    for i in 0..points.len() {
        total = total + exclusive(&points[i], &points[i + 1..]);
    }
    total
}

/// Volume dominated by `p` and by none of `rest`.
fn exclusive<T: Real>(p: &[T], rest: &[Vec<T>]) -> T {
    let limited: Vec<Vec<T>> = rest
        .iter()
        .map(|q| q.iter().zip(p).map(|(&a, &b)| a.min(b)).collect())
        .collect();
    box_volume(p) - wfg(nondominated(limited))
}

fn sweep_2d<T: Real>(mut points: Vec<Vec<T>>) -> T {
    points.sort_by(|a, b| b[0].partial_cmp(&a[0]).expect("finite objectives"));
    let mut total = T::zero();
    let mut height = T::zero();
    for p in &points {
        if p[1] > height {
            total = total + p[0] * (p[1] - height);
            height = p[1];
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fraction of uniform samples in the bounding box dominated by some point, scaled.
    fn monte_carlo(front: &[Vec<f64>], samples: usize, seed: u64) -> f64 {
        let k = front[0].len();
        let top: Vec<f64> = (0..k).map(|d| front.iter().map(|p| p[d]).fold(-1.0, f64::max)).collect();
        let bbox: f64 = top.iter().map(|t| t + 1.0).product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; k];
        let mut hits = 0usize;
        for _ in 0..samples {
            for d in 0..k {
                x[d] = rng.random_range(-1.0..=top[d]);
            }
            if front.iter().any(|p| p.iter().zip(&x).all(|(a, b)| a >= b)) {
                hits += 1;
            }
        }
        bbox * hits as f64 / samples as f64
    }

    fn random_front(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..k).map(|_| -rng.random_range(0.0..0.6)).collect()).collect()
    }

    #[test]
    fn unit_cube_and_box() {
        assert_eq!(confidence_hypervolume(&[vec![0.0; 6]]).unwrap(), 1.0);
        assert_eq!(confidence_hypervolume(&[vec![-0.5; 6]]).unwrap(), 0.015625);
        assert_eq!(confidence_hypervolume(&[vec![-0.5f32; 6]]).unwrap(), 0.015625f32);
        assert_eq!(confidence_hypervolume::<f64>(&[]).unwrap(), 0.0);
    }

    #[test]
    fn two_boxes_inclusion_exclusion() {
        // [0,2]x[0,1]x[0,1] and [0,1]x[0,2]x[0,1] overlap in the unit cube.
        let hv = hypervolume(&[vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0]], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(hv, 3.0);
        let hv = hypervolume(&[vec![2.0, 1.0], vec![1.0, 2.0], vec![1.0, 1.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, 3.0);
    }

    #[test]
    fn below_reference_rejected() {
        assert!(matches!(confidence_hypervolume(&[vec![0.0; 6], vec![-1.5, 0.0, 0.0, 0.0, 0.0, 0.0]]), Err(Error::BelowReference(1))));
        assert!(hypervolume(&[vec![0.0, 0.0]], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for t in 0..8 {
            let n = rng.random_range(1..=12);
            let front = random_front(&mut rng, n, 6);
            let exact = confidence_hypervolume(&front).unwrap();
            let mc = monte_carlo(&front, 200_000, t);
            assert!((exact - mc).abs() <= 0.01 * exact, "exact {exact} mc {mc}");
        }
    }

    proptest! {
        #[test]
        fn monotone(points in prop::collection::vec(prop::collection::vec(-1.0f64..=0.0, 4), 1..10), extra in prop::collection::vec(-1.0f64..=0.0, 4)) {
            let base = confidence_hypervolume(&points).unwrap();
            let mut more = points.clone();
            more.push(extra);
            let bigger = confidence_hypervolume(&more).unwrap();
            prop_assert!(bigger >= base - 1e-12);
            let fewer = confidence_hypervolume(&points[1..]).unwrap();
            prop_assert!(fewer <= base + 1e-12);
        }

        #[test]
        fn order_and_duplicates_do_not_matter(points in prop::collection::vec(prop::collection::vec(-1.0f64..=0.0, 5), 1..9)) {
            let hv = confidence_hypervolume(&points).unwrap();
            let mut rev = points.clone();
            rev.reverse();
            rev.push(points[0].clone());
            prop_assert!((confidence_hypervolume(&rev).unwrap() - hv).abs() < 1e-12);
        }
    }
}
