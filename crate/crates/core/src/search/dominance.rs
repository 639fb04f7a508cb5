//! Pareto dominance over maximized objective vectors.

/// `a` dominates `b`: no worse in every objective and strictly better in one.
pub fn dominates<T: PartialOrd>(a: &[T], b: &[T]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// `a` is at least as good as `b` in every objective.
pub fn weakly_dominates<T: PartialOrd>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Indices of the points not dominated by any other point, in input order.
///
/// Duplicate points are all kept, since equal vectors do not dominate each other.
pub fn non_dominated_indices<T: PartialOrd, V: AsRef<[T]>>(points: &[V]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q.as_ref(), points[i].as_ref())))
        .collect()
}
