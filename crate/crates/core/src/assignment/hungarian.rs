//! Kuhn–Munkres with row potentials and shortest augmenting paths, `O(s³)`.

use ndarray::Array2;

use super::Assignment;
use crate::cost::CostMatrix;
use crate::error::Result;
use crate::scalar::Scalar;

/// Minimum-cost perfect matching of a dense square matrix; returns the column of each row.
pub fn solve_square<T: Scalar>(cost: &Array2<T>) -> Vec<usize> {
    let n = cost.nrows();
    debug_assert_eq!(n, cost.ncols());
    if n == 0 {
        return Vec::new();
    }
    let inf = T::infinity();
    // 1-based with a virtual column 0 as the path root.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        min_slack.fill(inf);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let slack = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[row_of[j] - 1] = j - 1;
    }
    row_to_col
}

/// Optimal assignment of a GED cost matrix.
///
/// Forbidden cells cost `1 + s·max`, which exceeds any assignment built from finite
/// cells only, and dummy–dummy cells cost 0.
pub fn hungarian<T: Scalar>(cost: &CostMatrix<T>) -> Result<Assignment<T>> {
    let s = cost.size();
    let big = T::one() + T::of(s as f64) * cost.max_finite();
    let dense = cost.dense(big, T::zero());
    Assignment::new(cost, solve_square(&dense))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, Array1};

    #[test]
    fn small_square_problem() {
        let c = arr2(&[[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]]);
        let a = solve_square(&c);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn identical_single_nodes_substitute() {
        let c = CostMatrix::from_blocks(arr2(&[[0.0]]), arr1(&[1.0]), arr1(&[1.0])).unwrap();
        let a = hungarian(&c).unwrap();
        assert_eq!(a.objective(), 0.0);
        assert_eq!(a.operations(), vec![super::super::NodeOp::Substitute(0, 0)]);
    }

    #[test]
    fn empty_source_inserts_everything() {
        let ins = arr1(&[0.5, 1.5, 2.0]);
        let c = CostMatrix::from_blocks(Array2::zeros((0, 3)), Array1::zeros(0), ins).unwrap();
        assert_eq!(hungarian(&c).unwrap().objective(), 4.0);
    }

    #[test]
    fn zero_by_zero() {
        let c = CostMatrix::<f64>::from_blocks(Array2::zeros((0, 0)), Array1::zeros(0), Array1::zeros(0)).unwrap();
        let a = hungarian(&c).unwrap();
        assert_eq!((a.size(), a.objective()), (0, 0.0));
    }

    #[test]
    fn works_in_single_precision() {
        let c = CostMatrix::<f32>::from_blocks(arr2(&[[3.0, 0.5]]), arr1(&[1.0]), arr1(&[1.0, 1.0])).unwrap();
        assert_eq!(hungarian(&c).unwrap().objective(), 1.5);
    }
}
