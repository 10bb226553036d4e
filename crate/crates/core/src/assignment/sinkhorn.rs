//! Sinkhorn–Knopp normalisation of `K = exp(−C/δ)`, run in the log domain.
//!
//! Starting from `u = v = 1`, each round sets `u ← 1 ⊘ (K v)` then `v ← 1 ⊘ (Kᵀ u)`,
//! and the soft assignment is `diag(u) K diag(v)`. Forbidden cells have `K = 0`;
//! dummy–dummy cells cost 0 and so have `K = 1`. Working with `log u`, `log v` and
//! `log K` gives the same iterates without underflow at small `δ`.

use ndarray::{Array1, Array2, Axis};

use crate::cost::{CellKind, CostMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SoftAssignment<T = f64> {
    matrix: Array2<T>,
    log_u: Array1<T>,
    log_v: Array1<T>,
    log_kernel: Array2<T>,
    delta: T,
    iterations: usize,
}

impl<T: Scalar> SoftAssignment<T> {
    /// Wraps an arbitrary matrix, e.g. for comparing against a hard assignment.
    pub fn from_matrix(matrix: Array2<T>) -> Self {
        let s = matrix.nrows();
        SoftAssignment {
            log_kernel: matrix.mapv(|x| x.ln()),
            matrix,
            log_u: Array1::zeros(s),
            log_v: Array1::zeros(s),
            delta: T::one(),
            iterations: 0,
        }
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn u(&self) -> Array1<T> {
        self.log_u.mapv(T::exp)
    }

    pub fn v(&self) -> Array1<T> {
        self.log_v.mapv(T::exp)
    }

    pub fn log_u(&self) -> &Array1<T> {
        &self.log_u
    }

    pub fn log_v(&self) -> &Array1<T> {
        &self.log_v
    }

    pub fn kernel(&self) -> Array2<T> {
        self.log_kernel.mapv(T::exp)
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn log_kernel<T: Scalar>(cost: &CostMatrix<T>, delta: T) -> Result<Array2<T>> {
    if delta.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let s = cost.size();
    let lk = Array2::from_shape_fn((s, s), |(i, j)| match cost.kind(i, j) {
        CellKind::DummyDummy => T::zero(),
        CellKind::Forbidden => T::neg_infinity(),
        _ => -cost.get(i, j).unwrap() / delta,
    });
    for (axis, name) in [(Axis(0), "row"), (Axis(1), "column")] {
        if let Some(i) = lk
            .axis_iter(axis)
            .position(|line| line.iter().all(|&x| x == T::neg_infinity()))
        {
            return Err(Error::Structural(format!("{name} {i} of the kernel is entirely zero")));
        }
    }
    Ok(lk)
}

fn logsumexp<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> T {
    let max = xs.clone().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<T>().ln()
}

/// `α = −LSE_j(L_ij + β_j)`.
fn row_update<T: Scalar>(lk: &Array2<T>, log_v: &Array1<T>) -> Array1<T> {
    lk.rows()
        .into_iter()
        .map(|row| -logsumexp(row.iter().zip(log_v.iter()).map(|(&l, &b)| l + b)))
        .collect()
}

/// `β = −LSE_i(L_ij + α_i)`.
fn col_update<T: Scalar>(lk: &Array2<T>, log_u: &Array1<T>) -> Array1<T> {
    lk.columns()
        .into_iter()
        .map(|col| -logsumexp(col.iter().zip(log_u.iter()).map(|(&l, &a)| l + a)))
        .collect()
}

fn scaled<T: Scalar>(lk: &Array2<T>, log_u: &Array1<T>, log_v: &Array1<T>) -> Array2<T> {
    Array2::from_shape_fn(lk.dim(), |(i, j)| (log_u[i] + lk[[i, j]] + log_v[j]).exp())
}

/// Iterates of the scaling vectors: `alphas[t]`, `betas[t]` after round `t+1`.
struct Trace<T> {
    alphas: Vec<Array1<T>>,
    betas: Vec<Array1<T>>,
}

fn run<T: Scalar>(lk: &Array2<T>, k: usize) -> Trace<T> {
    let s = lk.nrows();
    let mut log_v = Array1::zeros(s);
    let mut trace = Trace {
        alphas: Vec::with_capacity(k),
        betas: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let log_u = row_update(lk, &log_v);
        log_v = col_update(lk, &log_u);
        trace.alphas.push(log_u);
        trace.betas.push(log_v.clone());
    }
    trace
}

pub fn sinkhorn<T: Scalar>(cost: &CostMatrix<T>, delta: T, k: usize) -> Result<SoftAssignment<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("Sinkhorn needs at least one iteration".into()));
    }
    let lk = log_kernel(cost, delta)?;
    let mut trace = run(&lk, k);
    let log_u = trace.alphas.pop().unwrap();
    let log_v = trace.betas.pop().unwrap();
    Ok(SoftAssignment {
        matrix: scaled(&lk, &log_u, &log_v),
        log_u,
        log_v,
        log_kernel: lk,
        delta,
        iterations: k,
    })
}

fn objective_mask<T: Scalar>(cost: &CostMatrix<T>) -> Array2<T> {
    // Finite non-dummy cells carry their cost; everything else contributes nothing.
    cost.dense(T::zero(), T::zero())
}

/// `Σ C_ij X̃_ij` over substitution, deletion and insertion cells.
pub fn soft_objective<T: Scalar>(cost: &CostMatrix<T>, delta: T, k: usize) -> Result<T> {
    let soft = sinkhorn(cost, delta, k)?;
    let c = objective_mask(cost);
    Ok(c.iter().zip(soft.matrix.iter()).map(|(&a, &b)| a * b).sum())
}

/// [`soft_objective`] together with its derivative with respect to every cell of the
/// dense cost matrix, differentiating through all `k` rounds. Forbidden and
/// dummy–dummy cells get zero derivative.
pub fn soft_objective_grad<T: Scalar>(cost: &CostMatrix<T>, delta: T, k: usize) -> Result<(T, Array2<T>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("Sinkhorn needs at least one iteration".into()));
    }
    let lk = log_kernel(cost, delta)?;
    let trace = run(&lk, k);
    let s = lk.nrows();
    let c = objective_mask(cost);
    let x = scaled(&lk, &trace.alphas[k - 1], &trace.betas[k - 1]);
    let value: T = c.iter().zip(x.iter()).map(|(&a, &b)| a * b).sum();

    // X_ij = exp(α_i + L_ij + β_j) with upstream gradient C_ij.
    let w = &c * &x;
    let mut d_lk = w.clone();
    let mut d_alpha = w.sum_axis(Axis(1));
    let mut d_beta = w.sum_axis(Axis(0));
    let zeros = Array1::zeros(s);
    for t in (0..k).rev() {
        let alpha = &trace.alphas[t];
        let beta_prev = if t == 0 { &zeros } else { &trace.betas[t - 1] };
        // β_t = −LSE_i(L_ij + α_t,i); its softmax weights are column-stochastic.
        let q = scaled(&lk, alpha, &trace.betas[t]);
        for ((i, j), &qij) in q.indexed_iter() {
            d_lk[[i, j]] -= qij * d_beta[j];
            d_alpha[i] -= qij * d_beta[j];
        }
        // α_t = −LSE_j(L_ij + β_{t−1,j}); softmax weights are row-stochastic.
        let p = scaled(&lk, alpha, beta_prev);
        let mut d_beta_prev = Array1::zeros(s);
        for ((i, j), &pij) in p.indexed_iter() {
            d_lk[[i, j]] -= pij * d_alpha[i];
            d_beta_prev[j] -= pij * d_alpha[i];
        }
        d_beta = d_beta_prev;
        d_alpha = Array1::zeros(s);
    }

    let mut grad = x;
    for ((i, j), g) in grad.indexed_iter_mut() {
        *g = match cost.kind(i, j) {
            CellKind::DummyDummy | CellKind::Forbidden => T::zero(),
            _ => *g - d_lk[[i, j]] / delta,
        };
    }
    Ok((value, grad))
}
