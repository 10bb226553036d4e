use super::params::{CostModelParams, Gradient};
use crate::scalar::Scalar;

/// First and second moment estimates, one slot per flattened parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T = f64> {
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    m: Vec<T>,
    v: Vec<T>,
    steps: i32,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState {
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            steps: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(params: &mut CostModelParams<T>, grad: &Gradient<T>, state: &mut AdamState<T>, lr: T) {
    let g = grad.flatten();
    let mut theta = params.flatten();
    debug_assert_eq!(g.len(), state.m.len());
    state.steps += 1;
    let c1 = T::one() - state.beta1.powi(state.steps);
    let c2 = T::one() - state.beta2.powi(state.steps);
    for i in 0..theta.len() {
        state.m[i] = state.beta1 * state.m[i] + (T::one() - state.beta1) * g[i];
        state.v[i] = state.beta2 * state.v[i] + (T::one() - state.beta2) * g[i] * g[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    params.assign_flat(&theta).expect("gradient and parameters share a layout");
}

/// Step decay: `initial · factor^⌊epoch / every⌋` for a 0-based epoch index.
pub fn step_decay(initial: f64, epoch: usize, factor: f64, every: usize) -> f64 {
    initial * factor.powi((epoch / every.max(1)) as i32)
}
