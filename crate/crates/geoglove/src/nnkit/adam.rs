//! Adam optimizer with bias correction.

use super::tensor::Tensor;

pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

/// First/second moment estimates plus the step counter, aligned with the
/// parameter list it was created for.
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        Self {
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update over every parameter tensor, in place.
pub fn adam_step(
    params: &mut [Tensor],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    assert_eq!(params.len(), grads.len(), "params/grads length");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (k, x) in p.data_mut().iter_mut().enumerate() {
            let g = grads[i][k];
            m[k] = beta1 * m[k] + (1.0 - beta1) * g;
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            *x -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = vec![Tensor::row(vec![1.0, -2.0, 3.0]).unwrap()];
        let grads = vec![vec![0.0; 3]];
        let mut state = AdamState::new(&params);
        adam_step(
            &mut params,
            &grads,
            &mut state,
            DEFAULT_LR,
            DEFAULT_BETA1,
            DEFAULT_BETA2,
            DEFAULT_EPS,
        );
        assert_eq!(params[0].data(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // With bias correction, m_hat = g and v_hat = g^2 at t = 1, so the
        // update is lr * g / (|g| + eps) which is lr * sign(g) up to eps.
        let mut params = vec![Tensor::scalar(1.0).unwrap()];
        let grads = vec![vec![3.0]];
        let mut state = AdamState::new(&params);
        adam_step(
            &mut params,
            &grads,
            &mut state,
            DEFAULT_LR,
            DEFAULT_BETA1,
            DEFAULT_BETA2,
            DEFAULT_EPS,
        );
        assert!((params[0].data()[0] - (1.0 - DEFAULT_LR)).abs() < 1e-9);
    }

    #[test]
    fn identical_runs_identical_trajectories() {
        let run = || {
            let mut params = vec![Tensor::row(vec![0.5, -0.5]).unwrap()];
            let mut state = AdamState::new(&params);
            for i in 0..50 {
                let g = vec![vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]];
                adam_step(
                    &mut params,
                    &g,
                    &mut state,
                    DEFAULT_LR,
                    DEFAULT_BETA1,
                    DEFAULT_BETA2,
                    DEFAULT_EPS,
                );
            }
            params[0].data().to_vec()
        };
        assert_eq!(run(), run());
    }
}
