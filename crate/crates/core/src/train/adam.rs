//! Adam optimizer with bias-corrected moments.

use crate::model::{Model, ModelGrads};
use crate::tensor::Element;

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Update one parameter array in place. `t` is the 1-based step count.
pub fn adam_update<E: Element>(
    params: &mut [E],
    grads: &[E],
    m: &mut [E],
    v: &mut [E],
    t: u64,
    lr: f64,
    cfg: &AdamParams,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), m.len());
    assert_eq!(params.len(), v.len());
    let b1 = E::from_f64(cfg.beta1);
    let b2 = E::from_f64(cfg.beta2);
    let one_minus_b1 = E::from_f64(1.0 - cfg.beta1);
    let one_minus_b2 = E::from_f64(1.0 - cfg.beta2);
    let corr1 = E::from_f64(1.0 - cfg.beta1.powi(t as i32));
    let corr2 = E::from_f64(1.0 - cfg.beta2.powi(t as i32));
    let eps = E::from_f64(cfg.eps);
    let lr_e = E::from_f64(lr);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + one_minus_b1 * g;
        v[i] = b2 * v[i] + one_minus_b2 * g * g;
        let m_hat = m[i] / corr1;
        let v_hat = v[i] / corr2;
        params[i] = params[i] - lr_e * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Optimizer state for a whole model: first/second moments per parameter
/// array, in `Model::visit_params` order.
#[derive(Debug, Clone, Default)]
pub struct AdamState<E: Element = f32> {
    t: u64,
    m: Vec<Vec<E>>,
    v: Vec<Vec<E>>,
}

impl<E: Element> AdamState<E> {
    pub fn new() -> Self {
        AdamState {
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, model: &mut Model<E>, grads: &ModelGrads<E>, lr: f64, cfg: &AdamParams) {
        self.t += 1;
        let grad_arrays: Vec<&[E]> = grads.flat();
        if self.m.is_empty() {
            for g in &grad_arrays {
                self.m.push(vec![E::ZERO; g.len()]);
                self.v.push(vec![E::ZERO; g.len()]);
            }
        }
        let t = self.t;
        let mut idx = 0;
        // The visit order is fixed, so zipping by index is sound.
        let m = &mut self.m;
        let v = &mut self.v;
        model.visit_params_mut(&mut |_, p| {
            adam_update(p, grad_arrays[idx], &mut m[idx], &mut v[idx], t, lr, cfg);
            idx += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_noop() {
        let cfg = AdamParams::default();
        let mut p = vec![1.5f64, -2.0];
        let mut m = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        for t in 1..=100 {
            adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, t, 0.001, &cfg);
        }
        assert_eq!(p, vec![1.5, -2.0]);
        assert_eq!(m, vec![0.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn first_step_matches_hand_evaluated_recurrence() {
        // g = 1 at t = 1: m_hat = v_hat = 1, update = -lr / (1 + eps).
        let cfg = AdamParams::default();
        let lr = 0.001;
        let mut p = vec![0.0f64];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        adam_update(&mut p, &[1.0], &mut m, &mut v, 1, lr, &cfg);
        let expected = -lr * 1.0 / (1.0 + cfg.eps);
        assert!((p[0] - expected).abs() < 1e-15, "{} vs {expected}", p[0]);
    }

    #[test]
    fn minimizes_quadratic() {
        let cfg = AdamParams::default();
        let mut p = vec![5.0f64];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        for t in 1..=2000 {
            let g = 2.0 * p[0];
            adam_update(&mut p, &[g], &mut m, &mut v, t, 0.1, &cfg);
            if p[0].abs() < 1e-3 {
                return;
            }
        }
        panic!("did not reach |x| < 1e-3 within 2000 steps, x = {}", p[0]);
    }
}
