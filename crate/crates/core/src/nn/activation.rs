//! Elementwise activations.

use crate::tensor::{Element, Tensor};

/// max(0, x).
pub fn relu<E: Element>(x: &Tensor<E>) -> Tensor<E> {
    x.map(|v| v.maximum(E::ZERO))
}

/// Subgradient at exactly 0 is defined as 0.
pub fn relu_backward<E: Element>(x: &Tensor<E>, grad_out: &Tensor<E>) -> Tensor<E> {
    assert_eq!(x.shape(), grad_out.shape());
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&xv, &g)| if xv > E::ZERO { g } else { E::ZERO })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid_scalar<E: Element>(z: E) -> E {
    if z >= E::ZERO {
        E::ONE / (E::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (E::ONE + e)
    }
}

pub fn sigmoid<E: Element>(x: &Tensor<E>) -> Tensor<E> {
    x.map(sigmoid_scalar)
}
