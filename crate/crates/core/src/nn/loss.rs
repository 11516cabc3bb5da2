//! Sigmoid cross-entropy on logits.

use super::activation::sigmoid_scalar;
use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Mean sigmoid cross-entropy over all entries, in the fused stable form
/// `max(z, 0) - z*y + ln(1 + exp(-|z|))`, plus its gradient with respect to
/// the logits, `(sigmoid(z) - y) / count`.
pub fn bce_with_logits<E: Element>(
    logits: &Tensor<E>,
    targets: &Tensor<E>,
) -> Result<(E, Tensor<E>)> {
    if logits.shape() != targets.shape() {
        return Err(Error::Shape(format!(
            "bce shapes differ: {:?} vs {:?}",
            logits.shape(),
            targets.shape()
        )));
    }
    let count = E::from_f64(logits.len() as f64);
    let mut total = E::ZERO;
    let mut grad = Tensor::zeros(logits.shape());
    for ((g, &z), &y) in grad
        .data_mut()
        .iter_mut()
        .zip(logits.data())
        .zip(targets.data())
    {
        total += z.maximum(E::ZERO) - z * y + (-z.abs()).exp().ln_1p();
        *g = (sigmoid_scalar(z) - y) / count;
    }
    Ok((total / count, grad))
}
