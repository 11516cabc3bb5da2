//! Inner loops shared by the layers.
//!
//! Reductions use a fixed 8-lane accumulator tree so results are independent
//! of thread schedule and still auto-vectorize under strict FP semantics.

use crate::tensor::Element;

const LANES: usize = 32;

/// y += a * x over equal-length slices.
#[inline]
pub fn axpy<E: Element>(y: &mut [E], a: E, x: &[E]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * *xi;
    }
}

/// Dot product with a fixed-shape reduction tree.
#[inline]
pub fn dot<E: Element>(a: &[E], b: &[E]) -> E {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [E::ZERO; LANES];
    let head = a.len() - a.len() % LANES;
    for (ca, cb) in a[..head]
        .chunks_exact(LANES)
        .zip(b[..head].chunks_exact(LANES))
    {
        for i in 0..LANES {
            acc[i] += ca[i] * cb[i];
        }
    }
    let mut tail = E::ZERO;
    for (x, y) in a[head..].iter().zip(b[head..].iter()) {
        tail += *x * *y;
    }
    tree_sum(&acc) + tail
}

/// Sum of a slice, same fixed tree as `dot`.
#[inline]
pub fn sum<E: Element>(a: &[E]) -> E {
    let mut acc = [E::ZERO; LANES];
    let head = a.len() - a.len() % LANES;
    for chunk in a[..head].chunks_exact(LANES) {
        for i in 0..LANES {
            acc[i] += chunk[i];
        }
    }
    let mut tail = E::ZERO;
    for x in &a[head..] {
        tail += *x;
    }
    tree_sum(&acc) + tail
}

/// Sum of squared deviations from `mean`, fixed tree.
#[inline]
pub fn sum_sq_dev<E: Element>(a: &[E], mean: E) -> E {
    let mut acc = [E::ZERO; LANES];
    let head = a.len() - a.len() % LANES;
    for chunk in a[..head].chunks_exact(LANES) {
        for i in 0..LANES {
            let d = chunk[i] - mean;
            acc[i] += d * d;
        }
    }
    let mut tail = E::ZERO;
    for x in &a[head..] {
        let d = *x - mean;
        tail += d * d;
    }
    tree_sum(&acc) + tail
}

#[inline]
fn tree_sum<E: Element>(acc: &[E; LANES]) -> E {
    let mut quads = [E::ZERO; LANES / 4];
    for (i, q) in quads.iter_mut().enumerate() {
        *q = (acc[4 * i] + acc[4 * i + 1]) + (acc[4 * i + 2] + acc[4 * i + 3]);
    }
    let mut total = E::ZERO;
    for q in quads {
        total += q;
    }
    total
}
