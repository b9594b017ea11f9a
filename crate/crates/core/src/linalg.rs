//! Small dense helpers shared by the numerical modules.

use ndarray::{Array2, ArrayView1};

#[inline]
pub(crate) fn dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.dot(&b)
}

#[inline]
pub(crate) fn norm(a: ArrayView1<'_, f64>) -> f64 {
    libm::sqrt(a.dot(&a))
}

pub(crate) fn squared_sum(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub(crate) fn all_finite(m: &Array2<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
