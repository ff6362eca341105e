//! Small shared vector helpers used by the iterative methods.

/// Euclidean inner product.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s * x` componentwise.
pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// `y *= s` componentwise.
pub(crate) fn scale(s: f64, y: &mut [f64]) {
    for yi in y.iter_mut() {
        *yi *= s;
    }
}
