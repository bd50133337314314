//! Shared numeric kernels.
//!
//! The nearest-neighbor scan is memory-bandwidth bound, so embedding rows are
//! stored as `f32` and scored with a fixed 8-lane accumulator. Everything that
//! feeds correlation or clustering math accumulates in `f64`.

/// Dot product of two `f32` slices with a fixed 8-lane accumulator.
///
/// The lane count is part of the output contract: results are bit-identical
/// across runs and thread counts.
#[inline]
pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f32; 8];
    let chunks = a.len() / 8 * 8;
    for (ca, cb) in a[..chunks].chunks_exact(8).zip(b[..chunks].chunks_exact(8)) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut tail = 0f32;
    for i in chunks..a.len() {
        tail += a[i] * b[i];
    }
    acc.iter().sum::<f32>() + tail
}

/// Dot product in `f64` of two `f32` slices.
#[inline]
pub(crate) fn dot_f32_as_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// L2 norm in `f64` of an `f32` slice.
#[inline]
pub(crate) fn norm_f32_as_f64(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Cosine similarity in `f64` between two `f32` rows, clamped to [-1, 1].
///
/// Zero-norm inputs yield 0.
pub(crate) fn cosine_f32(a: &[f32], b: &[f32]) -> f64 {
    let na = norm_f32_as_f64(a);
    let nb = norm_f32_as_f64(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot_f32_as_f64(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n, not n-1).
pub(crate) fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub(crate) fn population_std(xs: &[f64]) -> f64 {
    population_variance(xs).sqrt()
}
