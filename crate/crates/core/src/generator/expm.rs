//! Matrix exponential by scaling and squaring of a truncated Taylor series.

use nalgebra::SMatrix;

/// Scaled matrices have 1-norm at most this.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 40;

fn norm1<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)`.
///
/// `a` is scaled by `2^-s` so that its 1-norm is at most 1/2; the series is
/// summed until the next term drops below machine precision, which bounds
/// the truncation error of the scaled exponential by about `1e-17`, then
/// squared `s` times.
pub fn expm<const N: usize>(a: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let norm = norm1(a);
    assert!(norm.is_finite(), "matrix exponential of a non-finite matrix");
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let b = a * 2f64.powi(-squarings);

    let mut sum = SMatrix::<f64, N, N>::identity();
    let mut term = SMatrix::<f64, N, N>::identity();
    for k in 1..=MAX_TERMS {
        term = term * b / k as f64;
        sum += term;
        if norm1(&term) <= f64::EPSILON * 1e-2 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}
