use nalgebra::DMatrix;

fn norm_1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The scaling exponent `s` is the smallest with `‖A‖₁ / 2ˢ ≤ 1/2`; the
/// series is summed until the next term's 1-norm drops below `1e-20` of the
/// partial sum, which for a scaled norm of 1/2 bounds the truncation error
/// by twice the last dropped term.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = norm_1(a);
    let mut s = 0u32;
    while norm / 2f64.powi(s as i32) > 0.5 {
        s += 1;
    }
    let b = a / 2f64.powi(s as i32);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=60 {
        term = &term * &b / k as f64;
        sum += &term;
        if norm_1(&term) <= 1e-20 * norm_1(&sum).max(1.0) {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&DMatrix::zeros(3, 3)), DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_and_nilpotent() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 0.5]));
        let e = expm(&d);
        assert!((e[(0, 0)] - (-2.0f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - 0.5f64.exp()).abs() < 1e-14);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = expm(&n);
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]));
    }

    #[test]
    fn two_state_closed_form() {
        // exp(t[[-p, p],[q, -q]]) has closed form via the stationary law.
        let (p, q, t) = (3.0f64, 7.0f64, 2.5f64);
        let m = DMatrix::from_row_slice(2, 2, &[-p * t, p * t, q * t, -q * t]);
        let e = expm(&m);
        let r = p + q;
        let decay = (-r * t).exp();
        let p00 = q / r + p / r * decay;
        assert!((e[(0, 0)] - p00).abs() < 1e-13);
        assert!((e[(0, 1)] - (1.0 - p00)).abs() < 1e-13);
    }
}
