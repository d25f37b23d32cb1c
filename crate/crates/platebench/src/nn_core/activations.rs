//! Pointwise activation functions and their derivatives. Derivatives are
//! expressed in terms of the activation *output*, which is what the backward
//! passes have cached.

/// Exponential linear unit: `x` for `x > 0`, `e^x − 1` otherwise.
#[inline]
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// Derivative of ELU given the activation output `a = elu(x)`:
/// 1 on the identity branch, `e^x = a + 1` on the exponential branch.
#[inline]
pub fn elu_grad_from_output(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        a + 1.0
    }
}

pub fn elu_inplace(xs: &mut [f64]) {
    for x in xs {
        *x = elu(*x);
    }
}

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn sigmoid_grad_from_output(s: f64) -> f64 {
    s * (1.0 - s)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

#[inline]
pub fn tanh_grad_from_output(t: f64) -> f64 {
    1.0 - t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elu_branch_values() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(elu(1.0), 1.0);
        // e^{-1} - 1, evaluated by hand
        assert!((elu(-1.0) - (-0.632_120_558_828_557_7)).abs() < 1e-15);
    }

    #[test]
    fn elu_grad_consistent_at_zero() {
        // both branches give slope 1 at the origin
        assert_eq!(elu_grad_from_output(elu(0.0)), 1.0);
        assert!((elu_grad_from_output(elu(-1.0)) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_midpoint_and_symmetry() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(tanh(0.0), 0.0);
        for &x in &[-30.0, -3.0, -0.7, 0.3, 2.0, 25.0] {
            assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        assert!(sigmoid(-1000.0) >= 0.0);
        assert!(sigmoid(1000.0) <= 1.0);
        assert!(sigmoid(-745.0) > 0.0 || sigmoid(-745.0) == 0.0);
    }
}
