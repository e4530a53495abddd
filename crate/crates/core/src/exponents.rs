//! Dimension-dependent conformal exponents and sphere areas.

use std::f64::consts::PI;

/// Conformal Laplacian coefficient 4(n-1)/(n-2).
///
/// Panics for n < 3; callers gate with `CoreError::DimensionTooLow`.
pub fn a_n(n: usize) -> f64 {
    assert!(n >= 3, "conformal coefficient a_n needs n >= 3");
    4.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Critical interior exponent 2n/(n-2).
pub fn p_n(n: usize) -> f64 {
    assert!(n >= 3, "critical exponent p_n needs n >= 3");
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// Critical boundary (trace) exponent 2(n-1)/(n-2).
pub fn p_boundary(n: usize) -> f64 {
    assert!(n >= 3, "boundary exponent needs n >= 3");
    2.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Gamma(two_x / 2) for positive integer `two_x` (integer and half-integer
/// arguments only, which is all the sphere-area formula needs).
fn gamma_half(two_x: usize) -> f64 {
    assert!(two_x >= 1);
    if two_x % 2 == 0 {
        let mut g = 1.0;
        for k in 2..two_x / 2 {
            g *= k as f64;
        }
        g
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while 2.0 * x + 1.0 < two_x as f64 + 0.1 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Area of the unit m-sphere S^m in R^{m+1}.
pub fn unit_sphere_area(m: usize) -> f64 {
    2.0 * PI.powf((m as f64 + 1.0) / 2.0) / gamma_half(m + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        // S^4: 8 pi^2 / 3.
        assert!((unit_sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exponent_values() {
        assert!((a_n(3) - 8.0).abs() < 1e-15);
        assert!((p_n(3) - 6.0).abs() < 1e-15);
        assert!((p_boundary(3) - 4.0).abs() < 1e-15);
        assert!((a_n(4) - 6.0).abs() < 1e-15);
        assert!((p_n(4) - 4.0).abs() < 1e-15);
        assert!((p_boundary(4) - 3.0).abs() < 1e-15);
    }
}
