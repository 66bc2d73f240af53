// f64 transcendental functions are not in `core`; route them through libm so
// test builds (which link std) and no_std builds produce identical bits.
pub(crate) use libm::{cos, exp, hypot, lgamma, log as ln, sin, sqrt};

/// ln Γ(x) for x > 0.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    lgamma(x)
}

/// ln n!
pub(crate) fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        lgamma(n as f64 + 1.0)
    }
}

/// ln G(a+1) = ln Π_{s=0}^{a-1} s!  (Barnes G).
pub(crate) fn ln_superfactorial(a: usize) -> f64 {
    (0..a).map(ln_factorial).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials_match_integer_products() {
        let mut f = 1.0f64;
        for n in 1..=20usize {
            f *= n as f64;
            assert!((ln_factorial(n) - f.ln()).abs() < 1e-12 * f.ln().max(1.0));
        }
        // G(5) = 0!1!2!3! = 12
        assert!((ln_superfactorial(4) - 12f64.ln()).abs() < 1e-14);
        assert_eq!(ln_superfactorial(0), 0.0);
        assert_eq!(ln_superfactorial(2), 0.0);
    }
}
