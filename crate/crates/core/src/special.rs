//! Normal and chi-square tail functions.

use crate::error::CalibrationError;

const MAX_ITER: usize = 100_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `P[N(0,1) > x]`.
pub fn normal_upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x)/Γ(a)` for `a > 0`, `x ≥ 0`.
///
/// Series for `x < a + 1`, Lentz continued fraction otherwise.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let log_prefactor = a * x.ln() - x - libm::lgamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        1.0 - sum * log_prefactor.exp()
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        log_prefactor.exp() * h
    }
}

/// `P[χ²_dof > t]`.
pub fn chi_square_upper_tail(dof: usize, t: f64) -> f64 {
    regularized_gamma_q(dof as f64 / 2.0, t / 2.0)
}

/// Smallest `t` with `P[χ²_dof > t] ≤ alpha`, by bisection to absolute tolerance `1e-10`.
pub fn chi_square_quantile(dof: usize, alpha: f64) -> Result<f64, CalibrationError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CalibrationError::Probability(alpha));
    }
    if dof == 0 {
        return Err(CalibrationError::invalid(
            "chi-square quantile",
            "degrees of freedom must be positive",
        ));
    }
    let mut lo = 0.0_f64;
    let mut hi = (dof as f64).max(1.0);
    while chi_square_upper_tail(dof, hi) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi_square_upper_tail(dof, mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
