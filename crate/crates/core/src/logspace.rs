//! Log-domain helpers. Natural logarithms throughout; `-inf` is zero mass.

pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(exp(lo - hi))
}

/// `ln Σ e^{x_i}`, max-shifted. Empty input or all `-inf` yields `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(LOG_ZERO, f64::max);
    if max == LOG_ZERO {
        return LOG_ZERO;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + ln(sum)
}
