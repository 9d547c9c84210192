//! Fixed-precision number rendering for command output.

/// Significant digits printed for probabilities and log-probabilities.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`-style rendering: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

/// Shortest string that parses back to exactly `x`, in scientific notation
/// when plain decimal would be long.
pub fn exact(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_like_printf_g() {
        assert_eq!(sig(0.125), "0.125");
        assert_eq!(sig((0.125f64).ln()), "-2.07944154168");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(-0.0), "0");
        assert_eq!(sig(1e-12), "1e-12");
        assert_eq!(sig(123456789012345.0), "1.23456789012e14");
        assert_eq!(sig(0.000123), "0.000123");
        assert_eq!(sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig(5.0 / 128.0), "0.0390625");
    }

    #[test]
    fn exact_round_trips() {
        for x in [
            0.8,
            5.551115123125783e-17,
            1e-12,
            0.1 + 0.2,
            3e20,
            -2.5,
            0.0,
        ] {
            let s = exact(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(exact(5.551115123125783e-17), "5.551115123125783e-17");
        assert_eq!(exact(0.8), "0.8");
    }
}
