//! Bit-exact float formatting for the CSV outputs.
//!
//! Values are written like C's `printf("%.17g", v)`: 17 significant
//! digits, fixed or scientific notation per the %g exponent rule, trailing
//! zeros stripped. 17 significant digits round-trip every f64 exactly, so
//! re-parsing a CSV reproduces the original bits.

/// Format `v` as %.17g.
pub fn g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        if v.is_nan() {
            return "nan".into();
        }
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // correctly rounded 17-significant-digit decomposition
    let rounded = format!("{:.16e}", v);
    let (mantissa, exp) = rounded.split_once('e').expect("exponential form");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mantissa.starts_with('-');
    let digits: Vec<u8> =
        mantissa.bytes().filter(|b| b.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 17);

    let mut out = String::with_capacity(26);
    if neg {
        out.push('-');
    }
    if (-5..17).contains(&exp) {
        if exp >= 0 {
            let point = exp as usize + 1;
            for &d in &digits[..point] {
                out.push(d as char);
            }
            let frac = trim_zeros(&digits[point..]);
            if !frac.is_empty() {
                out.push('.');
                out.push_str(std::str::from_utf8(frac).unwrap());
            }
        } else {
            out.push_str("0.");
            for _ in 0..(-exp - 1) {
                out.push('0');
            }
            out.push_str(std::str::from_utf8(trim_zeros(&digits)).unwrap());
        }
    } else {
        out.push(digits[0] as char);
        let frac = trim_zeros(&digits[1..]);
        if !frac.is_empty() {
            out.push('.');
            out.push_str(std::str::from_utf8(frac).unwrap());
        }
        out.push('e');
        out.push(if exp < 0 { '-' } else { '+' });
        let abs = exp.abs();
        if abs < 10 {
            out.push('0');
        }
        out.push_str(&abs.to_string());
    }
    out
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let mut end = digits.len();
    while end > 0 && digits[end - 1] == b'0' {
        end -= 1;
    }
    &digits[..end]
}

/// Optional value for a CSV cell; missing encodes as the empty string.
pub fn g17_opt(v: Option<f64>) -> String {
    v.map(g17).unwrap_or_default()
}

pub fn parse_opt(cell: &str) -> Option<f64> {
    if cell.is_empty() {
        None
    } else {
        cell.parse().ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_c_printf_17g() {
        // hand-checked against glibc printf("%.17g", ...)
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(-0.0), "-0");
        assert_eq!(g17(1.0), "1");
        assert_eq!(g17(-2.5), "-2.5");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(123456.0), "123456");
        assert_eq!(g17(1e16), "10000000000000000");
        assert_eq!(g17(1e17), "1e+17");
        assert_eq!(g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(g17(0.0001), "0.0001");
        assert_eq!(g17(-3.5e-5), "-3.4999999999999997e-05");
        assert_eq!(g17(6.02214076e23), "6.0221407599999999e+23");
        assert_eq!(g17(std::f64::consts::PI), "3.1415926535897931");
        assert_eq!(g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(g17(9.9999999999999999e22), "9.9999999999999992e+22");
    }

    #[test]
    fn round_trips_every_bit_pattern() {
        let values = [
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            f64::MAX,
            -f64::MIN_POSITIVE * 3.0,
            2.2250738585072014e-308,
            9.9999999999999999e22,
            -0.0,
            42.125,
        ];
        for &v in &values {
            let parsed: f64 = g17(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v:e} -> {}", g17(v));
        }
    }

    #[test]
    fn subnormals_and_carries() {
        // rounding carry promotes the exponent branch consistently
        let v = 9.999_999_999_999_999_9e-1;
        let s = g17(v);
        let parsed: f64 = s.parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());

        let tiny = f64::from_bits(1); // smallest subnormal
        let parsed: f64 = g17(tiny).parse().unwrap();
        assert_eq!(parsed.to_bits(), tiny.to_bits());
    }
}
