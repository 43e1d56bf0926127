/// Formats `v` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::significant;

    #[test]
    fn matches_printf_g() {
        assert_eq!(significant(0.0, 12), "0");
        assert_eq!(significant(1.0, 12), "1");
        assert_eq!(significant(0.5, 12), "0.5");
        assert_eq!(significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(significant(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(significant(123456.789, 12), "123456.789");
        assert_eq!(significant(1e-7, 12), "1e-7");
        assert_eq!(significant(1.5e15, 12), "1.5e15");
        assert_eq!(significant(999999999999.5, 12), "1e12");
        assert_eq!(significant(-2.25, 12), "-2.25");
        assert_eq!(significant(0.0001234, 12), "0.0001234");
    }

    #[test]
    fn parses_back_close() {
        for v in [std::f64::consts::PI, 1234.5678e-3, 7.0e20, 3.3e-9] {
            let back: f64 = significant(v, 12).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-11);
        }
    }
}
