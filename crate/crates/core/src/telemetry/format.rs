/// Format `x` with `digits` significant digits, `%g`-style: fixed notation for decimal
/// exponents in `[-4, digits)`, scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Six significant digits, the precision of every real in the metrics file.
pub fn sig6(x: f64) -> String {
    format_sig(x, 6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format() {
        assert_eq!(sig6(20.0 / 3.0), "6.66667");
        assert_eq!(sig6(5.0), "5");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(-0.000123456789), "-0.000123457");
        assert_eq!(sig6(0.0000123456), "1.23456e-5");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(266.6666666), "266.667");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(40.0), "40");
    }

    proptest::proptest! {
        #[test]
        fn keeps_six_significant_digits(x in -1e9f64..1e9) {
            let s = sig6(x);
            let back: f64 = s.parse().unwrap();
            proptest::prop_assert!((back - x).abs() <= 5e-6 * x.abs() + 1e-300);
        }
    }
}
