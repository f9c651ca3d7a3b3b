//! Locale-independent number formatting for reports.

/// Formats `x` with six significant digits, keeping trailing zeros.
/// Magnitudes below `1e-4` or at least `1e6` use exponent notation
/// (`1.23457e+06`); non-finite values print as `nan`, `inf` or `-inf`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    // rounding to six digits decides the exponent
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form always has an 'e'");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    format!("{:.*}", decimals, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(sig6(1.7417967), "1.74180");
        assert_eq!(sig6(2.2582033), "2.25820");
        assert_eq!(sig6(0.95), "0.950000");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(-123.4567), "-123.457");
        assert_eq!(sig6(999999.6), "1.00000e+06");
        assert_eq!(sig6(123456.4), "123456");
        assert_eq!(sig6(0.0001), "0.000100000");
        assert_eq!(sig6(0.00009999996), "0.000100000");
        assert_eq!(sig6(1.5e-7), "1.50000e-07");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig6(f64::NAN), "nan");
    }

    #[test]
    fn round_trips_to_six_digits() {
        for &x in &[
            std::f64::consts::PI,
            -std::f64::consts::E,
            6.02214076e23,
            1.602176634e-19,
            42.0,
        ] {
            let back: f64 = sig6(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-6 * x.abs(), "{x}");
        }
    }
}
