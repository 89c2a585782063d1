//! Fixed-precision number formatting for machine-readable output.

use num_complex::Complex64;

/// Formats `x` with 17 significant digits, enough to round-trip any `f64`.
///
/// Magnitudes in `[1e-5, 1e17)` are written positionally, everything else
/// in scientific notation. Negative zero prints as zero.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.0000000000000000".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{x:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

/// `re + imi` or `re - |im|i`, both parts via [`sig17`].
pub fn complex17(z: Complex64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im.is_sign_negative() {
        format!("{} - {}i", sig17(z.re), sig17(-im))
    } else {
        format!("{} + {}i", sig17(z.re), sig17(im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_and_scientific() {
        assert_eq!(sig17(1.0), "1.0000000000000000");
        assert_eq!(sig17(-1.0), "-1.0000000000000000");
        assert_eq!(sig17(0.75390625), "0.75390625000000000");
        assert_eq!(sig17(123.5), "123.50000000000000");
        assert_eq!(sig17(-0.0), "0.0000000000000000");
        assert_eq!(sig17(1e-7), "9.9999999999999995e-8");
        assert_eq!(sig17(0.5f64.powi(23)), "1.1920928955078125e-7");
        assert_eq!(sig17(2.5e20), "2.5000000000000000e20");
    }

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-5, 9.999999999999999e16, 6.02214076e23, 5e-324] {
            assert_eq!(sig17(x).parse::<f64>().unwrap(), x, "{x}");
        }
    }

    #[test]
    fn complex_signs() {
        assert_eq!(complex17(Complex64::new(-1.0, 0.0)), "-1.0000000000000000 + 0.0000000000000000i");
        assert_eq!(complex17(Complex64::new(0.5, -0.25)), "0.50000000000000000 - 0.25000000000000000i");
        assert_eq!(complex17(Complex64::new(0.0, -0.0)), "0.0000000000000000 + 0.0000000000000000i");
    }
}
