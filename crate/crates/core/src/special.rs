//! Small special-function kernel: the exponential integral E1 and a
//! Taylor-guarded sinc.

use thiserror::Error;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Argument where the E1 evaluation switches from the power series to the
/// continued fraction. Both branches deliver near machine precision there,
/// which the cross-validation tests pin down.
pub const E1_BRANCH_POINT: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("exponential integral E1 requires x > 0, got {0}")]
    NonpositiveArgument(f64),
}

/// Exponential integral E1(x) = ∫_x^∞ e^{-t}/t dt for x > 0.
pub fn exp_integral_e1(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) {
        return Err(SpecialError::NonpositiveArgument(x));
    }
    if x <= E1_BRANCH_POINT {
        Ok(e1_series(x))
    } else {
        Ok(e1_continued_fraction(x))
    }
}

/// Convergent power series E1(x) = -γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k/(k k!).
/// Accurate for small x; alternating-term cancellation makes it useless much
/// beyond x ≈ 30, far above the branch point.
pub fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..=60 {
        term *= -x / k as f64;
        let contribution = -term / k as f64;
        sum += contribution;
        if contribution.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Modified-Lentz / backward-recurrence form of the continued fraction
/// E1(x) = e^{-x} / (x + 1/(1 + 1/(x + 2/(1 + ...)))), evaluated bottom-up
/// with a depth that grows as x shrinks toward the branch point.
pub fn e1_continued_fraction(x: f64) -> f64 {
    let depth = 20 + (80.0 / x) as usize;
    let mut t = 0.0;
    for k in (1..=depth).rev() {
        let k = k as f64;
        t = k / (1.0 + k / (x + t));
    }
    (-x).exp() / (x + t)
}

/// sin(x)/x with the removable singularity filled by its Taylor expansion.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn e1_at_one() {
        // Abramowitz & Stegun table 5.1.
        assert_relative_eq!(
            exp_integral_e1(1.0).unwrap(),
            0.219_383_934_395_520_27,
            max_relative = 1e-14
        );
    }

    #[test]
    fn e1_reference_points() {
        // (x, E1(x)) pairs from the A&S tables.
        let table = [
            (0.1, 1.822_923_958_119_39),
            (0.2, 1.222_650_544_183_89),
            (0.5, 0.559_773_594_776_160),
            (2.0, 0.048_900_510_708_061),
            (5.0, 1.148_295_591_e-3),
            (10.0, 4.156_968_929_e-6),
        ];
        for (x, want) in table {
            assert_relative_eq!(exp_integral_e1(x).unwrap(), want, max_relative = 1e-8);
        }
    }

    #[test]
    fn branches_agree_around_the_switch() {
        for x in [0.5, 0.8, 1.0, 1.5, 2.0] {
            let series = e1_series(x);
            let fraction = e1_continued_fraction(x);
            assert_relative_eq!(series, fraction, max_relative = 1e-12);
        }
    }

    #[test]
    fn e1_is_positive_and_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..400 {
            let x = i as f64 * 0.05;
            let v = exp_integral_e1(x).unwrap();
            assert!(v > 0.0, "E1({x}) = {v}");
            assert!(v < prev, "E1 must decrease, E1({x}) = {v} >= {prev}");
            prev = v;
        }
    }

    #[test]
    fn e1_large_argument_asymptote() {
        // E1(x) ~ e^{-x}/x (1 - 1/x + 2/x² - ...) for large x.
        let x = 50.0;
        let v = exp_integral_e1(x).unwrap();
        let asym = (-x).exp() / x * (1.0 - 1.0 / x + 2.0 / (x * x));
        assert_relative_eq!(v, asym, max_relative = 1e-3);
    }

    #[test]
    fn e1_rejects_nonpositive() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(exp_integral_e1(f64::NAN).is_err());
    }

    #[test]
    fn sinc_matches_ratio_form() {
        for x in [1e-7f64, 1e-5, 1e-4, 0.1, 1.0, 3.0] {
            let direct = if x == 0.0 { 1.0 } else { x.sin() / x };
            assert_relative_eq!(sinc(x), direct, max_relative = 1e-12);
            assert_relative_eq!(sinc(-x), sinc(x), max_relative = 1e-15);
        }
        assert_eq!(sinc(0.0), 1.0);
    }
}
