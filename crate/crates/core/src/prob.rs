//! Extended-range nonnegative reals for chart values.
//!
//! Sentence probabilities under realistic grammars drop below `f64::MIN_POSITIVE`
//! after a few dozen words, so chart cells carry a normalized mantissa together
//! with an unbounded binary exponent. Addition aligns exponents before summing.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul};

/// A nonnegative real `mant * 2^exp` with `mant` in `[0.5, 1)`, or zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal {
    mant: f64,
    exp: i64,
}

// Terms more than this many binary orders of magnitude below the larger
// addend cannot change its mantissa.
const ALIGN_LIMIT: i64 = 64;

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal { mant: 0.0, exp: 0 };
    pub const ONE: ExtReal = ExtReal { mant: 0.5, exp: 1 };

    fn normalized(mant: f64, exp: i64) -> ExtReal {
        if mant == 0.0 {
            return ExtReal::ZERO;
        }
        debug_assert!(mant > 0.0 && mant.is_finite(), "bad mantissa {mant}");
        let bits = mant.to_bits();
        let field = ((bits >> 52) & 0x7ff) as i64;
        if field == 0 {
            // subnormal: lift into the normal range first
            return ExtReal::normalized(mant * 2f64.powi(64), exp - 64);
        }
        let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
        ExtReal { mant: m, exp: exp + field - 1022 }
    }

    pub fn from_f64(x: f64) -> ExtReal {
        assert!(x >= 0.0 && x.is_finite(), "ExtReal requires a finite nonnegative value, got {x}");
        ExtReal::normalized(x, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    /// Converts back to `f64`; values outside the double range saturate to 0 or infinity.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.exp > 1024 {
            return f64::INFINITY;
        }
        if self.exp < -1100 {
            return 0.0;
        }
        let half = self.exp / 2;
        self.mant * 2f64.powi(half as i32) * 2f64.powi((self.exp - half) as i32)
    }

    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    pub fn log2(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.log2() + self.exp as f64
    }

    pub fn log10(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.log10() + self.exp as f64 * std::f64::consts::LOG10_2
    }

    /// `self / other` as a plain double; intended for ratios of comparable magnitude.
    pub fn ratio(&self, other: &ExtReal) -> f64 {
        assert!(!other.is_zero(), "ratio with zero denominator");
        if self.is_zero() {
            return 0.0;
        }
        let d = self.exp - other.exp;
        let m = self.mant / other.mant;
        if d > 1100 {
            f64::INFINITY
        } else if d < -1100 {
            0.0
        } else {
            let half = d / 2;
            m * 2f64.powi(half as i32) * 2f64.powi((d - half) as i32)
        }
    }

    /// Scientific notation with `digits` digits after the decimal point, e.g. `5.809595e-33`.
    pub fn to_sci(&self, digits: usize) -> String {
        if self.is_zero() {
            return format!("{:.*e}", digits, 0.0);
        }
        let f = self.to_f64();
        if f.is_normal() {
            return format!("{:.*e}", digits, f);
        }
        let l = self.log10();
        let mut e10 = l.floor();
        let mut m = 10f64.powf(l - e10);
        let scale = 10f64.powi(digits as i32);
        m = (m * scale).round() / scale;
        if m >= 10.0 {
            m /= 10.0;
            e10 += 1.0;
        }
        format!("{:.*}e{}", digits, m, e10 as i64)
    }
}

impl Default for ExtReal {
    fn default() -> Self {
        ExtReal::ZERO
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: ExtReal) -> ExtReal {
        if self.is_zero() || rhs.is_zero() {
            return ExtReal::ZERO;
        }
        ExtReal::normalized(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Mul<f64> for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: f64) -> ExtReal {
        self * ExtReal::from_f64(rhs)
    }
}

impl Div for ExtReal {
    type Output = ExtReal;
    fn div(self, rhs: ExtReal) -> ExtReal {
        assert!(!rhs.is_zero(), "division by zero");
        if self.is_zero() {
            return ExtReal::ZERO;
        }
        ExtReal::normalized(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let d = big.exp - small.exp;
        if d > ALIGN_LIMIT {
            return big;
        }
        let shifted = small.mant * 2f64.powi(-(d as i32));
        ExtReal::normalized(big.mant + shifted, big.exp)
    }
}

impl AddAssign for ExtReal {
    fn add_assign(&mut self, rhs: ExtReal) {
        *self = *self + rhs;
    }
}

impl Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.fold(ExtReal::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &ExtReal) -> Option<Ordering> {
        Some(match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exp
                .cmp(&other.exp)
                .then(self.mant.partial_cmp(&other.mant).unwrap_or(Ordering::Equal)),
        })
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci(f.precision().unwrap_or(6)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn addends_at_the_alignment_limit_stay_negligible() {
        for d in [62, 63, 64, 65] {
            let big = ExtReal::from_f64(1.0);
            let small = ExtReal::from_f64(2f64.powi(-d));
            let s = big + small;
            assert!((s.to_f64() - 1.0).abs() <= 2.0 * f64::EPSILON, "gap {d}: {}", s.to_f64());
            assert_eq!((small + big).to_f64(), s.to_f64());
        }
    }

    #[test]
    fn round_trips_ordinary_values() {
        for x in [1.0, 0.5, 0.75, 1e-300, 3.25e10, 0.00179712] {
            assert_eq!(ExtReal::from_f64(x).to_f64(), x);
        }
        assert!(ExtReal::from_f64(0.0).is_zero());
    }

    #[test]
    fn survives_deep_underflow() {
        let tiny = ExtReal::from_f64(1e-200);
        let p = tiny * tiny * tiny;
        assert!(!p.is_zero());
        assert!((p.log10() + 600.0).abs() < 1e-9);
        assert_eq!(p.to_sci(3), "1.000e-600");
        assert_eq!(p.ratio(&(tiny * tiny * ExtReal::from_f64(2e-200))), 0.5);
    }

    #[test]
    fn subnormal_inputs_normalize() {
        let x = ExtReal::from_f64(f64::MIN_POSITIVE / 8.0);
        assert_eq!(x.to_f64(), f64::MIN_POSITIVE / 8.0);
    }

    #[test]
    fn scientific_format_matches_report_style() {
        assert_eq!(ExtReal::from_f64(5.809595e-33).to_sci(6), "5.809595e-33");
        assert_eq!(ExtReal::ZERO.to_sci(2), "0.00e0");
    }

    proptest! {
        #[test]
        fn arithmetic_agrees_with_f64(a in 1e-150f64..1e150, b in 1e-150f64..1e150) {
            let (x, y) = (ExtReal::from_f64(a), ExtReal::from_f64(b));
            let s = (x + y).to_f64();
            prop_assert!((s - (a + b)).abs() <= 1e-15 * (a + b));
            let p = (x * y).to_f64();
            prop_assert!((p - a * b).abs() <= 1e-15 * a * b);
            prop_assert_eq!(x < y, a < b);
            prop_assert!(((x / y).to_f64() - a / b).abs() <= 1e-15 * (a / b));
        }
    }
}
