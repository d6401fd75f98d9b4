use std::ops::{Add, Mul};

use num_complex::Complex64;

/// Complex number stored as `(ln|z|, arg z)`.
///
/// Products never overflow; sums rescale by the larger magnitude before
/// adding, so values like `1.6^{400}` stay representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { ln_abs: f64::NEG_INFINITY, arg: 0.0 };
    pub const ONE: LogComplex = LogComplex { ln_abs: 0.0, arg: 0.0 };

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        LogComplex { ln_abs: z.norm().ln(), arg: z.arg() }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `exp(z)` without evaluating it.
    pub fn exp_of(z: Complex64) -> Self {
        LogComplex { ln_abs: z.re, arg: z.im }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::default();
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn log2_abs(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_2
    }

    pub fn powi(self, k: i32) -> LogComplex {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        LogComplex { ln_abs: self.ln_abs * k as f64, arg: self.arg * k as f64 }
    }

    /// `ln Σ|z_k|` from individual `ln|z_k|`.
    pub fn ln_sum_abs<I: IntoIterator<Item = f64>>(ln_abs: I) -> f64 {
        ln_abs.into_iter().fold(Self::ZERO, |acc, l| acc + LogComplex { ln_abs: l, arg: 0.0 }).ln_abs
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, o: LogComplex) -> LogComplex {
        if self.is_zero() || o.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex { ln_abs: self.ln_abs + o.ln_abs, arg: self.arg + o.arg }
    }
}

impl Add for LogComplex {
    type Output = LogComplex;

    fn add(self, o: LogComplex) -> LogComplex {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= o.ln_abs { (self, o) } else { (o, self) };
        let rel = Complex64::from_polar((small.ln_abs - big.ln_abs).exp(), small.arg - big.arg);
        let t = Complex64::new(1.0, 0.0) + rel;
        if t.re == 0.0 && t.im == 0.0 {
            return LogComplex::ZERO;
        }
        LogComplex { ln_abs: big.ln_abs + t.norm().ln(), arg: big.arg + t.arg() }
    }
}

/// `ln(n! / ∏ k_i!)`.
pub fn ln_multinomial(parts: &[u32]) -> f64 {
    let n: u32 = parts.iter().sum();
    ln_factorial(n) - parts.iter().map(|&k| ln_factorial(k)).sum::<f64>()
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn huge_magnitudes_stay_finite() {
        let x = LogComplex::from_real(1.6).powi(400);
        assert!((x.ln_abs - 400.0 * 1.6f64.ln()).abs() < 1e-10);
        let y = x + x;
        assert!((y.ln_abs - x.ln_abs - 2f64.ln()).abs() < 1e-12);
        assert!((x + x * LogComplex::from_real(-1.0)).ln_abs < x.ln_abs - 30.0);
    }

    #[test]
    fn multinomial_small_case() {
        assert!((ln_multinomial(&[2, 1, 1]) - 12f64.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip_and_arithmetic(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64, d in -1e3..1e3f64) {
            let (x, y) = (Complex64::new(a, b), Complex64::new(c, d));
            let (lx, ly) = (LogComplex::from_complex(x), LogComplex::from_complex(y));
            let scale = 1.0 + x.norm() + y.norm();
            prop_assert!((lx.to_complex() - x).norm() < 1e-12 * scale);
            prop_assert!(((lx + ly).to_complex() - (x + y)).norm() < 1e-12 * scale);
            prop_assert!(((lx * ly).to_complex() - x * y).norm() < 1e-12 * scale * scale);
        }
    }
}
