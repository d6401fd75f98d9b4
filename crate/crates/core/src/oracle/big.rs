use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

/// Precision plus the constant cache needed by transcendental functions.
pub(crate) struct BigCtx {
    pub prec: usize,
    cc: Consts,
}

impl BigCtx {
    pub fn new(prec: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::Evaluation(format!("multiprecision constants: {e:?}")))?;
        Ok(BigCtx { prec, cc })
    }

    pub fn real(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec)
    }

    pub fn uint(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, self.prec)
    }

    pub fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(self.prec, RM, &mut self.cc)
    }

    pub fn cos(&mut self, x: &BigFloat) -> BigFloat {
        x.cos(self.prec, RM, &mut self.cc)
    }

    pub fn sin(&mut self, x: &BigFloat) -> BigFloat {
        x.sin(self.prec, RM, &mut self.cc)
    }

    pub fn sqrt(&self, x: &BigFloat) -> BigFloat {
        x.sqrt(self.prec, RM)
    }

    pub fn cexp(&mut self, z: &BigComplex) -> BigComplex {
        let r = self.exp(&z.re);
        if z.im.is_zero() {
            return BigComplex { re: r, im: BigFloat::from_u64(0, self.prec) };
        }
        let (c, s) = (self.cos(&z.im), self.sin(&z.im));
        BigComplex { re: r.mul(&c, self.prec, RM), im: r.mul(&s, self.prec, RM) }
    }
}

/// `top/2^64 · 2^e` from the raw mantissa words.
fn raw_parts(x: &BigFloat) -> Option<(f64, i32, bool)> {
    let (m, _, sign, e, _) = x.as_raw_parts()?;
    if x.is_zero() || m.is_empty() {
        return None;
    }
    let top = m[m.len() - 1] as f64;
    let next = if m.len() > 1 { m[m.len() - 2] as f64 } else { 0.0 };
    let mant = top / 18446744073709551616.0 + next / 3.402823669209385e38;
    Some((mant, e, sign == Sign::Neg))
}

pub(crate) fn big_to_f64(x: &BigFloat) -> f64 {
    match raw_parts(x) {
        None => 0.0,
        Some((mant, e, neg)) => {
            let v = if e > 1024 {
                f64::INFINITY
            } else if e < -1100 {
                0.0
            } else {
                // split to stay clear of intermediate overflow near the limits
                mant * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
            };
            if neg {
                -v
            } else {
                v
            }
        }
    }
}

pub(crate) fn big_log2_abs(x: &BigFloat) -> f64 {
    match raw_parts(x) {
        None => f64::NEG_INFINITY,
        Some((mant, e, _)) => e as f64 + mant.log2(),
    }
}

#[derive(Clone, Debug)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    pub fn zero(prec: usize) -> Self {
        BigComplex { re: BigFloat::from_u64(0, prec), im: BigFloat::from_u64(0, prec) }
    }

    pub fn one(prec: usize) -> Self {
        BigComplex { re: BigFloat::from_u64(1, prec), im: BigFloat::from_u64(0, prec) }
    }

    pub fn from_c64(z: Complex64, prec: usize) -> Self {
        BigComplex { re: BigFloat::from_f64(z.re, prec), im: BigFloat::from_f64(z.im, prec) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &BigComplex, prec: usize) -> BigComplex {
        BigComplex { re: self.re.add(&o.re, prec, RM), im: self.im.add(&o.im, prec, RM) }
    }

    pub fn sub(&self, o: &BigComplex, prec: usize) -> BigComplex {
        BigComplex { re: self.re.sub(&o.re, prec, RM), im: self.im.sub(&o.im, prec, RM) }
    }

    pub fn mul(&self, o: &BigComplex, prec: usize) -> BigComplex {
        let rr = self.re.mul(&o.re, prec, RM);
        let ii = self.im.mul(&o.im, prec, RM);
        let ri = self.re.mul(&o.im, prec, RM);
        let ir = self.im.mul(&o.re, prec, RM);
        BigComplex { re: rr.sub(&ii, prec, RM), im: ri.add(&ir, prec, RM) }
    }

    pub fn scale(&self, x: &BigFloat, prec: usize) -> BigComplex {
        BigComplex { re: self.re.mul(x, prec, RM), im: self.im.mul(x, prec, RM) }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> BigComplex {
        BigComplex { re: self.im.neg(), im: self.re.clone() }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(big_to_f64(&self.re), big_to_f64(&self.im))
    }

    /// `log2 max(|re|, |im|)`, within half a bit of `log2|z|`.
    pub fn log2_scale(&self) -> f64 {
        big_log2_abs(&self.re).max(big_log2_abs(&self.im))
    }
}
