use std::time::Instant;

use astro_float::BigFloat;
use num_complex::Complex64;
use serde::Serialize;

use super::{NaturalPolynomial, ProperSet};
use crate::error::{Error, Result};
use crate::oracle::big::{BigComplex, BigCtx, RM};
use crate::oracle::logcomplex::ln_multinomial;
use crate::oracle::{composition_count, CompositionCursor};

pub const MAX_SET_SIZE: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct MultinomialSum {
    pub n: u32,
    pub value: Complex64,
    pub compositions: f64,
    pub precision_bits: usize,
    /// `log2` of the largest term magnitude minus `log2 |value|`.
    pub cancellation_bits: f64,
    pub wall_time_ms: f64,
}

/// A polynomial with its coefficients lifted to multiprecision.
struct BigPoly {
    terms: Vec<(Vec<usize>, BigComplex)>,
}

impl BigPoly {
    fn new(p: &NaturalPolynomial, prec: usize) -> Self {
        BigPoly { terms: p.terms().map(|(w, c)| (w.to_vec(), BigComplex::from_c64(c, prec))).collect() }
    }

    /// `n^shift · P(n_a / n)`, with `inv_pow[k] = n^{-k}`.
    fn eval_scaled(&self, counts: &[u32], n: u32, inv_pow: &[BigFloat], shift: usize, prec: usize) -> BigComplex {
        let mut acc = BigComplex::zero(prec);
        for (w, c) in &self.terms {
            let num: u128 = w.iter().map(|&a| counts[a] as u128).product();
            if num == 0 {
                continue;
            }
            let k = w.len();
            let factor = if shift >= k {
                BigFloat::from_u128(num * (n as u128).pow((shift - k) as u32), prec)
            } else {
                BigFloat::from_u128(num, prec).mul(&inv_pow[k - shift], prec, RM)
            };
            acc = acc.add(&c.scale(&factor, prec), prec);
        }
        acc
    }
}

fn coef_mass(p: &NaturalPolynomial) -> f64 {
    p.terms().map(|(_, c)| c.norm()).sum()
}

/// `Σ_{Σ n_a = n} multinomial(n; n_a) · Π Q_a^{n_a} · exp[n P_n(n_a/n)] · f_n(n_a/n)`
/// evaluated exactly in multiprecision.
pub fn finite_multinomial_sum(
    n: u32,
    set: &ProperSet,
    q: &[Complex64],
    p_n: &NaturalPolynomial,
    f_n: &NaturalPolynomial,
    budget: f64,
) -> Result<MultinomialSum> {
    let start = Instant::now();
    let k = set.len();
    if k == 0 || k > MAX_SET_SIZE {
        return Err(Error::capacity("proper set size", k as f64, MAX_SET_SIZE as f64));
    }
    if q.len() != k {
        return Err(Error::Shape(format!("{} amplitudes for {k} elements", q.len())));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    for poly in [p_n, f_n] {
        if poly.max_index().is_some_and(|m| m >= k) {
            return Err(Error::Shape("polynomial variable outside the set".into()));
        }
    }
    let compositions = composition_count(n, k);
    if compositions > budget {
        return Err(Error::capacity("compositions", compositions, budget));
    }
    let q_mass: f64 = q.iter().map(|z| z.norm()).sum();
    let bound = n as f64 * q_mass.max(1.0).log2() + n as f64 * coef_mass(p_n) * std::f64::consts::LOG2_E + coef_mass(f_n).max(1.0).log2();
    let prec = ((bound.ceil() as usize + 96).div_ceil(64)) * 64;
    let mut ctx = BigCtx::new(prec)?;

    let deg = p_n.degree().max(f_n.degree());
    let nb = ctx.uint(n as u64);
    let inv_n = BigFloat::from_u64(1, prec).div(&nb, prec, RM);
    let mut inv_pow = vec![BigFloat::from_u64(1, prec)];
    for i in 1..=deg {
        inv_pow.push(inv_pow[i - 1].mul(&inv_n, prec, RM));
    }
    let mut fact = vec![BigFloat::from_u64(1, prec)];
    for i in 1..=n as u64 {
        fact.push(fact[i as usize - 1].mul(&BigFloat::from_u64(i, prec), prec, RM));
    }
    let qpow: Vec<Vec<BigComplex>> = q
        .iter()
        .map(|&z| {
            let zb = BigComplex::from_c64(z, prec);
            let mut v = vec![BigComplex::one(prec)];
            for i in 1..=n as usize {
                v.push(v[i - 1].mul(&zb, prec));
            }
            v
        })
        .collect();
    let pb = BigPoly::new(p_n, prec);
    let fb = BigPoly::new(f_n, prec);
    let ln_q: Vec<f64> = q.iter().map(|z| z.norm().ln()).collect();

    let mut total = BigComplex::zero(prec);
    let mut largest = f64::NEG_INFINITY;
    for counts in CompositionCursor::new(n, k) {
        if counts.iter().zip(q).any(|(&c, z)| c > 0 && *z == Complex64::default()) {
            continue;
        }
        let f = fb.eval_scaled(&counts, n, &inv_pow, 0, prec);
        if f.is_zero() {
            continue;
        }
        let mut term = f;
        let expo = pb.eval_scaled(&counts, n, &inv_pow, 1, prec);
        let e = ctx.cexp(&expo);
        term = term.mul(&e, prec);
        for (a, &c) in counts.iter().enumerate() {
            if c > 0 {
                term = term.mul(&qpow[a][c as usize], prec);
            }
        }
        let mut coef = fact[n as usize].clone();
        for &c in &counts {
            coef = coef.div(&fact[c as usize], prec, RM);
        }
        term = term.scale(&coef, prec);
        let ln_mag = ln_multinomial(&counts)
            + counts.iter().zip(&ln_q).map(|(&c, l)| if c > 0 { c as f64 * l } else { 0.0 }).sum::<f64>()
            + expo.to_c64().re;
        largest = largest.max(ln_mag * std::f64::consts::LOG2_E);
        total = total.add(&term, prec);
    }
    let value = total.to_c64();
    if !value.is_finite() {
        return Err(Error::NumericalHealth(format!("multinomial sum overflowed at n = {n}")));
    }
    let cancellation_bits = if value.norm() > 0.0 { (largest - value.norm().log2()).max(0.0) } else { largest.max(0.0) };
    Ok(MultinomialSum {
        n,
        value,
        compositions,
        precision_bits: prec,
        cancellation_bits,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Partition;

    fn toy() -> (ProperSet, Vec<Complex64>, NaturalPolynomial) {
        let set = ProperSet::new(vec![Partition::A0, Partition::D, Partition::DBar], vec![0, 2, 1], vec![1]).unwrap();
        let q = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.3), Complex64::new(0.0, -0.3)];
        // canonical 0.5·τ_d·ν_c
        let p = NaturalPolynomial::new().with_term(&[1, 0], Complex64::new(0.5, 0.0)).with_term(&[2, 0], Complex64::new(0.5, 0.0));
        (set, q, p)
    }

    fn linear(entries: &[(usize, f64)]) -> NaturalPolynomial {
        entries.iter().fold(NaturalPolynomial::new(), |p, &(a, c)| p.with_term(&[a], Complex64::new(c, 0.0)))
    }

    #[test]
    fn multinomial_expansion_without_interaction() {
        let (set, q, _) = toy();
        let one = NaturalPolynomial::new().with_term(&[], Complex64::new(1.0, 0.0));
        for n in [1, 7, 60] {
            let s = finite_multinomial_sum(n, &set, &q, &NaturalPolynomial::new(), &one, 1e7).unwrap();
            assert!((s.value - 1.0).norm() < 1e-14, "n={n}: {}", s.value);
        }
    }

    /// With `x_d = n_d/n` the toy sum has the closed form
    /// `E[f] = 2·0.3i·exp(0.5(1 − 1/n))` for `f = ω_d − ω_d̄`.
    #[test]
    fn toy_difference_matches_closed_form() {
        let (set, q, p) = toy();
        let f = linear(&[(1, 1.0), (2, -1.0)]);
        for n in [1u32, 5, 50] {
            let s = finite_multinomial_sum(n, &set, &q, &p, &f, 1e7).unwrap();
            let expect = Complex64::new(0.0, 0.6 * (0.5 * (1.0 - 1.0 / n as f64)).exp());
            assert!((s.value - expect).norm() < 1e-13, "n={n}: {} vs {expect}", s.value);
        }
    }

    #[test]
    fn symmetric_combination_vanishes_in_the_limit() {
        let (set, q, p) = toy();
        let f = linear(&[(1, 1.0), (2, 1.0)]);
        let a = finite_multinomial_sum(20, &set, &q, &p, &f, 1e7).unwrap();
        let b = finite_multinomial_sum(80, &set, &q, &p, &f, 1e7).unwrap();
        assert!(b.value.norm() < a.value.norm());
        assert!(b.value.norm() < 0.05, "{}", b.value);
    }

    #[test]
    fn budget_and_size_caps() {
        let (set, q, p) = toy();
        let f = linear(&[(1, 1.0)]);
        assert!(matches!(finite_multinomial_sum(2000, &set, &q, &p, &f, 1e5), Err(Error::Capacity { .. })));
        let big = ProperSet::new(vec![Partition::A0; 9], (0..9).collect(), vec![]).unwrap();
        let q9 = vec![Complex64::new(1.0 / 9.0, 0.0); 9];
        assert!(matches!(finite_multinomial_sum(3, &big, &q9, &p, &f, 1e7), Err(Error::Capacity { .. })));
    }
}
