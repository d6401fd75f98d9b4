use num_complex::Complex64;
use serde::Serialize;

use super::{check_well_played, CanonicalPolynomial, NaturalPolynomial, ProperSet};
use crate::error::{Error, Result};

const AMPLITUDE_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-14;

/// η-word, ν-word and coefficient of a τ-linear term.
type EtaNuTerm<'a> = (&'a [usize], &'a [usize], Complex64);

#[derive(Clone, Debug, Serialize)]
pub struct GenericSolution {
    pub w: Vec<Complex64>,
    pub residual: f64,
    pub sweeps: usize,
}

fn canonical_exponents(set: &ProperSet, q: &[Complex64], p: &CanonicalPolynomial, w: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::default(); set.len()];
    for (word, coef) in p.terms() {
        if let [x] = word.tau[..] {
            let eta: Complex64 = word.eta.iter().map(|&b| 2.0 * w[b]).product();
            let nu: Complex64 = word.nu.iter().map(|&c| q[c]).product();
            e[x] += coef * eta * nu;
        }
    }
    e
}

/// Solves `W_x = Q_x exp[∂_{τ_x} C(τ = 0, η = 2W, ν = Q)]` for `x ∈ D` in
/// ascending order, with `W_x̄ = −W_x` and `W_c = Q_c`.
pub fn solve_generic_sce(set: &ProperSet, q: &[Complex64], p: &CanonicalPolynomial) -> Result<GenericSolution> {
    set.check_proper_amplitudes(q, AMPLITUDE_TOL)?;
    let report = check_well_played(p, set);
    if !report.pass {
        return Err(Error::Domain(format!("polynomial is not well-played ({} violations)", report.violations.len())));
    }
    let mut w = q.to_vec();
    // bucket the τ-linear terms by their τ variable
    let mut by_x: Vec<Vec<EtaNuTerm>> = vec![Vec::new(); set.len()];
    for (word, coef) in p.terms() {
        if let [x] = word.tau[..] {
            by_x[x].push((&word.eta, &word.nu, coef));
        }
    }
    for &x in &set.d_order {
        let e: Complex64 = by_x[x]
            .iter()
            .map(|(eta, nu, coef)| {
                coef * eta.iter().map(|&b| 2.0 * w[b]).product::<Complex64>() * nu.iter().map(|&c| q[c]).product::<Complex64>()
            })
            .sum();
        w[x] = q[x] * e.exp();
        w[set.bar[x]] = -w[x];
    }
    let e = canonical_exponents(set, q, p, &w);
    let residual = set.d_order.iter().map(|&x| (w[x] - q[x] * e[x].exp()).norm()).fold(0.0, f64::max);
    Ok(GenericSolution { w, residual, sweeps: 1 })
}

/// Jacobi iteration of `W_a = Q_a exp[∂_{ω_a} P(W)]` from `W = Q`.
pub fn solve_natural_sce(set: &ProperSet, q: &[Complex64], p: &NaturalPolynomial) -> Result<GenericSolution> {
    set.check_proper_amplitudes(q, AMPLITUDE_TOL)?;
    if let Some(m) = p.max_index() {
        if m >= set.len() {
            return Err(Error::Shape(format!("variable {m} outside a set of {} elements", set.len())));
        }
    }
    let max_sweeps = set.d_order.len() + 4;
    let mut w = q.to_vec();
    let mut change = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let next: Vec<Complex64> = (0..set.len()).map(|a| q[a] * p.derivative(a, &w).exp()).collect();
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::NumericalHealth("non-finite iterate".into()));
        }
        let scale = next.iter().map(|z| z.norm()).fold(1.0, f64::max);
        change = next.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        w = next;
        if change <= JACOBI_TOL {
            let residual = (0..set.len()).map(|a| (w[a] - q[a] * p.derivative(a, &w).exp()).norm()).fold(0.0, f64::max);
            return Ok(GenericSolution { w, residual, sweeps: sweep });
        }
    }
    Err(Error::Convergence { sweeps: max_sweeps, residual: change })
}
