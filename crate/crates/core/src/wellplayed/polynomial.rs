use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ProperSet;
use crate::basis::{BasisTables, Partition};
use crate::error::{Error, Result};

pub const DEFAULT_DEGREE_CAP: usize = 4;

/// Relative size below which a coefficient produced by cancelling
/// contributions is treated as an exact zero.
const CANCEL_TOL: f64 = 1e-13;

/// Sparse polynomial in the natural variables `ω_a`; keys are sorted
/// multisets of element indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NaturalPolynomial {
    terms: BTreeMap<Vec<usize>, Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaturalTerm {
    pub omega: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

impl NaturalPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, mut word: Vec<usize>, coef: Complex64) {
        word.sort_unstable();
        *self.terms.entry(word).or_default() += coef;
    }

    pub fn with_term(mut self, word: &[usize], coef: Complex64) -> Self {
        self.add_term(word.to_vec(), coef);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], Complex64)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn coefficient(&self, word: &[usize]) -> Complex64 {
        let mut w = word.to_vec();
        w.sort_unstable();
        self.terms.get(&w).copied().unwrap_or_default()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.keys().filter_map(|w| w.last().copied()).max()
    }

    pub fn eval(&self, omega: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(w, c)| c * w.iter().map(|&a| omega[a]).product::<Complex64>()).sum()
    }

    /// `∂P/∂ω_x` at `omega`.
    pub fn derivative(&self, x: usize, omega: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::default();
        for (w, c) in &self.terms {
            let Some(first) = w.iter().position(|&a| a == x) else { continue };
            let mult = w.iter().filter(|&&a| a == x).count();
            let rest: Complex64 = w.iter().enumerate().filter(|&(k, _)| k != first).map(|(_, &a)| omega[a]).product();
            acc += c * mult as f64 * rest;
        }
        acc
    }

    pub fn to_terms(&self) -> Vec<NaturalTerm> {
        self.terms.iter().map(|(w, c)| NaturalTerm { omega: w.clone(), re: c.re, im: c.im }).collect()
    }

    pub fn from_terms(terms: &[NaturalTerm]) -> Self {
        let mut p = Self::new();
        for t in terms {
            p.add_term(t.omega.clone(), Complex64::new(t.re, t.im));
        }
        p
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_terms())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self::from_terms(&serde_json::from_str::<Vec<NaturalTerm>>(s)?))
    }
}

/// Monomial `τ^tau · η^eta · ν^nu`; each word is a sorted multiset.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalWord {
    pub tau: Vec<usize>,
    pub eta: Vec<usize>,
    pub nu: Vec<usize>,
}

impl CanonicalWord {
    pub fn new(mut tau: Vec<usize>, mut eta: Vec<usize>, mut nu: Vec<usize>) -> Self {
        tau.sort_unstable();
        eta.sort_unstable();
        nu.sort_unstable();
        CanonicalWord { tau, eta, nu }
    }

    pub fn degree(&self) -> usize {
        self.tau.len() + self.eta.len() + self.nu.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTerm {
    pub tau: Vec<usize>,
    pub eta: Vec<usize>,
    pub nu: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CanonicalPolynomial {
    terms: BTreeMap<CanonicalWord, Complex64>,
}

impl CanonicalPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, word: CanonicalWord, coef: Complex64) {
        let w = CanonicalWord::new(word.tau, word.eta, word.nu);
        *self.terms.entry(w).or_default() += coef;
    }

    pub fn with_term(mut self, tau: &[usize], eta: &[usize], nu: &[usize], coef: Complex64) -> Self {
        self.add_term(CanonicalWord::new(tau.to_vec(), eta.to_vec(), nu.to_vec()), coef);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CanonicalWord, Complex64)> {
        self.terms.iter().map(|(w, c)| (w, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(CanonicalWord::degree).max().unwrap_or(0)
    }

    pub fn coefficient(&self, tau: &[usize], eta: &[usize], nu: &[usize]) -> Complex64 {
        let w = CanonicalWord::new(tau.to_vec(), eta.to_vec(), nu.to_vec());
        self.terms.get(&w).copied().unwrap_or_default()
    }

    /// Evaluates at `τ_a`, `η_a` (indexed by `a ∈ D`) and `ν_c`.
    pub fn eval(&self, tau: &[Complex64], eta: &[Complex64], nu: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(w, c)| {
                c * w.tau.iter().map(|&a| tau[a]).product::<Complex64>()
                    * w.eta.iter().map(|&a| eta[a]).product::<Complex64>()
                    * w.nu.iter().map(|&a| nu[a]).product::<Complex64>()
            })
            .sum()
    }

    pub fn to_terms(&self) -> Vec<CanonicalTerm> {
        self.terms
            .iter()
            .map(|(w, c)| CanonicalTerm { tau: w.tau.clone(), eta: w.eta.clone(), nu: w.nu.clone(), re: c.re, im: c.im })
            .collect()
    }

    pub fn from_terms(terms: &[CanonicalTerm]) -> Self {
        let mut p = Self::new();
        for t in terms {
            p.add_term(CanonicalWord::new(t.tau.clone(), t.eta.clone(), t.nu.clone()), Complex64::new(t.re, t.im));
        }
        p
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_terms())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self::from_terms(&serde_json::from_str::<Vec<CanonicalTerm>>(s)?))
    }
}

/// Accumulates coefficients alongside the magnitude of everything added, so
/// cancellations can be recognised as exact zeros.
struct Accumulator<K: Ord> {
    map: BTreeMap<K, (Complex64, f64)>,
}

impl<K: Ord> Accumulator<K> {
    fn new() -> Self {
        Accumulator { map: BTreeMap::new() }
    }

    fn add(&mut self, key: K, c: Complex64) {
        let e = self.map.entry(key).or_insert((Complex64::default(), 0.0));
        e.0 += c;
        e.1 += c.norm();
    }

    fn finish(self) -> impl Iterator<Item = (K, Complex64)> {
        self.map.into_iter().filter(|(_, (c, mag))| c.norm() > CANCEL_TOL * mag).map(|(k, (c, _))| (k, c))
    }
}

fn check_degree(deg: usize, cap: usize) -> Result<()> {
    if deg > cap {
        return Err(Error::capacity("polynomial degree", deg as f64, cap as f64));
    }
    Ok(())
}

fn check_indices(max: Option<usize>, set: &ProperSet) -> Result<()> {
    match max {
        Some(m) if m >= set.len() => Err(Error::Shape(format!("variable {m} outside a set of {} elements", set.len()))),
        _ => Ok(()),
    }
}

/// Change of basis `ω_a = (τ_a + η_a)/2`, `ω_ā = (τ_a − η_a)/2`, `ω_c = ν_c`.
pub fn canonicalize(p: &NaturalPolynomial, set: &ProperSet, degree_cap: usize) -> Result<CanonicalPolynomial> {
    check_degree(p.degree(), degree_cap)?;
    check_indices(p.max_index(), set)?;
    let mut acc = Accumulator::new();
    for (word, coef) in p.terms() {
        let mut nu = Vec::new();
        // (element of D, sign of its η component)
        let mut paired = Vec::new();
        for &x in word {
            match set.labels[x] {
                Partition::A0 => nu.push(x),
                Partition::D => paired.push((x, 1.0)),
                Partition::DBar => paired.push((set.bar[x], -1.0)),
            }
        }
        let scale = coef * 0.5f64.powi(paired.len() as i32);
        for choice in 0u32..1 << paired.len() {
            let (mut tau, mut eta, mut sign) = (Vec::new(), Vec::new(), 1.0);
            for (k, &(a, s)) in paired.iter().enumerate() {
                if choice >> k & 1 == 1 {
                    eta.push(a);
                    sign *= s;
                } else {
                    tau.push(a);
                }
            }
            acc.add(CanonicalWord::new(tau, eta, nu.clone()), scale * sign);
        }
    }
    let mut out = CanonicalPolynomial::new();
    for (w, c) in acc.finish() {
        out.terms.insert(w, c);
    }
    Ok(out)
}

/// Inverse change of basis `τ_a = ω_a + ω_ā`, `η_a = ω_a − ω_ā`, `ν_c = ω_c`.
pub fn naturalize(c: &CanonicalPolynomial, set: &ProperSet, degree_cap: usize) -> Result<NaturalPolynomial> {
    check_degree(c.degree(), degree_cap)?;
    for (w, _) in c.terms() {
        for &a in w.tau.iter().chain(&w.eta) {
            if a >= set.len() || set.labels[a] != Partition::D {
                return Err(Error::Domain(format!("τ/η variable {a} is not an element of D")));
            }
        }
        for &x in &w.nu {
            if x >= set.len() || set.labels[x] != Partition::A0 {
                return Err(Error::Domain(format!("ν variable {x} is not a rank-0 element")));
            }
        }
    }
    let mut acc = Accumulator::new();
    for (w, coef) in c.terms() {
        let paired: Vec<(usize, f64)> = w.tau.iter().map(|&a| (a, 1.0)).chain(w.eta.iter().map(|&a| (a, -1.0))).collect();
        for choice in 0u32..1 << paired.len() {
            let mut word = w.nu.clone();
            let mut sign = 1.0;
            for (k, &(a, s)) in paired.iter().enumerate() {
                if choice >> k & 1 == 1 {
                    word.push(set.bar[a]);
                    sign *= s;
                } else {
                    word.push(a);
                }
            }
            word.sort_unstable();
            acc.add(word, coef * sign);
        }
    }
    let mut out = NaturalPolynomial::new();
    for (w, c) in acc.finish() {
        out.terms.insert(w, c);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationReason {
    EmptyTau,
    MaxOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tau: Vec<usize>,
    pub eta: Vec<usize>,
    pub nu: Vec<usize>,
    pub re: f64,
    pub im: f64,
    pub reason: ViolationReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellPlayedReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub max_tau_len: usize,
    pub max_eta_len: usize,
    pub max_nu_len: usize,
    pub terms: usize,
}

/// Every nonzero coefficient needs a nonempty τ-word whose largest element
/// strictly exceeds every element of the η-word.
pub fn check_well_played(c: &CanonicalPolynomial, set: &ProperSet) -> WellPlayedReport {
    let mut violations = Vec::new();
    let (mut mt, mut me, mut mn) = (0, 0, 0);
    for (w, coef) in c.terms() {
        if coef == Complex64::default() {
            continue;
        }
        mt = mt.max(w.tau.len());
        me = me.max(w.eta.len());
        mn = mn.max(w.nu.len());
        let top = |word: &[usize]| word.iter().filter_map(|&a| set.position(a)).max();
        let reason = match (top(&w.tau), top(&w.eta)) {
            (None, _) => Some(ViolationReason::EmptyTau),
            (Some(t), Some(e)) if t <= e => Some(ViolationReason::MaxOrder),
            _ => None,
        };
        if let Some(reason) = reason {
            violations.push(Violation { tau: w.tau.clone(), eta: w.eta.clone(), nu: w.nu.clone(), re: coef.re, im: coef.im, reason });
        }
    }
    WellPlayedReport { pass: violations.is_empty(), violations, max_tau_len: mt, max_eta_len: me, max_nu_len: mn, terms: c.len() }
}

/// `H_q = Σ_{a_1..a_q} h(Φ_{a_1⋯a_q}) ω_{a_1}⋯ω_{a_q}` by dense enumeration
/// of ordered tuples.
pub fn build_hq(tables: &BasisTables, q: usize, h: &dyn Fn(f64) -> f64, budget: f64) -> Result<NaturalPolynomial> {
    if q == 0 {
        return Err(Error::Domain("q must be at least 1".into()));
    }
    let size = tables.len();
    let work = (size as f64).powi(q as i32);
    if work > budget {
        return Err(Error::capacity("q-tuple enumeration", work, budget));
    }
    let mut out = NaturalPolynomial::new();
    let mut tuple = vec![0usize; q];
    loop {
        let mask = tuple.iter().fold(0usize, |m, &a| m ^ a);
        let v = h(tables.phi[mask]);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("h returned {v} at {}", tables.phi[mask])));
        }
        if v != 0.0 {
            out.add_term(tuple.clone(), Complex64::new(v, 0.0));
        }
        let Some(k) = tuple.iter().rposition(|&a| a + 1 < size) else { break };
        tuple[k] += 1;
        tuple[k + 1..].iter_mut().for_each(|a| *a = 0);
    }
    out.terms.retain(|_, c| *c != Complex64::default());
    Ok(out)
}

/// `χ_h(a; c_1..c_k) = Σ_{d_s ∈ {c_s, c̄_s}} (−1)^{#bars} h(Φ_{a d_1⋯d_k})`.
pub fn chi(tables: &BasisTables, h: &dyn Fn(f64) -> f64, a: usize, cs: &[usize]) -> f64 {
    let mut total = 0.0;
    for choice in 0u32..1 << cs.len() {
        let mut mask = a;
        let mut sign = 1.0;
        for (k, &c) in cs.iter().enumerate() {
            if choice >> k & 1 == 1 {
                mask ^= tables.bar[c] as usize;
                sign = -sign;
            } else {
                mask ^= c;
            }
        }
        total += sign * h(tables.phi[mask]);
    }
    total
}

/// `Δ_{a,b} = ½ [h(Φ_{āb}) − h(Φ_{ab})]`.
pub fn delta(tables: &BasisTables, h: &dyn Fn(f64) -> f64, a: usize, b: usize) -> f64 {
    let abar = tables.bar[a] as usize;
    0.5 * (h(tables.phi[abar ^ b]) - h(tables.phi[a ^ b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `A0 = {0}`, `D = {1}`, `D̄ = {2}`.
    fn toy() -> ProperSet {
        ProperSet::new(vec![Partition::A0, Partition::D, Partition::DBar], vec![0, 2, 1], vec![1]).unwrap()
    }

    fn p1(gamma: f64) -> (BasisTables, ProperSet) {
        let t = BasisTables::new(&[gamma], &[0.3]).unwrap();
        let s = ProperSet::from_tables(&t);
        (t, s)
    }

    #[test]
    fn linear_changes_of_basis() {
        let set = toy();
        let sum = NaturalPolynomial::new().with_term(&[1], c(1.0, 0.0)).with_term(&[2], c(1.0, 0.0));
        let cs = canonicalize(&sum, &set, 4).unwrap();
        assert_eq!(cs, CanonicalPolynomial::new().with_term(&[1], &[], &[], c(1.0, 0.0)));
        let diff = NaturalPolynomial::new().with_term(&[1], c(1.0, 0.0)).with_term(&[2], c(-1.0, 0.0));
        let cd = canonicalize(&diff, &set, 4).unwrap();
        assert_eq!(cd, CanonicalPolynomial::new().with_term(&[], &[1], &[], c(1.0, 0.0)));
        let prod = NaturalPolynomial::new().with_term(&[1, 0], c(1.0, 0.0));
        let cp = canonicalize(&prod, &set, 4).unwrap();
        assert_eq!(cp.coefficient(&[1], &[], &[0]), c(0.5, 0.0));
        assert_eq!(cp.coefficient(&[], &[1], &[0]), c(0.5, 0.0));
        assert_eq!(cp.len(), 2);
    }

    #[test]
    fn well_played_verdicts() {
        let set = toy();
        let good = CanonicalPolynomial::new().with_term(&[1], &[], &[0], c(1.0, 0.0));
        assert!(check_well_played(&good, &set).pass);
        let bad = CanonicalPolynomial::new().with_term(&[], &[1], &[], c(1.0, 0.0));
        let r = check_well_played(&bad, &set);
        assert!(!r.pass);
        assert_eq!(r.violations[0].reason, ViolationReason::EmptyTau);
        let same = CanonicalPolynomial::new().with_term(&[1], &[1], &[], c(1.0, 0.0));
        assert_eq!(check_well_played(&same, &set).violations[0].reason, ViolationReason::MaxOrder);
    }

    #[test]
    fn degree_cap_is_enforced() {
        let set = toy();
        let p = NaturalPolynomial::new().with_term(&[1, 1, 1, 1, 2], c(1.0, 0.0));
        assert!(matches!(canonicalize(&p, &set, 4), Err(Error::Capacity { .. })));
        assert!(canonicalize(&p, &set, 5).is_ok());
        let out_of_range = NaturalPolynomial::new().with_term(&[7], c(1.0, 0.0));
        assert!(canonicalize(&out_of_range, &set, 4).is_err());
    }

    #[test]
    fn h1_at_depth_one() {
        let gamma = 0.37;
        let (t, set) = p1(gamma);
        let h1 = build_hq(&t, 1, &|l| l * l, 1e6).unwrap();
        let d: Vec<usize> = (0..4).filter(|&a| t.partition[a] != Partition::A0).collect();
        assert_eq!(h1.len(), 2);
        for &a in &d {
            assert!((h1.coefficient(&[a]) - 4.0 * gamma * gamma).norm() < 1e-14);
        }
        let cp = canonicalize(&h1, &set, 4).unwrap();
        let dd = set.d_order[0];
        assert_eq!(cp.len(), 1);
        assert!((cp.coefficient(&[dd], &[], &[]) - 4.0 * gamma * gamma).norm() < 1e-14);
        assert!(check_well_played(&cp, &set).pass);
    }

    #[test]
    fn h2_at_depth_one_matches_hand_expansion() {
        // Φ_{ab} is nonzero only when exactly one of a, b has rank 1, where
        // it equals ±2γ; both orderings contribute to each multiset.
        let gamma = 0.41;
        let (t, set) = p1(gamma);
        let h2 = build_hq(&t, 2, &|l| -l * l / 2.0, 1e6).unwrap();
        let cp = canonicalize(&h2, &set, 4).unwrap();
        let dd = set.d_order[0];
        let a0: Vec<usize> = (0..4).filter(|&a| t.partition[a] == Partition::A0).collect();
        assert_eq!(cp.len(), 2);
        for &c0 in &a0 {
            assert!((cp.coefficient(&[dd], &[], &[c0]) + 4.0 * gamma * gamma).norm() < 1e-13);
        }
        assert!(check_well_played(&cp, &set).pass);
    }

    #[test]
    fn even_kernels_are_well_played_and_odd_ones_are_not() {
        let even: [&dyn Fn(f64) -> f64; 2] = [&|l| -l * l / 2.0, &|l| (0.7 * l).cos() - 1.0];
        for (gamma, beta) in [(vec![0.3], vec![0.2]), (vec![0.3, -0.5], vec![0.2, 0.45])] {
            let t = BasisTables::new(&gamma, &beta).unwrap();
            let set = ProperSet::from_tables(&t);
            for q in [2, 3] {
                for h in even {
                    let cp = canonicalize(&build_hq(&t, q, h, 1e6).unwrap(), &set, 4).unwrap();
                    let r = check_well_played(&cp, &set);
                    assert!(r.pass, "p={} q={q}: {:?}", gamma.len(), &r.violations[..r.violations.len().min(3)]);
                }
                let odd = canonicalize(&build_hq(&t, q, &|l| l + 0.1 * l * l * l, 1e6).unwrap(), &set, 4).unwrap();
                assert!(!check_well_played(&odd, &set).pass, "odd kernel slipped through at q={q}");
            }
        }
    }

    #[test]
    fn hq_budget() {
        let t = BasisTables::new(&[0.3, 0.1], &[0.2, 0.1]).unwrap();
        assert!(matches!(build_hq(&t, 3, &|l| l * l, 1000.0), Err(Error::Capacity { .. })));
    }

    #[test]
    fn json_round_trip() {
        let p = CanonicalPolynomial::new().with_term(&[1], &[1], &[0, 0], c(0.5, -0.25));
        assert_eq!(CanonicalPolynomial::from_json(&p.to_json().unwrap()).unwrap(), p);
        let n = NaturalPolynomial::new().with_term(&[2, 0, 1], c(1.5, 2.0));
        assert_eq!(NaturalPolynomial::from_json(&n.to_json().unwrap()).unwrap(), n);
    }

    #[test]
    fn chi_and_delta_special_cases() {
        let t = BasisTables::new(&[0.3, -0.5], &[0.2, 0.45]).unwrap();
        let h = |l: f64| (0.9 * l).cos();
        for a in 0..t.len() {
            assert_eq!(chi(&t, &h, a, &[]), h(t.phi[a]));
        }
    }

    proptest! {
        #[test]
        fn delta_and_chi_vanish_by_rank(
            g1 in -1.0f64..1.0, g2 in -1.0f64..1.0, a in 0usize..16, b in 0usize..16,
            cs in proptest::collection::vec(0usize..16, 1..3),
        ) {
            let t = BasisTables::new(&[g1, g2], &[0.2, 0.3]).unwrap();
            let h = |l: f64| (0.8 * l).cos() + l * l;
            if t.rank[a] >= t.rank[b] {
                prop_assert!(delta(&t, &h, a, b).abs() < 1e-12);
            }
            let bb = t.bar[b] as usize;
            prop_assert!((delta(&t, &h, a, b) - delta(&t, &h, a, bb)).abs() < 1e-12);
            let top = cs.iter().map(|&x| t.rank[x]).max().unwrap();
            if top >= t.rank[a] {
                prop_assert!(chi(&t, &h, a, &cs).abs() < 1e-12);
            }
        }

        #[test]
        fn canonical_round_trip(
            coefs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6),
            words in proptest::collection::vec(proptest::collection::vec(0usize..16, 0..5), 1..6),
            omega in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        ) {
            let t = BasisTables::new(&[0.3, 0.7], &[0.2, 0.3]).unwrap();
            let set = ProperSet::from_tables(&t);
            let mut p = NaturalPolynomial::new();
            for (w, (re, im)) in words.iter().zip(&coefs) {
                p.add_term(w.clone(), c(*re, *im));
            }
            let cp = canonicalize(&p, &set, 4).unwrap();
            let back = naturalize(&cp, &set, 4).unwrap();
            for (w, z) in p.terms() {
                prop_assert!((back.coefficient(w) - z).norm() < 1e-12);
            }
            for (w, z) in back.terms() {
                prop_assert!((p.coefficient(w) - z).norm() < 1e-12);
            }
            // evaluation agrees under the variable substitution
            let om: Vec<Complex64> = omega.iter().map(|&(re, im)| c(re, im)).collect();
            let mut tau = vec![Complex64::default(); 16];
            let mut eta = vec![Complex64::default(); 16];
            for &a in &set.d_order {
                tau[a] = om[a] + om[set.bar[a]];
                eta[a] = om[a] - om[set.bar[a]];
            }
            let lhs = p.eval(&om);
            let rhs = cp.eval(&tau, &eta, &om);
            prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + lhs.norm()));
        }
    }
}
