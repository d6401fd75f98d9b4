//! Proper sets, canonical polynomial representations, well-playedness and
//! the generic self-consistent equation they induce.
//!
//! A proper set `A = A0 ⊔ D ⊔ D̄` carries a bar involution pairing `D` with
//! `D̄` and a total order on `D`. Polynomials in `ω_a` are rewritten in
//! `τ_a = ω_a + ω_ā`, `η_a = ω_a − ω_ā` (for `a ∈ D`) and `ν_c = ω_c`
//! (for `c ∈ A0`).

mod multinomial;
mod polynomial;
mod solve;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisTables, Partition};
use crate::error::{Error, Result};

pub use multinomial::{finite_multinomial_sum, MultinomialSum, MAX_SET_SIZE};
pub use polynomial::{
    build_hq, canonicalize, check_well_played, chi, delta, naturalize, CanonicalPolynomial, CanonicalTerm, CanonicalWord,
    NaturalPolynomial, NaturalTerm, Violation, ViolationReason, WellPlayedReport, DEFAULT_DEGREE_CAP,
};
pub use solve::{solve_generic_sce, solve_natural_sce, GenericSolution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProperSet {
    pub labels: Vec<Partition>,
    pub bar: Vec<usize>,
    /// Elements of `D` in ascending order.
    pub d_order: Vec<usize>,
    #[serde(skip)]
    position: Vec<usize>,
}

impl ProperSet {
    pub fn new(labels: Vec<Partition>, bar: Vec<usize>, d_order: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        if bar.len() != n {
            return Err(Error::Shape(format!("{} labels but {} bar entries", n, bar.len())));
        }
        for (a, &b) in bar.iter().enumerate() {
            if b >= n || bar[b] != a {
                return Err(Error::Domain(format!("bar is not an involution at element {a}")));
            }
            let ok = match labels[a] {
                Partition::A0 => b == a,
                Partition::D => labels[b] == Partition::DBar,
                Partition::DBar => labels[b] == Partition::D,
            };
            if !ok {
                return Err(Error::Domain(format!("bar of element {a} has the wrong label")));
            }
        }
        let mut position = vec![usize::MAX; n];
        for (k, &a) in d_order.iter().enumerate() {
            if a >= n || labels[a] != Partition::D || position[a] != usize::MAX {
                return Err(Error::Domain(format!("order entry {a} is not a distinct element of D")));
            }
            position[a] = k;
        }
        if labels.iter().filter(|l| **l == Partition::D).count() != d_order.len() {
            return Err(Error::Domain("order does not cover D".into()));
        }
        Ok(ProperSet { labels, bar, d_order, position })
    }

    pub fn from_tables(t: &BasisTables) -> Self {
        ProperSet::new(t.partition.clone(), t.bar.iter().map(|&b| b as usize).collect(), t.d_order.iter().map(|&a| a as usize).collect())
            .expect("basis tables form a proper set")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Position of `a ∈ D` in the order.
    pub fn position(&self, a: usize) -> Option<usize> {
        self.position.get(a).copied().filter(|&p| p != usize::MAX)
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn validated(self) -> Result<Self> {
        ProperSet::new(self.labels, self.bar, self.d_order)
    }

    /// Checks `Q_c ∈ [0, ∞)` on `A0`, `Q_ā = −Q_a` and `Σ Q = 1`.
    pub fn check_proper_amplitudes(&self, q: &[num_complex::Complex64], tol: f64) -> Result<()> {
        if q.len() != self.len() {
            return Err(Error::Shape(format!("{} amplitudes for {} elements", q.len(), self.len())));
        }
        for (a, z) in q.iter().enumerate() {
            match self.labels[a] {
                Partition::A0 if z.im.abs() > tol || z.re < -tol => {
                    return Err(Error::Domain(format!("Q at rank-0 element {a} is not real non-negative")))
                }
                Partition::D if (z + q[self.bar[a]]).norm() > tol => {
                    return Err(Error::Domain(format!("Q is not antisymmetric at element {a}")))
                }
                _ => {}
            }
        }
        let total: num_complex::Complex64 = q.iter().sum();
        if (total - 1.0).norm() > tol {
            return Err(Error::Domain(format!("amplitudes sum to {total}, not 1")));
        }
        Ok(())
    }
}
