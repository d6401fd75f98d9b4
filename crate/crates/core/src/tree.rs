//! Tree-style iteration for pure Gaussian `q`-spin models.
//!
//! Works on `B = {±1}^{2p+1}` with spins ordered
//! `(a_1, …, a_p, a_0, a_{-p}, …, a_{-1})`, bit `t` holding position `t`.
//! Matrices are indexed by `j + p` for `j ∈ {-p, …, p}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{BasisTables, ABSOLUTE_MAX_LEVEL};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::sce::{compute_moments, solve_fast, IMAG_LEAK_ERROR};

/// Bit position of `a_j` in a `B` mask.
#[inline]
pub fn tree_bit(p: usize, j: i32) -> usize {
    if j > 0 {
        j as usize - 1
    } else if j == 0 {
        p
    } else {
        2 * p + 1 - j.unsigned_abs() as usize
    }
}

#[inline]
fn spin(mask: u32, bit: usize) -> f64 {
    if (mask >> bit) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Γ_j` for `j = -p..=p`: `γ_j`, zero at the centre, `-γ_{|j|}` below.
pub fn gamma_vector(gamma: &[f64]) -> Vec<f64> {
    let p = gamma.len();
    (-(p as i32)..=p as i32)
        .map(|j| match j.signum() {
            1 => gamma[j as usize - 1],
            -1 => -gamma[j.unsigned_abs() as usize - 1],
            _ => 0.0,
        })
        .collect()
}

/// `f(a) = ½ ∏⟨a_r|e^{iβ_r X}|a_{r+1}⟩ ⋯ ⟨a_0|e^{-iβ_p X}|a_{-p}⟩ ⋯ ⟨a_{-2}|e^{-iβ_1 X}|a_{-1}⟩`.
pub fn f_weight(beta: &[f64], mask: u32) -> Complex64 {
    let p = beta.len();
    let mut f = Complex64::new(0.5, 0.0);
    for r in 1..=p {
        let (s, c) = beta[r - 1].sin_cos();
        let next = if r == p { tree_bit(p, 0) } else { tree_bit(p, r as i32 + 1) };
        f *= if (mask >> tree_bit(p, r as i32)) & 1 == (mask >> next) & 1 { Complex64::new(c, 0.0) } else { Complex64::new(0.0, s) };
        let prev = if r == p { tree_bit(p, 0) } else { tree_bit(p, -(r as i32) - 1) };
        f *= if (mask >> tree_bit(p, -(r as i32))) & 1 == (mask >> prev) & 1 { Complex64::new(c, 0.0) } else { Complex64::new(0.0, -s) };
    }
    f
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeState {
    pub p: usize,
    pub q: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// `G^{(0)}, …, G^{(p)}`, each `(2p+1)²` row-major.
    pub g: Vec<Vec<Complex64>>,
    #[serde(skip)]
    f: Vec<Complex64>,
}

impl TreeState {
    pub fn dim(&self) -> usize {
        2 * self.p + 1
    }

    pub fn entry(&self, m: usize, j: i32, k: i32) -> Complex64 {
        let d = self.dim();
        self.g[m][(j + self.p as i32) as usize * d + (k + self.p as i32) as usize]
    }

    /// `H^{(m)}(a)`; `m` may be `p + 1`.
    pub fn h(&self, m: usize, mask: u32) -> Complex64 {
        if m == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let s = exponent_matrix(&self.g[m - 1], &gamma_vector(&self.gamma), self.q);
        h_from(&s, self.p, mask)
    }

    pub fn f(&self, mask: u32) -> Complex64 {
        self.f[mask as usize]
    }
}

/// `S_{jk} = Γ_j Γ_k (G_{jk})^{q-1}`.
fn exponent_matrix(g: &[Complex64], gv: &[f64], q: usize) -> Vec<Complex64> {
    let d = gv.len();
    let mut s = vec![Complex64::default(); d * d];
    for j in 0..d {
        for k in 0..d {
            s[j * d + k] = g[j * d + k].powu(q as u32 - 1) * (gv[j] * gv[k]);
        }
    }
    s
}

fn spins_of(p: usize, mask: u32) -> Vec<f64> {
    (-(p as i32)..=p as i32).map(|j| spin(mask, tree_bit(p, j))).collect()
}

/// `exp[-½ Σ_{jk} S_{jk} a_j a_k]`.
fn h_from(s: &[Complex64], p: usize, mask: u32) -> Complex64 {
    let d = 2 * p + 1;
    let a = spins_of(p, mask);
    let mut acc = Complex64::default();
    for j in 0..d {
        let mut row = Complex64::default();
        for k in 0..d {
            row += s[j * d + k] * a[k];
        }
        acc += row * a[j];
    }
    (-0.5 * acc).exp()
}

/// Runs the iteration up to `G^{(p)}`.
pub fn iterate_h(q: usize, gamma: &[f64], beta: &[f64]) -> Result<TreeState> {
    let p = gamma.len();
    if beta.len() != p || p == 0 {
        return Err(Error::Shape(format!("{} gammas and {} betas", p, beta.len())));
    }
    if p > ABSOLUTE_MAX_LEVEL - 2 {
        return Err(Error::capacity("tree depth", p as f64, (ABSOLUTE_MAX_LEVEL - 2) as f64));
    }
    if q < 2 {
        return Err(Error::Domain("tree iteration needs q ≥ 2".into()));
    }
    let d = 2 * p + 1;
    let size = 1usize << d;
    let f: Vec<Complex64> = (0..size as u32).into_par_iter().map(|m| f_weight(beta, m)).collect();
    let gv = gamma_vector(gamma);
    let mut g: Vec<Vec<Complex64>> = Vec::with_capacity(p + 1);
    for m in 0..=p {
        let s = (m > 0).then(|| exponent_matrix(&g[m - 1], &gv, q));
        let next = (0..size as u32)
            .into_par_iter()
            .fold(
                || vec![Complex64::default(); d * d],
                |mut acc, mask| {
                    let h = s.as_ref().map_or(Complex64::new(1.0, 0.0), |s| h_from(s, p, mask));
                    let w = f[mask as usize] * h;
                    let a = spins_of(p, mask);
                    for j in 0..d {
                        for k in 0..d {
                            acc[j * d + k] += w * (a[j] * a[k]);
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![Complex64::default(); d * d],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                    x
                },
            );
        g.push(next);
    }
    Ok(TreeState { p, q, gamma: gamma.to_vec(), beta: beta.to_vec(), g, f })
}

/// `ν = (i/√(2q)) Σ_j Γ_j (G^{(p)}_{0j})^q`.
pub fn nu_p(state: &TreeState) -> Result<f64> {
    let gv = gamma_vector(&state.gamma);
    let mut s = ComplexSum::new();
    for (idx, gj) in gv.iter().enumerate() {
        let j = idx as i32 - state.p as i32;
        s.add(state.entry(state.p, 0, j).powu(state.q as u32) * *gj);
    }
    let nu = Complex64::new(0.0, 1.0 / (2.0 * state.q as f64).sqrt()) * s.value();
    if nu.im.abs() > IMAG_LEAK_ERROR || !nu.re.is_finite() {
        return Err(Error::NumericalHealth(format!("ν has imaginary part {:.3e}", nu.im)));
    }
    Ok(nu.re)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub p: usize,
    pub q: usize,
    pub v_p: f64,
    pub nu_scaled: f64,
    pub abs_diff: f64,
}

/// Compares `V_p` of the pure Gaussian `q`-spin model with `√2 ν(√q γ, β)`.
pub fn check_tree_identity(q: usize, gamma: &[f64], beta: &[f64]) -> Result<IdentityCheck> {
    let tables = BasisTables::new(gamma, beta)?;
    let ens = Ensemble::pure_gaussian(q);
    let v = compute_moments(&solve_fast(&tables, &ens)?, &tables, &ens)?.v_p;
    let scaled: Vec<f64> = gamma.iter().map(|g| g * (q as f64).sqrt()).collect();
    let nu = nu_p(&iterate_h(q, &scaled, beta)?)?;
    let nu_scaled = std::f64::consts::SQRT_2 * nu;
    Ok(IdentityCheck { p: gamma.len(), q, v_p: v, nu_scaled, abs_diff: (v - nu_scaled).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::amplitude_of;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Maps `a ∈ B` to `â ∈ A` with `â_r = a_r a_{r+1}`, `â_p = a_p a_0`, mirrored below.
    fn hat(p: usize, mask: u32) -> u32 {
        let mut out = 0;
        for r in 1..=p as i32 {
            let up = if r == p as i32 { 0 } else { r + 1 };
            let dn = if r == p as i32 { 0 } else { -r - 1 };
            let x = ((mask >> tree_bit(p, r)) ^ (mask >> tree_bit(p, up))) & 1;
            let y = ((mask >> tree_bit(p, -r)) ^ (mask >> tree_bit(p, dn))) & 1;
            out |= x << (r - 1);
            out |= y << (2 * p - r as usize);
        }
        out
    }

    #[test]
    fn nu_one_closed_form() {
        // depth one, q = 2: ν = γ sin 4β e^{-2γ²}
        let (g, b) = (0.3, PI / 8.0);
        let nu = nu_p(&iterate_h(2, &[g], &[b]).unwrap()).unwrap();
        let expected = g * (4.0 * b).sin() * (-2.0 * g * g).exp();
        assert!((nu - expected).abs() < 1e-14, "{nu} vs {expected}");
    }

    #[test]
    fn identity_holds_at_depth_three() {
        let c = check_tree_identity(3, &[0.2, -0.4, 0.3], &[0.5, 0.1, -0.2]).unwrap();
        assert!(c.abs_diff < 1e-10, "{c:?}");
    }

    #[test]
    fn fixed_point_after_p_steps() {
        let st = iterate_h(2, &[0.3, 0.5], &[0.4, 0.2]).unwrap();
        for m in 0..1u32 << 5 {
            assert!((st.h(3, m) - st.h(2, m)).norm() < 1e-12);
        }
        // G^{(p-1)} and G^{(p)} differ only through row and column 0
        for j in -2..=2 {
            for k in -2..=2 {
                if j != 0 && k != 0 {
                    assert!((st.entry(1, j, k) - st.entry(2, j, k)).norm() < 1e-12);
                }
            }
        }
    }

    fn params() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=3).prop_flat_map(|p| (prop::collection::vec(-1.0..1.0f64, p), prop::collection::vec(-1.5..1.5f64, p)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn weight_is_half_the_amplitude((_g, b) in params()) {
            let p = b.len();
            for m in 0..1u32 << (2 * p + 1) {
                let f = f_weight(&b, m);
                prop_assert!((f - amplitude_of(&b, hat(p, m)) * 0.5).norm() < 1e-14);
            }
        }

        #[test]
        fn h_symmetries((g, b) in params(), q in 2usize..=4) {
            let st = iterate_h(q, &g, &b).unwrap();
            let p = st.p;
            let full = (1u32 << (2 * p + 1)) - 1;
            let centre = 1u32 << tree_bit(p, 0);
            for m in 0..=p {
                for a in 0..=full {
                    let h = st.h(m, a);
                    prop_assert!((h - st.h(m, a ^ full)).norm() < 1e-12);
                    prop_assert!((h - st.h(m, a ^ centre)).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn identity_on_random_angles((g, b) in params(), q in 2usize..=4) {
            let c = check_tree_identity(q, &g, &b).unwrap();
            prop_assert!(c.abs_diff < 1e-10, "{:?}", c);
        }
    }
}
