//! Walsh–Hadamard transform and XOR convolution on the configuration hypercube.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blocks at most this long are transformed by one thread start to finish.
const LOCAL_BLOCK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumDomain {
    Config,
    Walsh,
}

/// A vector over `A` tagged with the domain it lives in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypercubeSpectrum {
    pub values: Vec<Complex64>,
    pub domain: SpectrumDomain,
}

impl HypercubeSpectrum {
    pub fn config(values: Vec<Complex64>) -> Self {
        HypercubeSpectrum { values, domain: SpectrumDomain::Config }
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() || !n.trailing_zeros().is_multiple_of(2) {
        return Err(Error::Shape(format!("length {n} is not a power of 4")));
    }
    Ok(())
}

fn butterfly_stages(data: &mut [Complex64], from: usize) {
    let n = data.len();
    let mut h = from;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// Unnormalized in-place transform, `f̂(s) = Σ_a (-1)^{popcount(a & s)} f(a)`.
/// The length must be a power of two.
pub fn fwht_in_place(data: &mut [Complex64]) {
    let n = data.len();
    if n <= LOCAL_BLOCK {
        butterfly_stages(data, 1);
        return;
    }
    data.par_chunks_mut(LOCAL_BLOCK).for_each(|c| butterfly_stages(c, 1));
    let mut h = LOCAL_BLOCK;
    while h < n {
        data.par_chunks_mut(2 * h).for_each(|block| {
            let (lo, hi) = block.split_at_mut(h);
            lo.par_chunks_mut(LOCAL_BLOCK).zip(hi.par_chunks_mut(LOCAL_BLOCK)).for_each(|(l, r)| {
                for (x, y) in l.iter_mut().zip(r.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = a + b;
                    *y = a - b;
                }
            });
        });
        h *= 2;
    }
}

pub fn wht(f: &HypercubeSpectrum) -> Result<HypercubeSpectrum> {
    check_len(f.values.len())?;
    if f.domain != SpectrumDomain::Config {
        return Err(Error::Domain("forward transform expects a configuration-domain vector".into()));
    }
    let mut values = f.values.clone();
    fwht_in_place(&mut values);
    Ok(HypercubeSpectrum { values, domain: SpectrumDomain::Walsh })
}

pub fn wht_inverse(f: &HypercubeSpectrum) -> Result<HypercubeSpectrum> {
    check_len(f.values.len())?;
    if f.domain != SpectrumDomain::Walsh {
        return Err(Error::Domain("inverse transform expects a Walsh-domain vector".into()));
    }
    let mut values = f.values.clone();
    fwht_in_place(&mut values);
    let scale = 1.0 / values.len() as f64;
    values.par_iter_mut().for_each(|v| *v *= scale);
    Ok(HypercubeSpectrum { values, domain: SpectrumDomain::Config })
}

/// `(f ⊛ g)(x) = Σ_y f(y) g(x ⊕ y)`.
pub fn xor_convolve(f: &[Complex64], g: &[Complex64]) -> Result<Vec<Complex64>> {
    if f.len() != g.len() {
        return Err(Error::Shape(format!("lengths {} and {} differ", f.len(), g.len())));
    }
    check_len(f.len())?;
    let mut fh = f.to_vec();
    let mut gh = g.to_vec();
    fwht_in_place(&mut fh);
    fwht_in_place(&mut gh);
    let scale = 1.0 / f.len() as f64;
    fh.par_iter_mut().zip(gh.par_iter()).for_each(|(a, b)| *a *= *b * scale);
    fwht_in_place(&mut fh);
    Ok(fh)
}

/// `k`-fold self-convolution; `k = 0` gives the delta at the identity.
pub fn xor_power(f: &[Complex64], k: u32) -> Result<Vec<Complex64>> {
    check_len(f.len())?;
    let mut fh = f.to_vec();
    fwht_in_place(&mut fh);
    let scale = 1.0 / f.len() as f64;
    fh.par_iter_mut().for_each(|a| *a = a.powu(k) * scale);
    fwht_in_place(&mut fh);
    Ok(fh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_convolve(f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        (0..f.len()).map(|x| (0..f.len()).map(|y| f[y] * g[x ^ y]).sum()).collect()
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<Complex64>> {
        (1u32..=4).prop_flat_map(|p| {
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << (2 * p))
                .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
        })
    }

    #[test]
    fn rejects_bad_lengths() {
        let v = HypercubeSpectrum::config(vec![Complex64::default(); 8]);
        assert!(matches!(wht(&v), Err(Error::Shape(_))));
        let w = HypercubeSpectrum { values: vec![Complex64::default(); 16], domain: SpectrumDomain::Walsh };
        assert!(matches!(wht(&w), Err(Error::Domain(_))));
    }

    #[test]
    fn large_parallel_path_matches_sequential() {
        let n = 1 << 14;
        let v: Vec<Complex64> = (0..n).map(|k| Complex64::new((k % 7) as f64, (k % 3) as f64)).collect();
        let mut a = v.clone();
        fwht_in_place(&mut a);
        let mut b = v;
        butterfly_stages(&mut b, 1);
        assert_eq!(a, b);
    }

    #[test]
    fn power_zero_is_delta() {
        let f = vec![Complex64::new(0.3, 0.1); 16];
        let d = xor_power(&f, 0).unwrap();
        assert!((d[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(d[1..].iter().all(|z| z.norm() < 1e-15));
    }

    proptest! {
        #[test]
        fn inverse_round_trip(v in vec_strategy()) {
            let s = HypercubeSpectrum::config(v.clone());
            let back = wht_inverse(&wht(&s).unwrap()).unwrap();
            for (a, b) in back.values.iter().zip(&v) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn convolution_matches_naive(f in vec_strategy(), seed in any::<u64>()) {
            let g: Vec<Complex64> = (0..f.len())
                .map(|k| Complex64::new(((k as u64 ^ seed) % 17) as f64 / 17.0, 0.25))
                .collect();
            let fast = xor_convolve(&f, &g).unwrap();
            for (a, b) in fast.iter().zip(naive_convolve(&f, &g)) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn power_two_is_self_convolution(f in vec_strategy()) {
            let sq = xor_power(&f, 2).unwrap();
            for (a, b) in sq.iter().zip(naive_convolve(&f, &f)) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
