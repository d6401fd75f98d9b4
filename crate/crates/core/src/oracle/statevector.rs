use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{instance_rng, sample_cost, Ensemble, InstanceSample, DEFAULT_SAMPLE_CAP};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Diagonal of `C(z) = Σ_q c_q Σ J z⋯z` over all `2^n` basis states; bit `i`
/// set means `z_i = -1`.
fn cost_diagonal(cost: &[(f64, InstanceSample)], n: usize) -> Vec<f64> {
    (0..1usize << n)
        .into_par_iter()
        .map(|z| {
            let spins: Vec<f64> = (0..n).map(|i| if (z >> i) & 1 == 0 { 1.0 } else { -1.0 }).collect();
            cost.iter().map(|(c, inst)| c * inst.energy(&spins)).sum()
        })
        .collect()
}

/// `e^{-iβ Σ X_j}` applied qubit by qubit.
fn apply_mixer(psi: &mut [Complex64], n: usize, beta: f64) {
    let (s, c) = beta.sin_cos();
    let ms = Complex64::new(0.0, -s);
    for j in 0..n {
        let h = 1usize << j;
        psi.par_chunks_mut(2 * h).for_each(|block| {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x * c + y * ms;
                *b = x * ms + y * c;
            }
        });
    }
}

/// `⟨γ,β| C/n |γ,β⟩` for one instance, starting from `|+⟩^n` and applying
/// `e^{-iγ_r C}` then `e^{-iβ_r B}` for `r = 1..p`.
pub fn statevector_expectation(cost: &[(f64, InstanceSample)], gamma: &[f64], beta: &[f64], max_qubits: usize) -> Result<f64> {
    let n = cost.first().map(|(_, s)| s.n).ok_or_else(|| Error::Shape("empty cost".into()))?;
    if cost.iter().any(|(_, s)| s.n != n) {
        return Err(Error::Shape("instances disagree on n".into()));
    }
    if gamma.len() != beta.len() {
        return Err(Error::Shape(format!("{} gammas and {} betas", gamma.len(), beta.len())));
    }
    if n > max_qubits {
        return Err(Error::capacity("statevector qubits", n as f64, max_qubits as f64));
    }
    let diag = cost_diagonal(cost, n);
    let amp = (0.5f64).powf(n as f64 / 2.0);
    let mut psi = vec![Complex64::new(amp, 0.0); 1 << n];
    for (&g, &b) in gamma.iter().zip(beta) {
        psi.par_iter_mut().zip(diag.par_iter()).for_each(|(a, &cz)| *a *= Complex64::from_polar(1.0, -g * cz));
        apply_mixer(&mut psi, n, b);
    }
    let e: f64 = psi.par_iter().zip(diag.par_iter()).map(|(a, &cz)| a.norm_sqr() * cz).sum();
    Ok(e / n as f64)
}

#[derive(Clone, Debug)]
pub struct MonteCarloOptions {
    pub max_qubits: usize,
    pub sample_cap: usize,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions { max_qubits: DEFAULT_MAX_QUBITS, sample_cap: DEFAULT_SAMPLE_CAP }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloResult {
    pub n: usize,
    pub instances: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    pub values: Vec<f64>,
}

/// Sample mean of the per-instance expectation over `instances` draws.
/// Instance `k` uses its own ChaCha stream, so results do not depend on
/// thread scheduling.
pub fn monte_carlo_moment(
    ensemble: &Ensemble,
    n: usize,
    gamma: &[f64],
    beta: &[f64],
    instances: usize,
    seed: u64,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloResult> {
    if instances < 2 {
        return Err(Error::Domain("need at least two instances".into()));
    }
    if n > opts.max_qubits {
        return Err(Error::capacity("statevector qubits", n as f64, opts.max_qubits as f64));
    }
    let values: Vec<f64> = (0..instances as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = instance_rng(seed, k);
            let cost = sample_cost(ensemble, n, &mut rng, opts.sample_cap)?;
            statevector_expectation(&cost, gamma, beta, opts.max_qubits)
        })
        .collect::<Result<_>>()?;
    let m = instances as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Ok(MonteCarloResult { n, instances, seed, mean, stderr: (variance / m).sqrt(), variance, values })
}
