//! Self-consistent equation for the limiting amplitudes `W_a` and the
//! resulting energy `V_p`.
//!
//! `W_a = Q_a exp[Σ_q q Σ_{b_1..b_{q-1}} g_q(c_q Φ_{a b_1⋯b_{q-1}}) W_{b_1}⋯W_{b_{q-1}}]`
//! with `W = Q` on rank-0 configurations and `W_{ā} = -W_a`. The exponent for
//! a rank-`ℓ` configuration depends only on lower-rank amplitudes, so the
//! equation is solved exactly either in `≻` order (reference) or by `p`
//! rank-synchronous Jacobi sweeps (fast).

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisTables, Partition};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::transform::fwht_in_place;

/// Imaginary part of `V_p` above this is reported as unhealthy.
pub const IMAG_LEAK_ERROR: f64 = 1e-8;
/// Imaginary part of `V_p` above this is flagged in the report.
pub const IMAG_LEAK_WARN: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Reference,
    Fast,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub residual_tol: f64,
    /// Cap on the estimated number of tuple visits for the reference path.
    pub work_cap: f64,
    /// Sweeps allowed beyond `p` before giving up.
    pub extra_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { residual_tol: 1e-9, work_cap: 4e9, extra_sweeps: 2 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SceSolution {
    pub w: Vec<Complex64>,
    pub residual: f64,
    pub sweeps: usize,
    pub method: SolveMethod,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderContribution {
    pub q: usize,
    pub v: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentReport {
    pub p: usize,
    pub q_max: usize,
    pub c: Vec<f64>,
    pub family: String,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub v_p: f64,
    pub v_p_imag_leak: f64,
    pub leak_warning: bool,
    pub second_moment: f64,
    pub per_q: Vec<OrderContribution>,
    pub sum_w: Complex64,
    pub residual: f64,
    pub method: SolveMethod,
    pub sweeps: usize,
    pub wall_time_ms: f64,
}

/// `g_q(c_q Φ_x)` and `g'_q(c_q Φ_x)` over all `x` for one order.
struct Kernel {
    q: usize,
    c: f64,
    g: Vec<f64>,
    gp: Vec<f64>,
}

fn kernels(tables: &BasisTables, ensemble: &Ensemble) -> Result<Vec<Kernel>> {
    ensemble
        .active()
        .map(|(q, c, fam)| {
            let g: Vec<f64> = tables.phi.par_iter().map(|&phi| fam.g(c * phi)).collect();
            let gp: Vec<f64> = tables.phi.par_iter().map(|&phi| fam.g_prime(c * phi)).collect();
            if g.iter().chain(&gp).any(|x| !x.is_finite()) {
                return Err(Error::Evaluation(format!("{} produced a non-finite value", fam.label())));
            }
            Ok(Kernel { q, c, g, gp })
        })
        .collect()
}

/// Sets rank-0 entries to `Q` and bars to minus their partner.
fn impose_structure(tables: &BasisTables, w: &mut [Complex64]) {
    for a in 0..w.len() {
        match tables.partition[a] {
            Partition::A0 => w[a] = tables.q_amp[a],
            Partition::DBar => w[a] = -w[tables.bar[a] as usize],
            Partition::D => {}
        }
    }
}

/// Walsh-domain exponent operator `Σ_q q Ĝ_q ŵ^{q-1}`.
struct FastExponent {
    spectra: Vec<(usize, Vec<Complex64>)>,
}

impl FastExponent {
    fn new(ks: &[Kernel]) -> Self {
        let spectra = ks
            .iter()
            .map(|k| {
                let mut s: Vec<Complex64> = k.g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                fwht_in_place(&mut s);
                (k.q, s)
            })
            .collect();
        FastExponent { spectra }
    }

    fn eval(&self, w: &[Complex64]) -> Vec<Complex64> {
        let n = w.len();
        let mut wh = w.to_vec();
        fwht_in_place(&mut wh);
        let scale = 1.0 / n as f64;
        let mut acc = vec![Complex64::default(); n];
        acc.par_iter_mut().enumerate().for_each(|(s, out)| {
            let mut t = Complex64::default();
            for (q, gh) in &self.spectra {
                t += gh[s] * wh[s].powu(*q as u32 - 1) * (*q as f64);
            }
            *out = t * scale;
        });
        fwht_in_place(&mut acc);
        acc
    }
}

fn residual_of(tables: &BasisTables, w: &[Complex64], exponent: &[Complex64]) -> f64 {
    w.par_iter().enumerate().map(|(a, wa)| (wa - tables.q_amp[a] * exponent[a].exp()).norm()).reduce(|| 0.0, f64::max)
}

pub fn solve_fast(tables: &BasisTables, ensemble: &Ensemble) -> Result<SceSolution> {
    solve_fast_with(tables, ensemble, &SolverOptions::default())
}

pub fn solve_fast_with(tables: &BasisTables, ensemble: &Ensemble, opts: &SolverOptions) -> Result<SceSolution> {
    let start = Instant::now();
    let ks = kernels(tables, ensemble)?;
    let op = FastExponent::new(&ks);
    let mut w = tables.q_amp.clone();
    let max_sweeps = tables.p + opts.extra_sweeps;
    let mut sweeps = 0;
    loop {
        let e = op.eval(&w);
        if sweeps >= tables.p {
            let r = residual_of(tables, &w, &e);
            if r.is_nan() {
                return Err(Error::NumericalHealth("residual is NaN".into()));
            }
            if r <= opts.residual_tol {
                return Ok(SceSolution {
                    w,
                    residual: r,
                    sweeps,
                    method: SolveMethod::Fast,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                });
            }
            if sweeps >= max_sweeps {
                return Err(Error::Convergence { sweeps, residual: r });
            }
        }
        w.par_iter_mut().zip(tables.q_amp.par_iter()).zip(e.par_iter()).for_each(|((wa, q), ea)| *wa = q * ea.exp());
        impose_structure(tables, &mut w);
        sweeps += 1;
    }
}

/// Visits every `(q-1)`-tuple over the support of `w`, passing the XOR of the
/// tuple and the product of its amplitudes.
fn for_each_tuple(support: &[(usize, Complex64)], depth: usize, x: usize, prod: Complex64, f: &mut impl FnMut(usize, Complex64)) {
    if depth == 0 {
        f(x, prod);
        return;
    }
    for &(b, wb) in support {
        for_each_tuple(support, depth - 1, x ^ b, prod * wb, f);
    }
}

fn support_of(w: &[Complex64]) -> Vec<(usize, Complex64)> {
    w.iter().enumerate().filter(|(_, z)| z.norm() != 0.0).map(|(a, z)| (a, *z)).collect()
}

fn reference_exponent(ks: &[Kernel], support: &[(usize, Complex64)], a: usize) -> Complex64 {
    let mut acc = ComplexSum::new();
    for k in ks {
        let mut part = ComplexSum::new();
        for_each_tuple(support, k.q - 1, a, Complex64::new(1.0, 0.0), &mut |x, prod| part.add(prod * k.g[x]));
        acc.add(part.value() * k.q as f64);
    }
    acc.value()
}

fn reference_work(tables: &BasisTables, ensemble: &Ensemble) -> f64 {
    let n = tables.len() as f64;
    ensemble.active().map(|(q, _, _)| 2.0 * tables.d_order.len() as f64 * n.powi(q as i32 - 1)).sum()
}

/// Solves in `≻` order using the full tuple sum with not-yet-solved entries
/// held at zero. Exponential in `q`; intended as an oracle for small `p`.
pub fn solve_reference(tables: &BasisTables, ensemble: &Ensemble) -> Result<SceSolution> {
    solve_reference_with(tables, ensemble, &SolverOptions::default())
}

pub fn solve_reference_with(tables: &BasisTables, ensemble: &Ensemble, opts: &SolverOptions) -> Result<SceSolution> {
    let start = Instant::now();
    let work = reference_work(tables, ensemble);
    if work > opts.work_cap {
        return Err(Error::capacity("reference solver tuple visits", work, opts.work_cap));
    }
    let ks = kernels(tables, ensemble)?;
    let mut w = vec![Complex64::default(); tables.len()];
    impose_structure(tables, &mut w);
    for &a in &tables.d_order {
        let a = a as usize;
        let support = support_of(&w);
        let e = reference_exponent(&ks, &support, a);
        w[a] = tables.q_amp[a] * e.exp();
        w[tables.bar[a] as usize] = -w[a];
    }
    let support = support_of(&w);
    let residual = tables
        .d_order
        .iter()
        .map(|&a| {
            let a = a as usize;
            (w[a] - tables.q_amp[a] * reference_exponent(&ks, &support, a).exp()).norm()
        })
        .fold(0.0, f64::max);
    if residual.is_nan() || residual > opts.residual_tol {
        return Err(Error::Convergence { sweeps: 1, residual });
    }
    Ok(SceSolution { w, residual, sweeps: 1, method: SolveMethod::Reference, wall_time_ms: start.elapsed().as_secs_f64() * 1e3 })
}

fn finish_report(
    tables: &BasisTables,
    ensemble: &Ensemble,
    solution: &SceSolution,
    per_q: Vec<(usize, Complex64)>,
) -> Result<MomentReport> {
    let mut total = ComplexSum::new();
    for (_, v) in &per_q {
        total.add(*v);
    }
    let v = total.value();
    if !v.re.is_finite() {
        return Err(Error::NumericalHealth(format!("V_p is not finite ({v})")));
    }
    let leak = v.im.abs();
    if leak > IMAG_LEAK_ERROR {
        return Err(Error::NumericalHealth(format!("imaginary leak {leak:.3e} in V_p")));
    }
    let sum_w = {
        let mut s = ComplexSum::new();
        solution.w.iter().for_each(|z| s.add(*z));
        s.value()
    };
    Ok(MomentReport {
        p: tables.p,
        q_max: ensemble.q_max(),
        c: ensemble.weights().to_vec(),
        family: ensemble.label(),
        gamma: tables.gamma.clone(),
        beta: tables.beta.clone(),
        v_p: v.re,
        v_p_imag_leak: leak,
        leak_warning: leak > IMAG_LEAK_WARN,
        second_moment: v.re * v.re,
        per_q: per_q.into_iter().map(|(q, v)| OrderContribution { q, v: v.re }).collect(),
        sum_w,
        residual: solution.residual,
        method: solution.method,
        sweeps: solution.sweeps,
        wall_time_ms: solution.wall_time_ms,
    })
}

/// `V_p = -Σ_q i c_q Σ_{a_1..a_q} g'_q(c_q Φ_{a_1⋯a_q}) W_{a_1}⋯W_{a_q}`,
/// evaluated through `q`-fold XOR self-convolutions of `W`.
pub fn compute_moments(solution: &SceSolution, tables: &BasisTables, ensemble: &Ensemble) -> Result<MomentReport> {
    if solution.w.len() != tables.len() {
        return Err(Error::Shape("solution and tables disagree in size".into()));
    }
    let ks = kernels(tables, ensemble)?;
    let mut wh = solution.w.clone();
    fwht_in_place(&mut wh);
    let scale = 1.0 / wh.len() as f64;
    let per_q = ks
        .iter()
        .map(|k| {
            let mut m: Vec<Complex64> = wh.par_iter().map(|z| z.powu(k.q as u32) * scale).collect();
            fwht_in_place(&mut m);
            let mut s = ComplexSum::new();
            for (mx, gp) in m.iter().zip(&k.gp) {
                s.add(mx * gp);
            }
            (k.q, Complex64::new(0.0, -k.c) * s.value())
        })
        .collect();
    finish_report(tables, ensemble, solution, per_q)
}

/// Same quantity by direct enumeration of `q`-tuples.
pub fn compute_moments_reference(solution: &SceSolution, tables: &BasisTables, ensemble: &Ensemble) -> Result<MomentReport> {
    let ks = kernels(tables, ensemble)?;
    let support = support_of(&solution.w);
    let per_q = ks
        .iter()
        .map(|k| {
            let mut s = ComplexSum::new();
            for_each_tuple(&support, k.q, 0, Complex64::new(1.0, 0.0), &mut |x, prod| s.add(prod * k.gp[x]));
            (k.q, Complex64::new(0.0, -k.c) * s.value())
        })
        .collect();
    finish_report(tables, ensemble, solution, per_q)
}

/// Tables, fast solve and moments in one call.
pub fn evaluate(gamma: &[f64], beta: &[f64], ensemble: &Ensemble) -> Result<MomentReport> {
    let tables = BasisTables::new(gamma, beta)?;
    let sol = solve_fast(&tables, ensemble)?;
    compute_moments(&sol, &tables, ensemble)
}

pub fn evaluate_with(gamma: &[f64], beta: &[f64], ensemble: &Ensemble, method: SolveMethod, max_level: usize) -> Result<MomentReport> {
    let tables = BasisTables::with_max_level(gamma, beta, max_level)?;
    match method {
        SolveMethod::Fast => {
            let sol = solve_fast(&tables, ensemble)?;
            compute_moments(&sol, &tables, ensemble)
        }
        SolveMethod::Reference => {
            let sol = solve_reference(&tables, ensemble)?;
            compute_moments_reference(&sol, &tables, ensemble)
        }
    }
}
