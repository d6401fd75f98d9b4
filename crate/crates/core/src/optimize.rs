//! Multi-start downhill-simplex maximization of `V_p(γ, β)`.
//!
//! Parameters are packed as `x = (γ_1..γ_p, β_1..β_p)`. Starting points are
//! a Halton sequence with a seeded Cranley–Patterson shift, scaled to
//! `[−1, 1]^{2p}`; every objective evaluation is kept in the trace.

use std::cell::RefCell;

use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{instance_rng, Ensemble};
use crate::error::{Error, Result};
use crate::sce::evaluate;

const PRIMES: [u8; 32] =
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131];

/// Cost reported to the simplex for a failed evaluation.
const FAILURE_PENALTY: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    pub starts: usize,
    pub seed: u64,
    pub initial_step: f64,
    /// Standard deviation of simplex values at which a start stops.
    pub value_tol: f64,
    pub max_iters: u64,
    /// `(coordinate, value)` pairs held fixed, indexing the packed vector.
    pub pinned: Vec<(usize, f64)>,
    /// Extra starting points tried before the low-discrepancy ones.
    pub warm_starts: Vec<Vec<f64>>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            starts: 16,
            seed: 0,
            initial_step: 0.1,
            value_tol: 1e-8,
            max_iters: 2000,
            pinned: Vec::new(),
            warm_starts: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub start: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeResult {
    pub p: usize,
    pub best_gamma: Vec<f64>,
    pub best_beta: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub starts: usize,
    pub trace: Vec<TracePoint>,
}

/// Shifted Halton points in `[−1, 1]^dim`.
pub fn start_points(dim: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim > PRIMES.len() {
        return Err(Error::capacity("Halton dimension", dim as f64, PRIMES.len() as f64));
    }
    let mut rng = instance_rng(seed, u64::MAX);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    Ok((1..=count).map(|k| (0..dim).map(|j| 2.0 * (halton::number(PRIMES[j], k) + shift[j]).fract() - 1.0).collect()).collect())
}

struct Objective<'a> {
    p: usize,
    ensemble: &'a Ensemble,
    free: &'a [usize],
    base: &'a [f64],
    start: usize,
    trace: &'a RefCell<Vec<TracePoint>>,
}

impl Objective<'_> {
    fn embed(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.base.to_vec();
        for (&i, &v) in self.free.iter().zip(y) {
            x[i] = v;
        }
        x
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, y: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        let x = self.embed(y);
        let (gamma, beta) = x.split_at(self.p);
        let outcome = evaluate(gamma, beta, self.ensemble).map(|r| r.v_p);
        let (value, error) = match outcome {
            Ok(v) if v.is_finite() => (Some(v), None),
            Ok(v) => (None, Some(format!("non-finite value {v}"))),
            Err(e) => (None, Some(e.to_string())),
        };
        self.trace.borrow_mut().push(TracePoint { start: self.start, gamma: gamma.to_vec(), beta: beta.to_vec(), value, error });
        Ok(value.map_or(FAILURE_PENALTY, |v| -v))
    }
}

fn run_start(
    p: usize,
    ensemble: &Ensemble,
    free: &[usize],
    base: &[f64],
    x0: &[f64],
    start: usize,
    opts: &OptimizeOptions,
) -> Result<Vec<TracePoint>> {
    let trace = RefCell::new(Vec::new());
    let objective = Objective { p, ensemble, free, base, start, trace: &trace };
    let y0: Vec<f64> = free.iter().map(|&i| x0[i]).collect();
    if y0.is_empty() {
        objective.cost(&y0).map_err(|e| Error::Evaluation(e.to_string()))?;
        return Ok(trace.into_inner());
    }
    let mut simplex = vec![y0.clone()];
    for k in 0..y0.len() {
        let mut v = y0.clone();
        v[k] += opts.initial_step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(opts.value_tol).map_err(|e| Error::Domain(e.to_string()))?;
    Executor::new(objective, solver).configure(|s| s.max_iters(opts.max_iters)).run().map_err(|e| Error::Evaluation(e.to_string()))?;
    Ok(trace.into_inner())
}

/// Maximizes `V_p` over `(γ, β)`. Starts run in parallel; the result is
/// independent of scheduling.
pub fn optimize(p: usize, ensemble: &Ensemble, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    if p == 0 {
        return Err(Error::Domain("p must be at least 1".into()));
    }
    let dim = 2 * p;
    let mut base = vec![0.0; dim];
    let mut is_free = vec![true; dim];
    for &(i, v) in &opts.pinned {
        if i >= dim {
            return Err(Error::Shape(format!("pinned coordinate {i} outside 0..{dim}")));
        }
        base[i] = v;
        is_free[i] = false;
    }
    let free: Vec<usize> = (0..dim).filter(|&i| is_free[i]).collect();
    for w in &opts.warm_starts {
        if w.len() != dim {
            return Err(Error::Shape(format!("warm start of length {} for {dim} parameters", w.len())));
        }
    }
    let mut points = opts.warm_starts.clone();
    points.extend(start_points(dim, opts.starts, opts.seed)?);
    if points.is_empty() {
        return Err(Error::Domain("no starting points".into()));
    }
    let traces: Vec<Vec<TracePoint>> =
        points.par_iter().enumerate().map(|(k, x0)| run_start(p, ensemble, &free, &base, x0, k, opts)).collect::<Result<_>>()?;
    let trace: Vec<TracePoint> = traces.into_iter().flatten().collect();
    let best = trace
        .iter()
        .filter_map(|t| t.value.map(|v| (v, t)))
        .fold(None::<(f64, &TracePoint)>, |acc, (v, t)| match acc {
            Some((bv, _)) if bv >= v => acc,
            _ => Some((v, t)),
        })
        .ok_or_else(|| Error::Evaluation("every evaluation failed".into()))?;
    let (best_value, best_point) = best;
    Ok(OptimizeResult {
        p,
        best_gamma: best_point.gamma.clone(),
        best_beta: best_point.beta.clone(),
        best_value,
        evaluations: trace.len(),
        failed_evaluations: trace.iter().filter(|t| t.value.is_none()).count(),
        starts: points.len(),
        trace,
    })
}

/// Optimizes `p = 1..=p_max` in turn, seeding level `p` with the level
/// `p − 1` optimum extended by `γ_p = β_p = 0`.
pub fn optimize_ladder(p_max: usize, ensemble: &Ensemble, opts: &OptimizeOptions) -> Result<Vec<OptimizeResult>> {
    let mut out: Vec<OptimizeResult> = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let mut level = opts.clone();
        if let Some(prev) = out.last() {
            let mut x = prev.best_gamma.clone();
            x.push(0.0);
            x.extend(&prev.best_beta);
            x.push(0.0);
            level.warm_starts.push(x);
        }
        out.push(optimize(p, ensemble, &level)?);
    }
    Ok(out)
}
