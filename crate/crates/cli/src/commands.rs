use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use spinqaoa_core::oracle::{exact_moment_sum, monte_carlo_moment, ExactSumOptions, MonteCarloOptions};
use spinqaoa_core::sce::{compute_moments_reference, evaluate, solve_reference_with, SolverOptions};
use spinqaoa_core::wellplayed::{
    build_hq, canonicalize, check_well_played, finite_multinomial_sum, solve_generic_sce, solve_natural_sce, CanonicalPolynomial,
    NaturalPolynomial, NaturalTerm, ProperSet, DEFAULT_DEGREE_CAP,
};
use spinqaoa_core::{
    check_tree_identity, optimize, optimize_ladder, solve_fast, BasisTables, Complex64, Ensemble, OptimizeOptions, Partition,
};

use crate::config::RunConfig;
use crate::emit::Emitter;
use crate::CliError;

pub const COMMANDS: [&str; 8] = ["vp", "tree", "universality", "oracle-sum", "oracle-sim", "optimize", "wellplayed", "genmulti"];

pub fn run(cfg: &RunConfig, command: &str, em: &mut Emitter) -> Result<(), CliError> {
    match command {
        "vp" => vp(cfg, em),
        "tree" => tree(cfg, em),
        "universality" => universality(cfg, em),
        "oracle-sum" => oracle_sum(cfg, em),
        "oracle-sim" => oracle_sim(cfg, em),
        "optimize" => run_optimize(cfg, em),
        "wellplayed" => wellplayed(cfg, em),
        "genmulti" => genmulti(cfg, em),
        other => Err(CliError::Usage(format!("unknown command '{other}'; expected one of {}", COMMANDS.join(", ")))),
    }
}

fn optimizer_options(cfg: &RunConfig) -> OptimizeOptions {
    OptimizeOptions { starts: cfg.starts.unwrap_or(16), seed: cfg.seed(), ..Default::default() }
}

/// Explicit angles, or the optimum for `ensemble` when `--optimize` is set.
fn angles(cfg: &RunConfig, p: usize, ensemble: &Ensemble, em: &mut Emitter) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    if !cfg.optimize {
        return cfg.angles(p);
    }
    let r = optimize(p, ensemble, &optimizer_options(cfg))?;
    em.emit("optimum", &summary(&r))?;
    Ok((r.best_gamma, r.best_beta))
}

fn summary(r: &spinqaoa_core::OptimizeResult) -> serde_json::Value {
    json!({
        "p": r.p,
        "best_gamma": r.best_gamma,
        "best_beta": r.best_beta,
        "best_value": r.best_value,
        "evaluations": r.evaluations,
        "failed_evaluations": r.failed_evaluations,
        "starts": r.starts,
    })
}

fn vp(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let ens = cfg.ensemble()?;
    let (gamma, beta) = angles(cfg, p, &ens, em)?;
    let report = if cfg.reference {
        let tables = BasisTables::new(&gamma, &beta)?;
        let opts = SolverOptions { work_cap: cfg.budget(SolverOptions::default().work_cap)?, ..Default::default() };
        let sol = solve_reference_with(&tables, &ens, &opts)?;
        compute_moments_reference(&sol, &tables, &ens)?
    } else {
        evaluate(&gamma, &beta, &ens)?
    };
    em.emit("vp", &report)
}

fn tree(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let q = cfg.q.unwrap_or(2);
    let ens = Ensemble::pure_gaussian(q);
    let (gamma, beta) = angles(cfg, p, &ens, em)?;
    em.emit("tree", &check_tree_identity(q, &gamma, &beta)?)
}

fn universality(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let q = cfg.q.unwrap_or(2);
    let ladder = if cfg.d_ladder.is_empty() { vec![1e2, 1e4, 1e6] } else { cfg.d_ladder.clone() };
    let gauss = Ensemble::pure_gaussian(q);
    let (gamma, beta) = angles(cfg, p, &gauss, em)?;
    let v_gauss = evaluate(&gamma, &beta, &gauss)?.v_p;
    let rows: Vec<(f64, f64)> = ladder
        .par_iter()
        .map(|&d| {
            let er = Ensemble::pure_er(q, d)?;
            Ok((d, evaluate(&gamma, &beta, &er)?.v_p))
        })
        .collect::<Result<_, CliError>>()?;
    let mut errors = Vec::with_capacity(rows.len());
    for (d, v_er) in rows {
        let err = (v_er - v_gauss).abs();
        errors.push(err);
        em.emit("universality", &json!({ "p": p, "q": q, "d": d, "v_er": v_er, "v_gauss": v_gauss, "abs_err": err }))?;
    }
    let shrinking = errors.windows(2).all(|w| w[1] < w[0]);
    em.emit("universality-summary", &json!({ "p": p, "q": q, "monotone_shrinking": shrinking, "errors": errors }))
}

fn n_ladder(cfg: &RunConfig) -> Result<Vec<u32>, CliError> {
    if cfg.n.is_empty() || cfg.n.contains(&0) {
        return Err(CliError::Usage("--n needs one or more positive sizes".into()));
    }
    Ok(cfg.n.clone())
}

fn oracle_sum(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let ens = cfg.ensemble()?;
    let (gamma, beta) = angles(cfg, p, &ens, em)?;
    let limit = evaluate(&gamma, &beta, &ens)?.v_p;
    let opts = ExactSumOptions { work_cap: cfg.budget(ExactSumOptions::default().work_cap)?, ..Default::default() };
    for n in n_ladder(cfg)? {
        let r = exact_moment_sum(&gamma, &beta, &ens, n, &opts)?;
        let mut v = serde_json::to_value(&r)?;
        v["limit_v_p"] = json!(limit);
        v["abs_err"] = json!((r.first.re - limit).abs());
        em.emit("oracle-sum", &v)?;
    }
    Ok(())
}

fn oracle_sim(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let ens = cfg.ensemble()?;
    let (gamma, beta) = angles(cfg, p, &ens, em)?;
    let limit = evaluate(&gamma, &beta, &ens)?.v_p;
    let instances = cfg.instances.unwrap_or(200);
    let mut opts = MonteCarloOptions::default();
    if let Some(b) = cfg.budget_ops {
        opts.sample_cap = cfg.budget(b)? as usize;
    }
    for n in n_ladder(cfg)? {
        let r = monte_carlo_moment(&ens, n as usize, &gamma, &beta, instances, cfg.seed(), &opts)?;
        em.emit(
            "oracle-sim",
            &json!({
                "n": r.n,
                "instances": r.instances,
                "seed": r.seed,
                "mean": r.mean,
                "stderr": r.stderr,
                "variance": r.variance,
                "limit_v_p": limit,
                "z_score": (r.mean - limit) / r.stderr,
            }),
        )?;
    }
    Ok(())
}

fn run_optimize(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let ens = cfg.ensemble()?;
    let opts = optimizer_options(cfg);
    let results = if cfg.ladder { optimize_ladder(p, &ens, &opts)? } else { vec![optimize(p, &ens, &opts)?] };
    for r in &results {
        for t in &r.trace {
            em.emit(
                "evaluation",
                &json!({ "p": r.p, "start": t.start, "gamma": t.gamma, "beta": t.beta, "value": t.value, "error": t.error }),
            )?;
        }
        em.emit("optimum", &summary(r))?;
    }
    Ok(())
}

type Kernel = Box<dyn Fn(f64) -> f64 + Sync>;

fn kernel(cfg: &RunConfig) -> Result<(String, Kernel), CliError> {
    if cfg.odd {
        return Ok(("odd:lambda".into(), Box::new(|l| l)));
    }
    let fam = cfg.family()?;
    Ok((fam.label(), Box::new(move |l| fam.g(l))))
}

fn wellplayed(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = cfg.require_p()?;
    let (gamma, beta) = if cfg.gamma.is_empty() && cfg.beta.is_empty() { (vec![0.3; p], vec![PI / 8.0; p]) } else { cfg.angles(p)? };
    let tables = BasisTables::new(&gamma, &beta)?;
    let set = ProperSet::from_tables(&tables);
    if let Some(path) = &cfg.poly {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let poly = CanonicalPolynomial::from_json(&text)?;
        let report = check_well_played(&poly, &set);
        em.emit("wellplayed", &json!({ "p": p, "source": path.display().to_string(), "report": report }))?;
        return Ok(());
    }
    let q = cfg.q.unwrap_or(2);
    let (label, h) = kernel(cfg)?;
    let hq = build_hq(&tables, q, &h, cfg.budget(1e7)?)?;
    let canonical = canonicalize(&hq, &set, DEFAULT_DEGREE_CAP)?;
    let report = check_well_played(&canonical, &set);
    let mut record = json!({
        "p": p,
        "q": q,
        "kernel": label,
        "gamma": gamma,
        "beta": beta,
        "pass": report.pass,
        "terms": report.terms,
        "violation_count": report.violations.len(),
        "violations": report.violations.iter().take(10).collect::<Vec<_>>(),
        "max_tau_len": report.max_tau_len,
        "max_eta_len": report.max_eta_len,
        "max_nu_len": report.max_nu_len,
    });
    if report.pass {
        let generic = solve_generic_sce(&set, &tables.q_amp, &canonical)?;
        record["sce_residual"] = json!(generic.residual);
        if !cfg.odd {
            let ens = Ensemble::pure(q, cfg.family()?);
            let fast = solve_fast(&tables, &ens)?;
            let diff = generic.w.iter().zip(&fast.w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            record["max_abs_diff_vs_hypercube"] = json!(diff);
        }
    }
    em.emit("wellplayed", &record)
}

/// Input for `genmulti`: a proper set with amplitudes, the exponent
/// polynomial `P` and the observable `f`, both in natural variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiProblem {
    pub set: ProperSet,
    pub q: Vec<[f64; 2]>,
    pub p: Vec<NaturalTerm>,
    pub f: Vec<NaturalTerm>,
}

impl MultiProblem {
    /// `A0 = {c}`, `D = {d}`, `Q = (1, 0.3i, −0.3i)`, `P = 0.5 τ_d ν_c`,
    /// `f = ω_d − ω_d̄`.
    pub fn toy() -> Self {
        let set = ProperSet::new(vec![Partition::A0, Partition::D, Partition::DBar], vec![0, 2, 1], vec![1]).expect("toy set");
        let term = |omega: Vec<usize>, re: f64| NaturalTerm { omega, re, im: 0.0 };
        MultiProblem {
            set,
            q: vec![[1.0, 0.0], [0.0, 0.3], [0.0, -0.3]],
            p: vec![term(vec![0, 1], 0.5), term(vec![0, 2], 0.5)],
            f: vec![term(vec![1], 1.0), term(vec![2], -1.0)],
        }
    }
}

fn genmulti(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let problem = match &cfg.problem {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<MultiProblem>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => MultiProblem::toy(),
    };
    let set = problem.set.clone().validated()?;
    let q: Vec<Complex64> = problem.q.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let p_poly = NaturalPolynomial::from_terms(&problem.p);
    let f_poly = NaturalPolynomial::from_terms(&problem.f);
    let w = solve_natural_sce(&set, &q, &p_poly)?;
    let limit = f_poly.eval(&w.w);
    let ns = if cfg.n.is_empty() { vec![50, 100, 200, 400] } else { n_ladder(cfg)? };
    let budget = cfg.budget(1e8)?;
    for n in ns {
        let s = finite_multinomial_sum(n, &set, &q, &p_poly, &f_poly, budget)?;
        em.emit(
            "genmulti",
            &json!({
                "n": n,
                "re": s.value.re,
                "im": s.value.im,
                "limit_re": limit.re,
                "limit_im": limit.im,
                "abs_err": (s.value - limit).norm(),
                "compositions": s.compositions,
                "precision_bits": s.precision_bits,
                "cancellation_bits": s.cancellation_bits,
                "wall_time_ms": s.wall_time_ms,
            }),
        )?;
    }
    Ok(())
}
