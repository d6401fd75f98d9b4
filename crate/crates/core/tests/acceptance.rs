//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances are fixed below.

use std::f64::consts::{FRAC_PI_8, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use spinqaoa_core::ensemble::instance_rng;
use spinqaoa_core::oracle::{exact_moment_sum, monte_carlo_moment, ExactSumOptions, MonteCarloOptions};
use spinqaoa_core::sce::{compute_moments_reference, evaluate};
use spinqaoa_core::wellplayed::{
    build_hq, canonicalize, check_well_played, finite_multinomial_sum, solve_generic_sce, CanonicalPolynomial, NaturalPolynomial,
    ProperSet, DEFAULT_DEGREE_CAP,
};
use spinqaoa_core::{
    check_tree_identity, compute_moments, optimize, solve_fast, solve_reference, BasisTables, Complex64, Ensemble, Family, OptimizeOptions,
    Partition, SceSolution,
};

const IDENTITY_TOL: f64 = 1e-9;
const UNIVERSALITY_FACTOR: f64 = 10.0;
const SECOND_MOMENT_TOL: f64 = 1e-10;
const FINITE_N_FINAL_TOL: f64 = 0.01;
const FINITE_N_RATE_FACTOR: f64 = 2.0;
const MC_SIGMAS: f64 = 3.0;
const RESIDUAL_TOL: f64 = 1e-12;
const STRUCTURE_TOL: f64 = 1e-13;
const AGREEMENT_TOL: f64 = 1e-12;
const ZERO_TOL: f64 = 1e-14;
const OPTIMUM_TOL: f64 = 1e-6;
const TOY_TOL: f64 = 1e-3;
const P8_BUDGET: Duration = Duration::from_secs(10);
const P10_BUDGET: Duration = Duration::from_secs(300);

/// `V_1` of the pure 2-spin model with unit weight at `γ = 1/4`, `β = π/8`.
fn v1_reference() -> f64 {
    0.5 * (-0.25f64).exp()
}

/// Largest `V_1` of the same model, reached at `γ = 1/(2√2)`, `β = π/8`.
fn v1_optimum() -> f64 {
    (-0.5f64).exp() / SQRT_2
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_angles(rng: &mut impl Rng, p: usize) -> (Vec<f64>, Vec<f64>) {
    let g = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    (g, b)
}

fn identity_agreement() -> Outcome {
    let mut rng = instance_rng(31, 0);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for p in 1..=3 {
        for q in 2..=4 {
            for _ in 0..20 {
                let (g, b) = random_angles(&mut rng, p);
                match check_tree_identity(q, &g, &b) {
                    Ok(c) => worst = worst.max(c.abs_diff),
                    Err(e) => return outcome(false, format!("p={p} q={q}: {e}")),
                }
                cases += 1;
            }
        }
    }
    outcome(worst < IDENTITY_TOL, format!("max |V_p - sqrt2 nu_p(sqrt q gamma)| = {worst:.2e} over {cases} cases (tol {IDENTITY_TOL:.0e})"))
}

fn universality() -> Outcome {
    let params = [(vec![0.3], vec![0.4]), (vec![0.3, 0.2], vec![0.4, 0.1])];
    let mut lines = Vec::new();
    let mut pass = true;
    for q in [2, 4] {
        for (g, b) in &params {
            let gauss = match evaluate(g, b, &Ensemble::pure_gaussian(q)) {
                Ok(r) => r.v_p,
                Err(e) => return outcome(false, e.to_string()),
            };
            let mut err = Vec::new();
            for d in [1e2, 1e4, 1e6] {
                match Ensemble::pure_er(q, d).and_then(|e| evaluate(g, b, &e)) {
                    Ok(r) => err.push((r.v_p - gauss).abs()),
                    Err(e) => return outcome(false, e.to_string()),
                }
            }
            let ok = err[1] < err[0] / UNIVERSALITY_FACTOR && err[2] < err[1] / UNIVERSALITY_FACTOR;
            pass &= ok;
            lines.push(format!("q={q} p={}: {:.1e}/{:.1e}/{:.1e}", g.len(), err[0], err[1], err[2]));
        }
    }
    outcome(pass, format!("err(d=1e2/1e4/1e6) {}", lines.join("; ")))
}

fn concentration() -> Outcome {
    let mut rng = instance_rng(32, 0);
    let ensembles = [
        Ensemble::pure_gaussian(2),
        Ensemble::pure_gaussian(3),
        Ensemble::sk(),
        Ensemble::pure_er(3, 7.0).unwrap(),
        Ensemble::new(vec![0.2, 0.7, 0.5], vec![Family::Gaussian]).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut solves = 0;
    for ens in &ensembles {
        for p in 1..=4 {
            let (g, b) = random_angles(&mut rng, p);
            match evaluate(&g, &b, ens) {
                Ok(r) => worst = worst.max((r.second_moment - r.v_p * r.v_p).abs()),
                Err(e) => return outcome(false, e.to_string()),
            }
            solves += 1;
        }
    }
    let mut variances = Vec::new();
    for n in [20, 40, 80] {
        match exact_moment_sum(&[0.25], &[FRAC_PI_8], &Ensemble::pure_gaussian(2), n, &ExactSumOptions::default()) {
            Ok(r) => variances.push(r.variance.unwrap_or(f64::NAN)),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let decreasing = variances.windows(2).all(|w| w[1] < w[0]);
    outcome(
        worst < SECOND_MOMENT_TOL && decreasing,
        format!(
            "max |m2 - v^2| = {worst:.1e} over {solves} solves; finite-n variance n=20/40/80: {:.3e}/{:.3e}/{:.3e}",
            variances[0], variances[1], variances[2]
        ),
    )
}

fn finite_n_convergence() -> Outcome {
    let target = v1_reference();
    let mut errs = Vec::new();
    let ns = [20u32, 40, 80, 160];
    for n in ns {
        match exact_moment_sum(&[0.25], &[FRAC_PI_8], &Ensemble::pure_gaussian(2), n, &ExactSumOptions::default()) {
            Ok(r) => errs.push((r.first.re - target).abs()),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    // an O(1/n) error keeps n·err(n) constant
    let scaled: Vec<f64> = ns.iter().zip(&errs).map(|(&n, e)| n as f64 * e).collect();
    let spread = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
    let last = *errs.last().unwrap();
    outcome(
        decreasing && spread <= FINITE_N_RATE_FACTOR && last < FINITE_N_FINAL_TOL,
        format!(
            "|E_n - {target:.6}| n=20..160: {}; n*err spread {spread:.3} (max {FINITE_N_RATE_FACTOR}); final {last:.2e} (tol {FINITE_N_FINAL_TOL})",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn monte_carlo() -> Outcome {
    let ens = Ensemble::pure_gaussian(2);
    let cases = [(vec![0.25], vec![FRAC_PI_8]), (vec![0.2, 0.35], vec![0.45, 0.2])];
    let mut pass = true;
    let mut lines = Vec::new();
    for (g, b) in &cases {
        let limit = match evaluate(g, b, &ens) {
            Ok(r) => r.v_p,
            Err(e) => return outcome(false, e.to_string()),
        };
        match monte_carlo_moment(&ens, 12, g, b, 200, 2024, &MonteCarloOptions::default()) {
            Ok(r) => {
                let z = (r.mean - limit) / r.stderr;
                pass &= z.abs() <= MC_SIGMAS;
                lines.push(format!("p={}: mean {:.5} +- {:.5} vs V_p {limit:.5} (z = {z:.2})", g.len(), r.mean, r.stderr));
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(pass, format!("n=12, M=200: {} (tol {MC_SIGMAS} stderr)", lines.join("; ")))
}

fn structure_defect(t: &BasisTables, s: &SceSolution) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..t.len() {
        let d = match t.partition[a] {
            Partition::A0 => (s.w[a] - t.q_amp[a]).norm(),
            Partition::D => (s.w[a] + s.w[t.bar[a] as usize]).norm(),
            Partition::DBar => 0.0,
        };
        worst = worst.max(d);
    }
    let sum: Complex64 = s.w.iter().sum();
    worst.max((sum - 1.0).norm())
}

fn solver_soundness() -> Outcome {
    let mut rng = instance_rng(33, 0);
    let ensembles = [
        Ensemble::pure_gaussian(2),
        Ensemble::pure_gaussian(3),
        Ensemble::pure_er(2, 5.0).unwrap(),
        Ensemble::new(vec![0.3, 0.8, 0.5], vec![Family::Gaussian]).unwrap(),
        Ensemble::new(vec![0.0, 0.6, 0.8], vec![Family::ErdosRenyi { d: 12.0 }]).unwrap(),
    ];
    let (mut residual, mut structure, mut agreement) = (0.0f64, 0.0f64, 0.0f64);
    let mut checked = 0;
    for ens in &ensembles {
        for p in 1..=4 {
            let (g, b) = random_angles(&mut rng, p);
            let t = match BasisTables::new(&g, &b) {
                Ok(t) => t,
                Err(e) => return outcome(false, e.to_string()),
            };
            let fast = match solve_fast(&t, ens) {
                Ok(s) => s,
                Err(e) => return outcome(false, e.to_string()),
            };
            residual = residual.max(fast.residual);
            structure = structure.max(structure_defect(&t, &fast));
            if p <= 2 && ens.q_max() <= 3 {
                let slow = match solve_reference(&t, ens) {
                    Ok(s) => s,
                    Err(e) => return outcome(false, e.to_string()),
                };
                let dw = fast.w.iter().zip(&slow.w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                let vf = compute_moments(&fast, &t, ens).map(|r| r.v_p);
                let vs = compute_moments_reference(&slow, &t, ens).map(|r| r.v_p);
                match (vf, vs) {
                    (Ok(a), Ok(b)) => agreement = agreement.max(dw).max((a - b).abs()),
                    (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
                }
            }
            checked += 1;
        }
    }
    outcome(
        residual < RESIDUAL_TOL && structure < STRUCTURE_TOL && agreement < AGREEMENT_TOL,
        format!(
            "{checked} solves: residual {residual:.1e} (tol {RESIDUAL_TOL:.0e}), structure {structure:.1e} (tol {STRUCTURE_TOL:.0e}), fast vs reference {agreement:.1e} (tol {AGREEMENT_TOL:.0e})"
        ),
    )
}

fn trivial_zeros() -> Outcome {
    let mut rng = instance_rng(34, 0);
    let ensembles = [
        Ensemble::pure_gaussian(1),
        Ensemble::pure_gaussian(2),
        Ensemble::pure_gaussian(3),
        Ensemble::pure_gaussian(4),
        Ensemble::sk(),
        Ensemble::pure_er(2, 3.0).unwrap(),
        Ensemble::pure_er(3, 50.0).unwrap(),
        Ensemble::new(vec![0.5, 0.5, 0.5, 0.5], vec![Family::Gaussian]).unwrap(),
        Ensemble::new(vec![0.0, 1.0, 0.7], vec![Family::ErdosRenyi { d: 4.0 }]).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut runs = 0;
    for ens in &ensembles {
        for p in 1..=5 {
            let (g, b) = random_angles(&mut rng, p);
            for (gg, bb) in [(vec![0.0; p], b.clone()), (g.clone(), vec![0.0; p])] {
                match evaluate(&gg, &bb, ens) {
                    Ok(r) => worst = worst.max(r.v_p.abs()),
                    Err(e) => return outcome(false, e.to_string()),
                }
                runs += 1;
            }
        }
    }
    outcome(worst < ZERO_TOL, format!("max |V_p| = {worst:.1e} over {runs} runs with gamma=0 or beta=0 (tol {ZERO_TOL:.0e})"))
}

fn depth_one_optimum() -> Outcome {
    let start = Instant::now();
    match optimize(1, &Ensemble::pure_gaussian(2), &OptimizeOptions::default()) {
        Ok(r) => {
            let err = (r.best_value - v1_optimum()).abs();
            let secs = start.elapsed().as_secs_f64();
            outcome(
                err < OPTIMUM_TOL && secs < 60.0,
                format!(
                    "best {:.9} at gamma={:.6} beta={:.6}; |diff| = {err:.1e} from {:.9} (tol {OPTIMUM_TOL:.0e}); {} evaluations in {secs:.2}s",
                    r.best_value,
                    r.best_gamma[0],
                    r.best_beta[0],
                    v1_optimum(),
                    r.evaluations
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn well_played() -> Outcome {
    let even: [(&str, &dyn Fn(f64) -> f64); 2] = [("-l^2/2", &|l| -0.5 * l * l), ("cos(0.7l)-1", &|l| (0.7 * l).cos() - 1.0)];
    let odd: &dyn Fn(f64) -> f64 = &|l| l;
    let mut checks = 0;
    let mut misses = Vec::new();
    for (g, b) in [(vec![0.3], vec![0.2]), (vec![0.3, -0.5], vec![0.2, 0.45])] {
        let t = BasisTables::new(&g, &b).unwrap();
        let set = ProperSet::from_tables(&t);
        for q in [2, 3] {
            for (name, h) in even {
                let cp = build_hq(&t, q, h, 1e7).and_then(|p| canonicalize(&p, &set, DEFAULT_DEGREE_CAP));
                if !cp.is_ok_and(|c| check_well_played(&c, &set).pass) {
                    misses.push(format!("even {name} p={} q={q}", g.len()));
                }
                checks += 1;
            }
            let cp = build_hq(&t, q, odd, 1e7).and_then(|p| canonicalize(&p, &set, DEFAULT_DEGREE_CAP));
            if !cp.is_ok_and(|c| !check_well_played(&c, &set).pass) {
                misses.push(format!("odd p={} q={q}", g.len()));
            }
            checks += 1;
        }
    }

    let set = ProperSet::new(vec![Partition::A0, Partition::D, Partition::DBar], vec![0, 2, 1], vec![1]).unwrap();
    let q = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.3), Complex64::new(0.0, -0.3)];
    let canonical = CanonicalPolynomial::new().with_term(&[1], &[], &[0], Complex64::new(0.5, 0.0));
    let natural = NaturalPolynomial::new().with_term(&[0, 1], Complex64::new(0.5, 0.0)).with_term(&[0, 2], Complex64::new(0.5, 0.0));
    let f = NaturalPolynomial::new().with_term(&[1], Complex64::new(1.0, 0.0)).with_term(&[2], Complex64::new(-1.0, 0.0));
    let w = match solve_generic_sce(&set, &q, &canonical) {
        Ok(s) => s.w,
        Err(e) => return outcome(false, e.to_string()),
    };
    let limit = f.eval(&w);
    let mut errs = Vec::new();
    for n in [50, 100, 200, 400] {
        match finite_multinomial_sum(n, &set, &q, &natural, &f, 1e8) {
            Ok(s) => errs.push((s.value - limit).norm()),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let last = *errs.last().unwrap();
    outcome(
        misses.is_empty() && monotone && last < TOY_TOL,
        format!(
            "{checks} kernel checks, misses [{}]; toy |sum_n - f(W)| n=50..400: {} -> final {last:.4e} (tol {TOY_TOL:.0e})",
            misses.join(", "),
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn performance() -> Outcome {
    let ens = Ensemble::pure_gaussian(2);
    let mut timings = Vec::new();
    for (p, budget) in [(8usize, P8_BUDGET), (10, P10_BUDGET)] {
        let g: Vec<f64> = (0..p).map(|i| 0.1 + 0.03 * i as f64).collect();
        let b: Vec<f64> = (0..p).map(|i| 0.4 - 0.03 * i as f64).collect();
        let start = Instant::now();
        let r = BasisTables::new(&g, &b).and_then(|t| solve_fast(&t, &ens).and_then(|s| compute_moments(&s, &t, &ens)));
        let elapsed = start.elapsed();
        match r {
            Ok(r) if r.v_p.is_finite() => timings.push((p, elapsed, budget)),
            Ok(r) => return outcome(false, format!("p={p}: V_p = {}", r.v_p)),
            Err(e) => return outcome(false, format!("p={p}: {e}")),
        }
    }
    let mut rng = instance_rng(35, 0);
    let mut worst = 0.0f64;
    for p in 4..=6 {
        for q in [2, 3] {
            let (g, b) = random_angles(&mut rng, p);
            match check_tree_identity(q, &g, &b) {
                Ok(c) => worst = worst.max(c.abs_diff),
                Err(e) => return outcome(false, e.to_string()),
            }
        }
    }
    let in_budget = timings.iter().all(|(_, t, b)| t < b);
    outcome(
        in_budget && worst < IDENTITY_TOL,
        format!(
            "{}; identity at p=4..6: {worst:.1e} (tol {IDENTITY_TOL:.0e}); {} threads",
            timings
                .iter()
                .map(|(p, t, b)| format!("p={p} {:.2}s (budget {}s)", t.as_secs_f64(), b.as_secs()))
                .collect::<Vec<_>>()
                .join(", "),
            rayon::current_num_threads()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("tree identity", identity_agreement),
        ("universality", universality),
        ("concentration", concentration),
        ("finite-n convergence", finite_n_convergence),
        ("statevector monte carlo", monte_carlo),
        ("solver soundness", solver_soundness),
        ("trivial zeros", trivial_zeros),
        ("depth-one optimization", depth_one_optimum),
        ("well-played machinery", well_played),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
