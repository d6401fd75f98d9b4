use std::collections::HashMap;
use std::time::Instant;

use astro_float::BigFloat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::big::{BigComplex, BigCtx, RM};
use super::composition::{composition_count, CompositionCursor};
use super::logcomplex::LogComplex;
use crate::basis::{amplitude_of, ABSOLUTE_MAX_LEVEL};
use crate::ensemble::{Ensemble, Family};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ExactSumOptions {
    pub second_moment: bool,
    /// Cap on `compositions × (4^p + 8)` multiprecision operations.
    pub work_cap: f64,
    /// Bits kept beyond the worst-case term magnitude.
    pub guard_bits: usize,
}

impl Default for ExactSumOptions {
    fn default() -> Self {
        ExactSumOptions { second_moment: true, work_cap: 1e9, guard_bits: 96 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactSumResult {
    pub n: u32,
    pub p: usize,
    pub first: Complex64,
    pub second: Option<Complex64>,
    /// `second − first²` on real parts.
    pub variance: Option<f64>,
    pub precision_bits: usize,
    pub compositions: f64,
    /// `log2(Σ|term| / |result|)` for the first moment.
    pub cancellation_bits: f64,
    pub wall_time_ms: f64,
}

/// Per-order kernel values on each sign class of `Φ`.
struct OrderData {
    q: usize,
    g: Vec<BigFloat>,
    gp: Vec<BigFloat>,
    gpp: Vec<BigFloat>,
}

struct Problem {
    n: u32,
    k: usize,
    prec: usize,
    /// Sign class of each configuration and the sign relating it to the class representative.
    class: Vec<usize>,
    sign: Vec<bool>,
    n_classes: usize,
    zero_class: usize,
    orders: Vec<OrderData>,
    weights: Vec<BigFloat>,
    q_pow: Vec<Vec<BigComplex>>,
    q_zero: Vec<bool>,
    fact_n: BigFloat,
    inv_fact: Vec<BigFloat>,
    inv_npow: Vec<BigFloat>,
    second: bool,
}

/// Level-`r` coefficient of `Φ_x/2` in `{-1, 0, 1}` for each `r`.
fn phase_signs(p: usize, mask: u32) -> Vec<i8> {
    let mut out = vec![0i8; p];
    let (mut fwd, mut bwd) = (1i8, 1i8);
    for r in (1..=p).rev() {
        if (mask >> (r - 1)) & 1 == 1 {
            fwd = -fwd;
        }
        if (mask >> (2 * p - r)) & 1 == 1 {
            bwd = -bwd;
        }
        out[r - 1] = (fwd - bwd) / 2;
    }
    out
}

fn family_values(ctx: &mut BigCtx, fam: &Family, lambda: &BigFloat) -> Result<(BigFloat, BigFloat, BigFloat)> {
    let prec = ctx.prec;
    match fam {
        Family::Gaussian => {
            let half = ctx.real(0.5);
            let g = lambda.mul(lambda, prec, RM).mul(&half, prec, RM).neg();
            Ok((g, lambda.neg(), ctx.real(-1.0)))
        }
        Family::ErdosRenyi { d } => {
            let dd = ctx.real(*d);
            let sd = ctx.sqrt(&dd);
            let x = lambda.div(&sd, prec, RM);
            let half_x = x.mul(&ctx.real(0.5), prec, RM);
            let s_half = ctx.sin(&half_x);
            let g = s_half.mul(&s_half, prec, RM).mul(&dd, prec, RM).mul(&ctx.real(-2.0), prec, RM);
            let gp = ctx.sin(&x).mul(&sd, prec, RM).neg();
            let gpp = ctx.cos(&x).neg();
            Ok((g, gp, gpp))
        }
        Family::Custom(c) => Err(Error::UnsupportedEnsemble(format!("exact sums need closed-form kernels; {} is custom", c.name))),
    }
}

fn build(gamma: &[f64], beta: &[f64], ens: &Ensemble, n: u32, opts: &ExactSumOptions) -> Result<Problem> {
    let p = gamma.len();
    let k = 1usize << (2 * p);

    // term magnitudes are bounded by (Σ|Q_a|)^n times the bracket bound
    let sum_abs_q: f64 = (0..k as u32).map(|m| amplitude_of(beta, m).norm()).sum();
    let phi_max = 2.0 * gamma.iter().map(|g| g.abs()).sum::<f64>();
    let mut bracket = 0.0;
    let mut curvature = 0.0;
    for (_, c, fam) in ens.active() {
        let lam = c.abs() * phi_max;
        let grid = (0..=64).map(|i| lam * i as f64 / 64.0);
        bracket += c.abs() * grid.clone().map(|x| fam.g_prime(x).abs()).fold(0.0, f64::max);
        curvature += c * c * grid.map(|x| fam.g_second(x).map(f64::abs).unwrap_or(1.0)).fold(0.0, f64::max);
    }
    let bracket_bound = if opts.second_moment { bracket * bracket + curvature } else { bracket };
    let log2_bound = (LogComplex::from_real(sum_abs_q).powi(n as i32) * LogComplex::from_real(bracket_bound.max(1.0))).log2_abs();
    let prec = (log2_bound.max(0.0).ceil() as usize + opts.guard_bits).div_ceil(64) * 64;

    let mut ctx = BigCtx::new(prec)?;
    let mut class_of_key: HashMap<Vec<i8>, usize> = HashMap::new();
    let mut reps: Vec<Vec<i8>> = Vec::new();
    let mut class = vec![0usize; k];
    let mut sign = vec![false; k];
    for m in 0..k as u32 {
        let mut s = phase_signs(p, m);
        let neg = s.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0);
        if neg {
            s.iter_mut().for_each(|v| *v = -*v);
        }
        let next = reps.len();
        let id = *class_of_key.entry(s.clone()).or_insert(next);
        if id == next {
            reps.push(s);
        }
        class[m as usize] = id;
        sign[m as usize] = neg;
    }
    let zero_class = class[0];

    let mut orders = Vec::new();
    let mut weights = Vec::new();
    for (q, c, fam) in ens.active() {
        let (mut g, mut gp, mut gpp) = (Vec::new(), Vec::new(), Vec::new());
        for rep in &reps {
            let mut phi = ctx.real(0.0);
            for (r, &s) in rep.iter().enumerate() {
                if s != 0 {
                    phi = phi.add(&ctx.real(2.0 * s as f64 * gamma[r]), prec, RM);
                }
            }
            let lambda = phi.mul(&ctx.real(c), prec, RM);
            let (a, b, cc) = family_values(&mut ctx, fam, &lambda)?;
            g.push(a);
            gp.push(b);
            gpp.push(cc);
        }
        orders.push(OrderData { q, g, gp, gpp });
        weights.push(ctx.real(c));
    }

    let mut q_pow = Vec::with_capacity(k);
    let mut q_zero = Vec::with_capacity(k);
    let trig: Vec<(BigFloat, BigFloat)> = beta
        .iter()
        .map(|&b| {
            let x = ctx.real(b);
            (ctx.cos(&x), ctx.sin(&x))
        })
        .collect();
    for m in 0..k as u32 {
        let mut z = BigComplex::one(prec);
        for r in 1..=p {
            let (c, s) = &trig[r - 1];
            let plus = (m >> (r - 1)) & 1 == 0;
            let minus = (m >> (2 * p - r)) & 1 == 0;
            let f = match (plus, minus) {
                (true, true) => BigComplex { re: c.mul(c, prec, RM), im: ctx.real(0.0) },
                (false, false) => BigComplex { re: s.mul(s, prec, RM), im: ctx.real(0.0) },
                (true, false) => BigComplex { re: ctx.real(0.0), im: c.mul(s, prec, RM).neg() },
                (false, true) => BigComplex { re: ctx.real(0.0), im: c.mul(s, prec, RM) },
            };
            z = z.mul(&f, prec);
        }
        let zero = amplitude_of(beta, m).norm() == 0.0;
        q_zero.push(zero);
        let mut pows = vec![BigComplex::one(prec)];
        if !zero {
            for e in 1..=n as usize {
                let next = pows[e - 1].mul(&z, prec);
                pows.push(next);
            }
        }
        q_pow.push(pows);
    }

    let mut inv_fact = vec![ctx.real(1.0)];
    let mut fact = ctx.real(1.0);
    for i in 1..=n as u64 {
        fact = fact.mul(&ctx.uint(i), prec, RM);
        inv_fact.push(ctx.real(1.0).div(&fact, prec, RM));
    }
    let q_max = orders.iter().map(|o| o.q).max().unwrap_or(1);
    let inv_n = ctx.real(1.0).div(&ctx.uint(n as u64), prec, RM);
    let mut inv_npow = vec![ctx.real(1.0)];
    for i in 1..=q_max + 1 {
        inv_npow.push(inv_npow[i - 1].mul(&inv_n, prec, RM));
    }
    Ok(Problem {
        n,
        k,
        prec,
        class,
        sign,
        n_classes: reps.len(),
        zero_class,
        orders,
        weights,
        q_pow,
        q_zero,
        fact_n: fact,
        inv_fact,
        inv_npow,
        second: opts.second_moment,
    })
}

struct Partial {
    first: BigComplex,
    second: BigComplex,
    ln_abs: LogComplex,
}

fn scan_leading(pr: &Problem, lead: u32) -> Result<Partial> {
    let prec = pr.prec;
    let mut ctx = BigCtx::new(prec)?;
    let mut cache: HashMap<Vec<u64>, BigFloat> = HashMap::new();
    let mut out = Partial { first: BigComplex::zero(prec), second: BigComplex::zero(prec), ln_abs: LogComplex::ZERO };
    if lead > 0 && pr.q_zero[0] {
        return Ok(out);
    }
    let k = pr.k;
    let mut counts = vec![0u64; k];
    let mut m_cur = vec![0u64; k];
    let mut m_next = vec![0u64; k];
    let mut sums_g = vec![0u64; pr.n_classes];
    let mut sums_p = vec![0i64; pr.n_classes];
    let mut key: Vec<u64> = Vec::new();
    let mut cursor = CompositionCursor::new(pr.n - lead, k - 1);
    while let Some(rest) = cursor.current() {
        counts[0] = lead as u64;
        for (c, &r) in counts[1..].iter_mut().zip(rest) {
            *c = r as u64;
        }
        let feasible = counts.iter().zip(&pr.q_zero).all(|(&c, &z)| c == 0 || !z);
        if feasible {
            let support: Vec<usize> = (0..k).filter(|&a| counts[a] > 0).collect();

            let mut pref = BigComplex { re: pr.fact_n.clone(), im: ctx.real(0.0) };
            for &a in &support {
                pref = pref.scale(&pr.inv_fact[counts[a] as usize], prec);
                pref = pref.mul(&pr.q_pow[a][counts[a] as usize], prec);
            }

            key.clear();
            let mut b1 = ctx.real(0.0);
            let mut curv = ctx.real(0.0);
            for (od, w) in pr.orders.iter().zip(&pr.weights) {
                m_cur.copy_from_slice(&counts);
                for _ in 1..od.q {
                    m_next.iter_mut().for_each(|v| *v = 0);
                    for x in 0..k {
                        if m_cur[x] == 0 {
                            continue;
                        }
                        for &y in &support {
                            m_next[x ^ y] += m_cur[x] * counts[y];
                        }
                    }
                    std::mem::swap(&mut m_cur, &mut m_next);
                }
                sums_g.iter_mut().for_each(|v| *v = 0);
                sums_p.iter_mut().for_each(|v| *v = 0);
                for x in 0..k {
                    let v = m_cur[x];
                    if v == 0 {
                        continue;
                    }
                    sums_g[pr.class[x]] += v;
                    sums_p[pr.class[x]] += if pr.sign[x] { -(v as i64) } else { v as i64 };
                }
                for (cls, &v) in sums_g.iter().enumerate() {
                    if cls != pr.zero_class {
                        key.push(v);
                    }
                }
                let mut t = ctx.real(0.0);
                let mut u = ctx.real(0.0);
                for cls in 0..pr.n_classes {
                    if sums_p[cls] != 0 && cls != pr.zero_class {
                        t = t.add(&od.gp[cls].mul(&BigFloat::from_i64(sums_p[cls], prec), prec, RM), prec, RM);
                    }
                    if pr.second && sums_g[cls] != 0 {
                        u = u.add(&od.gpp[cls].mul(&ctx.uint(sums_g[cls]), prec, RM), prec, RM);
                    }
                }
                let scale = w.mul(&pr.inv_npow[od.q], prec, RM);
                b1 = b1.add(&t.mul(&scale, prec, RM), prec, RM);
                if pr.second {
                    let s2 = scale.mul(w, prec, RM).mul(&pr.inv_npow[1], prec, RM);
                    curv = curv.add(&u.mul(&s2, prec, RM), prec, RM);
                }
            }

            let e = match cache.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let mut arg = ctx.real(0.0);
                    let mut idx = 0;
                    for od in &pr.orders {
                        for cls in 0..pr.n_classes {
                            if cls == pr.zero_class {
                                continue;
                            }
                            let v = key[idx];
                            idx += 1;
                            if v != 0 {
                                let term = od.g[cls].mul(&ctx.uint(v), prec, RM).mul(&pr.inv_npow[od.q - 1], prec, RM);
                                arg = arg.add(&term, prec, RM);
                            }
                        }
                    }
                    let v = ctx.exp(&arg);
                    cache.insert(key.clone(), v.clone());
                    v
                }
            };
            let pref = pref.scale(&e, prec);

            // first bracket is −i·b1
            let t1 = pref.scale(&b1, prec).times_i();
            let t1 = BigComplex { re: t1.re.neg(), im: t1.im.neg() };
            out.ln_abs = out.ln_abs + LogComplex { ln_abs: t1.log2_scale() * std::f64::consts::LN_2, arg: 0.0 };
            out.first = out.first.add(&t1, prec);
            if pr.second {
                // (−i b1)² − curvature/n = −b1² − curvature/n
                let br = b1.mul(&b1, prec, RM).add(&curv, prec, RM).neg();
                out.second = out.second.add(&pref.scale(&br, prec), prec);
            }
        }
        if !cursor.advance() {
            break;
        }
    }
    Ok(out)
}

/// Disorder-averaged `E[⟨C/n⟩]` (and `E[⟨C/n⟩²]`-type second moment) at
/// finite `n`, summed exactly over compositions of `n` into `4^p` parts.
pub fn exact_moment_sum(gamma: &[f64], beta: &[f64], ensemble: &Ensemble, n: u32, opts: &ExactSumOptions) -> Result<ExactSumResult> {
    let start = Instant::now();
    let p = gamma.len();
    if p == 0 || beta.len() != p {
        return Err(Error::Shape(format!("{} gammas and {} betas", p, beta.len())));
    }
    if p > ABSOLUTE_MAX_LEVEL / 2 {
        return Err(Error::capacity("exact-sum depth", p as f64, (ABSOLUTE_MAX_LEVEL / 2) as f64));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if ensemble.has_custom() {
        return Err(Error::UnsupportedEnsemble("exact sums need Gaussian or sparse families".into()));
    }
    let k = 1usize << (2 * p);
    let comps = composition_count(n, k);
    let work = comps * (k as f64 + 8.0);
    if work > opts.work_cap {
        return Err(Error::capacity("exact-sum operations", work, opts.work_cap));
    }
    let q_max = ensemble.active().map(|(q, _, _)| q).max().unwrap_or(1);
    if (n as f64).powi(q_max as i32) >= 2f64.powi(62) {
        return Err(Error::capacity("integer convolution range", (n as f64).powi(q_max as i32), 2f64.powi(62)));
    }
    let pr = build(gamma, beta, ensemble, n, opts)?;
    let parts: Vec<Partial> = (0..=n).into_par_iter().map(|lead| scan_leading(&pr, lead)).collect::<Result<_>>()?;
    let prec = pr.prec;
    let mut first = BigComplex::zero(prec);
    let mut second = BigComplex::zero(prec);
    let mut ln_abs = LogComplex::ZERO;
    for part in &parts {
        first = first.add(&part.first, prec);
        second = second.add(&part.second, prec);
        ln_abs = ln_abs + part.ln_abs;
    }
    let first = first.to_c64();
    let second = opts.second_moment.then(|| second.to_c64());
    let cancellation_bits = if first.norm() > 0.0 { ln_abs.log2_abs() - first.norm().log2() } else { f64::INFINITY };
    Ok(ExactSumResult {
        n,
        p,
        first,
        second,
        variance: second.map(|s| s.re - first.re * first.re),
        precision_bits: prec,
        compositions: comps,
        cancellation_bits,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
