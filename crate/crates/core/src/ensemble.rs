//! Coupling ensembles described by their characteristic exponents.
//!
//! Each order `q` carries a weight `c_q` and a family with
//! `log E[e^{iλJ}] ≈ g(λ)/n^{q-1}`. The solver only needs `g` and `g'`; the
//! second-moment oracle also uses `g''`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default cap on the number of tensor entries in a sampled instance.
pub const DEFAULT_SAMPLE_CAP: usize = 1 << 26;

#[derive(Clone)]
pub struct CustomFamily {
    pub name: String,
    pub g: ScalarFn,
    pub g_prime: ScalarFn,
    pub g_second: Option<ScalarFn>,
}

impl fmt::Debug for CustomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFamily").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    Gaussian,
    /// Sparse hypergraph with average degree `d`.
    ErdosRenyi {
        d: f64,
    },
    Custom(CustomFamily),
}

impl Family {
    pub fn g(&self, lambda: f64) -> f64 {
        match self {
            Family::Gaussian => -0.5 * lambda * lambda,
            Family::ErdosRenyi { d } => {
                // d(cos x − 1) = −2d sin²(x/2), stable for large d
                let s = (0.5 * lambda / d.sqrt()).sin();
                -2.0 * d * s * s
            }
            Family::Custom(c) => (c.g)(lambda),
        }
    }

    pub fn g_prime(&self, lambda: f64) -> f64 {
        match self {
            Family::Gaussian => -lambda,
            Family::ErdosRenyi { d } => -d.sqrt() * (lambda / d.sqrt()).sin(),
            Family::Custom(c) => (c.g_prime)(lambda),
        }
    }

    pub fn g_second(&self, lambda: f64) -> Result<f64> {
        match self {
            Family::Gaussian => Ok(-1.0),
            Family::ErdosRenyi { d } => Ok(-(lambda / d.sqrt()).cos()),
            Family::Custom(c) => c
                .g_second
                .as_ref()
                .map(|f| f(lambda))
                .ok_or_else(|| Error::UnsupportedEnsemble(format!("{} has no second derivative", c.name))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Gaussian => "gaussian".into(),
            Family::ErdosRenyi { d } => format!("er:{d}"),
            Family::Custom(c) => format!("custom:{}", c.name),
        }
    }

    fn validate_parameters(&self) -> Result<()> {
        if let Family::ErdosRenyi { d } = self {
            if !(d.is_finite() && *d > 0.0) {
                return Err(Error::Domain(format!("average degree must be positive, got {d}")));
            }
        }
        Ok(())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("gaussian") {
            return Ok(Family::Gaussian);
        }
        if let Some(d) = s.strip_prefix("er:") {
            let d: f64 = d.parse().map_err(|_| Error::Domain(format!("bad degree in '{s}'")))?;
            let f = Family::ErdosRenyi { d };
            f.validate_parameters()?;
            return Ok(f);
        }
        Err(Error::UnsupportedEnsemble(format!("unknown family '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// `c_1, …, c_{q_max}`.
    pub c: Vec<f64>,
    /// One family per order, or a single entry applied to every order.
    pub family: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    c: Vec<f64>,
    families: Vec<Family>,
}

impl Ensemble {
    pub fn new(c: Vec<f64>, families: Vec<Family>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Shape("at least one order is required".into()));
        }
        let families = match families.len() {
            1 => vec![families[0].clone(); c.len()],
            n if n == c.len() => families,
            n => return Err(Error::Shape(format!("{} weights but {} families", c.len(), n))),
        };
        if let Some(x) = c.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite weight {x}")));
        }
        if c.iter().all(|&x| x == 0.0) {
            return Err(Error::Domain("all weights are zero".into()));
        }
        for f in &families {
            f.validate_parameters()?;
        }
        Ok(Ensemble { c, families })
    }

    /// Single order `q` with `c_q = 1`.
    pub fn pure(q: usize, family: Family) -> Self {
        assert!(q >= 1, "order must be at least 1");
        let mut c = vec![0.0; q];
        c[q - 1] = 1.0;
        Ensemble::new(c, vec![family]).expect("pure ensemble is valid")
    }

    pub fn pure_gaussian(q: usize) -> Self {
        Self::pure(q, Family::Gaussian)
    }

    pub fn pure_er(q: usize, d: f64) -> Result<Self> {
        let mut c = vec![0.0; q];
        c[q - 1] = 1.0;
        Ensemble::new(c, vec![Family::ErdosRenyi { d }])
    }

    /// Sherrington–Kirkpatrick normalization, `c_2 = 1/√2`.
    pub fn sk() -> Self {
        Ensemble::new(vec![0.0, std::f64::consts::FRAC_1_SQRT_2], vec![Family::Gaussian]).unwrap()
    }

    pub fn from_config(cfg: &EnsembleConfig) -> Result<Self> {
        let families = cfg.family.iter().map(|s| s.parse()).collect::<Result<Vec<Family>>>()?;
        Ensemble::new(cfg.c.clone(), families)
    }

    pub fn to_config(&self) -> Result<EnsembleConfig> {
        let family = self
            .families
            .iter()
            .map(|f| match f {
                Family::Custom(_) => Err(Error::UnsupportedEnsemble("custom families do not serialize".into())),
                f => Ok(f.label()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleConfig { c: self.c.clone(), family })
    }

    pub fn q_max(&self) -> usize {
        self.c.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.c
    }

    pub fn family(&self, q: usize) -> &Family {
        &self.families[q - 1]
    }

    /// `(q, c_q, family)` for every order with non-zero weight.
    pub fn active(&self) -> impl Iterator<Item = (usize, f64, &Family)> {
        self.c.iter().zip(&self.families).enumerate().filter(|(_, (c, _))| **c != 0.0).map(|(k, (c, f))| (k + 1, *c, f))
    }

    pub fn has_custom(&self) -> bool {
        self.active().any(|(_, _, f)| matches!(f, Family::Custom(_)))
    }

    pub fn label(&self) -> String {
        let mut labels: Vec<String> = self.active().map(|(_, _, f)| f.label()).collect();
        labels.dedup();
        labels.join("+")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub max_even_defect: f64,
    pub max_derivative_defect: f64,
    pub max_real_part: f64,
    pub g_at_zero: f64,
}

/// Checks `g(0) = 0`, evenness, `Re g ≤ 0` and consistency of `g'` with `g`
/// on a grid over `[-lambda_max, lambda_max]`.
pub fn validate_assumption(family: &Family, lambda_max: f64, points: usize) -> Result<AssumptionReport> {
    let points = points.max(3);
    let mut rep =
        AssumptionReport { max_even_defect: 0.0, max_derivative_defect: 0.0, max_real_part: f64::NEG_INFINITY, g_at_zero: family.g(0.0) };
    let h = 1e-5;
    for k in 0..points {
        let x = -lambda_max + 2.0 * lambda_max * k as f64 / (points - 1) as f64;
        let (gx, gm) = (family.g(x), family.g(-x));
        let dp = family.g_prime(x);
        if !(gx.is_finite() && gm.is_finite() && dp.is_finite()) {
            return Err(Error::Evaluation(format!("{} is not finite at λ = {x}", family.label())));
        }
        let fd = (family.g(x + h) - family.g(x - h)) / (2.0 * h);
        rep.max_even_defect = rep.max_even_defect.max((gx - gm).abs());
        rep.max_derivative_defect = rep.max_derivative_defect.max((fd - dp).abs() / (1.0 + dp.abs()));
        rep.max_real_part = rep.max_real_part.max(gx);
    }
    if rep.g_at_zero.abs() > 1e-12 {
        return Err(Error::Domain(format!("g(0) = {} ≠ 0", rep.g_at_zero)));
    }
    if rep.max_even_defect > 1e-9 {
        return Err(Error::Domain(format!("g is not even (defect {:.3e})", rep.max_even_defect)));
    }
    if rep.max_real_part > 1e-12 {
        return Err(Error::Domain("g takes positive values".into()));
    }
    if rep.max_derivative_defect > 1e-5 {
        return Err(Error::Domain(format!("g' disagrees with g (defect {:.3e})", rep.max_derivative_defect)));
    }
    Ok(rep)
}

/// Dense order-`q` coupling tensor on `n` spins, row-major over `[n]^q`.
#[derive(Clone, Debug)]
pub struct InstanceSample {
    pub n: usize,
    pub q: usize,
    pub coupling: Vec<f64>,
}

impl InstanceSample {
    /// `Σ_{i_1..i_q} J_{i_1..i_q} z_{i_1}⋯z_{i_q}`.
    pub fn energy(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.n);
        contract(&self.coupling, z, self.q)
    }
}

fn contract(t: &[f64], z: &[f64], q: usize) -> f64 {
    if q == 1 {
        return t.iter().zip(z).map(|(a, b)| a * b).sum();
    }
    let stride = t.len() / z.len();
    t.chunks_exact(stride).zip(z).map(|(block, zi)| zi * contract(block, z, q - 1)).sum()
}

fn tensor_len(n: usize, q: usize, cap: usize) -> Result<usize> {
    let len = (n as f64).powi(q as i32);
    if len > cap as f64 {
        return Err(Error::capacity("instance tensor entries", len, cap as f64));
    }
    Ok(n.pow(q as u32))
}

/// Per-instance generator: one ChaCha stream per instance index.
pub fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_instance(family: &Family, q: usize, n: usize, rng: &mut ChaCha8Rng, cap: usize) -> Result<InstanceSample> {
    if n == 0 || q == 0 {
        return Err(Error::Shape("n and q must be positive".into()));
    }
    let len = tensor_len(n, q, cap)?;
    let scale = (n as f64).powi(q as i32 - 1);
    let coupling = match family {
        Family::Gaussian => {
            let normal = Normal::new(0.0, scale.recip().sqrt()).unwrap();
            (0..len).map(|_| normal.sample(rng)).collect()
        }
        Family::ErdosRenyi { d } => {
            let pois = Poisson::new(d / (2.0 * scale)).map_err(|e| Error::Domain(e.to_string()))?;
            let w = d.sqrt().recip();
            (0..len).map(|_| (pois.sample(rng) - pois.sample(rng)) * w).collect()
        }
        Family::Custom(c) => return Err(Error::UnsupportedEnsemble(format!("cannot sample custom family {}", c.name))),
    };
    Ok(InstanceSample { n, q, coupling })
}

/// Directed multi-hypergraph: `Poisson(dn)` hyperedges, each a uniform
/// `q`-tuple with a uniform sign and weight `1/√d`.
pub fn sample_er_multigraph(d: f64, q: usize, n: usize, rng: &mut ChaCha8Rng, cap: usize) -> Result<InstanceSample> {
    let len = tensor_len(n, q, cap)?;
    let edges = Poisson::new(d * n as f64).map_err(|e| Error::Domain(e.to_string()))?.sample(rng) as u64;
    let w = d.sqrt().recip();
    let mut coupling = vec![0.0; len];
    for _ in 0..edges {
        let idx = (0..q).fold(0usize, |acc, _| acc * n + rng.random_range(0..n));
        coupling[idx] += if rng.random::<bool>() { w } else { -w };
    }
    Ok(InstanceSample { n, q, coupling })
}

/// Samples every active order of `ensemble`, returning `(c_q, instance)` pairs.
pub fn sample_cost(ensemble: &Ensemble, n: usize, rng: &mut ChaCha8Rng, cap: usize) -> Result<Vec<(f64, InstanceSample)>> {
    ensemble.active().map(|(q, c, f)| sample_instance(f, q, n, rng, cap).map(|s| (c, s))).collect()
}
