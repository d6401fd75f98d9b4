//! Configuration hypercube `A = {±1}^{2p}` and its precomputed tables.
//!
//! A configuration is stored as a `2p`-bit mask. Bit `t` holds the spin at
//! position `t` of the tuple `(a_1, …, a_p, a_{-p}, …, a_{-1})`; a clear bit
//! means `+1`, a set bit `-1`. Pointwise products of configurations are XORs
//! of masks, which is what lets the solver use Walsh–Hadamard transforms.

use std::cmp::Ordering;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth accepted without an explicit override.
pub const DEFAULT_MAX_LEVEL: usize = 13;

/// Hard ceiling imposed by the `u32` mask layout.
pub const ABSOLUTE_MAX_LEVEL: usize = 15;

const BINARY_MAGIC: &[u8; 4] = b"SQBT";
const BINARY_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig(u32);

impl SpinConfig {
    pub const IDENTITY: SpinConfig = SpinConfig(0);

    pub fn from_mask(mask: u32, p: usize) -> Result<Self> {
        if p > ABSOLUTE_MAX_LEVEL || (mask as u64) >> (2 * p) != 0 {
            return Err(Error::Shape(format!("mask {mask:#x} does not fit 2p = {} bits", 2 * p)));
        }
        Ok(SpinConfig(mask))
    }

    /// Builds a configuration from spins listed as `(a_1, …, a_p, a_{-p}, …, a_{-1})`.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        if !spins.len().is_multiple_of(2) || spins.len() / 2 > ABSOLUTE_MAX_LEVEL {
            return Err(Error::Shape(format!("expected 2p spins, got {}", spins.len())));
        }
        let mut mask = 0u32;
        for (t, &s) in spins.iter().enumerate() {
            match s {
                1 => {}
                -1 => mask |= 1 << t,
                _ => return Err(Error::Domain(format!("spin values must be ±1, got {s}"))),
            }
        }
        Ok(SpinConfig(mask))
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Spin `a_j` for `j ∈ {±1, …, ±p}`.
    pub fn spin(self, p: usize, j: i32) -> i8 {
        if (self.0 >> bit_of(p, j)) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn spins(self, p: usize) -> Vec<i8> {
        (0..2 * p).map(|t| if (self.0 >> t) & 1 == 0 { 1 } else { -1 }).collect()
    }

    #[inline]
    pub fn product(self, other: SpinConfig) -> SpinConfig {
        SpinConfig(self.0 ^ other.0)
    }
}

/// Bit position of `a_j`.
#[inline]
pub fn bit_of(p: usize, j: i32) -> usize {
    debug_assert!(j != 0 && j.unsigned_abs() as usize <= p);
    if j > 0 {
        j as usize - 1
    } else {
        2 * p - j.unsigned_abs() as usize
    }
}

#[inline]
pub fn xor_product(a: SpinConfig, b: SpinConfig) -> SpinConfig {
    a.product(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    A0,
    D,
    DBar,
}

/// Largest `i` with `a_i ≠ a_{-i}`, or 0.
pub fn rank_of(p: usize, mask: u32) -> usize {
    (1..=p).rev().find(|&i| ((mask >> (i - 1)) ^ (mask >> (2 * p - i))) & 1 == 1).unwrap_or(0)
}

/// Flips `a_ℓ` and `a_{-ℓ}` where `ℓ` is the rank; identity on rank 0.
pub fn bar_of(p: usize, mask: u32) -> u32 {
    match rank_of(p, mask) {
        0 => mask,
        l => mask ^ (1 << (l - 1)) ^ (1 << (2 * p - l)),
    }
}

pub fn partition_of(p: usize, mask: u32) -> Partition {
    if rank_of(p, mask) == 0 {
        Partition::A0
    } else if (mask & forward_bits(p)).count_ones().is_multiple_of(2) {
        Partition::D
    } else {
        Partition::DBar
    }
}

#[inline]
fn forward_bits(p: usize) -> u32 {
    (1u32 << p) - 1
}

/// Lexical key on `(a_1, …, a_p, a_{-p}, …, a_{-1})` with `-1 < +1`.
#[inline]
fn lex_key(p: usize, mask: u32) -> u32 {
    let n = 2 * p;
    let mut key = 0u32;
    for t in 0..n {
        if (mask >> t) & 1 == 0 {
            key |= 1 << (n - 1 - t);
        }
    }
    key
}

/// Total order on `D`: rank first, then lexical.
pub fn compare_order(p: usize, a: u32, b: u32) -> Result<Ordering> {
    for m in [a, b] {
        if partition_of(p, m) != Partition::D {
            return Err(Error::Domain(format!("configuration {m:#x} is not in D")));
        }
    }
    Ok(rank_of(p, a).cmp(&rank_of(p, b)).then_with(|| lex_key(p, a).cmp(&lex_key(p, b))))
}

/// `Φ_a = Σ_r γ_r (a_r⋯a_p − a_{-p}⋯a_{-r})`.
pub fn phase_of(gamma: &[f64], mask: u32) -> f64 {
    let p = gamma.len();
    let mut fwd = 1.0;
    let mut bwd = 1.0;
    let mut phi = 0.0;
    for r in (1..=p).rev() {
        if (mask >> (r - 1)) & 1 == 1 {
            fwd = -fwd;
        }
        if (mask >> (2 * p - r)) & 1 == 1 {
            bwd = -bwd;
        }
        phi += gamma[r - 1] * (fwd - bwd);
    }
    phi
}

/// Per-level factor of `Q_a` for the spin pair `(a_r, a_{-r})`.
#[inline]
fn q_factor(beta: f64, plus: bool, minus: bool) -> Complex64 {
    let (s, c) = beta.sin_cos();
    match (plus, minus) {
        (true, true) => Complex64::new(c * c, 0.0),
        (false, false) => Complex64::new(s * s, 0.0),
        // a_r = +1, a_{-r} = -1: i^{-1}
        (true, false) => Complex64::new(0.0, -c * s),
        (false, true) => Complex64::new(0.0, c * s),
    }
}

/// `Q_a` as a direct product, so exact zeros at `β ∈ {0, π/2}` survive.
pub fn amplitude_of(beta: &[f64], mask: u32) -> Complex64 {
    let p = beta.len();
    let mut q = Complex64::new(1.0, 0.0);
    for r in 1..=p {
        let plus = (mask >> (r - 1)) & 1 == 0;
        let minus = (mask >> (2 * p - r)) & 1 == 0;
        q *= q_factor(beta[r - 1], plus, minus);
    }
    q
}

/// Precomputed per-configuration data for fixed angles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisTables {
    pub p: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub q_amp: Vec<Complex64>,
    pub rank: Vec<u8>,
    pub bar: Vec<u32>,
    pub partition: Vec<Partition>,
    /// `D` in ascending `≻` order.
    pub d_order: Vec<u32>,
    /// Position of each configuration in `d_order`, `u32::MAX` outside `D`.
    pub order_position: Vec<u32>,
}

impl BasisTables {
    pub fn new(gamma: &[f64], beta: &[f64]) -> Result<Self> {
        Self::with_max_level(gamma, beta, DEFAULT_MAX_LEVEL)
    }

    pub fn with_max_level(gamma: &[f64], beta: &[f64], max_level: usize) -> Result<Self> {
        let p = gamma.len();
        if beta.len() != p {
            return Err(Error::Shape(format!("{} gammas but {} betas", p, beta.len())));
        }
        if p == 0 {
            return Err(Error::Shape("depth must be at least 1".into()));
        }
        let cap = max_level.min(ABSOLUTE_MAX_LEVEL);
        if p > cap {
            return Err(Error::capacity("depth", p as f64, cap as f64));
        }
        if let Some(x) = gamma.iter().chain(beta).find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite angle {x}")));
        }
        let size = 1usize << (2 * p);
        let masks = 0..size as u32;
        let phi: Vec<f64> = masks.clone().into_par_iter().map(|m| phase_of(gamma, m)).collect();
        let q_amp: Vec<Complex64> = masks.clone().into_par_iter().map(|m| amplitude_of(beta, m)).collect();
        let rank: Vec<u8> = masks.clone().into_par_iter().map(|m| rank_of(p, m) as u8).collect();
        let bar: Vec<u32> = masks.clone().into_par_iter().map(|m| bar_of(p, m)).collect();
        let partition: Vec<Partition> = masks.into_par_iter().map(|m| partition_of(p, m)).collect();

        let mut d_order: Vec<u32> = (0..size as u32).filter(|&m| partition[m as usize] == Partition::D).collect();
        d_order.par_sort_unstable_by_key(|&m| (rank[m as usize], lex_key(p, m)));
        let mut order_position = vec![u32::MAX; size];
        for (k, &m) in d_order.iter().enumerate() {
            order_position[m as usize] = k as u32;
        }
        Ok(BasisTables { p, gamma: gamma.to_vec(), beta: beta.to_vec(), phi, q_amp, rank, bar, partition, d_order, order_position })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn compare(&self, a: SpinConfig, b: SpinConfig) -> Result<Ordering> {
        let (pa, pb) = (self.order_position[a.index()], self.order_position[b.index()]);
        if pa == u32::MAX || pb == u32::MAX {
            return Err(Error::Domain("order is defined on D only".into()));
        }
        Ok(pa.cmp(&pb))
    }

    /// Little-endian binary dump: header, angles, then one array per table.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.p as u32).to_le_bytes())?;
        for x in self.gamma.iter().chain(&self.beta).chain(&self.phi) {
            w.write_all(&x.to_le_bytes())?;
        }
        for z in &self.q_amp {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.write_all(&self.rank)?;
        for b in &self.bar {
            w.write_all(&b.to_le_bytes())?;
        }
        for part in &self.partition {
            let tag: u8 = match part {
                Partition::A0 => 0,
                Partition::D => 1,
                Partition::DBar => 2,
            };
            w.write_all(&[tag])?;
        }
        w.write_all(&(self.d_order.len() as u32).to_le_bytes())?;
        for m in &self.d_order {
            w.write_all(&m.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Shape("bad table magic".into()));
        }
        if read_u32(&mut r)? != BINARY_VERSION {
            return Err(Error::Shape("unsupported table version".into()));
        }
        let p = read_u32(&mut r)? as usize;
        if p == 0 || p > ABSOLUTE_MAX_LEVEL {
            return Err(Error::Shape(format!("bad depth {p}")));
        }
        let size = 1usize << (2 * p);
        let gamma = read_f64s(&mut r, p)?;
        let beta = read_f64s(&mut r, p)?;
        let phi = read_f64s(&mut r, size)?;
        let raw = read_f64s(&mut r, 2 * size)?;
        let q_amp = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let mut rank = vec![0u8; size];
        r.read_exact(&mut rank)?;
        let bar = (0..size).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
        let mut tags = vec![0u8; size];
        r.read_exact(&mut tags)?;
        let partition = tags
            .iter()
            .map(|t| match t {
                0 => Ok(Partition::A0),
                1 => Ok(Partition::D),
                2 => Ok(Partition::DBar),
                _ => Err(Error::Shape(format!("bad partition tag {t}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let nd = read_u32(&mut r)? as usize;
        if nd > size {
            return Err(Error::Shape("D larger than A".into()));
        }
        let d_order = (0..nd).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
        let mut order_position = vec![u32::MAX; size];
        for (k, &m) in d_order.iter().enumerate() {
            *order_position.get_mut(m as usize).ok_or_else(|| Error::Shape("order entry out of range".into()))? = k as u32;
        }
        Ok(BasisTables { p, gamma, beta, phi, q_amp, rank, bar, partition, d_order, order_position })
    }

    pub fn to_json(&self) -> Result<String> {
        if self.p > 8 {
            return Err(Error::capacity("JSON table dump depth", self.p as f64, 8.0));
        }
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}
