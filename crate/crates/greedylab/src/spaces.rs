//! Quasi-norm evaluators for the concrete sequence spaces, plus weight and
//! rearrangement machinery.
//!
//! All evaluators are lattice quasi-norms: they depend only on the moduli of
//! the coordinates and are monotone under pointwise domination. Exponents may
//! be well below 1; accumulation switches to the log domain for exponents
//! under 1/4 so powers like `m^{1/p}` cannot overflow intermediate sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{enumerate_rectangles, hp_norm, HaarExpansion};
use crate::numutil::{kahan_sum, log_power_sum};
use crate::vector::{nonincreasing_rearrangement, CoefficientVector};

/// A weight `w` (nonnegative, `w_1 > 0`) given by a closed-form rule or an
/// explicit finite list, together with its primitive weight `s_m = sum_{n<=m} w_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Weight {
    Explicit { w: Vec<f64> },
    /// `s_m = m^alpha`, i.e. `w_n = n^alpha - (n-1)^alpha`.
    Power { alpha: f64 },
    /// `s_m = m^alpha (1 + ln m)^beta`.
    PowerLog { alpha: f64, beta: f64 },
    /// `w_n = value` for all n, so `s_m = value * m`.
    Constant { value: f64 },
}

impl Weight {
    pub fn validate(&self) -> Result<()> {
        match self {
            Weight::Explicit { w } => {
                if w.is_empty() || w[0] <= 0.0 {
                    return Err(Error::InvalidArgument("weight needs w_1 > 0".into()));
                }
                if w.iter().any(|&x| x < 0.0) {
                    return Err(Error::InvalidArgument("weights must be nonnegative".into()));
                }
            }
            Weight::Power { alpha } => {
                if *alpha <= 0.0 {
                    return Err(Error::InvalidArgument("alpha must be positive".into()));
                }
            }
            Weight::PowerLog { alpha, .. } => {
                if *alpha <= 0.0 {
                    return Err(Error::InvalidArgument("alpha must be positive".into()));
                }
                let mut prev = self.s(1);
                if prev <= 0.0 {
                    return Err(Error::InvalidArgument("s_1 must be positive".into()));
                }
                for m in 2..=1024 {
                    let cur = self.s(m);
                    if cur < prev {
                        return Err(Error::InvalidArgument(
                            "primitive weight must be nondecreasing".into(),
                        ));
                    }
                    prev = cur;
                }
            }
            Weight::Constant { value } => {
                if *value <= 0.0 {
                    return Err(Error::InvalidArgument("constant weight must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// `w_n` (1-based). Explicit lists are extended by zero.
    pub fn w(&self, n: usize) -> f64 {
        match self {
            Weight::Explicit { w } => w.get(n - 1).copied().unwrap_or(0.0),
            Weight::Power { .. } | Weight::PowerLog { .. } => {
                if n == 1 {
                    self.s(1)
                } else {
                    self.s(n) - self.s(n - 1)
                }
            }
            Weight::Constant { value } => *value,
        }
    }

    /// `s_m = sum_{n<=m} w_n` (closed form where the rule allows).
    pub fn s(&self, m: usize) -> f64 {
        match self {
            Weight::Explicit { w } => kahan_sum(w.iter().take(m).copied()),
            Weight::Power { alpha } => (m as f64).powf(*alpha),
            Weight::PowerLog { alpha, beta } => {
                let m = m as f64;
                m.powf(*alpha) * (1.0 + m.ln()).powf(*beta)
            }
            Weight::Constant { value } => value * m as f64,
        }
    }

    /// The prefix `s_1..s_upto` in one pass.
    pub fn primitive_prefix(&self, upto: usize) -> Vec<f64> {
        match self {
            Weight::Explicit { w } => {
                let mut out = Vec::with_capacity(upto);
                let mut acc = 0.0;
                for n in 1..=upto {
                    acc += w.get(n - 1).copied().unwrap_or(0.0);
                    out.push(acc);
                }
                out
            }
            _ => (1..=upto).map(|m| self.s(m)).collect(),
        }
    }
}

/// `primitive_weight`: the prefix sums of a weight.
pub fn primitive_weight(w: &Weight, upto: usize) -> Vec<f64> {
    w.primitive_prefix(upto)
}

/// Finite-horizon doubling diagnostic: reports `max_{m <= horizon} s_{2m}/s_m`
/// and whether the running max has stabilized over the last half of the
/// horizon (within 1e-9). A diagnostic, not a proof.
pub fn is_doubling(s: &[f64], horizon: usize) -> Result<(bool, f64)> {
    if horizon < 2 {
        return Err(Error::InvalidArgument("horizon must be at least 2".into()));
    }
    if s.len() < 2 * horizon {
        return Err(Error::InvalidArgument(format!(
            "need s up to index {}, got {}",
            2 * horizon,
            s.len()
        )));
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut at_half = f64::NEG_INFINITY;
    for m in 1..=horizon {
        let ratio = s[2 * m - 1] / s[m - 1];
        if ratio > max_ratio {
            max_ratio = ratio;
        }
        if m == horizon / 2 {
            at_half = max_ratio;
        }
    }
    Ok((max_ratio - at_half <= 1e-9, max_ratio))
}

/// A tagged description of a sequence space together with its quasi-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Lp { p: f64 },
    LorentzPQ { p: f64, q: f64 },
    WeakLorentz { weight: Weight },
    /// Finite direct sum with explicit consecutive block lengths. Blocks are
    /// combined by an `r`-sum with `r` the smallest concavity exponent among
    /// the components, which keeps the outer functional an `r`-norm.
    DirectSum { components: Vec<(SpaceSpec, usize)> },
    /// `(⊕ l_inner^{b})_{l_outer}` with explicit block lengths.
    MixedOuterInner {
        outer: f64,
        inner: f64,
        blocks: Vec<usize>,
    },
    /// Haar square-function model of `H_p(D^d)`; coordinates index the
    /// deterministic rectangle enumeration up to `max_level` per axis.
    HaarHp { p: f64, d: usize, max_level: u32 },
}

const LOG_DOMAIN_THRESHOLD: f64 = 0.25;

fn lp_of_moduli(mods: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return mods.fold(0.0, f64::max);
    }
    if p < LOG_DOMAIN_THRESHOLD {
        let logs: Vec<f64> = mods.filter(|&x| x > 0.0).map(f64::ln).collect();
        let l = log_power_sum(&logs, p);
        if l == f64::NEG_INFINITY {
            return 0.0;
        }
        return l.exp();
    }
    kahan_sum(mods.map(|x| if x > 0.0 { x.powf(p) } else { 0.0 })).powf(1.0 / p)
}

impl SpaceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Lp { p } => exponent_ok(*p),
            SpaceSpec::LorentzPQ { p, q } => {
                exponent_ok(*p)?;
                exponent_ok(*q)
            }
            SpaceSpec::WeakLorentz { weight } => weight.validate(),
            SpaceSpec::DirectSum { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidArgument("empty direct sum".into()));
                }
                for (c, len) in components {
                    c.validate()?;
                    if *len == 0 {
                        return Err(Error::InvalidArgument("zero-length block".into()));
                    }
                }
                Ok(())
            }
            SpaceSpec::MixedOuterInner { outer, inner, blocks } => {
                exponent_ok(*outer)?;
                exponent_ok(*inner)?;
                if blocks.is_empty() || blocks.iter().any(|&b| b == 0) {
                    return Err(Error::InvalidArgument("invalid block list".into()));
                }
                Ok(())
            }
            SpaceSpec::HaarHp { p, d, max_level } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidArgument("Haar model needs p in (0,1]".into()));
                }
                if *d == 0 || *d > 3 {
                    return Err(Error::InvalidArgument("Haar model supports d in 1..=3".into()));
                }
                if (*max_level as usize) * *d > 24 {
                    return Err(Error::InvalidArgument("Haar grid too large".into()));
                }
                Ok(())
            }
        }
    }

    /// Default block structure `1, 2, 3, ...` truncated at `total` coordinates.
    pub fn mixed_default_blocks(outer: f64, inner: f64, total: usize) -> Self {
        let mut blocks = Vec::new();
        let mut used = 0;
        let mut n = 1;
        while used < total {
            let b = n.min(total - used);
            blocks.push(b);
            used += b;
            n += 1;
        }
        SpaceSpec::MixedOuterInner { outer, inner, blocks }
    }

    /// An exponent `r` such that the norm is an `r`-norm (triangle inequality
    /// raised to the `r`); used to combine direct-sum blocks.
    pub fn concavity_exponent(&self) -> f64 {
        match self {
            SpaceSpec::Lp { p } => p.min(1.0),
            SpaceSpec::LorentzPQ { p, q } => p.min(*q).min(1.0),
            SpaceSpec::WeakLorentz { .. } => 1.0,
            SpaceSpec::DirectSum { components } => components
                .iter()
                .map(|(c, _)| c.concavity_exponent())
                .fold(1.0, f64::min),
            SpaceSpec::MixedOuterInner { outer, inner, .. } => outer.min(*inner).min(1.0),
            SpaceSpec::HaarHp { p, .. } => *p,
        }
    }

    /// Coordinates the space expects, when the kind fixes them.
    pub fn required_ambient(&self) -> Option<usize> {
        match self {
            SpaceSpec::DirectSum { components } => {
                Some(components.iter().map(|(_, len)| len).sum())
            }
            SpaceSpec::MixedOuterInner { blocks, .. } => Some(blocks.iter().sum()),
            SpaceSpec::HaarHp { d, max_level, .. } => {
                Some(enumerate_rectangles(*d, *max_level).len())
            }
            _ => None,
        }
    }

    /// Whether `||1_A||` depends only on `|A|`.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            SpaceSpec::Lp { .. } | SpaceSpec::LorentzPQ { .. } | SpaceSpec::WeakLorentz { .. }
        )
    }

    pub fn quasi_norm(&self, f: &CoefficientVector) -> Result<f64> {
        if let Some(required) = self.required_ambient() {
            if f.ambient_size() != required {
                return Err(Error::BlockMismatch {
                    vector: f.ambient_size(),
                    expected: required,
                });
            }
        }
        match self {
            SpaceSpec::Lp { p } => Ok(lp_of_moduli(f.iter().map(|(_, a)| a.norm()), *p)),
            SpaceSpec::LorentzPQ { p, q } => {
                let a = nonincreasing_rearrangement(f);
                Ok(lorentz_pq(&a, *p, *q))
            }
            SpaceSpec::WeakLorentz { weight } => {
                let a = nonincreasing_rearrangement(f);
                let nonzero = a.iter().take_while(|&&x| x > 0.0).count();
                let s = weight.primitive_prefix(nonzero);
                Ok(a.iter()
                    .zip(&s)
                    .map(|(&am, &sm)| sm * am)
                    .fold(0.0, f64::max))
            }
            SpaceSpec::DirectSum { components } => {
                let r = self.concavity_exponent();
                let mut offset = 0usize;
                let mut block_norms = Vec::with_capacity(components.len());
                for (space, len) in components {
                    let block = f.slice_block(offset + 1, offset + len);
                    block_norms.push(space.quasi_norm(&block)?);
                    offset += len;
                }
                Ok(lp_of_moduli(block_norms.iter().copied(), r))
            }
            SpaceSpec::MixedOuterInner { outer, inner, blocks } => {
                let mut offset = 0usize;
                let mut block_norms = Vec::with_capacity(blocks.len());
                for &len in blocks {
                    let block = f.slice_block(offset + 1, offset + len);
                    block_norms.push(lp_of_moduli(block.iter().map(|(_, a)| a.norm()), *inner));
                    offset += len;
                }
                Ok(lp_of_moduli(block_norms.iter().copied(), *outer))
            }
            SpaceSpec::HaarHp { p, d, max_level } => {
                let rects = enumerate_rectangles(*d, *max_level);
                let terms: Vec<_> = f
                    .iter()
                    .filter(|(_, a)| a.norm() > 0.0)
                    .map(|(n, a)| (rects[n - 1].clone(), a.norm()))
                    .collect();
                if terms.is_empty() {
                    return Ok(0.0);
                }
                let e = HaarExpansion::new(*p, *max_level, terms)?;
                Ok(hp_norm(&e))
            }
        }
    }

    /// `||1_A||` for `|A| = m` in a symmetric space; equals the fundamental
    /// function and both democracy functions there.
    pub fn fundamental_function_unit_vectors(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Ok(0.0);
        }
        match self {
            SpaceSpec::Lp { p } => Ok(lp_of_moduli(std::iter::repeat(1.0).take(m), *p)),
            SpaceSpec::LorentzPQ { p, q } => {
                let ones = vec![1.0; m];
                Ok(lorentz_pq(&ones, *p, *q))
            }
            SpaceSpec::WeakLorentz { weight } => Ok(weight.s(m)),
            _ => Err(Error::InvalidArgument(
                "non-symmetric space: use democracy module search".into(),
            )),
        }
    }
}

fn exponent_ok(p: f64) -> Result<()> {
    if p > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("exponents must lie in (0, inf]".into()))
    }
}

/// Discrete Lorentz functional on a nonincreasing sequence:
/// `(sum_m (a_m m^{1/p})^q / m)^{1/q}`, `sup_m a_m m^{1/p}` when `q = inf`.
fn lorentz_pq(a: &[f64], p: f64, q: f64) -> f64 {
    if q.is_infinite() {
        return a
            .iter()
            .enumerate()
            .map(|(i, &am)| am * ((i + 1) as f64).powf(1.0 / p))
            .fold(0.0, f64::max);
    }
    if p < LOG_DOMAIN_THRESHOLD || q < LOG_DOMAIN_THRESHOLD {
        let logs: Vec<f64> = a
            .iter()
            .enumerate()
            .filter(|(_, &am)| am > 0.0)
            .map(|(i, &am)| {
                let m = (i + 1) as f64;
                am.ln() + m.ln() / p - m.ln() / q
            })
            .collect();
        let l = log_power_sum(&logs, q);
        if l == f64::NEG_INFINITY {
            return 0.0;
        }
        return l.exp();
    }
    kahan_sum(a.iter().enumerate().filter(|(_, &am)| am > 0.0).map(|(i, &am)| {
        let m = (i + 1) as f64;
        (am * m.powf(1.0 / p)).powf(q) / m
    }))
    .powf(1.0 / q)
}

/// Measured implicit constants of a two-sided comparison, tagged with the
/// sampler id and seed that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct TwoSidedEstimate {
    pub lower_const: f64,
    pub upper_const: f64,
    pub samples: Vec<(usize, f64)>,
    pub sampler_id: String,
    pub seed: u64,
}

impl TwoSidedEstimate {
    pub fn from_samples(samples: Vec<(usize, f64)>, sampler_id: &str, seed: u64) -> Self {
        let lower = samples.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
        let upper = samples
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            lower_const: lower,
            upper_const: upper,
            samples,
            sampler_id: sampler_id.to_string(),
            seed,
        }
    }

    /// The empirical lower bound on a sup-type constant.
    pub fn sup_estimate(&self) -> f64 {
        self.upper_const
    }
}
