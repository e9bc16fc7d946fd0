//! The thresholding greedy operator family: greedy sets with the exact tie
//! rule, greedy approximations, restricted truncation, coordinate projections
//! and sign indicators, plus empirical estimation of the quasi-greedy,
//! truncation and UCC constants.

use crate::error::{Error, Result};
use crate::sampler::VectorSampler;
use crate::spaces::{SpaceSpec, TwoSidedEstimate};
use crate::vector::{nonincreasing_rearrangement, sgn, CoefficientVector, SignPattern};

/// Indices of `f` ordered by (modulus descending, index ascending). The first
/// `m` entries form the greedy set `A_m(f)`.
#[derive(Debug, Clone)]
pub struct GreedyOrdering {
    permutation: Vec<usize>,
}

impl GreedyOrdering {
    pub fn of(f: &CoefficientVector) -> Self {
        let mut indexed: Vec<(usize, f64)> = (1..=f.ambient_size())
            .map(|n| (n, f.modulus(n)))
            .collect();
        indexed.sort_by(|(i, a), (j, b)| b.partial_cmp(a).unwrap().then(i.cmp(j)));
        Self {
            permutation: indexed.into_iter().map(|(n, _)| n).collect(),
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn prefix(&self, m: usize) -> Vec<usize> {
        let mut set: Vec<usize> = self.permutation[..m].to_vec();
        set.sort_unstable();
        set
    }
}

/// The greedy set `A_m(f)`, unique under the tie rule.
pub fn greedy_set(f: &CoefficientVector, m: usize) -> Result<Vec<usize>> {
    if m > f.ambient_size() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds ambient size {}",
            f.ambient_size()
        )));
    }
    Ok(GreedyOrdering::of(f).prefix(m))
}

/// `G_m(f)`: the restriction of `f` to its greedy set.
pub fn greedy_approximation(f: &CoefficientVector, m: usize) -> Result<CoefficientVector> {
    let set = greedy_set(f, m)?;
    Ok(coordinate_projection(f, &set))
}

/// The m-th restricted truncation `R_m(f)`: common modulus equal to the m-th
/// largest coefficient modulus, original signs, on `A_m(f)`.
pub fn restricted_truncation(f: &CoefficientVector, m: usize) -> Result<CoefficientVector> {
    let set = greedy_set(f, m)?;
    let mut out = CoefficientVector::new(f.ambient_size());
    if m == 0 {
        return Ok(out);
    }
    let min_modulus = set
        .iter()
        .map(|&n| f.modulus(n))
        .fold(f64::INFINITY, f64::min);
    for &n in &set {
        out.set(n, sgn(f.get(n)) * min_modulus);
    }
    Ok(out)
}

/// `S_A(f)`: entries kept on `A`, zero elsewhere.
pub fn coordinate_projection(f: &CoefficientVector, set: &[usize]) -> CoefficientVector {
    let mut out = CoefficientVector::new(f.ambient_size());
    for &n in set {
        let a = f.get(n);
        if a.norm() > 0.0 {
            out.set(n, a);
        }
    }
    out
}

/// `1_{eps,A} = sum_{n in A} eps_n e_n`.
pub fn indicator_sum(eps: &SignPattern, set: &[usize], ambient: usize) -> Result<CoefficientVector> {
    let mut out = CoefficientVector::new(ambient);
    for &n in set {
        let e = eps.get(n).ok_or_else(|| {
            Error::InvalidArgument(format!("sign pattern undefined at index {n}"))
        })?;
        out.try_set(n, e)?;
    }
    Ok(out)
}

fn sup_over_operator<F>(
    space: &SpaceSpec,
    sampler: &mut VectorSampler,
    trials: usize,
    apply: F,
) -> Result<TwoSidedEstimate>
where
    F: Fn(&CoefficientVector, usize) -> Result<CoefficientVector>,
{
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let sampler_id = sampler.id();
    let seed = sampler.seed();
    let mut samples = Vec::with_capacity(trials);
    for trial in 0..trials {
        let f = sampler.sample();
        if f.is_zero() {
            return Err(Error::SamplerExhausted);
        }
        let denom = space.quasi_norm(&f)?;
        let mut best = 0.0f64;
        for m in 1..=f.support_size() {
            let image = apply(&f, m)?;
            let ratio = space.quasi_norm(&image)? / denom;
            if ratio > best {
                best = ratio;
            }
        }
        samples.push((trial, best));
    }
    Ok(TwoSidedEstimate::from_samples(samples, sampler_id, seed))
}

/// Empirical lower bound on the quasi-greedy constant:
/// `max ||G_m(f)|| / ||f||` over sampled `f` and all `m`.
pub fn quasi_greedy_constant(
    space: &SpaceSpec,
    sampler: &mut VectorSampler,
    trials: usize,
) -> Result<TwoSidedEstimate> {
    sup_over_operator(space, sampler, trials, greedy_approximation)
}

/// Empirical lower bound on `C_r = sup_m ||R_m||`.
pub fn truncation_qg_constant(
    space: &SpaceSpec,
    sampler: &mut VectorSampler,
    trials: usize,
) -> Result<TwoSidedEstimate> {
    sup_over_operator(space, sampler, trials, restricted_truncation)
}

/// How many real sign patterns are enumerated exactly before falling back to
/// seeded Monte Carlo.
pub const SIGN_ENUMERATION_CAP: usize = 12;
pub const SIGN_MC_SAMPLES: usize = 1 << 12;

/// Norms of `1_{eps,A}` over real sign patterns: exact enumeration of all
/// `2^|A|` patterns when `|A|` is at most the cap, seeded Monte Carlo above.
fn sign_indicator_norms(
    space: &SpaceSpec,
    set: &[usize],
    ambient: usize,
    sampler: &mut VectorSampler,
) -> Result<Vec<f64>> {
    let mut norms = Vec::new();
    if set.len() <= SIGN_ENUMERATION_CAP {
        for bits in 0..(1u64 << set.len()) {
            let eps = SignPattern::from_bits(set, bits);
            norms.push(space.quasi_norm(&indicator_sum(&eps, set, ambient)?)?);
        }
    } else {
        for _ in 0..SIGN_MC_SAMPLES {
            let bits = sampler.rng().gen::<u64>();
            let eps = SignPattern::from_bits(set, bits);
            norms.push(space.quasi_norm(&indicator_sum(&eps, set, ambient)?)?);
        }
    }
    Ok(norms)
}

/// Empirical lower bound on the UCC constant `C_u`:
/// `max ||1_{delta,A}|| / ||1_{eps,A}||` over sampled sets and sign pairs.
pub fn ucc_constant(
    space: &SpaceSpec,
    sampler: &mut VectorSampler,
    max_set_size: usize,
    sign_trials: usize,
) -> Result<TwoSidedEstimate> {
    if sign_trials == 0 {
        return Err(Error::InvalidArgument("sign_trials must be at least 1".into()));
    }
    let sampler_id = sampler.id();
    let seed = sampler.seed();
    let ambient = sampler.ambient();
    let mut samples = Vec::with_capacity(sign_trials);
    for trial in 0..sign_trials {
        let set = sampler.sample_set(max_set_size);
        let norms = sign_indicator_norms(space, &set, ambient, sampler)?;
        let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        samples.push((trial, max / min));
    }
    Ok(TwoSidedEstimate::from_samples(samples, sampler_id, seed))
}

/// Measured constant in the weak-Lorentz embedding inequality:
/// `sup_m a_m phi_l(m) / ||f||` for one vector, with `phi_l` supplied as a
/// prefix of lower-democracy values.
pub fn lorentz_embedding_ratio(
    space: &SpaceSpec,
    f: &CoefficientVector,
    phi_l: &[f64],
) -> Result<f64> {
    let norm = space.quasi_norm(f)?;
    if norm == 0.0 {
        return Err(Error::InvalidArgument("zero vector".into()));
    }
    let a = nonincreasing_rearrangement(f);
    let sup = a
        .iter()
        .zip(phi_l)
        .map(|(&am, &phi)| am * phi)
        .fold(0.0, f64::max);
    Ok(sup / norm)
}

use rand::Rng;
