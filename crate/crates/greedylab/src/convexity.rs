//! Lattice r-sums and averages, the lattice Khintchine sandwich, r-convexity
//! constants, the L-convexity probe, the Maurey-type inequality, and the
//! strong-absoluteness profiler with its series tests.
//!
//! Sign averages use real signs and exact enumeration up to a hard family-size
//! cap; every reported constant is an empirical bound, never a proven sup.

use serde::Serialize;

use crate::democracy::fit_power_log;
use crate::error::{Error, Result};
use crate::numutil::kahan_sum;
use crate::sampler::VectorSampler;
use crate::spaces::{SpaceSpec, TwoSidedEstimate};
use crate::vector::{nonincreasing_rearrangement, CoefficientVector, Scalar};

/// A finite family of vectors sharing one ambient, inside a space.
#[derive(Debug, Clone)]
pub struct LatticeFamily {
    vectors: Vec<CoefficientVector>,
    space: SpaceSpec,
}

/// Family sizes above this make exact sign enumeration unaffordable.
pub const FAMILY_SIGN_CAP: usize = 20;

impl LatticeFamily {
    pub fn new(vectors: Vec<CoefficientVector>, space: SpaceSpec) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
        let ambient = first.ambient_size();
        if vectors.iter().any(|v| v.ambient_size() != ambient) {
            return Err(Error::InvalidArgument("family ambient sizes differ".into()));
        }
        Ok(Self { vectors, space })
    }

    pub fn vectors(&self) -> &[CoefficientVector] {
        &self.vectors
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ambient(&self) -> usize {
        self.vectors[0].ambient_size()
    }

    fn union_support(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self
            .vectors
            .iter()
            .flat_map(|v| v.support())
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }
}

/// `(sum_i |f_i|^r)^{1/r}` coordinatewise; `r = inf` takes the pointwise max.
pub fn lattice_r_sum(fam: &LatticeFamily, r: f64) -> Result<CoefficientVector> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("r must lie in (0, inf]".into()));
    }
    let mut out = CoefficientVector::new(fam.ambient());
    for n in fam.union_support() {
        let value = if r.is_infinite() {
            fam.vectors.iter().map(|v| v.modulus(n)).fold(0.0, f64::max)
        } else {
            kahan_sum(fam.vectors.iter().map(|v| v.modulus(n).powf(r))).powf(1.0 / r)
        };
        out.set(n, Scalar::new(value, 0.0));
    }
    Ok(out)
}

/// The r-average `|A|^{-1/r} (sum |f_i|^r)^{1/r}`.
pub fn lattice_r_average(fam: &LatticeFamily, r: f64) -> Result<CoefficientVector> {
    if r.is_infinite() {
        return Err(Error::InvalidArgument("r must be finite for averages".into()));
    }
    let sum = lattice_r_sum(fam, r)?;
    let scale = (fam.len() as f64).powf(-1.0 / r);
    Ok(sum.scale(Scalar::new(scale, 0.0)))
}

/// Both sides of the lattice Khintchine sandwich for one family.
#[derive(Debug, Clone, Serialize)]
pub struct KhintchineReport {
    /// Norm of the lattice element `(Ave_eps |sum eps_i f_i|^r)^{1/r}`.
    pub average_norm: f64,
    /// Norm of the square function `(sum |f_i|^2)^{1/2}`.
    pub square_norm: f64,
    /// Coordinatewise `max average / square`: empirical `C_r`.
    pub c_empirical: f64,
    /// Coordinatewise `max square / average`: empirical `T_r`.
    pub t_empirical: f64,
}

fn sign_average_vector(fam: &LatticeFamily, r: f64) -> Result<CoefficientVector> {
    let k = fam.len();
    if k > FAMILY_SIGN_CAP {
        return Err(Error::FamilyTooLarge {
            size: k,
            cap: FAMILY_SIGN_CAP,
        });
    }
    let patterns = 1u64 << k;
    let mut out = CoefficientVector::new(fam.ambient());
    for n in fam.union_support() {
        let values: Vec<Scalar> = fam.vectors.iter().map(|v| v.get(n)).collect();
        let mut acc = 0.0f64;
        for bits in 0..patterns {
            let mut sum = Scalar::new(0.0, 0.0);
            for (i, v) in values.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    sum -= *v;
                } else {
                    sum += *v;
                }
            }
            acc += sum.norm().powf(r);
        }
        out.set(n, Scalar::new((acc / patterns as f64).powf(1.0 / r), 0.0));
    }
    Ok(out)
}

/// Exact sign enumeration of the lattice Khintchine inequality for a family.
pub fn khintchine_check(fam: &LatticeFamily, r: f64) -> Result<KhintchineReport> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidArgument("r must be finite and positive".into()));
    }
    let average = sign_average_vector(fam, r)?;
    let square = lattice_r_sum(fam, 2.0)?;
    let mut c_emp = 0.0f64;
    let mut t_emp = 0.0f64;
    for n in fam.union_support() {
        let a = average.modulus(n);
        let s = square.modulus(n);
        if s > 0.0 {
            c_emp = c_emp.max(a / s);
            t_emp = t_emp.max(s / a);
        }
    }
    Ok(KhintchineReport {
        average_norm: fam.space.quasi_norm(&average)?,
        square_norm: fam.space.quasi_norm(&square)?,
        c_empirical: c_emp,
        t_empirical: t_emp,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MaureyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `||(sum |f_i|^2)^{1/2}|| <= C (Ave ||sum eps_i f_i||^r)^{1/r}`; the ratio
/// is an empirical lower bound on `C`.
pub fn maurey_check(fam: &LatticeFamily, r: f64) -> Result<MaureyReport> {
    let k = fam.len();
    if k > FAMILY_SIGN_CAP {
        return Err(Error::FamilyTooLarge {
            size: k,
            cap: FAMILY_SIGN_CAP,
        });
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidArgument("r must be finite and positive".into()));
    }
    let lhs = fam.space.quasi_norm(&lattice_r_sum(fam, 2.0)?)?;
    let patterns = 1u64 << k;
    let mut acc = 0.0f64;
    for bits in 0..patterns {
        let mut sum = CoefficientVector::new(fam.ambient());
        for (i, v) in fam.vectors.iter().enumerate() {
            let signed = if bits >> i & 1 == 1 {
                v.scale(Scalar::new(-1.0, 0.0))
            } else {
                v.clone()
            };
            sum = sum.add(&signed)?;
        }
        acc += fam.space.quasi_norm(&sum)?.powf(r);
    }
    let rhs = (acc / patterns as f64).powf(1.0 / r);
    Ok(MaureyReport {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

fn sample_family(
    sampler: &mut VectorSampler,
    size_cap: usize,
    space: &SpaceSpec,
) -> Result<LatticeFamily> {
    use rand::Rng;
    let k = sampler.rng().gen_range(1..=size_cap.max(1));
    let vectors = (0..k).map(|_| sampler.sample()).collect();
    LatticeFamily::new(vectors, space.clone())
}

/// Empirical lower bound on the r-convexity constant `M^(r)`:
/// `max ||(sum |f_i|^r)^{1/r}|| / (sum ||f_i||^r)^{1/r}` over sampled families.
pub fn convexity_constant(
    space: &SpaceSpec,
    r: f64,
    sampler: &mut VectorSampler,
    trials: usize,
    family_size_cap: usize,
) -> Result<TwoSidedEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let sampler_id = sampler.id();
    let seed = sampler.seed();
    let mut samples = Vec::with_capacity(trials);
    for trial in 0..trials {
        let fam = sample_family(sampler, family_size_cap, space)?;
        let lhs = space.quasi_norm(&lattice_r_sum(&fam, r)?)?;
        let rhs = kahan_sum(
            fam.vectors()
                .iter()
                .map(|f| space.quasi_norm(f).map(|n| n.powf(r)))
                .collect::<Result<Vec<_>>>()?,
        )
        .powf(1.0 / r);
        if rhs > 0.0 {
            samples.push((trial, lhs / rhs));
        }
    }
    Ok(TwoSidedEstimate::from_samples(samples, sampler_id, seed))
}

/// Grid search for the L-convexity parameter: returns the largest grid
/// epsilon for which no sampled admissible configuration violates
/// `eps ||f|| <= max_i ||f_i||`. Lower-bound semantics; never a proof.
pub fn l_convexity_probe(
    space: &SpaceSpec,
    eps_grid: &[f64],
    sampler: &mut VectorSampler,
    trials: usize,
) -> Result<f64> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon grid".into()));
    }
    if eps_grid.iter().any(|&e| !(0.0 < e && e < 1.0)) {
        return Err(Error::InvalidArgument("epsilons must lie in (0,1)".into()));
    }
    let mut grid: Vec<f64> = eps_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut passing: Option<f64> = None;
    for &eps in &grid {
        let mut violated = false;
        for _ in 0..trials {
            use rand::Rng;
            let f = sampler.sample().abs();
            if f.is_zero() {
                continue;
            }
            let k = sampler.rng().gen_range(2..=6usize);
            let supp = f.support();
            let drop = ((eps * k as f64).floor() as usize).min(k - 1);
            // rotating censor: coordinate at position t is zeroed in exactly
            // `drop` of the k copies, so sum_i f_i >= (1 - eps) k f holds.
            let family: Vec<CoefficientVector> = (0..k)
                .map(|i| {
                    let mut g = CoefficientVector::new(f.ambient_size());
                    for (t, &n) in supp.iter().enumerate() {
                        if (t + i) % k >= drop {
                            g.set(n, f.get(n));
                        }
                    }
                    g
                })
                .collect();
            let max_part = family
                .iter()
                .map(|g| space.quasi_norm(g))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            if eps * space.quasi_norm(&f)? > max_part * (1.0 + 1e-12) {
                violated = true;
                break;
            }
        }
        if violated {
            break;
        }
        passing = Some(eps);
    }
    passing.ok_or_else(|| Error::InvalidArgument("no epsilon survived".into()))
}

/// Minimal constants `C(R)` in the strong-absoluteness inequality, measured on
/// an explicit vector family, with a finite-horizon divergence flag.
#[derive(Debug, Clone, Serialize)]
pub struct AbsolutenessProfile {
    pub r_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub diverged: Vec<bool>,
}

/// The prefix-indicator family `1_{[m]}`, `m = 1..=n`.
pub fn indicator_prefix_family(n: usize) -> Vec<CoefficientVector> {
    (1..=n)
        .map(|m| CoefficientVector::indicator(n, 1..=m).unwrap())
        .collect()
}

/// For each `R`, the minimal `C` making
/// `sum_n |a_n| <= max(C sup_n |a_n|, ||f|| / R)` hold over the family:
/// the max of `sum/sup` over members with `sum > ||f|| / R`. The divergence
/// flag reports whether `C` is still growing as the support cap doubles.
pub fn strong_absoluteness_profile(
    space: &SpaceSpec,
    r_values: &[f64],
    family: &[CoefficientVector],
) -> Result<AbsolutenessProfile> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let max_support = family.iter().map(|f| f.support_size()).max().unwrap();
    let mut c_values = Vec::with_capacity(r_values.len());
    let mut diverged = Vec::with_capacity(r_values.len());
    for &r in r_values {
        if r <= 0.0 {
            return Err(Error::InvalidArgument("R must be positive".into()));
        }
        // C restricted to members with support size <= cap, for growing caps
        let c_at_cap = |cap: usize| -> Result<f64> {
            let mut c = 0.0f64;
            for f in family {
                if f.support_size() > cap || f.is_zero() {
                    continue;
                }
                let a = nonincreasing_rearrangement(f);
                let sum = kahan_sum(a.iter().copied());
                let sup = a[0];
                if sum > space.quasi_norm(f)? / r {
                    c = c.max(sum / sup);
                }
            }
            Ok(c)
        };
        let full = c_at_cap(max_support)?;
        let half = c_at_cap(max_support / 2)?;
        let quarter = c_at_cap(max_support / 4)?;
        c_values.push(full);
        diverged.push(full > half * (1.0 + 1e-9) && half > quarter * (1.0 + 1e-9));
    }
    Ok(AbsolutenessProfile {
        r_values: r_values.to_vec(),
        c_values,
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Partial sums of `sum 1/s_m` to the horizon plus a growth-based verdict:
/// the local model `s_m ~ C m^a (1+ln m)^b` is fitted on the top of the
/// horizon and compared against the integral test. Finite-horizon diagnostic.
pub fn sa_series_test(s: &[f64], horizon: usize) -> Result<(f64, SeriesVerdict)> {
    if horizon < 64 || s.len() < horizon {
        return Err(Error::InvalidArgument(
            "need s up to a horizon of at least 64".into(),
        ));
    }
    if s.iter().take(horizon).any(|&x| x <= 0.0) {
        return Err(Error::InvalidArgument("s must be positive".into()));
    }
    let partial = kahan_sum(s.iter().take(horizon).map(|&x| 1.0 / x));

    // sample the top three octaves logarithmically for the growth fit
    let lo = horizon / 8;
    let mut ms = Vec::new();
    let mut m = lo.max(1);
    while m <= horizon {
        ms.push(m);
        m = (m as f64 * 1.15).ceil() as usize;
    }
    if *ms.last().unwrap() != horizon {
        ms.push(horizon);
    }
    let vals: Vec<f64> = ms.iter().map(|&m| s[m - 1]).collect();
    let fit = fit_power_log(&ms, &vals)?;
    let margin = 0.1;
    let verdict = if fit.power_exponent > 1.0 + margin {
        SeriesVerdict::Converges
    } else if fit.power_exponent < 1.0 - margin {
        SeriesVerdict::Diverges
    } else if fit.log_exponent > 1.0 + margin {
        SeriesVerdict::Converges
    } else if fit.log_exponent < 1.0 - margin {
        SeriesVerdict::Diverges
    } else {
        SeriesVerdict::Inconclusive
    };
    Ok((partial, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::SamplerKind;

    fn fam(space: SpaceSpec, vecs: &[&[f64]]) -> LatticeFamily {
        LatticeFamily::new(
            vecs.iter().map(|v| CoefficientVector::from_real(v)).collect(),
            space,
        )
        .unwrap()
    }

    #[test]
    fn r_sum_examples() {
        let f = fam(SpaceSpec::Lp { p: 1.0 }, &[&[3.0, 0.0], &[4.0, 0.0]]);
        let s = lattice_r_sum(&f, 2.0).unwrap();
        assert!((s.modulus(1) - 5.0).abs() < 1e-12);

        let f = fam(SpaceSpec::Lp { p: 1.0 }, &[&[1.0, 2.0], &[2.0, 1.0]]);
        let s = lattice_r_sum(&f, f64::INFINITY).unwrap();
        assert_eq!((s.modulus(1), s.modulus(2)), (2.0, 2.0));

        let single = fam(SpaceSpec::Lp { p: 1.0 }, &[&[-2.0, 1.0]]);
        let s = lattice_r_sum(&single, 0.7).unwrap();
        assert!((s.modulus(1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn r_average_examples() {
        let f = fam(SpaceSpec::Lp { p: 1.0 }, &[&[2.0, 0.0], &[0.0, 2.0]]);
        let a = lattice_r_average(&f, 1.0).unwrap();
        assert!((a.modulus(1) - 1.0).abs() < 1e-12);
        assert!((a.modulus(2) - 1.0).abs() < 1e-12);

        let two_equal = fam(SpaceSpec::Lp { p: 1.0 }, &[&[1.5, -1.0], &[1.5, 1.0]]);
        let a = lattice_r_average(&two_equal, 3.0).unwrap();
        assert!((a.modulus(1) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn khintchine_examples() {
        // singleton: everything collapses, ratios 1
        let single = fam(SpaceSpec::Lp { p: 1.0 }, &[&[2.0, -1.0]]);
        let rep = khintchine_check(&single, 1.7).unwrap();
        assert!((rep.c_empirical - 1.0).abs() < 1e-12);
        assert!((rep.t_empirical - 1.0).abs() < 1e-12);

        // disjoint unit vectors, r = 2: average equals square function
        let disj = fam(SpaceSpec::Lp { p: 1.0 }, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let rep = khintchine_check(&disj, 2.0).unwrap();
        assert!((rep.c_empirical - 1.0).abs() < 1e-12);
        assert!((rep.t_empirical - 1.0).abs() < 1e-12);

        // f1 = f2 = e1, r = 1: square coordinate sqrt(2), average coordinate 1
        let same = fam(SpaceSpec::Lp { p: 1.0 }, &[&[1.0], &[1.0]]);
        let rep = khintchine_check(&same, 1.0).unwrap();
        assert!((rep.t_empirical - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn khintchine_family_cap() {
        let vectors = vec![CoefficientVector::from_real(&[1.0]); 21];
        let f = LatticeFamily::new(vectors, SpaceSpec::Lp { p: 1.0 }).unwrap();
        assert!(matches!(
            khintchine_check(&f, 2.0),
            Err(Error::FamilyTooLarge { .. })
        ));
    }

    #[test]
    fn maurey_examples() {
        let single = fam(SpaceSpec::Lp { p: 0.5 }, &[&[1.0, 0.5]]);
        let rep = maurey_check(&single, 1.0).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);

        // disjoint unit vectors in l_p: signs are irrelevant, ratio 1
        let disj = fam(
            SpaceSpec::Lp { p: 0.5 },
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        );
        let rep = maurey_check(&disj, 0.5).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-10);

        // f1 = f2 = e1 in l_1, r = 1: lhs = sqrt(2), rhs = 1
        let same = fam(SpaceSpec::Lp { p: 1.0 }, &[&[1.0], &[1.0]]);
        let rep = maurey_check(&same, 1.0).unwrap();
        assert!((rep.lhs - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((rep.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_is_p_convex_with_constant_one() {
        let space = SpaceSpec::Lp { p: 0.5 };
        let mut sampler = VectorSampler::new(
            SamplerKind::UniformSphere { max_support: 6 },
            12,
            5,
        )
        .unwrap();
        let est = convexity_constant(&space, 0.5, &mut sampler, 50, 4).unwrap();
        // algebraic identity: ratios are identically 1
        assert!((est.lower_const - 1.0).abs() < 1e-12);
        assert!((est.upper_const - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_half_is_not_one_convex() {
        // disjoint unit vectors witness the failure of 1-convexity
        let space = SpaceSpec::Lp { p: 0.5 };
        let f = fam(space.clone(), &[&[1.0, 0.0], &[0.0, 1.0]]);
        let lhs = space.quasi_norm(&lattice_r_sum(&f, 1.0).unwrap()).unwrap();
        let rhs = 2.0; // ||e1|| + ||e2||
        assert!((lhs / rhs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn l_convexity_probe_runs() {
        let space = SpaceSpec::Lp { p: 0.5 };
        let mut sampler = VectorSampler::new(
            SamplerKind::Indicators { max_size: 8 },
            12,
            9,
        )
        .unwrap();
        let eps = l_convexity_probe(&space, &[0.1, 0.25, 0.5], &mut sampler, 30).unwrap();
        assert!(eps >= 0.1);
        assert!(l_convexity_probe(&space, &[], &mut sampler, 5).is_err());
    }

    #[test]
    fn sa_profile_indicator_oracle() {
        let family = indicator_prefix_family(64);
        let profile =
            strong_absoluteness_profile(&SpaceSpec::Lp { p: 0.5 }, &[2.0, 4.0], &family).unwrap();
        assert_eq!(profile.c_values, vec![1.0, 3.0]);
        assert_eq!(profile.diverged, vec![false, false]);

        let profile =
            strong_absoluteness_profile(&SpaceSpec::Lp { p: 1.0 }, &[2.0, 8.0], &family).unwrap();
        assert!(profile.diverged.iter().all(|&d| d));
        assert!((profile.c_values[0] - 64.0).abs() < 1e-9);
    }

    #[test]
    fn sa_profile_monotone_in_r() {
        let family = indicator_prefix_family(32);
        let profile = strong_absoluteness_profile(
            &SpaceSpec::Lp { p: 0.5 },
            &[2.0, 4.0, 8.0, 16.0],
            &family,
        )
        .unwrap();
        for w in profile.c_values.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn series_test_verdicts() {
        let horizon = 100_000;
        let sq: Vec<f64> = (1..=horizon).map(|m| (m as f64).powi(2)).collect();
        let (partial, verdict) = sa_series_test(&sq, horizon).unwrap();
        assert_eq!(verdict, SeriesVerdict::Converges);
        assert!((partial - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-3);

        let lin: Vec<f64> = (1..=horizon).map(|m| m as f64).collect();
        let (_, verdict) = sa_series_test(&lin, horizon).unwrap();
        assert_eq!(verdict, SeriesVerdict::Diverges);

        let loglin: Vec<f64> = (1..=horizon)
            .map(|m| {
                let m = m as f64;
                m * (1.0 + m.ln()).powi(2)
            })
            .collect();
        let (_, verdict) = sa_series_test(&loglin, horizon).unwrap();
        assert_eq!(verdict, SeriesVerdict::Converges);
    }
}
