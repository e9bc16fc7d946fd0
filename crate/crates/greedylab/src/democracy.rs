//! Democracy functions, conditionality and democratic-deficiency parameters,
//! Lebesgue constants, and power-log asymptotic fitting.
//!
//! Lower democracy values over structured spaces carry an exactness flag: the
//! exhaustive path is exact, candidate-family minima are honest upper bounds
//! on the infimum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::greedy_approximation;
use crate::hardy::{family_disjoint, family_hyperbolic, hp_norm, HaarExpansion, HaarRectangle};
use crate::sampler::VectorSampler;
use crate::spaces::SpaceSpec;
use crate::vector::CoefficientVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Exhaustive,
    Families,
}

#[derive(Debug, Clone, Serialize)]
pub enum Witness {
    /// A coordinate set in a sequence space.
    Indices(Vec<usize>),
    /// A rectangle family in the Haar model.
    Rectangles(Vec<HaarRectangle>),
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiValue {
    pub value: f64,
    pub witness: Witness,
    pub exact: bool,
}

/// Democracy profile over a schedule of cardinalities.
#[derive(Debug, Clone, Serialize)]
pub struct DemocracyProfile {
    pub m_values: Vec<usize>,
    pub phi_u: Vec<PhiValue>,
    pub phi_l: Vec<PhiValue>,
    pub phi_l_eq: Vec<PhiValue>,
    pub mu: Vec<f64>,
}

fn binomial_capped(n: usize, k: usize, cap: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

const EXHAUSTIVE_CAP: u128 = 100_000;

fn for_each_subset<F: FnMut(&[usize]) -> Result<()>>(
    n: usize,
    k: usize,
    f: &mut F,
) -> Result<()> {
    let mut idx: Vec<usize> = (1..=k).collect();
    if k == 0 || k > n {
        return Ok(());
    }
    loop {
        f(&idx)?;
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if idx[i] < n - (k - 1 - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Flattened leaf blocks of a direct sum: `(leaf space, start index, length)`.
fn flatten_leaves(space: &SpaceSpec, offset: usize, out: &mut Vec<(SpaceSpec, usize, usize)>) -> Result<usize> {
    match space {
        SpaceSpec::DirectSum { components } => {
            let mut cur = offset;
            for (c, len) in components {
                match c {
                    SpaceSpec::DirectSum { .. } => {
                        cur = flatten_leaves(c, cur, out)?;
                    }
                    _ if c.is_symmetric() => {
                        out.push((c.clone(), cur, *len));
                        cur += len;
                    }
                    _ => {
                        return Err(Error::InvalidArgument(
                            "direct-sum component must be symmetric or a direct sum".into(),
                        ))
                    }
                }
            }
            Ok(cur)
        }
        _ => Err(Error::InvalidArgument("not a direct sum".into())),
    }
}

fn indicator_from_counts(
    leaves: &[(SpaceSpec, usize, usize)],
    counts: &[usize],
    ambient: usize,
) -> Result<CoefficientVector> {
    let mut set = Vec::new();
    for ((_, start, _), &c) in leaves.iter().zip(counts) {
        set.extend(start + 1..start + 1 + c);
    }
    CoefficientVector::indicator(ambient, set)
}

/// Enumerate count allocations `(c_i)` with `sum c_i = m`, `c_i <= len_i`,
/// calling `f` on each.
fn for_each_composition<F: FnMut(&[usize]) -> Result<()>>(
    caps: &[usize],
    m: usize,
    f: &mut F,
) -> Result<()> {
    fn rec<F: FnMut(&[usize]) -> Result<()>>(
        caps: &[usize],
        pos: usize,
        rem: usize,
        cur: &mut Vec<usize>,
        f: &mut F,
    ) -> Result<()> {
        if pos == caps.len() {
            if rem == 0 {
                f(cur)?;
            }
            return Ok(());
        }
        let tail_cap: usize = caps[pos + 1..].iter().sum();
        let lo = rem.saturating_sub(tail_cap);
        for c in lo..=rem.min(caps[pos]) {
            cur.push(c);
            rec(caps, pos + 1, rem - c, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    rec(caps, 0, m, &mut Vec::new(), f)
}

fn composition_count(caps: &[usize], m: usize, cap: u128) -> u128 {
    // loose upper bound: compositions of m into caps.len() parts
    binomial_capped(m + caps.len() - 1, caps.len() - 1, cap)
}

/// Greedy integer allocation optimizing `sum_b g(c_b)` over `sum c_b = m`,
/// `c_b <= caps[b]`, for a per-block value function with monotone marginals.
/// Exact for a common convex or concave `g` (exchange argument).
fn greedy_allocate(caps: &[usize], m: usize, g: impl Fn(usize) -> f64, maximize: bool) -> Option<Vec<usize>> {
    let total: usize = caps.iter().sum();
    if m > total {
        return None;
    }
    let mut counts = vec![0usize; caps.len()];
    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for (b, &cap) in caps.iter().enumerate() {
            if counts[b] >= cap {
                continue;
            }
            let marginal = g(counts[b] + 1) - g(counts[b]);
            let better = match best {
                None => true,
                Some((_, cur)) => {
                    if maximize {
                        marginal > cur + 1e-15
                    } else {
                        marginal < cur - 1e-15
                    }
                }
            };
            if better {
                best = Some((b, marginal));
            }
        }
        let (b, _) = best?;
        counts[b] += 1;
    }
    Some(counts)
}

fn haar_family_value(p: f64, family: &[HaarRectangle]) -> Result<f64> {
    let grid = family.iter().map(|r| r.max_level()).max().unwrap_or(0);
    let e = HaarExpansion::new(p, grid, family.iter().cloned().map(|r| (r, 1.0)).collect())?;
    Ok(hp_norm(&e))
}

pub fn hyperbolic_cardinality(k: u32, d: usize) -> usize {
    (binomial_capped(k as usize + d - 1, d - 1, u128::MAX >> 1) as usize) << k
}

fn phi_structured(space: &SpaceSpec, m: usize, upper: bool) -> Result<PhiValue> {
    match space {
        SpaceSpec::HaarHp { p, d, max_level } => {
            if upper {
                // disjoint congruent rectangles realize the upper function
                let mut level = 0u32;
                while (1u64 << (level * *d as u32)) < m as u64 {
                    level += 1;
                }
                if level > *max_level {
                    return Err(Error::InvalidArgument(
                        "m too large for the model's maximum level".into(),
                    ));
                }
                let fam = family_disjoint(m, *d, level)?;
                let value = haar_family_value(*p, &fam)?;
                Ok(PhiValue {
                    value,
                    witness: Witness::Rectangles(fam),
                    exact: false,
                })
            } else {
                // best hyperbolic candidate with enough rectangles, truncated to m
                let mut best: Option<(f64, Vec<HaarRectangle>)> = None;
                for k in 0..=*max_level {
                    if hyperbolic_cardinality(k, *d) < m {
                        continue;
                    }
                    let mut fam = family_hyperbolic(k, *d);
                    fam.sort();
                    fam.truncate(m);
                    let value = haar_family_value(*p, &fam)?;
                    if best.as_ref().map_or(true, |(v, _)| value < *v) {
                        best = Some((value, fam));
                    }
                }
                let (value, fam) = best.ok_or_else(|| {
                    Error::InvalidArgument("m too large for the model's maximum level".into())
                })?;
                Ok(PhiValue {
                    value,
                    witness: Witness::Rectangles(fam),
                    exact: false,
                })
            }
        }
        SpaceSpec::DirectSum { .. } => {
            let mut leaves = Vec::new();
            let ambient = flatten_leaves(space, 0, &mut leaves)?;
            let caps: Vec<usize> = leaves.iter().map(|(_, _, len)| *len).collect();
            if composition_count(&caps, m, EXHAUSTIVE_CAP) <= EXHAUSTIVE_CAP {
                let mut best: Option<(f64, Vec<usize>)> = None;
                for_each_composition(&caps, m, &mut |counts| {
                    let f = indicator_from_counts(&leaves, counts, ambient)?;
                    let v = space.quasi_norm(&f)?;
                    let better = match &best {
                        None => true,
                        Some((cur, _)) => {
                            if upper {
                                v > *cur
                            } else {
                                v < *cur
                            }
                        }
                    };
                    if better {
                        best = Some((v, counts.to_vec()));
                    }
                    Ok(())
                })?;
                let (value, counts) =
                    best.ok_or_else(|| Error::InvalidArgument("m exceeds ambient".into()))?;
                let witness = indicator_from_counts(&leaves, &counts, ambient)?.support();
                Ok(PhiValue {
                    value,
                    witness: Witness::Indices(witness),
                    exact: true,
                })
            } else {
                // pure-block candidates only
                let mut best: Option<(f64, Vec<usize>)> = None;
                for (b, &cap) in caps.iter().enumerate() {
                    if cap < m {
                        continue;
                    }
                    let mut counts = vec![0usize; caps.len()];
                    counts[b] = m;
                    let f = indicator_from_counts(&leaves, &counts, ambient)?;
                    let v = space.quasi_norm(&f)?;
                    let better = best
                        .as_ref()
                        .map_or(true, |(cur, _)| if upper { v > *cur } else { v < *cur });
                    if better {
                        best = Some((v, f.support()));
                    }
                }
                let (value, witness) =
                    best.ok_or_else(|| Error::InvalidArgument("no feasible block".into()))?;
                Ok(PhiValue {
                    value,
                    witness: Witness::Indices(witness),
                    exact: false,
                })
            }
        }
        SpaceSpec::MixedOuterInner { outer, inner, blocks } => {
            let ambient: usize = blocks.iter().sum();
            if m > ambient {
                return Err(Error::InvalidArgument("m exceeds ambient".into()));
            }
            let t = outer / inner;
            let counts = greedy_allocate(blocks, m, |c| (c as f64).powf(t), upper)
                .ok_or_else(|| Error::InvalidArgument("m exceeds ambient".into()))?;
            let leaves: Vec<(SpaceSpec, usize, usize)> = {
                let mut out = Vec::new();
                let mut off = 0;
                for &len in blocks {
                    out.push((SpaceSpec::Lp { p: *inner }, off, len));
                    off += len;
                }
                out
            };
            let f = indicator_from_counts(&leaves, &counts, ambient)?;
            let value = space.quasi_norm(&f)?;
            Ok(PhiValue {
                value,
                witness: Witness::Indices(f.support()),
                exact: true,
            })
        }
        _ => unreachable!("symmetric kinds handled by the caller"),
    }
}

fn phi_exhaustive(space: &SpaceSpec, m: usize, ambient: usize, upper: bool) -> Result<PhiValue> {
    if binomial_capped(ambient, m, EXHAUSTIVE_CAP) > EXHAUSTIVE_CAP {
        return Err(Error::InvalidArgument(
            "exhaustive search infeasible at this scale".into(),
        ));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_subset(ambient, m, &mut |set| {
        let f = CoefficientVector::indicator(ambient, set.iter().copied())?;
        let v = space.quasi_norm(&f)?;
        let better = best
            .as_ref()
            .map_or(true, |(cur, _)| if upper { v > *cur } else { v < *cur });
        if better {
            best = Some((v, set.to_vec()));
        }
        Ok(())
    })?;
    let (value, witness) =
        best.ok_or_else(|| Error::InvalidArgument("empty subset enumeration".into()))?;
    Ok(PhiValue {
        value,
        witness: Witness::Indices(witness),
        exact: true,
    })
}

/// `phi_u(m) = sup_{|A| <= m} ||1_A||`. Lattice monotonicity pins the sup at
/// `|A| = m`, so only sets of exact size m are searched.
pub fn phi_upper(space: &SpaceSpec, m: usize, strategy: Strategy, ambient: usize) -> Result<PhiValue> {
    phi_directional(space, m, strategy, ambient, true)
}

/// `phi_l(m) = inf_{|A| >= m} ||1_A||`; by lattice monotonicity this equals
/// the equal-cardinality variant `inf_{|A| = m} ||1_A||`.
pub fn phi_lower(space: &SpaceSpec, m: usize, strategy: Strategy, ambient: usize) -> Result<PhiValue> {
    phi_directional(space, m, strategy, ambient, false)
}

/// The `inf_{|A| = m}` variant; identical to `phi_lower` for lattice norms.
pub fn phi_lower_eq(
    space: &SpaceSpec,
    m: usize,
    strategy: Strategy,
    ambient: usize,
) -> Result<PhiValue> {
    phi_directional(space, m, strategy, ambient, false)
}

fn phi_directional(
    space: &SpaceSpec,
    m: usize,
    strategy: Strategy,
    ambient: usize,
    upper: bool,
) -> Result<PhiValue> {
    if m == 0 {
        return Err(Error::InvalidArgument("m >= 1 required".into()));
    }
    // the Haar model checks feasibility against its own level budget
    if !matches!(space, SpaceSpec::HaarHp { .. }) && m > ambient {
        return Err(Error::InvalidArgument(format!("m must lie in 1..={ambient}")));
    }
    if space.is_symmetric() {
        let value = space.fundamental_function_unit_vectors(m)?;
        return Ok(PhiValue {
            value,
            witness: Witness::Indices((1..=m).collect()),
            exact: true,
        });
    }
    match strategy {
        Strategy::Exhaustive => phi_exhaustive(space, m, ambient, upper),
        Strategy::Families => phi_structured(space, m, upper),
        Strategy::Auto => {
            if !matches!(space, SpaceSpec::HaarHp { .. })
                && binomial_capped(ambient, m, EXHAUSTIVE_CAP) <= EXHAUSTIVE_CAP
            {
                phi_exhaustive(space, m, ambient, upper)
            } else {
                phi_structured(space, m, upper)
            }
        }
    }
}

/// Re-evaluates the norm a witness claims to achieve.
pub fn reevaluate_witness(space: &SpaceSpec, witness: &Witness, ambient: usize) -> Result<f64> {
    match witness {
        Witness::Indices(set) => {
            let f = CoefficientVector::indicator(ambient, set.iter().copied())?;
            space.quasi_norm(&f)
        }
        Witness::Rectangles(fam) => {
            let p = match space {
                SpaceSpec::HaarHp { p, .. } => *p,
                _ => return Err(Error::InvalidArgument("rectangle witness needs a Haar space".into())),
            };
            haar_family_value(p, fam)
        }
    }
}

/// Conditionality parameter `k_m = sup_{|A| <= m} ||S_A||`. Every implemented
/// space is a coordinate lattice, so coordinate projections are contractions
/// and the parameter is exactly 1; the short-circuit is asserted by the
/// sampling check in the test suite.
pub fn unconditionality_parameter_km(space: &SpaceSpec, m: usize) -> Result<f64> {
    space.validate()?;
    if m == 0 {
        return Err(Error::InvalidArgument("m >= 1 required".into()));
    }
    Ok(1.0)
}

/// Empirical check of `||S_A f|| / ||f||` over sampled vectors and sets.
pub fn km_empirical(
    space: &SpaceSpec,
    m: usize,
    sampler: &mut VectorSampler,
    trials: usize,
) -> Result<f64> {
    let mut best = 0.0f64;
    for _ in 0..trials {
        let f = sampler.sample();
        if f.is_zero() {
            continue;
        }
        let denom = space.quasi_norm(&f)?;
        let set = sampler.sample_set(m);
        let proj = crate::greedy::coordinate_projection(&f, &set);
        let ratio = space.quasi_norm(&proj)? / denom;
        if ratio > best {
            best = ratio;
        }
    }
    Ok(best)
}

/// `mu_m = sup_{l <= m} phi_u(l) / phi_l_eq(l)` (valid for UCC bases).
pub fn democracy_parameter_mum(
    space: &SpaceSpec,
    m: usize,
    strategy: Strategy,
    ambient: usize,
) -> Result<f64> {
    let mut sup = 1.0f64;
    for l in 1..=m {
        let u = phi_upper(space, l, strategy, ambient)?.value;
        let lo = phi_lower_eq(space, l, strategy, ambient)?.value;
        sup = sup.max(u / lo);
    }
    Ok(sup)
}

/// `mu` evaluated cumulatively on an explicit grid of cardinalities; used for
/// the Haar model where a full sweep over `l <= m` is not affordable.
pub fn mu_on_grid(
    space: &SpaceSpec,
    ms: &[usize],
    strategy: Strategy,
    ambient: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ms.len());
    let mut sup = 1.0f64;
    for &m in ms {
        let u = phi_upper(space, m, strategy, ambient)?.value;
        let lo = phi_lower_eq(space, m, strategy, ambient)?.value;
        sup = sup.max(u / lo);
        out.push(sup);
    }
    Ok(out)
}

/// Raw doubly-exponential definition of `mu_m`, for small-scale validation:
/// `sup_{|A| = |B| <= m} ||1_A|| / ||1_B||` by full subset enumeration.
pub fn mu_raw_oracle(space: &SpaceSpec, m: usize, ambient: usize) -> Result<f64> {
    let mut sup = 1.0f64;
    for l in 1..=m {
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        for_each_subset(ambient, l, &mut |set| {
            let f = CoefficientVector::indicator(ambient, set.iter().copied())?;
            let v = space.quasi_norm(&f)?;
            max = max.max(v);
            min = min.min(v);
            Ok(())
        })?;
        sup = sup.max(max / min);
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LebesgueMode {
    Proxy,
    Direct,
}

/// `L_m`: the proxy mode returns `max(k_m, mu_m)`; the direct mode returns an
/// empirical lower bound on `sup ||f - G_m f|| / ||f - z||` over sampled `f`
/// and m-term competitors `z` (projections of `f`, which are optimal m-term
/// approximations with a fixed support in a lattice norm).
pub fn lebesgue_constant(
    space: &SpaceSpec,
    m: usize,
    mode: LebesgueMode,
    strategy: Strategy,
    ambient: usize,
    sampler: Option<(&mut VectorSampler, usize)>,
) -> Result<f64> {
    match mode {
        LebesgueMode::Proxy => {
            let km = unconditionality_parameter_km(space, m)?;
            let mu = democracy_parameter_mum(space, m, strategy, ambient)?;
            Ok(km.max(mu))
        }
        LebesgueMode::Direct => {
            let (sampler, trials) = sampler.ok_or_else(|| {
                Error::InvalidArgument("direct mode needs a sampler".into())
            })?;
            let mut best = 0.0f64;
            for _ in 0..trials {
                let f = sampler.sample();
                if f.is_zero() || f.support_size() <= m {
                    continue;
                }
                let greedy_err = space.quasi_norm(&f.sub(&greedy_approximation(&f, m)?)?)?;
                // competitor supports: random sets plus the greedy set itself
                let mut best_competitor = space
                    .quasi_norm(&f.sub(&greedy_approximation(&f, m)?)?)?;
                for _ in 0..8 {
                    let set = sampler.sample_set(m);
                    let z = crate::greedy::coordinate_projection(&f, &set);
                    let err = space.quasi_norm(&f.sub(&z)?)?;
                    if err < best_competitor {
                        best_competitor = err;
                    }
                }
                if best_competitor > 0.0 {
                    best = best.max(greedy_err / best_competitor);
                }
            }
            Ok(best)
        }
    }
}

/// Least-squares fit of `values ~ C * m^a * (1 + ln m)^b`.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub power_exponent: f64,
    pub log_exponent: f64,
    pub constant: f64,
    pub residual: f64,
}

pub fn fit_power_log(m_values: &[usize], values: &[f64]) -> Result<FitResult> {
    fit_general(m_values, values, true, std::f64::consts::E)
}

/// Two-parameter fit `values ~ C * (1 + log_base m)^b` with no power term.
pub fn fit_log_power(m_values: &[usize], values: &[f64], base: f64) -> Result<FitResult> {
    fit_general(m_values, values, false, base)
}

fn fit_general(
    m_values: &[usize],
    values: &[f64],
    with_power: bool,
    base: f64,
) -> Result<FitResult> {
    if m_values.len() != values.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    let mut distinct: Vec<usize> = m_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InvalidArgument(
            "need at least 4 distinct m values".into(),
        ));
    }
    let span = *distinct.last().unwrap() as f64 / distinct[0] as f64;
    if span < 4.0 {
        return Err(Error::InvalidArgument(
            "m values must span at least two octaves".into(),
        ));
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument("values must be positive".into()));
    }

    let rows: Vec<[f64; 3]> = m_values
        .iter()
        .map(|&m| {
            let m = m as f64;
            let lx = if with_power { m.ln() } else { 0.0 };
            [lx, (1.0 + m.ln() / base.ln()).ln(), 1.0]
        })
        .collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();

    // normal equations, 3x3
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (r, &yi) in rows.iter().zip(&y) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += r[i] * r[j];
            }
            aty[i] += r[i] * yi;
        }
    }
    let active: Vec<usize> = if with_power { vec![0, 1, 2] } else { vec![1, 2] };
    let coef = solve_spd(&ata, &aty, &active)?;
    let pred: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let residual = pred
        .iter()
        .zip(&y)
        .map(|(p, yi)| (p - yi).abs())
        .fold(0.0, f64::max);
    Ok(FitResult {
        power_exponent: coef[0],
        log_exponent: coef[1],
        constant: coef[2].exp(),
        residual,
    })
}

fn solve_spd(ata: &[[f64; 3]; 3], aty: &[f64; 3], active: &[usize]) -> Result<Vec<f64>> {
    let n = active.len();
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (ri, &i) in active.iter().enumerate() {
        for (ci, &j) in active.iter().enumerate() {
            a[ri][ci] = ata[i][j];
        }
        a[ri][n] = aty[i];
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::DegenerateFit);
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut sol = vec![0.0f64; 3];
    for (ri, &i) in active.iter().enumerate() {
        sol[i] = a[ri][n] / a[ri][ri];
    }
    Ok(sol)
}
