//! Discrete dyadic-Haar square-function model of `H_p(D^d)` for `0 < p <= 1`.
//!
//! Functions are represented by their coefficients against the `H_p`-normalized
//! tensor Haar elements `x_R = h_R / |R|^{1/p}`, and the norm is the `L_p`
//! integral of the square function, evaluated exactly on a dyadic grid (every
//! integrand is piecewise constant on the grid cells).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numutil::kahan_sum;

/// A dyadic rectangle `prod_t [k_t 2^{-j_t}, (k_t+1) 2^{-j_t})` in `[0,1)^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HaarRectangle {
    pub levels: Vec<u32>,
    pub positions: Vec<u64>,
}

impl HaarRectangle {
    pub fn new(levels: Vec<u32>, positions: Vec<u64>) -> Result<Self> {
        if levels.len() != positions.len() || levels.is_empty() {
            return Err(Error::InvalidArgument(
                "levels and positions must be nonempty and of equal length".into(),
            ));
        }
        for (&j, &k) in levels.iter().zip(&positions) {
            if k >= 1u64 << j {
                return Err(Error::InvalidArgument(format!(
                    "position {k} out of range for level {j}"
                )));
            }
        }
        Ok(Self { levels, positions })
    }

    pub fn dimension(&self) -> usize {
        self.levels.len()
    }

    /// `log2 |R| = -sum_t j_t`.
    pub fn log2_measure(&self) -> i64 {
        -(self.levels.iter().map(|&j| j as i64).sum::<i64>())
    }

    pub fn max_level(&self) -> u32 {
        *self.levels.iter().max().unwrap()
    }
}

/// Value of the `L^infty`-normalized tensor Haar function on one grid cell.
///
/// The cell is the multi-index of a dyadic cube of side `2^{-grid_level}`.
/// Requires `grid_level >= j_t + 1` on every axis so both halves are resolved.
pub fn haar_value(r: &HaarRectangle, cell: &[u64], grid_level: u32) -> Result<i8> {
    if cell.len() != r.dimension() {
        return Err(Error::InvalidArgument(
            "cell dimension does not match rectangle".into(),
        ));
    }
    if grid_level < r.max_level() + 1 {
        return Err(Error::ResolutionTooCoarse {
            needed: r.max_level() + 1,
            got: grid_level,
        });
    }
    let mut sign = 1i8;
    for ((&j, &k), &c) in r.levels.iter().zip(&r.positions).zip(cell) {
        if c >= 1u64 << grid_level {
            return Err(Error::InvalidArgument("cell index out of grid".into()));
        }
        let half = c >> (grid_level - j - 1);
        if half >> 1 != k {
            return Ok(0);
        }
        if half & 1 == 1 {
            sign = -sign;
        }
    }
    Ok(sign)
}

/// A finite expansion against `H_p`-normalized Haar tensors.
#[derive(Debug, Clone)]
pub struct HaarExpansion {
    p: f64,
    grid_level: u32,
    terms: Vec<(HaarRectangle, f64)>,
}

/// JSON shadow form of [`HaarExpansion`].
#[derive(Debug, Serialize, Deserialize)]
pub struct HaarExpansionJson {
    pub p: f64,
    pub d: usize,
    #[serde(rename = "J")]
    pub grid_level: u32,
    pub terms: Vec<HaarTermJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HaarTermJson {
    pub levels: Vec<u32>,
    pub positions: Vec<u64>,
    pub coeff: f64,
}

impl HaarExpansion {
    /// The grid must resolve every rectangle: `grid_level >= max j_t`. The
    /// square function only needs the rectangles themselves, not their halves.
    pub fn new(p: f64, grid_level: u32, terms: Vec<(HaarRectangle, f64)>) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument("p must lie in (0, 1]".into()));
        }
        let d = terms.first().map(|(r, _)| r.dimension());
        for (r, _) in &terms {
            if Some(r.dimension()) != d {
                return Err(Error::InvalidArgument("mixed dimensions in expansion".into()));
            }
            if r.max_level() > grid_level {
                return Err(Error::ResolutionTooCoarse {
                    needed: r.max_level(),
                    got: grid_level,
                });
            }
        }
        Ok(Self {
            p,
            grid_level,
            terms,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn grid_level(&self) -> u32 {
        self.grid_level
    }

    pub fn terms(&self) -> &[(HaarRectangle, f64)] {
        &self.terms
    }

    pub fn dimension(&self) -> Option<usize> {
        self.terms.first().map(|(r, _)| r.dimension())
    }

    pub fn to_json(&self) -> HaarExpansionJson {
        HaarExpansionJson {
            p: self.p,
            d: self.dimension().unwrap_or(1),
            grid_level: self.grid_level,
            terms: self
                .terms
                .iter()
                .map(|(r, c)| HaarTermJson {
                    levels: r.levels.clone(),
                    positions: r.positions.clone(),
                    coeff: *c,
                })
                .collect(),
        }
    }

    pub fn from_json(json: HaarExpansionJson) -> Result<Self> {
        let terms = json
            .terms
            .into_iter()
            .map(|t| HaarRectangle::new(t.levels, t.positions).map(|r| (r, t.coeff)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(json.p, json.grid_level, terms)
    }
}

/// `H_p` model norm: `(2^{-Jd} sum_cells S(cell)^p)^{1/p}` where
/// `S^2 = sum_R c_R^2 |R|^{-2/p} 1_R`. Exact up to float rounding.
pub fn hp_norm(e: &HaarExpansion) -> f64 {
    let d = match e.dimension() {
        Some(d) => d,
        None => return 0.0,
    };
    let j = e.grid_level;
    let cells_per_axis = 1u64 << j;
    let total_cells = cells_per_axis.pow(d as u32) as usize;
    let mut sq = vec![0.0f64; total_cells];
    for (r, c) in e.terms() {
        if *c == 0.0 {
            continue;
        }
        // |R|^{-2/p} = 2^{-log2|R| * 2/p}
        let weight = c * c * (2.0f64).powf(-(r.log2_measure() as f64) * 2.0 / e.p);
        // cell ranges covered by R on each axis
        let ranges: Vec<(u64, u64)> = r
            .levels
            .iter()
            .zip(&r.positions)
            .map(|(&jt, &k)| {
                let span = 1u64 << (j - jt);
                (k * span, (k + 1) * span)
            })
            .collect();
        add_over_box(&mut sq, &ranges, cells_per_axis, weight);
    }
    let half_p = e.p / 2.0;
    let mean = kahan_sum(sq.iter().map(|&s2| if s2 > 0.0 { s2.powf(half_p) } else { 0.0 }))
        / total_cells as f64;
    mean.powf(1.0 / e.p)
}

fn add_over_box(grid: &mut [f64], ranges: &[(u64, u64)], cells_per_axis: u64, weight: f64) {
    match ranges.len() {
        1 => {
            for x in ranges[0].0..ranges[0].1 {
                grid[x as usize] += weight;
            }
        }
        2 => {
            for x in ranges[0].0..ranges[0].1 {
                let row = x * cells_per_axis;
                for y in ranges[1].0..ranges[1].1 {
                    grid[(row + y) as usize] += weight;
                }
            }
        }
        _ => {
            // generic odometer over the remaining axes
            let mut idx: Vec<u64> = ranges.iter().map(|r| r.0).collect();
            loop {
                let mut flat = 0u64;
                for &i in &idx {
                    flat = flat * cells_per_axis + i;
                }
                grid[flat as usize] += weight;
                let mut axis = ranges.len();
                loop {
                    if axis == 0 {
                        return;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < ranges[axis].1 {
                        break;
                    }
                    idx[axis] = ranges[axis].0;
                }
            }
        }
    }
}

/// `m` pairwise-disjoint congruent rectangles at the given per-axis level,
/// enumerated row-major.
pub fn family_disjoint(m: usize, d: usize, level: u32) -> Result<Vec<HaarRectangle>> {
    let per_axis = 1u64 << level;
    let capacity = per_axis.checked_pow(d as u32).ok_or_else(|| {
        Error::InvalidArgument("grid too large".into())
    })?;
    if m as u64 > capacity {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds the {capacity} disjoint cells at level {level}"
        )));
    }
    let mut out = Vec::with_capacity(m);
    for flat in 0..m as u64 {
        let mut rem = flat;
        let mut positions = vec![0u64; d];
        for t in (0..d).rev() {
            positions[t] = rem % per_axis;
            rem /= per_axis;
        }
        out.push(HaarRectangle::new(vec![level; d], positions)?);
    }
    Ok(out)
}

/// All dyadic rectangles of measure `2^{-k}`: every level split
/// `(j_1..j_d)` with `sum j_t = k`, every position. Cardinality
/// `C(k+d-1, d-1) * 2^k`.
pub fn family_hyperbolic(k: u32, d: usize) -> Vec<HaarRectangle> {
    let mut out = Vec::new();
    let mut levels = vec![0u32; d];
    compositions(k, d, 0, &mut levels, &mut out);
    out
}

fn compositions(rem: u32, d: usize, axis: usize, levels: &mut [u32], out: &mut Vec<HaarRectangle>) {
    if axis + 1 == d {
        levels[axis] = rem;
        push_all_positions(levels, out);
        return;
    }
    for j in 0..=rem {
        levels[axis] = j;
        compositions(rem - j, d, axis + 1, levels, out);
    }
}

fn push_all_positions(levels: &[u32], out: &mut Vec<HaarRectangle>) {
    let d = levels.len();
    let mut positions = vec![0u64; d];
    loop {
        out.push(HaarRectangle {
            levels: levels.to_vec(),
            positions: positions.clone(),
        });
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            positions[axis] += 1;
            if positions[axis] < 1u64 << levels[axis] {
                break;
            }
            positions[axis] = 0;
        }
    }
}

/// Deterministic enumeration of all Haar rectangles with every per-axis level
/// at most `max_level`, ordered by (total level, levels, positions). This
/// fixes the coordinate indexing used by the Haar space kind.
pub fn enumerate_rectangles(d: usize, max_level: u32) -> Vec<HaarRectangle> {
    let mut out = Vec::new();
    for total in 0..=(max_level * d as u32) {
        let mut bucket = Vec::new();
        let mut levels = vec![0u32; d];
        bounded_compositions(total, max_level, d, 0, &mut levels, &mut bucket);
        bucket.sort();
        out.extend(bucket);
    }
    out
}

fn bounded_compositions(
    rem: u32,
    cap: u32,
    d: usize,
    axis: usize,
    levels: &mut [u32],
    out: &mut Vec<HaarRectangle>,
) {
    if axis + 1 == d {
        if rem <= cap {
            levels[axis] = rem;
            push_all_positions(levels, out);
        }
        return;
    }
    for j in 0..=rem.min(cap) {
        levels[axis] = j;
        bounded_compositions(rem - j, cap, d, axis + 1, levels, out);
    }
}
