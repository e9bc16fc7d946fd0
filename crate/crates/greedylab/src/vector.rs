//! Finitely supported coefficient families over an index set `1..=N`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = Complex64;

/// The sign function with the convention `sgn(0) = 1`.
pub fn sgn(a: Scalar) -> Scalar {
    let r = a.norm();
    if r == 0.0 {
        Scalar::new(1.0, 0.0)
    } else {
        a / r
    }
}

/// A finitely supported scalar family over `1..=ambient_size`.
///
/// Entries with value exactly zero may be stored or omitted; all operations
/// treat the two representations identically.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    ambient: usize,
    entries: BTreeMap<usize, Scalar>,
}

impl CoefficientVector {
    pub fn new(ambient: usize) -> Self {
        Self {
            ambient,
            entries: BTreeMap::new(),
        }
    }

    /// Dense real vector; index `i` of the slice becomes coordinate `i + 1`.
    pub fn from_real(values: &[f64]) -> Self {
        let mut v = Self::new(values.len());
        for (i, &x) in values.iter().enumerate() {
            v.set_real(i + 1, x);
        }
        v
    }

    pub fn from_pairs(ambient: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut v = Self::new(ambient);
        for &(n, x) in pairs {
            v.try_set(n, Scalar::new(x, 0.0))?;
        }
        Ok(v)
    }

    /// The indicator `1_A` of a set of coordinates.
    pub fn indicator<I: IntoIterator<Item = usize>>(ambient: usize, set: I) -> Result<Self> {
        let mut v = Self::new(ambient);
        for n in set {
            v.try_set(n, Scalar::new(1.0, 0.0))?;
        }
        Ok(v)
    }

    pub fn ambient_size(&self) -> usize {
        self.ambient
    }

    pub fn try_set(&mut self, index: usize, value: Scalar) -> Result<()> {
        if index == 0 || index > self.ambient {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range 1..={}",
                self.ambient
            )));
        }
        self.entries.insert(index, value);
        Ok(())
    }

    /// Panics on out-of-range indices; use `try_set` for checked insertion.
    pub fn set(&mut self, index: usize, value: Scalar) {
        self.try_set(index, value).unwrap();
    }

    pub fn set_real(&mut self, index: usize, value: f64) {
        self.set(index, Scalar::new(value, 0.0));
    }

    pub fn get(&self, index: usize) -> Scalar {
        self.entries
            .get(&index)
            .copied()
            .unwrap_or(Scalar::new(0.0, 0.0))
    }

    pub fn modulus(&self, index: usize) -> f64 {
        self.get(index).norm()
    }

    /// Stored entries in ascending index order (may include explicit zeros).
    pub fn iter(&self) -> impl Iterator<Item = (usize, Scalar)> + '_ {
        self.entries.iter().map(|(&n, &a)| (n, a))
    }

    /// Indices carrying a nonzero value.
    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.entries.values().filter(|a| a.norm() > 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.support_size() == 0
    }

    pub fn scale(&self, lambda: Scalar) -> Self {
        let mut out = self.clone();
        for a in out.entries.values_mut() {
            *a *= lambda;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::BlockMismatch {
                vector: other.ambient,
                expected: self.ambient,
            });
        }
        let mut out = self.clone();
        for (n, a) in other.iter() {
            let cur = out.get(n);
            out.set(n, cur + a);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Scalar::new(-1.0, 0.0)))
    }

    /// Coordinatewise modulus, as a vector with nonnegative real entries.
    pub fn abs(&self) -> Self {
        let mut out = Self::new(self.ambient);
        for (n, a) in self.iter() {
            out.set(n, Scalar::new(a.norm(), 0.0));
        }
        out
    }

    /// `|self| <= |other|` coordinatewise.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.iter().all(|(n, a)| a.norm() <= other.modulus(n))
    }

    /// Restriction to consecutive coordinates `lo..=hi`, reindexed to `1..`.
    pub fn slice_block(&self, lo: usize, hi: usize) -> Self {
        let mut out = Self::new(hi + 1 - lo);
        for (n, a) in self.iter() {
            if n >= lo && n <= hi {
                out.set(n + 1 - lo, a);
            }
        }
        out
    }
}

/// The non-increasing rearrangement `(a_m)`: moduli sorted descending, padded
/// with zeros to the ambient size.
pub fn nonincreasing_rearrangement(f: &CoefficientVector) -> Vec<f64> {
    let mut mods: Vec<f64> = f.iter().map(|(_, a)| a.norm()).collect();
    mods.sort_by(|x, y| y.partial_cmp(x).unwrap());
    mods.truncate(f.ambient_size());
    mods.resize(f.ambient_size(), 0.0);
    mods
}

/// A family of unimodular scalars over a finite index set.
#[derive(Debug, Clone)]
pub struct SignPattern {
    values: BTreeMap<usize, Scalar>,
}

impl SignPattern {
    pub fn from_values(values: BTreeMap<usize, Scalar>) -> Result<Self> {
        for a in values.values() {
            if (a.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(
                    "sign pattern values must be unimodular".into(),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn all_ones<I: IntoIterator<Item = usize>>(set: I) -> Self {
        Self {
            values: set
                .into_iter()
                .map(|n| (n, Scalar::new(1.0, 0.0)))
                .collect(),
        }
    }

    /// Real signs read off a bitmask over `set` (ascending order); bit `t` set
    /// means `-1` at the `t`-th index.
    pub fn from_bits(set: &[usize], bits: u64) -> Self {
        let values = set
            .iter()
            .enumerate()
            .map(|(t, &n)| {
                let s = if bits >> t & 1 == 1 { -1.0 } else { 1.0 };
                (n, Scalar::new(s, 0.0))
            })
            .collect();
        Self { values }
    }

    /// The sign family `(sgn(a_n))_{n in A}` of `f`.
    pub fn of_vector(f: &CoefficientVector, set: &[usize]) -> Self {
        let values = set.iter().map(|&n| (n, sgn(f.get(n)))).collect();
        Self { values }
    }

    pub fn get(&self, index: usize) -> Option<Scalar> {
        self.values.get(&index).copied()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.values.keys().copied().collect()
    }
}

/// JSON shadow form of a coefficient vector: either a dense real array or an
/// explicit `{ambient, entries: [[index, re, im], ...]}` object.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorJson {
    Dense(Vec<f64>),
    Sparse {
        ambient: usize,
        entries: Vec<(usize, f64, f64)>,
    },
}

impl VectorJson {
    pub fn into_vector(self) -> Result<CoefficientVector> {
        match self {
            VectorJson::Dense(values) => Ok(CoefficientVector::from_real(&values)),
            VectorJson::Sparse { ambient, entries } => {
                let mut v = CoefficientVector::new(ambient);
                for (n, re, im) in entries {
                    v.try_set(n, Scalar::new(re, im))?;
                }
                Ok(v)
            }
        }
    }

    pub fn from_vector(v: &CoefficientVector) -> Self {
        VectorJson::Sparse {
            ambient: v.ambient_size(),
            entries: v.iter().map(|(n, a)| (n, a.re, a.im)).collect(),
        }
    }
}
