//! Seeded, pluggable vector and set sources for the empirical constant
//! estimators. Every estimate records the sampler id and seed so sup-type
//! lower bounds stay auditable.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::CoefficientVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Gaussian coefficients on a random support, normalized in `l_2`.
    UniformSphere { max_support: usize },
    /// `ratio^t` profile with random signs on a random support.
    GeometricDecay { ratio: f64, max_support: usize },
    /// Heavy block of ones next to a light block of small entries.
    TwoBlock {
        heavy: usize,
        light: usize,
        scale: f64,
    },
    /// Signed indicators of random sets.
    Indicators { max_size: usize },
}

impl SamplerKind {
    pub fn id(&self) -> &'static str {
        match self {
            SamplerKind::UniformSphere { .. } => "uniform-sphere",
            SamplerKind::GeometricDecay { .. } => "geometric-decay",
            SamplerKind::TwoBlock { .. } => "two-block",
            SamplerKind::Indicators { .. } => "indicators",
        }
    }
}

pub struct VectorSampler {
    kind: SamplerKind,
    ambient: usize,
    rng: ChaCha8Rng,
    seed: u64,
}

impl VectorSampler {
    pub fn new(kind: SamplerKind, ambient: usize, seed: u64) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::InvalidArgument("ambient must be positive".into()));
        }
        Ok(Self {
            kind,
            ambient,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        })
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    fn random_support(&mut self, size: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (1..=self.ambient).collect();
        all.shuffle(&mut self.rng);
        let mut support: Vec<usize> = all.into_iter().take(size).collect();
        support.sort_unstable();
        support
    }

    pub fn sample(&mut self) -> CoefficientVector {
        let ambient = self.ambient;
        match self.kind.clone() {
            SamplerKind::UniformSphere { max_support } => {
                let size = self.rng.gen_range(1..=max_support.min(ambient));
                let support = self.random_support(size);
                let mut v = CoefficientVector::new(ambient);
                let mut sq = 0.0;
                let values: Vec<f64> = support
                    .iter()
                    .map(|_| {
                        // Box-Muller from two uniforms keeps the dependency set small
                        let u1: f64 = self.rng.gen_range(1e-12..1.0);
                        let u2: f64 = self.rng.gen::<f64>();
                        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                    })
                    .collect();
                for &x in &values {
                    sq += x * x;
                }
                let scale = if sq > 0.0 { sq.sqrt() } else { 1.0 };
                for (&n, &x) in support.iter().zip(&values) {
                    v.set_real(n, x / scale);
                }
                v
            }
            SamplerKind::GeometricDecay { ratio, max_support } => {
                let size = self.rng.gen_range(1..=max_support.min(ambient));
                let support = self.random_support(size);
                let mut v = CoefficientVector::new(ambient);
                for (t, &n) in support.iter().enumerate() {
                    let sign = if self.rng.gen::<bool>() { 1.0 } else { -1.0 };
                    v.set_real(n, sign * ratio.powi(t as i32));
                }
                v
            }
            SamplerKind::TwoBlock { heavy, light, scale } => {
                let h = heavy.min(ambient).max(1);
                let l = light.min(ambient - h);
                let support = self.random_support(h + l);
                let mut v = CoefficientVector::new(ambient);
                for (t, &n) in support.iter().enumerate() {
                    let x = if t < h { 1.0 } else { scale };
                    v.set_real(n, x);
                }
                v
            }
            SamplerKind::Indicators { max_size } => {
                let size = self.rng.gen_range(1..=max_size.min(ambient));
                let support = self.random_support(size);
                let mut v = CoefficientVector::new(ambient);
                for &n in &support {
                    let sign = if self.rng.gen::<bool>() { 1.0 } else { -1.0 };
                    v.set_real(n, sign);
                }
                v
            }
        }
    }

    /// A random subset of `1..=ambient` with `1..=max_size` elements.
    pub fn sample_set(&mut self, max_size: usize) -> Vec<usize> {
        let size = self.rng.gen_range(1..=max_size.min(self.ambient));
        self.random_support(size)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
