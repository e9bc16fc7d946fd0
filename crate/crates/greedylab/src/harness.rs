//! Experiment configs, built-in presets, and deterministic CSV export.
//!
//! Every run is a pure function of (config, seed): randomness flows from the
//! config seed through per-trial derived seeds, and floats are exported with
//! 17 significant digits so re-runs are byte-identical.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convexity::{khintchine_check, sa_series_test, LatticeFamily};
use crate::democracy::{democracy_parameter_mum, fit_power_log, Strategy};
use crate::error::{Error, Result};
use crate::hardy::{family_hyperbolic, hp_norm, HaarExpansion};
use crate::matching::{hall_defect_check, k_fold_marriage, verify_marriage, Feasibility, MarriageInstance};
use crate::numutil::derive_seed;
use crate::sampler::{SamplerKind, VectorSampler};
use crate::spaces::SpaceSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Preset id; see [`run_experiment`] for the catalog.
    pub experiment: String,
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    /// Strictly increasing; its meaning is preset-specific (cardinalities,
    /// hyperbolic levels, horizons, or trial indices).
    pub schedule: Vec<usize>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.schedule.is_empty() {
            return Err(Error::InvalidArgument("empty schedule".into()));
        }
        if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "schedule must be strictly increasing".into(),
            ));
        }
        if let Some(space) = &self.space {
            space.validate()?;
        }
        Ok(())
    }

    /// Built-in preset with its default schedule and space.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let (space, schedule): (Option<SpaceSpec>, Vec<usize>) = match name {
            "hardy-fundamental" => (None, (1..=6).collect()),
            "mixed-mu" => (
                Some(SpaceSpec::DirectSum {
                    components: vec![
                        (SpaceSpec::Lp { p: 0.5 }, 1024),
                        (SpaceSpec::Lp { p: 0.25 }, 1024),
                    ],
                }),
                vec![1, 2, 4, 8, 16, 32, 64],
            ),
            "marriage-suite" => (None, (1..=200).collect()),
            "khintchine-suite" => (Some(SpaceSpec::Lp { p: 0.5 }), (1..=100).collect()),
            "sa-series" => (
                Some(SpaceSpec::WeakLorentz {
                    weight: crate::spaces::Weight::Power { alpha: 2.0 },
                }),
                vec![1_000, 10_000, 100_000],
            ),
            other => {
                return Err(Error::InvalidArgument(format!("unknown preset {other:?}")));
            }
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            experiment: name.to_string(),
            space,
            schedule,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub m: usize,
    pub value: f64,
    pub fitted_power: Option<f64>,
    pub fitted_log: Option<f64>,
    pub exact: bool,
    pub seed: u64,
    /// Recorded for diagnostics; deliberately excluded from CSV export so
    /// re-runs stay byte-identical.
    #[serde(skip)]
    pub wall_ms: f64,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64() * 1e3))
}

/// Attaches the power-log fit of (m, value) to every row.
fn attach_fit(rows: &mut [ResultRow]) -> Result<()> {
    let ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let fit = fit_power_log(&ms, &vals)?;
    for r in rows {
        r.fitted_power = Some(fit.power_exponent);
        r.fitted_log = Some(fit.log_exponent);
    }
    Ok(())
}

fn row(cfg: &ExperimentConfig, m: usize, value: f64, exact: bool, wall_ms: f64) -> ResultRow {
    ResultRow {
        experiment: cfg.experiment.clone(),
        m,
        value,
        fitted_power: None,
        fitted_log: None,
        exact,
        seed: cfg.seed,
        wall_ms,
    }
}

/// Random instance within the desk-scale envelope (|I| <= 10, |N| <= 12, K <= 3).
pub fn random_marriage_instance(seed: u64) -> MarriageInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i_count = rng.gen_range(1..=10usize);
    let n_count = rng.gen_range(1..=12usize);
    let k = rng.gen_range(1..=3usize);
    let sets: Vec<Vec<usize>> = (0..i_count)
        .map(|_| {
            let size = rng.gen_range(1..=n_count);
            let mut s: Vec<usize> = (0..size).map(|_| rng.gen_range(1..=n_count)).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    MarriageInstance::new(sets, k).unwrap()
}

fn run_hardy_fundamental(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &k in &cfg.schedule {
        let k = u32::try_from(k)
            .map_err(|_| Error::InvalidArgument("hyperbolic level too large".into()))?;
        let (pair, wall) = timed(|| {
            let fam = family_hyperbolic(k, 2);
            let m = fam.len();
            let terms = fam.into_iter().map(|r| (r, 1.0)).collect();
            let e = HaarExpansion::new(0.5, k, terms)?;
            Ok((m, hp_norm(&e)))
        })?;
        rows.push(row(cfg, pair.0, pair.1, true, wall));
    }
    attach_fit(&mut rows)?;
    Ok(rows)
}

fn run_mixed_mu(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let space = cfg
        .space
        .clone()
        .ok_or_else(|| Error::InvalidArgument("mixed-mu needs a space".into()))?;
    let ambient = space
        .required_ambient()
        .ok_or_else(|| Error::InvalidArgument("space has no finite ambient".into()))?;
    let mut rows = Vec::new();
    for &m in &cfg.schedule {
        let (mu, wall) =
            timed(|| democracy_parameter_mum(&space, m, Strategy::Families, ambient))?;
        rows.push(row(cfg, m, mu, true, wall));
    }
    attach_fit(&mut rows)?;
    Ok(rows)
}

fn run_marriage_suite(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &t in &cfg.schedule {
        let instance = random_marriage_instance(derive_seed(cfg.seed, t as u64));
        let (feasible, wall) = timed(|| match hall_defect_check(&instance)? {
            Feasibility::Feasible { .. } => {
                let sol = k_fold_marriage(&instance)?;
                if !verify_marriage(&instance, &sol) {
                    return Err(Error::NumericGuard("solver emitted invalid solution".into()));
                }
                Ok(1.0)
            }
            Feasibility::Infeasible { .. } => Ok(0.0),
        })?;
        rows.push(row(cfg, t, feasible, true, wall));
    }
    Ok(rows)
}

fn run_khintchine_suite(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let space = cfg
        .space
        .clone()
        .ok_or_else(|| Error::InvalidArgument("khintchine-suite needs a space".into()))?;
    let mut rows = Vec::new();
    for &t in &cfg.schedule {
        let seed = derive_seed(cfg.seed, t as u64);
        let (value, wall) = timed(|| {
            let mut sampler = VectorSampler::new(
                SamplerKind::UniformSphere { max_support: 6 },
                32,
                seed,
            )?;
            let k = sampler.rng().gen_range(1..=4usize);
            let vectors = (0..k).map(|_| sampler.sample()).collect();
            let fam = LatticeFamily::new(vectors, space.clone())?;
            Ok(khintchine_check(&fam, 1.0)?.t_empirical)
        })?;
        rows.push(row(cfg, t, value, false, wall));
    }
    Ok(rows)
}

fn run_sa_series(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let weight = match &cfg.space {
        Some(SpaceSpec::WeakLorentz { weight }) => weight.clone(),
        _ => {
            return Err(Error::InvalidArgument(
                "sa-series needs a weak Lorentz space".into(),
            ))
        }
    };
    let horizon_max = *cfg.schedule.last().unwrap();
    let s: Vec<f64> = (1..=horizon_max).map(|m| weight.s(m)).collect();
    let mut rows = Vec::new();
    for &horizon in &cfg.schedule {
        let (partial, wall) = timed(|| Ok(sa_series_test(&s[..horizon], horizon)?.0))?;
        rows.push(row(cfg, horizon, partial, true, wall));
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "hardy-fundamental" => run_hardy_fundamental(cfg),
        "mixed-mu" => run_mixed_mu(cfg),
        "marriage-suite" => run_marriage_suite(cfg),
        "khintchine-suite" => run_khintchine_suite(cfg),
        "sa-series" => run_sa_series(cfg),
        other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// RFC-4180-style CSV with LF terminators, '.' decimals, and 17 significant
/// digits; wall times are not exported.
pub fn export_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record([
        "experiment",
        "m",
        "value",
        "fitted_power",
        "fitted_log",
        "exact",
        "seed",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.experiment.as_str(),
            &r.m.to_string(),
            &fmt_float(r.value),
            &r.fitted_power.map(fmt_float).unwrap_or_default(),
            &r.fitted_log.map(fmt_float).unwrap_or_default(),
            if r.exact { "true" } else { "false" },
            &r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
