//! Acceptance suite: one test per shipping criterion, each printing a single
//! pass/fail line. Tolerances and runtime budgets are pinned here and are not
//! to be loosened without a ledger entry in the project notes.

use std::time::Instant;

use greedylab::convexity::{
    indicator_prefix_family, khintchine_check, maurey_check, sa_series_test,
    strong_absoluteness_profile, LatticeFamily, SeriesVerdict,
};
use greedylab::democracy::{
    democracy_parameter_mum, fit_log_power, fit_power_log, mu_on_grid, mu_raw_oracle,
    phi_lower, phi_upper, Strategy,
};
use greedylab::greedy::{
    greedy_approximation, greedy_set, lorentz_embedding_ratio, restricted_truncation,
};
use greedylab::hardy::{family_disjoint, family_hyperbolic, hp_norm, HaarExpansion};
use greedylab::harness::{export_csv, random_marriage_instance, run_experiment, ExperimentConfig};
use greedylab::matching::{
    brute_force_feasible, hall_defect_check, k_fold_marriage, verify_marriage, Feasibility,
};
use greedylab::numutil::derive_seed;
use greedylab::sampler::{SamplerKind, VectorSampler};
use greedylab::spaces::{SpaceSpec, Weight};
use greedylab::vector::{sgn, CoefficientVector, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<(), String>;

fn report(n: u32, name: &str, res: Check) {
    match res {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(e) => {
            println!("criterion {n} ({name}): FAIL - {e}");
            panic!("criterion {n} failed: {e}");
        }
    }
}

fn budget(start: Instant, seconds: f64) -> Check {
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed < seconds {
        Ok(())
    } else {
        Err(format!("runtime {elapsed:.1}s exceeds budget {seconds}s"))
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_1_exact_fundamental_functions() {
    report(1, "exact fundamental functions", (|| -> Check {
        let start = Instant::now();
        let ambient = 1024;
        for p in [0.25, 0.5, 0.75, 1.0] {
            let space = SpaceSpec::Lp { p };
            for m in 1..=ambient {
                let want = (m as f64).powf(1.0 / p);
                let u = phi_upper(&space, m, Strategy::Auto, ambient)
                    .map_err(|e| e.to_string())?;
                let l = phi_lower(&space, m, Strategy::Auto, ambient)
                    .map_err(|e| e.to_string())?;
                for (side, got) in [("phi_u", u.value), ("phi_l", l.value)] {
                    if rel_err(got, want) > 1e-12 {
                        return Err(format!("l_{p}: {side}({m}) = {got}, want {want}"));
                    }
                }
            }
        }
        for weight in [
            Weight::Power { alpha: 2.0 },
            Weight::PowerLog { alpha: 1.0, beta: 1.0 },
        ] {
            let space = SpaceSpec::WeakLorentz { weight: weight.clone() };
            for m in 1..=ambient {
                let want = weight.s(m);
                let got = phi_upper(&space, m, Strategy::Auto, ambient)
                    .map_err(|e| e.to_string())?
                    .value;
                if rel_err(got, want) > 1e-12 {
                    return Err(format!("weak Lorentz: phi({m}) = {got}, want s_m = {want}"));
                }
            }
        }
        budget(start, 5.0)
    })());
}

#[test]
fn criterion_2_hyperbolic_norm_asymptotics() {
    report(2, "hyperbolic family norms, d=2, p=1/2", (|| -> Check {
        let start = Instant::now();
        let p = 0.5;
        let grid_level = 10;
        let mut ms = Vec::new();
        let mut values = Vec::new();
        for k in 1..=10u32 {
            let fam = family_hyperbolic(k, 2);
            let m = fam.len() as f64;
            let terms = fam.into_iter().map(|r| (r, 1.0)).collect();
            let e = HaarExpansion::new(p, grid_level, terms).map_err(|e| e.to_string())?;
            let norm = hp_norm(&e);
            // closed form: every point lies in exactly k+1 rectangles of the family
            let want = m.powf(1.0 / p) * ((k + 1) as f64).powf(0.5 - 1.0 / p);
            if rel_err(norm, want) > 1e-10 {
                return Err(format!("k={k}: norm {norm}, want {want}"));
            }
            ms.push(m as usize);
            values.push(norm);
        }
        let fit = fit_power_log(&ms, &values).map_err(|e| e.to_string())?;
        // the log-exponent target is (d-1)(1/2 - 1/p) = -3/2 at d=2, p=1/2
        let b = fit.log_exponent;
        if (b + 1.5).abs() > 0.15 {
            return Err(format!("fitted log-exponent {b}, want -1.5 within 0.15"));
        }
        budget(start, 60.0)
    })());
}

#[test]
fn criterion_3_disjoint_family_norms() {
    report(3, "disjoint family norms", (|| -> Check {
        let start = Instant::now();
        let p = 0.5;
        for d in [1usize, 2] {
            for e in 1..=10u32 {
                let m = 1usize << e;
                // minimal level whose cell count reaches m
                let level = (0..=24u32)
                    .find(|&l| 1u128 << (l as usize * d) >= m as u128)
                    .unwrap();
                let fam = family_disjoint(m, d, level).map_err(|e| e.to_string())?;
                let terms = fam.into_iter().map(|r| (r, 1.0)).collect();
                let exp = HaarExpansion::new(p, level, terms).map_err(|e| e.to_string())?;
                let norm = hp_norm(&exp);
                let want = (m as f64).powf(1.0 / p);
                if rel_err(norm, want) > 1e-10 {
                    return Err(format!("d={d}, m={m}: norm {norm}, want {want}"));
                }
            }
        }
        budget(start, 10.0)
    })());
}

#[test]
fn criterion_4_haar_mu_growth() {
    report(4, "Haar model mu growth", (|| -> Check {
        // d = 2: mu grows like a power of (1 + log2 m)
        let space2 = SpaceSpec::HaarHp {
            p: 0.5,
            d: 2,
            max_level: 12,
        };
        let ms2: Vec<usize> = (1..=8u32).map(|k| (k as usize + 1) << k).collect();
        let mu2 = mu_on_grid(&space2, &ms2, Strategy::Families, 0)
            .map_err(|e| e.to_string())?;
        let fit = fit_log_power(&ms2, &mu2, 2.0).map_err(|e| e.to_string())?;
        if fit.residual > 0.15 {
            return Err(format!("d=2 log-log residual {} >= 0.15", fit.residual));
        }
        let c: f64 = ms2
            .iter()
            .zip(&mu2)
            .map(|(&m, &mu)| mu / (1.0 + (m as f64).log2()))
            .fold(0.0, f64::max);
        for (&m, &mu) in ms2.iter().zip(&mu2) {
            if mu > c * (1.0 + (m as f64).log2()) * (1.0 + 1e-12) {
                return Err(format!("mu_{m} = {mu} exceeds C(1+log2 m) with C = {c}"));
            }
        }
        println!("  d=2: mu_m <= C (1 + log2 m) with C = {c:.6}, fit exponent {:.3}", fit.log_exponent);

        // d = 1: mu stays bounded; fitted log-exponent is essentially zero
        let space1 = SpaceSpec::HaarHp {
            p: 0.5,
            d: 1,
            max_level: 12,
        };
        let ms1: Vec<usize> = (1..=8u32).map(|e| 1usize << e).collect();
        let mu1 = mu_on_grid(&space1, &ms1, Strategy::Families, 0)
            .map_err(|e| e.to_string())?;
        let fit1 = fit_log_power(&ms1, &mu1, 2.0).map_err(|e| e.to_string())?;
        if fit1.log_exponent.abs() >= 0.1 {
            return Err(format!(
                "d=1 fitted log-exponent {} not within 0.1 of 0",
                fit1.log_exponent
            ));
        }
        Ok(())
    })());
}

#[test]
fn criterion_5_mixed_norm_mu() {
    report(5, "mixed-norm mu_m = m^2", (|| -> Check {
        let start = Instant::now();
        let space = SpaceSpec::DirectSum {
            components: vec![
                (SpaceSpec::Lp { p: 0.5 }, 1024),
                (SpaceSpec::Lp { p: 0.25 }, 1024),
            ],
        };
        let ms: Vec<usize> = (1..=64).collect();
        let mu = mu_on_grid(&space, &ms, Strategy::Families, 2048).map_err(|e| e.to_string())?;
        for (&m, &got) in ms.iter().zip(&mu) {
            let want = (m * m) as f64;
            if rel_err(got, want) > 1e-9 {
                return Err(format!("mu_{m} = {got}, want {want}"));
            }
        }
        // raw-definition oracle at reduced scale
        let small = SpaceSpec::DirectSum {
            components: vec![
                (SpaceSpec::Lp { p: 0.5 }, 10),
                (SpaceSpec::Lp { p: 0.25 }, 10),
            ],
        };
        for m in 1..=6 {
            let raw = mu_raw_oracle(&small, m, 20).map_err(|e| e.to_string())?;
            let fast = democracy_parameter_mum(&small, m, Strategy::Auto, 20)
                .map_err(|e| e.to_string())?;
            if rel_err(raw, fast) > 1e-12 {
                return Err(format!("oracle disagreement at m={m}: raw {raw}, fast {fast}"));
            }
        }
        budget(start, 10.0)
    })());
}

#[test]
fn criterion_6_marriage_suite() {
    report(6, "marriage suite vs brute force", (|| -> Check {
        let start = Instant::now();
        for t in 0..200u64 {
            let instance = random_marriage_instance(derive_seed(6021, t));
            let oracle = brute_force_feasible(&instance);
            match hall_defect_check(&instance).map_err(|e| e.to_string())? {
                Feasibility::Feasible { .. } => {
                    if !oracle {
                        return Err(format!("trial {t}: flow feasible but oracle says no"));
                    }
                    let sol = k_fold_marriage(&instance).map_err(|e| e.to_string())?;
                    if !verify_marriage(&instance, &sol) {
                        return Err(format!("trial {t}: solution failed verification"));
                    }
                }
                Feasibility::Infeasible { violating } => {
                    if oracle {
                        return Err(format!("trial {t}: flow infeasible but oracle says yes"));
                    }
                    let union: std::collections::BTreeSet<usize> = violating
                        .iter()
                        .flat_map(|&i| instance.sets[i - 1].iter().copied())
                        .collect();
                    if violating.len() <= instance.k * union.len() {
                        return Err(format!("trial {t}: violating set is not a certificate"));
                    }
                }
            }
        }
        budget(start, 5.0)
    })());
}

#[test]
fn criterion_7_khintchine_maurey_suite() {
    report(7, "Khintchine/Maurey suite", (|| -> Check {
        let start = Instant::now();
        let haar = SpaceSpec::HaarHp {
            p: 0.5,
            d: 2,
            max_level: 3,
        };
        let spaces = [SpaceSpec::Lp { p: 0.5 }, SpaceSpec::Lp { p: 1.0 }, haar];
        let mut max_ratio = 0.0f64;
        for (s, space) in spaces.iter().enumerate() {
            let ambient = space.required_ambient().unwrap_or(32);
            let mut sampler = VectorSampler::new(
                SamplerKind::UniformSphere { max_support: 6 },
                ambient,
                derive_seed(7001, s as u64),
            )
            .map_err(|e| e.to_string())?;
            for _ in 0..100 {
                let k = sampler.rng().gen_range(1..=10usize);
                let vectors = (0..k).map(|_| sampler.sample()).collect();
                let fam =
                    LatticeFamily::new(vectors, space.clone()).map_err(|e| e.to_string())?;
                let rep = khintchine_check(&fam, 1.0).map_err(|e| e.to_string())?;
                // pointwise Cauchy-Schwarz: average never exceeds the square function
                if rep.c_empirical > 1.0 + 1e-9 || !rep.t_empirical.is_finite() {
                    return Err(format!(
                        "sandwich violated: C = {}, T = {}",
                        rep.c_empirical, rep.t_empirical
                    ));
                }
                let mau = maurey_check(&fam, 1.0).map_err(|e| e.to_string())?;
                if !mau.ratio.is_finite() {
                    return Err("non-finite Maurey ratio".into());
                }
                max_ratio = max_ratio.max(mau.ratio);
            }
            // disjoint supports: signs are invisible, ratio collapses to 1
            let vectors: Vec<CoefficientVector> = (0..4)
                .map(|t| {
                    let mut v = CoefficientVector::new(ambient);
                    v.set_real(2 * t + 1, (t + 1) as f64);
                    v
                })
                .collect();
            let fam = LatticeFamily::new(vectors, space.clone()).map_err(|e| e.to_string())?;
            let mau = maurey_check(&fam, 1.0).map_err(|e| e.to_string())?;
            if (mau.ratio - 1.0).abs() > 1e-10 {
                return Err(format!("disjoint family ratio {} differs from 1", mau.ratio));
            }
        }
        println!("  max Maurey ratio over sampled families: {max_ratio:.6}");
        budget(start, 30.0)
    })());
}

#[test]
fn criterion_8_strong_absoluteness() {
    report(8, "strong absoluteness profile and series tests", (|| -> Check {
        let start = Instant::now();
        let family = indicator_prefix_family(1024);
        let r_values = [2.0, 4.0, 8.0, 16.0];
        let profile =
            strong_absoluteness_profile(&SpaceSpec::Lp { p: 0.5 }, &r_values, &family)
                .map_err(|e| e.to_string())?;
        for (&r, &c) in r_values.iter().zip(&profile.c_values) {
            // indicator oracle: the best constant is the largest m below R
            let want = (r.ceil() as usize - 1) as f64;
            if (c - want).abs() > 1e-9 {
                return Err(format!("l_1/2: C({r}) = {c}, want {want}"));
            }
        }
        if profile.diverged.iter().any(|&d| d) {
            return Err("l_1/2 profile flagged divergence".into());
        }
        let profile = strong_absoluteness_profile(&SpaceSpec::Lp { p: 1.0 }, &r_values, &family)
            .map_err(|e| e.to_string())?;
        if !profile.diverged.iter().all(|&d| d) {
            return Err("l_1 profile failed to diverge at every R".into());
        }

        let horizon = 100_000;
        let sq: Vec<f64> = (1..=horizon).map(|m| (m as f64).powi(2)).collect();
        let (partial, verdict) = sa_series_test(&sq, horizon).map_err(|e| e.to_string())?;
        if verdict != SeriesVerdict::Converges {
            return Err(format!("s_m = m^2 verdict {verdict:?}, want Converges"));
        }
        let target = std::f64::consts::PI.powi(2) / 6.0;
        if (partial - target).abs() > 1e-3 {
            return Err(format!("partial sum {partial} not within 1e-3 of {target}"));
        }
        let lin: Vec<f64> = (1..=horizon).map(|m| m as f64).collect();
        let (_, verdict) = sa_series_test(&lin, horizon).map_err(|e| e.to_string())?;
        if verdict != SeriesVerdict::Diverges {
            return Err(format!("s_m = m verdict {verdict:?}, want Diverges"));
        }
        budget(start, 10.0)
    })());
}

#[test]
fn criterion_9_tga_invariants() {
    report(9, "greedy operator invariants", (|| -> Check {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(9001);
        let ambient = 32;
        let palette = [1.0, -1.0, 2.0, -2.0, 0.5, 3.0];
        for trial in 0..100_000u32 {
            let size = rng.gen_range(1..=8usize);
            let mut f = CoefficientVector::new(ambient);
            for _ in 0..size {
                let n = rng.gen_range(1..=ambient);
                let v = if trial % 4 == 0 {
                    rng.gen_range(-3.0..3.0)
                } else {
                    palette[rng.gen_range(0..palette.len())]
                };
                f.set_real(n, v);
            }
            let support = f.support_size();
            if support == 0 {
                continue;
            }
            let m = rng.gen_range(1..=support);

            // tie-rule oracle: stable sort by (modulus desc, index asc)
            let mut order: Vec<usize> = (1..=ambient).filter(|&n| f.modulus(n) > 0.0).collect();
            order.sort_by(|&a, &b| {
                f.modulus(b)
                    .partial_cmp(&f.modulus(a))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut want: Vec<usize> = order[..m].to_vec();
            want.sort_unstable();
            let mut got = greedy_set(&f, m).map_err(|e| e.to_string())?;
            got.sort_unstable();
            if got != want {
                return Err(format!("tie rule: greedy set {got:?}, oracle {want:?}"));
            }

            if m < support {
                let small = greedy_set(&f, m).map_err(|e| e.to_string())?;
                let large = greedy_set(&f, m + 1).map_err(|e| e.to_string())?;
                if !small.iter().all(|n| large.contains(n)) {
                    return Err("greedy sets not nested".into());
                }
            }

            let g = greedy_approximation(&f, m).map_err(|e| e.to_string())?;
            let gg = greedy_approximation(&g, m).map_err(|e| e.to_string())?;
            if g != gg {
                return Err("greedy approximation not idempotent on its output".into());
            }

            let r = restricted_truncation(&f, m).map_err(|e| e.to_string())?;
            let set = greedy_set(&f, m).map_err(|e| e.to_string())?;
            let common = set.iter().map(|&n| f.modulus(n)).fold(f64::INFINITY, f64::min);
            for &n in &set {
                if (r.modulus(n) - common).abs() > 1e-12 * common.max(1.0) {
                    return Err("truncation moduli not common".into());
                }
                let expected = sgn(f.get(n)) * Scalar::new(common, 0.0);
                if (r.get(n) - expected).norm() > 1e-12 * common.max(1.0) {
                    return Err("truncation sign mismatch".into());
                }
            }
        }

        // measured embedding constants: sup_m a_m phi_l(m) <= C ||f||
        let spaces = [
            SpaceSpec::Lp { p: 0.5 },
            SpaceSpec::Lp { p: 1.0 },
            SpaceSpec::LorentzPQ { p: 0.5, q: 1.0 },
            SpaceSpec::WeakLorentz { weight: Weight::Power { alpha: 2.0 } },
        ];
        for (s, space) in spaces.iter().enumerate() {
            let phi: Vec<f64> = (1..=ambient)
                .map(|m| phi_lower(space, m, Strategy::Auto, ambient).map(|v| v.value))
                .collect::<greedylab::Result<_>>()
                .map_err(|e| e.to_string())?;
            let mut sampler = VectorSampler::new(
                SamplerKind::GeometricDecay { ratio: 0.7, max_support: 12 },
                ambient,
                derive_seed(9002, s as u64),
            )
            .map_err(|e| e.to_string())?;
            let mut measured = 0.0f64;
            for _ in 0..1000 {
                let f = sampler.sample();
                let ratio = lorentz_embedding_ratio(space, &f, &phi).map_err(|e| e.to_string())?;
                if !ratio.is_finite() {
                    return Err("non-finite embedding ratio".into());
                }
                measured = measured.max(ratio);
            }
            println!("  embedding constant for {space:?}: {measured:.6}");
        }
        budget(start, 30.0)
    })());
}

#[test]
fn criterion_10_preset_determinism() {
    report(10, "preset determinism", (|| -> Check {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let presets: [(&str, Vec<usize>); 5] = [
            ("hardy-fundamental", (1..=6).collect()),
            ("mixed-mu", vec![1, 2, 4, 8, 16]),
            ("marriage-suite", (1..=30).collect()),
            ("khintchine-suite", (1..=10).collect()),
            ("sa-series", vec![1_000, 10_000]),
        ];
        for (name, schedule) in presets {
            let mut cfg = ExperimentConfig::preset(name, 1010).map_err(|e| e.to_string())?;
            cfg.schedule = schedule;
            let a = dir.path().join(format!("{name}-a.csv"));
            let b = dir.path().join(format!("{name}-b.csv"));
            export_csv(&run_experiment(&cfg).map_err(|e| e.to_string())?, &a)
                .map_err(|e| e.to_string())?;
            export_csv(&run_experiment(&cfg).map_err(|e| e.to_string())?, &b)
                .map_err(|e| e.to_string())?;
            let bytes_a = std::fs::read(&a).map_err(|e| e.to_string())?;
            let bytes_b = std::fs::read(&b).map_err(|e| e.to_string())?;
            if bytes_a != bytes_b {
                return Err(format!("preset {name} produced differing CSV bytes"));
            }
        }
        Ok(())
    })());
}
