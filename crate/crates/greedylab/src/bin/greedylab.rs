//! Command-line front end: quasi-norm evaluation, greedy operators, democracy
//! and Lebesgue profiles, convexity checks, K-fold marriage, and the
//! experiment harness. Exit codes: 0 success, 2 config error, 3 numeric guard.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use greedylab::convexity::{
    convexity_constant, indicator_prefix_family, khintchine_check, l_convexity_probe,
    maurey_check, sa_series_test, strong_absoluteness_profile, LatticeFamily,
};
use greedylab::democracy::{
    democracy_parameter_mum, lebesgue_constant, phi_lower, phi_lower_eq, phi_upper,
    unconditionality_parameter_km, LebesgueMode, Strategy,
};
use greedylab::error::Error;
use greedylab::greedy::{coordinate_projection, greedy_approximation, restricted_truncation};
use greedylab::harness::{export_csv, run_experiment, ExperimentConfig, SCHEMA_VERSION};
use greedylab::matching::{hall_defect_check, k_fold_marriage, Feasibility, MarriageInstance};
use greedylab::sampler::{SamplerKind, VectorSampler};
use greedylab::spaces::SpaceSpec;
use greedylab::vector::VectorJson;
use greedylab::{CoefficientVector, Result};

#[derive(Parser)]
#[command(name = "greedylab", version, about = "greedy approximation measurements in p-Banach sequence spaces")]
struct Cli {
    /// Master seed for every randomized estimate.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reserved worker count; current suites run single-threaded.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpaceArg {
    /// Space spec as JSON, e.g. '{"kind":"lp","p":0.5}'.
    #[arg(long)]
    space: String,
}

impl SpaceArg {
    fn parse(&self) -> Result<SpaceSpec> {
        let space: SpaceSpec = serde_json::from_str(&self.space)?;
        space.validate()?;
        Ok(space)
    }
}

fn parse_vector(text: &str) -> Result<CoefficientVector> {
    let json: VectorJson = serde_json::from_str(text)?;
    json.into_vector()
}

#[derive(Copy, Clone, ValueEnum)]
enum TgaOp {
    Greedy,
    Truncation,
    Projection,
}

#[derive(Copy, Clone, ValueEnum)]
enum StrategyArg {
    Auto,
    Exhaustive,
    Families,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
            StrategyArg::Families => Strategy::Families,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    Proxy,
    Direct,
}

#[derive(Copy, Clone, ValueEnum)]
enum CheckArg {
    Khintchine,
    Maurey,
    Mr,
    Lconvex,
    SaProfile,
    SaSeries,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the quasi-norm of a vector.
    Norm {
        #[command(flatten)]
        space: SpaceArg,
        /// Vector as JSON: dense array or {"ambient":..,"entries":[[n,re,im],..]}.
        #[arg(long)]
        vector: String,
    },
    /// Apply a thresholding greedy operator.
    Tga {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long)]
        vector: String,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        op: TgaOp,
    },
    /// Democracy profile over a list of cardinalities.
    Democracy {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "m-list", value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        #[arg(long, value_enum, default_value = "auto")]
        strategy: StrategyArg,
        #[arg(long)]
        ambient: Option<usize>,
    },
    /// Lebesgue constants over a list of cardinalities.
    Lebesgue {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long = "m-list", value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        #[arg(long, value_enum, default_value = "proxy")]
        mode: ModeArg,
        #[arg(long)]
        ambient: Option<usize>,
        /// Sample count for direct mode.
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Lattice convexity and strong-absoluteness checks.
    Convexity {
        #[command(flatten)]
        space: SpaceArg,
        #[arg(long, value_enum)]
        check: CheckArg,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Thresholds for the strong-absoluteness profile.
        #[arg(long = "R-list", value_delimiter = ',', default_value = "2,4,8,16")]
        r_list: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Support horizon for profile families and series tests.
        #[arg(long, default_value_t = 1024)]
        horizon: usize,
    },
    /// Solve a K-fold marriage instance.
    Marriage {
        /// Partner sets as JSON, e.g. '[[1,2],[1],[3]]' (1-based).
        #[arg(long)]
        sets: String,
        #[arg(long = "K")]
        k: usize,
    },
    /// Run a named experiment preset.
    Experiment {
        #[arg(long)]
        preset: Option<String>,
        /// Full config JSON file; overrides --preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the preset schedule, comma-separated.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<usize>>,
    },
}

struct Output {
    out: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
            }
        }
    }
}

fn witness_cell(w: &greedylab::democracy::Witness) -> String {
    serde_json::to_string(w).unwrap_or_default()
}

fn csv_quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn run(cli: Cli) -> Result<()> {
    let output = Output { out: cli.out.clone() };
    match cli.command {
        Command::Norm { space, vector } => {
            let space = space.parse()?;
            let f = parse_vector(&vector)?;
            let norm = space.quasi_norm(&f)?;
            if !norm.is_finite() {
                return Err(Error::NumericGuard(format!("norm evaluated to {norm}")));
            }
            output.write(&format!("{}\n", serde_json::json!({ "norm": norm })))
        }
        Command::Tga { space, vector, m, op } => {
            let space = space.parse()?;
            let f = parse_vector(&vector)?;
            let g = match op {
                TgaOp::Greedy => greedy_approximation(&f, m)?,
                TgaOp::Truncation => restricted_truncation(&f, m)?,
                TgaOp::Projection => {
                    let set: Vec<usize> = (1..=m.min(f.ambient_size())).collect();
                    coordinate_projection(&f, &set)
                }
            };
            let report = serde_json::json!({
                "result": VectorJson::from_vector(&g),
                "input_norm": space.quasi_norm(&f)?,
                "output_norm": space.quasi_norm(&g)?,
            });
            output.write(&format!("{report}\n"))
        }
        Command::Democracy { space, m_list, strategy, ambient } => {
            let space = space.parse()?;
            let strategy = Strategy::from(strategy);
            let max_m = *m_list.iter().max().unwrap();
            let ambient = ambient
                .or_else(|| space.required_ambient())
                .unwrap_or(max_m);
            let mut text = String::from(
                "m,phi_u,phi_l,phi_l_eq,mu_m,k_m,witness_u,witness_l,exact_u,exact_l\n",
            );
            for &m in &m_list {
                let u = phi_upper(&space, m, strategy, ambient)?;
                let l = phi_lower(&space, m, strategy, ambient)?;
                let leq = phi_lower_eq(&space, m, strategy, ambient)?;
                let mu = democracy_parameter_mum(&space, m, strategy, ambient)?;
                let km = unconditionality_parameter_km(&space, m)?;
                text.push_str(&format!(
                    "{m},{:.16e},{:.16e},{:.16e},{mu:.16e},{km:.16e},{},{},{},{}\n",
                    u.value,
                    l.value,
                    leq.value,
                    csv_quote(&witness_cell(&u.witness)),
                    csv_quote(&witness_cell(&l.witness)),
                    u.exact,
                    l.exact,
                ));
            }
            output.write(&text)
        }
        Command::Lebesgue { space, m_list, mode, ambient, trials } => {
            let space = space.parse()?;
            let max_m = *m_list.iter().max().unwrap();
            let ambient = ambient
                .or_else(|| space.required_ambient())
                .unwrap_or(4 * max_m);
            let mut text = String::from("m,lebesgue\n");
            for &m in &m_list {
                let value = match mode {
                    ModeArg::Proxy => lebesgue_constant(
                        &space,
                        m,
                        LebesgueMode::Proxy,
                        Strategy::Auto,
                        ambient,
                        None,
                    )?,
                    ModeArg::Direct => {
                        let mut sampler = VectorSampler::new(
                            SamplerKind::UniformSphere {
                                max_support: ambient.min(4 * m),
                            },
                            ambient,
                            cli.seed,
                        )?;
                        lebesgue_constant(
                            &space,
                            m,
                            LebesgueMode::Direct,
                            Strategy::Auto,
                            ambient,
                            Some((&mut sampler, trials)),
                        )?
                    }
                };
                text.push_str(&format!("{m},{value:.16e}\n"));
            }
            output.write(&text)
        }
        Command::Convexity { space, check, r, r_list, trials, horizon } => {
            let space = space.parse()?;
            let mut text = String::from("check,parameter,value\n");
            match check {
                CheckArg::Khintchine | CheckArg::Maurey => {
                    let mut sampler = VectorSampler::new(
                        SamplerKind::UniformSphere { max_support: 6 },
                        32,
                        cli.seed,
                    )?;
                    let mut c_max = 0.0f64;
                    let mut t_max = 0.0f64;
                    let mut ratio_max = 0.0f64;
                    for _ in 0..trials.max(1) {
                        use rand::Rng;
                        let k = sampler.rng().gen_range(1..=4usize);
                        let vectors = (0..k).map(|_| sampler.sample()).collect();
                        let fam = LatticeFamily::new(vectors, space.clone())?;
                        match check {
                            CheckArg::Khintchine => {
                                let rep = khintchine_check(&fam, r)?;
                                c_max = c_max.max(rep.c_empirical);
                                t_max = t_max.max(rep.t_empirical);
                            }
                            _ => {
                                ratio_max = ratio_max.max(maurey_check(&fam, r)?.ratio);
                            }
                        }
                    }
                    match check {
                        CheckArg::Khintchine => {
                            text.push_str(&format!("khintchine,C,{c_max:.16e}\n"));
                            text.push_str(&format!("khintchine,T,{t_max:.16e}\n"));
                        }
                        _ => text.push_str(&format!("maurey,ratio,{ratio_max:.16e}\n")),
                    }
                }
                CheckArg::Mr => {
                    let mut sampler = VectorSampler::new(
                        SamplerKind::UniformSphere { max_support: 8 },
                        32,
                        cli.seed,
                    )?;
                    let est = convexity_constant(&space, r, &mut sampler, trials.max(1), 4)?;
                    text.push_str(&format!("mr,lower,{:.16e}\n", est.lower_const));
                    text.push_str(&format!("mr,upper,{:.16e}\n", est.upper_const));
                }
                CheckArg::Lconvex => {
                    let mut sampler = VectorSampler::new(
                        SamplerKind::Indicators { max_size: 12 },
                        32,
                        cli.seed,
                    )?;
                    let grid: Vec<f64> = (1..20).map(|t| t as f64 / 20.0).collect();
                    let eps = l_convexity_probe(&space, &grid, &mut sampler, trials.max(1))?;
                    text.push_str(&format!("lconvex,epsilon,{eps:.16e}\n"));
                }
                CheckArg::SaProfile => {
                    let family = indicator_prefix_family(horizon);
                    let profile = strong_absoluteness_profile(&space, &r_list, &family)?;
                    for ((&rv, &cv), &d) in profile
                        .r_values
                        .iter()
                        .zip(&profile.c_values)
                        .zip(&profile.diverged)
                    {
                        text.push_str(&format!("sa-profile,C({rv}),{cv:.16e}\n"));
                        text.push_str(&format!("sa-profile,diverged({rv}),{d}\n"));
                    }
                }
                CheckArg::SaSeries => {
                    let weight = match &space {
                        SpaceSpec::WeakLorentz { weight } => weight.clone(),
                        _ => {
                            return Err(Error::InvalidArgument(
                                "sa-series needs a weak Lorentz space".into(),
                            ))
                        }
                    };
                    let s: Vec<f64> = (1..=horizon).map(|m| weight.s(m)).collect();
                    let (partial, verdict) = sa_series_test(&s, horizon)?;
                    text.push_str(&format!("sa-series,partial,{partial:.16e}\n"));
                    text.push_str(&format!("sa-series,verdict,{verdict:?}\n"));
                }
            }
            output.write(&text)
        }
        Command::Marriage { sets, k } => {
            let sets: Vec<Vec<usize>> = serde_json::from_str(&sets)?;
            let instance = MarriageInstance::new(sets, k)?;
            let report = match hall_defect_check(&instance)? {
                Feasibility::Feasible { .. } => {
                    let sol = k_fold_marriage(&instance)?;
                    serde_json::json!({ "feasible": true, "solution": sol })
                }
                Feasibility::Infeasible { violating } => {
                    serde_json::json!({ "feasible": false, "violating": violating })
                }
            };
            output.write(&format!("{report}\n"))
        }
        Command::Experiment { preset, config, schedule } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
                        path: path.display().to_string(),
                        source: e,
                    })?;
                    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
                    cfg
                }
                (None, Some(name)) => ExperimentConfig::preset(&name, cli.seed)?,
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "experiment needs --preset or --config".into(),
                    ))
                }
            };
            if let Some(schedule) = schedule {
                cfg.schedule = schedule;
            }
            debug_assert_eq!(SCHEMA_VERSION, cfg.schema_version);
            let rows = run_experiment(&cfg)?;
            match &cli.out {
                Some(path) => export_csv(&rows, path),
                None => {
                    let dir = std::env::temp_dir().join(format!(
                        "greedylab-{}-{}.csv",
                        cfg.experiment, cfg.seed
                    ));
                    export_csv(&rows, &dir)?;
                    let text = std::fs::read_to_string(&dir).map_err(|e| Error::Io {
                        path: dir.display().to_string(),
                        source: e,
                    })?;
                    output.write(&text)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(0),
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NumericGuard(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
