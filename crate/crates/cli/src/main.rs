use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use permeq::approximator::{ApproximatorModel, EquivarianceMode, HeadKind};
use permeq::distributions::{named_game, sample, DistributionSpec, RNG_ALGORITHM};
use permeq::experiments::{
    exp_generalization, exp_orbit_benefit, exp_selection, exp_swr, ExperimentReport, GeneralizationConfig,
    OrbitBenefitConfig, OrbitBenefitVariant, SelectionConfig,
};
use permeq::io::{
    load_checkpoint, load_games, save_checkpoint, save_games, DistributionConfig, DistributionKindName,
    ExperimentConfig, RunConfig,
};
use permeq::training::{evaluate, train_with_eval};
use permeq::verify::{run_suite, Level};
use permeq::{Error, Game, GamePermutation, GameShape, SolutionConcept, Strategy};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "PERMEQ_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "permeq_out";

#[derive(Parser)]
#[command(
    name = "permeq",
    version,
    about = "Symmetric equilibrium approximators for normal-form games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $PERMEQ_OUT_DIR, then ./permeq_out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample games from a distribution into a game-set file.
    Gen {
        /// uniform, orbit_uniform, orbit or named.
        #[arg(long, default_value = "uniform")]
        dist: String,
        #[arg(long)]
        shape: Option<GameShape>,
        /// Named game for the orbit and named distributions.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model from a run configuration; writes a checkpoint and a trace.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on a game file or directory.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        games: PathBuf,
        /// Defaults to ne for product heads and cce for joint heads.
        #[arg(long)]
        concept: Option<SolutionConcept>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the property suite; exits 1 if any check fails.
    Verify {
        #[arg(long)]
        quick: bool,
        /// Also write the report as JSON into the output directory.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Show the strategies symmetric models give on the 2x2 identity game.
    Demo {
        #[command(flatten)]
        common: Common,
    },
    /// Welfare ratio of symmetric models on the 3x3 welfare game.
    Swr {
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.05, 0.1, 0.25])]
        eps: Vec<f64>,
        #[arg(long, default_value = "both")]
        mode: EquivarianceMode,
        /// Also write reports into the output directory.
        #[arg(long)]
        save: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run the experiment named in a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Core(Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(Error::from)?;
    }
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn load_config(path: &Path, common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
        cfg.validate()?;
    }
    Ok(cfg)
}

fn gen(
    dist: &str,
    shape: Option<GameShape>,
    id: Option<String>,
    params: Vec<f64>,
    count: usize,
    common: &Common,
) -> CliResult {
    let kind: DistributionKindName = serde_json::from_value(json!(dist)).map_err(|_| Error::Unknown {
        kind: "distribution",
        name: dist.to_string(),
    })?;
    let seed = common.seed.unwrap_or(0);
    let cfg = DistributionConfig {
        kind,
        shape,
        id,
        params,
        count,
        test_count: 0,
    };
    let spec = cfg.to_spec(seed)?;
    let games = sample(&spec, count)?;
    let dir = out_dir(common.out_dir.as_deref(), None);
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let path = dir.join(format!("games_{dist}_{}_seed{seed}.json", spec.shape));
    save_games(&path, &games, json!({ "distribution": cfg, "seed": seed }))?;
    println!("{}", path.display());
    Ok(())
}

fn split_data(cfg: &RunConfig) -> CliResult<(Vec<Game>, Vec<Game>)> {
    let dist = cfg
        .distribution
        .as_ref()
        .ok_or_else(|| Error::Invalid("training needs a [distribution] section".into()))?;
    let spec = dist.to_spec(cfg.seed)?;
    let mut games = sample(&spec, dist.count + dist.test_count)?;
    let test = games.split_off(dist.count);
    Ok((games, test))
}

fn train_cmd(config: &Path, common: &Common) -> CliResult {
    let cfg = load_config(config, common)?;
    let (train_set, test_set) = split_data(&cfg)?;
    let model = ApproximatorModel::new(train_set[0].shape().clone(), &cfg.model)?;
    let held_out = (!test_set.is_empty()).then_some(test_set.as_slice());
    let (model, trace) = train_with_eval(model, &train_set, held_out, &cfg.train)?;
    let dir = out_dir(common.out_dir.as_deref(), cfg.output_dir.as_deref());
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let seed = cfg.seed;
    let ck = dir.join(format!("checkpoint_seed{seed}.json"));
    save_checkpoint(&ck, &model)?;
    let trace_path = dir.join(format!("trace_seed{seed}.csv"));
    write_text(&trace_path, &trace.to_csv())?;
    let concept = cfg.train.concept;
    let mut summary = json!({
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "config": cfg,
        "train": evaluate(&model, &train_set, concept)?,
        "final_loss": trace.final_loss(),
        "checkpoint": ck.display().to_string(),
        "trace": trace_path.display().to_string(),
    });
    if !test_set.is_empty() {
        summary["test"] = json!(evaluate(&model, &test_set, concept)?);
    }
    let summary_path = dir.join(format!("train_summary_seed{seed}.json"));
    write_text(&summary_path, &(pretty(&summary) + "\n"))?;
    println!("{}", pretty(&summary));
    Ok(())
}

fn eval_cmd(checkpoint: &Path, games: &Path, concept: Option<SolutionConcept>) -> CliResult {
    let model = load_checkpoint(checkpoint)?;
    let games = load_games(games)?;
    let concept = concept.unwrap_or(match model.head() {
        HeadKind::Product => SolutionConcept::Ne,
        HeadKind::Joint => SolutionConcept::Cce,
    });
    let summary = evaluate(&model, &games, concept)?;
    println!(
        "{}",
        pretty(&json!({
            "checkpoint": checkpoint.display().to_string(),
            "concept": concept,
            "summary": summary,
        }))
    );
    Ok(())
}

fn verify_cmd(quick: bool, json_out: bool, common: &Common) -> CliResult {
    let level = if quick { Level::Quick } else { Level::Full };
    let report = run_suite(level, common.seed.unwrap_or(0))?;
    for c in &report.checks {
        println!(
            "{} {} cases={} failures={} worst={:e} tol={:e}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.cases,
            c.failures,
            c.worst,
            c.tolerance
        );
    }
    if json_out {
        let path = out_dir(common.out_dir.as_deref(), None).join(format!("verify_seed{}.json", report.seed));
        write_text(&path, &(pretty(&report) + "\n"))?;
    }
    let failed = report.failed().len();
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    println!("all {} checks passed", report.checks.len());
    Ok(())
}

fn print_strategy(label: &str, s: &Strategy) {
    match s {
        Strategy::Product(p) => {
            for (i, v) in p.players().iter().enumerate() {
                println!("{label} player {i}: {v:?}");
            }
        }
        Strategy::Joint(j) => println!("{label} joint: {:?}", j.probs()),
    }
}

fn demo(common: &Common) -> CliResult {
    let game = named_game("identity2x2", &[])?;
    let swap = GamePermutation::from_maps(vec![vec![1, 0], vec![1, 0]])?;
    let cfg = SelectionConfig {
        seed: common.seed.unwrap_or(0),
        ..SelectionConfig::default()
    };
    let report = exp_selection(&game, &swap, &cfg)?;
    let block = |arm: &str, keys: &[&str]| -> Vec<f64> {
        let a = report.arm(arm).expect("arm present");
        keys.iter().map(|k| a.get(k).unwrap_or(f64::NAN)).collect()
    };
    let sigma = ["sigma_0_0", "sigma_0_1", "sigma_1_0", "sigma_1_1"];
    let both = block("both", &sigma);
    let general = block("general", &sigma);
    let pe = block("pe", &["pi_0", "pi_1", "pi_2", "pi_3"]);
    print_strategy(
        "both",
        &Strategy::Product(permeq::ProductStrategy::new(vec![
            both[..2].to_vec(),
            both[2..].to_vec(),
        ])?),
    );
    print_strategy(
        "pe",
        &Strategy::Joint(permeq::JointStrategy::new(game.shape().clone(), pe)?),
    );
    print_strategy(
        "general (trained)",
        &Strategy::Product(permeq::ProductStrategy::new(vec![
            general[..2].to_vec(),
            general[2..].to_vec(),
        ])?),
    );
    for v in &report.verdicts {
        println!("{} {}: {}", if v.holds { "holds" } else { "FAILS" }, v.name, v.detail);
    }
    Ok(())
}

fn save_report(mut report: ExperimentReport, dir: &Path) -> CliResult<ExperimentReport> {
    let paths = report.write(dir)?;
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(report)
}

fn swr(eps: &[f64], mode: EquivarianceMode, save: bool, common: &Common) -> CliResult {
    let dir = out_dir(common.out_dir.as_deref(), None);
    for &e in eps {
        if !(e > 0.0 && e < 0.5) {
            return Err(Error::Invalid(format!("epsilon {e} is outside (0, 0.5)")).into());
        }
        let mut report = exp_swr(e, mode)?;
        report.seed = common.seed.unwrap_or(0);
        let ratio = report.arm(mode.name()).and_then(|a| a.get("ratio")).unwrap_or(f64::NAN);
        println!("eps {e} ratio {ratio}");
        if save {
            save_report(report, &dir)?;
        }
    }
    Ok(())
}

fn run_cmd(config: &Path, common: &Common) -> CliResult {
    let cfg = load_config(config, common)?;
    let dir = out_dir(common.out_dir.as_deref(), cfg.output_dir.as_deref());
    let experiment = cfg
        .experiment
        .clone()
        .ok_or_else(|| Error::Invalid("config has no [experiment] section".into()))?;
    let reports = match experiment {
        ExperimentConfig::Generalization {
            shape,
            train_size,
            test_size,
            seeds,
            concept,
        } => {
            let g = GeneralizationConfig {
                shape,
                train_size,
                test_size,
                seeds,
                concept,
                hidden: cfg.model.hidden.clone(),
                train: cfg.train.clone(),
            };
            vec![exp_generalization(&g)?]
        }
        ExperimentConfig::OrbitBenefit {
            variant,
            shape,
            count,
            zero_init,
        } => {
            let mut bases = sample(&DistributionSpec::uniform(shape, cfg.seed), count)?;
            if variant == OrbitBenefitVariant::ConstantSum {
                bases = bases
                    .into_iter()
                    .map(|g| {
                        let u = g.payoffs(0).to_vec();
                        let v = u.iter().map(|x| 1.0 - x).collect();
                        Game::new(g.shape().clone(), vec![u, v])
                    })
                    .collect::<Result<_, _>>()?;
            }
            let o = OrbitBenefitConfig {
                variant,
                hidden: cfg.model.hidden.clone(),
                seed: cfg.seed,
                zero_init,
            };
            vec![exp_orbit_benefit(&bases, &o)?]
        }
        ExperimentConfig::Selection { game, params, rho } => {
            let g = named_game(&game, &params)?;
            let rho = match rho {
                Some(maps) => GamePermutation::from_maps(maps)?,
                None => GamePermutation::from_maps(
                    g.shape()
                        .action_counts()
                        .iter()
                        .map(|&m| {
                            let mut map: Vec<usize> = (0..m).collect();
                            map.swap(0, 1);
                            map
                        })
                        .collect(),
                )?,
            };
            let s = SelectionConfig {
                hidden: cfg.model.hidden.clone(),
                seed: cfg.seed,
                train: cfg.train.clone(),
            };
            vec![exp_selection(&g, &rho, &s)?]
        }
        ExperimentConfig::Swr { eps, mode } => eps
            .iter()
            .map(|&e| {
                let mut r = exp_swr(e, mode)?;
                r.seed = cfg.seed;
                Ok(r)
            })
            .collect::<Result<Vec<_>, Error>>()?,
    };
    for report in reports {
        let report = save_report(report, &dir)?;
        for v in &report.verdicts {
            println!(
                "{} {} {}: {}",
                report.id,
                if v.holds { "holds" } else { "fails" },
                v.name,
                v.detail
            );
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen {
            dist,
            shape,
            id,
            params,
            count,
            common,
        } => gen(&dist, shape, id, params, count, &common),
        Command::Train { config, common } => train_cmd(&config, &common),
        Command::Eval {
            checkpoint,
            games,
            concept,
            common: _,
        } => eval_cmd(&checkpoint, &games, concept),
        Command::Verify { quick, json, common } => verify_cmd(quick, json, &common),
        Command::Demo { common } => demo(&common),
        Command::Swr {
            eps,
            mode,
            save,
            common,
        } => swr(&eps, mode, save, &common),
        Command::Run { config, common } => run_cmd(&config, &common),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Verification(n)) => {
            eprintln!("error[verification]: {n} checks failed");
            ExitCode::from(1)
        }
    }
}
