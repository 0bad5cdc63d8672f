//! Scripted experiments: generalization of symmetric vs plain models, the
//! effect of orbit averaging on orbit distributions, equilibrium selection
//! under symmetry, and welfare lost to symmetry.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approximator::{ApproximatorModel, EquivarianceMode, HeadKind, Init, ModelConfig};
use crate::distributions::{named_game, sample, DistributionSpec, RNG_ALGORITHM};
use crate::error::{Error, Result};
use crate::game::{
    enumerate_group, permute_game, permute_joint, permute_product, Game, GamePermutation, GameShape, ProductStrategy,
    Strategy,
};
use crate::metrics::{approximation, exploitability_sum, social_welfare, SolutionConcept};
use crate::solvers::support_enumeration_bimatrix;
use crate::training::{evaluate, train, TrainConfig};

/// Slack granted to orbit-averaging inequalities.
pub const ORBIT_SLACK: f64 = 1e-9;

/// Extra gap the symmetric arm may show in the generalization comparison.
pub const GENERALIZATION_SLACK: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// Named numbers for one arm of an experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub values: BTreeMap<String, f64>,
}

impl Arm {
    fn new(name: &str) -> Self {
        Arm {
            name: name.to_string(),
            values: BTreeMap::new(),
        }
    }

    fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub seed: u64,
    pub rng: String,
    pub config: serde_json::Value,
    pub arms: Vec<Arm>,
    pub verdicts: Vec<Verdict>,
    /// Per-item numbers behind the verdicts, written as CSV.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    fn new(id: &str, seed: u64, config: serde_json::Value, columns: &[&str]) -> Self {
        ExperimentReport {
            id: id.to_string(),
            seed,
            rng: RNG_ALGORITHM.to_string(),
            config,
            arms: Vec::new(),
            verdicts: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn verdict(&mut self, name: &str, holds: bool, detail: String) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            holds,
            detail,
        });
    }

    pub fn arm(&self, name: &str) -> Option<&Arm> {
        self.arms.iter().find(|a| a.name == name)
    }

    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Writes `<id>_seed<seed>.json` and `.csv` into `dir` and records their paths.
    pub fn write(&mut self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}_seed{}", self.id, self.seed);
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        self.artifacts = vec![json.display().to_string(), csv.display().to_string()];
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(&json, text + "\n")?;
        std::fs::write(&csv, self.to_csv())?;
        Ok(vec![json, csv])
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn echo<T: Serialize>(config: &T) -> serde_json::Value {
    serde_json::to_value(config).unwrap_or(serde_json::Value::Null)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralizationConfig {
    pub shape: GameShape,
    pub train_size: usize,
    pub test_size: usize,
    pub seeds: Vec<u64>,
    /// `Ne` compares General against Both product models, `Cce` General
    /// against PE joint models.
    pub concept: SolutionConcept,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl GeneralizationConfig {
    pub fn new(shape: GameShape, train_size: usize, test_size: usize, seeds: Vec<u64>) -> Self {
        GeneralizationConfig {
            shape,
            train_size,
            test_size,
            seeds,
            concept: SolutionConcept::Ne,
            hidden: vec![64, 64],
            train: TrainConfig::default(),
        }
    }
}

/// Trains a plain and a symmetric model on the same data drawn from an
/// orbit-invariant distribution and compares their generalization gaps.
/// The comparison is a sanity check on bounds, so a violation is reported as
/// a warning rather than an error.
pub fn exp_generalization(config: &GeneralizationConfig) -> Result<ExperimentReport> {
    if config.seeds.len() < 3 {
        return Err(Error::Precondition(
            "the generalization comparison needs at least 3 seeds".into(),
        ));
    }
    if config.train_size == 0 || config.test_size == 0 {
        return Err(Error::invalid("train and test sizes must be positive"));
    }
    let (head, symmetric) = match config.concept {
        SolutionConcept::Ne => (HeadKind::Product, EquivarianceMode::Both),
        SolutionConcept::Cce => (HeadKind::Joint, EquivarianceMode::Pe),
        SolutionConcept::Ce => return Err(Error::Concept("training supports the ne and cce losses".into())),
    };
    let mut report = ExperimentReport::new(
        "generalization",
        config.seeds[0],
        echo(config),
        &[
            "seed",
            "general_train",
            "general_test",
            "general_gap",
            "symmetric_train",
            "symmetric_test",
            "symmetric_gap",
        ],
    );
    let mut gaps = [Vec::new(), Vec::new()];
    for &seed in &config.seeds {
        let spec = DistributionSpec::orbit_uniform(config.shape.clone(), seed);
        let mut data = sample(&spec, config.train_size + config.test_size)?;
        let test = data.split_off(config.train_size);
        let mut row = vec![seed as f64];
        for (arm, mode) in [EquivarianceMode::General, symmetric].into_iter().enumerate() {
            let model = ApproximatorModel::new(
                config.shape.clone(),
                &ModelConfig {
                    hidden: config.hidden.clone(),
                    head,
                    mode,
                    init: Init::Xavier { seed },
                    ..ModelConfig::default()
                },
            )?;
            let cfg = TrainConfig {
                seed,
                concept: config.concept,
                eval_every: 0,
                ..config.train.clone()
            };
            let (model, _) = train(model, &data, &cfg)?;
            let train_mean = evaluate(&model, &data, config.concept)?.mean;
            let test_mean = evaluate(&model, &test, config.concept)?.mean;
            gaps[arm].push(test_mean - train_mean);
            row.extend([train_mean, test_mean, test_mean - train_mean]);
        }
        report.rows.push(row);
    }
    for (name, g) in ["general", symmetric.name()].into_iter().zip(&gaps) {
        let (mean, std) = mean_std(g);
        let mut arm = Arm::new(name);
        arm.set("gap_mean", mean).set("gap_std", std);
        report.arms.push(arm);
    }
    let (general, sym) = (mean_std(&gaps[0]).0, mean_std(&gaps[1]).0);
    let holds = sym <= general + GENERALIZATION_SLACK;
    report.verdict(
        "symmetric_gap_not_worse",
        holds,
        format!("symmetric mean gap {sym:.6} vs general {general:.6} + {GENERALIZATION_SLACK}"),
    );
    if !holds {
        report
            .warnings
            .push("symmetric arm generalized worse than the plain arm beyond the slack".into());
    }
    Ok(report)
}

/// Which raw model and projection an orbit-benefit run compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitBenefitVariant {
    /// Plain joint model vs its PE projection, CCE approximation.
    JointCce,
    /// OPI model vs its PPE projection (i.e. Both), NE approximation.
    PlayerOnOpi,
    /// PPE model vs its OPI projection (i.e. Both), NE approximation, two players.
    OpponentOnPpe,
    /// Plain model vs its OPI and PPE projections, sum of exploitabilities,
    /// two-player constant-sum games.
    ConstantSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitBenefitConfig {
    pub variant: OrbitBenefitVariant,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Use an all-zero (constant-output) network instead of a random one.
    pub zero_init: bool,
}

impl OrbitBenefitConfig {
    pub fn new(variant: OrbitBenefitVariant, seed: u64) -> Self {
        OrbitBenefitConfig {
            variant,
            hidden: vec![16, 16],
            seed,
            zero_init: false,
        }
    }
}

fn is_constant_sum(game: &Game) -> bool {
    let total = |a: usize| (0..game.num_players()).map(|i| game.payoffs(i)[a]).sum::<f64>();
    let first = total(0);
    (0..game.shape().num_joint()).all(|a| (total(a) - first).abs() <= 1e-12)
}

/// Mean of `metric` over `{ρ u : ρ}` with one term per group element.
fn orbit_mean(
    base: &Game,
    group: &[GamePermutation],
    model: &ApproximatorModel,
    metric: impl Fn(&Game, &Strategy) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for rho in group {
        let g = permute_game(base, rho)?;
        total += metric(&g, &model.forward(&g)?)?;
    }
    Ok(total / group.len() as f64)
}

/// For every base game, compares the mean approximation of a raw model and of
/// its projection over the full orbit of the base game. Projection can only
/// help there, so every comparison must hold.
pub fn exp_orbit_benefit(bases: &[Game], config: &OrbitBenefitConfig) -> Result<ExperimentReport> {
    use OrbitBenefitVariant::*;
    let Some(first) = bases.first() else {
        return Err(Error::invalid("no base games"));
    };
    let shape = first.shape().clone();
    let players: Vec<usize> = (0..shape.num_players()).collect();
    let group = enumerate_group(&shape, &players)?;
    let (head, raw_mode, projected): (HeadKind, EquivarianceMode, Vec<EquivarianceMode>) = match config.variant {
        JointCce => (HeadKind::Joint, EquivarianceMode::General, vec![EquivarianceMode::Pe]),
        PlayerOnOpi => (HeadKind::Product, EquivarianceMode::Opi, vec![EquivarianceMode::Both]),
        OpponentOnPpe => (HeadKind::Product, EquivarianceMode::Ppe, vec![EquivarianceMode::Both]),
        ConstantSum => (
            HeadKind::Product,
            EquivarianceMode::General,
            vec![EquivarianceMode::Opi, EquivarianceMode::Ppe],
        ),
    };
    for g in bases {
        shape.check_same(g.shape(), "base game")?;
        if matches!(config.variant, OpponentOnPpe | ConstantSum) && g.num_players() != 2 {
            return Err(Error::Precondition(
                "this variant is stated for two-player games".into(),
            ));
        }
        if config.variant == ConstantSum && !is_constant_sum(g) {
            return Err(Error::Precondition("base game is not constant-sum".into()));
        }
    }
    let metric = |g: &Game, s: &Strategy| -> Result<f64> {
        match config.variant {
            JointCce => approximation(g, s, SolutionConcept::Cce),
            PlayerOnOpi | OpponentOnPpe => approximation(g, s, SolutionConcept::Ne),
            ConstantSum => exploitability_sum(g, s, SolutionConcept::Ne),
        }
    };

    let mut columns = vec!["base".to_string(), "raw".to_string()];
    columns.extend(projected.iter().map(|m| format!("projected_{m}")));
    let mut report = ExperimentReport::new("orbit_benefit", config.seed, echo(config), &[]);
    report.columns = columns;
    let mut worst = vec![f64::INFINITY; projected.len()];
    let mut failures = vec![0usize; projected.len()];
    let mut sums = vec![0.0; projected.len() + 1];
    for (k, base) in bases.iter().enumerate() {
        let init = if config.zero_init {
            Init::Zeros
        } else {
            Init::Xavier {
                seed: config.seed.wrapping_add(k as u64),
            }
        };
        let raw = ApproximatorModel::new(
            shape.clone(),
            &ModelConfig {
                hidden: config.hidden.clone(),
                head,
                mode: raw_mode,
                init,
                ..ModelConfig::default()
            },
        )?;
        let raw_mean = orbit_mean(base, &group, &raw, metric)?;
        let mut row = vec![k as f64, raw_mean];
        sums[0] += raw_mean;
        for (p, &mode) in projected.iter().enumerate() {
            let m = raw.with_mode(mode)?;
            let mean = orbit_mean(base, &group, &m, metric)?;
            let slack = raw_mean - mean;
            worst[p] = worst[p].min(slack);
            if slack < -ORBIT_SLACK {
                failures[p] += 1;
            }
            sums[p + 1] += mean;
            row.push(mean);
        }
        report.rows.push(row);
    }
    let n = bases.len() as f64;
    let mut arm = Arm::new(raw_mode.name());
    arm.set("orbit_mean", sums[0] / n);
    report.arms.push(arm);
    for (p, mode) in projected.iter().enumerate() {
        let mut arm = Arm::new(&format!("projected_{mode}"));
        arm.set("orbit_mean", sums[p + 1] / n)
            .set("min_slack", worst[p])
            .set("failures", failures[p] as f64);
        report.arms.push(arm);
        report.verdict(
            &format!("projected_{mode}_never_worse"),
            failures[p] == 0,
            format!(
                "{} of {} base games violate; smallest slack {:e}",
                failures[p],
                bases.len(),
                worst[p]
            ),
        );
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Training applied to the plain comparison model.
    pub train: TrainConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            hidden: vec![16, 16],
            seed: 0,
            train: TrainConfig {
                iterations: 300,
                batch_size: 1,
                eval_every: 0,
                ..TrainConfig::default()
            },
        }
    }
}

fn product_values(arm: &mut Arm, prefix: &str, s: &ProductStrategy) {
    for (p, v) in s.players().iter().enumerate() {
        for (a, x) in v.iter().enumerate() {
            arm.set(&format!("{prefix}_{p}_{a}"), *x);
        }
    }
}

/// Shows that symmetric models can only output strategies fixed by every
/// symmetry `rho` of `game`, while a trained plain model is free to pick any
/// equilibrium.
pub fn exp_selection(game: &Game, rho: &GamePermutation, config: &SelectionConfig) -> Result<ExperimentReport> {
    if permute_game(game, rho)? != *game {
        return Err(Error::Precondition(
            "game is not invariant under the supplied permutation".into(),
        ));
    }
    let shape = game.shape().clone();
    let mut report = ExperimentReport::new(
        "selection",
        config.seed,
        echo(config),
        &["player", "action", "both", "general"],
    );
    let model_for = |head, mode| {
        ApproximatorModel::new(
            shape.clone(),
            &ModelConfig {
                hidden: config.hidden.clone(),
                head,
                mode,
                init: Init::Xavier { seed: config.seed },
                ..ModelConfig::default()
            },
        )
    };

    let both = model_for(HeadKind::Product, EquivarianceMode::Both)?.forward_product(game)?;
    let moved = permute_product(&both, rho)?;
    let dev = both
        .players()
        .iter()
        .zip(moved.players())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    report.verdict("both_output_is_fixed", dev <= 1e-9, format!("max |σ - ρσ| = {dev:e}"));

    let pe = model_for(HeadKind::Joint, EquivarianceMode::Pe)?.forward_joint(game)?;
    let moved = permute_joint(&pe, rho)?;
    let jdev = pe
        .probs()
        .iter()
        .zip(moved.probs())
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    report.verdict("pe_output_is_fixed", jdev <= 1e-9, format!("max |π - ρπ| = {jdev:e}"));

    if *game == named_game("identity2x2", &[])? {
        let uniform = ProductStrategy::uniform(&shape);
        let d = both.distance(&uniform);
        report.verdict(
            "identity_both_is_mixed_ne",
            d <= 1e-6,
            format!("L1 distance to uniform {d:e}"),
        );
    }

    let general = model_for(HeadKind::Product, EquivarianceMode::General)?;
    let cfg = TrainConfig {
        concept: SolutionConcept::Ne,
        seed: config.seed,
        ..config.train.clone()
    };
    let (general, _) = train(general, std::slice::from_ref(game), &cfg)?;
    let learned = general.forward_product(game)?;

    let mut arm = Arm::new("both");
    product_values(&mut arm, "sigma", &both);
    arm.set(
        "ne_approximation",
        approximation(game, &Strategy::Product(both.clone()), SolutionConcept::Ne)?,
    )
    .set("symmetry_dev", dev);
    report.arms.push(arm);
    let mut arm = Arm::new("pe");
    for (a, p) in pe.probs().iter().enumerate() {
        arm.set(&format!("pi_{a}"), *p);
    }
    arm.set(
        "cce_approximation",
        approximation(game, &Strategy::Joint(pe.clone()), SolutionConcept::Cce)?,
    )
    .set("symmetry_dev", jdev);
    report.arms.push(arm);
    let mut arm = Arm::new("general");
    product_values(&mut arm, "sigma", &learned);
    arm.set(
        "ne_approximation",
        approximation(game, &Strategy::Product(learned.clone()), SolutionConcept::Ne)?,
    );
    if game.num_players() == 2 && shape.action_counts().iter().all(|&m| m <= 8) {
        let equilibria = support_enumeration_bimatrix(game)?.equilibria;
        if let Some((idx, d)) = equilibria
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.distance(&learned)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        {
            arm.set("nearest_ne_index", idx as f64).set("nearest_ne_distance", d);
            let fixed = permute_product(&equilibria[idx], rho)?.distance(&equilibria[idx]) <= 1e-9;
            arm.set("nearest_ne_is_symmetric", if fixed { 1.0 } else { 0.0 });
        }
    }
    report.arms.push(arm);
    for p in 0..shape.num_players() {
        for a in 0..shape.actions(p) {
            report
                .rows
                .push(vec![p as f64, a as f64, both.player(p)[a], learned.player(p)[a]]);
        }
    }
    Ok(report)
}

/// Game whose actions are the cycles of each player's permutation in `rho`,
/// with merged actions mixed uniformly. Returns the game and the classes.
pub fn reduce_by_symmetry(game: &Game, rho: &GamePermutation) -> Result<(Game, Vec<Vec<Vec<usize>>>)> {
    rho.check_shape(game.shape())?;
    let shape = game.shape();
    let classes: Vec<Vec<Vec<usize>>> = (0..shape.num_players())
        .map(|p| match rho.get(p) {
            Some(r) => r.cycles(),
            None => (0..shape.actions(p)).map(|a| vec![a]).collect(),
        })
        .collect();
    let reduced = GameShape::new(classes.iter().map(Vec::len).collect())?;
    let payoffs = (0..shape.num_players())
        .map(|i| {
            (0..reduced.num_joint())
                .map(|c| {
                    let picks: Vec<&Vec<usize>> = reduced
                        .decode(c)
                        .iter()
                        .enumerate()
                        .map(|(p, &k)| &classes[p][k])
                        .collect();
                    let cells: usize = picks.iter().map(|v| v.len()).product();
                    let mut total = 0.0;
                    for flat in 0..cells {
                        let mut rem = flat;
                        let mut joint = vec![0; picks.len()];
                        for (p, class) in picks.iter().enumerate().rev() {
                            joint[p] = class[rem % class.len()];
                            rem /= class.len();
                        }
                        total += game.payoff(i, &joint);
                    }
                    total / cells as f64
                })
                .collect()
        })
        .collect();
    Ok((Game::new(reduced, payoffs)?, classes))
}

fn lift(reduced: &ProductStrategy, classes: &[Vec<Vec<usize>>], shape: &GameShape) -> Result<ProductStrategy> {
    let per_player = (0..shape.num_players())
        .map(|p| {
            let mut v = vec![0.0; shape.actions(p)];
            for (k, class) in classes[p].iter().enumerate() {
                for &a in class {
                    v[a] = reduced.player(p)[k] / class.len() as f64;
                }
            }
            v
        })
        .collect();
    ProductStrategy::new(per_player)
}

/// Welfare of the best equilibrium of `swr3x3(epsilon)` reachable under the
/// symmetry constraint of `mode`, divided by the best welfare overall.
pub fn exp_swr(epsilon: f64, mode: EquivarianceMode) -> Result<ExperimentReport> {
    let game = named_game("swr3x3", &[epsilon])?;
    let mut report = ExperimentReport::new(
        "swr",
        0,
        serde_json::json!({ "epsilon": epsilon, "mode": mode }),
        &["equilibrium", "welfare", "symmetric"],
    );
    let rho = GamePermutation::from_maps(vec![vec![1, 0, 2], vec![1, 0, 2]])?;
    let all = support_enumeration_bimatrix(&game)?;
    let welfare = |s: &ProductStrategy| social_welfare(&game, &Strategy::Product(s.clone()));
    let mut best = f64::NEG_INFINITY;
    for (k, s) in all.equilibria.iter().enumerate() {
        let w = welfare(s)?;
        best = best.max(w);
        let fixed = permute_product(s, &rho)?.distance(s) <= 1e-9;
        report.rows.push(vec![k as f64, w, if fixed { 1.0 } else { 0.0 }]);
    }
    let constrained = match mode {
        EquivarianceMode::General => best,
        EquivarianceMode::Both => {
            let (reduced, classes) = reduce_by_symmetry(&game, &rho)?;
            let mut top = f64::NEG_INFINITY;
            for s in support_enumeration_bimatrix(&reduced)?.equilibria {
                let full = lift(&s, &classes, game.shape())?;
                if approximation(&game, &Strategy::Product(full.clone()), SolutionConcept::Ne)? <= 1e-8 {
                    top = top.max(welfare(&full)?);
                }
            }
            top
        }
        other => {
            return Err(Error::invalid(format!(
                "the welfare ratio is computed for general and both models, not {other}"
            )))
        }
    };
    let ratio = constrained / best;
    let mut arm = Arm::new(mode.name());
    arm.set("best_welfare", best)
        .set("constrained_welfare", constrained)
        .set("ratio", ratio)
        .set("equilibria", all.equilibria.len() as f64);
    report.arms.push(arm);
    let expected = if mode == EquivarianceMode::General {
        1.0
    } else {
        epsilon
    };
    report.verdict(
        "ratio_matches",
        (ratio - expected).abs() <= 1e-6,
        format!("ratio {ratio} vs expected {expected}"),
    );

    // Secondary arm: what an untrained and a briefly trained symmetric model reach.
    if mode == EquivarianceMode::Both {
        let model = ApproximatorModel::new(
            game.shape().clone(),
            &ModelConfig {
                hidden: vec![16, 16],
                mode,
                ..ModelConfig::default()
            },
        )?;
        let cfg = TrainConfig {
            iterations: 200,
            batch_size: 1,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let (model, _) = train(model, std::slice::from_ref(&game), &cfg)?;
        let s = model.forward(&game)?;
        let mut arm = Arm::new("trained_both");
        arm.set("welfare", social_welfare(&game, &s)?)
            .set("ne_approximation", approximation(&game, &s, SolutionConcept::Ne)?);
        report.arms.push(arm);
    }
    Ok(report)
}

/// Mean social welfare of `strategy_of` over the orbit of the `n`-player,
/// `m`-action coordination game (one term per group element).
pub fn coordination_orbit_welfare(n: usize, m: usize, strategy_of: impl Fn(&Game) -> Result<Strategy>) -> Result<f64> {
    let base = named_game("coordination", &[n as f64, m as f64])?;
    let players: Vec<usize> = (0..n).collect();
    let group = enumerate_group(base.shape(), &players)?;
    let mut total = 0.0;
    for rho in &group {
        let g = permute_game(&base, rho)?;
        total += social_welfare(&g, &strategy_of(&g)?)?;
    }
    Ok(total / group.len() as f64)
}
