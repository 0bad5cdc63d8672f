//! File formats: game documents, model checkpoints and run configuration.
//!
//! A game document looks like
//!
//! ```json
//! {"version": 1, "num_players": 2, "action_counts": [2, 2],
//!  "payoffs": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]]}
//! ```
//!
//! with one nested array per player, indexed by player 0's action outermost.
//! Floats are written in shortest round-trip form, so save then load is exact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::approximator::{
    check_head_mode, ApproximatorModel, EquivarianceMode, HeadKind, Init, MlpParams, ModelConfig,
};
use crate::distributions::{named_game, DistributionSpec, RNG_ALGORITHM};
use crate::error::{Error, Result};
use crate::experiments::OrbitBenefitVariant;
use crate::game::{Game, GameShape};
use crate::metrics::SolutionConcept;
use crate::training::TrainConfig;

pub const FORMAT_VERSION: u64 = 1;

fn parse_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{path}: {msg}"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| parse_err(path, format!("missing field `{key}`")))
}

fn as_count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(path, "expected a non-negative integer"))
}

fn check_version(obj: &Map<String, Value>, path: &str) -> Result<()> {
    let v = field(obj, "version", path)?;
    match v.as_u64() {
        Some(FORMAT_VERSION) => Ok(()),
        _ => Err(parse_err(
            &format!("{path}.version"),
            format!("unsupported version {v}, expected {FORMAT_VERSION}"),
        )),
    }
}

fn nest(values: &[f64], counts: &[usize]) -> Value {
    match counts {
        [] => json!(values[0]),
        [m, rest @ ..] => {
            let block = values.len() / m;
            Value::Array(
                (0..*m)
                    .map(|a| nest(&values[a * block..(a + 1) * block], rest))
                    .collect(),
            )
        }
    }
}

fn flatten_into(v: &Value, counts: &[usize], path: &str, out: &mut Vec<f64>) -> Result<()> {
    match counts {
        [] => {
            let x = v.as_f64().ok_or_else(|| parse_err(path, "expected a number"))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(parse_err(path, format!("payoff {x} is outside [0, 1]")));
            }
            out.push(x);
            Ok(())
        }
        [m, rest @ ..] => {
            let items = v.as_array().ok_or_else(|| parse_err(path, "expected an array"))?;
            if items.len() != *m {
                return Err(parse_err(path, format!("expected {m} entries, found {}", items.len())));
            }
            for (a, item) in items.iter().enumerate() {
                flatten_into(item, rest, &format!("{path}[{a}]"), out)?;
            }
            Ok(())
        }
    }
}

pub fn game_to_value(game: &Game) -> Value {
    let counts = game.shape().action_counts();
    json!({
        "version": FORMAT_VERSION,
        "num_players": game.num_players(),
        "action_counts": counts,
        "payoffs": (0..game.num_players()).map(|p| nest(game.payoffs(p), counts)).collect::<Vec<_>>(),
    })
}

/// Reads a game document; `path` prefixes error locations.
pub fn game_from_value(v: &Value, path: &str) -> Result<Game> {
    let obj = v.as_object().ok_or_else(|| parse_err(path, "expected an object"))?;
    check_version(obj, path)?;
    let n = as_count(field(obj, "num_players", path)?, &format!("{path}.num_players"))?;
    let counts_path = format!("{path}.action_counts");
    let counts = field(obj, "action_counts", path)?
        .as_array()
        .ok_or_else(|| parse_err(&counts_path, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, c)| as_count(c, &format!("{counts_path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if counts.len() != n {
        return Err(parse_err(
            &counts_path,
            format!("{} entries for {n} players", counts.len()),
        ));
    }
    let shape = GameShape::new(counts.clone()).map_err(|e| parse_err(&counts_path, e))?;
    let pay_path = format!("{path}.payoffs");
    let per_player = field(obj, "payoffs", path)?
        .as_array()
        .ok_or_else(|| parse_err(&pay_path, "expected an array"))?;
    if per_player.len() != n {
        return Err(parse_err(
            &pay_path,
            format!("expected {n} tensors, found {}", per_player.len()),
        ));
    }
    let payoffs = per_player
        .iter()
        .enumerate()
        .map(|(p, t)| {
            let mut flat = Vec::with_capacity(shape.num_joint());
            flatten_into(t, &counts, &format!("{pay_path}[{p}]"), &mut flat)?;
            Ok(flat)
        })
        .collect::<Result<Vec<_>>>()?;
    Game::new(shape, payoffs)
}

fn parse_json(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{origin}: line {} column {}: {e}", e.line(), e.column())))
}

pub fn parse_game(text: &str) -> Result<Game> {
    game_from_value(&parse_json(text, "game")?, "$")
}

pub fn game_to_string(game: &Game) -> String {
    serde_json::to_string_pretty(&game_to_value(game)).expect("game documents serialize") + "\n"
}

pub fn save_game(path: &Path, game: &Game) -> Result<()> {
    std::fs::write(path, game_to_string(game))?;
    Ok(())
}

pub fn load_game(path: &Path) -> Result<Game> {
    let text = std::fs::read_to_string(path)?;
    game_from_value(&parse_json(&text, &path.display().to_string())?, "$")
}

/// Writes several games to one document, together with free-form metadata.
pub fn save_games(path: &Path, games: &[Game], meta: Value) -> Result<()> {
    let doc = json!({
        "version": FORMAT_VERSION,
        "rng": RNG_ALGORITHM,
        "meta": meta,
        "games": games.iter().map(game_to_value).collect::<Vec<_>>(),
    });
    std::fs::write(
        path,
        serde_json::to_string_pretty(&doc).expect("game sets serialize") + "\n",
    )?;
    Ok(())
}

/// Loads a game set, a single game document, or every `.json` file of a
/// directory in name order.
pub fn load_games(path: &Path) -> Result<Vec<Game>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|f| f.extension().is_some_and(|x| x == "json"));
        files.sort();
        let mut out = Vec::new();
        for f in files {
            out.extend(load_games(&f)?);
        }
        return Ok(out);
    }
    let text = std::fs::read_to_string(path)?;
    let v = parse_json(&text, &path.display().to_string())?;
    match v.get("games") {
        Some(list) => {
            let obj = v.as_object().expect("has a field");
            check_version(obj, "$")?;
            list.as_array()
                .ok_or_else(|| parse_err("$.games", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(k, g)| game_from_value(g, &format!("$.games[{k}]")))
                .collect()
        }
        None => Ok(vec![game_from_value(&v, "$")?]),
    }
}

/// Everything needed to rebuild an [`ApproximatorModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u64,
    pub shape: GameShape,
    pub head: HeadKind,
    pub mode: EquivarianceMode,
    pub hidden: Vec<usize>,
    pub orbit_samples: usize,
    pub orbit_seed: u64,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model(model: &ApproximatorModel) -> Self {
        Checkpoint {
            version: FORMAT_VERSION,
            shape: model.shape().clone(),
            head: model.head(),
            mode: model.mode(),
            hidden: model.params().hidden().to_vec(),
            orbit_samples: model.orbit_samples(),
            orbit_seed: model.orbit_seed(),
            params: model.params().as_slice().to_vec(),
        }
    }

    pub fn into_model(self) -> Result<ApproximatorModel> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported checkpoint version {}", self.version)));
        }
        let input = self.shape.num_players() * self.shape.num_joint();
        let output = match self.head {
            HeadKind::Product => self.shape.action_counts().iter().sum(),
            HeadKind::Joint => self.shape.num_joint(),
        };
        let mut sizes = vec![input];
        sizes.extend(&self.hidden);
        sizes.push(output);
        let params = MlpParams::from_flat(sizes, self.params)?;
        ApproximatorModel::from_params(
            self.shape,
            self.head,
            self.mode,
            params,
            self.orbit_samples,
            self.orbit_seed,
        )
    }
}

pub fn save_checkpoint(path: &Path, model: &ApproximatorModel) -> Result<()> {
    let text = serde_json::to_string(&Checkpoint::from_model(model)).expect("checkpoints serialize");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ApproximatorModel> {
    let text = std::fs::read_to_string(path)?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| {
        Error::Parse(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    ck.into_model()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKindName {
    Uniform,
    /// Uniform base game pushed through a random permutation.
    OrbitUniform,
    /// A named game pushed through a random permutation.
    Orbit,
    Named,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    pub kind: DistributionKindName,
    /// Required for `uniform` and `orbit_uniform`.
    #[serde(default)]
    pub shape: Option<GameShape>,
    /// Named game id for `orbit` and `named`.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Training set size.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Held-out set size; 0 disables held-out evaluation.
    #[serde(default)]
    pub test_count: usize,
}

fn default_count() -> usize {
    500
}

impl DistributionConfig {
    pub fn to_spec(&self, seed: u64) -> Result<DistributionSpec> {
        let need_shape = || {
            self.shape
                .clone()
                .ok_or_else(|| Error::invalid("distribution.shape is required for this kind"))
        };
        let need_id = || {
            self.id
                .as_deref()
                .ok_or_else(|| Error::invalid("distribution.id is required for this kind"))
        };
        match self.kind {
            DistributionKindName::Uniform => Ok(DistributionSpec::uniform(need_shape()?, seed)),
            DistributionKindName::OrbitUniform => Ok(DistributionSpec::orbit_uniform(need_shape()?, seed)),
            DistributionKindName::Orbit => Ok(DistributionSpec::orbit_of(named_game(need_id()?, &self.params)?, seed)),
            DistributionKindName::Named => DistributionSpec::named(need_id()?, self.params.clone(), seed),
        }
    }
}

/// Which scripted experiment `run` executes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Generalization {
        shape: GameShape,
        train_size: usize,
        test_size: usize,
        seeds: Vec<u64>,
        #[serde(default = "default_concept")]
        concept: SolutionConcept,
    },
    OrbitBenefit {
        variant: OrbitBenefitVariant,
        shape: GameShape,
        count: usize,
        #[serde(default)]
        zero_init: bool,
    },
    Selection {
        game: String,
        #[serde(default)]
        params: Vec<f64>,
        /// One action map per player; defaults to swapping actions 0 and 1.
        #[serde(default)]
        rho: Option<Vec<Vec<usize>>>,
    },
    Swr {
        eps: Vec<f64>,
        #[serde(default = "default_swr_mode")]
        mode: EquivarianceMode,
    },
}

fn default_concept() -> SolutionConcept {
    SolutionConcept::Ne
}

fn default_swr_mode() -> EquivarianceMode {
    EquivarianceMode::Both
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub distribution: Option<DistributionConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
                .map_err(|e| Error::Parse(format!("config: line {} column {}: {e}", e.line(), e.column())))?
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked before a run starts.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        check_head_mode(self.model.head, self.model.mode)?;
        if HeadKind::for_concept(self.train.concept) != self.model.head {
            return Err(Error::Concept(format!(
                "training for {} needs a {} head, config has {}",
                self.train.concept,
                HeadKind::for_concept(self.train.concept),
                self.model.head
            )));
        }
        if self.model.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        if let Some(d) = &self.distribution {
            d.to_spec(self.seed)?;
            if d.count == 0 {
                return Err(Error::invalid("distribution.count must be at least 1"));
            }
        }
        if let Some(ExperimentConfig::Swr { eps, .. }) = &self.experiment {
            if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 0.5)) {
                return Err(Error::invalid(format!("swr epsilon {e} is outside (0, 0.5)")));
            }
        }
        Ok(())
    }

    /// Replaces every seed in the configuration.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        if let Init::Xavier { seed: s } = &mut self.model.init {
            *s = seed;
        }
    }
}
