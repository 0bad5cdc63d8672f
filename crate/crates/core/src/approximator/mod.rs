//! Equilibrium approximators: an MLP over the flattened payoffs followed by a
//! softmax head, optionally averaged over permuted copies of the input so
//! that the resulting map has the requested symmetry.

mod loss;
mod mlp;
mod orbit;
mod project;

pub use mlp::{Init, MlpParams};
pub use orbit::{EquivarianceMode, ORBIT_EVAL_LIMIT};
pub use project::{project_o, project_p, project_q};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    permute_game, permute_joint, permute_product, Game, GamePermutation, GameShape, JointStrategy, ProductStrategy,
    Strategy,
};
use crate::metrics::SolutionConcept;
use loss::{cce_loss, ne_loss, LossGrad};
use mlp::{softmax, softmax_backward, MlpCache};
use orbit::OrbitPlan;

/// Default permutations drawn per forward pass when the orbit is too large.
pub const DEFAULT_ORBIT_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// One softmax per player: a product strategy.
    Product,
    /// One softmax over joint actions: a correlated strategy.
    Joint,
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadKind::Product => "product",
            HeadKind::Joint => "joint",
        })
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "product" => Ok(HeadKind::Product),
            "joint" => Ok(HeadKind::Joint),
            _ => Err(Error::Unknown {
                kind: "head",
                name: s.to_string(),
            }),
        }
    }
}

impl HeadKind {
    /// Default head for training on `concept`.
    pub fn for_concept(concept: SolutionConcept) -> Self {
        match concept {
            SolutionConcept::Ne => HeadKind::Product,
            _ => HeadKind::Joint,
        }
    }
}

/// Rejects symmetry modes that do not apply to `head`.
pub fn check_head_mode(head: HeadKind, mode: EquivarianceMode) -> Result<()> {
    use EquivarianceMode::*;
    match (head, mode) {
        (_, General) | (HeadKind::Joint, Pe) | (HeadKind::Product, Opi | Ppe | Both) => Ok(()),
        _ => Err(Error::invalid(format!(
            "mode {mode} is not available with a {head} head"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub head: HeadKind,
    pub mode: EquivarianceMode,
    pub init: Init,
    pub orbit_samples: usize,
    pub orbit_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![64, 64],
            head: HeadKind::Product,
            mode: EquivarianceMode::General,
            init: Init::Xavier { seed: 0 },
            orbit_samples: DEFAULT_ORBIT_SAMPLES,
            orbit_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximatorModel {
    shape: GameShape,
    head: HeadKind,
    mode: EquivarianceMode,
    params: MlpParams,
    orbit_samples: usize,
    orbit_seed: u64,
    plan: OrbitPlan,
}

struct Evaluation {
    cache: MlpCache,
    /// Softmax output per head block.
    heads: Vec<Vec<f64>>,
}

impl ApproximatorModel {
    pub fn new(shape: GameShape, config: &ModelConfig) -> Result<Self> {
        let input = shape.num_players() * shape.num_joint();
        let output = match config.head {
            HeadKind::Product => shape.action_counts().iter().sum(),
            HeadKind::Joint => shape.num_joint(),
        };
        let params = MlpParams::new(input, &config.hidden, output, config.init)?;
        Self::from_params(
            shape,
            config.head,
            config.mode,
            params,
            config.orbit_samples,
            config.orbit_seed,
        )
    }

    pub fn from_params(
        shape: GameShape,
        head: HeadKind,
        mode: EquivarianceMode,
        params: MlpParams,
        orbit_samples: usize,
        orbit_seed: u64,
    ) -> Result<Self> {
        check_head_mode(head, mode)?;
        let input = shape.num_players() * shape.num_joint();
        let output = match head {
            HeadKind::Product => shape.action_counts().iter().sum(),
            HeadKind::Joint => shape.num_joint(),
        };
        if params.input_dim() != input || params.output_dim() != output {
            return Err(Error::dim(format!(
                "network maps {} -> {}, shape {shape} with a {head} head needs {input} -> {output}",
                params.input_dim(),
                params.output_dim()
            )));
        }
        let components = match head {
            HeadKind::Product => shape.num_players(),
            HeadKind::Joint => 1,
        };
        let plan = OrbitPlan::build(&shape, mode, components, orbit_samples, orbit_seed)?;
        Ok(ApproximatorModel {
            shape,
            head,
            mode,
            params,
            orbit_samples,
            orbit_seed,
            plan,
        })
    }

    /// The same network wrapped with a different symmetry.
    pub fn with_mode(&self, mode: EquivarianceMode) -> Result<Self> {
        Self::from_params(
            self.shape.clone(),
            self.head,
            mode,
            self.params.clone(),
            self.orbit_samples,
            self.orbit_seed,
        )
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn mode(&self) -> EquivarianceMode {
        self.mode
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut MlpParams {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn orbit_samples(&self) -> usize {
        self.orbit_samples
    }

    pub fn orbit_seed(&self) -> u64 {
        self.orbit_seed
    }

    /// False when the orbit average is estimated from sampled permutations,
    /// in which case the symmetry holds only approximately.
    pub fn is_exact(&self) -> bool {
        self.plan.exact
    }

    /// Base network evaluations per forward pass.
    pub fn evaluations_per_forward(&self) -> usize {
        self.plan.evals.len()
    }

    fn check_game(&self, game: &Game) -> Result<()> {
        self.shape.check_same(game.shape(), "game")
    }

    fn evaluate(&self, game: &Game, rho: &GamePermutation) -> Result<Evaluation> {
        let g = permute_game(game, rho)?;
        let (logits, cache) = self.params.forward(&g.flattened());
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("network produced a non-finite logit".into()));
        }
        let heads = match self.head {
            HeadKind::Joint => vec![softmax(&logits)],
            HeadKind::Product => {
                let mut off = 0;
                self.shape
                    .action_counts()
                    .iter()
                    .map(|&m| {
                        let s = softmax(&logits[off..off + m]);
                        off += m;
                        s
                    })
                    .collect()
            }
        };
        Ok(Evaluation { cache, heads })
    }

    fn evaluate_all(&self, game: &Game) -> Result<Vec<Evaluation>> {
        self.check_game(game)?;
        self.plan.evals.iter().map(|rho| self.evaluate(game, rho)).collect()
    }

    /// Averaged outputs, one block per component.
    fn combine(&self, evals: &[Evaluation]) -> Vec<Vec<f64>> {
        self.plan
            .contrib
            .iter()
            .enumerate()
            .map(|(c, list)| {
                let mut acc = vec![0.0; evals[0].heads[c].len()];
                for &(e, w) in list {
                    let inv = &self.plan.inverses[e];
                    let back = match self.head {
                        HeadKind::Product => inv.permute_player_vector(c, &evals[e].heads[c]),
                        HeadKind::Joint => inv.permute_tensor(&self.shape, &evals[e].heads[0]),
                    };
                    for (a, b) in acc.iter_mut().zip(back) {
                        *a += w * b;
                    }
                }
                acc
            })
            .collect()
    }

    fn to_strategy(&self, blocks: Vec<Vec<f64>>) -> Result<Strategy> {
        Ok(match self.head {
            HeadKind::Product => Strategy::Product(ProductStrategy::new(blocks)?),
            HeadKind::Joint => Strategy::Joint(JointStrategy::new(
                self.shape.clone(),
                blocks.into_iter().next().expect("one block"),
            )?),
        })
    }

    pub fn forward(&self, game: &Game) -> Result<Strategy> {
        let evals = self.evaluate_all(game)?;
        self.to_strategy(self.combine(&evals))
    }

    pub fn forward_product(&self, game: &Game) -> Result<ProductStrategy> {
        match self.forward(game)? {
            Strategy::Product(s) => Ok(s),
            Strategy::Joint(_) => Err(Error::Concept("model has a joint head".into())),
        }
    }

    pub fn forward_joint(&self, game: &Game) -> Result<JointStrategy> {
        match self.forward(game)? {
            Strategy::Joint(j) => Ok(j),
            Strategy::Product(_) => Err(Error::Concept("model has a product head".into())),
        }
    }

    /// Output of the underlying network with no orbit averaging.
    pub fn base_forward(&self, game: &Game) -> Result<Strategy> {
        self.check_game(game)?;
        let e = self.evaluate(game, &GamePermutation::identity(self.shape.num_players()))?;
        self.to_strategy(e.heads)
    }

    fn check_concept(&self, concept: SolutionConcept) -> Result<()> {
        match (concept, self.head) {
            (SolutionConcept::Ne, HeadKind::Product) | (SolutionConcept::Cce, HeadKind::Joint) => Ok(()),
            _ => Err(Error::Concept(format!(
                "cannot train a {} head on the {concept} loss",
                self.head
            ))),
        }
    }

    fn loss_terms(&self, game: &Game, concept: SolutionConcept) -> Result<(Vec<Evaluation>, LossGrad)> {
        self.check_concept(concept)?;
        let evals = self.evaluate_all(game)?;
        let blocks = self.combine(&evals);
        let lg = match self.head {
            HeadKind::Product => ne_loss(game, &ProductStrategy::from_raw(blocks)),
            HeadKind::Joint => cce_loss(
                game,
                &JointStrategy::from_raw(self.shape.clone(), blocks.into_iter().next().expect("one block")),
            ),
        };
        Ok((evals, lg))
    }

    /// Approximation loss on `game` and its gradient with respect to the
    /// network parameters. Only NE (product head) and CCE (joint head) are
    /// supported.
    pub fn loss_and_gradient(&self, game: &Game, concept: SolutionConcept) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.num_params()];
        let loss = self.accumulate_gradient(game, concept, 1.0, &mut grad)?;
        Ok((loss, grad))
    }

    /// Mean loss over `games` and its gradient.
    pub fn batch_loss_and_gradient(&self, games: &[&Game], concept: SolutionConcept) -> Result<(f64, Vec<f64>)> {
        if games.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let scale = 1.0 / games.len() as f64;
        let mut grad = vec![0.0; self.num_params()];
        let mut total = 0.0;
        for g in games {
            total += self.accumulate_gradient(g, concept, scale, &mut grad)?;
        }
        Ok((total * scale, grad))
    }

    fn accumulate_gradient(&self, game: &Game, concept: SolutionConcept, scale: f64, grad: &mut [f64]) -> Result<f64> {
        let (evals, lg) = self.loss_terms(game, concept)?;
        if !lg.loss.is_finite() {
            return Err(Error::Numeric(format!("loss is {}", lg.loss)));
        }
        // Push the strategy gradient back through the orbit average, then
        // through each softmax and the network.
        let mut dheads: Vec<Vec<Vec<f64>>> = evals
            .iter()
            .map(|e| e.heads.iter().map(|h| vec![0.0; h.len()]).collect())
            .collect();
        for (c, list) in self.plan.contrib.iter().enumerate() {
            for &(e, w) in list {
                let rho = &self.plan.evals[e];
                let (block, pulled) = match self.head {
                    HeadKind::Product => (c, rho.permute_player_vector(c, &lg.grad[c])),
                    HeadKind::Joint => (0, rho.permute_tensor(&self.shape, &lg.grad[0])),
                };
                for (d, p) in dheads[e][block].iter_mut().zip(pulled) {
                    *d += scale * w * p;
                }
            }
        }
        for (e, d) in evals.iter().zip(&dheads) {
            let dlogits: Vec<f64> = e
                .heads
                .iter()
                .zip(d)
                .flat_map(|(y, dy)| softmax_backward(y, dy))
                .collect();
            self.params.backward(&e.cache, &dlogits, grad);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok(lg.loss)
    }

    /// Distance from the nearest switch of the maximizing player or
    /// deviation; gradients are exact only where this is positive.
    pub fn argmax_margin(&self, game: &Game, concept: SolutionConcept) -> Result<f64> {
        Ok(self.loss_terms(game, concept)?.1.margin)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest violation of the defining equation of `mode` by `model` on `game`
/// under `rho` (0 for `General`, which imposes nothing).
pub fn check_equivariance(
    model: &ApproximatorModel,
    game: &Game,
    rho: &GamePermutation,
    mode: EquivarianceMode,
) -> Result<f64> {
    rho.check_shape(game.shape())?;
    let n = game.num_players();
    let product_only = || -> Result<ProductStrategy> {
        match model.head {
            HeadKind::Product => model.forward_product(game),
            HeadKind::Joint => Err(Error::invalid(format!("{mode} is defined for product outputs"))),
        }
    };
    let opi = |base: &ProductStrategy| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let moved = model.forward_product(&permute_game(game, &rho.without(j))?)?;
            worst = worst.max(max_abs_diff(moved.player(j), base.player(j)));
        }
        Ok(worst)
    };
    let ppe = |base: &ProductStrategy| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let single = rho.component(j);
            let moved = model.forward_product(&permute_game(game, &single)?)?;
            let expected = permute_product(base, &single)?;
            worst = worst.max(max_abs_diff(moved.player(j), expected.player(j)));
        }
        Ok(worst)
    };
    match mode {
        EquivarianceMode::General => Ok(0.0),
        EquivarianceMode::Opi => opi(&product_only()?),
        EquivarianceMode::Ppe => ppe(&product_only()?),
        EquivarianceMode::Both => {
            let base = product_only()?;
            Ok(opi(&base)?.max(ppe(&base)?))
        }
        EquivarianceMode::Pe => {
            let HeadKind::Joint = model.head else {
                return Err(Error::invalid("pe is defined for joint outputs"));
            };
            let base = model.forward_joint(game)?;
            let moved = model.forward_joint(&permute_game(game, rho)?)?;
            Ok(max_abs_diff(moved.probs(), permute_joint(&base, rho)?.probs()))
        }
    }
}

#[cfg(test)]
mod tests;
