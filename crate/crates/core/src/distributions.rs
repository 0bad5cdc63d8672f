//! Game generators: i.i.d. uniform payoffs, permutation-orbit distributions
//! and the fixed constructions used by the experiments.
//!
//! Every generated game `k` draws from its own ChaCha20 stream (`seed`, `k`),
//! so samples are reproducible and can be produced in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::game::{enumerate_group, permute_game, random_game_permutation, Game, GameShape};

/// Identifier of the generator recorded alongside generated data.
pub const RNG_ALGORITHM: &str = "chacha20";

/// Names accepted by [`named_game`].
pub const NAMED_GAMES: &[&str] = &["identity2x2", "swr3x3", "pd2x2", "coordination", "matching_pennies"];

/// Games whose orbit is taken by [`DistributionKind::OrbitInvariant`].
#[derive(Clone, Debug, PartialEq)]
pub enum OrbitBase {
    /// A single fixed game.
    Fixed(Game),
    /// A fresh i.i.d. uniform game per sample.
    UniformIid,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistributionKind {
    /// Every payoff entry i.i.d. `U[0, 1]`.
    UniformIid,
    /// A base game pushed through an independent uniform permutation of every
    /// player's actions, which makes the distribution exactly permutation-invariant.
    OrbitInvariant(OrbitBase),
    /// Always the same named construction; see [`named_game`].
    Named { id: String, params: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub shape: GameShape,
    pub seed: u64,
}

impl DistributionSpec {
    pub fn uniform(shape: GameShape, seed: u64) -> Self {
        DistributionSpec {
            kind: DistributionKind::UniformIid,
            shape,
            seed,
        }
    }

    pub fn orbit_of(base: Game, seed: u64) -> Self {
        DistributionSpec {
            shape: base.shape().clone(),
            kind: DistributionKind::OrbitInvariant(OrbitBase::Fixed(base)),
            seed,
        }
    }

    pub fn orbit_uniform(shape: GameShape, seed: u64) -> Self {
        DistributionSpec {
            kind: DistributionKind::OrbitInvariant(OrbitBase::UniformIid),
            shape,
            seed,
        }
    }

    pub fn named(id: &str, params: Vec<f64>, seed: u64) -> Result<Self> {
        let g = named_game(id, &params)?;
        Ok(DistributionSpec {
            kind: DistributionKind::Named {
                id: id.to_string(),
                params,
            },
            shape: g.shape().clone(),
            seed,
        })
    }

    /// Whether the distribution is invariant under every game permutation.
    pub fn is_permutation_invariant(&self) -> bool {
        !matches!(self.kind, DistributionKind::Named { .. })
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            DistributionKind::OrbitInvariant(OrbitBase::Fixed(g)) => {
                self.shape.check_same(g.shape(), "orbit base game")
            }
            DistributionKind::Named { id, params } => {
                let g = named_game(id, params)?;
                self.shape.check_same(g.shape(), "named game")
            }
            _ => Ok(()),
        }
    }
}

fn stream_rng(seed: u64, k: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

pub(crate) fn uniform_game<R: Rng + ?Sized>(shape: &GameShape, rng: &mut R) -> Game {
    let payoffs = (0..shape.num_players())
        .map(|_| (0..shape.num_joint()).map(|_| rng.random::<f64>()).collect())
        .collect();
    Game::from_parts_unchecked(shape.clone(), payoffs)
}

/// Draws `count` games from `spec`; deterministic in `spec.seed`.
pub fn sample(spec: &DistributionSpec, count: usize) -> Result<Vec<Game>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    spec.validate()?;
    let named = match &spec.kind {
        DistributionKind::Named { id, params } => Some(named_game(id, params)?),
        _ => None,
    };
    (0..count)
        .map(|k| {
            let mut rng = stream_rng(spec.seed, k);
            match &spec.kind {
                DistributionKind::UniformIid => Ok(uniform_game(&spec.shape, &mut rng)),
                DistributionKind::OrbitInvariant(base) => {
                    let base = match base {
                        OrbitBase::Fixed(g) => g.clone(),
                        OrbitBase::UniformIid => uniform_game(&spec.shape, &mut rng),
                    };
                    let rho = random_game_permutation(&spec.shape, &mut rng);
                    permute_game(&base, &rho)
                }
                DistributionKind::Named { .. } => Ok(named.clone().expect("built above")),
            }
        })
        .collect()
}

/// Distinct games in the orbit of `base` under all action permutations,
/// in group-enumeration order.
pub fn orbit_support(base: &Game) -> Result<Vec<Game>> {
    let players: Vec<usize> = (0..base.num_players()).collect();
    let mut out: Vec<Game> = Vec::new();
    for rho in enumerate_group(base.shape(), &players)? {
        let g = permute_game(base, &rho)?;
        if !out.contains(&g) {
            out.push(g);
        }
    }
    Ok(out)
}

fn param(params: &[f64], i: usize, id: &str, what: &str) -> Result<f64> {
    params
        .get(i)
        .copied()
        .ok_or_else(|| Error::invalid(format!("{id} needs parameter {what}")))
}

fn epsilon(params: &[f64], id: &str) -> Result<f64> {
    let eps = param(params, 0, id, "epsilon")?;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(format!("{id}: epsilon must lie in (0, 0.5), got {eps}")));
    }
    Ok(eps)
}

fn count_param(params: &[f64], i: usize, id: &str, what: &str, min: usize) -> Result<usize> {
    let v = param(params, i, id, what)?;
    if v.fract() != 0.0 || v < min as f64 || v > 64.0 {
        return Err(Error::invalid(format!(
            "{id}: {what} must be an integer >= {min}, got {v}"
        )));
    }
    Ok(v as usize)
}

/// Named constructions:
///
/// * `identity2x2`: both players paid 1 on the diagonal.
/// * `swr3x3 [eps]`: 3x3 game whose best NE has welfare 2 while the only NE
///   fixed by swapping the first two actions of both players has welfare `2 eps`.
/// * `pd2x2 [eps]`: `swr3x3` with its first two actions merged.
/// * `coordination [N, M]`: everyone paid 1 iff all `N` players pick the same of `M` actions.
/// * `matching_pennies`
pub fn named_game(id: &str, params: &[f64]) -> Result<Game> {
    match id {
        "identity2x2" => {
            let id2 = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
            Game::bimatrix(&id2, &id2)
        }
        "swr3x3" => {
            let eps = epsilon(params, id)?;
            let h = 0.5 + eps;
            Game::bimatrix(
                &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![h, h, eps]],
                &[vec![1.0, 0.0, h], vec![0.0, 1.0, h], vec![0.0, 0.0, eps]],
            )
        }
        "pd2x2" => {
            let eps = epsilon(params, id)?;
            let h = 0.5 + eps;
            Game::bimatrix(&[vec![0.5, 0.0], vec![h, eps]], &[vec![0.5, h], vec![0.0, eps]])
        }
        "coordination" => {
            let n = count_param(params, 0, id, "N", 2)?;
            let m = count_param(params, 1, id, "M", 1)?;
            let shape = GameShape::new(vec![m; n])?;
            Game::from_fn(shape, |_, a| if a.iter().all(|&x| x == a[0]) { 1.0 } else { 0.0 })
        }
        "matching_pennies" => Game::bimatrix(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![0.0, 1.0], vec![1.0, 0.0]]),
        _ => Err(Error::Unknown {
            kind: "named game",
            name: id.to_string(),
        }),
    }
}
